"""Sparse toric-code codewords and bath-coupling matrix elements.

A syndrome sector m lists the eigenvalue (+1 or -1) of every star and every
plaquette operator.  The logical label l = (l1, l2) lists the eigenvalues of
s_1^z and s_2^z.  Each codeword |l, m> is the uniform superposition, weighted
by the star characters, over the orbit of a reference configuration under the
group generated by the star operators; it is stored as sorted basis
configurations (bit r = edge r) with amplitudes.
"""

from dataclasses import dataclass
import itertools

import numpy as np

from ..spin_coherent import BlochPoint, coherent_state_vector
from .lattice import build_logicals
from .pauli import PauliString, gf2_solve

LOGICAL_LABELS = ((1, 1), (1, -1), (-1, 1), (-1, -1))


def logical_index(l):
    return LOGICAL_LABELS.index(tuple(int(v) for v in l))


@dataclass(frozen=True)
class Sector:
    stars: tuple
    plaquettes: tuple

    def __post_init__(self):
        stars = tuple(int(v) for v in self.stars)
        plaqs = tuple(int(v) for v in self.plaquettes)
        if any(v not in (1, -1) for v in stars + plaqs):
            raise ValueError("syndrome entries must be +1 or -1")
        if np.prod(stars) != 1 or np.prod(plaqs) != 1:
            raise ValueError("syndrome violates prod A_s = 1 or prod B_p = 1")
        object.__setattr__(self, "stars", stars)
        object.__setattr__(self, "plaquettes", plaqs)

    @classmethod
    def ground(cls, lat):
        return cls((1,) * lat.n_vertices, (1,) * lat.n_vertices)

    def flipped(self, stars=(), plaquettes=()):
        s = list(self.stars)
        p = list(self.plaquettes)
        for v in stars:
            s[v] = -s[v]
        for v in plaquettes:
            p[v] = -p[v]
        return Sector(tuple(s), tuple(p))

    def label(self):
        enc = lambda vals: "".join("+" if v > 0 else "-" for v in vals)
        return f"{enc(self.stars)}|{enc(self.plaquettes)}"

    def differences(self, other):
        """(stars, plaquettes) index lists where the two sectors disagree."""
        ds = [i for i, (a, b) in enumerate(zip(self.stars, other.stars)) if a != b]
        dp = [i for i, (a, b) in enumerate(zip(self.plaquettes, other.plaquettes)) if a != b]
        return ds, dp


def all_sectors(lat):
    """Every consistent sector (4**(NM-1) of them)."""
    nm = lat.n_vertices
    for s_bits in itertools.product((1, -1), repeat=nm - 1):
        for p_bits in itertools.product((1, -1), repeat=nm - 1):
            yield Sector(s_bits + (int(np.prod(s_bits)),), p_bits + (int(np.prod(p_bits)),))


@dataclass(frozen=True)
class SparseState:
    """Sorted basis configurations with complex amplitudes."""

    n: int
    configs: np.ndarray
    amps: np.ndarray

    @classmethod
    def build(cls, n, configs, amps):
        configs = np.asarray(configs, dtype=np.uint64)
        amps = np.asarray(amps, dtype=complex)
        order = np.argsort(configs, kind="stable")
        return cls(n, configs[order], amps[order])

    def apply(self, op: PauliString):
        c, a = op.apply(self.configs, self.amps)
        return SparseState.build(self.n, c, a)

    def inner(self, other):
        """<self|other>."""
        pos = np.searchsorted(self.configs, other.configs)
        pos = np.clip(pos, 0, max(self.configs.size - 1, 0))
        hit = self.configs[pos] == other.configs
        return complex(np.sum(np.conj(self.amps[pos[hit]]) * other.amps[hit]))

    def expectation(self, op: PauliString):
        return self.inner(self.apply(op))

    def norm(self):
        return float(np.sqrt(np.sum(np.abs(self.amps) ** 2)))

    def to_dense(self):
        vec = np.zeros(2 ** self.n, dtype=complex)
        vec[self.configs.astype(np.int64)] = self.amps
        return vec

    def scaled(self, factor):
        return SparseState(self.n, self.configs, self.amps * factor)


def reference_configuration(lat, sector, l):
    """A basis configuration with the plaquette and logical-Z parities of (l, m)."""
    logicals = build_logicals(lat)
    rows = [op.z for op in lat.plaquette_operators] + [logicals["s1z"].z, logicals["s2z"].z]
    rhs = [(1 - v) // 2 for v in sector.plaquettes] + [(1 - l[0]) // 2, (1 - l[1]) // 2]
    b0 = gf2_solve(rows, rhs, lat.n_edges)
    if b0 is None:
        raise ValueError("inconsistent plaquette syndrome")
    return b0


def codeword(lat, sector, l):
    """|l, m> as a SparseState with amplitudes of magnitude 2**(-(NM-1)/2)."""
    nm = lat.n_vertices
    b0 = reference_configuration(lat, sector, l)
    gens = [op.x for op in lat.star_operators[:nm - 1]]
    chars = sector.stars[:nm - 1]
    n_el = 1 << (nm - 1)
    configs = np.full(n_el, b0, dtype=np.uint64)
    amps = np.ones(n_el, dtype=complex)
    idx = np.arange(n_el)
    for k, (g, a) in enumerate(zip(gens, chars)):
        sel = (idx >> k) & 1 == 1
        configs[sel] ^= np.uint64(g)
        if a < 0:
            amps[sel] *= -1
    amps /= np.sqrt(n_el)
    return SparseState.build(lat.n_edges, configs, amps)


@dataclass(frozen=True)
class CodeBasis:
    lattice: object
    sector: Sector
    codewords: tuple

    def state(self, l):
        return self.codewords[logical_index(l)]

    def gram(self):
        return np.array([[a.inner(b) for b in self.codewords] for a in self.codewords])

    def operator_matrix(self, op):
        """M[a, b] = <l_a| op |l_b> for a PauliString or a list of them (summed)."""
        ops = [op] if isinstance(op, PauliString) else list(op)
        out = np.zeros((4, 4), dtype=complex)
        for o in ops:
            images = [cw.apply(o) for cw in self.codewords]
            for a, bra in enumerate(self.codewords):
                for b, img in enumerate(images):
                    out[a, b] += bra.inner(img)
        return out


def codeword_basis(lat, sector=None):
    sector = Sector.ground(lat) if sector is None else sector
    if len(sector.stars) != lat.n_vertices:
        raise ValueError("sector size does not match the lattice")
    return CodeBasis(lat, sector, tuple(codeword(lat, sector, l) for l in LOGICAL_LABELS))


def coupling_operators(lat, edges=None):
    """sigma^z on each selected edge (all edges by default)."""
    edges = range(lat.n_edges) if edges is None else ([edges] if np.isscalar(edges) else edges)
    return [PauliString.single(lat.n_edges, "Z", int(r)) for r in edges]


def q_matrix_element(basis, l, l_prime, edges=None):
    """<l', m| sum_r sigma_r^z |l, m> within the basis sector."""
    ops = coupling_operators(basis.lattice, edges)
    ket = basis.state(l)
    bra = basis.state(l_prime)
    return sum(bra.inner(ket.apply(o)) for o in ops)


def q_matrix(basis, edges=None):
    """4x4 matrix Q[l', l] = <l', m| sum sigma^z |l, m> in LOGICAL_LABELS order."""
    return basis.operator_matrix(coupling_operators(basis.lattice, edges))


def q_model_matrix_element(lat, left, right, edges=None):
    """<l', m'| sum_r sigma_r^z |l, m> with left = (l, m) and right = (l', m').

    ``edges`` restricts the sum (a single int gives the single-edge element).
    """
    (l, m), (lp, mp) = left, right
    ket = codeword(lat, m, l)
    bra = codeword(lat, mp, lp)
    return sum(bra.inner(ket.apply(o)) for o in coupling_operators(lat, edges))


def selection_rule_edges(lat, m, m_prime):
    """Edges r whose sigma^z maps sector m to m_prime (empty if none)."""
    ds, dp = m.differences(m_prime)
    if dp or len(ds) != 2:
        return []
    return [r for r in range(lat.n_edges) if sorted(lat.edge_endpoints(r)) == sorted(ds)]


def logical_coherent_vector(points):
    """Product coherent state of the two logical qubits in LOGICAL_LABELS order."""
    a, b = (coherent_state_vector(p) for p in points)
    return np.kron(a, b)


def q_coherent_transform(q, angles_f, angles_b):
    """(Q^F, Q^B) = (<f|Q|f>, <b|Q|b>) for product logical coherent states.

    ``q`` is a CodeBasis (its sector Q matrix is used) or a 4x4 matrix with
    q[l', l] = <l'|O|l>; ``angles_f``/``angles_b`` are pairs of BlochPoints.
    """
    mat = q_matrix(q) if isinstance(q, CodeBasis) else np.asarray(q, dtype=complex)
    out = []
    for pts in (angles_f, angles_b):
        v = logical_coherent_vector(pts)
        out.append(complex(np.conj(v) @ mat @ v))
    return tuple(out)


def random_bloch_points(rng, count):
    cos_t = rng.uniform(-1.0, 1.0, count)
    phi = rng.uniform(0.0, 2 * np.pi, count)
    return [BlochPoint(float(np.arccos(c)), float(p)) for c, p in zip(cos_t, phi)]


def fv_kitaev_estimate(q, sd, duration, rng, n_samples=256):
    """eta * mean|Q^F|^2 * duration over random product logical coherent states."""
    mat = q_matrix(q) if isinstance(q, CodeBasis) else np.asarray(q, dtype=complex)
    if sd.eta == 0:
        return 0.0
    pts = random_bloch_points(rng, 2 * n_samples)
    vals = [abs(q_coherent_transform(mat, pts[2 * i:2 * i + 2], pts[2 * i:2 * i + 2])[0]) ** 2
            for i in range(n_samples)]
    return float(sd.eta * np.mean(vals) * duration)


def q_model_matrix(lat, m, m_prime, edges=None):
    """4x4 matrix Q[l', l] = <l', m'| sum sigma^z |l, m>."""
    out = np.zeros((4, 4), dtype=complex)
    for a, lp in enumerate(LOGICAL_LABELS):
        for b, l in enumerate(LOGICAL_LABELS):
            out[a, b] = q_model_matrix_element(lat, (l, m), (lp, m_prime), edges)
    return out
