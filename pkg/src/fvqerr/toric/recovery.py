"""Syndrome records, shortest-path recovery and the Knill-Laflamme test."""

from dataclasses import dataclass, field
import json

import numpy as np

from .code import LOGICAL_LABELS, Sector, SparseState, codeword_basis
from .lattice import TorusLattice, build_stabilizers
from .pauli import PauliString


@dataclass
class SyndromeRecord:
    """Time-stamped full syndromes (star eigenvalues then plaquette eigenvalues)."""

    times: list = field(default_factory=list)
    syndromes: list = field(default_factory=list)

    def append(self, t, sector):
        if self.times and t < self.times[-1]:
            raise ValueError("syndrome records must be time ordered")
        self.times.append(float(t))
        self.syndromes.append(sector)

    def changes(self, k):
        """Stabilizers that differ between record k-1 and record k."""
        return self.syndromes[k - 1].differences(self.syndromes[k])

    def to_json(self):
        return json.dumps({"times": self.times,
                           "syndromes": [{"stars": list(s.stars), "plaquettes": list(s.plaquettes)}
                                         for s in self.syndromes]}, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(list(d["times"]), [Sector(s["stars"], s["plaquettes"]) for s in d["syndromes"]])


def measure_syndrome(lat, state: SparseState, tol=1e-9):
    """Stabilizer eigenvalues of a state that is a joint eigenstate."""
    vals = []
    norm2 = state.norm() ** 2
    for op in build_stabilizers(lat):
        ev = state.expectation(op).real / norm2
        if abs(abs(ev) - 1) > tol:
            raise ValueError("state is not a stabilizer eigenstate")
        vals.append(1 if ev > 0 else -1)
    nm = lat.n_vertices
    return Sector(tuple(vals[:nm]), tuple(vals[nm:]))


def _torus_step(delta, size):
    """Signed shortest displacement and whether the opposite way is equally short."""
    d = delta % size
    if 2 * d > size:
        return d - size, False
    return d, d != 0 and 2 * d == size


def _vertex_path(lat, v1, v2):
    """Edges of a shortest primal path v1 -> v2 (x first, then y) and an ambiguity flag."""
    (x1, y1), (x2, y2) = lat.coords(v1), lat.coords(v2)
    dx, ax = _torus_step(x2 - x1, lat.N)
    dy, ay = _torus_step(y2 - y1, lat.M)
    edges = []
    x, y = x1, y1
    for _ in range(abs(dx)):
        if dx > 0:
            edges.append(lat.h(x, y))
            x += 1
        else:
            edges.append(lat.h(x - 1, y))
            x -= 1
    for _ in range(abs(dy)):
        if dy > 0:
            edges.append(lat.e(x, y))
            y += 1
        else:
            edges.append(lat.e(x, y - 1))
            y -= 1
    return edges, ax or ay


def _plaquette_path(lat, p1, p2):
    """Edges crossed by a shortest dual path p1 -> p2 and an ambiguity flag."""
    (x1, y1), (x2, y2) = lat.coords(p1), lat.coords(p2)
    dx, ax = _torus_step(x2 - x1, lat.N)
    dy, ay = _torus_step(y2 - y1, lat.M)
    edges = []
    x, y = x1, y1
    for _ in range(abs(dx)):
        if dx > 0:
            edges.append(lat.e(x + 1, y))
            x += 1
        else:
            edges.append(lat.e(x, y))
            x -= 1
    for _ in range(abs(dy)):
        if dy > 0:
            edges.append(lat.h(x, y + 1))
            y += 1
        else:
            edges.append(lat.h(x, y))
            y -= 1
    return edges, ax or ay


def _pair_defects(defects, path_fn, lat):
    """Pair defects greedily by shortest torus distance; returns (edges, ambiguous)."""
    defects = sorted(defects)
    edges = []
    ambiguous = False
    while defects:
        a = defects.pop(0)
        best = min(defects, key=lambda b: (len(path_fn(lat, a, b)[0]), b))
        defects.remove(best)
        path, amb = path_fn(lat, a, best)
        edges.extend(path)
        ambiguous |= amb
    return edges, ambiguous


@dataclass(frozen=True)
class RecoveryReport:
    status: str
    star_defects: tuple
    plaquette_defects: tuple
    correction: PauliString


def recovery_map(lat, state, record: SyndromeRecord, reference=None):
    """Measure, pair defects along shortest torus paths, apply the correction.

    The reference syndrome is the last entry of ``record`` (ground sector if
    the record is empty); the new measurement is appended.  Status is 'ok'
    for a unique minimal correction with at most one defect pair of each kind,
    'ambiguous' when a defect pair has two shortest paths of equal length (the
    canonical one is applied), 'no-error' when nothing flipped, and
    'correction-failed' for more than two defects of a kind.
    """
    if reference is None:
        reference = record.syndromes[-1] if record.syndromes else Sector.ground(lat)
    measured = measure_syndrome(lat, state)
    t_next = record.times[-1] + 1.0 if record.times else 0.0
    record.append(t_next, measured)
    ds, dp = reference.differences(measured)
    if len(ds) % 2 or len(dp) % 2:
        raise ValueError("defects must come in pairs")
    if not ds and not dp:
        return state, RecoveryReport("no-error", (), (), PauliString.identity(lat.n_edges))
    z_edges, amb_z = _pair_defects(ds, _vertex_path, lat)
    x_edges, amb_x = _pair_defects(dp, _plaquette_path, lat)
    corr = PauliString.from_edges(lat.n_edges, "Z", z_edges) * \
        PauliString.from_edges(lat.n_edges, "X", x_edges)
    if len(ds) > 2 or len(dp) > 2:
        status = "correction-failed"
    elif amb_z or amb_x:
        status = "ambiguous"
    else:
        status = "ok"
    return state.apply(corr), RecoveryReport(status, tuple(ds), tuple(dp), corr)


def fidelity(a: SparseState, b: SparseState):
    return abs(a.inner(b)) ** 2 / (a.norm() ** 2 * b.norm() ** 2)


def single_qubit_errors(lat, include_identity=True):
    n = lat.n_edges
    errs = [PauliString.identity(n)] if include_identity else []
    for r in range(n):
        for kind in "XYZ":
            errs.append(PauliString.single(n, kind, r))
    return errs


def recovery_sweep(lat, errors=None, sector=None):
    """Worst fidelity of recovery over every error and every codeword of a sector.

    Returns (min fidelity, list of (error label, logical label, fidelity, status)).
    """
    basis = codeword_basis(lat, sector)
    errors = single_qubit_errors(lat) if errors is None else errors
    rows = []
    for err in errors:
        for l, cw in zip(LOGICAL_LABELS, basis.codewords):
            record = SyndromeRecord()
            record.append(0.0, basis.sector)
            out, rep = recovery_map(lat, cw.apply(err), record)
            rows.append((err.label(), l, fidelity(out, cw), rep.status))
    return min(r[2] for r in rows), rows


@dataclass(frozen=True)
class KLResult:
    passed: bool
    witness: tuple = None
    coefficients: np.ndarray = None


def knill_laflamme_check(lat, errors, sector=None, tol=1e-10):
    """Test P A_j^dagger A_k P = c_jk P on the code space of a sector.

    Pairs are visited with j ascending and k <= j; the first violating pair is
    returned as the witness (A_j, A_k).
    """
    basis = codeword_basis(lat, sector)
    n = len(errors)
    c = np.zeros((n, n), dtype=complex)
    for j in range(n):
        for k in range(j + 1):
            prod = errors[j].dagger() * errors[k]
            mat = basis.operator_matrix(prod)
            cjk = mat[0, 0]
            if np.max(np.abs(mat - cjk * np.eye(4))) > tol:
                return KLResult(False, (errors[j], errors[k]), None)
            c[j, k] = cjk
            c[k, j] = np.conj(cjk)
    return KLResult(True, None, c)


def lattice_to_json(lat):
    return json.dumps(lat.to_dict(), sort_keys=True)


def lattice_from_json(text):
    return TorusLattice.from_dict(json.loads(text))


def write_q_table(path, rows):
    """Rows of (sector label, l, l_prime, complex value) to CSV."""
    from .._csv import write_csv
    write_csv(path, ["sector", "l", "l_prime", "re", "im"],
              [(s, "".join("+" if v > 0 else "-" for v in l),
                "".join("+" if v > 0 else "-" for v in lp), complex(q).real, complex(q).imag)
               for s, l, lp, q in rows])
