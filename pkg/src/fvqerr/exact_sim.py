"""Exact dynamics of qubits linearly coupled to truncated harmonic modes.

Joint-space ordering: the n qubits first (qubit 0 most significant), then the
bath modes in the order they are listed (for one bath per spin: the modes of
spin 0, then spin 1, ...).  hbar = k_B = 1 and every mode has unit mass unless
stated otherwise.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
import itertools
import os

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm
from scipy.sparse.linalg import expm_multiply

from .bath import SpectralDensity, discretize_spectral_density
from .errors import DimensionError
from .operators import SZ, annihilation, embed_sparse, spin_operators
from .spin_coherent import SpinHamiltonianParams

TOPOLOGIES = ("one-bath-per-spin", "common-bath")
DEFAULT_DIM_CAP = 2 ** 16
DENSE_LIMIT = 256


@dataclass(frozen=True)
class BathMode:
    omega: float
    coupling: float
    levels: int = 4
    mass: float = 1.0

    def __post_init__(self):
        if self.levels < 2:
            raise ValueError("a mode needs at least 2 levels")
        if self.omega <= 0:
            raise ValueError("mode frequency must be positive")

    @property
    def x_scale(self):
        """sqrt(1 / (2 m omega)): x = x_scale (a + a^dagger)."""
        return np.sqrt(1.0 / (2 * self.mass * self.omega))


def modes_from_spectral_density(sd, n_modes, levels=4, scheme="gauss-legendre", **kw):
    omega, coupling = discretize_spectral_density(sd, n_modes, scheme, **kw)
    return tuple(BathMode(float(w), float(c), levels) for w, c in zip(omega, coupling))


@dataclass(frozen=True)
class ModelSpec:
    """Qubits, their Hamiltonian, and how they couple to harmonic modes.

    ``modes`` is a tuple of per-spin mode tuples for 'one-bath-per-spin' and a
    single mode tuple for 'common-bath', where the coupling operator is
    sum_k S_z^k.
    """

    system: SpinHamiltonianParams
    modes: tuple
    topology: str = "one-bath-per-spin"
    temperature: float = 0.0
    counter_term: bool = True
    dim_cap: int = DEFAULT_DIM_CAP

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"topology must be one of {TOPOLOGIES}")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        modes = tuple(tuple(m) for m in self.modes) if self.topology == TOPOLOGIES[0] \
            else tuple(self.modes)
        if self.topology == TOPOLOGIES[0] and len(modes) != self.n_qubits:
            raise ValueError("one-bath-per-spin needs one mode tuple per qubit")
        object.__setattr__(self, "modes", modes)

    @property
    def n_qubits(self):
        return self.system.n_spins

    def mode_groups(self):
        """(coupled qubits, modes) pairs, one per independent bath."""
        if self.topology == "common-bath":
            return [(tuple(range(self.n_qubits)), self.modes)]
        return [((k,), self.modes[k]) for k in range(self.n_qubits)]

    @property
    def all_modes(self):
        return [m for _, group in self.mode_groups() for m in group]

    @property
    def bath_dims(self):
        return [m.levels for m in self.all_modes]

    @property
    def dimension(self):
        return 2 ** self.n_qubits * int(np.prod(self.bath_dims, dtype=np.int64))

    @property
    def decoupled(self):
        return all(m.coupling == 0 for m in self.all_modes)

    def with_coupling_scale(self, factor):
        """Same model with every C_n multiplied by ``factor``."""
        def scale(group):
            return tuple(replace(m, coupling=m.coupling * factor) for m in group)
        if self.topology == "common-bath":
            modes = scale(self.modes)
        else:
            modes = tuple(scale(g) for g in self.modes)
        return replace(self, modes=modes)

    def closed(self):
        return self.with_coupling_scale(0.0)


def _check_cap(spec):
    if spec.dimension > spec.dim_cap:
        raise DimensionError(f"joint dimension {spec.dimension} exceeds cap {spec.dim_cap}")


def _bath_operators(spec):
    """Sparse operators on the joint space: H_B, and per bath group the coupling term."""
    n = spec.n_qubits
    dims = [2] * n + spec.bath_dims
    total = int(np.prod(dims, dtype=np.int64))
    h_bath = sp.csr_matrix((total, total), dtype=complex)
    h_coupling = sp.csr_matrix((total, total), dtype=complex)
    site = n
    for qubits, group in spec.mode_groups():
        sz = sum(embed_sparse(SZ, q, dims) for q in qubits)
        x_total = sp.csr_matrix((total, total), dtype=complex)
        reorg = 0.0
        for mode in group:
            a = annihilation(mode.levels)
            num = a.conj().T @ a + 0.5 * np.eye(mode.levels)
            h_bath = h_bath + mode.omega * embed_sparse(num, site, dims)
            if mode.coupling:
                x = mode.x_scale * (a + a.conj().T)
                x_total = x_total + mode.coupling * embed_sparse(x, site, dims)
                reorg += mode.coupling ** 2 / (2 * mode.mass * mode.omega ** 2)
            site += 1
        h_coupling = h_coupling + sz @ x_total
        if spec.counter_term and reorg:
            h_coupling = h_coupling + reorg * (sz @ sz)
    return h_bath.tocsr(), h_coupling.tocsr()


def _system_on_joint(h_s, bath_dim):
    return sp.kron(sp.csr_matrix(h_s), sp.identity(bath_dim, format="csr"), format="csr")


def build_hamiltonian(spec, interval=0):
    """Sparse H = H_S (x) 1 + sum S_z (x) sum_n C_n x_n + 1 (x) H_B (+ counter-term)."""
    _check_cap(spec)
    bath_dim = int(np.prod(spec.bath_dims, dtype=np.int64))
    h_bath, h_coupling = _bath_operators(spec)
    h_s = spec.system.hamiltonian(interval)
    return (_system_on_joint(h_s, bath_dim) + h_coupling + h_bath).tocsr()


def mode_populations(mode, temperature):
    """Boltzmann populations of one truncated mode (renormalized)."""
    if temperature == 0:
        p = np.zeros(mode.levels)
        p[0] = 1.0
        return p
    if np.isinf(temperature):
        return np.full(mode.levels, 1.0 / mode.levels)
    e = mode.omega * np.arange(mode.levels) / temperature
    p = np.exp(-e)
    return p / p.sum()


def thermal_bath_state(modes, temperature):
    """Product of truncated thermal states, as a dense diagonal density matrix."""
    pops = [mode_populations(m, temperature) for m in modes]
    if not pops:
        return np.ones((1, 1))
    diag = pops[0]
    for p in pops[1:]:
        diag = np.kron(diag, p)
    return np.diag(diag).astype(complex)


def truncation_tail(mode, temperature):
    """Untruncated thermal occupation of levels >= d for one mode."""
    if temperature == 0:
        return 0.0
    return float(np.exp(-mode.omega * mode.levels / temperature))


def check_density_matrix(rho, tol=1e-10):
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise ValueError("density matrix trace differs from 1")
    if np.min(np.linalg.eigvalsh(rho)) < -tol:
        raise ValueError("density matrix has negative eigenvalues")
    return rho


def _segments(system, t_f):
    grid = system.time_grid
    if t_f < grid[0] or t_f > grid[-1] * (1 + 1e-12) + 1e-15:
        raise ValueError(f"t_f={t_f} outside the Hamiltonian time grid")
    out = []
    for k in range(system.n_intervals):
        a, b = grid[k], min(grid[k + 1], t_f)
        if b > a:
            out.append((k, b - a))
    return out


def closed_evolution(system, rho_i, t_f=None):
    t_f = system.time_grid[-1] if t_f is None else t_f
    u = system.propagator(system.time_grid[0], t_f)
    return u @ rho_i @ u.conj().T


def evolve_and_reduce(spec, rho_i, t_f=None, method="auto", weight_cutoff=1e-12):
    """Reduced qubit state at ``t_f`` from the product initial state rho_i (x) rho_B.

    Decoupled models reduce to the closed-system map U rho U^dagger.  Otherwise
    small joint spaces evolve the full density matrix with dense step
    exponentials ('dense'); larger ones propagate each term of the mixture
    rho_i (x) rho_B as a pure state with sparse exponential actions ('pure').
    """
    rho_i = check_density_matrix(np.asarray(rho_i, dtype=complex))
    system = spec.system
    t_f = system.time_grid[-1] if t_f is None else t_f
    if rho_i.shape[0] != 2 ** spec.n_qubits:
        raise ValueError("rho_i does not match the qubit count")
    if spec.decoupled and method == "auto":
        return closed_evolution(system, rho_i, t_f)
    _check_cap(spec)
    segs = _segments(system, t_f)
    if not segs:
        return rho_i.copy()
    d_s = 2 ** spec.n_qubits
    bath_dim = int(np.prod(spec.bath_dims, dtype=np.int64))
    h_bath, h_coupling = _bath_operators(spec)
    ops = spin_operators(spec.n_qubits)
    h_fixed = h_bath + h_coupling
    hams = {k: (_system_on_joint(system.hamiltonian(k, ops), bath_dim) + h_fixed).tocsr()
            for k, _ in segs}
    if method == "auto":
        method = "dense" if spec.dimension <= DENSE_LIMIT else "pure"

    if method == "dense":
        rho = np.kron(rho_i, thermal_bath_state(spec.all_modes, spec.temperature))
        for k, dt in segs:
            u = expm(-1j * dt * hams[k].toarray())
            rho = u @ rho @ u.conj().T
        out = rho.reshape(d_s, bath_dim, d_s, bath_dim).trace(axis1=1, axis2=3)
    elif method == "pure":
        evals, evecs = np.linalg.eigh(rho_i)
        bath_pops = np.diag(thermal_bath_state(spec.all_modes, spec.temperature)).real
        out = np.zeros((d_s, d_s), dtype=complex)
        for p_s, vec in zip(evals, evecs.T):
            if p_s < weight_cutoff:
                continue
            for b in np.flatnonzero(bath_pops * p_s >= weight_cutoff):
                psi = np.zeros(d_s * bath_dim, dtype=complex)
                psi.reshape(d_s, bath_dim)[:, b] = vec
                for k, dt in segs:
                    psi = expm_multiply(-1j * dt * hams[k], psi)
                m = psi.reshape(d_s, bath_dim)
                out += p_s * bath_pops[b] * (m @ m.conj().T)
        out /= np.trace(out).real
    else:
        raise ValueError(f"unknown method {method!r}")
    return 0.5 * (out + out.conj().T)


def outcome_distribution(rho):
    """Computational-basis probabilities; index bits read qubit 0 as most significant."""
    p = np.real(np.diag(rho)).copy()
    return p


@dataclass(frozen=True)
class DistributionPair:
    p_noisy: np.ndarray
    p_ideal: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.p_noisy, dtype=float)
        b = np.asarray(self.p_ideal, dtype=float)
        if a.shape != b.shape:
            raise ValueError("distributions differ in length")
        for v in (a, b):
            if abs(v.sum() - 1) > 1e-10 or np.min(v) < -1e-12:
                raise ValueError("not a probability vector")
        object.__setattr__(self, "p_noisy", a)
        object.__setattr__(self, "p_ideal", b)

    @property
    def n_outcomes(self):
        return self.p_noisy.size

    @property
    def n_bits(self):
        return int(np.log2(self.n_outcomes))

    def outcomes(self):
        """Boolean outcome vectors f in index order."""
        return [tuple(bool(int(c)) for c in format(i, f"0{self.n_bits}b")) for i in range(self.n_outcomes)]


def tvd(d, p_ideal=None):
    """sum_f |p_noisy(f) - p_ideal(f)|, in [0, 2]."""
    if p_ideal is not None:
        d = DistributionPair(d, p_ideal)
    return float(np.sum(np.abs(d.p_noisy - d.p_ideal)))


# -- scaling experiments -----------------------------------------------------

@dataclass(frozen=True)
class ScalingSetup:
    """Per-point model builder for TVD sweeps over (n, t, eta).

    protocol 'ramsey': every qubit gets a pi/2 pulse about y, idles for t, then a
    -pi/2 pulse; the ideal outcome is all zeros so any decoherence shows up
    directly in the TVD.  protocol 'static': constant ``mu`` for duration t
    starting from |0...0>.  Each qubit has an identical, independent bath
    ('one-bath-per-spin') or all share one ('common-bath').
    """

    sd: SpectralDensity
    modes_per_bath: int = 3
    levels: int = 2
    scheme: str = "log-gauss-legendre"
    omega_min: float = 1e-3
    omega_max: float = None
    protocol: str = "ramsey"
    pulse_duration: float = 1e-3
    mu: tuple = (0.0, 0.0, 0.0)
    topology: str = "one-bath-per-spin"
    counter_term: bool = True
    dim_cap: int = DEFAULT_DIM_CAP

    def modes(self, eta):
        sd = self.sd.with_eta(eta)
        kw = {"omega_max": self.omega_max}
        if self.scheme == "log-gauss-legendre":
            kw["omega_min"] = self.omega_min
        return modes_from_spectral_density(sd, self.modes_per_bath, self.levels, self.scheme, **kw)

    def system(self, n, t):
        if self.protocol == "ramsey":
            tp = self.pulse_duration
            rate = (np.pi / 2) / tp
            mu = np.zeros((3, n, 3))
            mu[0, :, 1] = rate
            mu[2, :, 1] = -rate
            grid = np.array([0.0, tp, tp + t, 2 * tp + t])
            return SpinHamiltonianParams(mu, np.zeros((3, n, n, 3, 3)), grid)
        if self.protocol == "static":
            return SpinHamiltonianParams.constant(np.tile(self.mu, (n, 1)), t)
        raise ValueError(f"unknown protocol {self.protocol!r}")

    def model(self, n, t, eta):
        group = self.modes(eta)
        modes = group if self.topology == "common-bath" else tuple(group for _ in range(n))
        return ModelSpec(self.system(n, t), modes, self.topology, self.sd.temperature,
                         self.counter_term, self.dim_cap)

    @staticmethod
    def initial_state(n):
        rho = np.zeros((2 ** n, 2 ** n), dtype=complex)
        rho[0, 0] = 1.0
        return rho


def scaling_point(setup, n, t, eta):
    spec = setup.model(n, t, eta)
    rho_i = setup.initial_state(n)
    ideal = outcome_distribution(closed_evolution(spec.system, rho_i))
    noisy = outcome_distribution(evolve_and_reduce(spec, rho_i))
    return tvd(DistributionPair(noisy, ideal)), DistributionPair(noisy, ideal)


def scaling_experiment(setup, ns, ts, etas, workers=None):
    """TVD table over the product of ``ns``, ``ts``, ``etas``, sorted by (n, t, eta).

    Rows are dicts with keys n, t, eta, tvd, dimension.  ``workers`` defaults to
    the FVQERR_THREADS environment variable (1 if unset).
    """
    keys = sorted(itertools.product(ns, ts, etas))
    if workers is None:
        workers = int(os.environ.get("FVQERR_THREADS", "1"))

    def run(key):
        n, t, eta = key
        value, _ = scaling_point(setup, n, t, eta)
        return value

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(run, keys))
    else:
        values = [run(k) for k in keys]
    return [{"n": n, "t": t, "eta": eta, "tvd": v,
             "dimension": setup.model(n, t, eta).dimension}
            for (n, t, eta), v in zip(keys, values)]


def loglog_fit(x, y):
    """Least-squares slope of log y against log x with its R^2; zeros are skipped."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0)
    lx, ly = np.log(x[keep]), np.log(y[keep])
    if lx.size < 2:
        raise ValueError("need at least two positive points for a log-log fit")
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(r2)
