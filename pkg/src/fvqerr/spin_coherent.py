"""Spin-1/2 coherent states, their matrix elements and path functionals.

Coherent states carry the phase convention

    |theta, phi> = exp(-i phi S_z) exp(-i theta S_y) |up>
                 = (e^{-i phi/2} cos(theta/2), e^{i phi/2} sin(theta/2))

with no rephasing; several closed forms below depend on it.
"""

from dataclasses import dataclass
from functools import reduce

import numpy as np
from scipy.linalg import expm

from .errors import DimensionError
from .operators import SPIN, spin_operators

TWO_PI = 2 * np.pi
MAX_SPINS = 10


@dataclass(frozen=True)
class BlochPoint:
    """A point on the unit sphere; ``phi`` is normalized to [0, 2 pi)."""

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        theta = float(self.theta)
        if not (-1e-12 <= theta <= np.pi + 1e-12):
            raise ValueError(f"theta={theta} outside [0, pi]")
        object.__setattr__(self, "theta", min(max(theta, 0.0), np.pi))
        phi = float(self.phi) % TWO_PI
        if phi >= TWO_PI:  # rounding of e.g. -1e-17 % 2pi
            phi = 0.0
        object.__setattr__(self, "phi", phi)

    @property
    def spin_vector(self):
        """Classical spin S = (1/2)(sin t cos p, sin t sin p, cos t)."""
        st = np.sin(self.theta)
        return 0.5 * np.array([st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)])


def coherent_state_vector(p):
    """Two-component coherent state for ``p``."""
    return np.array([np.exp(-0.5j * p.phi) * np.cos(p.theta / 2),
                     np.exp(0.5j * p.phi) * np.sin(p.theta / 2)])


def coherent_states(theta, phi):
    """Vectorized coherent states, shape ``(2, *theta.shape)``."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    return np.stack([np.exp(-0.5j * phi) * np.cos(theta / 2),
                     np.exp(0.5j * phi) * np.sin(theta / 2)])


def product_state(points):
    """Product coherent state over several spins (first spin most significant)."""
    return reduce(np.kron, [coherent_state_vector(p) for p in points])


def overlap(p1, p2):
    """<p1|p2> from the closed form."""
    dphi = p1.phi - p2.phi
    return (np.cos(dphi / 2) * np.cos((p1.theta - p2.theta) / 2)
            + 1j * np.sin(dphi / 2) * np.cos((p1.theta + p2.theta) / 2))


def spin_matrix_element(axis, p1, p2):
    """<p1| S_axis |p2> for ``axis`` in 'xyz'.

    The z component uses the closed form; x and y go through the state vectors.
    """
    if axis == "z":
        dphi = p1.phi - p2.phi
        return 0.5 * (np.cos(dphi / 2) * np.cos((p1.theta + p2.theta) / 2)
                      + 1j * np.sin(dphi / 2) * np.cos((p1.theta - p2.theta) / 2))
    k = "xyz".index(axis)
    return np.vdot(coherent_state_vector(p1), SPIN[k] @ coherent_state_vector(p2))


@dataclass(frozen=True)
class SphereQuadrature:
    """Gauss-Legendre in cos(theta) times a uniform grid in phi.

    Weights integrate the measure sin(theta) dtheta dphi / 2pi, whose total is 2.
    """

    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray
    resolution: tuple
    scheme: str = "gauss-legendre-in-cos-theta x uniform-in-phi"

    @classmethod
    def gauss_legendre(cls, n_theta, n_phi):
        if n_theta < 1 or n_phi < 1:
            raise ValueError("quadrature needs at least one node per direction")
        x, w = np.polynomial.legendre.leggauss(n_theta)
        phis = TWO_PI * np.arange(n_phi) / n_phi
        th, ph = np.meshgrid(np.arccos(x), phis, indexing="ij")
        wt = np.repeat(w[:, None] / n_phi, n_phi, axis=1)
        return cls(th.ravel(), ph.ravel(), wt.ravel(), (n_theta, n_phi))

    @property
    def nodes(self):
        return [(BlochPoint(t, p), w) for t, p, w in zip(self.theta, self.phi, self.weights)]

    def states(self):
        """Coherent states at the nodes, shape ``(2, n_nodes)``."""
        return coherent_states(self.theta, self.phi)

    def identity_operator(self):
        """sum_k w_k |p_k><p_k| as a 2x2 matrix."""
        v = self.states()
        return (v * self.weights) @ v.conj().T


def resolution_of_identity_residual(q):
    """Max-norm of the quadrature identity minus the true identity."""
    return float(np.max(np.abs(q.identity_operator() - np.eye(2))))


@dataclass(frozen=True)
class SpinHamiltonianParams:
    """Piecewise-constant couplings of H_S = sum mu_a.S_a + sum_{a!=b} S_a.kappa_ab.S_b.

    ``mu`` has shape ``(K, n, 3)`` and ``kappa`` shape ``(K, n, n, 3, 3)`` for the K
    intervals of ``time_grid`` (length K+1).  Every ordered pair (a, b) is summed
    exactly as stored, so a coupling entered only at ``kappa[:, a, b]`` counts once.
    """

    mu: np.ndarray
    kappa: np.ndarray
    time_grid: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.time_grid, dtype=float)
        mu = np.asarray(self.mu, dtype=float)
        kappa = np.asarray(self.kappa, dtype=float)
        if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
            raise ValueError("time_grid must be strictly increasing with >= 2 points")
        k = grid.size - 1
        if mu.ndim == 2:
            mu = np.broadcast_to(mu, (k,) + mu.shape)
        if kappa.ndim == 4:
            kappa = np.broadcast_to(kappa, (k,) + kappa.shape)
        n = mu.shape[1]
        if mu.shape != (k, n, 3) or kappa.shape != (k, n, n, 3, 3):
            raise ValueError(f"mu {mu.shape} / kappa {kappa.shape} do not match {k} intervals")
        diag = kappa[:, np.arange(n), np.arange(n)]
        if np.any(diag != 0):
            raise ValueError("kappa_aa must vanish; self-couplings are not part of the model")
        object.__setattr__(self, "time_grid", grid)
        object.__setattr__(self, "mu", np.array(mu))
        object.__setattr__(self, "kappa", np.array(kappa))

    @classmethod
    def constant(cls, mu, duration, kappa=None, t0=0.0, n_steps=1):
        mu = np.atleast_2d(np.asarray(mu, dtype=float))
        n = mu.shape[0]
        if kappa is None:
            kappa = np.zeros((n, n, 3, 3))
        grid = np.linspace(t0, t0 + duration, n_steps + 1)
        return cls(mu, kappa, grid)

    @property
    def n_spins(self):
        return self.mu.shape[1]

    @property
    def n_intervals(self):
        return self.time_grid.size - 1

    @property
    def duration(self):
        return self.time_grid[-1] - self.time_grid[0]

    def interval_index(self, t):
        """Index of the interval containing ``t`` (right-closed at the last point)."""
        k = int(np.searchsorted(self.time_grid, t, side="right")) - 1
        return min(max(k, 0), self.n_intervals - 1)

    def hamiltonian(self, k, ops=None):
        """Dense H_S on interval ``k``."""
        n = self.n_spins
        if ops is None:
            ops = spin_operators(n)
        h = np.einsum("ai,aixy->xy", self.mu[k], ops)
        kap = self.kappa[k]
        for a in range(n):
            for b in range(n):
                if a != b and np.any(kap[a, b]):
                    for i in range(3):
                        for j in range(3):
                            if kap[a, b, i, j]:
                                h = h + kap[a, b, i, j] * ops[a, i] @ ops[b, j]
        return h

    def step_unitaries(self, t_start=None, t_stop=None):
        """Exact exp(-i H dt) for each (sub)interval between ``t_start`` and ``t_stop``."""
        t_start = self.time_grid[0] if t_start is None else t_start
        t_stop = self.time_grid[-1] if t_stop is None else t_stop
        ops = spin_operators(self.n_spins)
        out = []
        for k in range(self.n_intervals):
            a = max(self.time_grid[k], t_start)
            b = min(self.time_grid[k + 1], t_stop)
            if b > a:
                out.append(expm(-1j * (b - a) * self.hamiltonian(k, ops)))
        return out

    def propagator(self, t_start=None, t_stop=None):
        """Time-ordered U(t_stop, t_start) on the 2**n spin space."""
        u = np.eye(2 ** self.n_spins, dtype=complex)
        for step in self.step_unitaries(t_start, t_stop):
            u = step @ u
        return u

    def refined(self, n_sub):
        """Same Hamiltonian with every interval split into ``n_sub`` pieces."""
        grid = self.time_grid
        fine = np.concatenate([np.linspace(grid[k], grid[k + 1], n_sub + 1)[:-1]
                               for k in range(self.n_intervals)] + [grid[-1:]])
        return SpinHamiltonianParams(np.repeat(self.mu, n_sub, axis=0),
                                     np.repeat(self.kappa, n_sub, axis=0), fine)


def _as_points(p, n):
    if isinstance(p, BlochPoint):
        p = [p]
    p = list(p)
    if len(p) != n:
        raise ValueError(f"expected {n} endpoint(s), got {len(p)}")
    return p


def coherent_propagator(params, q, p_i, p_f, max_spins=MAX_SPINS, method="auto", n_sub=1):
    """<p_f| T exp(-i int H_S dt) |p_i> with a quadrature identity between steps.

    ``method='transfer'`` (single spin only) carries the amplitude on the
    quadrature nodes through the per-step transfer matrices
    M[k, j] = <p_k|U_step|p_j> w_j, which is the discretized path sum.
    ``method='factored'`` performs the same node sums spin by spin through the
    operator sum_k w_k |p_k><p_k|, which makes many-spin products tractable.
    """
    n = params.n_spins
    if n > max_spins:
        raise DimensionError(f"{n} spins exceeds max_spins={max_spins}")
    p_i = _as_points(p_i, n)
    p_f = _as_points(p_f, n)
    if n_sub > 1:
        params = params.refined(n_sub)
    steps = params.step_unitaries()
    if method == "auto":
        method = "transfer" if n == 1 else "factored"
    if method == "transfer":
        if n != 1:
            raise ValueError("transfer method is implemented for a single spin")
        bra_f = coherent_state_vector(p_f[0]).conj()
        ket_i = coherent_state_vector(p_i[0])
        if len(steps) == 1:
            return complex(bra_f @ steps[0] @ ket_i)
        v = q.states()
        # amp[k] = <p_k| U_1 |p_i>, then one transfer matrix per inserted identity
        amp = v.conj().T @ (steps[0] @ ket_i)
        for u in steps[1:-1]:
            amp = ((v.conj().T @ u @ v) * q.weights[None, :]) @ amp
        return complex((bra_f @ steps[-1] @ v) @ (q.weights * amp))
    if method != "factored":
        raise ValueError(f"unknown method {method!r}")
    ident = reduce(np.kron, [q.identity_operator()] * n)
    psi = product_state(p_i)
    psi = steps[0] @ psi
    for u in steps[1:]:
        psi = u @ (ident @ psi)
    return complex(np.vdot(product_state(p_f), psi))


def _wrapped(d):
    return (d + np.pi) % TWO_PI - np.pi


@dataclass(frozen=True)
class DiscretizedPath:
    """Forward and backward angle histories for ``n`` spins on a shared time grid.

    ``theta_f``, ``phi_f``, ``theta_b``, ``phi_b`` have shape ``(K+1, n)``.
    Azimuthal increments are taken modulo 2 pi into (-pi, pi].
    """

    time_grid: np.ndarray
    theta_f: np.ndarray
    phi_f: np.ndarray
    theta_b: np.ndarray
    phi_b: np.ndarray
    epsilon: float = 0.0

    def __post_init__(self):
        grid = np.asarray(self.time_grid, dtype=float)
        if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
            raise ValueError("time_grid must be strictly increasing with >= 2 points")
        shape = None
        for name in ("theta_f", "phi_f", "theta_b", "phi_b"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim == 1:
                arr = arr[:, None]
            if arr.shape[0] != grid.size:
                raise ValueError(f"{name} has {arr.shape[0]} points, grid has {grid.size}")
            if shape is not None and arr.shape != shape:
                raise ValueError("forward and backward histories differ in shape")
            shape = arr.shape
            object.__setattr__(self, name, arr)
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        object.__setattr__(self, "time_grid", grid)

    @classmethod
    def symmetric(cls, time_grid, theta, phi, epsilon=0.0):
        """Path whose backward branch equals the forward one."""
        return cls(time_grid, theta, phi, theta, phi, epsilon)

    @property
    def n_spins(self):
        return self.theta_f.shape[1]

    def branch(self, which):
        if which in ("f", "forward"):
            return self.theta_f, self.phi_f
        if which in ("b", "backward"):
            return self.theta_b, self.phi_b
        raise ValueError(which)

    def sz(self, which):
        """Classical S_z = cos(theta)/2 per time point and spin."""
        return 0.5 * np.cos(self.branch(which)[0])

    def reversed(self):
        return DiscretizedPath(self.time_grid[-1] + self.time_grid[0] - self.time_grid[::-1],
                               self.theta_f[::-1], self.phi_f[::-1],
                               self.theta_b[::-1], self.phi_b[::-1], self.epsilon)


def _branch_arrays(path, which):
    theta, phi = path.branch(which)
    mid = 0.5 * (theta[1:] + theta[:-1])
    return theta, _wrapped(np.diff(phi, axis=0)), mid


def kinetic_action(path):
    """sum_n (1/2) cos(theta_mid) dphi_n, summed over spins; returns (forward, backward)."""
    out = []
    for which in ("f", "b"):
        _, dphi, mid = _branch_arrays(path, which)
        out.append(float(np.sum(0.5 * np.cos(mid) * dphi)))
    return tuple(out)


def regularization_action(path):
    """epsilon sum_n (dtheta^2 + sin^2(theta_mid) dphi^2) / (2 dt); returns (forward, backward)."""
    dt = np.diff(path.time_grid)[:, None]
    out = []
    for which in ("f", "b"):
        theta, dphi, mid = _branch_arrays(path, which)
        dth = np.diff(theta, axis=0)
        out.append(float(path.epsilon * np.sum((dth ** 2 + np.sin(mid) ** 2 * dphi ** 2) / (2 * dt))))
    return tuple(out)


def normalization(path, which="f"):
    """prod_n (sin^2 theta_mid)^(1/2) epsilon / (2 pi i dt_n), over steps and spins.

    Kept separate from :func:`coherent_propagator`, which resolves the identity
    by quadrature and needs no such factor.
    """
    dt = np.diff(path.time_grid)[:, None]
    _, _, mid = _branch_arrays(path, which)
    factors = np.abs(np.sin(mid)) * path.epsilon / (2j * np.pi * dt)
    return complex(np.prod(factors))


def interaction_lagrangian(params, angles, t):
    """L_S = -(sum_a mu_a.S_a + sum_{a!=b} S_a.kappa_ab.S_b) with classical spins."""
    angles = _as_points(angles, params.n_spins)
    k = params.interval_index(t)
    s = np.array([p.spin_vector for p in angles])
    energy = np.sum(params.mu[k] * s)
    energy += np.einsum("ai,abij,bj->", s, params.kappa[k], s)
    return -float(energy)
