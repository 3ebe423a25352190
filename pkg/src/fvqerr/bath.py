"""Harmonic-bath spectral densities, influence kernels and influence actions.

Discrete modes and the continuum are tied by
J(omega) = (pi/2) sum_n C_n^2 / (m_n omega_n) delta(omega - omega_n),
so that k_r(tau) - i k_i(tau) = <X(tau) X(0)> for X = sum_n C_n x_n and the
influence phase reads i Phi = i S_i - S_r.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ._csv import read_csv, write_csv
from .errors import QuadratureError

CUTOFFS = ("exponential", "hard")


@dataclass(frozen=True)
class SpectralDensity:
    """J(omega) = eta omega^s omega_c^(-s-1) times a high-frequency cutoff at Omega."""

    eta: float
    s: float = 1.0
    omega_c: float = 1.0
    Omega: float = 1.0
    cutoff_form: str = "exponential"
    temperature: float = 0.0

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError("eta must be >= 0")
        if self.Omega <= 0 or self.omega_c <= 0:
            raise ValueError("Omega and omega_c must be positive")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.cutoff_form not in CUTOFFS:
            raise ValueError(f"cutoff_form must be one of {CUTOFFS}")

    def with_eta(self, eta):
        return SpectralDensity(eta, self.s, self.omega_c, self.Omega, self.cutoff_form, self.temperature)

    @property
    def upper_limit(self):
        # exp(-60) truncates the exponential tail far below quadrature tolerance
        return self.Omega if self.cutoff_form == "hard" else 60.0 * self.Omega


def spectral_density_eval(sd, omega):
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise ValueError("spectral density is defined for omega >= 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        base = sd.eta * omega ** sd.s * sd.omega_c ** (-sd.s - 1)
    if sd.cutoff_form == "hard":
        cut = (omega <= sd.Omega).astype(float)
    else:
        cut = np.exp(-omega / sd.Omega)
    out = base * cut
    return float(out) if out.ndim == 0 else out


def _omega_coth(omega, temperature):
    """omega * coth(omega / 2T), finite (= 2T) at omega = 0."""
    if temperature == 0:
        return omega
    x = omega / (2 * temperature)
    if x < 1e-4:
        return 2 * temperature * (1 + x * x / 3)
    return omega / math.tanh(x)


def _quad(f, a, b, **kw):
    res = integrate.quad(f, a, b, full_output=1, limit=kw.pop("limit", 400), **kw)
    if len(res) > 3:
        raise QuadratureError(f"quadrature did not converge: {res[3]}", achieved=res[1])
    return res[0]


def _abs_tol(sd, rel=1e-13):
    # absolute tolerance relative to the natural kernel scale eta Omega^(s+1) / omega_c^(s+1)
    return rel * sd.eta * (sd.Omega / sd.omega_c) ** (sd.s + 1)


def kernel_ki(sd, tau, epsabs=None):
    """(1/pi) int_0^inf J(omega) sin(omega tau) d omega."""
    tau = float(tau)
    if tau == 0 or sd.eta == 0:
        return 0.0
    sign = 1.0 if tau > 0 else -1.0
    tau = abs(tau)

    def f(w):
        return spectral_density_eval(sd, w)

    epsabs = _abs_tol(sd) if epsabs is None else epsabs
    val = _quad(f, 0.0, sd.upper_limit, weight="sin", wvar=tau, epsabs=epsabs, epsrel=1e-12)
    return sign * val / np.pi


def kernel_kr(sd, tau, zero_temperature=False, epsabs=None):
    """(1/pi) int_0^inf J(omega) cos(omega tau) coth(omega / 2T) d omega.

    T = 0 (or ``zero_temperature``) replaces coth by 1.
    """
    temperature = 0.0 if zero_temperature else sd.temperature
    if temperature > 0 and sd.s <= 0:
        raise ValueError("s <= 0 at T > 0 is infrared divergent")
    if sd.eta == 0:
        return 0.0
    tau = abs(float(tau))
    prefactor = sd.eta * sd.omega_c ** (-sd.s - 1)

    def f(w):
        if w == 0:
            # limits of omega^(s-1) * omega coth(omega/2T); the 0 < s < 1 singularity
            # is integrable and never sampled exactly
            if temperature == 0:
                return prefactor if sd.s == 0 else 0.0
            return prefactor * 2 * temperature if sd.s == 1 else 0.0
        cut = math.exp(-w / sd.Omega) if sd.cutoff_form == "exponential" else float(w <= sd.Omega)
        return prefactor * w ** (sd.s - 1) * _omega_coth(w, temperature) * cut

    epsabs = _abs_tol(sd) if epsabs is None else epsabs
    if tau == 0:
        val = _quad(f, 0.0, sd.upper_limit, epsabs=epsabs, epsrel=1e-12)
    else:
        val = _quad(f, 0.0, sd.upper_limit, weight="cos", wvar=tau, epsabs=epsabs, epsrel=1e-12)
    return val / np.pi


def counter_term_coefficient(sd):
    """sum_n C_n^2 / (2 m_n omega_n^2) = (1/pi) int J(omega)/omega d omega."""
    if sd.s <= 0:
        raise ValueError("counter-term diverges for s <= 0")
    pre = sd.eta * sd.omega_c ** (-sd.s - 1) / np.pi
    if sd.cutoff_form == "exponential":
        return pre * math.gamma(sd.s) * sd.Omega ** sd.s
    return pre * sd.Omega ** sd.s / sd.s


def kernel_support_width(sd):
    """max(1/Omega, 1/T); at T = 0 only the 1/Omega scale remains."""
    if sd.temperature == 0:
        return 1.0 / sd.Omega
    return max(1.0 / sd.Omega, 1.0 / sd.temperature)


@dataclass(frozen=True)
class KernelTable:
    """k_i and k_r tabulated for tau >= 0; negative tau follows from parity."""

    tau_grid: np.ndarray
    ki_values: np.ndarray
    kr_values: np.ndarray
    source: SpectralDensity = None
    counter_term: float = 0.0

    def __post_init__(self):
        tau = np.asarray(self.tau_grid, dtype=float)
        if tau.ndim != 1 or tau[0] != 0 or np.any(np.diff(tau) <= 0):
            raise ValueError("tau_grid must start at 0 and increase strictly")
        ki = np.asarray(self.ki_values, dtype=float)
        kr = np.asarray(self.kr_values, dtype=float)
        if ki.shape != tau.shape or kr.shape != tau.shape:
            raise ValueError("kernel values must match tau_grid")
        if ki[0] != 0:
            raise ValueError("k_i(0) must vanish")
        object.__setattr__(self, "tau_grid", tau)
        object.__setattr__(self, "ki_values", ki)
        object.__setattr__(self, "kr_values", kr)

    @property
    def tau_max(self):
        return self.tau_grid[-1]

    def _check(self, tau):
        if np.max(np.abs(tau)) > self.tau_max * (1 + 1e-12):
            raise ValueError(f"kernel table covers |tau| <= {self.tau_max}, need {np.max(np.abs(tau))}")

    def ki(self, tau):
        tau = np.asarray(tau, dtype=float)
        self._check(tau)
        return np.sign(tau) * np.interp(np.abs(tau), self.tau_grid, self.ki_values)

    def kr(self, tau):
        tau = np.asarray(tau, dtype=float)
        self._check(tau)
        return np.interp(np.abs(tau), self.tau_grid, self.kr_values)

    def scaled(self, factor):
        src = self.source.with_eta(self.source.eta * factor) if self.source is not None else None
        return KernelTable(self.tau_grid, self.ki_values * factor, self.kr_values * factor,
                           src, self.counter_term * factor)

    def to_csv(self, path):
        write_csv(path, ["tau", "ki", "kr"], zip(self.tau_grid, self.ki_values, self.kr_values))

    @classmethod
    def from_csv(cls, path, source=None):
        header, rows = read_csv(path)
        if header != ["tau", "ki", "kr"]:
            raise ValueError(f"unexpected header {header}")
        arr = np.array(rows, dtype=float)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2], source)


def tabulate_kernels(sd, tau_grid, counter_term=True):
    tau_grid = np.asarray(tau_grid, dtype=float)
    ki = np.array([kernel_ki(sd, t) for t in tau_grid])
    kr = np.array([kernel_kr(sd, t) for t in tau_grid])
    ct = counter_term_coefficient(sd) if counter_term and sd.eta > 0 else 0.0
    return KernelTable(tau_grid, ki, kr, sd, ct)


def discretize_spectral_density(sd, n_modes, scheme="gauss-legendre", omega_max=None, omega_min=None):
    """Discrete modes (omega_n, C_n) with unit masses reproducing J by quadrature.

    Schemes: 'gauss-legendre' on [0, omega_max], 'log-gauss-legendre' on
    [omega_min, omega_max] in log(omega), 'midpoint' uniform on [0, omega_max].
    The default window is [0, 5 Omega] (hard cutoff: [0, Omega]).
    """
    if omega_max is None:
        omega_max = sd.Omega if sd.cutoff_form == "hard" else 5 * sd.Omega
    if scheme == "gauss-legendre":
        x, w = np.polynomial.legendre.leggauss(n_modes)
        omega = 0.5 * omega_max * (x + 1)
        dw = 0.5 * omega_max * w
    elif scheme == "log-gauss-legendre":
        if omega_min is None or omega_min <= 0:
            raise ValueError("log-gauss-legendre needs omega_min > 0")
        x, w = np.polynomial.legendre.leggauss(n_modes)
        a, b = np.log(omega_min), np.log(omega_max)
        omega = np.exp(0.5 * (b - a) * x + 0.5 * (a + b))
        dw = 0.5 * (b - a) * w * omega
    elif scheme == "midpoint":
        dw = np.full(n_modes, omega_max / n_modes)
        omega = (np.arange(n_modes) + 0.5) * dw[0]
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    coupling = np.sqrt(2 * omega * spectral_density_eval(sd, omega) * dw / np.pi)
    return omega, coupling


def discrete_kernels(omega, coupling, temperature, tau, mass=1.0):
    """k_i, k_r of a finite set of modes: sum C^2/(2 m w) (sin w tau, coth(w/2T) cos w tau)."""
    omega = np.asarray(omega, dtype=float)
    amp = np.asarray(coupling, dtype=float) ** 2 / (2 * np.asarray(mass, dtype=float) * omega)
    if temperature > 0:
        amp_r = amp / np.tanh(omega / (2 * temperature))
    else:
        amp_r = amp
    tau = np.asarray(tau, dtype=float)
    ph = np.multiply.outer(tau, omega)
    return np.sin(ph) @ amp, np.cos(ph) @ amp_r


def discrete_kernel_table(omega, coupling, temperature, tau_grid, mass=1.0):
    ki, kr = discrete_kernels(omega, coupling, temperature, tau_grid, mass)
    ki[0] = 0.0
    ct = float(np.sum(np.asarray(coupling) ** 2 / (2 * np.asarray(mass) * np.asarray(omega) ** 2)))
    return KernelTable(tau_grid, ki, kr, None, ct)


@dataclass(frozen=True)
class InfluencePair:
    """S_i, S_r and the counter-term phase; i Phi = i (S_i + s_ct) - S_r."""

    s_i: float
    s_r: float
    s_ct: float = 0.0

    @property
    def phase(self):
        return self.s_i + self.s_ct

    @property
    def phi(self):
        """Complex influence action Phi with i Phi = i (S_i + s_ct) - S_r."""
        return complex(self.phase, self.s_r)

    def __mul__(self, factor):
        return InfluencePair(self.s_i * factor, self.s_r * factor, self.s_ct * factor)

    __rmul__ = __mul__


def trapezoid_weights(grid):
    dt = np.diff(grid)
    w = np.zeros(grid.size)
    w[:-1] += dt / 2
    w[1:] += dt / 2
    return w


def triangle_weights(grid):
    """W[j, k] with sum W f(t_j, t_k) ~ int dt int_{t0}^{t} ds f, trapezoid in both."""
    n = grid.size
    dt = np.diff(grid)
    inner = np.zeros((n, n))
    for j in range(1, n):
        inner[j, :j] += dt[:j] / 2
        inner[j, 1:j + 1] += dt[:j] / 2
    return trapezoid_weights(grid)[:, None] * inner


def influence_from_sz(kt, grid, sz_f, sz_b, counter_term=True):
    """Influence of one bath coupled to classical S_z histories on ``grid``."""
    grid = np.asarray(grid, dtype=float)
    sz_f = np.asarray(sz_f, dtype=float)
    sz_b = np.asarray(sz_b, dtype=float)
    if sz_f.shape != grid.shape or sz_b.shape != grid.shape:
        raise ValueError("S_z histories must live on the time grid")
    lag = grid[:, None] - grid[None, :]
    lag = np.where(lag > 0, lag, 0.0)
    w = triangle_weights(grid)
    diff = sz_f - sz_b
    summ = sz_f + sz_b
    s_i = float(diff @ (w * kt.ki(lag)) @ summ)
    s_r = float(diff @ (w * kt.kr(lag)) @ diff)
    s_ct = 0.0
    if counter_term and kt.counter_term:
        s_ct = -kt.counter_term * float(trapezoid_weights(grid) @ (sz_f ** 2 - sz_b ** 2))
    return InfluencePair(s_i, s_r, s_ct)


def influence_action(kt, path, spin_index=0, counter_term=True):
    """S_i and S_r for one spin of ``path`` coupled to its own bath."""
    sz_f = path.sz("f")[:, spin_index]
    sz_b = path.sz("b")[:, spin_index]
    return influence_from_sz(kt, path.time_grid, sz_f, sz_b, counter_term)


def common_bath_influence(kt, path, counter_term=True):
    """Influence of one shared bath coupled to the collective sum_k S_z^k."""
    sz_f = path.sz("f").sum(axis=1)
    sz_b = path.sz("b").sum(axis=1)
    return influence_from_sz(kt, path.time_grid, sz_f, sz_b, counter_term)


def random_paths(rng, time_grid, n_spins, n_paths, knot_spacing, symmetric=False, epsilon=0.0):
    """Piecewise-linear random histories; knot angles are uniform on the sphere."""
    from .spin_coherent import DiscretizedPath

    time_grid = np.asarray(time_grid, dtype=float)
    t0, t1 = time_grid[0], time_grid[-1]
    n_knots = max(2, int(np.ceil((t1 - t0) / knot_spacing)) + 1)
    knots = np.linspace(t0, t1, n_knots)

    def branch():
        th = np.arccos(rng.uniform(-1, 1, size=(n_knots, n_spins)))
        ph = rng.uniform(0, 2 * np.pi, size=(n_knots, n_spins))
        th = np.stack([np.interp(time_grid, knots, th[:, a]) for a in range(n_spins)], axis=1)
        ph = np.stack([np.interp(time_grid, knots, ph[:, a]) for a in range(n_spins)], axis=1)
        return th, ph

    out = []
    for _ in range(n_paths):
        tf, pf = branch()
        tb, pb = (tf, pf) if symmetric else branch()
        out.append(DiscretizedPath(time_grid, tf, pf, tb, pb, epsilon))
    return out


def influence_estimate_ratio(kt, paths, counter_term=False):
    """(mean |S_i|, mean |S_r|) / (eta * duration) over an ensemble of paths."""
    if kt.source is None:
        raise ValueError("kernel table needs its spectral density to normalize by eta")
    eta = kt.source.eta
    duration = paths[0].time_grid[-1] - paths[0].time_grid[0]
    if eta == 0:
        return 0.0, 0.0
    if duration < 5 * kernel_support_width(kt.source):
        warnings.warn("duration shorter than 5 kernel widths; linear estimate not expected",
                      stacklevel=2)
    pairs = [influence_action(kt, p, 0, counter_term) for p in paths]
    si = np.mean([abs(p.s_i) for p in pairs])
    sr = np.mean([abs(p.s_r) for p in pairs])
    return float(si / (eta * duration)), float(sr / (eta * duration))
