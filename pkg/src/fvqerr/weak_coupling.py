"""Leading-order bath correction to outcome probabilities.

The correction is computed in operator form.  With A(t) the interaction-picture
coupling operator and C(tau) = k_r(tau) - i k_i(tau) = <X(tau) X(0)> the bath
correlation function,

    delta rho_I(t) = - int_0^t dt1 [A(t1), B(t1) rho - rho B(t1)^dagger]
                     - i int_0^t dt1 [mu_ct A(t1)^2, rho],
    B(t1) = int_0^t1 C(t1 - t2) A(t2) dt2,

and delta P(f) = <f| U0 delta rho_I U0^dagger |f>.  Both time integrals use the
trapezoid rule on a uniform grid, refined by one Richardson step.
"""

from dataclasses import dataclass

import numpy as np

from .bath import KernelTable, discrete_kernel_table, tabulate_kernels, trapezoid_weights
from .errors import ConvergenceError
from .exact_sim import (ModelSpec, check_density_matrix, closed_evolution,
                        evolve_and_reduce, loglog_fit, outcome_distribution)
from .operators import spin_operators


@dataclass(frozen=True)
class BathCorrelation:
    """C(tau) = k_r(tau) - i k_i(tau) tabulated for tau >= 0.

    Negative arguments follow from C(-tau) = conj C(tau).
    """

    tau_grid: np.ndarray
    values: np.ndarray
    counter_term: float = 0.0

    def __post_init__(self):
        tau = np.asarray(self.tau_grid, dtype=float)
        val = np.asarray(self.values, dtype=complex)
        if tau.shape != val.shape or tau[0] != 0:
            raise ValueError("values must match a tau grid starting at 0")
        object.__setattr__(self, "tau_grid", tau)
        object.__setattr__(self, "values", val)

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        if np.max(np.abs(tau)) > self.tau_grid[-1] * (1 + 1e-12):
            raise ValueError("tau outside the correlation table")
        re = np.interp(np.abs(tau), self.tau_grid, self.values.real)
        im = np.interp(np.abs(tau), self.tau_grid, self.values.imag)
        return re + 1j * np.sign(tau) * im

    def scaled(self, factor):
        return BathCorrelation(self.tau_grid, self.values * factor, self.counter_term * factor)


def bath_correlation(kt: KernelTable):
    return BathCorrelation(kt.tau_grid, kt.kr_values - 1j * kt.ki_values, kt.counter_term)


def correlation_from_spectral_density(sd, tau_grid, counter_term=True):
    return bath_correlation(tabulate_kernels(sd, tau_grid, counter_term))


def correlation_from_modes(modes, temperature, tau_grid, counter_term=True):
    omega = np.array([m.omega for m in modes])
    coupling = np.array([m.coupling for m in modes])
    mass = np.array([m.mass for m in modes])
    kt = discrete_kernel_table(omega, coupling, temperature, np.asarray(tau_grid, float), mass)
    corr = bath_correlation(kt)
    return corr if counter_term else BathCorrelation(corr.tau_grid, corr.values, 0.0)


def _coupling_groups(n, topology):
    if topology == "common-bath":
        return [tuple(range(n))]
    if topology == "one-bath-per-spin":
        return [(k,) for k in range(n)]
    raise ValueError(f"unknown topology {topology!r}")


def _delta_rho(system, corrs, groups, rho_i, n_steps):
    """First-order delta rho at t_f (Schroedinger picture) with n_steps trapezoid intervals."""
    t0, tf = system.time_grid[0], system.time_grid[-1]
    grid = np.linspace(t0, tf, n_steps + 1)
    ops = spin_operators(system.n_spins)
    # U0(t_j) from t0, stepping between grid points
    dim = rho_i.shape[0]
    us = np.empty((grid.size, dim, dim), dtype=complex)
    us[0] = np.eye(dim)
    for j in range(n_steps):
        us[j + 1] = system.propagator(grid[j], grid[j + 1]) @ us[j]
    w_outer = trapezoid_weights(grid)
    h = grid[1] - grid[0]
    lags = grid - t0
    out = np.zeros((dim, dim), dtype=complex)
    for corr, group in zip(corrs, groups):
        if corr is None:
            continue
        a_s = sum(ops[k, 2] for k in group)
        a = np.einsum("jba,bc,jcd->jad", us.conj(), a_s, us)  # U^dagger A U
        c_lag = corr(lags)
        # inner trapezoid weights on [t0, t_j] for every j, times C(t_j - t_k)
        idx = np.arange(grid.size)
        diff = idx[:, None] - idx[None, :]
        kern = np.where(diff >= 0, c_lag[np.clip(diff, 0, None)], 0.0) * h
        kern[idx, idx] *= 0.5
        kern[:, 0] *= 0.5
        kern[0, 0] = 0.0
        b = np.einsum("jk,kab->jab", kern, a)
        br = b @ rho_i
        inner = br - br.conj().transpose(0, 2, 1)  # B rho - rho B^dagger
        comm = a @ inner - inner @ a
        out -= np.einsum("j,jab->ab", w_outer, comm)
        if corr.counter_term:
            a2 = a @ a
            c2 = a2 @ rho_i - rho_i @ a2
            out -= 1j * corr.counter_term * np.einsum("j,jab->ab", w_outer, c2)
    u_f = us[-1]
    return u_f @ out @ u_f.conj().T


def perturbative_delta_rho(system, corr, rho_i, topology="one-bath-per-spin", n_steps=400,
                           tol=1e-8):
    """Leading-order correction to the final qubit density matrix.

    ``corr`` is one BathCorrelation (shared by every bath) or a sequence with
    one entry per bath.  Two trapezoid resolutions are combined by Richardson
    extrapolation; a ConvergenceError is raised if they differ by more than
    ``tol`` relative to the correction's size after extrapolation.
    """
    rho_i = check_density_matrix(np.asarray(rho_i, dtype=complex))
    groups = _coupling_groups(system.n_spins, topology)
    corrs = list(corr) if isinstance(corr, (list, tuple)) else [corr] * len(groups)
    if len(corrs) != len(groups):
        raise ValueError("need one correlation per bath")
    coarse = _delta_rho(system, corrs, groups, rho_i, n_steps // 2)
    fine = _delta_rho(system, corrs, groups, rho_i, n_steps)
    best = (4 * fine - coarse) / 3
    scale = max(np.max(np.abs(best)), 1e-300)
    change = np.max(np.abs(best - fine))
    if change > max(tol * scale, 1e-15) and change > 1e-3 * scale:
        raise ConvergenceError("time quadrature not converged; increase n_steps",
                               achieved=change / scale)
    return best


def perturbative_delta_p(system, corr, rho_i, f=None, topology="one-bath-per-spin",
                         n_steps=400, return_imag=False):
    """First-order change of the outcome probabilities P(f).

    Returns the full vector over the 2**n outcomes if ``f`` is None, else the
    entry for outcome index ``f``.  With ``return_imag`` the largest imaginary
    residue of the diagonal is returned too.
    """
    d = perturbative_delta_rho(system, corr, rho_i, topology, n_steps)
    diag = np.diag(d)
    imag = float(np.max(np.abs(diag.imag)))
    val = diag.real if f is None else float(diag.real[f])
    return (val, imag) if return_imag else val


def exact_delta_p(spec: ModelSpec, rho_i):
    noisy = outcome_distribution(evolve_and_reduce(spec, rho_i))
    ideal = outcome_distribution(closed_evolution(spec.system, rho_i))
    return noisy - ideal


def order_comparison(spec: ModelSpec, rho_i, etas, tau_points=None, n_steps=400):
    """Remainder |dP_exact - dP_pert| against the coupling scale factor eta.

    ``spec`` is taken as the eta = 1 model: every C_n is scaled by sqrt(eta),
    so the correlation function is exactly linear in eta.  Returns a dict with
    per-eta rows (eta, remainder, first-order size) and the fitted remainder
    exponent (None if all remainders vanish).
    """
    etas = sorted(float(e) for e in etas)
    if tau_points is None:
        tau_points = n_steps + 1
    duration = spec.system.duration
    tau = np.linspace(0.0, duration, tau_points)
    if spec.topology == "common-bath":
        corrs = correlation_from_modes(spec.modes, spec.temperature, tau, spec.counter_term)
    else:
        corrs = [correlation_from_modes(g, spec.temperature, tau, spec.counter_term)
                 for g in spec.modes]
    rows = []
    for eta in etas:
        scaled = spec.with_coupling_scale(np.sqrt(eta))
        c = corrs.scaled(eta) if isinstance(corrs, BathCorrelation) else [x.scaled(eta) for x in corrs]
        pert = perturbative_delta_p(spec.system, c, rho_i, topology=spec.topology, n_steps=n_steps)
        exact = exact_delta_p(scaled, rho_i)
        rows.append({"eta": eta, "remainder": float(np.max(np.abs(exact - pert))),
                     "first_order": float(np.max(np.abs(pert))),
                     "sum_pert": float(np.sum(pert))})
    rem = [r["remainder"] for r in rows]
    exponent = None
    if any(r > 0 for r in rem) and sum(r > 0 for r in rem) >= 2:
        exponent, _ = loglog_fit(etas, rem)
    return {"rows": rows, "exponent": exponent}


__all__ = ["BathCorrelation", "bath_correlation",
           "correlation_from_modes", "correlation_from_spectral_density", "exact_delta_p",
           "order_comparison", "perturbative_delta_p", "perturbative_delta_rho"]
