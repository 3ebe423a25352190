"""Unital qubit channels, random-unitary mixtures and error-rate bookkeeping."""

from dataclasses import dataclass
import itertools
import json
import warnings

import numpy as np
from scipy import stats

from .exact_sim import DistributionPair, outcome_distribution, tvd
from .operators import PAULI

PAULIS = (PAULI["I"], PAULI["X"], PAULI["Y"], PAULI["Z"])
DEGENERATE_MIXTURE = 1e-8


def _check_probs(probs, tol=1e-12):
    probs = np.asarray(probs, dtype=float)
    if np.any(probs < 0) or abs(probs.sum() - 1) > tol:
        raise ValueError("probabilities must be non-negative and sum to 1")
    return probs


@dataclass(frozen=True)
class KrausChannel:
    kraus: tuple

    def __post_init__(self):
        ks = tuple(np.asarray(k, dtype=complex) for k in self.kraus)
        dim = ks[0].shape[0]
        total = sum(k.conj().T @ k for k in ks)
        if np.max(np.abs(total - np.eye(dim))) > 1e-12:
            raise ValueError("Kraus operators are not trace preserving")
        object.__setattr__(self, "kraus", ks)

    def __call__(self, rho):
        return sum(k @ rho @ k.conj().T for k in self.kraus)

    @property
    def is_unital(self):
        dim = self.kraus[0].shape[0]
        return np.max(np.abs(self(np.eye(dim) / dim) - np.eye(dim) / dim)) < 1e-12


@dataclass(frozen=True)
class UnitaryMixture:
    """rho -> sum_a p_a V_a rho V_a^dagger, optionally with a per-branch influence action."""

    probs: tuple
    unitaries: tuple
    actions: tuple = None

    def __post_init__(self):
        probs = _check_probs(self.probs)
        us = tuple(np.asarray(u, dtype=complex) for u in self.unitaries)
        if len(us) != probs.size:
            raise ValueError("one unitary per probability")
        for u in us:
            if np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) > 1e-12:
                raise ValueError("branch operator is not unitary")
        object.__setattr__(self, "probs", tuple(probs))
        object.__setattr__(self, "unitaries", us)
        if self.actions is not None:
            acts = tuple(complex(a) for a in self.actions)
            if len(acts) != probs.size:
                raise ValueError("one influence action per branch")
            object.__setattr__(self, "actions", acts)

    def channel(self):
        return KrausChannel(tuple(np.sqrt(p) * u for p, u in zip(self.probs, self.unitaries)))

    def __call__(self, rho):
        return sum(p * u @ rho @ u.conj().T for p, u in zip(self.probs, self.unitaries))


def depolarize(p, rho):
    """(1 - p) rho + p * 1/2 on one qubit."""
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    rho = np.asarray(rho, dtype=complex)
    return (1 - p) * rho + p * np.trace(rho) * np.eye(2) / 2


def pauli_channel(probs, rho):
    """p_0 rho + sum_i p_i sigma_i rho sigma_i."""
    probs = _check_probs(probs)
    if probs.size != 4:
        raise ValueError("need four probabilities (I, X, Y, Z)")
    rho = np.asarray(rho, dtype=complex)
    return sum(p * s @ rho @ s for p, s in zip(probs, PAULIS))


def depolarizing_pauli_probs(p):
    return (1 - 3 * p / 4, p / 4, p / 4, p / 4)


def mixture_influence_action(mix, degenerate_tol=DEGENERATE_MIXTURE):
    """(1/i) log sum_a p_a exp(i Phi_a) on the principal branch.

    Raises ValueError when the sum vanishes to rounding precision and warns when it is within
    ``degenerate_tol`` of zero (near-complete cancellation between branches).
    """
    if mix.actions is None:
        raise ValueError("mixture has no branch influence actions")
    terms = [p * np.exp(1j * a) for p, a in zip(mix.probs, mix.actions) if p > 0]
    total = sum(terms)
    # a sum at the rounding floor of its terms is indistinguishable from exact cancellation
    if abs(total) <= 4 * np.finfo(float).eps * sum(abs(t) for t in terms):
        raise ValueError("branch phases cancel exactly; the mixture action is undefined")
    if abs(total) < degenerate_tol:
        warnings.warn(f"near-degenerate mixture: |sum p e^(i Phi)| = {abs(total):.3e}",
                      RuntimeWarning, stacklevel=2)
    return complex(-1j * np.log(total))


def mixture_tvd(mix, rho_i, p_ideal, u_ideal=None):
    """TVD between the outcome distribution of mix(U rho_i U^dagger) and ``p_ideal``."""
    rho = np.asarray(rho_i, dtype=complex)
    if u_ideal is not None:
        rho = u_ideal @ rho @ u_ideal.conj().T
    p = outcome_distribution(mix(rho))
    return tvd(DistributionPair(p, p_ideal))


def first_order_mixture_tvd(probs, delta_ps):
    """sum_f |sum_a p_a dP_a(f)| from per-branch first-order corrections."""
    return float(np.sum(np.abs(np.tensordot(np.asarray(probs), np.asarray(delta_ps), axes=1))))


@dataclass(frozen=True)
class KalaiReport:
    total_error: float
    per_qubit: float
    tvd: float
    out_of_class_mass: float

    @property
    def single_error_class(self):
        return self.out_of_class_mass <= 1e-12


def kalai_error_rate(d: DistributionPair, n=None):
    """Total error eps' = TVD/2 and per-qubit rate eps'/n.

    The ideal distribution must be a point mass.  Noisy mass farther than one
    bit flip from the ideal outcome is still counted in eps' and reported as
    out-of-class mass.
    """
    n = d.n_bits if n is None else n
    ideal = d.p_ideal
    if np.count_nonzero(ideal > 1e-12) != 1 or abs(ideal.max() - 1) > 1e-10:
        raise ValueError("ideal distribution must be a point mass")
    f0 = int(np.argmax(ideal))
    idx = np.arange(ideal.size)
    hamming = np.bitwise_count((idx ^ f0).astype(np.uint64))
    far = float(np.sum(d.p_noisy[hamming > 1]))
    t = tvd(d)
    return KalaiReport(t / 2, t / 2 / n, t, far)


def single_flip_distribution(n, eps, ideal_index=0):
    """Noisy distribution with mass eps on each single flip of the ideal outcome."""
    p = np.zeros(2 ** n)
    p[ideal_index] = 1 - n * eps
    for k in range(n):
        p[ideal_index ^ (1 << k)] += eps
    ideal = np.zeros(2 ** n)
    ideal[ideal_index] = 1
    return DistributionPair(p, ideal)


@dataclass(frozen=True)
class PowerLawFit:
    alpha: float
    alpha_low: float
    alpha_high: float
    r_squared: float
    n_points: int


def quadratic_hypothesis_test(ns, tvds, confidence=0.95):
    """Fit TVD ~ n**alpha by least squares in log-log space with a t interval on alpha."""
    ns = np.asarray(ns, dtype=float)
    tvds = np.asarray(tvds, dtype=float)
    keep = (ns > 0) & (tvds > 0)
    if np.unique(ns[keep]).size < 3:
        raise ValueError("need at least three distinct n with positive TVD")
    res = stats.linregress(np.log(ns[keep]), np.log(tvds[keep]))
    dof = int(keep.sum()) - 2
    half = stats.t.ppf(0.5 + confidence / 2, dof) * res.stderr if dof > 0 else np.inf
    return PowerLawFit(float(res.slope), float(res.slope - half), float(res.slope + half),
                       float(res.rvalue ** 2), int(keep.sum()))


def channel_from_json(text):
    """KrausChannel or UnitaryMixture from JSON.

    Accepted forms: {"pauli": [p0, p1, p2, p3]}, {"depolarizing": p},
    {"mixture": [{"p": .., "pauli": "XZ..."} or {"p": .., "matrix": [[re, im], ...]}]}
    and {"kraus": [matrix, ...]} with matrices as nested [re, im] pairs.
    """
    d = json.loads(text) if isinstance(text, str) else text

    def matrix(m):
        arr = np.asarray(m, dtype=float)
        return arr[..., 0] + 1j * arr[..., 1]

    def named(label):
        out = np.array([[1.0 + 0j]])
        for ch in label:
            out = np.kron(out, PAULI[ch])
        return out

    if "depolarizing" in d:
        return UnitaryMixture(depolarizing_pauli_probs(float(d["depolarizing"])), PAULIS)
    if "pauli" in d:
        return UnitaryMixture(tuple(d["pauli"]), PAULIS)
    if "mixture" in d:
        branches = d["mixture"]
        us = [named(b["pauli"]) if "pauli" in b else matrix(b["matrix"]) for b in branches]
        acts = [complex(*b["action"]) if isinstance(b.get("action"), list) else b["action"]
                for b in branches] if all("action" in b for b in branches) else None
        return UnitaryMixture(tuple(b["p"] for b in branches), tuple(us), acts)
    if "kraus" in d:
        return KrausChannel(tuple(matrix(k) for k in d["kraus"]))
    raise ValueError("unrecognized channel specification")


def n_qubit_pauli_strings(n):
    """All 4**n Pauli products on n qubits as (label, matrix)."""
    for labels in itertools.product("IXYZ", repeat=n):
        mat = np.array([[1.0 + 0j]])
        for ch in labels:
            mat = np.kron(mat, PAULI[ch])
        yield "".join(labels), mat
