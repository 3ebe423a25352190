"""Command-line experiment driver: ``fvqerr run|list|validate``.

A run config is a JSON object::

    {"experiment": "kernels", "seed": 1, "output_dir": "out",
     "params": {...}, "tolerances": {...}}

Missing params take the experiment defaults shown by ``fvqerr list``.
"""

import argparse
import copy
import hashlib
import json
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from ._csv import write_csv
from .errors import ConvergenceError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending field."""


def experiment_rng(seed, name):
    """Generator for one experiment derived from the master seed and the experiment name."""
    tag = int.from_bytes(hashlib.sha256(name.encode()).digest()[:8], "little")
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2 ** 64 - 1), tag]))


def _workers():
    return max(1, int(os.environ.get("FVQERR_THREADS", "1")))


def _spectral_density(p):
    from .bath import SpectralDensity
    return SpectralDensity(eta=p["eta"], s=p["s"], omega_c=p["omega_c"], Omega=p["Omega"],
                           cutoff_form=p["cutoff_form"], temperature=p["temperature"])


BATH_DEFAULTS = {"eta": 0.1, "s": 1.0, "omega_c": 1.0, "Omega": 1.0,
                 "cutoff_form": "exponential", "temperature": 0.0}


# -- experiments -----------------------------------------------------------------
# Each takes (params, tolerances, rng, out_dir) and returns (files, summary dict).

def exp_kernels(p, tol, rng, out):
    from .bath import tabulate_kernels
    sd = _spectral_density(p)
    tau = np.linspace(0.0, p["tau_max"] / sd.Omega, p["n_tau"])
    kt = tabulate_kernels(sd, tau)
    path = out / "kernels.csv"
    kt.to_csv(path)
    return [path], {"counter_term": kt.counter_term}


def exp_propagator(p, tol, rng, out):
    from .spin_coherent import (BlochPoint, SpinHamiltonianParams, SphereQuadrature,
                                coherent_propagator, coherent_state_vector,
                                resolution_of_identity_residual)
    cases = []
    for _ in range(p["n_hamiltonians"]):
        mu = rng.normal(size=3)
        duration = rng.uniform(0.1, 1.0) * p["max_norm_time"] / np.linalg.norm(mu)
        th = np.arccos(rng.uniform(-1, 1, 2))
        ph = rng.uniform(0, 2 * np.pi, 2)
        cases.append((SpinHamiltonianParams.constant([mu], duration, n_steps=p["n_steps"]),
                      BlochPoint(th[0], ph[0]), BlochPoint(th[1], ph[1])))
    rows = []
    for n_theta, n_phi in p["resolutions"]:
        q = SphereQuadrature.gauss_legendre(n_theta, n_phi)
        err = 0.0
        for params, pi, pf in cases:
            exact = coherent_state_vector(pf).conj() @ params.propagator() @ coherent_state_vector(pi)
            err = max(err, abs(coherent_propagator(params, q, pi, pf, method="transfer") - exact))
        rows.append((n_theta, n_phi, resolution_of_identity_residual(q), err))
    path = out / "propagator.csv"
    write_csv(path, ["n_theta", "n_phi", "roi_residual", "max_error"], rows)
    return [path], {"max_error_finest": rows[-1][3]}


def _scaling_setup(p):
    from .exact_sim import ScalingSetup
    sd = _spectral_density(p["bath"])
    return ScalingSetup(sd, modes_per_bath=p["modes_per_bath"], levels=p["levels"],
                        scheme=p["scheme"], omega_min=p["omega_min"], omega_max=p["omega_max"],
                        topology=p["topology"], counter_term=p["counter_term"])


def exp_scaling(p, tol, rng, out):
    from .exact_sim import loglog_fit, scaling_experiment
    setup = _scaling_setup(p)
    rows = scaling_experiment(setup, p["ns"], p["ts"], p["etas"], workers=_workers())
    path = out / "scaling.csv"
    write_csv(path, ["n", "t", "eta", "tvd", "dimension"],
              [(r["n"], r["t"], r["eta"], r["tvd"], r["dimension"]) for r in rows])
    fits = []
    for var, others in (("n", ("t", "eta")), ("t", ("n", "eta")), ("eta", ("n", "t"))):
        groups = {}
        for r in rows:
            groups.setdefault(tuple(r[o] for o in others), []).append(r)
        for key, grp in sorted(groups.items()):
            xs = [g[var] for g in grp]
            ys = [g["tvd"] for g in grp]
            if sum(1 for x, y in zip(xs, ys) if x > 0 and y > 0) >= 2:
                slope, r2 = loglog_fit(xs, ys)
                fits.append((var, f"{others[0]}={key[0]};{others[1]}={key[1]}", slope, r2))
    fpath = out / "scaling_fits.csv"
    write_csv(fpath, ["variable", "fixed", "slope", "r_squared"], fits)
    return [path, fpath], {"n_points": len(rows)}


def exp_common_bath(p, tol, rng, out):
    from .bath import common_bath_influence, discrete_kernel_table, influence_action, random_paths
    from .bath import discretize_spectral_density
    from .exact_sim import loglog_fit
    from .spin_coherent import DiscretizedPath
    sd = _spectral_density(p["bath"])
    grid = np.linspace(0.0, p["duration"], p["n_time"])
    omega, coupling = discretize_spectral_density(sd, p["n_modes"])
    kt = discrete_kernel_table(omega, coupling, sd.temperature, grid - grid[0])
    single = random_paths(rng, grid, 1, p["n_paths"], p["knot_spacing"])
    rows = []
    for n in p["n_values"]:
        worst = 0.0
        for path in single:
            rep = lambda a: np.repeat(a, n, axis=1)
            shared = DiscretizedPath(grid, rep(path.theta_f), rep(path.phi_f),
                                     rep(path.theta_b), rep(path.phi_b))
            ref = influence_action(kt, path, 0, counter_term=True).phi * (n * n)
            got = common_bath_influence(kt, shared, counter_term=True).phi
            worst = max(worst, abs(got - ref) / max(abs(ref), 1e-300))
        indep = random_paths(rng, grid, n, p["n_paths"], p["knot_spacing"])
        scaled = kt.scaled(1.0 / n ** 2)
        mean_abs = float(np.mean([abs(common_bath_influence(scaled, q).phi) for q in indep]))
        rows.append((n, worst, mean_abs))
    slope, _ = loglog_fit([r[0] for r in rows], [r[2] for r in rows])
    path = out / "common_bath.csv"
    write_csv(path, ["n", "shared_path_rel_error", "mean_abs_phi_rescaled"], rows)
    fpath = out / "common_bath_fit.csv"
    write_csv(fpath, ["variable", "slope"], [("n", slope)])
    return [path, fpath], {"rescaled_exponent": slope}


def exp_toric(p, tol, rng, out):
    from .bath import SpectralDensity
    from .toric import (LOGICAL_LABELS, Sector, TorusLattice, codeword_basis, fv_kitaev_estimate,
                        knill_laflamme_check, q_matrix, q_model_matrix, recovery_sweep,
                        single_qubit_errors, write_q_table)
    q_rows, summary = [], []
    sd = SpectralDensity(eta=p["eta"])
    for N, M in p["lattices"]:
        lat = TorusLattice(N, M)
        basis = codeword_basis(lat)
        qm = q_matrix(basis)
        for a, lp in enumerate(LOGICAL_LABELS):
            for b, l in enumerate(LOGICAL_LABELS):
                q_rows.append((f"{N}x{M}:" + basis.sector.label(), l, lp, qm[a, b]))
        m = Sector.ground(lat)
        v1, v2 = lat.edge_endpoints(0)
        mp = m.flipped(stars=[v1, v2])
        qmod = q_model_matrix(lat, m, mp, edges=0)
        for a, lp in enumerate(LOGICAL_LABELS):
            for b, l in enumerate(LOGICAL_LABELS):
                q_rows.append((f"{N}x{M}:edge0:" + mp.label(), l, lp, qmod[a, b]))
        gram = float(np.max(np.abs(basis.gram() - np.eye(4))))
        fmin, _ = recovery_sweep(lat)
        kl = knill_laflamme_check(lat, single_qubit_errors(lat))
        est = fv_kitaev_estimate(qm, sd, p["duration"], rng, p["n_angles"])
        est_model = fv_kitaev_estimate(qmod, sd, p["duration"], rng, p["n_angles"])
        summary.append((N, M, gram, float(np.max(np.abs(qm))), float(np.max(np.abs(qmod))),
                        est, est_model, fmin, int(kl.passed)))
    qpath = out / "toric_q.csv"
    write_q_table(qpath, q_rows)
    spath = out / "toric_summary.csv"
    write_csv(spath, ["N", "M", "gram_error", "max_abs_q_sector", "max_abs_q_model_edge",
                      "phi_estimate_sector", "phi_estimate_model", "min_recovery_fidelity",
                      "knill_laflamme_pass"], summary)
    return [qpath, spath], {}


def exp_channels(p, tol, rng, out):
    from .channels import (depolarize, depolarizing_pauli_probs, kalai_error_rate,
                           pauli_channel, single_flip_distribution)
    err = 0.0
    for _ in range(p["n_states"]):
        a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        rho = a @ a.conj().T
        rho /= np.trace(rho)
        err = max(err, float(np.max(np.abs(
            depolarize(p["p"], rho) - pauli_channel(depolarizing_pauli_probs(p["p"]), rho)))))
    rep = kalai_error_rate(single_flip_distribution(p["n"], p["eps"]), p["n"])
    path = out / "channels.csv"
    write_csv(path, ["quantity", "value"],
              [("depolarizing_pauli_max_diff", err), ("kalai_total_error", rep.total_error),
               ("kalai_per_qubit", rep.per_qubit), ("tvd", rep.tvd)])
    return [path], {}


def exp_weak_coupling_order(p, tol, rng, out):
    from .exact_sim import BathMode, ModelSpec
    from .spin_coherent import SpinHamiltonianParams
    from .weak_coupling import order_comparison
    system = SpinHamiltonianParams.constant([p["mu"]], p["duration"])
    spec = ModelSpec(system, ((BathMode(p["omega"], p["coupling"], p["levels"]),),),
                     temperature=p["temperature"])
    rho = np.zeros((2, 2), dtype=complex)
    rho[0, 0] = 1.0
    rep = order_comparison(spec, rho, p["etas"], n_steps=p["n_steps"])
    path = out / "weak_coupling.csv"
    write_csv(path, ["eta", "remainder", "first_order", "sum_pert"],
              [(r["eta"], r["remainder"], r["first_order"], r["sum_pert"]) for r in rep["rows"]])
    fpath = out / "weak_coupling_fit.csv"
    write_csv(fpath, ["variable", "exponent"],
              [("eta", rep["exponent"] if rep["exponent"] is not None else "nan")])
    return [path, fpath], {"exponent": rep["exponent"]}


EXPERIMENTS = {
    "kernels": (exp_kernels, "Tabulate k_i and k_r of a spectral density",
                dict(BATH_DEFAULTS, tau_max=20.0, n_tau=201)),
    "propagator": (exp_propagator, "Coherent-state propagator error versus quadrature resolution",
                   {"n_hamiltonians": 20, "n_steps": 4, "max_norm_time": float(np.pi),
                    "resolutions": [[4, 8], [8, 16], [16, 32], [32, 64]]}),
    "scaling": (exp_scaling, "TVD sweep over qubit number, duration and coupling",
                {"bath": dict(BATH_DEFAULTS, s=0.0), "modes_per_bath": 3, "levels": 2,
                 "scheme": "log-gauss-legendre", "omega_min": 1e-3, "omega_max": 5.0,
                 "topology": "one-bath-per-spin", "counter_term": True,
                 "ns": [1, 2, 3], "ts": [10.0], "etas": [0.0, 0.005, 0.01]}),
    "common-bath": (exp_common_bath, "Shared-bath influence action: n^2 identity and C/n rescaling",
                    {"bath": dict(BATH_DEFAULTS, eta=0.05), "n_modes": 40, "duration": 10.0,
                     "n_time": 101, "knot_spacing": 1.0, "n_paths": 16,
                     "n_values": [1, 2, 4, 8]}),
    "toric": (exp_toric, "Toric-code Q matrices, recovery and Knill-Laflamme checks",
              {"lattices": [[2, 2], [2, 3], [3, 3]], "eta": 0.1, "duration": 10.0,
               "n_angles": 64}),
    "channels": (exp_channels, "Depolarizing/Pauli equivalence and Kalai error rate",
                 {"n_states": 100, "p": 0.3, "n": 4, "eps": 0.01}),
    "weak-coupling-order": (exp_weak_coupling_order,
                            "Remainder of the first-order bath correction versus eta",
                            {"omega": 1.3, "coupling": 1.0, "levels": 6, "temperature": 0.0,
                             "mu": [1.0, 0.0, 0.4], "duration": 4.0,
                             "etas": [1e-3, 3e-3, 1e-2], "n_steps": 400}),
}


def list_experiments():
    """Catalog {name: {"description", "defaults"}} in sorted order."""
    return {name: {"description": desc, "defaults": copy.deepcopy(defaults)}
            for name, (_, desc, defaults) in sorted(EXPERIMENTS.items())}


def _merge(defaults, given, prefix):
    out = copy.deepcopy(defaults)
    for key, val in given.items():
        if key not in defaults:
            raise ConfigError(f"{prefix}{key}: unknown parameter")
        if isinstance(defaults[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"{prefix}{key}: expected an object")
            out[key] = _merge(defaults[key], val, f"{prefix}{key}.")
        else:
            ref = defaults[key]
            if isinstance(ref, bool) and not isinstance(val, bool):
                raise ConfigError(f"{prefix}{key}: expected a boolean")
            if isinstance(ref, (int, float)) and not isinstance(ref, bool) and \
                    (isinstance(val, bool) or not isinstance(val, (int, float))):
                raise ConfigError(f"{prefix}{key}: expected a number")
            if isinstance(ref, list) and not isinstance(val, list):
                raise ConfigError(f"{prefix}{key}: expected a list")
            if isinstance(ref, str) and not isinstance(val, str):
                raise ConfigError(f"{prefix}{key}: expected a string")
            out[key] = val
    return out


def validate_config(cfg):
    """Normalized config with defaults filled in; raises ConfigError."""
    if not isinstance(cfg, dict):
        raise ConfigError("config: expected a JSON object")
    allowed = {"experiment", "seed", "output_dir", "params", "tolerances"}
    for key in cfg:
        if key not in allowed:
            raise ConfigError(f"{key}: unknown top-level field")
    name = cfg.get("experiment")
    if name not in EXPERIMENTS:
        raise ConfigError(f"experiment: unknown experiment {name!r}")
    seed = cfg.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise ConfigError("seed: expected a 64-bit non-negative integer")
    out_dir = cfg.get("output_dir", f"fvqerr-{name}")
    if not isinstance(out_dir, str):
        raise ConfigError("output_dir: expected a string")
    tol = cfg.get("tolerances", {})
    if not isinstance(tol, dict) or any(not isinstance(v, (int, float)) for v in tol.values()):
        raise ConfigError("tolerances: expected an object of numbers")
    params = cfg.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("params: expected an object")
    merged = _merge(EXPERIMENTS[name][2], params, "params.")
    return {"experiment": name, "seed": seed, "output_dir": out_dir, "params": merged,
            "tolerances": dict(tol)}


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run(cfg):
    """Run one experiment; returns the manifest dict.  Raises ConfigError or ConvergenceError."""
    cfg = validate_config(cfg)
    out = Path(cfg["output_dir"])
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"output_dir: cannot create ({exc})") from exc
    func = EXPERIMENTS[cfg["experiment"]][0]
    rng = experiment_rng(cfg["seed"], cfg["experiment"])
    start = time.perf_counter()
    try:
        files, summary = func(cfg["params"], cfg["tolerances"], rng, out)
    except (ValueError, TypeError, KeyError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"params: {exc}") from exc
    manifest = {
        "config": cfg,
        "tool_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "threads": _workers(),
        "wall_time_s": time.perf_counter() - start,
        "summary": summary,
        "files": {Path(f).name: _sha256(f) for f in files},
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
    return manifest


def _load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"config: cannot read {path} ({exc})") from exc


def main(argv=None):
    parser = argparse.ArgumentParser(prog="fvqerr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment from a JSON config")
    p_run.add_argument("config")
    p_run.add_argument("--output-dir", help="override output_dir from the config")
    sub.add_parser("list", help="list experiments and their default parameters")
    p_val = sub.add_parser("validate", help="check a config without running it")
    p_val.add_argument("config")
    args = parser.parse_args(argv)

    try:
        if args.command == "list":
            json.dump(list_experiments(), sys.stdout, indent=2, sort_keys=True)
            sys.stdout.write("\n")
            return EXIT_OK
        cfg = _load(args.config)
        if args.command == "validate":
            norm = validate_config(cfg)
            print(f"ok: {norm['experiment']}")
            return EXIT_OK
        if args.output_dir:
            cfg = dict(cfg, output_dir=args.output_dir)
        manifest = run(cfg)
        for name, digest in manifest["files"].items():
            print(f"{name} {digest}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
