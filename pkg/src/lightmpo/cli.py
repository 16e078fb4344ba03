"""Command-line driver.

Reads a YAML job description, runs the requested estimators over a grid of
(theta, t_fin) points, and writes delimited output: a combined results.csv
plus one CSV per method with method-specific columns.  Subcommands:

    lightmpo validate -c job.yaml        check a config without running it
    lightmpo run -c job.yaml [-o DIR]    execute the job
    lightmpo oracle-check [-n BINS]      dense small-system self-test
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np
import yaml

from .emitter import GaussianPulse, build_pulsed_model, build_rabi_model
from .mpo import build_deriv_mpo, build_light_mpo, mpo_trace
from .oracle import dense_light_state, exact_qfi
from .qfi import QfiOptions, compute_qfi
from .subqfi import sub_qfi
from .trajectories import HD, PD, estimate_cfi, simulate_batch
from .tsme import tsme_qfi

METHODS = ("mpo_qfi", "sub_qfi", "tsme_qfi", "pd_cfi", "hd_cfi")

_DEFAULTS = {
    "seed": 0,
    "dt": 0.05,
    "out": "results",
    "methods": ["mpo_qfi"],
    "solver": {},
    "subqfi": {},
    "tsme": {},
    "trajectories": {},
}


class ConfigError(ValueError):
    pass


def load_config(path):
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ConfigError("config must be a YAML mapping")
    cfg = dict(_DEFAULTS)
    cfg.update(raw)
    return validate_config(cfg)


def validate_config(cfg):
    case = cfg.get("case")
    if case not in ("rabi", "pulsed"):
        raise ConfigError("case must be 'rabi' or 'pulsed'")
    model = cfg.get("model")
    if not isinstance(model, dict):
        raise ConfigError("model section is required")
    required = {"rabi": ("gamma", "eta"), "pulsed": ("gamma_perp", "n_mean", "pulse_T", "pulse_center")}
    for key in required[case]:
        if key not in model:
            raise ConfigError(f"model.{key} is required for case {case!r}")
    grid = cfg.get("grid") or {}
    thetas = grid.get("theta")
    if thetas is None:
        raise ConfigError("grid.theta is required (list of parameter values)")
    t_fins = grid.get("t_fin")
    if t_fins is None:
        raise ConfigError("grid.t_fin is required (list of final times)")
    cfg["grid"] = {
        "theta": [float(x) for x in np.atleast_1d(thetas)],
        "t_fin": [float(x) for x in np.atleast_1d(t_fins)],
    }
    if not cfg["methods"]:
        raise ConfigError("methods must name at least one estimator")
    for m in cfg["methods"]:
        if m not in METHODS:
            raise ConfigError(f"unknown method {m!r}; known: {', '.join(METHODS)}")
    dt = float(cfg["dt"])
    if dt <= 0:
        raise ConfigError("dt must be positive")
    for t_fin in cfg["grid"]["t_fin"]:
        n = t_fin / dt
        if abs(n - round(n)) > 1e-9 * max(1.0, n):
            raise ConfigError(f"t_fin={t_fin} is not an integer multiple of dt={dt}")
    return cfg


def build_model(cfg, theta):
    """Instantiate the emitter for one grid point; theta is the Rabi drive
    for the driven case and the detected decay rate for the pulsed case."""
    m = cfg["model"]
    if cfg["case"] == "rabi":
        return build_rabi_model(theta, float(m["gamma"]), float(m["eta"]))
    pulse = GaussianPulse(
        T=float(m["pulse_T"]), t_c=float(m["pulse_center"]), n_mean=float(m["n_mean"])
    )
    return build_pulsed_model(theta, float(m["gamma_perp"]), pulse)


def _fd_scale(theta):
    return 1e-3 * max(abs(theta), 1.0)


def _point_seed(seed, method_idx, grid_idx):
    return int(np.random.SeedSequence([seed, method_idx, grid_idx]).generate_state(1)[0])


def _fmt(x):
    return f"{x:.12g}"


def run_job(cfg, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dt = float(cfg["dt"])
    seed = int(cfg["seed"])
    rows = []
    extras = {m: [] for m in cfg["methods"]}
    points = [
        (theta, t_fin)
        for theta in cfg["grid"]["theta"]
        for t_fin in cfg["grid"]["t_fin"]
    ]
    for mi, method in enumerate(cfg["methods"]):
        for gi, (theta, t_fin) in enumerate(points):
            model = build_model(cfg, theta)
            pseed = _point_seed(seed, mi, gi)
            if method == "mpo_qfi":
                sol = dict(cfg["solver"])
                sol.setdefault("seed", pseed)
                opts = QfiOptions(**sol)
                rho = build_light_mpo(model, theta, t_fin, dt)
                drho = build_deriv_mpo(model, theta, _fd_scale(theta), t_fin, dt)
                res = compute_qfi(rho, drho, opts)
                rows.append((method, theta, t_fin, res.value, res.restart_spread,
                             len(res.restart_values)))
                extras[method].append({
                    "theta": theta, "t_fin": t_fin,
                    "bond_dim_max": opts.bond_dim_max,
                    "restarts": opts.restarts, "qfi": res.value,
                    "spread": res.restart_spread,
                    "converged": int(res.converged),
                })
            elif method == "sub_qfi":
                eps = float(cfg["subqfi"].get("eps", _fd_scale(theta)))
                res = sub_qfi(model, theta, eps, t_fin, dt,
                              symmetric=bool(cfg["subqfi"].get("symmetric", False)))
                rows.append((method, theta, t_fin, res.value, 0.0, 1))
                extras[method].append({
                    "theta": theta, "t_fin": t_fin, "eps": eps,
                    "subqfi": res.value_raw,
                    "subqfi_richardson": res.value,
                    "tr12": res.hs_overlap,
                    "purity1": res.purity, "purity2": res.purity_shifted,
                })
            elif method == "tsme_qfi":
                eps = float(cfg["tsme"].get("eps", _fd_scale(theta)))
                dt_ode = float(cfg["tsme"].get("dt_ode", dt / 10.0))
                res = tsme_qfi(model, theta, eps, t_fin, dt_ode)
                rows.append((method, theta, t_fin, res.value, 0.0, 1))
                extras[method].append({
                    "theta": theta, "t_fin": t_fin, "eps": eps,
                    "fidelity": res.fidelity,
                    "tsme_qfi": res.value,
                })
            else:  # pd_cfi / hd_cfi
                tr = cfg["trajectories"]
                n_traj = int(tr.get("n_traj", 500))
                dt_traj = float(tr.get("dt", dt / 10.0))
                phi = float(tr.get("phi", 0.0))
                kind = PD if method == "pd_cfi" else HD
                records, _ = simulate_batch(
                    model, theta, kind, t_fin, dt_traj, pseed, n_traj, phi=phi
                )
                est = estimate_cfi(records)
                rows.append((method, theta, t_fin, est.cfi, est.stderr, est.n_traj))
                extras[method].append({
                    "theta": theta, "t_fin": t_fin, "method": kind,
                    "cfi": est.cfi, "stderr": est.stderr, "n_traj": est.n_traj,
                })

    with open(out / "results.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "theta", "t_fin", "value", "stderr", "n_samples"])
        for method, theta, t_fin, value, err, n in rows:
            w.writerow([method, _fmt(theta), _fmt(t_fin), _fmt(value), _fmt(err), n])
    for method, recs in extras.items():
        if not recs:
            continue
        with open(out / f"{method}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            cols = list(recs[0])
            w.writerow(cols)
            for r in recs:
                w.writerow([_fmt(r[c]) if isinstance(r[c], float) else r[c]
                            for c in cols])
    return rows


def oracle_check(n_bins=6, dt=0.05, omega=0.3, eta=0.5, stream=None):
    """Compare the tensor-network pipeline against dense linear algebra on a
    small problem; prints one pass/fail line per check and returns success."""
    if stream is None:
        stream = sys.stdout
    model = build_rabi_model(omega, 1.0, eta)
    t_fin = n_bins * dt
    ok = True

    def report(name, passed, detail):
        nonlocal ok
        ok = ok and passed
        stream.write(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}\n")

    rho_mpo = build_light_mpo(model, omega, t_fin, dt)
    rho = dense_light_state(model, omega, n_bins, dt)
    diff = np.abs(rho_mpo.to_dense() - rho).max()
    report("mpo-vs-dense state", diff < 1e-10, f"max abs diff {diff:.3e}")

    # first-order Kraus sets are trace preserving only to O(dt^2) per bin
    tr = mpo_trace(rho_mpo)
    tr_tol = n_bins * dt**2
    report("state trace", abs(tr - 1.0) < tr_tol,
           f"trace {tr:.12f} (tol {tr_tol:.1e})")

    delta = _fd_scale(omega)
    drho_mpo = build_deriv_mpo(model, omega, delta, t_fin, dt)
    drho = (
        dense_light_state(model, omega + delta, n_bins, dt)
        - dense_light_state(model, omega - delta, n_bins, dt)
    ) / (2.0 * delta)
    diff = np.abs(drho_mpo.to_dense() - drho).max()
    report("derivative mpo", diff < 1e-8, f"max abs diff {diff:.3e}")

    q_exact, _ = exact_qfi(rho, drho)
    opts = QfiOptions(restarts=3, bond_dim_max=4, seed=7)
    q_var = compute_qfi(rho_mpo, drho_mpo, opts).value
    rel = abs(q_var - q_exact) / max(q_exact, 1e-30)
    report("variational qfi", rel < 2e-2,
           f"variational {q_var:.6f} vs exact {q_exact:.6f} (rel {rel:.2e})")
    return ok


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="lightmpo",
        description="Fisher information of temporally multimode emitted light.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_val = sub.add_parser("validate", help="check a job config")
    p_val.add_argument("-c", "--config", required=True)

    p_run = sub.add_parser("run", help="execute a job config")
    p_run.add_argument("-c", "--config", required=True)
    p_run.add_argument("-o", "--out", default=None,
                       help="output directory (overrides config 'out')")
    p_run.add_argument("--seed", type=int, default=None)

    p_or = sub.add_parser("oracle-check",
                          help="dense cross-check of the tensor pipeline")
    p_or.add_argument("-n", "--bins", type=int, default=6)
    p_or.add_argument("--dt", type=float, default=0.05)

    args = parser.parse_args(argv)
    if args.command == "validate":
        try:
            load_config(args.config)
        except ConfigError as exc:
            print(f"invalid: {exc}", file=sys.stderr)
            return 1
        print("ok")
        return 0
    if args.command == "run":
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
        out = args.out or cfg["out"]
        rows = run_job(cfg, out)
        for method, theta, t_fin, value, err, n in rows:
            print(f"{method} theta={theta:g} t_fin={t_fin:g} -> {value:.6g}"
                  + (f" +- {err:.2g}" if err else ""))
        print(f"wrote {Path(out) / 'results.csv'}")
        return 0
    if args.command == "oracle-check":
        return 0 if oracle_check(n_bins=args.bins, dt=args.dt) else 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
