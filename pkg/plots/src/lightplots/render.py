"""Turn lightmpo result CSVs into figures.

Consumes only the runner's CSV output (columns method, theta, t_fin, value,
stderr, n_samples); no in-process coupling to the solver package.  Three
figure kinds:

    fi_vs_time     FI/t against t, one curve per (method, theta)
    fi_vs_omega    FI/t against theta at fixed final time, one curve per method
    pulsed_panels  theta^2 * FI against t with a shaded pulse-intensity
                   underlay (second CSV with columns t, profile)

Output is written as both PNG and SVG next to the requested stem, with
fixed style and scrubbed metadata so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

KINDS = ("fi_vs_time", "fi_vs_omega", "pulsed_panels")

REQUIRED = ("method", "theta", "t_fin", "value", "stderr")

# one visual identity per estimator, shared by every kind
STYLE = {
    "mpo_qfi": dict(marker="o", linestyle="-", color="C0", label="MPO-QFI"),
    "pd_cfi": dict(marker="*", linestyle="none", color="C1", markersize=9,
                   label="PD-CFI"),
    "hd_cfi": dict(marker="v", linestyle="none", color="C2", label="HD-CFI"),
    "sub_qfi": dict(marker="", linestyle="-.", color="C3", label="sub-QFI"),
    "tsme_qfi": dict(marker="", linestyle="--", color="C4", label="TSME-QFI"),
}

_RC = {
    "figure.dpi": 120,
    "savefig.dpi": 120,
    "font.size": 10,
    "svg.hashsalt": "lightmpo-plots",
    "axes.grid": True,
    "grid.alpha": 0.3,
}


class PlotError(ValueError):
    pass


def load_results(path):
    """Rows of a results CSV as dicts with numeric fields converted."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise PlotError(f"{path}: empty CSV")
        missing = [c for c in REQUIRED if c not in reader.fieldnames]
        if missing:
            raise PlotError(f"{path}: missing columns {', '.join(missing)}")
        rows = []
        for raw in reader:
            row = dict(raw)
            for col in ("theta", "t_fin", "value", "stderr"):
                row[col] = float(raw[col])
            rows.append(row)
    if not rows:
        raise PlotError(f"{path}: no data rows")
    return rows


def load_profile(path):
    """Pulse-intensity underlay: CSV with columns t, profile."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"t", "profile"} <= set(
            reader.fieldnames
        ):
            raise PlotError(f"{path}: expected columns t, profile")
        pts = [(float(r["t"]), float(r["profile"])) for r in reader]
    if not pts:
        raise PlotError(f"{path}: no data rows")
    return pts


def _series(rows, key):
    """Group rows and sort each group by the given x column."""
    groups = {}
    for row in rows:
        groups.setdefault((row["method"], row["theta"]), []).append(row)
    for g in groups.values():
        g.sort(key=lambda r: r[key])
    return dict(sorted(groups.items()))


def _plot_curve(ax, xs, ys, errs, method, label):
    style = dict(STYLE.get(method, dict(marker=".", linestyle=":", label=method)))
    style.setdefault("label", method)
    if label:
        style["label"] = f"{style['label']} ({label})"
    if any(e > 0 for e in errs):
        ax.errorbar(xs, ys, yerr=errs, capsize=2, **style)
    else:
        ax.plot(xs, ys, **style)


def _fig_fi_vs_time(rows):
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    groups = _series(rows, "t_fin")
    many_theta = len({th for _, th in groups}) > 1
    for (method, theta), g in groups.items():
        xs = [r["t_fin"] for r in g]
        ys = [r["value"] / r["t_fin"] for r in g]
        es = [r["stderr"] / r["t_fin"] for r in g]
        _plot_curve(ax, xs, ys, es, method,
                    f"theta={theta:g}" if many_theta else "")
    ax.set_xlabel(r"$\gamma t$")
    ax.set_ylabel(r"FI$/\gamma t$")
    ax.legend(fontsize=8)
    return fig


def _fig_fi_vs_omega(rows):
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    groups = {}
    for row in rows:
        groups.setdefault((row["method"], row["t_fin"]), []).append(row)
    many_t = len({t for _, t in groups}) > 1
    for (method, t_fin), g in sorted(groups.items()):
        g.sort(key=lambda r: r["theta"])
        xs = [r["theta"] for r in g]
        ys = [r["value"] / r["t_fin"] for r in g]
        es = [r["stderr"] / r["t_fin"] for r in g]
        _plot_curve(ax, xs, ys, es, method,
                    f"t={t_fin:g}" if many_t else "")
    ax.set_xlabel(r"$\Omega/\gamma$")
    ax.set_ylabel(r"FI$/\gamma t$")
    ax.legend(fontsize=8)
    return fig


def _fig_pulsed_panels(rows, profile):
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    for (method, theta), g in _series(rows, "t_fin").items():
        xs = [r["t_fin"] for r in g]
        # per-photon axis scaling: theta is the detected decay rate
        ys = [theta**2 * r["value"] for r in g]
        es = [theta**2 * r["stderr"] for r in g]
        _plot_curve(ax, xs, ys, es, method, "")
    ax.set_xlabel(r"$\Gamma t$")
    ax.set_ylabel(r"$\Gamma^2\,$FI")
    if profile:
        top = max(
            (r["theta"] ** 2 * r["value"] for r in rows), default=1.0
        )
        peak = max(p for _, p in profile) or 1.0
        ts = [t for t, _ in profile]
        ps = [0.35 * top * p / peak for _, p in profile]
        ax.fill_between(ts, 0.0, ps, color="0.75", alpha=0.5, zorder=0,
                        label="pulse profile")
    ax.legend(fontsize=8)
    return fig


def render(csv_paths, kind, out):
    """Write <out>.png and <out>.svg; returns the matplotlib figure."""
    if kind not in KINDS:
        raise PlotError(f"unknown kind {kind!r}; known: {', '.join(KINDS)}")
    paths = [Path(p) for p in csv_paths]
    if not paths:
        raise PlotError("at least one CSV is required")
    rows = load_results(paths[0])
    with plt.rc_context(_RC):
        if kind == "fi_vs_time":
            fig = _fig_fi_vs_time(rows)
        elif kind == "fi_vs_omega":
            fig = _fig_fi_vs_omega(rows)
        else:
            profile = load_profile(paths[1]) if len(paths) > 1 else None
            fig = _fig_pulsed_panels(rows, profile)
        fig.tight_layout()
        stem = Path(out)
        stem.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(stem.with_suffix(".png"))
        fig.savefig(stem.with_suffix(".svg"), metadata={"Date": None})
    plt.close(fig)
    return stem.with_suffix(".png"), stem.with_suffix(".svg")


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="lightmpo-plots",
        description="Render figures from lightmpo result CSVs.",
    )
    parser.add_argument("--csv", nargs="+", required=True,
                        help="results CSV; for pulsed_panels an optional "
                        "second CSV (t, profile) draws the pulse underlay")
    parser.add_argument("--kind", choices=KINDS, required=True)
    parser.add_argument("--out", required=True,
                        help="output stem; .png and .svg are written")
    args = parser.parse_args(argv)
    try:
        png, svg = render(args.csv, args.kind, args.out)
    except (PlotError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {png} and {svg}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
