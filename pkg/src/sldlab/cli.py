"""Command-line interface: simulate sweeps, fit power laws, plot, reproduce.

Exit codes: 0 success, 1 runtime/numerical failure, 2 usage error.  Every
run that writes files also writes a JSON manifest recording the command
line, the configuration, the base seed, the package version, and the list
of outputs.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import SldlabError, UsageError
from .model import ModelParams
from .powerlaw import (
    PowerLawFit,
    SegmentedFit,
    fit_excess_powerlaw,
    fit_powerlaw,
    fit_segmented,
)
from .presets import Preset, load_preset
from .risk import optimal_risk
from .svgplot import FitOverlay, PlotSeries, render_scaling_plot
from .sweep import (
    RiskCurve,
    SweepConfig,
    default_train_grid,
    read_curve_csv,
    read_series_csv,
    run_sweep,
    write_curve_csv,
)
from .rng import derive_seed

_ENV_BASE_SEED = "SLDLAB_BASE_SEED"

_FITS_HEADER = [
    "source",
    "series",
    "mode",
    "segment",
    "alpha",
    "log_beta",
    "r_squared",
    "sse",
    "region_lo",
    "region_hi",
    "n_points",
    "n_dropped",
    "floor",
    "size_lo",
    "size_hi",
    "break_size",
    "sse_improvement",
    "breakpoint_evidence",
]


# =====================================================================
# Argument parsing helpers
# =====================================================================


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _nonneg_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not (math.isfinite(value) and value >= 0):
        raise argparse.ArgumentTypeError(f"expected a finite value >= 0, got {text!r}")
    return value


def _grid_arg(text: str) -> tuple[int, int, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"grid must be lo:hi:points_per_decade, got {text!r}"
        )
    try:
        lo, hi, ppd = (int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid fields must be integers, got {text!r}")
    return lo, hi, ppd


def _estimators_arg(text: str) -> tuple[str, ...]:
    names = tuple(p.strip().upper() for p in text.split(",") if p.strip())
    if not names:
        raise argparse.ArgumentTypeError("estimator list is empty")
    return names


def _threads_arg(text: str) -> int:
    if text.strip().lower() == "max":
        return os.cpu_count() or 1
    return _positive_int(text)


def _floor_arg(text: str) -> str | float:
    lowered = text.strip().lower()
    if lowered in ("auto", "none"):
        return lowered
    return _nonneg_float(text)


def _resolve_base_seed(value: int | None) -> int:
    if value is not None:
        return value
    raw = os.environ.get(_ENV_BASE_SEED)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{_ENV_BASE_SEED} must be an integer, got {raw!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sldlab",
        description="Subspace-denoising laboratory: simulated risk sweeps and power-law fits.",
    )
    parser.add_argument("--version", action="version", version=f"sldlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a seeded risk sweep and write a curve CSV")
    sim.add_argument("--d", type=_positive_int, default=10, help="signal dimension (default 10)")
    sim.add_argument("--n", type=_positive_int, default=1000, help="ambient dimension (default 1000)")
    sim.add_argument("--sigma", type=_nonneg_float, default=0.1, help="noise std (default 0.1)")
    sim.add_argument(
        "--grid", type=_grid_arg, default=(1, 20000, 5), metavar="LO:HI:PPD",
        help="train-size grid as lo:hi:points_per_decade (default 1:20000:5)",
    )
    sim.add_argument("--seeds", type=_positive_int, default=5, help="seeds per cell (default 5)")
    sim.add_argument(
        "--est", type=_estimators_arg, default=("ESGD", "PCA"),
        help="comma list from opt,pca,esgd,pinv (default esgd,pca)",
    )
    sim.add_argument("--mc-test", type=int, default=0, metavar="M",
                     help="also estimate risks on M Monte-Carlo test points (default 0 = off)")
    sim.add_argument("--threads", type=_threads_arg, default=1, help="worker processes, or 'max'")
    sim.add_argument("--base-seed", type=int, default=None,
                     help=f"base seed (default: ${_ENV_BASE_SEED} or 0)")
    sim.add_argument("--out", required=True, help="output curve CSV path")
    sim.set_defaults(func=_cmd_simulate)

    fit = sub.add_parser("fit", help="fit power laws to a curve CSV column")
    fit.add_argument("--in", dest="infile", required=True, help="input curve CSV")
    fit.add_argument("--col", default=None, help="value column (default: the only one)")
    fit.add_argument("--mode", choices=("single", "excess", "segmented"), default="single")
    fit.add_argument("--floor", type=_floor_arg, default="none",
                     help="'auto' (= sigma^2/(1+sigma^2), needs --sigma), 'none', or a number")
    fit.add_argument("--sigma", type=_nonneg_float, default=None,
                     help="noise std used by --floor auto")
    fit.add_argument("--min-seg", type=_positive_int, default=3,
                     help="minimum points per segment for --mode segmented (default 3)")
    fit.add_argument("--out", default=None, help="optional fits CSV path")
    fit.set_defaults(func=_cmd_fit)

    plot = sub.add_parser("plot", help="render a curve CSV (plus optional fits) to SVG")
    plot.add_argument("--in", dest="infile", required=True, help="input curve CSV")
    plot.add_argument("--fits", default=None, help="fits CSV to overlay (from 'sldlab fit')")
    plot.add_argument("--title", default="", help="plot title")
    plot.add_argument("--out", required=True, help="output SVG path")
    plot.set_defaults(func=_cmd_plot)

    rep = sub.add_parser("reproduce", help="run a named preset end to end into a directory")
    rep.add_argument("preset", help="preset name, e.g. fig4, fig5, fig9-d-sweep, fig9-n-sweep")
    rep.add_argument("--threads", type=_threads_arg, default=1, help="worker processes, or 'max'")
    rep.add_argument("--base-seed", type=int, default=None,
                     help=f"base seed (default: ${_ENV_BASE_SEED} or 0)")
    rep.add_argument("--out", required=True, help="output directory")
    rep.set_defaults(func=_cmd_reproduce)

    return parser


# =====================================================================
# Manifest and fits-table helpers
# =====================================================================


def _write_manifest(
    path: Path, command: str, argv: list[str], config: object, base_seed: int | None,
    outputs: list[Path], started: float,
) -> None:
    doc = {
        "tool": "sldlab",
        "version": __version__,
        "command": command,
        "argv": argv,
        "base_seed": base_seed,
        "config": config,
        "outputs": [str(p) for p in outputs],
        "duration_seconds": round(time.time() - started, 3),
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _fit_row(
    source: str, series: str, mode: str, segment: str, fit: PowerLawFit,
    size_span: tuple[float, float],
    break_size: float | None = None,
    sse_improvement: float | None = None,
    evidence: bool | None = None,
) -> dict[str, str]:
    fmt = lambda v: format(float(v), ".17g")  # noqa: E731
    return {
        "source": source,
        "series": series,
        "mode": mode,
        "segment": segment,
        "alpha": fmt(fit.alpha),
        "log_beta": fmt(fit.log_beta),
        "r_squared": fmt(fit.r_squared),
        "sse": fmt(fit.sse),
        "region_lo": str(fit.region[0]),
        "region_hi": str(fit.region[1]),
        "n_points": str(fit.n_points),
        "n_dropped": str(fit.n_dropped),
        "floor": "" if fit.floor is None else fmt(fit.floor),
        "size_lo": fmt(size_span[0]),
        "size_hi": fmt(size_span[1]),
        "break_size": "" if break_size is None else fmt(break_size),
        "sse_improvement": "" if sse_improvement is None else fmt(sse_improvement),
        "breakpoint_evidence": "" if evidence is None else ("true" if evidence else "false"),
    }


def _write_fits_csv(path: Path, rows: list[dict[str, str]]) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=_FITS_HEADER, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def _describe_fit(segment: str, fit: PowerLawFit) -> str:
    parts = [
        f"alpha={fit.alpha:.6g}",
        f"log_beta={fit.log_beta:.6g}",
        f"r2={fit.r_squared:.6g}",
        f"points={fit.n_points}",
    ]
    if fit.n_dropped:
        parts.append(f"dropped={fit.n_dropped}")
    if fit.floor is not None:
        parts.append(f"floor={fit.floor:.6g}")
    return f"  {segment}: " + " ".join(parts)


# =====================================================================
# Subcommands
# =====================================================================


def _cmd_simulate(args: argparse.Namespace) -> int:
    started = time.time()
    if args.d >= args.n:
        raise UsageError(f"--d must be smaller than --n (got d={args.d}, n={args.n})")
    if args.mc_test < 0 or args.mc_test == 1:
        raise UsageError(f"--mc-test must be 0 or >= 2, got {args.mc_test}")
    base_seed = _resolve_base_seed(args.base_seed)
    try:
        config = SweepConfig(
            params=ModelParams(d=args.d, n=args.n, sigma_z=args.sigma),
            train_sizes=default_train_grid(*args.grid),
            n_seeds=args.seeds,
            estimators=args.est,
            base_seed=base_seed,
            mc_test_size=args.mc_test,
        )
    except SldlabError as exc:
        # Everything here came straight from command-line flags.
        raise UsageError(str(exc)) from exc
    curve = run_sweep(config, workers=args.threads)
    out = Path(args.out)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    write_curve_csv(curve, out)
    manifest = out.with_suffix(".manifest.json")
    _write_manifest(
        manifest, "simulate", sys.argv[1:], dataclasses.asdict(config), base_seed,
        [out], started,
    )
    print(f"wrote {out} ({len(curve.train_sizes)} sizes x {len(curve.series)} estimators)")
    return 0


def _resolve_floor(floor_arg: str | float, sigma: float | None) -> float | None:
    if floor_arg == "none":
        return None
    if floor_arg == "auto":
        if sigma is None:
            raise UsageError("--floor auto requires --sigma to compute sigma^2/(1+sigma^2)")
        return sigma**2 / (1.0 + sigma**2)
    return float(floor_arg)


def _cmd_fit(args: argparse.Namespace) -> int:
    started = time.time()
    sizes, values, column = read_series_csv(args.infile, args.col)
    floor = _resolve_floor(args.floor, args.sigma)
    points = np.column_stack([sizes, values])
    source = str(args.infile)
    rows: list[dict[str, str]] = []
    span = (float(sizes[0]), float(sizes[-1]))
    print(f"{source}: column {column}, {len(sizes)} points, mode {args.mode}")
    if args.mode == "single":
        fit = fit_powerlaw(points)
        rows.append(_fit_row(source, column, "single", "all", fit, span))
        print(_describe_fit("all", fit))
    elif args.mode == "excess":
        if floor is None:
            raise UsageError("--mode excess requires --floor auto or an explicit value")
        fit = fit_excess_powerlaw(points, floor)
        rows.append(_fit_row(source, column, "excess", "all", fit, span))
        print(_describe_fit("all", fit))
    else:
        seg = fit_segmented(points, min_seg=args.min_seg, floor=floor)
        improvement = (
            0.0 if seg.single_sse <= 1e-300 else 1.0 - seg.total_sse / seg.single_sse
        )
        left_span = (float(sizes[0]), float(seg.break_size))
        right_span = (float(seg.break_size), float(sizes[-1]))
        rows.append(
            _fit_row(source, column, "segmented", "left", seg.left, left_span,
                     seg.break_size, improvement, seg.breakpoint_evidence)
        )
        rows.append(
            _fit_row(source, column, "segmented", "right", seg.right, right_span,
                     seg.break_size, improvement, seg.breakpoint_evidence)
        )
        print(_describe_fit("left", seg.left))
        print(_describe_fit("right", seg.right))
        verdict = "yes" if seg.breakpoint_evidence else "no"
        print(
            f"  break at size~{seg.break_size:.6g} (index {seg.break_index}), "
            f"SSE improvement {improvement:.1%}, breakpoint evidence: {verdict}"
        )
    if args.out:
        out = Path(args.out)
        _write_fits_csv(out, rows)
        _write_manifest(
            out.with_suffix(".manifest.json"), "fit", sys.argv[1:],
            {"in": source, "col": column, "mode": args.mode,
             "floor": None if floor is None else floor, "min_seg": args.min_seg},
            None, [out], started,
        )
        print(f"wrote {out}")
    return 0


def _read_fits_csv(path: str) -> list[dict[str, str]]:
    import csv

    with open(path, "r", newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _cmd_plot(args: argparse.Namespace) -> int:
    started = time.time()
    curve = read_curve_csv(args.infile)
    series = [
        PlotSeries(label=name, sizes=curve.train_sizes, values=stats.mean, err=stats.std)
        for name, stats in curve.series.items()
    ]
    overlays: list[FitOverlay] = []
    if args.fits:
        for row in _read_fits_csv(args.fits):
            floor = float(row["floor"]) if row.get("floor") else 0.0
            label = f"{row['series']} fit: alpha={float(row['alpha']):.3g}"
            if row.get("segment") and row["segment"] != "all":
                label = f"{row['series']} {row['segment']}: alpha={float(row['alpha']):.3g}"
            overlays.append(
                FitOverlay(
                    label=label,
                    alpha=float(row["alpha"]),
                    log_beta=float(row["log_beta"]),
                    size_range=(float(row["size_lo"]), float(row["size_hi"])),
                    offset=floor,
                )
            )
    svg = render_scaling_plot(
        series, tuple(overlays), title=args.title, xlabel="train size", ylabel="risk"
    )
    out = Path(args.out)
    out.write_text(svg, encoding="utf-8")
    _write_manifest(
        out.with_suffix(".manifest.json"), "plot", sys.argv[1:],
        {"in": str(args.infile), "fits": args.fits, "title": args.title},
        None, [out], started,
    )
    print(f"wrote {out}")
    return 0


def _reproduce_fit_rows(
    preset: Preset, label: str, csv_name: str, curve: RiskCurve, floor: float
) -> tuple[list[dict[str, str]], list[FitOverlay]]:
    """Fit every estimator series of one preset sweep per the preset's fit spec."""
    spec = preset.fit
    rows: list[dict[str, str]] = []
    overlays: list[FitOverlay] = []
    sizes = curve.train_sizes.astype(float)
    first = int(np.searchsorted(sizes, spec.min_train_size))
    region = (first, len(sizes))
    if region[1] - region[0] < 2:
        raise UsageError(
            f"preset {preset.name}/{label}: fewer than 2 grid points at or above "
            f"min_train_size={spec.min_train_size}"
        )
    span = (float(sizes[first]), float(sizes[-1]))
    for name, stats in curve.series.items():
        points = np.column_stack([sizes, stats.mean])
        series_id = f"{label}/{name}"
        if spec.mode == "excess":
            fit = fit_excess_powerlaw(points, floor, region=region)
            rows.append(_fit_row(csv_name, series_id, "excess", "all", fit, span))
            overlays.append(
                FitOverlay(
                    label=f"{name} fit: alpha={fit.alpha:.3g}",
                    alpha=fit.alpha, log_beta=fit.log_beta, size_range=span,
                )
            )
        elif spec.mode == "single":
            fit = fit_powerlaw(points, region=region)
            rows.append(_fit_row(csv_name, series_id, "single", "all", fit, span))
            overlays.append(
                FitOverlay(
                    label=f"{name} fit: alpha={fit.alpha:.3g}",
                    alpha=fit.alpha, log_beta=fit.log_beta, size_range=span,
                )
            )
        else:  # segmented
            seg = fit_segmented(points[region[0]:region[1]],
                                floor=floor if spec.floor == "auto" else None)
            improvement = (
                0.0 if seg.single_sse <= 1e-300 else 1.0 - seg.total_sse / seg.single_sse
            )
            rows.append(
                _fit_row(csv_name, series_id, "segmented", "left", seg.left,
                         (span[0], seg.break_size), seg.break_size, improvement,
                         seg.breakpoint_evidence)
            )
            rows.append(
                _fit_row(csv_name, series_id, "segmented", "right", seg.right,
                         (seg.break_size, span[1]), seg.break_size, improvement,
                         seg.breakpoint_evidence)
            )
    return rows, overlays


def _cmd_reproduce(args: argparse.Namespace) -> int:
    started = time.time()
    preset = load_preset(args.preset)
    base_seed = _resolve_base_seed(args.base_seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs: list[Path] = []
    fit_rows: list[dict[str, str]] = []
    for spec in preset.sweeps:
        config = spec.to_config(base_seed=derive_seed(base_seed, "sweep", spec.label))
        print(
            f"[{preset.name}/{spec.label}] d={spec.d} n={spec.n} sigma_z={spec.sigma_z} "
            f"sizes={len(config.train_sizes)} seeds={spec.n_seeds} ..."
        )
        curve = run_sweep(config, workers=args.threads)
        csv_path = out_dir / f"{preset.name}_{spec.label}.csv"
        write_curve_csv(curve, csv_path)
        outputs.append(csv_path)

        overlays: list[FitOverlay] = []
        floor = optimal_risk(config.params)
        if preset.fit is not None:
            rows, overlays = _reproduce_fit_rows(
                preset, spec.label, csv_path.name, curve, floor
            )
            fit_rows.extend(rows)
            plot_series = [
                PlotSeries(label=f"{name} excess", sizes=curve.train_sizes,
                           values=stats.mean - floor, err=stats.std)
                for name, stats in curve.series.items()
            ]
            ylabel = "excess risk"
        else:
            plot_series = [
                PlotSeries(label=name, sizes=curve.train_sizes,
                           values=stats.mean, err=stats.std)
                for name, stats in curve.series.items()
            ]
            ylabel = "risk"
        svg_path = out_dir / f"{preset.name}_{spec.label}.svg"
        svg_path.write_text(
            render_scaling_plot(
                plot_series, tuple(overlays),
                title=f"{preset.name} {spec.label}", ylabel=ylabel,
            ),
            encoding="utf-8",
        )
        outputs.append(svg_path)
    if preset.fit is not None:
        fits_path = out_dir / f"{preset.name}_fits.csv"
        _write_fits_csv(fits_path, fit_rows)
        outputs.append(fits_path)
        for row in fit_rows:
            print(
                f"  {row['series']} [{row['segment']}]: alpha={float(row['alpha']):.6g} "
                f"r2={float(row['r_squared']):.6g}"
            )
    manifest = out_dir / f"{preset.name}_manifest.json"
    _write_manifest(
        manifest, "reproduce", sys.argv[1:],
        {"preset": preset.name, "version": preset.version,
         "description": preset.description}, base_seed, outputs, started,
    )
    print(f"wrote {len(outputs)} files + manifest under {out_dir}")
    return 0


# =====================================================================
# Entry point
# =====================================================================


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse handles usage errors (exit 2) and --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"sldlab: error: {exc}", file=sys.stderr)
        return 2
    except (SldlabError, OSError) as exc:
        print(f"sldlab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
