"""Command-line front end: simulate, sweep, validate, plot.

Exit codes: 0 success, 1 configuration error, 2 runtime error (instability,
I/O, failed validation).  All CSV output is deterministic for a fixed
configuration; SVG rendering is optional and byte-stable.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .analysis import (
    SweepResult,
    fit_loglog_slope,
    l2_error,
    write_summary_csv,
    write_sweep_csv,
)
from .checks import run_validation_checks
from .config import ConfigError, load_config, preset_names
from .demod import error_signal, write_demod_csv
from .modulator import InstabilityDetected, run, write_trace_csv
from .plotting import PlotError, plot_demod_csv, plot_sweep_csv
from .signals import BSplineKernel

__all__ = ["main"]


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="ctsdm",
        description="Second-order continuous-time sigma-delta simulator and "
                    "filtered-error analyzer")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one input and write trace, "
                                            "demodulation CSV and figure")
    p_sim.add_argument("--config", required=True,
                       help=f"TOML file or preset ({', '.join(preset_names())})")
    p_sim.add_argument("--out", default=None, help="output directory")
    p_sim.add_argument("--no-svg", action="store_true", help="skip the figure")

    p_sweep = sub.add_parser("sweep", help="L2 error vs oversampling ratio "
                                           "with fitted slopes")
    p_sweep.add_argument("--config", required=True,
                         help=f"TOML file or preset ({', '.join(preset_names())})")
    p_sweep.add_argument("--out", default=None, help="output directory")
    p_sweep.add_argument("--no-svg", action="store_true", help="skip the figure")
    p_sweep.add_argument("--jobs", type=int, default=None,
                         help="worker processes (default: from config, 0 = auto)")

    p_val = sub.add_parser("validate", help="run the signal-layer identity checks")
    p_val.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)

    p_plot = sub.add_parser("plot", help="render an SVG from a CSV artifact")
    p_plot.add_argument("csv", help="demodulation or sweep CSV file")
    p_plot.add_argument("--kind", required=True, choices=("demod", "sweep"))
    p_plot.add_argument("--out", default=None,
                        help="output directory (default: alongside the CSV)")
    return parser


def _out_dir(arg_out, cfg):
    out = Path(arg_out if arg_out is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _simulation_grid(duration, spacing):
    m = math.floor(duration / spacing + 1e-9)
    return spacing * np.arange(m + 1)


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if len(cfg.inputs) != 1:
        raise ConfigError("simulate requires a config with exactly one input")
    out = _out_dir(args.out, cfg)
    labeled = cfg.inputs[0]
    trace = run(labeled.model, cfg.modulator, cfg.duration)
    trace_path = out / f"{labeled.label}_trace.csv"
    write_trace_csv(trace, trace_path)
    print(f"wrote {trace_path} ({trace.n_samples + 1} rows, "
          f"max |state| = {trace.max_abs_state:.3f})")

    grid = _simulation_grid(cfg.duration, cfg.grid_spacing)
    result = error_signal(labeled.model, trace, labeled.model.shape, cfg.kernel,
                          grid, cfg.quadrature)
    demod_path = out / f"{labeled.label}_demod.csv"
    write_demod_csv(result, demod_path)
    print(f"wrote {demod_path} ({len(grid)} rows, "
          f"max |error| = {np.abs(result.error).max():.3e})")

    if cfg.svg and not args.no_svg:
        svg_path = out / f"{labeled.label}_demod.svg"
        plot_demod_csv(demod_path, svg_path)
        print(f"wrote {svg_path}")
    return 0


def _sweep_job(job):
    """One (input, N) cell of a sweep; returns (label, N, error-or-None)."""
    label, model, base_cfg, n, duration, kernel_order, grid, window, q = job
    kernel = BSplineKernel(order=kernel_order)
    cfg = replace(base_cfg, oversampling_ratio=n)
    try:
        trace = run(model, cfg, duration)
    except InstabilityDetected:
        return label, n, None
    result = error_signal(model, trace, model.shape, kernel, grid, q)
    return label, n, l2_error(result, *window)


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    n_values = sorted(set(cfg.sweep_n))
    if len(n_values) < 3:
        raise ConfigError("sweep needs at least 3 distinct oversampling ratios")
    out = _out_dir(args.out, cfg)
    jobs = args.jobs if args.jobs is not None else cfg.jobs
    if jobs == 0:
        jobs = os.cpu_count() or 1

    t0, t1 = cfg.norm_window
    grid = t0 + cfg.grid_spacing * np.arange(
        int(round((t1 - t0) / cfg.grid_spacing)) + 1)
    work = [(inp.label, inp.model, cfg.modulator, n, cfg.duration,
             cfg.kernel.order, grid, cfg.norm_window, cfg.quadrature)
            for inp in cfg.inputs for n in n_values]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_job, work))
    else:
        rows = [_sweep_job(job) for job in work]

    results = []
    for inp in cfg.inputs:
        points = sorted((n, err) for label, n, err in rows
                        if label == inp.label and err is not None)
        failed = tuple(sorted(n for label, n, err in rows
                              if label == inp.label and err is None))
        try:
            slope, resid = fit_loglog_slope(points)
        except ValueError:
            slope, resid = float("nan"), float("nan")
        results.append(SweepResult(label=inp.label, points=tuple(points),
                                   fitted_slope=slope, fit_residual=resid,
                                   failed=failed))
        status = f"slope = {slope:.3f} over {len(points)} points"
        if failed:
            status += f" (unstable at N in {list(failed)})"
        print(f"{inp.label}: {status}")

    sweep_path = out / "sweep.csv"
    summary_path = out / "sweep_summary.csv"
    write_sweep_csv(results, sweep_path)
    write_summary_csv(results, summary_path)
    print(f"wrote {sweep_path}")
    print(f"wrote {summary_path}")
    if cfg.svg and not args.no_svg:
        svg_path = out / "sweep.svg"
        plot_sweep_csv(sweep_path, svg_path)
        print(f"wrote {svg_path}")
    return 0


def cmd_validate(args) -> int:
    shapes = None
    if args.inject_fault:
        from .signals import HarmonicShape
        shapes = {"corrupted": HarmonicShape(period=1.0, amplitude=1.39)}
    results = run_validation_checks(shapes=shapes)
    width = max(len(r.name) for r in results)
    failures = 0
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        failures += not r.passed
        print(f"{mark}  {r.name:<{width}}  {r.detail}")
    print(f"{len(results) - failures}/{len(results)} checks passed")
    return 0 if failures == 0 else 2


def cmd_plot(args) -> int:
    csv_path = Path(args.csv)
    if not csv_path.is_file():
        raise PlotError(f"{csv_path}: no such file")
    out = Path(args.out) if args.out else csv_path.parent
    out.mkdir(parents=True, exist_ok=True)
    svg_path = out / (csv_path.stem + ".svg")
    if args.kind == "demod":
        plot_demod_csv(csv_path, svg_path)
    else:
        plot_sweep_csv(csv_path, svg_path)
    print(f"wrote {svg_path}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {"simulate": cmd_simulate, "sweep": cmd_sweep,
                "validate": cmd_validate, "plot": cmd_plot}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except InstabilityDetected as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    except (PlotError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
