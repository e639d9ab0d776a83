"""Convergence quantification: error norms, oversampling sweeps, slope fits.

The figure of merit is the L2 norm of the filtered error over a fixed window;
sweeping the oversampling ratio and fitting log10(norm) against log10(1/N)
recovers the decay exponent of the modulator-plus-filter chain.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .demod import DemodulationResult, QuadratureSpec, _subdivide, error_signal
from .modulator import InstabilityDetected, ModulatorConfig, SimulationTrace, run
from .signals import BSplineKernel, InputModel, PeriodicShape

__all__ = [
    "SweepResult",
    "l2_error",
    "fit_loglog_slope",
    "convergence_sweep",
    "riemann_lebesgue_check",
    "TrackingError",
    "write_sweep_csv",
    "write_summary_csv",
]


def l2_error(result: DemodulationResult, t0: float = 1.0, t1: float = 250.0) -> float:
    """L2 norm of the error over [t0, t1] by composite Simpson on the grid.

    The grid must be uniform and contain t0 and t1; an odd interval count is
    closed with one trapezoid cell at the right end.
    """
    grid = result.grid
    eps = 1e-9
    if grid[0] > t0 + eps or grid[-1] < t1 - eps:
        raise ValueError(f"grid [{grid[0]}, {grid[-1]}] does not cover [{t0}, {t1}]")
    sel = (grid >= t0 - eps) & (grid <= t1 + eps)
    sub = grid[sel]
    if len(sub) < 3:
        raise ValueError("need at least 3 grid points in the norm window")
    if abs(sub[0] - t0) > eps or abs(sub[-1] - t1) > eps:
        raise ValueError("norm window endpoints must lie on the grid")
    steps = np.diff(sub)
    dx = steps[0]
    if np.any(np.abs(steps - dx) > 1e-9 * max(dx, 1.0)):
        raise ValueError("grid must be uniform inside the norm window")
    f = result.error[sel] ** 2
    n = len(f) - 1
    tail = 0.0
    if n % 2 == 1:
        tail = 0.5 * dx * (f[n - 1] + f[n])
        f = f[:n]
        n -= 1
    total = f[0] + f[-1] + 4.0 * f[1:-1:2].sum() + 2.0 * f[2:-2:2].sum()
    return math.sqrt(total * dx / 3.0 + tail)


def fit_loglog_slope(points) -> tuple[float, float]:
    """OLS slope of log10(value) against log10(1/N); returns (slope, rms residual)."""
    pts = sorted((int(n), float(v)) for n, v in points)
    if len(pts) < 3:
        raise ValueError("need at least 3 points to fit a slope")
    if any(v <= 0 for _, v in pts):
        raise ValueError("all values must be positive")
    x = np.log10([1.0 / n for n, _ in pts])
    y = np.log10([v for _, v in pts])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return float(slope), float(np.sqrt(np.mean(resid ** 2)))


@dataclass(frozen=True)
class SweepResult:
    label: str
    points: tuple[tuple[int, float], ...]  # (N, l2_error), N ascending
    fitted_slope: float
    fit_residual: float
    failed: tuple[int, ...] = ()           # N values whose run was unstable


def _norm_grid(norm_window, spacing):
    t0, t1 = norm_window
    m = (t1 - t0) / spacing
    if abs(m - round(m)) > 1e-9:
        raise ValueError("norm window must be an integer number of grid steps")
    return t0 + spacing * np.arange(int(round(m)) + 1)


def convergence_sweep(input_model: InputModel, base_cfg: ModulatorConfig,
                      n_list, duration: float, kernel: BSplineKernel,
                      grid_spacing: float = 1.0 / 32.0,
                      norm_window: tuple[float, float] = (1.0, 250.0),
                      q: QuadratureSpec = QuadratureSpec(),
                      label: str = "input") -> SweepResult:
    """Run the modulator at each N and collect the L2 error of the filtered
    difference; unstable runs are recorded and excluded from the fit."""
    n_values = sorted({int(n) for n in n_list})
    if len(n_values) < 3:
        raise ValueError("need at least 3 distinct oversampling ratios")
    grid = _norm_grid(norm_window, grid_spacing)
    points = []
    failed = []
    for n in n_values:
        cfg = replace(base_cfg, oversampling_ratio=n)
        try:
            trace = run(input_model, cfg, duration)
        except InstabilityDetected:
            failed.append(n)
            continue
        result = error_signal(input_model, trace, input_model.shape, kernel, grid, q)
        points.append((n, l2_error(result, *norm_window)))
    slope, resid = fit_loglog_slope(points)
    return SweepResult(label=label, points=tuple(points), fitted_slope=slope,
                       fit_residual=resid, failed=tuple(failed))


@dataclass(frozen=True)
class TrackingError:
    """The instantaneous difference input-minus-bitstream as a function of
    fast time (sample index scale), reconstructed from a finished run."""

    input_model: InputModel
    trace: SimulationTrace

    def __call__(self, eta):
        eta = np.asarray(eta, dtype=np.float64)
        cfg = self.trace.config
        t = eta * cfg.sampling_interval
        idx = np.clip(eta.astype(np.int64), 0, len(self.trace.bitstream) - 1)
        out = self.input_model(t) - self.trace.bitstream[idx]
        return out if out.ndim else float(out)

    @property
    def fast_duration(self) -> float:
        return float(len(self.trace.bitstream))

    def breakpoint_times(self, lo, hi):
        """Discontinuities in fast time: integers (level switches) plus the
        input shape breakpoints mapped through the sampling interval."""
        pts = set(range(math.ceil(lo), math.floor(hi) + 1))
        cfg = self.trace.config
        shape = self.input_model.shape
        scale = shape.period / cfg.sampling_interval  # fast-time units per period
        for p in shape.breakpoint_phases:
            m = math.floor(lo / scale - p) - 1
            while (m + p) * scale <= hi:
                v = (m + p) * scale
                if lo < v < hi:
                    pts.add(v)
                m += 1
        return sorted(pts)


def _as_beta(beta):
    if isinstance(beta, (TrackingError, PeriodicShape)):
        return beta
    raise TypeError("beta must be a TrackingError or a PeriodicShape")


def _beta_breakpoints(beta, lo, hi):
    if isinstance(beta, TrackingError):
        return beta.breakpoint_times(lo, hi)
    pts = []
    for p in beta.breakpoint_phases:
        m = math.floor(lo / beta.period - p) - 1
        while (m + p) * beta.period <= hi:
            v = (m + p) * beta.period
            if lo < v < hi:
                pts.append(v)
            m += 1
    return sorted(pts)


def riemann_lebesgue_check(beta, f_shape: PeriodicShape = None, n_list=(),
                           kernel: BSplineKernel = None, kernel_shift: float = 0.0,
                           window: tuple[float, float] = None,
                           q: QuadratureSpec = QuadratureSpec()):
    """Table of (N, |integral of beta(N*sigma) f(sigma) d sigma|).

    f is either one period of f_shape, or the kernel shifted by kernel_shift;
    for a zero-mean beta the entries must decay as N grows.
    """
    beta = _as_beta(beta)
    if (f_shape is None) == (kernel is None):
        raise ValueError("provide exactly one of f_shape or kernel")
    if f_shape is not None:
        lo, hi = 0.0, f_shape.period
        f_breaks = [p * f_shape.period for p in f_shape.breakpoint_phases]
        f_eval = f_shape
        cap_period = f_shape.period
    else:
        lo, hi = kernel_shift, kernel_shift + kernel.order
        f_breaks = [kernel_shift + b for b in kernel.breakpoints]
        f_eval = lambda sigma: kernel(np.asarray(sigma) - kernel_shift)
        cap_period = 1.0
    if window is not None:
        lo, hi = window
    xg, wg = np.polynomial.legendre.leggauss(q.points_per_cell)
    rows = []
    for n in n_list:
        n = int(n)
        if isinstance(beta, TrackingError) and n * hi > beta.fast_duration + 1e-9:
            raise ValueError(f"trace too short to sample beta at N = {n}")
        cuts = {lo, hi}
        cuts.update(b for b in f_breaks if lo < b < hi)
        cuts.update(b / n for b in _beta_breakpoints(beta, n * lo, n * hi))
        pts = np.array(sorted(cuts))
        cap = q.max_cell_periods * cap_period
        if isinstance(beta, PeriodicShape):
            # a breakpoint-free beta still oscillates on the 1/n scale
            cap = min(cap, q.max_cell_periods * beta.period / n)
        pts = _subdivide(pts, cap)
        mids = 0.5 * (pts[:-1] + pts[1:])
        halfs = 0.5 * (pts[1:] - pts[:-1])
        nodes = (mids[:, None] + halfs[:, None] * xg[None, :]).ravel()
        weights = (halfs[:, None] * wg[None, :]).ravel()
        total = float(np.sum(weights * beta(n * nodes) * np.asarray(f_eval(nodes))))
        rows.append((n, abs(total)))
    return rows


def write_sweep_csv(results, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["input_label", "N", "l2_error"])
        for res in results:
            for n, err in res.points:
                w.writerow([res.label, n, repr(float(err))])


def write_summary_csv(results, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["input_label", "slope", "residual", "points_used"])
        for res in results:
            w.writerow([res.label, repr(float(res.fitted_slope)),
                        repr(float(res.fit_residual)), len(res.points)])
