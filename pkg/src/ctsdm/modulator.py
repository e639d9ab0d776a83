"""Continuous-time second-order sigma-delta loop simulation.

Two cascaded integrators driven by the tracking error u - nu feed a sampled
1-bit quantizer on y = c1*x1 + c2*x2.  In time normalized to the PWM period
the loop is x1' = N*(u - nu), x2' = N*x1 with nu held constant over each
sampling interval of length 1/N; integration uses classical RK4 with
substeps snapped to shape breakpoints so every substep sees a smooth input.

Because x1' does not depend on the state, RK4 over a sample interval reduces
to fixed linear combinations of the input samples at the substep nodes.
run() exploits this: the node combinations are precomputed vectorized and the
sequential part of the loop is just the quantizer feedback.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .signals import InputModel

__all__ = [
    "ModulatorConfig",
    "ModulatorState",
    "SimulationTrace",
    "PrimitiveDiagnostics",
    "StabilityReport",
    "InstabilityDetected",
    "quantize",
    "step_sample_interval",
    "run",
    "primitive_diagnostics",
    "check_stability",
    "write_trace_csv",
]

_CHUNK = 32768  # intervals per vectorized precompute block


class InstabilityDetected(RuntimeError):
    """State bound exceeded; carries the offending sample index and, from
    run(), the partial trace accumulated so far."""

    def __init__(self, sample_index, max_abs_state, trace=None):
        super().__init__(
            f"state bound exceeded at sample {sample_index} "
            f"(max |state| = {max_abs_state:.6g})"
        )
        self.sample_index = sample_index
        self.max_abs_state = max_abs_state
        self.trace = trace


@dataclass(frozen=True)
class ModulatorConfig:
    oversampling_ratio: int
    pwm_period: float = 1.0
    substeps_per_sample: int = 16
    levels: tuple[float, float] = (-1.0, 1.0)
    threshold: float | None = None  # None -> midpoint of levels
    output_coeffs: tuple[float, float] = (1.5, 1.0)
    initial_state: tuple[float, float] = (0.0, 0.0)
    stability_bound: float = 10.0

    def __post_init__(self):
        if self.oversampling_ratio < 1 or int(self.oversampling_ratio) != self.oversampling_ratio:
            raise ValueError("oversampling_ratio must be a positive integer")
        if self.substeps_per_sample < 1 or int(self.substeps_per_sample) != self.substeps_per_sample:
            raise ValueError("substeps_per_sample must be a positive integer")
        if self.pwm_period <= 0:
            raise ValueError("pwm_period must be positive")
        if not self.levels[0] < self.levels[1]:
            raise ValueError("levels must satisfy v_low < v_high")
        if self.stability_bound <= 0:
            raise ValueError("stability_bound must be positive")

    @property
    def sampling_interval(self) -> float:
        """T_s = T_pwm / N."""
        return self.pwm_period / self.oversampling_ratio

    @property
    def theta(self) -> float:
        if self.threshold is not None:
            return self.threshold
        return 0.5 * (self.levels[0] + self.levels[1])


@dataclass(frozen=True)
class ModulatorState:
    x1: float
    x2: float
    nu: float
    sample_index: int = 0


def quantize(y: float, cfg: ModulatorConfig) -> float:
    """1-bit quantizer: v_high if y >= threshold else v_low (tie -> v_high)."""
    return cfg.levels[1] if y >= cfg.theta else cfg.levels[0]


def _output(x1, x2, cfg):
    c1, c2 = cfg.output_coeffs
    return c1 * x1 + c2 * x2


def _interval_pieces(tau0, tau1, input_model, pwm_period):
    """Split [tau0, tau1] (normalized time) at shape breakpoints inside it."""
    shape = input_model.shape
    cuts = [tau0, tau1]
    for p in shape.breakpoint_phases:
        period_norm = shape.period / pwm_period
        lo = math.floor(tau0 / period_norm - p) - 1
        hi = math.ceil(tau1 / period_norm - p) + 1
        for m in range(lo, hi + 1):
            v = (m + p) * period_norm
            if tau0 < v < tau1:
                cuts.append(v)
    return sorted(set(cuts))


def _advance_interval(x1, x2, nu, tau0, input_model, cfg):
    """Scalar RK4 over one sampling interval, substeps snapped to breakpoints."""
    N = cfg.oversampling_ratio
    M = cfg.substeps_per_sample
    L = 1.0 / N
    tau1 = tau0 + L
    pieces = _interval_pieces(tau0, tau1, input_model, cfg.pwm_period)
    for lo, hi in zip(pieces[:-1], pieces[1:]):
        nsub = max(1, math.ceil((hi - lo) / L * M - 1e-12))
        hs = (hi - lo) / nsub
        ref = 0.5 * (lo + hi) * cfg.pwm_period
        for i in range(nsub):
            a = lo + i * hs
            u0 = float(input_model.eval_with_ref(a * cfg.pwm_period, ref))
            um = float(input_model.eval_with_ref((a + 0.5 * hs) * cfg.pwm_period, ref))
            u1 = float(input_model.eval_with_ref((a + hs) * cfg.pwm_period, ref))
            k1x1 = N * (u0 - nu)
            k2x1 = N * (um - nu)
            k3x1 = k2x1
            k4x1 = N * (u1 - nu)
            k1x2 = N * x1
            k2x2 = N * (x1 + 0.5 * hs * k1x1)
            k3x2 = N * (x1 + 0.5 * hs * k2x1)
            k4x2 = N * (x1 + hs * k3x1)
            x1 += hs / 6.0 * (k1x1 + 2 * k2x1 + 2 * k3x1 + k4x1)
            x2 += hs / 6.0 * (k1x2 + 2 * k2x2 + 2 * k3x2 + k4x2)
    return x1, x2


def step_sample_interval(state: ModulatorState, input_model: InputModel,
                         cfg: ModulatorConfig) -> ModulatorState:
    """Advance one sampling interval with nu held, then latch the next level.

    Raises InstabilityDetected when the state leaves the stability bound.
    """
    tau0 = state.sample_index / cfg.oversampling_ratio
    x1, x2 = _advance_interval(state.x1, state.x2, state.nu, tau0, input_model, cfg)
    idx = state.sample_index + 1
    worst = max(abs(x1), abs(x2))
    if worst > cfg.stability_bound:
        raise InstabilityDetected(idx, worst)
    nu = quantize(_output(x1, x2, cfg), cfg)
    return ModulatorState(x1=x1, x2=x2, nu=nu, sample_index=idx)


@dataclass(frozen=True)
class SimulationTrace:
    bitstream: np.ndarray        # held level per sample interval, shape (n,)
    sampled_states: np.ndarray   # (x1, x2) at boundaries, shape (n+1, 2)
    config: ModulatorConfig
    duration: float
    stable: bool
    max_abs_state: float
    final_level: float           # level latched at the final boundary
    first_violation_index: int | None = None

    @property
    def n_samples(self) -> int:
        return len(self.bitstream)

    def times(self) -> np.ndarray:
        """Physical times of the sample boundaries."""
        return np.arange(self.n_samples + 1) * self.config.sampling_interval


def _flagged_intervals(input_model, cfg, n):
    """Sample intervals containing a shape breakpoint strictly inside an RK4 cell."""
    N = cfg.oversampling_ratio
    M = cfg.substeps_per_sample
    shape = input_model.shape
    period_norm = shape.period / cfg.pwm_period
    flagged = set()
    for p in shape.breakpoint_phases:
        m = math.floor(-p)
        while (m + p) * period_norm * N < n:
            tau = (m + p) * period_norm
            if tau >= 0:
                pos = tau * N * M
                if abs(pos - round(pos)) > 1e-9 * max(1.0, abs(pos)):
                    j = int(math.floor(tau * N))
                    if 0 <= j < n:
                        flagged.add(j)
            m += 1
    return flagged


def run(input_model: InputModel, cfg: ModulatorConfig, duration: float) -> SimulationTrace:
    """Simulate for the given physical duration, recording bitstream and states.

    Deterministic for a fixed configuration.  On instability raises
    InstabilityDetected carrying the trace accumulated up to that sample.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    N = cfg.oversampling_ratio
    M = cfg.substeps_per_sample
    Ts = cfg.sampling_interval
    n = math.ceil(duration / Ts - 1e-9)
    L = 1.0 / N          # sample interval in normalized time
    h = L / M            # RK4 cell width
    theta = cfg.theta
    vlo, vhi = cfg.levels
    c1, c2 = cfg.output_coeffs
    bound = cfg.stability_bound

    # per-interval nu coefficients of the aggregated RK4 update
    hN = h * N
    coef_nu1 = N * L
    coef_nu2 = 0.5 * hN * hN * M
    cell_weights = (M - 1.0) - np.arange(M, dtype=np.float64)

    bits = np.empty(n)
    states = np.empty((n + 1, 2))
    x1, x2 = cfg.initial_state
    states[0] = (x1, x2)
    nu = vhi if c1 * x1 + c2 * x2 >= theta else vlo
    slow = _flagged_intervals(input_model, cfg, n)
    max_abs = max(abs(x1), abs(x2))

    def fail(idx):
        partial = SimulationTrace(
            bitstream=bits[:idx].copy(), sampled_states=states[: idx + 1].copy(),
            config=cfg, duration=idx * Ts, stable=False,
            max_abs_state=float(np.abs(states[: idx + 1]).max()), final_level=nu,
            first_violation_index=idx,
        )
        raise InstabilityDetected(idx, max(abs(x1), abs(x2)), trace=partial)

    for j0 in range(0, n, _CHUNK):
        j1 = min(j0 + _CHUNK, n)
        g = np.arange(j0 * M, j1 * M, dtype=np.float64)
        starts = g * h
        mids = starts + 0.5 * h
        ends = starts + h
        refs = mids * cfg.pwm_period
        u0 = input_model.eval_with_ref(starts * cfg.pwm_period, refs)
        um = input_model.eval_with_ref(refs, refs)
        u1 = input_model.eval_with_ref(ends * cfg.pwm_period, refs)
        a = (h / 6.0) * (u0 + 4.0 * um + u1)
        b = (h * h / 6.0) * (u0 + 2.0 * um)
        blk = j1 - j0
        a = a.reshape(blk, M)
        A = a.sum(axis=1)
        B = b.reshape(blk, M).sum(axis=1)
        C = a @ cell_weights
        for j in range(j0, j1):
            bits[j] = nu
            if j in slow:
                x1n, x2n = _advance_interval(x1, x2, nu, j * L, input_model, cfg)
            else:
                i = j - j0
                x1n = x1 + N * A[i] - nu * coef_nu1
                x2n = x2 + hN * (M * x1 + N * C[i] - nu * hN * (M * (M - 1) / 2.0)) \
                    + N * N * B[i] - nu * coef_nu2
            x1, x2 = x1n, x2n
            states[j + 1] = (x1, x2)
            worst = abs(x1) if abs(x1) > abs(x2) else abs(x2)
            if worst > max_abs:
                max_abs = worst
            if worst > bound:
                fail(j + 1)
            y = c1 * x1 + c2 * x2
            nu = vhi if y >= theta else vlo

    return SimulationTrace(
        bitstream=bits, sampled_states=states, config=cfg, duration=n * Ts,
        stable=True, max_abs_state=float(max_abs), final_level=nu,
    )


@dataclass(frozen=True)
class PrimitiveDiagnostics:
    """Sampled primitives of the tracking error, in normalized time.

    beta_m1[j] = x1(tau_j)/N is the zero-mean primitive of the tracking error;
    beta_m2_raw is its cumulative trapezoid integral (bounded for a stable
    loop); running_mean_x1[j] = (1/tau_j) * integral of x1 up to tau_j.
    """

    beta_m1: np.ndarray
    beta_m2_raw: np.ndarray
    running_mean_x1: np.ndarray
    tau: np.ndarray


def primitive_diagnostics(trace: SimulationTrace) -> PrimitiveDiagnostics:
    if not trace.stable:
        raise ValueError("diagnostics require a stable trace")
    N = trace.config.oversampling_ratio
    x1 = trace.sampled_states[:, 0]
    tau = np.arange(len(x1)) / N
    beta_m1 = x1 / N
    dt = 1.0 / N
    cum_bm1 = np.concatenate([[0.0], np.cumsum(0.5 * (beta_m1[1:] + beta_m1[:-1]) * dt)])
    cum_x1 = np.concatenate([[0.0], np.cumsum(0.5 * (x1[1:] + x1[:-1]) * dt)])
    running = np.empty_like(cum_x1)
    running[0] = x1[0]
    running[1:] = cum_x1[1:] / tau[1:]
    return PrimitiveDiagnostics(beta_m1=beta_m1, beta_m2_raw=cum_bm1,
                                running_mean_x1=running, tau=tau)


@dataclass(frozen=True)
class StabilityReport:
    passed: bool
    max_abs_state: float
    first_violation_index: int | None


def check_stability(trace: SimulationTrace, bound: float) -> StabilityReport:
    worst = np.abs(trace.sampled_states).max(axis=1)
    over = np.nonzero(worst > bound)[0]
    if len(over):
        return StabilityReport(False, float(worst.max()), int(over[0]))
    return StabilityReport(True, float(worst.max()), None)


def write_trace_csv(trace: SimulationTrace, path) -> None:
    """One row per sample boundary; nu is the level held from that boundary on
    (the final row repeats the last latched level)."""
    Ts = trace.config.sampling_interval
    n = trace.n_samples
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_index", "t", "x1", "x2", "nu"])
        for j in range(n + 1):
            nu = trace.bitstream[j] if j < n else trace.final_level
            w.writerow([j, repr(j * Ts), repr(float(trace.sampled_states[j, 0])),
                        repr(float(trace.sampled_states[j, 1])), repr(float(nu))])
