"""Analytic input models and B-spline filtering kernels.

Inputs are described declaratively as a slow envelope (sum of sinusoids)
multiplied by a fast periodic shape (piecewise polynomial or a single
harmonic).  Every signal knows its own breakpoints, so downstream
quadrature can integrate exactly piecewise-smooth integrands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "EnvelopeTerm",
    "Envelope",
    "PolySegment",
    "PeriodicShape",
    "PiecewisePolyShape",
    "HarmonicShape",
    "InputModel",
    "BSplineKernel",
    "breakpoints_in",
    "triangle_wave",
    "cosine_wave",
    "square_wave",
    "two_tone_envelope",
    "constant_envelope",
    "BUILTIN_SHAPES",
    "BUILTIN_ENVELOPES",
]


@dataclass(frozen=True)
class EnvelopeTerm:
    """One sinusoidal component: amplitude * kind(angular_frequency*t + phase)."""

    amplitude: float
    angular_frequency: float
    phase: float = 0.0
    kind: str = "cos"

    def __post_init__(self):
        if self.kind not in ("cos", "sin"):
            raise ValueError(f"envelope term kind must be 'cos' or 'sin', got {self.kind!r}")


@dataclass(frozen=True)
class Envelope:
    """Finite sum of sinusoids; the slowly varying part of an input."""

    terms: tuple[EnvelopeTerm, ...] = ()

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        out = np.zeros_like(t)
        for term in self.terms:
            arg = term.angular_frequency * t + term.phase
            out += term.amplitude * (np.cos(arg) if term.kind == "cos" else np.sin(arg))
        return out if out.ndim else float(out)

    def bound(self) -> float:
        """Upper bound on |z(t)|: sum of term amplitudes."""
        return float(sum(abs(term.amplitude) for term in self.terms))


@dataclass(frozen=True)
class PolySegment:
    """Polynomial piece on the half-open phase interval [start, end) of [0, 1)."""

    start: float
    end: float
    coeffs: tuple[float, ...]  # ascending powers of the phase variable

    def __post_init__(self):
        if not (0.0 <= self.start < self.end <= 1.0):
            raise ValueError(f"segment [{self.start}, {self.end}) must lie in [0, 1)")
        if len(self.coeffs) == 0:
            raise ValueError("segment needs at least one coefficient")


class PeriodicShape:
    """Base for the fast periodic factor s(t); evaluation uses tau = mod(t, period)/period."""

    period: float
    breakpoint_phases: tuple[float, ...]

    def __call__(self, t):
        raise NotImplementedError

    def eval_with_ref(self, t, ref):
        """Evaluate at times t using the branch valid around reference times ref.

        Needed for one-sided values at discontinuities: quadrature cells never
        straddle breakpoints, so the cell midpoint (ref) selects the branch and
        cell endpoints get the correct one-sided limit even when they coincide
        with a breakpoint.
        """
        raise NotImplementedError

    def l2_norm(self) -> float:
        """(integral of s^2 over one period)^(1/2), by exact piecewise quadrature."""
        a, w = _gauss_nodes(8)
        cells = [0.0] + [p for p in self.breakpoint_phases if 0.0 < p < 1.0] + [1.0]
        total = 0.0
        for lo, hi in zip(cells[:-1], cells[1:]):
            nsub = max(1, math.ceil((hi - lo) / 0.0625))
            edges = np.linspace(lo, hi, nsub + 1)
            mids = 0.5 * (edges[:-1] + edges[1:])
            halfs = 0.5 * (edges[1:] - edges[:-1])
            tau = (mids[:, None] + halfs[:, None] * a[None, :]).ravel()
            ww = (halfs[:, None] * w[None, :]).ravel()
            vals = self.eval_with_ref(tau * self.period, np.repeat(mids, len(a)) * self.period)
            total += float(np.sum(ww * vals * vals))
        return math.sqrt(total * self.period)


def _gauss_nodes(n):
    return np.polynomial.legendre.leggauss(n)


@dataclass(frozen=True)
class PiecewisePolyShape(PeriodicShape):
    """Periodic shape built from polynomial segments partitioning [0, 1)."""

    period: float
    segments: tuple[PolySegment, ...]
    breakpoint_phases: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError("period must be positive")
        segs = tuple(sorted(self.segments, key=lambda s: s.start))
        if not segs:
            raise ValueError("need at least one segment")
        if segs[0].start != 0.0 or segs[-1].end != 1.0:
            raise ValueError("segments must cover [0, 1)")
        for left, right in zip(segs[:-1], segs[1:]):
            if left.end != right.start:
                raise ValueError(f"gap or overlap at phase {left.end}")
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "breakpoint_phases", tuple(s.start for s in segs))
        deg = max(len(s.coeffs) for s in segs)
        mat = np.zeros((len(segs), deg))
        for i, s in enumerate(segs):
            mat[i, : len(s.coeffs)] = s.coeffs
        object.__setattr__(self, "_starts_arr", np.array([s.start for s in segs]))
        object.__setattr__(self, "_coeffs_arr", mat)

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        tau = np.mod(t, self.period) / self.period
        tau = np.where(tau >= 1.0, 0.0, tau)  # mod may round up to the period
        return self._eval_phase(tau, tau) if t.ndim else float(self._eval_phase(tau, tau))

    def eval_with_ref(self, t, ref):
        t = np.asarray(t, dtype=np.float64)
        ref = np.asarray(ref, dtype=np.float64)
        base = np.floor(ref / self.period)
        tau = t / self.period - base  # unwrapped: may be exactly 1.0 at a right edge
        tau_ref = ref / self.period - base
        return self._eval_phase(tau, tau_ref)

    def _eval_phase(self, tau, tau_ref):
        idx = np.searchsorted(self._starts_arr, tau_ref, side="right") - 1
        idx = np.minimum(np.maximum(idx, 0), len(self.segments) - 1)
        mat = self._coeffs_arr
        out = np.zeros_like(tau)
        for p in range(mat.shape[1] - 1, -1, -1):
            out = out * tau + mat[idx, p]
        return out


@dataclass(frozen=True)
class HarmonicShape(PeriodicShape):
    """amplitude * cos(2*pi*cycles*t/period + phase); no breakpoints."""

    period: float
    amplitude: float
    cycles: int = 1
    phase: float = 0.0
    breakpoint_phases: tuple[float, ...] = field(init=False, default=())

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError("period must be positive")
        if self.cycles < 1 or int(self.cycles) != self.cycles:
            raise ValueError("cycles must be a positive integer")
        object.__setattr__(self, "breakpoint_phases", ())

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        tau = np.mod(t, self.period) / self.period
        out = self.amplitude * np.cos(2 * np.pi * self.cycles * tau + self.phase)
        return out if out.ndim else float(out)

    def eval_with_ref(self, t, ref):
        t = np.asarray(t, dtype=np.float64)
        tau = t / self.period
        return self.amplitude * np.cos(2 * np.pi * self.cycles * tau + self.phase)


@dataclass(frozen=True)
class InputModel:
    """u(t) = envelope(t) * shape(t)."""

    envelope: Envelope
    shape: PeriodicShape

    def __call__(self, t):
        return self.envelope(t) * self.shape(t)

    def eval_with_ref(self, t, ref):
        return self.envelope(t) * self.shape.eval_with_ref(t, ref)


def _plus_power(y, m, right_closed=False):
    """(y)_+^m with 0^0 := 0 at y = 0 (or 1 when right_closed, for right limits)."""
    if m == 0:
        return (y >= 0).astype(np.float64) if right_closed else (y > 0).astype(np.float64)
    return np.maximum(y, 0.0) ** m


@dataclass(frozen=True)
class BSplineKernel:
    """k-fold convolution power of the unit indicator on [0, 1].

    Support is [0, k]; the kernel is a degree k-1 polynomial between the
    integer breakpoints 0..k, is nonnegative, and has unit mass.  Evaluated
    via the closed-form alternating sum rather than repeated convolution.
    """

    order: int

    def __post_init__(self):
        if self.order < 1 or int(self.order) != self.order:
            raise ValueError("kernel order must be a positive integer")

    @property
    def support(self) -> tuple[float, float]:
        return (0.0, float(self.order))

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return tuple(float(j) for j in range(self.order + 1))

    def __call__(self, x):
        k = self.order
        x = np.asarray(x, dtype=np.float64)
        acc = np.zeros_like(x)
        for j in range(k + 1):
            acc += ((-1) ** j) * math.comb(k, j) * _plus_power(x - j, k - 1)
        acc /= math.factorial(k - 1)
        return acc if acc.ndim else float(acc)

    def derivative(self, x, order=1):
        """order-th derivative; at a breakpoint, the right-limit value."""
        k = self.order
        if order not in (1, 2):
            raise ValueError("derivative order must be 1 or 2")
        if k < order + 1:
            raise ValueError(f"order-{order} derivative needs kernel order >= {order + 1}")
        m = k - 1 - order
        x = np.asarray(x, dtype=np.float64)
        acc = np.zeros_like(x)
        for j in range(k + 1):
            acc += ((-1) ** j) * math.comb(k, j) * _plus_power(x - j, m, right_closed=True)
        acc /= math.factorial(m)
        # outside the support the kernel is identically zero
        acc = np.where((x < 0) | (x >= k), 0.0, acc)
        return acc if acc.ndim else float(acc)


def breakpoints_in(window, shape=None, kernel=None, kernel_anchor=0.0,
                   sample_width=0.0, kernel_scale=1.0):
    """Sorted, deduplicated breakpoint times in [t0, t1], endpoints included.

    Collects shape breakpoints replicated each period, kernel breakpoints at
    kernel_anchor - j*kernel_scale, and multiples of sample_width (0 disables).
    """
    t0, t1 = float(window[0]), float(window[1])
    if t0 > t1:
        raise ValueError(f"window [{t0}, {t1}] is reversed")
    pts = [t0, t1]
    if shape is not None:
        for p in shape.breakpoint_phases:
            lo_idx = math.floor(t0 / shape.period - p) - 1
            hi_idx = math.ceil(t1 / shape.period - p) + 1
            for m in range(lo_idx, hi_idx + 1):
                v = (m + p) * shape.period
                if t0 < v < t1:
                    pts.append(v)
    if kernel is not None:
        for j in range(kernel.order + 1):
            v = kernel_anchor - j * kernel_scale
            if t0 < v < t1:
                pts.append(v)
    if sample_width and sample_width > 0:
        j0 = math.floor(t0 / sample_width)
        j1 = math.ceil(t1 / sample_width)
        for j in range(j0, j1 + 1):
            v = j * sample_width
            if t0 < v < t1:
                pts.append(v)
    return np.unique(np.asarray(pts, dtype=np.float64))


# ---------------------------------------------------------------------------
# Built-in signals: the three unit-norm benchmark shapes and the two-tone
# envelope used throughout the tests and presets.
# ---------------------------------------------------------------------------

_SQRT003 = math.sqrt(0.03)


def triangle_wave(period=1.0):
    """Unit-L2-norm asymmetric triangle: rises on 60% of the period, falls on 40%."""
    return PiecewisePolyShape(
        period=period,
        segments=(
            PolySegment(0.0, 0.6, (-0.3 / _SQRT003, 1.0 / _SQRT003)),
            PolySegment(0.6, 1.0, (1.2 / _SQRT003, -1.5 / _SQRT003)),
        ),
    )


def cosine_wave(period=1.0):
    """Unit-L2-norm single harmonic: sqrt(2)*cos(2*pi*tau)."""
    return HarmonicShape(period=period, amplitude=math.sqrt(2.0))


def square_wave(period=1.0):
    """Unit-L2-norm square wave: +1 on the first half period, -1 on the second."""
    return PiecewisePolyShape(
        period=period,
        segments=(
            PolySegment(0.0, 0.5, (1.0,)),
            PolySegment(0.5, 1.0, (-1.0,)),
        ),
    )


def two_tone_envelope():
    """Slow two-tone envelope 0.04*cos(t/12) - 0.06*sin(t/(4*pi))."""
    return Envelope(terms=(
        EnvelopeTerm(0.04, 1.0 / 12.0, 0.0, "cos"),
        EnvelopeTerm(-0.06, 1.0 / (4.0 * math.pi), 0.0, "sin"),
    ))


def constant_envelope(value):
    """Envelope identically equal to value."""
    return Envelope(terms=(EnvelopeTerm(float(value), 0.0, 0.0, "cos"),))


BUILTIN_SHAPES = {
    "s1": triangle_wave,
    "s2": cosine_wave,
    "s3": square_wave,
}

BUILTIN_ENVELOPES = {
    "two-tone": two_tone_envelope,
}
