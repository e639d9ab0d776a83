"""Self-validation suite for the signal layer.

Runs the kernel and shape identities (mass, symmetry, recursion, endpoint
zeros, derivative consistency, periodicity, unit norms) and reports one
pass/fail result per check.  The inputs are parameters so a corrupted
builtin can be injected to exercise the failure path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signals import BUILTIN_SHAPES, BSplineKernel

__all__ = ["CheckResult", "run_validation_checks"]

_SEED = 20240914


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _check(name, passed, detail):
    return CheckResult(name=name, passed=bool(passed), detail=detail)


def _kernel_mass(kernel):
    a, w = np.polynomial.legendre.leggauss(8)
    total = 0.0
    for j in range(kernel.order):
        total += float(np.sum(0.5 * w * kernel(j + 0.5 + 0.5 * a)))
    return total


def run_validation_checks(kernel_orders=range(1, 7), shapes=None):
    """Execute every signal-layer identity; returns a list of CheckResult."""
    if shapes is None:
        shapes = {name: factory() for name, factory in BUILTIN_SHAPES.items()}
    rng = np.random.default_rng(_SEED)
    results = []

    for k in kernel_orders:
        kern = BSplineKernel(order=k)
        mass = _kernel_mass(kern)
        results.append(_check(
            f"kernel[{k}] unit mass", abs(mass - 1.0) <= 1e-12,
            f"integral = {mass:.15f}"))

        x = rng.uniform(-0.5, k + 0.5, size=100)
        sym_err = float(np.abs(kern(x) - kern(k - x)).max())
        results.append(_check(
            f"kernel[{k}] symmetry", sym_err <= 1e-12, f"max dev = {sym_err:.3e}"))

        if k >= 3:
            vals = (kern(0.0), kern(float(k)), kern.derivative(0.0),
                    kern.derivative(float(k)))
            results.append(_check(
                f"kernel[{k}] endpoint zeros", all(v == 0.0 for v in vals),
                f"values = {vals}"))
        else:
            results.append(_check(
                f"kernel[{k}] endpoint zeros", True,
                "not applicable (needs order >= 3)"))

        if k < 6:
            up = BSplineKernel(order=k + 1)
            a, w = np.polynomial.legendre.leggauss(8)
            worst = 0.0
            for x in rng.uniform(0.0, k + 1.0, size=100):
                cuts = sorted({0.0, 1.0,
                               *(x - j for j in range(k + 1) if 0.0 < x - j < 1.0)})
                val = 0.0
                for lo, hi in zip(cuts[:-1], cuts[1:]):
                    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
                    val += float(np.sum(half * w * kern(x - (mid + half * a))))
                worst = max(worst, abs(val - up(x)))
            results.append(_check(
                f"kernel[{k}] convolution recursion", worst <= 1e-9,
                f"max dev = {worst:.3e}"))

        if k >= 2:
            # h = 1e-5 keeps the cancellation noise of the difference quotient
            # below the 1e-8 absolute floor
            h = 1e-5
            x = rng.uniform(0.1, k - 0.1, size=50)
            x = x[np.min(np.abs(x[:, None] - np.arange(k + 1)[None, :]), axis=1) > 1e-2]
            fd = (kern(x + h) - kern(x - h)) / (2 * h)
            dv = kern.derivative(x)
            excess = float((np.abs(dv - fd) - (1e-8 + 1e-6 * np.abs(dv))).max())
            results.append(_check(
                f"kernel[{k}] derivative vs finite differences", excess <= 0.0,
                f"worst tolerance excess = {excess:.3e}"))

    for name, shape in shapes.items():
        t = rng.uniform(0.0, 20.0, size=100) * shape.period
        per_err = float(np.abs(np.asarray(shape(t)) - np.asarray(shape(t + shape.period))).max())
        results.append(_check(
            f"shape[{name}] periodicity", per_err <= 1e-9, f"max dev = {per_err:.3e}"))

        norm = shape.l2_norm()
        results.append(_check(
            f"shape[{name}] unit norm", abs(norm - 1.0) <= 1e-9,
            f"norm = {norm:.12f}"))

    return results
