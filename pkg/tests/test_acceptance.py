"""Acceptance gate: the seven headline requirements, one report line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines.  The oversampling sweeps dominate the runtime (a few minutes); they are
computed once per parameter set and shared across criteria.
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from ctsdm.analysis import convergence_sweep, fit_loglog_slope, l2_error
from ctsdm.cli import main
from ctsdm.config import load_config
from ctsdm.demod import QuadratureSpec, error_signal, filtered_input
from ctsdm.modulator import ModulatorConfig, primitive_diagnostics, run
from ctsdm.signals import BSplineKernel, InputModel, triangle_wave, two_tone_envelope

SWEEP_N = (25, 50, 100, 200, 400, 800)
LABELS = ("u1", "u2", "u3")
K3 = BSplineKernel(order=3)


CRITERION_LINES = []


def _report(num, name, passed, detail):
    line = f"[criterion {num}] {name}: {'PASS' if passed else 'FAIL'} ({detail})"
    CRITERION_LINES.append(line)
    print(line)
    return line


def _run_sweeps(substeps, points_per_cell):
    cfg = load_config("paper-all")
    modulator = replace(cfg.modulator, substeps_per_sample=substeps)
    quad = QuadratureSpec(points_per_cell=points_per_cell)
    out = {}
    for labeled in cfg.inputs:
        out[labeled.label] = convergence_sweep(
            labeled.model, modulator, SWEEP_N, duration=cfg.duration,
            kernel=cfg.kernel, grid_spacing=cfg.grid_spacing,
            norm_window=cfg.norm_window, q=quad, label=labeled.label)
    return out


@pytest.fixture(scope="module")
def fast_sweeps():
    """Criterion-1 configuration: 16 substeps, 5-point quadrature."""
    return _run_sweeps(substeps=16, points_per_cell=5)


@pytest.fixture(scope="module")
def refined_sweeps():
    """Criterion-6 configuration: 32 substeps, 10-point quadrature."""
    return _run_sweeps(substeps=32, points_per_cell=10)


class TestCriterion1Slopes:
    def test_slopes_within_brackets(self, fast_sweeps):
        slopes = {label: fast_sweeps[label].fitted_slope for label in LABELS}
        ok = (1.7 <= slopes["u1"] <= 2.3 and slopes["u2"] >= 2.1
              and 0.7 <= slopes["u3"] <= 1.3)
        detail = ", ".join(f"{k} = {v:.3f}" for k, v in slopes.items())
        _report(1, "convergence slopes", ok, detail)
        assert 1.7 <= slopes["u1"] <= 2.3, detail
        assert slopes["u2"] >= 2.1, detail
        assert 0.7 <= slopes["u3"] <= 1.3, detail
        for label in LABELS:
            assert fast_sweeps[label].failed == ()

    def test_monotone_error_trend(self, fast_sweeps):
        # supporting invariant: nonincreasing in N, one <=10% slip allowed
        for label in LABELS:
            errs = [e for _, e in fast_sweeps[label].points]
            slips = [errs[i + 1] / errs[i] for i in range(len(errs) - 1)
                     if errs[i + 1] > errs[i]]
            assert len(slips) <= 1 and all(r <= 1.10 for r in slips), \
                f"{label}: {errs} slips {slips}"


class TestCriterion2RegularityOrdering:
    def test_smooth_beats_discontinuous_at_baseline(self, fast_sweeps):
        e2 = dict(fast_sweeps["u2"].points)[200]
        e3 = dict(fast_sweeps["u3"].points)[200]
        ok = e2 < e3 and e2 / e3 <= 0.5
        _report(2, "regularity ordering at N=200", ok,
                f"smooth {e2:.3e} vs discontinuous {e3:.3e}, ratio {e2 / e3:.3f}")
        assert e2 < e3
        assert e2 / e3 <= 0.5


class TestCriterion3KernelIdentities:
    def test_kernel_identities(self):
        endpoint = (K3(0.0), K3(3.0), K3.derivative(0.0), K3.derivative(3.0))
        exact_zero = all(v == 0.0 for v in endpoint)

        a, w = np.polynomial.legendre.leggauss(8)
        mass_dev = 0.0
        for k in range(1, 7):
            kern = BSplineKernel(order=k)
            total = sum(float(np.sum(0.5 * w * kern(j + 0.5 + 0.5 * a)))
                        for j in range(k))
            mass_dev = max(mass_dev, abs(total - 1.0))

        # brute-force convolution of three indicators on a fine grid
        h = 1e-3
        n = int(round(1.0 / h))
        grid = np.arange(0, 4 * n + 1) * h
        cur = ((grid >= 0) & (grid <= 1.0)).astype(float)
        cur[0] = cur[n] = 0.5
        window = np.ones(n + 1)
        window[0] = window[-1] = 0.5
        for _ in range(2):
            conv = np.convolve(cur, window) * h
            cur = conv[: len(grid)]
        oracle_mid = float(np.interp(1.5, grid, cur))
        mid_dev = abs(K3(1.5) - oracle_mid)

        ok = exact_zero and mass_dev <= 1e-12 and mid_dev <= 1e-6 and K3(1.5) == 0.75
        _report(3, "kernel identities", ok,
                f"endpoints {endpoint}, mass dev {mass_dev:.1e}, "
                f"K3(1.5) = {K3(1.5)} vs oracle {oracle_mid:.8f}")
        assert exact_zero
        assert mass_dev <= 1e-12
        assert K3(1.5) == 0.75
        assert mid_dev <= 1e-6


class TestCriterion4ShapeNorms:
    def test_unit_norms(self):
        cfg = load_config("paper-all")
        norms = {li.label: li.model.shape.l2_norm() for li in cfg.inputs}
        devs = {k: abs(v - 1.0) for k, v in norms.items()}
        ok = all(d <= 1e-9 for d in devs.values())
        _report(4, "shape unit norms", ok,
                ", ".join(f"{k} dev {d:.2e}" for k, d in devs.items()))
        assert all(d <= 1e-9 for d in devs.values()), norms


class TestCriterion5PrimitiveDiagnostics:
    def test_running_mean_and_bounded_second_primitive(self, reference_config,
                                                       baseline_trace):
        cfg = reference_config
        n_ratio = cfg.modulator.oversampling_ratio
        diag = primitive_diagnostics(baseline_trace)
        rm = {T: abs(diag.running_mean_x1[int(T * n_ratio)])
              for T in (62.5, 125.0, 250.0)}
        decreasing = rm[62.5] > rm[125.0] > rm[250.0]
        small = rm[250.0] <= 1e-2

        trace500 = run(cfg.inputs[0].model, cfg.modulator, 500.0)
        diag500 = primitive_diagnostics(trace500)
        m250 = float(np.abs(diag.beta_m2_raw).max())
        m500 = float(np.abs(diag500.beta_m2_raw).max())
        bounded = np.isfinite(m250) and m500 <= 1.5 * m250

        ok = decreasing and small and bounded
        _report(5, "zero-mean primitive diagnostics", ok,
                f"|mean x1| {rm[62.5]:.2e} > {rm[125.0]:.2e} > {rm[250.0]:.2e}, "
                f"max |second primitive| {m250:.2e} -> {m500:.2e}")
        assert small, rm
        assert decreasing, rm
        assert bounded, (m250, m500)


class TestCriterion6NumericalErrorIsolation:
    def test_refinement_changes_norms_below_one_percent(self, fast_sweeps,
                                                        refined_sweeps):
        worst = 0.0
        for label in LABELS:
            fast = dict(fast_sweeps[label].points)
            refined = dict(refined_sweeps[label].points)
            for n in SWEEP_N:
                rel = abs(refined[n] - fast[n]) / fast[n]
                worst = max(worst, rel)
        ok = worst < 0.01
        _report(6, "numerical-error isolation", ok,
                f"max relative change {worst:.2e} across {3 * len(SWEEP_N)} norms")
        assert worst < 0.01


class TestCriterion7PropertySuites:
    def test_property_suites(self, tmp_path):
        # exact power-law slope recovery
        pts = [(n, 0.8 * (1.0 / n) ** 2.3) for n in SWEEP_N]
        slope, resid = fit_loglog_slope(pts)
        slope_ok = abs(slope - 2.3) <= 1e-10 and resid <= 1e-10

        # quadrature refinement on the piecewise-polynomial inputs
        quad_dev = 0.0
        cfg = load_config("paper-all")
        for li in cfg.inputs:
            if li.label == "u2":
                continue
            for t in (3.0, 7.25, 12.625):
                v5 = filtered_input(li.model, li.model.shape, K3, t, QuadratureSpec(5))
                v10 = filtered_input(li.model, li.model.shape, K3, t, QuadratureSpec(10))
                quad_dev = max(quad_dev, abs(v5 - v10))
        quad_ok = quad_dev < 1e-12

        # bit-identical reruns
        model = InputModel(two_tone_envelope(), triangle_wave())
        mod_cfg = ModulatorConfig(oversampling_ratio=200)
        bits_equal = np.array_equal(run(model, mod_cfg, 25.0).bitstream,
                                    run(model, mod_cfg, 25.0).bitstream)

        # CSV/SVG round-trip through the CLI for every preset
        roundtrip_ok = True
        for preset in ("paper-u1", "paper-u2", "paper-u3"):
            out = tmp_path / preset
            code = main(["simulate", "--config", preset, "--out", str(out)])
            label = preset.split("-")[1]
            csv_path = out / f"{label}_demod.csv"
            svg_path = out / f"{label}_demod.svg"
            replot = main(["plot", str(csv_path), "--kind", "demod",
                           "--out", str(tmp_path / "replot")])
            roundtrip_ok &= (code == 0 and replot == 0 and svg_path.is_file()
                             and (tmp_path / "replot" / f"{label}_demod.svg").is_file())

        ok = slope_ok and quad_ok and bits_equal and roundtrip_ok
        _report(7, "property suites", ok,
                f"slope dev {abs(slope - 2.3):.1e}, quadrature dev {quad_dev:.1e}, "
                f"determinism {bits_equal}, round-trip {roundtrip_ok}")
        assert slope_ok
        assert quad_ok
        assert bits_equal
        assert roundtrip_ok


class TestFrozenRegressionBound:
    def test_baseline_error_magnitude(self, baseline_demod):
        # self-generated regression bound for the baseline error trace
        peak = float(np.abs(baseline_demod.error).max())
        assert peak <= 1e-3, peak
