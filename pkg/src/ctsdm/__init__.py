"""Continuous-time second-order sigma-delta modulator toolkit.

Simulates the two-integrator loop with a sampled 1-bit quantizer, demodulates
the bitstream against a periodic shape through B-spline (iterated moving
average) kernels, and quantifies how fast the filtered error shrinks as the
oversampling ratio grows.
"""

from .analysis import (
    SweepResult,
    TrackingError,
    convergence_sweep,
    fit_loglog_slope,
    l2_error,
    riemann_lebesgue_check,
    write_summary_csv,
    write_sweep_csv,
)
from .checks import CheckResult, run_validation_checks
from .config import (
    ConfigError,
    ExperimentConfig,
    LabeledInput,
    load_config,
    preset_names,
)
from .demod import (
    DemodulationResult,
    QuadratureSpec,
    error_signal,
    filtered_input,
    filtered_output,
    write_demod_csv,
)
from .modulator import (
    InstabilityDetected,
    ModulatorConfig,
    ModulatorState,
    PrimitiveDiagnostics,
    SimulationTrace,
    StabilityReport,
    check_stability,
    primitive_diagnostics,
    quantize,
    run,
    step_sample_interval,
    write_trace_csv,
)
from .signals import (
    BSplineKernel,
    Envelope,
    EnvelopeTerm,
    HarmonicShape,
    InputModel,
    PeriodicShape,
    PiecewisePolyShape,
    PolySegment,
    breakpoints_in,
    constant_envelope,
    cosine_wave,
    square_wave,
    triangle_wave,
    two_tone_envelope,
)

__version__ = "0.1.0"
