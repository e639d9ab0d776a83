"""Declarative experiment configuration.

Experiments are described in TOML (sections or flat dotted keys).  Parsing is
strict: any key outside the documented schema aborts before any computation.
The built-in presets paper-u1, paper-u2 and paper-u3 hard-code the reference
experiment (two-tone envelope times one of the unit-norm shapes, T_s = 5e-3,
duration 250) so reproduction never depends on hand transcription; paper-all
bundles all three inputs for a combined sweep.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .demod import QuadratureSpec
from .modulator import ModulatorConfig
from .signals import (
    BUILTIN_ENVELOPES,
    BUILTIN_SHAPES,
    BSplineKernel,
    Envelope,
    EnvelopeTerm,
    HarmonicShape,
    InputModel,
    PiecewisePolyShape,
    PolySegment,
    constant_envelope,
)

__all__ = ["ConfigError", "LabeledInput", "ExperimentConfig", "load_config",
           "preset_names", "DEFAULT_SWEEP_N"]

DEFAULT_SWEEP_N = (25, 50, 100, 200, 400, 800)


class ConfigError(ValueError):
    """Invalid or unknown configuration content."""


@dataclass(frozen=True)
class LabeledInput:
    label: str
    model: InputModel


@dataclass(frozen=True)
class ExperimentConfig:
    inputs: tuple[LabeledInput, ...]
    modulator: ModulatorConfig
    kernel: BSplineKernel
    duration: float
    grid_spacing: float
    norm_window: tuple[float, float]
    sweep_n: tuple[int, ...]
    quadrature: QuadratureSpec
    out_dir: str = "."
    svg: bool = True
    jobs: int = 0  # 0 -> one worker per available CPU


_SCHEMA = {
    "input": {"label", "envelope", "shape"},
    "modulator": {"oversampling_ratio", "pwm_period", "substeps_per_sample",
                  "levels", "threshold", "output_coeffs", "initial_state",
                  "stability_bound"},
    "kernel": {"order"},
    "run": {"duration", "grid_spacing", "norm_window"},
    "sweep": {"n_values"},
    "quadrature": {"points_per_cell", "max_cell_periods"},
    "output": {"directory", "svg", "jobs"},
}

_ENVELOPE_KEYS = {"terms", "constant"}
_TERM_KEYS = {"amplitude", "angular_frequency", "phase", "kind"}
_SHAPE_KEYS = {"period", "amplitude", "cycles", "phase", "segments"}
_SEGMENT_KEYS = {"start", "end", "coeffs"}


def _require_keys(table, allowed, where):
    for key in table:
        if key not in allowed:
            raise ConfigError(f"unknown key '{where}.{key}'" if where
                              else f"unknown key '{key}'")


def _number(table, key, where, default=None, required=False):
    if key not in table:
        if required:
            raise ConfigError(f"missing required key '{where}.{key}'")
        return default
    v = table[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"'{where}.{key}' must be a number")
    return float(v)


def _integer(table, key, where, default=None, required=False):
    if key not in table:
        if required:
            raise ConfigError(f"missing required key '{where}.{key}'")
        return default
    v = table[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"'{where}.{key}' must be an integer")
    return v


def _pair(table, key, where, default):
    if key not in table:
        return default
    v = table[key]
    if (not isinstance(v, list) or len(v) != 2
            or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in v)):
        raise ConfigError(f"'{where}.{key}' must be a list of two numbers")
    return (float(v[0]), float(v[1]))


def _build_envelope(entry, where):
    if isinstance(entry, str):
        if entry not in BUILTIN_ENVELOPES:
            raise ConfigError(f"unknown envelope preset '{entry}' at '{where}' "
                              f"(available: {sorted(BUILTIN_ENVELOPES)})")
        return BUILTIN_ENVELOPES[entry]()
    if not isinstance(entry, dict):
        raise ConfigError(f"'{where}' must be a preset name or a table")
    _require_keys(entry, _ENVELOPE_KEYS, where)
    if "constant" in entry and "terms" in entry:
        raise ConfigError(f"'{where}' cannot set both 'constant' and 'terms'")
    if "constant" in entry:
        return constant_envelope(_number(entry, "constant", where, required=True))
    terms = entry.get("terms")
    if not isinstance(terms, list):
        raise ConfigError(f"'{where}.terms' must be a list of tables")
    built = []
    for i, term in enumerate(terms):
        tw = f"{where}.terms[{i}]"
        if not isinstance(term, dict):
            raise ConfigError(f"'{tw}' must be a table")
        _require_keys(term, _TERM_KEYS, tw)
        kind = term.get("kind", "cos")
        if kind not in ("cos", "sin"):
            raise ConfigError(f"'{tw}.kind' must be 'cos' or 'sin'")
        built.append(EnvelopeTerm(
            amplitude=_number(term, "amplitude", tw, required=True),
            angular_frequency=_number(term, "angular_frequency", tw, required=True),
            phase=_number(term, "phase", tw, default=0.0),
            kind=kind,
        ))
    return Envelope(terms=tuple(built))


def _build_shape(entry, where, default_period):
    if isinstance(entry, str):
        if entry not in BUILTIN_SHAPES:
            raise ConfigError(f"unknown shape preset '{entry}' at '{where}' "
                              f"(available: {sorted(BUILTIN_SHAPES)})")
        return BUILTIN_SHAPES[entry](period=default_period)
    if not isinstance(entry, dict):
        raise ConfigError(f"'{where}' must be a preset name or a table")
    _require_keys(entry, _SHAPE_KEYS, where)
    period = _number(entry, "period", where, default=default_period)
    if "segments" in entry:
        for key in ("amplitude", "cycles", "phase"):
            if key in entry:
                raise ConfigError(f"'{where}' mixes segments with harmonic keys")
        segments = []
        for i, seg in enumerate(entry["segments"]):
            sw = f"{where}.segments[{i}]"
            if not isinstance(seg, dict):
                raise ConfigError(f"'{sw}' must be a table")
            _require_keys(seg, _SEGMENT_KEYS, sw)
            coeffs = seg.get("coeffs")
            if (not isinstance(coeffs, list) or not coeffs
                    or any(isinstance(c, bool) or not isinstance(c, (int, float))
                           for c in coeffs)):
                raise ConfigError(f"'{sw}.coeffs' must be a nonempty list of numbers")
            segments.append(PolySegment(
                start=_number(seg, "start", sw, required=True),
                end=_number(seg, "end", sw, required=True),
                coeffs=tuple(float(c) for c in coeffs),
            ))
        try:
            return PiecewisePolyShape(period=period, segments=tuple(segments))
        except ValueError as exc:
            raise ConfigError(f"invalid '{where}': {exc}") from exc
    if "amplitude" not in entry:
        raise ConfigError(f"'{where}' needs either 'segments' or harmonic keys")
    try:
        return HarmonicShape(
            period=period,
            amplitude=_number(entry, "amplitude", where, required=True),
            cycles=_integer(entry, "cycles", where, default=1),
            phase=_number(entry, "phase", where, default=0.0),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid '{where}': {exc}") from exc


def _build_input(table, index, default_period):
    where = f"input[{index}]"
    if not isinstance(table, dict):
        raise ConfigError(f"'{where}' must be a table")
    _require_keys(table, _SCHEMA["input"], where)
    if "shape" not in table:
        raise ConfigError(f"missing required key '{where}.shape'")
    if "envelope" not in table:
        raise ConfigError(f"missing required key '{where}.envelope'")
    label = table.get("label", f"input{index}")
    if not isinstance(label, str):
        raise ConfigError(f"'{where}.label' must be a string")
    model = InputModel(
        envelope=_build_envelope(table["envelope"], f"{where}.envelope"),
        shape=_build_shape(table["shape"], f"{where}.shape", default_period),
    )
    return LabeledInput(label=label, model=model)


def parse_config(data: dict) -> ExperimentConfig:
    """Build an ExperimentConfig from parsed TOML data; strict on unknown keys."""
    if not isinstance(data, dict):
        raise ConfigError("configuration root must be a table")
    _require_keys(data, set(_SCHEMA), "")

    mod_tbl = data.get("modulator", {})
    _require_keys(mod_tbl, _SCHEMA["modulator"], "modulator")
    n_ratio = _integer(mod_tbl, "oversampling_ratio", "modulator", required=True)
    pwm_period = _number(mod_tbl, "pwm_period", "modulator", default=1.0)
    threshold = _number(mod_tbl, "threshold", "modulator", default=None)
    try:
        modulator = ModulatorConfig(
            oversampling_ratio=n_ratio,
            pwm_period=pwm_period,
            substeps_per_sample=_integer(mod_tbl, "substeps_per_sample",
                                         "modulator", default=16),
            levels=_pair(mod_tbl, "levels", "modulator", (-1.0, 1.0)),
            threshold=threshold,
            output_coeffs=_pair(mod_tbl, "output_coeffs", "modulator", (1.5, 1.0)),
            initial_state=_pair(mod_tbl, "initial_state", "modulator", (0.0, 0.0)),
            stability_bound=_number(mod_tbl, "stability_bound", "modulator",
                                    default=10.0),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid modulator configuration: {exc}") from exc

    raw_inputs = data.get("input")
    if raw_inputs is None:
        raise ConfigError("at least one [[input]] table is required")
    if isinstance(raw_inputs, dict):
        raw_inputs = [raw_inputs]
    if not isinstance(raw_inputs, list) or not raw_inputs:
        raise ConfigError("'input' must be one or more tables")
    inputs = tuple(_build_input(tbl, i, pwm_period) for i, tbl in enumerate(raw_inputs))
    labels = [inp.label for inp in inputs]
    if len(set(labels)) != len(labels):
        raise ConfigError("input labels must be unique")

    kern_tbl = data.get("kernel", {})
    _require_keys(kern_tbl, _SCHEMA["kernel"], "kernel")
    try:
        kernel = BSplineKernel(order=_integer(kern_tbl, "order", "kernel", default=3))
    except ValueError as exc:
        raise ConfigError(f"invalid kernel: {exc}") from exc

    run_tbl = data.get("run", {})
    _require_keys(run_tbl, _SCHEMA["run"], "run")
    duration = _number(run_tbl, "duration", "run", required=True)
    if duration <= 0:
        raise ConfigError("duration must be positive")
    grid_spacing = _number(run_tbl, "grid_spacing", "run", default=1.0 / 32.0)
    if grid_spacing <= 0:
        raise ConfigError("'run.grid_spacing' must be positive")
    norm_window = _pair(run_tbl, "norm_window", "run", (1.0, min(250.0, duration)))
    t0, t1 = norm_window
    if not 0.0 <= t0 < t1 <= duration + 1e-9:
        raise ConfigError(f"norm window [{t0}, {t1}] must lie inside [0, {duration}]")
    steps = (t1 - t0) / grid_spacing
    if abs(steps - round(steps)) > 1e-9:
        raise ConfigError("norm window must span a whole number of grid steps")

    sweep_tbl = data.get("sweep", {})
    _require_keys(sweep_tbl, _SCHEMA["sweep"], "sweep")
    n_values = sweep_tbl.get("n_values", list(DEFAULT_SWEEP_N))
    if (not isinstance(n_values, list)
            or any(isinstance(v, bool) or not isinstance(v, int) for v in n_values)):
        raise ConfigError("'sweep.n_values' must be a list of integers")

    quad_tbl = data.get("quadrature", {})
    _require_keys(quad_tbl, _SCHEMA["quadrature"], "quadrature")
    try:
        quadrature = QuadratureSpec(
            points_per_cell=_integer(quad_tbl, "points_per_cell", "quadrature",
                                     default=5),
            max_cell_periods=_number(quad_tbl, "max_cell_periods", "quadrature",
                                     default=0.0625),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid quadrature: {exc}") from exc

    out_tbl = data.get("output", {})
    _require_keys(out_tbl, _SCHEMA["output"], "output")
    directory = out_tbl.get("directory", ".")
    if not isinstance(directory, str):
        raise ConfigError("'output.directory' must be a string")
    svg = out_tbl.get("svg", True)
    if not isinstance(svg, bool):
        raise ConfigError("'output.svg' must be a boolean")
    jobs = _integer(out_tbl, "jobs", "output", default=0)
    if jobs < 0:
        raise ConfigError("'output.jobs' must be nonnegative")

    return ExperimentConfig(
        inputs=inputs, modulator=modulator, kernel=kernel, duration=duration,
        grid_spacing=grid_spacing, norm_window=(t0, t1),
        sweep_n=tuple(n_values), quadrature=quadrature,
        out_dir=directory, svg=svg, jobs=jobs,
    )


def _paper_preset(shapes):
    data = {
        "input": [{"label": label, "envelope": "two-tone", "shape": shape}
                  for label, shape in shapes],
        "modulator": {"oversampling_ratio": 200},
        "kernel": {"order": 3},
        "run": {"duration": 250.0, "grid_spacing": 1.0 / 32.0,
                "norm_window": [1.0, 250.0]},
        "sweep": {"n_values": list(DEFAULT_SWEEP_N)},
    }
    return parse_config(data)


_PRESETS = {
    "paper-u1": lambda: _paper_preset([("u1", "s1")]),
    "paper-u2": lambda: _paper_preset([("u2", "s2")]),
    "paper-u3": lambda: _paper_preset([("u3", "s3")]),
    "paper-all": lambda: _paper_preset([("u1", "s1"), ("u2", "s2"), ("u3", "s3")]),
}


def preset_names():
    return sorted(_PRESETS)


def load_config(name_or_path: str) -> ExperimentConfig:
    """Load a built-in preset by name, or parse a TOML file."""
    if name_or_path in _PRESETS:
        return _PRESETS[name_or_path]()
    path = Path(name_or_path)
    if not path.is_file():
        raise ConfigError(
            f"'{name_or_path}' is neither a preset ({', '.join(preset_names())}) "
            f"nor an existing file")
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return parse_config(data)
