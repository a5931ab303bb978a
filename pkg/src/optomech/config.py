"""Scenario configuration files and the figure presets.

A scenario is a JSON object with one section per module::

    {"model": {...}, "initial": {"x0": 1e-06, "p0": 0.0}, "integrator": {...},
     "diagnostics": {...}, "landscape": {...}, "output": {"directory": "out"}}
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

from .diagnostics import DEFAULT_INITIAL, FAST_OPTIONS, DiagnosticsOptions
from .integrate import IntegratorConfig
from .model import ModelParams, ParameterError, PhaseState
from .sweep import Axis, SweepSpec

__all__ = [
    "ConfigError",
    "LandscapeConfig",
    "OutputConfig",
    "ScenarioConfig",
    "Preset",
    "PRESETS",
    "preset_config",
    "load_config",
    "load_sweep_spec",
    "sweep_spec_from_dict",
]


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the dotted field path."""


@dataclass(frozen=True)
class LandscapeConfig:
    x_min: float = -100.0
    x_max: float = 100.0
    n_points: int = 2001
    eps_kappa_ratios: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "eps_kappa_ratios", tuple(float(r) for r in self.eps_kappa_ratios))
        if not self.x_min < self.x_max:
            raise ParameterError("x_min", "must be < x_max")
        if self.n_points < 2:
            raise ParameterError("n_points", "must be >= 2")
        if any(r < 0 for r in self.eps_kappa_ratios):
            raise ParameterError("eps_kappa_ratios", "entries must be >= 0")


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    float_format: str = ".16e"

    def __post_init__(self):
        try:
            format(1.0, self.float_format)
        except (ValueError, TypeError):
            raise ParameterError("float_format", f"not a valid float format spec: {self.float_format!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    model: ModelParams = ModelParams()
    initial: PhaseState = DEFAULT_INITIAL
    integrator: IntegratorConfig = IntegratorConfig()
    diagnostics: DiagnosticsOptions = DiagnosticsOptions()
    landscape: LandscapeConfig = LandscapeConfig()
    output: OutputConfig = OutputConfig()

    def to_dict(self) -> dict:
        land = asdict(self.landscape)
        land["eps_kappa_ratios"] = list(self.landscape.eps_kappa_ratios)
        return {
            "model": asdict(self.model),
            "initial": {"x0": self.initial.x, "p0": self.initial.p},
            "integrator": asdict(self.integrator),
            "diagnostics": asdict(self.diagnostics),
            "landscape": land,
            "output": asdict(self.output),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise ConfigError("<root>: expected a JSON object")
        sections = {"model", "initial", "integrator", "diagnostics", "landscape", "output"}
        for key in data:
            if key not in sections:
                raise ConfigError(f"{key}: unknown section")
        initial = _section(data, "initial", None)
        if initial is None:
            state = DEFAULT_INITIAL
        else:
            _check_keys("initial", initial, {"x0", "p0"})
            try:
                state = PhaseState(float(initial.get("x0", 0.0)), float(initial.get("p0", 0.0)))
            except (TypeError, ValueError):
                raise ConfigError("initial: x0 and p0 must be numbers")
        return cls(
            model=_build("model", ModelParams, _section(data, "model", {})),
            initial=state,
            integrator=_build("integrator", IntegratorConfig, _section(data, "integrator", {})),
            diagnostics=_build("diagnostics", DiagnosticsOptions, _section(data, "diagnostics", {})),
            landscape=_build("landscape", LandscapeConfig, _section(data, "landscape", {})),
            output=_build("output", OutputConfig, _section(data, "output", {})),
        )

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"<root>: not valid JSON ({exc})")
        return cls.from_dict(data)


def _section(data, name, default):
    value = data.get(name, default)
    if value is not None and not isinstance(value, dict):
        raise ConfigError(f"{name}: expected an object")
    return value


def _check_keys(section, data, allowed):
    for key in data:
        if key not in allowed:
            raise ConfigError(f"{section}.{key}: unknown field")


def _build(section: str, cls, data: dict):
    _check_keys(section, data, {f.name for f in fields(cls)})
    try:
        return cls(**data)
    except ParameterError as exc:
        raise ConfigError(f"{section}.{exc}") from None
    except TypeError as exc:
        raise ConfigError(f"{section}: {exc}") from None


def load_config(path) -> ScenarioConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"<file>: cannot read {path}: {exc}")
    return ScenarioConfig.from_json(text)


@dataclass(frozen=True)
class Preset:
    """Figure parameter bundle; absolutes are derived from the caption ratios."""

    name: str
    g1: float
    g2: float
    g3: float
    eps_kappa_ratio: float = 5.0
    eps_m_ratio: float = 0.20007
    kappa: float = 50.0
    delta: float = -1.0
    omega_drive: float = 1.8
    potential_eps_ratios: tuple = ()
    spectrum_partial_fraction: Optional[float] = None
    description: str = ""

    def model(self) -> ModelParams:
        eps = self.eps_kappa_ratio * self.kappa
        return ModelParams(kappa=self.kappa, delta=self.delta, g1=self.g1, g2=self.g2, g3=self.g3,
                           eps=eps, eps_m=self.eps_m_ratio * eps, omega_drive=self.omega_drive)

    def config(self) -> ScenarioConfig:
        return ScenarioConfig(
            model=self.model(),
            diagnostics=DiagnosticsOptions(spectrum_partial_fraction=self.spectrum_partial_fraction),
            landscape=LandscapeConfig(eps_kappa_ratios=self.potential_eps_ratios),
        )


_FIG1 = dict(g1=0.15, g2=0.0075, eps_m_ratio=0.0, potential_eps_ratios=(0.0, 3.0, 5.0))

PRESETS = {
    p.name: p
    for p in (
        Preset("fig1a", g3=0.00025, description="landscape, positive cubic coupling", **_FIG1),
        Preset("fig1b", g3=0.0, description="landscape, no cubic coupling", **_FIG1),
        Preset("fig1c", g3=-0.00025, description="landscape, negative cubic coupling", **_FIG1),
        Preset("fig2", g1=0.15, g2=0.0, g3=0.0, description="linear coupling only"),
        Preset("fig3", g1=0.0, g2=0.0075, g3=0.0, description="quadratic coupling only"),
        Preset("fig4", g1=0.15, g2=0.0075, g3=0.0, spectrum_partial_fraction=0.1,
               description="linear and quadratic coupling"),
        Preset("fig5", g1=0.15, g2=0.0075, g3=0.00025, description="all three couplings"),
        Preset("fig6-pos", g1=0.15, g2=0.0075, g3=0.00025, eps_m_ratio=0.5001,
               description="strong modulation, positive cubic coupling"),
        Preset("fig6-neg", g1=0.15, g2=0.0075, g3=-0.00025, eps_m_ratio=0.5001,
               description="strong modulation, negative cubic coupling"),
    )
}


def preset_config(name: str) -> ScenarioConfig:
    try:
        return PRESETS[name].config()
    except KeyError:
        raise ConfigError(f"preset: unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def _axis(data, name) -> Axis:
    if not isinstance(data, dict):
        raise ConfigError(f"{name}: expected an object")
    _check_keys(name, data, {"name", "min", "max", "n"})
    try:
        return Axis(data["name"], float(data["min"]), float(data["max"]), int(data["n"]))
    except KeyError as exc:
        raise ConfigError(f"{name}.{exc.args[0]}: missing field") from None
    except ParameterError as exc:
        raise ConfigError(f"{name}.{exc.field.split('.')[-1]}: {exc}") from None


def sweep_spec_from_dict(data: dict, fast: bool = False) -> SweepSpec:
    """Build a :class:`SweepSpec` from a parsed sweep file.

    ``base`` is a model section; ``base_preset`` starts from a figure preset and
    ``base`` then overrides individual fields.
    """
    if not isinstance(data, dict):
        raise ConfigError("<root>: expected a JSON object")
    allowed = {"axis_a", "axis_b", "metric", "base", "base_preset", "initial", "diagnostics",
               "integrator", "workers"}
    _check_keys("sweep", data, allowed)
    if "axis_a" not in data:
        raise ConfigError("axis_a: missing")
    scenario = ScenarioConfig()
    if "base_preset" in data:
        scenario = preset_config(data["base_preset"])
    model = asdict(scenario.model)
    model.update(_section(data, "base", {}) or {})
    sub = {"model": model, "initial": data.get("initial"), "integrator": data.get("integrator", {}),
           "diagnostics": data.get("diagnostics", {})}
    sc = ScenarioConfig.from_dict({k: v for k, v in sub.items() if v is not None})
    options = sc.diagnostics
    if fast:
        options = options.replace(n_transient=FAST_OPTIONS.n_transient, n_points=FAST_OPTIONS.n_points)
    try:
        return SweepSpec(
            axis_a=_axis(data["axis_a"], "axis_a"),
            axis_b=_axis(data["axis_b"], "axis_b") if data.get("axis_b") is not None else None,
            metric=data.get("metric", "lambda_max"),
            base=sc.model,
            initial=sc.initial,
            options=options,
            integrator=sc.integrator,
            workers=int(data.get("workers", 1)),
        )
    except ParameterError as exc:
        raise ConfigError(f"sweep.{exc}") from None


def load_sweep_spec(path, fast: bool = False) -> SweepSpec:
    try:
        text = Path(path).read_text(encoding="utf-8")
        data = json.loads(text)
    except OSError as exc:
        raise ConfigError(f"<file>: cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"<root>: not valid JSON ({exc})")
    return sweep_spec_from_dict(data, fast=fast)
