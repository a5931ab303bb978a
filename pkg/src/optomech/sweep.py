"""Regime and Lyapunov maps over one- or two-dimensional parameter grids."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

from .diagnostics import (
    DEFAULT_INITIAL,
    DiagnosticsOptions,
    LyapunovError,
    classify,
    lyapunov_max,
    poincare_section,
)
from .integrate import IntegrationError, IntegratorConfig
from .landscape import classify_wells
from .model import ModelParams, ParameterError, PhaseState

logger = logging.getLogger(__name__)

__all__ = ["Axis", "SweepSpec", "SweepResult", "run_sweep", "evaluate_cell", "mean_section_x", "METRICS"]

METRICS = ("lambda_max", "regime", "well-topology")
# ratios are applied after plain fields so that e.g. eps and eps_m_ratio compose
RATIO_PARAMS = {"eps_m_ratio": ("eps_m", "eps"), "eps_kappa_ratio": ("eps", "kappa")}
PARAM_NAMES = tuple(f.name for f in fields(ModelParams)) + tuple(RATIO_PARAMS)


@dataclass(frozen=True)
class Axis:
    name: str
    min: float
    max: float
    n: int

    def __post_init__(self):
        if self.name not in PARAM_NAMES:
            raise ParameterError("axis.name", f"unknown parameter {self.name!r}; expected one of {PARAM_NAMES}")
        if self.n < 1 or (self.n == 1 and self.min != self.max):
            raise ParameterError("axis.n", "must be >= 2 (or 1 with min == max)")
        if self.min > self.max:
            raise ParameterError("axis.min", "must be <= axis.max")

    def values(self) -> list:
        if self.n == 1:
            return [float(self.min)]
        return [self.min + k * (self.max - self.min) / (self.n - 1) for k in range(self.n)]

    def to_dict(self) -> dict:
        return {"name": self.name, "min": self.min, "max": self.max, "n": self.n}


@dataclass(frozen=True)
class SweepSpec:
    axis_a: Axis
    base: ModelParams
    metric: str = "lambda_max"
    axis_b: Optional[Axis] = None
    initial: PhaseState = DEFAULT_INITIAL
    options: DiagnosticsOptions = DiagnosticsOptions()
    integrator: IntegratorConfig = IntegratorConfig()
    workers: int = 1

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ParameterError("metric", f"must be one of {METRICS}")
        # every node must produce valid params
        for a in self.axis_a.values():
            for b in (self.axis_b.values() if self.axis_b else [None]):
                self.cell_params(a, b)

    def cell_params(self, a: float, b: Optional[float] = None) -> ModelParams:
        assign = [(self.axis_a.name, a)]
        if self.axis_b is not None:
            assign.append((self.axis_b.name, b))
        plain = {k: v for k, v in assign if k not in RATIO_PARAMS}
        params = self.base.replace(**plain) if plain else self.base
        for name, value in assign:
            if name in RATIO_PARAMS:
                target, ref = RATIO_PARAMS[name]
                params = params.replace(**{target: value * getattr(params, ref)})
        return params


@dataclass
class SweepResult:
    a_values: list
    b_values: Optional[list]
    metric: str
    values: np.ndarray  # object array, shape (na, nb); None where failed
    status: np.ndarray  # "ok" | "failed"

    def rows(self):
        """Row-major ``(a, b, metric, status)`` tuples."""
        bs = self.b_values if self.b_values is not None else [None]
        for i, a in enumerate(self.a_values):
            for j, b in enumerate(bs):
                yield a, b, self.values[i, j], self.status[i, j]


def evaluate_cell(metric: str, params: ModelParams, initial, options: DiagnosticsOptions,
                  integrator: IntegratorConfig):
    if metric == "well-topology":
        return classify_wells(params).topology
    if metric == "lambda_max":
        return lyapunov_max(initial, params, options.replace(renorm_interval=params.drive_period), integrator).lambda_max
    return classify(initial, params, options, integrator, include_spectrum=False, include_wells=False).regime


def _cell(args):
    metric, params, initial, options, integrator = args
    try:
        return evaluate_cell(metric, params, initial, options, integrator), "ok"
    except (IntegrationError, LyapunovError, ValueError) as exc:
        logger.warning("cell failed: %s", exc)
        return None, "failed"


def run_sweep(spec: SweepSpec) -> SweepResult:
    """Evaluate ``spec.metric`` at every grid node from the same initial state."""
    a_vals = spec.axis_a.values()
    b_vals = spec.axis_b.values() if spec.axis_b is not None else None
    nodes = [(a, b) for a in a_vals for b in (b_vals or [None])]
    jobs = [(spec.metric, spec.cell_params(a, b), tuple(spec.initial), spec.options, spec.integrator)
            for a, b in nodes]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(_cell, jobs))
    else:
        results = [_cell(job) for job in jobs]
    shape = (len(a_vals), len(b_vals) if b_vals else 1)
    values = np.empty(shape, dtype=object)
    status = np.empty(shape, dtype=object)
    for idx, (value, st) in enumerate(results):
        i, j = divmod(idx, shape[1])
        values[i, j], status[i, j] = value, st
    return SweepResult(a_vals, b_vals, spec.metric, values, status)


def mean_section_x(params: ModelParams, options: Optional[DiagnosticsOptions] = None,
                   initial=DEFAULT_INITIAL, integrator: Optional[IntegratorConfig] = None) -> float:
    """Mean displacement over the retained Poincare-section points."""
    options = options or DiagnosticsOptions()
    section = poincare_section(initial, params, options.n_transient, options.n_points, integrator)
    if section.failed_index is not None:
        raise IntegrationError(f"section failed at j={section.failed_index}", float("nan"), ())
    return float(section.x.mean())
