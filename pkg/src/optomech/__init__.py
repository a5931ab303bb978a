"""Classical dynamics of a driven resonator with linear, quadratic and cubic optomechanical coupling."""

__version__ = "0.1.0"

from .model import ModelParams, PhaseState, ParameterError  # noqa: E402
from .integrate import IntegratorConfig, Trajectory, integrate_to, sample_trajectory  # noqa: E402
from .landscape import classify_wells, find_critical_points, potential_profile  # noqa: E402
from .diagnostics import (  # noqa: E402
    DEFAULT_INITIAL,
    DiagnosticsOptions,
    classify,
    lyapunov_max,
    poincare_section,
    power_spectrum,
)
from .sweep import SweepSpec, Axis, run_sweep, mean_section_x  # noqa: E402
