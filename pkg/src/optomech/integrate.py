"""Dormand-Prince 5(4) time stepping with exact-time clamping.

Sample and section times are reached by shortening the last step so that the
final stage lands on the requested time; there is no dense-output interpolation.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .model import ModelParams, PhaseState, vector_field

__all__ = [
    "IntegratorConfig",
    "IntegrationError",
    "StiffnessError",
    "Trajectory",
    "Stepper",
    "step",
    "step_pair",
    "integrate_to",
    "sample_trajectory",
]

MIN_STEP = 1e-14
SAFETY = 0.9
MIN_FACTOR, MAX_FACTOR = 0.2, 5.0

# Dormand & Prince (1980) coefficients.
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
# 5th-order weights equal the last row of _A (FSAL); _E = b5 - b4.
_E = (
    71 / 57600,
    0.0,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)


class IntegrationError(RuntimeError):
    """Non-finite state produced; carries the last good time and state."""

    def __init__(self, message: str, t: float, state: Sequence[float]):
        super().__init__(f"{message} (last good t={t!r})")
        self.t = t
        self.state = tuple(state)
        self.partial = None
        self.index = None
        # True when only components beyond the controlled ones blew up
        self.tangent_only = False


class StiffnessError(IntegrationError):
    """Adaptive step fell below the underflow floor."""


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-11
    initial_step: float = 1e-3
    max_step: float = 0.1
    fixed_step: Optional[float] = None

    def __post_init__(self):
        from .model import ParameterError

        if not self.rel_tol > 0:
            raise ParameterError("rel_tol", "must be > 0")
        if not self.abs_tol > 0:
            raise ParameterError("abs_tol", "must be > 0")
        if not self.initial_step > 0:
            raise ParameterError("initial_step", "must be > 0")
        if not self.max_step >= self.initial_step:
            raise ParameterError("max_step", "must be >= initial_step")
        if self.fixed_step is not None and not self.fixed_step > 0:
            raise ParameterError("fixed_step", "must be > 0 when set")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Trajectory:
    """Uniformly sampled states; sample k sits at ``t0 + k * dt_sample``."""

    t0: float
    dt_sample: float
    samples: list = field(default_factory=list)

    def __len__(self):
        return len(self.samples)

    @property
    def times(self) -> np.ndarray:
        return np.array([self.t0 + k * self.dt_sample for k in range(len(self.samples))])

    @property
    def x(self) -> np.ndarray:
        return np.array([s[0] for s in self.samples])

    @property
    def p(self) -> np.ndarray:
        return np.array([s[1] for s in self.samples])


def _dopri(f, t, y, h, k1):
    """One Dormand-Prince step. Returns (y5, err_vector, k7); k7 is f at the new point."""
    n = len(y)
    ks = [k1]
    for i in range(1, 7):
        row = _A[i]
        yi = tuple(y[c] + h * sum(row[j] * ks[j][c] for j in range(i)) for c in range(n))
        ks.append(f(t + _C[i] * h, yi))
    y5 = yi
    err = tuple(h * sum(_E[j] * ks[j][c] for j in range(7)) for c in range(n))
    return y5, err, ks[6]


def step_pair(state, t: float, h: float, params: ModelParams):
    """Both embedded solutions ``(y5, y4)`` of one step of size ``h``."""
    if not h > 0:
        raise ValueError("step size must be > 0")
    f = vector_field(params)
    y = tuple(state)
    y5, err, _ = _dopri(f, t, y, h, f(t, y))
    y4 = tuple(a - e for a, e in zip(y5, err))
    return PhaseState(*y5), PhaseState(*y4)


def step(state, t: float, h: float, params: ModelParams):
    """Advance one step; returns ``(new_state, error_estimate)`` with the max-norm of y5 - y4."""
    if not h > 0:
        raise ValueError("step size must be > 0")
    f = vector_field(params)
    y = tuple(state)
    y5, err, _ = _dopri(f, t, y, h, f(t, y))
    if not all(math.isfinite(v) for v in y5):
        raise IntegrationError("non-finite state", t, y)
    return PhaseState(*y5), max(abs(e) for e in err)


class Stepper:
    """Marches a vector field through successive target times.

    Keeps the adaptive step size between targets. Only the first ``control_dims``
    components enter the error norm, so co-integrated tangent vectors do not
    alter the step sequence of the state itself.
    """

    def __init__(self, f: Callable, t: float, y: Sequence[float],
                 config: Optional[IntegratorConfig] = None, control_dims: Optional[int] = None):
        self.f = f
        self.config = config or IntegratorConfig()
        self.t = float(t)
        self.y = tuple(float(v) for v in y)
        self.control_dims = len(self.y) if control_dims is None else control_dims
        self.h = self.config.initial_step
        self._k1 = None
        self.n_steps = 0
        self.n_rejected = 0

    def set_state(self, y: Sequence[float]):
        """Replace the current state; the cached derivative is discarded."""
        self.y = tuple(float(v) for v in y)
        self._k1 = None

    def scale_tail(self, start: int, factor: float):
        """Multiply components ``start:`` of the state by ``factor``.

        Valid only when those components enter the vector field linearly (tangent
        vectors); the cached derivative is scaled along so the remaining
        components keep exactly the same step sequence.
        """
        self.y = self.y[:start] + tuple(v * factor for v in self.y[start:])
        if self._k1 is not None:
            self._k1 = tuple(self._k1[:start]) + tuple(v * factor for v in self._k1[start:])

    def advance_to(self, t_target: float) -> tuple:
        if t_target < self.t:
            raise ValueError("t_target must be >= current time")
        cfg = self.config
        f = self.f
        t, y = self.t, self.y
        k1 = self._k1 if self._k1 is not None else f(t, y)
        nc = self.control_dims
        while t < t_target:
            h = cfg.fixed_step if cfg.fixed_step is not None else self.h
            last = t + h >= t_target
            if last:
                h = t_target - t
            y_new, err, k7 = _dopri(f, t, y, h, k1)
            if not all(math.isfinite(v) for v in y_new):
                self.t, self.y, self._k1 = t, y, k1
                exc = IntegrationError("non-finite state", t, y)
                exc.tangent_only = nc < len(y) and all(math.isfinite(v) for v in y_new[:nc])
                raise exc
            if cfg.fixed_step is not None:
                accept = True
            else:
                norm = 0.0
                for c in range(nc):
                    scale = cfg.abs_tol + cfg.rel_tol * max(abs(y[c]), abs(y_new[c]))
                    norm = max(norm, abs(err[c]) / scale)
                accept = norm <= 1.0
                factor = MAX_FACTOR if norm == 0.0 else SAFETY * norm ** -0.2
                factor = min(MAX_FACTOR, max(MIN_FACTOR, factor))
                # an accepted clamped step keeps the carried step size
                if not (last and accept):
                    self.h = min(cfg.max_step, h * factor)
                if self.h < MIN_STEP:
                    self.t, self.y, self._k1 = t, y, k1
                    raise StiffnessError(f"step size underflow (h={self.h!r})", t, y)
            if accept:
                t = t_target if last else t + h
                y, k1 = y_new, k7
                self.n_steps += 1
            else:
                self.n_rejected += 1
        self.t, self.y, self._k1 = t, y, k1
        return y


def integrate_to(state, t: float, t_target: float, params: ModelParams,
                 config: Optional[IntegratorConfig] = None) -> PhaseState:
    """State at exactly ``t_target``."""
    if t_target < t:
        raise ValueError("t_target must be >= t")
    stepper = Stepper(vector_field(params), t, state, config)
    return PhaseState(*stepper.advance_to(t_target))


def sample_trajectory(initial, t0: float, t1: float, dt_sample: float, params: ModelParams,
                      config: Optional[IntegratorConfig] = None) -> Trajectory:
    """Sample the flow at ``t0 + k * dt_sample`` for every such time not beyond ``t1``.

    If ``dt_sample`` exceeds the span it is clamped to ``t1 - t0`` so both
    endpoints are returned. On failure the raised error carries the partial
    trajectory in ``.partial`` and the index of the last good sample in ``.index``.
    """
    if not t1 > t0:
        raise ValueError("t1 must be > t0")
    if not dt_sample > 0:
        raise ValueError("dt_sample must be > 0")
    span = t1 - t0
    if dt_sample > span:
        dt_sample = span
    n = int(math.floor(span / dt_sample * (1.0 + 1e-12))) + 1
    traj = Trajectory(t0, dt_sample, [PhaseState(*map(float, initial))])
    stepper = Stepper(vector_field(params), t0, initial, config)
    for k in range(1, n):
        try:
            y = stepper.advance_to(t0 + k * dt_sample)
        except IntegrationError as exc:
            exc.partial, exc.index = traj, len(traj) - 1
            raise
        traj.samples.append(PhaseState(*y))
    return traj
