"""Critical points and well topology of the static effective potential."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .model import ModelParams, effective_potential, potential_slope

logger = logging.getLogger(__name__)

__all__ = [
    "CriticalPoint",
    "WellReport",
    "PotentialProfile",
    "potential_profile",
    "find_critical_points",
    "classify_wells",
]

DEFAULT_WINDOW = (-100.0, 100.0)
DEFAULT_GRID_N = 100_000
ROOT_WIDTH = 1e-10
CURVATURE_STEP = 1e-5
DEGENERATE_CURVATURE = 1e-8


class PotentialProfile(NamedTuple):
    x: np.ndarray
    u: np.ndarray


@dataclass(frozen=True)
class CriticalPoint:
    x: float
    u: float
    kind: str  # "minimum" | "maximum" | "degenerate"
    curvature: float

    def to_dict(self) -> dict:
        return {"x": self.x, "u": self.u, "kind": self.kind, "curvature": self.curvature}


@dataclass(frozen=True)
class WellReport:
    topology: str  # "single-well" | "double-well" | "unclassified"
    minima: tuple = ()
    barrier: Optional[CriticalPoint] = None
    asymmetry: Optional[float] = None
    critical_points: tuple = field(default=())
    window: tuple = DEFAULT_WINDOW

    def to_dict(self) -> dict:
        return {
            "topology": self.topology,
            "minima": [m.to_dict() for m in self.minima],
            "barrier": None if self.barrier is None else self.barrier.to_dict(),
            "asymmetry": self.asymmetry,
            "critical_points": [c.to_dict() for c in self.critical_points],
            "window": list(self.window),
        }


def potential_profile(params: ModelParams, x_min: float, x_max: float, n_points: int) -> PotentialProfile:
    if not x_min < x_max:
        raise ValueError("x_min must be < x_max")
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    x = np.linspace(x_min, x_max, n_points)
    return PotentialProfile(x, np.asarray(effective_potential(x, params), dtype=float))


def _bisect(params: ModelParams, a: float, b: float, sa: float) -> float:
    while True:
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            return mid
        sm = float(potential_slope(mid, params))
        if sm == 0.0:
            return mid
        if (b - a) < ROOT_WIDTH and abs(sm) < ROOT_WIDTH:
            return mid
        if (sm < 0) == (sa < 0):
            a, sa = mid, sm
        else:
            b = mid


def _critical_point(params: ModelParams, x: float) -> CriticalPoint:
    h = CURVATURE_STEP
    curv = float(potential_slope(x + h, params) - potential_slope(x - h, params)) / (2 * h)
    if abs(curv) < DEGENERATE_CURVATURE:
        kind = "degenerate"
    else:
        kind = "minimum" if curv > 0 else "maximum"
    return CriticalPoint(float(x), float(effective_potential(x, params)), kind, curv)


def find_critical_points(params: ModelParams, x_min: float = DEFAULT_WINDOW[0],
                         x_max: float = DEFAULT_WINDOW[1], grid_n: int = DEFAULT_GRID_N) -> list:
    """All zeros of dU_eff/dx in ``[x_min, x_max]``, ordered by x.

    Sign changes of the analytic slope on a uniform grid are refined by bisection
    to an interval narrower than 1e-10.
    """
    if grid_n < 100:
        raise ValueError("grid_n must be >= 100")
    if not x_min < x_max:
        raise ValueError("x_min must be < x_max")
    x = np.linspace(x_min, x_max, grid_n)
    s = np.asarray(potential_slope(x, params), dtype=float)
    roots = [float(xi) for xi in x[s == 0.0]]
    sign = np.sign(s)
    brackets = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    for i in brackets:
        roots.append(_bisect(params, float(x[i]), float(x[i + 1]), float(s[i])))
    return [_critical_point(params, r) for r in sorted(roots)]


def classify_wells(params: ModelParams, x_min: float = DEFAULT_WINDOW[0],
                   x_max: float = DEFAULT_WINDOW[1], grid_n: int = DEFAULT_GRID_N) -> WellReport:
    """Single- or double-well topology of U_eff inside a search window.

    The window is widened (2x, then 4x) until the slope is negative at the left
    edge and positive at the right edge. ``asymmetry`` is U(left min) - U(right min);
    positive means the right well is the deeper one.
    """
    lo, hi = x_min, x_max
    for factor in (1.0, 2.0, 4.0):
        lo, hi = x_min * factor, x_max * factor
        if potential_slope(lo, params) < 0 < potential_slope(hi, params):
            break
    else:
        logger.warning("slope does not bracket the window even at 4x: [%g, %g]", lo, hi)

    points = find_critical_points(params, lo, hi, grid_n)
    kinds = [p.kind for p in points]
    minima = tuple(p for p in points if p.kind == "minimum")
    window = (lo, hi)
    if kinds == ["minimum"]:
        return WellReport("single-well", minima, None, None, tuple(points), window)
    if kinds == ["minimum", "maximum", "minimum"]:
        left, barrier, right = points
        return WellReport("double-well", minima, barrier, left.u - right.u, tuple(points), window)
    return WellReport("unclassified", minima, None, None, tuple(points), window)
