"""Equation of motion of a mechanical resonator with an adiabatically eliminated cavity.

Units: m = 1, omega_m = 1, displacement in zero-point units x_zpf and every rate
in units of omega_m. The coupling polynomial is ``f(x) = g1 x + g2 x**2 + g3 x**3``
with the rescaled couplings ``g_i x_zpf**i``. The momentum equation reads::

    dp/dt = -omega_m**2 x + s * P(t) f'(x) / ((delta - f(x))**2 + kappa**2/4) - (gamma/2) p

where ``P(t) = eps**2 - eps_m**2 sin(Omega t)`` and ``s = force_scale``. With
``x_zpf**2 = 1/(2 m omega_m)`` the conversion of the force to zero-point units
gives ``s = 1/(m x_zpf**2) = 2 omega_m``; ``s = 1`` is the raw form in which
x_zpf is set to one.

All functions accept floats or numpy arrays for the displacement.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from typing import Callable, NamedTuple

import numpy as np

__all__ = [
    "ModelParams",
    "ParameterError",
    "PhaseState",
    "coupling_f",
    "coupling_df",
    "coupling_ddf",
    "drive_power",
    "radiation_force",
    "rhs",
    "jacobian",
    "effective_potential",
    "potential_slope",
    "energy",
    "vector_field",
    "tangent_field",
]


class ParameterError(ValueError):
    """Invalid model parameter; ``field`` names the offending attribute."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class PhaseState(NamedTuple):
    x: float
    p: float


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless constants of the driven optomechanical resonator.

    Parameters
    ----------
    kappa : float
        Cavity decay rate, > 0.
    delta : float
        Detuning omega_c - omega_d.
    g1, g2, g3 : float
        Linear, quadratic and cubic couplings in zero-point units.
    eps : float
        Drive amplitude, >= 0.
    eps_m : float
        Power-modulation amplitude, 0 <= eps_m <= eps.
    omega_drive : float
        Modulation frequency Omega, > 0.
    gamma : float
        Mechanical damping rate, >= 0.
    omega_m : float
        Mechanical frequency. Fixed to 1 by the unit convention.
    force_scale : float
        ``1/(m x_zpf**2)`` in units of omega_m; 2 for zero-point units.
    """

    kappa: float = 50.0
    delta: float = -1.0
    g1: float = 0.0
    g2: float = 0.0
    g3: float = 0.0
    eps: float = 0.0
    eps_m: float = 0.0
    omega_drive: float = 1.8
    gamma: float = 0.0
    omega_m: float = 1.0
    force_scale: float = 2.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ParameterError(f.name, f"must be a real number, got {value!r}")
            if not math.isfinite(value):
                raise ParameterError(f.name, "must be finite")
            object.__setattr__(self, f.name, float(value))
        if self.kappa <= 0:
            raise ParameterError("kappa", "must be > 0")
        if self.omega_m != 1.0:
            raise ParameterError("omega_m", "must equal 1 (rates are in units of omega_m)")
        if self.eps < 0:
            raise ParameterError("eps", "must be >= 0")
        if self.eps_m < 0:
            raise ParameterError("eps_m", "must be >= 0")
        if self.eps_m > self.eps:
            raise ParameterError("eps_m", "must satisfy eps_m <= eps")
        if self.omega_drive <= 0:
            raise ParameterError("omega_drive", "must be > 0")
        if self.gamma < 0:
            raise ParameterError("gamma", "must be >= 0")
        if self.force_scale <= 0:
            raise ParameterError("force_scale", "must be > 0")

    @property
    def drive_period(self) -> float:
        return 2.0 * math.pi / self.omega_drive

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)


def coupling_f(x, params: ModelParams):
    return x * (params.g1 + x * (params.g2 + x * params.g3))


def coupling_df(x, params: ModelParams):
    return params.g1 + x * (2.0 * params.g2 + 3.0 * params.g3 * x)


def coupling_ddf(x, params: ModelParams):
    return 2.0 * params.g2 + 6.0 * params.g3 * x


def drive_power(t, params: ModelParams):
    """Instantaneous squared drive amplitude ``eps**2 - eps_m**2 sin(Omega t)``."""
    return params.eps**2 - params.eps_m**2 * np.sin(params.omega_drive * t)


def _denominator(x, params: ModelParams):
    u = params.delta - coupling_f(x, params)
    return u * u + 0.25 * params.kappa**2


def radiation_force(x, t, params: ModelParams):
    """Light-induced force ``s P(t) f'(x) / ((delta - f)**2 + kappa**2/4)``."""
    power = params.force_scale * drive_power(t, params)
    return power * coupling_df(x, params) / _denominator(x, params)


def _static_force(x, params: ModelParams):
    return params.force_scale * params.eps**2 * coupling_df(x, params) / _denominator(x, params)


def rhs(state, t: float, params: ModelParams) -> PhaseState:
    x, p = state
    force = radiation_force(x, t, params)
    return PhaseState(p, -params.omega_m**2 * x + force - 0.5 * params.gamma * p)


def jacobian(state, t: float, params: ModelParams) -> np.ndarray:
    """Analytic 2x2 Jacobian of :func:`rhs` with respect to (x, p)."""
    x, _ = state
    df = coupling_df(x, params)
    ddf = coupling_ddf(x, params)
    u = params.delta - coupling_f(x, params)
    den = u * u + 0.25 * params.kappa**2
    power = params.force_scale * drive_power(t, params)
    dforce = power * (ddf * den + 2.0 * df * df * u) / (den * den)
    return np.array([[0.0, 1.0], [-params.omega_m**2 + dforce, -0.5 * params.gamma]])


def effective_potential(x, params: ModelParams):
    """``x**2/2 + s (2 eps**2/kappa) arctan((delta - f(x))/(kappa/2))``.

    Always uses the static drive ``eps``; the modulation is not part of the landscape.
    """
    u = params.delta - coupling_f(x, params)
    amp = params.force_scale * 2.0 * params.eps**2 / params.kappa
    return 0.5 * params.omega_m**2 * x**2 + amp * np.arctan(u / (0.5 * params.kappa))


def potential_slope(x, params: ModelParams):
    """Analytic dU_eff/dx at static drive."""
    return params.omega_m**2 * x - _static_force(x, params)


def energy(state, params: ModelParams) -> float:
    """``p**2/2 + U_eff(x)``; a first integral only when gamma = 0 and eps_m = 0."""
    x, p = state
    return 0.5 * p * p + effective_potential(x, params)


def vector_field(params: ModelParams) -> Callable[[float, tuple], tuple]:
    """Scalar-float closure ``f(t, (x, p)) -> (xdot, pdot)`` for the integrator hot loop.

    Evaluates the same expressions as :func:`rhs` with ``math`` instead of numpy.
    """
    g1, g2, g3 = params.g1, params.g2, params.g3
    delta, quarter_k2 = params.delta, 0.25 * params.kappa**2
    e2, m2 = params.eps**2, params.eps_m**2
    omega, s = params.omega_drive, params.force_scale
    w2, half_gamma = params.omega_m**2, 0.5 * params.gamma
    sin = math.sin

    def f(t, y):
        x, p = y[0], y[1]
        u = delta - x * (g1 + x * (g2 + x * g3))
        df = g1 + x * (2.0 * g2 + 3.0 * g3 * x)
        power = s * (e2 - m2 * sin(omega * t))
        return (p, -w2 * x + power * df / (u * u + quarter_k2) - half_gamma * p)

    return f


def tangent_field(params: ModelParams) -> Callable[[float, tuple], tuple]:
    """Closure for the state plus one tangent vector, ``(x, p, dx, dp)``.

    The first two components are computed exactly as in :func:`vector_field`.
    """
    g1, g2, g3 = params.g1, params.g2, params.g3
    delta, quarter_k2 = params.delta, 0.25 * params.kappa**2
    e2, m2 = params.eps**2, params.eps_m**2
    omega, s = params.omega_drive, params.force_scale
    w2, half_gamma = params.omega_m**2, 0.5 * params.gamma
    sin = math.sin

    def f(t, y):
        x, p, a, b = y
        u = delta - x * (g1 + x * (g2 + x * g3))
        df = g1 + x * (2.0 * g2 + 3.0 * g3 * x)
        ddf = 2.0 * g2 + 6.0 * g3 * x
        power = s * (e2 - m2 * sin(omega * t))
        den = u * u + quarter_k2
        pdot = -w2 * x + power * df / den - half_gamma * p
        dforce = power * (ddf * den + 2.0 * df * df * u) / (den * den)
        return (p, pdot, b, (-w2 + dforce) * a - half_gamma * b)

    return f
