"""Stroboscopic sections, displacement spectra, Lyapunov exponents and regime labels."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .integrate import IntegrationError, IntegratorConfig, Stepper, Trajectory, sample_trajectory
from .landscape import classify_wells
from .model import ModelParams, PhaseState, tangent_field, vector_field

__all__ = [
    "DiagnosticsOptions",
    "PoincareSection",
    "PowerSpectrum",
    "LyapunovEstimate",
    "RegimeReport",
    "SpectrumError",
    "LyapunovError",
    "poincare_section",
    "power_spectrum",
    "spectral_peaks",
    "lyapunov_max",
    "section_clusters",
    "classify",
    "decide_regime",
    "spectrum_trajectory",
    "DEFAULT_INITIAL",
    "FAST_OPTIONS",
]

# Exactly (0, 0) is an equilibrium whenever g1 = 0; a seed displacement lets the
# modulation act on the resonator in every scenario.
DEFAULT_INITIAL = PhaseState(1e-6, 0.0)

MIN_SPECTRUM_SAMPLES = 64
TANGENT_FLOOR, TANGENT_CEIL = 1e-150, 1e150


class SpectrumError(ValueError):
    pass


class LyapunovError(RuntimeError):
    pass


@dataclass(frozen=True)
class DiagnosticsOptions:
    """Measurement protocol settings shared by sections, spectra and Lyapunov runs."""

    n_transient: int = 100
    n_points: int = 1800
    samples_per_period: int = 64
    spectrum_periods: int = 1024
    spectrum_partial_fraction: Optional[float] = None
    lyapunov_renorm: Optional[int] = None
    renorm_interval: Optional[float] = None
    seed: int = 0
    lambda_chaos: float = 0.01
    convergence_rtol: float = 1e-2
    convergence_floor: float = 0.1
    cluster_link: float = 0.05
    cluster_diameter: float = 1e-3
    max_cycle: int = 8

    def __post_init__(self):
        from .model import ParameterError

        if self.n_transient < 0:
            raise ParameterError("n_transient", "must be >= 0")
        if self.n_points < 1:
            raise ParameterError("n_points", "must be >= 1")
        if self.samples_per_period < 1:
            raise ParameterError("samples_per_period", "must be >= 1")
        if self.spectrum_periods < 1:
            raise ParameterError("spectrum_periods", "must be >= 1")
        if self.spectrum_partial_fraction is not None and not 0 < self.spectrum_partial_fraction <= 1:
            raise ParameterError("spectrum_partial_fraction", "must lie in (0, 1]")
        if self.lyapunov_renorm is not None and self.lyapunov_renorm < 1:
            raise ParameterError("lyapunov_renorm", "must be >= 1")
        if self.renorm_interval is not None and not self.renorm_interval > 0:
            raise ParameterError("renorm_interval", "must be > 0")
        if not self.lambda_chaos >= 0:
            raise ParameterError("lambda_chaos", "must be >= 0")

    def replace(self, **changes) -> "DiagnosticsOptions":
        return replace(self, **changes)


FAST_OPTIONS = DiagnosticsOptions(n_transient=30, n_points=400)


@dataclass
class PoincareSection:
    points: np.ndarray  # shape (count, 2): columns x, xdot
    j_start: int
    count: int
    failed_index: Optional[int] = None

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def xdot(self) -> np.ndarray:
        return self.points[:, 1]


@dataclass
class PowerSpectrum:
    frequencies: np.ndarray
    power: np.ndarray
    window: str
    dt_sample: float

    @property
    def bin_width(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0])


@dataclass
class LyapunovEstimate:
    lambda_max: float
    history: np.ndarray
    converged: bool
    interval: float
    seed: int

    def to_dict(self) -> dict:
        return {
            "lambda_max": self.lambda_max,
            "converged": self.converged,
            "interval": self.interval,
            "seed": self.seed,
            "history": [float(v) for v in self.history],
        }


@dataclass
class RegimeReport:
    regime: str  # periodic | quasi-periodic | chaotic | undetermined
    lambda_max: float
    lyapunov_converged: bool
    n_clusters: int
    cluster_diameters: list
    peaks: list = field(default_factory=list)  # (omega, relative power)
    wells: Optional[object] = None
    section_mean_x: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "regime": self.regime,
            "lambda_max": self.lambda_max,
            "lyapunov_converged": self.lyapunov_converged,
            "n_clusters": self.n_clusters,
            "cluster_diameters": [float(d) for d in self.cluster_diameters],
            "section_mean_x": self.section_mean_x,
            "peaks": [{"omega": w, "relative_power": r} for w, r in self.peaks],
            "wells": None if self.wells is None else self.wells.to_dict(),
        }


def poincare_section(initial, params: ModelParams, n_transient: int = 100, n_points: int = 1800,
                     config: Optional[IntegratorConfig] = None) -> PoincareSection:
    """(x, xdot) at ``t_j = (2 pi / Omega) j`` for ``j = n_transient + 1 ... n_transient + n_points``.

    Integration starts at t = 0 and is clamped at every drive period, transient
    included, so the points coincide bit for bit with those recorded by
    :func:`classify`. On failure the section holds the points gathered
    so far and ``failed_index`` is the first j that could not be reached.
    """
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    period = params.drive_period
    stepper = Stepper(vector_field(params), 0.0, initial, config)
    j_start = n_transient + 1
    points = []
    failed = None
    j = 0
    try:
        for j in range(1, j_start + n_points):
            y = stepper.advance_to(period * j)
            if j >= j_start:
                points.append(y)
    except IntegrationError:
        failed = j
    arr = np.array(points, dtype=float).reshape(-1, 2)
    return PoincareSection(arr, j_start, len(arr), failed)


def power_spectrum(traj: Trajectory) -> PowerSpectrum:
    """One-sided Hann-windowed periodogram of the displacement.

    The record is truncated to the largest power-of-two length and mean-removed.
    ``power`` is normalised so that its sum equals the windowed signal energy
    ``sum((w * x)**2)``. Frequencies are angular, in units of omega_m.
    """
    x = traj.x
    if len(x) < MIN_SPECTRUM_SAMPLES:
        raise SpectrumError(f"need at least {MIN_SPECTRUM_SAMPLES} samples, got {len(x)}")
    n = 1 << (len(x).bit_length() - 1)
    x = x[:n] - x[:n].mean()
    w = np.hanning(n)
    coeffs = np.fft.rfft(w * x)
    power = np.abs(coeffs) ** 2 / n
    power[1:-1] *= 2.0
    omega = 2.0 * np.pi * np.fft.rfftfreq(n, traj.dt_sample)
    return PowerSpectrum(omega, power, "hann", traj.dt_sample)


def spectral_peaks(spec: PowerSpectrum, max_peaks: int = 8) -> list:
    """Strongest local maxima as ``(omega, power / max power)``, strongest first."""
    p = spec.power
    if p.max() <= 0:
        return []
    interior = np.nonzero((p[1:-1] > p[:-2]) & (p[1:-1] >= p[2:]))[0] + 1
    order = interior[np.argsort(-p[interior], kind="stable")][:max_peaks]
    top = p.max()
    return [(float(spec.frequencies[k]), float(p[k] / top)) for k in order]


def spectrum_trajectory(initial, params: ModelParams, opts: DiagnosticsOptions,
                        config: Optional[IntegratorConfig] = None, dt_sample: Optional[float] = None,
                        include_transient: bool = False) -> Trajectory:
    """Uniform record for spectra: ``spectrum_periods`` drive periods after the transient."""
    period = params.drive_period
    dt = dt_sample if dt_sample is not None else period / opts.samples_per_period
    t_start = period * opts.n_transient
    t_end = t_start + period * opts.spectrum_periods
    if include_transient:
        return sample_trajectory(initial, 0.0, t_end, dt, params, config)
    start = Stepper(vector_field(params), 0.0, initial, config).advance_to(t_start)
    return sample_trajectory(start, t_start, t_end, dt, params, config)


def _unit_vector(seed: int) -> tuple:
    v = np.random.default_rng(seed).standard_normal(2)
    v /= np.linalg.norm(v)
    return float(v[0]), float(v[1])


def _tail(history: np.ndarray) -> np.ndarray:
    n = len(history)
    return history[n - max(1, n // 5):]


def _converged(history: np.ndarray, rtol: float, floor: float) -> bool:
    tail = _tail(history)
    spread = float(tail.max() - tail.min())
    return spread < rtol * max(abs(float(history[-1])), floor)


def _tangent_run(initial, params, n_transient, n_renorm, interval, seed, config, record_every=None):
    """Co-integrate state and tangent vector; returns (log-growths, recorded states)."""
    stepper = Stepper(tangent_field(params), 0.0, (*initial, *_unit_vector(seed)), config, control_dims=2)
    logs, states = [], []
    for k in range(1, n_transient + n_renorm + 1):
        try:
            x, p, a, b = stepper.advance_to(interval * k)
        except IntegrationError as exc:
            if exc.tangent_only:
                raise _TangentBlowup() from None
            raise
        norm = math.hypot(a, b)
        if not (TANGENT_FLOOR < norm < TANGENT_CEIL):
            raise _TangentBlowup()
        stepper.scale_tail(2, 1.0 / norm)
        if k > n_transient:
            logs.append(math.log(norm))
            if record_every and k % record_every == 0:
                states.append((x, p))
    return np.array(logs), states


class _TangentBlowup(Exception):
    pass


def _lyapunov(initial, params, n_transient, n_renorm, interval, seed, config, opts, record=False):
    sub = 1
    for attempt in range(2):
        try:
            logs, states = _tangent_run(initial, params, n_transient * sub, n_renorm * sub,
                                        interval / sub, seed, config, record_every=sub if record else None)
            break
        except _TangentBlowup:
            if attempt == 1:
                raise LyapunovError("tangent vector under/overflow after halving the interval")
            sub = 2
    step = interval / sub
    history = np.cumsum(logs) / (step * np.arange(1, len(logs) + 1))
    est = LyapunovEstimate(float(history[-1]), history,
                           _converged(history, opts.convergence_rtol, opts.convergence_floor), step, seed)
    return est, states


def lyapunov_max(initial, params: ModelParams, opts: Optional[DiagnosticsOptions] = None,
                 config: Optional[IntegratorConfig] = None) -> LyapunovEstimate:
    """Largest Lyapunov exponent from the tangent-space (Benettin) method.

    The tangent vector is renormalised every ``renorm_interval`` (default: drive
    period when the power is modulated, ``2 pi / omega_m`` otherwise) and the
    log-growth is averaged after ``n_transient`` intervals.
    """
    opts = opts or DiagnosticsOptions()
    interval = opts.renorm_interval
    if interval is None:
        interval = params.drive_period if params.eps_m > 0 else 2.0 * math.pi / params.omega_m
    n_renorm = opts.lyapunov_renorm or opts.n_points
    est, _ = _lyapunov(initial, params, opts.n_transient, n_renorm, interval, opts.seed, config, opts)
    return est


def section_clusters(points: np.ndarray, link: float = 0.05):
    """Single-linkage clusters of section points in unit-box coordinates.

    Each axis is scaled by its span (floored at 1 zero-point unit). Returns
    ``(labels, diameters)`` with diameters measured in the scaled coordinates.
    """
    pts = np.asarray(points, dtype=float)
    if len(pts) == 0:
        return np.zeros(0, dtype=int), []
    lo = pts.min(axis=0)
    span = np.maximum(pts.max(axis=0) - lo, 1.0)
    scaled = (pts - lo) / span
    tree = cKDTree(scaled)
    pairs = tree.query_pairs(link, output_type="ndarray")
    n = len(scaled)
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n)) if len(pairs) else coo_matrix((n, n))
    n_comp, labels = connected_components(graph, directed=False)
    # relabel in order of first appearance so labels are deterministic
    _, first = np.unique(labels, return_index=True)
    remap = np.empty(n_comp, dtype=int)
    remap[np.argsort(first)] = np.arange(n_comp)
    labels = remap[labels]
    diameters = []
    for c in range(n_comp):
        member = scaled[labels == c]
        ext = member.max(axis=0) - member.min(axis=0)
        diameters.append(float(np.hypot(*ext)))
    return labels, diameters


def decide_regime(history: np.ndarray, diameters, opts: DiagnosticsOptions) -> str:
    """Regime label from a running-average exponent history and section cluster diameters."""
    tail = _tail(np.asarray(history, dtype=float))
    if tail.min() > opts.lambda_chaos:
        return "chaotic"
    if tail.max() > opts.lambda_chaos:
        return "undetermined"
    if len(diameters) <= opts.max_cycle and all(d < opts.cluster_diameter for d in diameters):
        return "periodic"
    return "quasi-periodic"


def classify(initial, params: ModelParams, opts: Optional[DiagnosticsOptions] = None,
             config: Optional[IntegratorConfig] = None, include_spectrum: bool = True,
             include_wells: bool = True) -> RegimeReport:
    """Label the motion as periodic, quasi-periodic, chaotic or undetermined.

    One tangent-space run, renormalised every drive period, yields both the
    exponent and the stroboscopic section. The decision uses the last 20% of the
    running-average history: chaotic when all of it lies above ``lambda_chaos``,
    undetermined when it straddles the threshold. Otherwise the section is
    clustered: at most ``max_cycle`` clusters all narrower than
    ``cluster_diameter`` is an m-cycle (periodic), anything else quasi-periodic.
    """
    opts = opts or DiagnosticsOptions()
    est, states = _lyapunov(initial, params, opts.n_transient, opts.n_points, params.drive_period,
                            opts.seed, config, opts, record=True)
    points = np.array(states, dtype=float).reshape(-1, 2)
    labels, diameters = section_clusters(points, opts.cluster_link)
    regime = decide_regime(est.history, diameters, opts)
    peaks = []
    if include_spectrum:
        peaks = spectral_peaks(power_spectrum(spectrum_trajectory(initial, params, opts, config)))
    wells = classify_wells(params) if include_wells else None
    return RegimeReport(regime, est.lambda_max, est.converged, len(diameters), diameters, peaks, wells,
                        float(points[:, 0].mean()) if len(points) else float("nan"))
