"""Operator-level simulation of the flipper-sandwich polarimeter.

A beam polarised along +z passes a +pi/2 flipper about y, the guide-field
phase G(eta), the device unitary U, G(-eta), a -pi/2 flipper about y, and is
projected onto +z. Translating the flipper pair at fixed separation L0 sweeps
eta; rotating the analyser measures the degree of polarisation.
"""

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
from scipy import constants
from scipy.optimize import minimize_scalar

from config import HardwareSettings, SweepSettings
from errors import DomainError, ValidationError
from spinops import (
    KET_DOWN,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    STRUCTURAL_TOL,
    Y_HAT,
    Z_HAT,
    DensityOperator,
    SU2Matrix,
    SU2Params,
    as_unit_vector,
    axis_rotation,
    check_polarization,
    density_from_polarization,
    pure_density,
    so3_of,
    su2_compose,
    su2_from_params,
)
from theory import mixed_extrema

logger = logging.getLogger(__name__)

TWO_PI = 2 * math.pi
# Neighbours must clear the grid extremum by this much before it is refined.
FLAT_MARGIN = 1e-13

FLIPPER_IN = axis_rotation(Y_HAT, math.pi / 2)
FLIPPER_OUT = axis_rotation(Y_HAT, -math.pi / 2)

# Stream ids keep flipper-sweep and analyser counts independent for one seed.
ETA_STREAM = 0
ANALYZER_STREAM = 1


@dataclass(frozen=True)
class HardwareConfig:
    """Guide-field hardware: magnetic moment (J/T), field (T), speed (m/s), separation index."""

    mu: float
    B: float
    v: float
    n: int = 1
    hbar: float = constants.hbar

    def __post_init__(self) -> None:
        if min(self.mu, self.B, self.v, self.hbar) <= 0 or self.n < 1:
            raise DomainError(f"hardware values must be strictly positive: {self}")
        if not math.isfinite(self.l0):
            raise DomainError("flipper separation L0 is not finite")

    @classmethod
    def from_settings(cls, settings: HardwareSettings) -> "HardwareConfig":
        return cls(mu=settings.mu, B=settings.B, v=settings.v, n=settings.n)

    @property
    def l0(self) -> float:
        """Flipper separation L0 = n pi hbar v / (mu B)."""
        return self.n * math.pi * self.hbar * self.v / (self.mu * self.B)

    @property
    def wavenumber(self) -> float:
        """Relative |+-z> phase accumulated per metre of flight, 2 mu B / (hbar v)."""
        return 2 * self.mu * self.B / (self.hbar * self.v)

    @property
    def precession_wavelength(self) -> float:
        """Translation that advances eta by a full 2 pi."""
        return TWO_PI / self.wavenumber


@dataclass(frozen=True)
class SweepConfig:
    samples: int = 1024
    refine_tol: float = 1e-10

    def __post_init__(self) -> None:
        if self.samples < 16:
            raise DomainError(f"sweep needs at least 16 samples, got {self.samples}")
        if not self.refine_tol > 0:
            raise DomainError(f"refine_tol must be positive, got {self.refine_tol}")

    @classmethod
    def from_settings(cls, settings: SweepSettings) -> "SweepConfig":
        return cls(samples=settings.samples, refine_tol=settings.refine_tol)

    def grid(self) -> np.ndarray:
        return TWO_PI * np.arange(self.samples) / self.samples


@dataclass(frozen=True, eq=False)
class IntensityTrace:
    """Sampled output intensity I(eta), with the generating (r, params) when known."""

    etas: np.ndarray
    intensities: np.ndarray
    r: float | None = None
    params: SU2Params | None = None
    refine_tol: float = 1e-10

    def __post_init__(self) -> None:
        etas = np.array(self.etas, dtype=float)
        values = np.array(self.intensities, dtype=float)
        if etas.shape != values.shape or etas.ndim != 1:
            raise ValidationError("etas and intensities must be 1-d arrays of equal length")
        if etas.size:
            if etas[0] < 0 or etas[-1] >= TWO_PI or np.any(np.diff(etas) <= 0):
                raise ValidationError("etas must be strictly increasing within [0, 2 pi)")
            if values.min() < -STRUCTURAL_TOL or values.max() > 1 + STRUCTURAL_TOL:
                raise ValidationError("intensities must lie in [0, 1]")
        etas.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "etas", etas)
        object.__setattr__(self, "intensities", values)

    def __len__(self) -> int:
        return int(self.etas.size)

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.etas.tolist(), self.intensities.tolist()))

    def closure(self) -> Callable[[float], float] | None:
        """Re-evaluate the model at any eta, when the trace was generated here."""
        if self.r is None or self.params is None:
            return None
        r, params = self.r, self.params
        return lambda eta: pipeline_intensity(r, params, eta)

    def without_source(self) -> "IntensityTrace":
        """Copy with the generating parameters dropped, as if read back from disk."""
        return IntensityTrace(self.etas, self.intensities, refine_tol=self.refine_tol)


@dataclass(frozen=True)
class Extrema:
    i_min: float
    i_max: float
    eta_min: float
    eta_max: float

    def __post_init__(self) -> None:
        if not -STRUCTURAL_TOL <= self.i_min <= self.i_max + STRUCTURAL_TOL <= 1 + 2 * STRUCTURAL_TOL:
            raise ValidationError(f"extrema out of order: {self.i_min}, {self.i_max}")


@dataclass(frozen=True, eq=False)
class AnalyzerTrace:
    """Analyser intensity along a great circle of directions n(theta)."""

    angles: np.ndarray
    directions: np.ndarray
    intensities: np.ndarray
    i_min: float
    i_max: float

    @property
    def points(self) -> list[tuple[np.ndarray, float]]:
        return list(zip(list(self.directions), self.intensities.tolist()))


@dataclass(frozen=True, eq=False)
class CountTrace:
    """Binomial counts of spin-up detections per setting."""

    etas: np.ndarray
    counts_up: np.ndarray
    shots: int
    seed: int | None = None

    def __post_init__(self) -> None:
        counts = np.array(self.counts_up, dtype=np.int64)
        etas = np.array(self.etas, dtype=float)
        if self.shots < 1:
            raise DomainError(f"shots must be >= 1, got {self.shots}")
        if counts.shape != etas.shape:
            raise ValidationError("etas and counts must have equal length")
        if counts.size and (counts.min() < 0 or counts.max() > self.shots):
            raise ValidationError("counts must lie in [0, shots]")
        counts.setflags(write=False)
        etas.setflags(write=False)
        object.__setattr__(self, "counts_up", counts)
        object.__setattr__(self, "etas", etas)

    @property
    def points(self) -> list[tuple[float, int, int]]:
        return [(eta, int(c), self.shots) for eta, c in zip(self.etas.tolist(), self.counts_up.tolist())]

    def frequencies(self) -> np.ndarray:
        return self.counts_up / self.shots

    def to_intensity_trace(self, refine_tol: float = 1e-10) -> IntensityTrace:
        """Empirical frequencies as an intensity trace (no generating closure)."""
        return IntensityTrace(self.etas, self.frequencies(), refine_tol=refine_tol)


def guide_field(eta: float) -> SU2Matrix:
    """Guide-field phase +-eta/2 on |+-z>, a rotation about z."""
    return axis_rotation(Z_HAT, eta)


def pipeline_unitary(p: SU2Params, eta: float) -> SU2Matrix:
    """T(eta) = F_out G(-eta) U G(eta) F_in."""
    return su2_compose(FLIPPER_IN, guide_field(eta), su2_from_params(p), guide_field(-eta), FLIPPER_OUT)


def output_intensity(rho: DensityOperator, p: SU2Params, eta: float) -> float:
    """Probability <+z|T rho T^dagger|+z> of detecting spin up for any input state."""
    t = pipeline_unitary(p, eta).matrix
    return float(np.real(t[0] @ rho.matrix @ t[0].conj()))


def pipeline_intensity(r: float, p: SU2Params, eta: float) -> float:
    """Output intensity for a beam with degree of polarisation r along +z."""
    return output_intensity(density_from_polarization(r), p, eta)


def complement_intensity(p: SU2Params, eta: float) -> float:
    """Output intensity for a pure |-z> input, the 1 - I channel."""
    return output_intensity(pure_density(KET_DOWN), p, eta)


def _pipeline_rows(p: SU2Params, etas: np.ndarray) -> np.ndarray:
    """First rows of T(eta) for a batch of etas, shape (N, 2)."""
    phase = np.exp(-0.5j * etas)
    g = np.zeros((etas.size, 2, 2), dtype=complex)
    g[:, 0, 0], g[:, 1, 1] = phase, phase.conj()
    g_back = g.conj()
    t = FLIPPER_OUT.matrix @ g_back @ su2_from_params(p).matrix @ g @ FLIPPER_IN.matrix
    return t[:, 0, :]


def sweep_intensities(r: float, p: SU2Params, etas: np.ndarray) -> np.ndarray:
    """Vectorised pipeline_intensity over many etas."""
    rho = density_from_polarization(r).matrix
    rows = _pipeline_rows(p, np.asarray(etas, dtype=float))
    return np.real(np.einsum("ni,ij,nj->n", rows, rho, rows.conj()))


def sweep_eta(r: float, p: SU2Params, cfg: SweepConfig) -> IntensityTrace:
    """Uniform eta sweep over [0, 2 pi) with cfg.samples points."""
    check_polarization(r)
    etas = cfg.grid()
    values = sweep_intensities(r, p, etas)
    logger.debug("Swept %d eta points for r=%.6g, params=%s", cfg.samples, r, p.as_tuple())
    return IntensityTrace(etas, values, r=r, params=p, refine_tol=cfg.refine_tol)


def translation_to_eta(d: float, hw: HardwareConfig) -> float:
    """Guide-field phase eta produced by translating the flipper pair a distance d (metres)."""
    return float((hw.wavenumber * d) % TWO_PI)


def eta_to_translation(eta: float, hw: HardwareConfig) -> float:
    """Smallest non-negative translation that produces eta."""
    return float((eta % TWO_PI) / hw.wavenumber)


def sweep_translation(
    r: float, p: SU2Params, displacements: Sequence[float], hw: HardwareConfig, refine_tol: float = 1e-10
) -> IntensityTrace:
    """Intensity trace driven by flipper displacements rather than eta directly.

    Displacements that land on the same eta are measured once.
    """
    check_polarization(r)
    etas = np.unique([translation_to_eta(d, hw) for d in displacements])
    return IntensityTrace(etas, sweep_intensities(r, p, etas), r=r, params=p, refine_tol=refine_tol)


def _covers_period(angles: np.ndarray) -> bool:
    if angles.size < 3:
        return False
    step = float(np.median(np.diff(angles)))
    return angles[0] + TWO_PI - angles[-1] <= 1.5 * step


def _parabolic_vertex(
    xs: tuple[float, float, float], ys: tuple[float, float, float], maximize: bool
) -> tuple[float, float] | None:
    """Vertex value of the parabola through three points around a grid extremum."""
    centre = xs[1]
    a, _, _ = coeffs = np.polyfit([x - centre for x in xs], ys, 2)
    if (a >= 0 if maximize else a <= 0):
        return None
    offset = min(max(-coeffs[1] / (2 * a), xs[0] - centre), xs[2] - centre)
    return float(np.polyval(coeffs, offset)), centre + offset


def _locate(
    angles: np.ndarray,
    values: np.ndarray,
    closure: Callable[[float], float] | None,
    tol: float,
    maximize: bool,
) -> tuple[float, float]:
    """Grid extremum refined by golden-section search, or by interpolation without a closure.

    Returns:
        (value, angle) with the angle reduced into [0, 2 pi)

    """
    index = int(np.argmax(values) if maximize else np.argmin(values))
    best, best_angle = float(values[index]), float(angles[index])
    n = angles.size
    if n < 3:
        return best, best_angle
    periodic = _covers_period(angles)
    if not periodic and index in (0, n - 1):
        return best, best_angle

    left = float(angles[index - 1]) - (TWO_PI if index == 0 else 0.0)
    right = float(angles[(index + 1) % n]) + (TWO_PI if index == n - 1 else 0.0)
    y_left, y_right = float(values[index - 1]), float(values[(index + 1) % n])
    sign = -1.0 if maximize else 1.0
    if not (sign * (y_left - best) > FLAT_MARGIN and sign * (y_right - best) > FLAT_MARGIN):
        return best, best_angle

    if closure is None:
        vertex = _parabolic_vertex((left, best_angle, right), (y_left, best, y_right), maximize)
        if vertex is None:
            return best, best_angle
        value, angle = vertex
        # Noisy frequencies at 0 or 1 can put the vertex outside the physical range.
        return min(max(value, 0.0), 1.0), angle % TWO_PI

    # Keep the bracket away from zero so the relative xtol acts like an absolute one.
    shift = TWO_PI if best_angle < math.pi else 0.0
    try:
        result = minimize_scalar(
            lambda x: sign * closure(x),
            bracket=(left + shift, best_angle + shift, right + shift),
            method="golden",
            options={"xtol": tol},
        )
    except ValueError as e:
        logger.debug("Keeping grid extremum at %.6g: %s", best_angle, e)
        return best, best_angle
    refined = sign * float(result.fun)
    if sign * refined > sign * best:
        return best, best_angle
    return refined, float(result.x) % TWO_PI


def find_extrema(trace: IntensityTrace, blind: bool = True, p_opt: SU2Params | None = None) -> Extrema:
    """Minimum and maximum of a trace.

    Blind mode takes the grid argmin/argmax and refines each inside its
    neighbouring samples: golden-section search on the generating model when
    the trace carries one, parabolic interpolation otherwise. Analytic mode
    (blind=False with p_opt) returns the closed-form extremes at eta = zeta
    and zeta + pi/2.

    Raises:
        DomainError: On an empty trace, or analytic mode without p_opt or a known r

    """
    if len(trace) == 0:
        raise DomainError("cannot locate extrema of an empty trace")
    if not blind:
        if p_opt is None or trace.r is None:
            raise DomainError("analytic extrema need both the SU(2) parameters and the trace's r")
        i_min, i_max = mixed_extrema(trace.r, p_opt)
        return Extrema(i_min, i_max, p_opt.zeta % TWO_PI, (p_opt.zeta + math.pi / 2) % TWO_PI)

    closure = trace.closure()
    i_min, eta_min = _locate(trace.etas, trace.intensities, closure, trace.refine_tol, maximize=False)
    i_max, eta_max = _locate(trace.etas, trace.intensities, closure, trace.refine_tol, maximize=True)
    logger.debug("Blind extrema: I_min=%.12g at %.6g, I_max=%.12g at %.6g", i_min, eta_min, i_max, eta_max)
    return Extrema(i_min, i_max, eta_min, eta_max)


def _analyzer_projector(n: np.ndarray) -> np.ndarray:
    return 0.5 * (np.eye(2) + n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z)


def analyzer_intensity(r: float, u_total: SU2Matrix, n: np.ndarray | Sequence[float]) -> float:
    """Analyser intensity 1/2 + (r/2)(|<n|U|+z>|^2 - |<n|U|-z>|^2).

    Also evaluated as (1 + r n . R z)/2 with R = so3_of(U); the two must agree.

    Raises:
        DomainError: If n is not a unit vector or r is out of range
        ValidationError: If the two evaluations disagree

    """
    check_polarization(r)
    direction = as_unit_vector(n)
    proj = _analyzer_projector(direction)
    out_up, out_down = u_total.matrix[:, 0], u_total.matrix[:, 1]
    p_up = float(np.real(np.vdot(out_up, proj @ out_up)))
    p_down = float(np.real(np.vdot(out_down, proj @ out_down)))
    by_amplitudes = 0.5 + 0.5 * r * (p_up - p_down)
    by_rotation = 0.5 * (1 + r * float(direction @ (so3_of(u_total) @ Z_HAT)))
    if abs(by_amplitudes - by_rotation) > STRUCTURAL_TOL:
        raise ValidationError(f"analyser evaluations disagree: {by_amplitudes!r} vs {by_rotation!r}")
    return by_amplitudes


def _analyzer_plane(u_total: SU2Matrix) -> tuple[np.ndarray, np.ndarray]:
    """Output Bloch direction R z and a unit vector perpendicular to it."""
    m = so3_of(u_total) @ Z_HAT
    m = m / np.linalg.norm(m)
    helper = np.eye(3)[int(np.argmin(np.abs(m)))]
    w = np.cross(m, helper)
    return m, w / np.linalg.norm(w)


def analyzer_sweep(r: float, u_total: SU2Matrix, samples: int = 512, refine_tol: float = 1e-10) -> AnalyzerTrace:
    """Rotate the analyser around the great circle through R z in `samples` steps."""
    check_polarization(r)
    if samples < 16:
        raise DomainError(f"analyser sweep needs at least 16 samples, got {samples}")
    m, w = _analyzer_plane(u_total)
    angles = TWO_PI * np.arange(samples) / samples
    directions = np.cos(angles)[:, None] * m + np.sin(angles)[:, None] * w
    values = np.array([analyzer_intensity(r, u_total, d) for d in directions])

    def closure(theta: float) -> float:
        return analyzer_intensity(r, u_total, math.cos(theta) * m + math.sin(theta) * w)

    i_min, _ = _locate(angles, values, closure, refine_tol, maximize=False)
    i_max, _ = _locate(angles, values, closure, refine_tol, maximize=True)
    return AnalyzerTrace(angles, directions, values, i_min, i_max)


def analyzer_extrema(r: float, u_total: SU2Matrix, mode: str = "analytic", samples: int = 512) -> tuple[float, float]:
    """(I~_min, I~_max) of the analyser intensity.

    Analytic mode points the analyser along -+R z; sweep mode rotates it.
    """
    if mode == "analytic":
        m, _ = _analyzer_plane(u_total)
        return analyzer_intensity(r, u_total, -m), analyzer_intensity(r, u_total, m)
    if mode == "sweep":
        trace = analyzer_sweep(r, u_total, samples)
        return trace.i_min, trace.i_max
    raise DomainError(f"unknown analyser mode {mode!r}")


def analyzer_unitary(p: SU2Params, eta: float = 0.0) -> SU2Matrix:
    """Fixed total evolution seen by the analyser: the whole flipper sandwich at one eta."""
    return pipeline_unitary(p, eta)


def _point_rng(seed: int, stream: int, index: int) -> np.random.Generator:
    """Generator for one setting, derived from (seed, stream, index) alone."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, index)))


def draw_counts(probabilities: np.ndarray, shots: int, seed: int, stream: int) -> np.ndarray:
    """Binomial counts per setting; each point has its own stream so order of evaluation is irrelevant."""
    if shots < 1:
        raise DomainError(f"shots must be >= 1, got {shots}")
    probs = np.clip(np.asarray(probabilities, dtype=float), 0.0, 1.0)
    return np.array([_point_rng(seed, stream, i).binomial(shots, p) for i, p in enumerate(probs)], dtype=np.int64)


def simulate_counts(r: float, p: SU2Params, cfg: SweepConfig, shots: int, seed: int) -> CountTrace:
    """Counts of spin-up detections over the eta grid, shots particles per setting."""
    check_polarization(r)
    etas = cfg.grid()
    counts = draw_counts(sweep_intensities(r, p, etas), shots, seed, ETA_STREAM)
    logger.debug("Simulated %d shots at %d settings (seed %d)", shots, etas.size, seed)
    return CountTrace(etas, counts, shots, seed)


def simulate_analyzer_counts(r: float, u_total: SU2Matrix, samples: int, shots: int, seed: int) -> CountTrace:
    """Counts over analyser angles; the trace's etas hold the analyser rotation angle."""
    trace = analyzer_sweep(r, u_total, samples)
    counts = draw_counts(trace.intensities, shots, seed, ANALYZER_STREAM)
    return CountTrace(trace.angles, counts, shots, seed)
