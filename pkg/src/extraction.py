"""Inversion of measured extreme intensities into phase, visibility and degree of polarisation.

Three protocols are supported:
    pure   I_min, I_max of a pure beam
    mixed  I_min, I_max of a beam with known r
    blind  flipper-sweep extrema plus analyser extrema, r unknown
"""

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Any

from errors import DomainError, InconsistentDataError
from polarimeter import AnalyzerTrace, Extrema, IntensityTrace, find_extrema
from spinops import STRUCTURAL_TOL, check_polarization

logger = logging.getLogger(__name__)

CLAMP_TOL = 1e-9
DEGENERATE_TOL = 1e-9
ANALYZER_SUM_TOL = 1e-6


class Status(enum.StrEnum):
    OK = "ok"
    PHASE_UNDEFINED = "phase_undefined"
    VISIBILITY_UNDETERMINED = "visibility_undetermined"


@dataclass(frozen=True)
class PhaseEstimate:
    """Extracted cos^2 of the phase and the visibility.

    cos2_phi is None when the phase is undefined; visibility is None when it
    cannot be determined (r = 0). ``clamped`` names Delta quantities that sat
    within the clamp window below zero and were set to 0.
    """

    cos2_phi: float | None
    visibility: float | None
    status: Status
    clamped: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        expect_phase = self.status is not Status.PHASE_UNDEFINED
        expect_visibility = self.status is not Status.VISIBILITY_UNDETERMINED
        if (self.cos2_phi is not None) != expect_phase or (self.visibility is not None) != expect_visibility:
            raise DomainError(f"estimate fields do not match status {self.status}")

    def as_dict(self) -> dict[str, Any]:
        return {
            "cos2_phi": self.cos2_phi,
            "visibility": self.visibility,
            "status": str(self.status),
            "clamped": list(self.clamped),
        }


@dataclass(frozen=True)
class DeltaIntensities:
    """Semi-positive differences between flipper-sweep and analyser extrema."""

    d_min: float
    d_max: float
    d_tilde: float
    clamped: tuple[str, ...] = ()

    @classmethod
    def from_extrema(
        cls, i_min_rho: float, i_max_rho: float, i_min_t: float, i_max_t: float, tol: float = CLAMP_TOL
    ) -> "DeltaIntensities":
        """Build the differences, clamping numerical dust and rejecting real violations.

        Raises:
            InconsistentDataError: If any difference is below -tol

        """
        raw = {
            "d_min": i_min_rho - i_min_t,
            "d_max": i_max_t - i_max_rho,
            "d_tilde": i_max_t - i_min_t,
        }
        values: dict[str, float] = {}
        clamped = []
        for name, value in raw.items():
            if value < -tol:
                raise InconsistentDataError(name, f"{value:.3e} is negative beyond the clamp window {tol:g}")
            if value < 0:
                logger.warning("Clamping %s = %.3e to 0", name, value)
                clamped.append(name)
                value = 0.0
            values[name] = value
        return cls(**values, clamped=tuple(clamped))


@dataclass(frozen=True)
class ExtractionResult:
    mode: str
    extrema: Extrema
    estimate: PhaseEstimate
    r: float | None = None
    analyzer_extrema: tuple[float, float] | None = None
    deltas: DeltaIntensities | None = field(default=None)


def _check_pair(i_min: float, i_max: float, label: str = "intensity") -> tuple[float, float]:
    lo, hi = -STRUCTURAL_TOL, 1 + STRUCTURAL_TOL
    if not (lo <= i_min <= hi and lo <= i_max <= hi):
        raise DomainError(f"{label} extrema must lie in [0, 1], got ({i_min}, {i_max})")
    if i_min > i_max + STRUCTURAL_TOL:
        raise DomainError(f"{label} minimum {i_min} exceeds maximum {i_max}")
    return min(max(i_min, 0.0), 1.0), min(max(i_max, 0.0), 1.0)


def _estimate(numerator: float, total: float, clamped: tuple[str, ...] = ()) -> PhaseEstimate:
    """cos^2 = numerator / total and visibility = sqrt(total), or phase_undefined when total vanishes."""
    total = max(total, 0.0)
    visibility = min(math.sqrt(total), 1.0)
    if total < DEGENERATE_TOL:
        logger.info("Visibility %.3g below threshold: phase undefined", visibility)
        return PhaseEstimate(None, visibility, Status.PHASE_UNDEFINED, clamped)
    cos2 = min(max(numerator / total, 0.0), 1.0)
    return PhaseEstimate(cos2, visibility, Status.OK, clamped)


def pure_from_extrema(i_min: float, i_max: float) -> PhaseEstimate:
    """cos^2 phi = I_min / (1 - I_max + I_min) and nu = sqrt(1 - I_max + I_min).

    Raises:
        DomainError: If the pair is out of range or out of order

    """
    i_min, i_max = _check_pair(i_min, i_max)
    return _estimate(i_min, 1.0 - i_max + i_min)


def _undetermined(clamped: tuple[str, ...] = ()) -> PhaseEstimate:
    logger.info("Unpolarised beam: cos^2 Phi = 1, visibility undetermined")
    return PhaseEstimate(1.0, None, Status.VISIBILITY_UNDETERMINED, clamped)


def mixed_from_extrema(i_min: float, i_max: float, r: float, tol: float = CLAMP_TOL) -> PhaseEstimate:
    """Phase and visibility of a mixed beam with known degree of polarisation r.

    With A = (I_min - (1-r)/2)/r and B = r((1+r)/2 - I_max),
    cos^2 Phi = A/(A+B) and V = sqrt(A+B).

    Raises:
        DomainError: If the pair or r is out of range
        InconsistentDataError: If an extremum leaves the window [(1-r)/2, (1+r)/2] by more than tol

    """
    i_min, i_max = _check_pair(i_min, i_max)
    check_polarization(r)
    floor, ceiling = (1 - r) / 2, (1 + r) / 2
    if i_min < floor - tol:
        raise InconsistentDataError("i_min", f"{i_min:.12g} below (1-r)/2 = {floor:.12g}")
    if i_max > ceiling + tol:
        raise InconsistentDataError("i_max", f"{i_max:.12g} above (1+r)/2 = {ceiling:.12g}")
    if r < DEGENERATE_TOL:
        return _undetermined()
    a = max((i_min - floor) / r, 0.0)
    b = max(r * (ceiling - i_max), 0.0)
    return _estimate(a, a + b)


def polarization_from_analyzer(i_min_t: float, i_max_t: float) -> float:
    """r = I~_max - I~_min from the analyser extrema (1 -+ r)/2.

    Raises:
        InconsistentDataError: If the extrema do not sum to 1

    """
    i_min_t, i_max_t = _check_pair(i_min_t, i_max_t, "analyser")
    if abs(i_min_t + i_max_t - 1.0) > ANALYZER_SUM_TOL:
        raise InconsistentDataError("analyzer_sum", f"extrema sum to {i_min_t + i_max_t:.9g}, expected 1")
    return min(max(i_max_t - i_min_t, 0.0), 1.0)


def blind_estimate(
    i_min_rho: float, i_max_rho: float, i_min_t: float, i_max_t: float, tol: float = CLAMP_TOL
) -> tuple[PhaseEstimate, float]:
    """Phase, visibility and r without prior knowledge of the polarisation.

    Uses r = d_tilde, cos^2 Phi = (d_min/d_tilde) / (d_tilde d_max + d_min/d_tilde)
    and V = sqrt(d_tilde d_max + d_min/d_tilde).

    Returns:
        (estimate, r)

    """
    estimate, r, _ = _blind(i_min_rho, i_max_rho, i_min_t, i_max_t, tol)
    return estimate, r


def _blind(
    i_min_rho: float, i_max_rho: float, i_min_t: float, i_max_t: float, tol: float = CLAMP_TOL
) -> tuple[PhaseEstimate, float, DeltaIntensities]:
    i_min_rho, i_max_rho = _check_pair(i_min_rho, i_max_rho)
    i_min_t, i_max_t = _check_pair(i_min_t, i_max_t, "analyser")
    deltas = DeltaIntensities.from_extrema(i_min_rho, i_max_rho, i_min_t, i_max_t, tol)
    r = min(deltas.d_tilde, 1.0)
    if r < DEGENERATE_TOL:
        return _undetermined(deltas.clamped), r, deltas
    q = deltas.d_min / r
    return _estimate(q, r * deltas.d_max + q, deltas.clamped), r, deltas


def estimate_from_traces(
    trace: IntensityTrace,
    analyzer: AnalyzerTrace | IntensityTrace | None = None,
    r: float | None = None,
    pure: bool = False,
    tol: float = CLAMP_TOL,
) -> ExtractionResult:
    """Locate the extrema of a flipper sweep and run exactly one extraction protocol.

    An analyser trace read from disk is an IntensityTrace over analyser angles.

    Raises:
        DomainError: Unless exactly one of analyzer, r, pure is given

    """
    chosen = sum([analyzer is not None, r is not None, pure])
    if chosen != 1:
        raise DomainError("choose exactly one of an analyser trace, a known r, or the pure protocol")

    extrema = find_extrema(trace, blind=True)
    if pure:
        estimate = pure_from_extrema(extrema.i_min, extrema.i_max)
        result = ExtractionResult("pure", extrema, estimate, r=1.0)
    elif r is not None:
        estimate = mixed_from_extrema(extrema.i_min, extrema.i_max, r, tol)
        result = ExtractionResult("mixed", extrema, estimate, r=r)
    else:
        if isinstance(analyzer, AnalyzerTrace):
            pair = (analyzer.i_min, analyzer.i_max)
        else:
            found = find_extrema(analyzer, blind=True)
            pair = (found.i_min, found.i_max)
        estimate, r_hat, deltas = _blind(extrema.i_min, extrema.i_max, *pair, tol=tol)
        result = ExtractionResult("blind", extrema, estimate, r=r_hat, analyzer_extrema=pair, deltas=deltas)

    logger.info("Extraction (%s): status=%s, cos2=%s", result.mode, estimate.status, estimate.cos2_phi)
    return result
