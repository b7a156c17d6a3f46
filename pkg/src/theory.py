"""Closed-form relative phases and visibilities, pure and mixed.

Also builds parallel-transporting unitaries from geodesic polygons on the
Bloch sphere and measures the solid angle they enclose, so the geometric
reading of the relative phase (phi = -Omega/2) can be checked numerically.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from errors import AmbiguousGeodesicError, DomainError
from spinops import (
    KET_DOWN,
    KET_UP,
    STRUCTURAL_TOL,
    Z_HAT,
    DensityOperator,
    SU2Matrix,
    SU2Params,
    as_unit_vector,
    axis_rotation,
    check_polarization,
    density_from_polarization,
    params_from_su2,
    su2_compose,
    su2_from_params,
    wrap_angle,
)

logger = logging.getLogger(__name__)

# Below this visibility the argument of the amplitude carries no information.
DEGENERATE_VISIBILITY = 1e-12
_ANTIPODAL_TOL = 1e-12


@dataclass(frozen=True)
class PureReport:
    """Pancharatnam phase phi = arg<+z|U|+z> and visibility nu = |<+z|U|+z>|.

    phi is None when nu vanishes (the spinor ends orthogonal to where it started).
    """

    phi: float | None
    nu: float
    defined: bool

    @property
    def cos2_phi(self) -> float | None:
        return None if self.phi is None else math.cos(self.phi) ** 2


@dataclass(frozen=True)
class MixedReport:
    """Mixed-state relative phase Phi in (-pi/2, pi/2] and visibility V."""

    Phi: float | None
    V: float
    defined: bool

    @property
    def cos2_Phi(self) -> float | None:
        return None if self.Phi is None else math.cos(self.Phi) ** 2


@dataclass(frozen=True, eq=False)
class GeodesicPath:
    """Bloch-sphere vertices joined by great-circle arcs, starting at +z."""

    vertices: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        verts = tuple(as_unit_vector(v) for v in self.vertices)
        if len(verts) < 2:
            raise DomainError("a geodesic path needs at least two vertices")
        if float(np.max(np.abs(verts[0] - Z_HAT))) > STRUCTURAL_TOL:
            raise DomainError(f"path must start at +z, starts at {verts[0].tolist()}")
        for k, (p, q) in enumerate(zip(verts[:-1], verts[1:])):
            _check_not_antipodal(p, q, f"segment {k}")
        object.__setattr__(self, "vertices", verts)

    @classmethod
    def from_vertices(cls, vertices: Sequence[Sequence[float]]) -> "GeodesicPath":
        return cls(tuple(np.asarray(v, dtype=float) for v in vertices))

    @property
    def closed(self) -> bool:
        return float(np.max(np.abs(self.vertices[-1] - self.vertices[0]))) <= STRUCTURAL_TOL

    def closed_vertices(self) -> list[np.ndarray]:
        """Vertices with the shortest geodesic closure appended when the path is open."""
        verts = list(self.vertices)
        if not self.closed:
            _check_not_antipodal(verts[-1], verts[0], "closure")
            verts.append(verts[0])
        return verts


@dataclass(frozen=True)
class SolidAngle:
    """Signed solid angle in steradians, positive for counter-clockwise loops seen from outside."""

    omega: float


@dataclass(frozen=True)
class GeometricPrediction:
    """Phase and visibility predicted from the enclosed solid angle alone."""

    omega: float
    phi: float
    cos2_phi: float
    nu: float
    Phi: float
    cos2_Phi: float
    V: float


def _check_not_antipodal(p: np.ndarray, q: np.ndarray, where: str) -> None:
    if float(np.dot(p, q)) < -1 + _ANTIPODAL_TOL:
        raise AmbiguousGeodesicError(f"{where}: vertices {p.tolist()} and {q.tolist()} are antipodal")


def fold_half_turn(angle: float) -> float:
    """Reduce an angle modulo pi into (-pi/2, pi/2]."""
    folded = wrap_angle(angle)
    if folded > math.pi / 2:
        folded -= math.pi
    elif folded <= -math.pi / 2:
        folded += math.pi
    return folded


def trace_amplitude(rho: DensityOperator, u: SU2Matrix) -> complex:
    """Weighted sum of pure-state phase factors, Tr(rho U)."""
    return complex(np.trace(rho.matrix @ u.matrix))


def pure_phase_visibility(u: SU2Matrix) -> PureReport:
    """Pancharatnam phase and visibility of |+z> under U."""
    amplitude = u.amplitude(KET_UP, KET_UP)
    nu = abs(amplitude)
    if nu < DEGENERATE_VISIBILITY:
        logger.info("Visibility %.3g below threshold: phase undefined", nu)
        return PureReport(phi=None, nu=nu, defined=False)
    return PureReport(phi=wrap_angle(float(np.angle(amplitude))), nu=nu, defined=True)


def mixed_phase_visibility(r: float, u: SU2Matrix) -> MixedReport:
    """Relative phase and visibility of rho = (1 + r sigma_z)/2 under U.

    V e^{i Phi} = (1+r)/2 cos(xi) e^{i delta} + (1-r)/2 cos(xi) e^{-i delta},
    which is Tr(rho U). Phi is reported modulo pi in (-pi/2, pi/2], where it
    equals arctan(r tan delta).

    Raises:
        DomainError: If r is outside [0, 1]

    """
    check_polarization(r)
    p = params_from_su2(u)
    c = math.cos(p.xi)
    weighted = (1 + r) / 2 * c * np.exp(1j * p.delta) + (1 - r) / 2 * c * np.exp(-1j * p.delta)
    visibility = abs(weighted)
    if visibility < DEGENERATE_VISIBILITY:
        return MixedReport(Phi=None, V=visibility, defined=False)
    return MixedReport(Phi=fold_half_turn(float(np.angle(weighted))), V=visibility, defined=True)


def cos2_mixed_phase(r: float, delta: float) -> float:
    """cos^2 Phi = 1 / (1 + r^2 tan^2 delta), with the limits at delta = +-pi/2.

    At delta = +-pi/2 the limit is 0 for r > 0 and 1 for r = 0.
    """
    check_polarization(r)
    c2 = math.cos(delta) ** 2
    if c2 < 1e-30:
        return 0.0 if r > 0 else 1.0
    return 1.0 / (1.0 + r * r * math.sin(delta) ** 2 / c2)


def pure_intensity(p: SU2Params, eta: float) -> float:
    """Closed-form polarimeter output for a pure +z beam."""
    return math.cos(p.xi) ** 2 * math.cos(p.delta) ** 2 + math.sin(p.xi) ** 2 * math.sin(p.zeta - eta) ** 2


def mixed_intensity(r: float, p: SU2Params, eta: float) -> float:
    """Closed-form output (1 - r)/2 + r I for a partially polarised beam."""
    check_polarization(r)
    return (1 - r) / 2 + r * pure_intensity(p, eta)


def pure_extrema(p: SU2Params) -> tuple[float, float]:
    """(I_min, I_max) reached by translating the flippers, pure beam."""
    i_min = math.cos(p.xi) ** 2 * math.cos(p.delta) ** 2
    return i_min, i_min + math.sin(p.xi) ** 2


def mixed_extrema(r: float, p: SU2Params) -> tuple[float, float]:
    """(I^rho_min, I^rho_max) for degree of polarisation r."""
    check_polarization(r)
    i_min, i_max = pure_extrema(p)
    offset = (1 - r) / 2
    return offset + r * i_min, offset + r * i_max


def _segment_rotation(p: np.ndarray, q: np.ndarray) -> SU2Matrix:
    """Rotation carrying p to q along the great circle through both."""
    normal = np.cross(p, q)
    sin_theta = float(np.linalg.norm(normal))
    theta = math.atan2(sin_theta, float(np.dot(p, q)))
    if sin_theta < STRUCTURAL_TOL:
        return SU2Matrix.identity()
    return axis_rotation(normal / sin_theta, theta)


def segment_unitaries(path: GeodesicPath) -> list[SU2Matrix]:
    verts = path.vertices
    return [_segment_rotation(p, q) for p, q in zip(verts[:-1], verts[1:])]


def geodesic_unitary(path: GeodesicPath) -> SU2Matrix:
    """Parallel-transporting unitary following the path's great-circle arcs in order."""
    return su2_compose(*segment_unitaries(path))


def transported_states(path: GeodesicPath) -> list[np.ndarray]:
    """Kets reached at each vertex when |+z> is carried along the path."""
    states = [KET_UP.copy()]
    for seg in segment_unitaries(path):
        states.append(seg.matrix @ states[-1])
    return states


def transport_certificate(path: GeodesicPath) -> np.ndarray:
    """Per-segment overlaps <psi_k|S_k|psi_k> for the transported frame and its orthogonal partner.

    Returns:
        Complex array of shape (segments, 2); parallel transport makes every entry real and non-negative

    """
    rows = []
    frame_up, frame_down = KET_UP.copy(), KET_DOWN.copy()
    for seg in segment_unitaries(path):
        m = seg.matrix
        rows.append((np.vdot(frame_up, m @ frame_up), np.vdot(frame_down, m @ frame_down)))
        frame_up, frame_down = m @ frame_up, m @ frame_down
    return np.array(rows, dtype=complex).reshape(-1, 2)


def reduce_solid_angle(omega: float) -> float:
    """Reduce a solid angle modulo 4 pi into (-2 pi, 2 pi]."""
    reduced = omega % (4 * math.pi)
    if reduced > 2 * math.pi:
        reduced -= 4 * math.pi
    return reduced


def _polygon(path: GeodesicPath) -> list[np.ndarray]:
    """Distinct cyclic vertices of the closed polygon."""
    loop = path.closed_vertices()[:-1]
    distinct: list[np.ndarray] = []
    for v in loop:
        if not distinct or float(np.linalg.norm(v - distinct[-1])) > STRUCTURAL_TOL:
            distinct.append(v)
    while len(distinct) > 1 and float(np.linalg.norm(distinct[-1] - distinct[0])) <= STRUCTURAL_TOL:
        distinct.pop()
    return distinct


def _tangent(at: np.ndarray, toward: np.ndarray) -> np.ndarray:
    t = toward - float(np.dot(toward, at)) * at
    return t / np.linalg.norm(t)


def solid_angle(path: GeodesicPath) -> SolidAngle:
    """Signed spherical excess of the path closed by its shortest geodesic.

    The excess is the sum of interior angles minus (n - 2) pi, computed as
    2 pi minus the sum of signed turning angles. A reversal (U-turn) counts as a
    turn of +pi, so retraced arcs enclose nothing.

    Raises:
        AmbiguousGeodesicError: If the closing arc joins antipodal points

    """
    poly = _polygon(path)
    n = len(poly)
    if n < 3:
        return SolidAngle(0.0)
    turning = 0.0
    for k in range(n):
        prev, cur, nxt = poly[k - 1], poly[k], poly[(k + 1) % n]
        t_in = -_tangent(cur, prev)
        t_out = _tangent(cur, nxt)
        cos_turn = float(np.dot(t_in, t_out))
        if cos_turn < -1 + 1e-12:
            turning += math.pi
        else:
            turning += math.atan2(float(np.dot(cur, np.cross(t_in, t_out))), cos_turn)
    omega = reduce_solid_angle(2 * math.pi - turning)
    if abs(omega) < 1e-14:
        omega = 0.0
    return SolidAngle(omega)


def solid_angle_fan(path: GeodesicPath) -> SolidAngle:
    """Solid angle as a sum of signed triangle areas fanned from the first vertex.

    Each triangle (a, b, c) contributes 2 atan2(a.(b x c), 1 + a.b + b.c + c.a).
    """
    poly = _polygon(path)
    if len(poly) < 3:
        return SolidAngle(0.0)
    a = poly[0]
    total = 0.0
    for b, c in zip(poly[1:-1], poly[2:]):
        num = float(np.dot(a, np.cross(b, c)))
        den = 1.0 + float(np.dot(a, b)) + float(np.dot(b, c)) + float(np.dot(c, a))
        total += 2 * math.atan2(num, den)
    return SolidAngle(reduce_solid_angle(total))


def geometric_phase_prediction(path: GeodesicPath, r: float) -> GeometricPrediction:
    """Phases predicted from the enclosed solid angle: delta + arg cos(xi) = -Omega/2.

    The visibilities use the overlap of the final vertex with +z, nu = sqrt((1 + z_end)/2).
    """
    check_polarization(r)
    omega = solid_angle(path).omega
    half = -omega / 2
    nu = math.sqrt(max(0.0, (1 + float(path.vertices[-1][2])) / 2))
    amplitude = complex(math.cos(half), r * math.sin(half))
    return GeometricPrediction(
        omega=omega,
        phi=wrap_angle(half),
        cos2_phi=math.cos(half) ** 2,
        nu=nu,
        Phi=fold_half_turn(math.atan2(amplitude.imag, amplitude.real)),
        cos2_Phi=cos2_mixed_phase(r, half),
        V=nu * abs(amplitude),
    )


def mixed_report_for(r: float, p: SU2Params) -> MixedReport:
    """mixed_phase_visibility for parameters instead of a matrix."""
    return mixed_phase_visibility(r, su2_from_params(p))


def mixed_report_from_trace(r: float, u: SU2Matrix) -> MixedReport:
    """Same report computed straight from Tr(rho U) with rho = density_from_polarization(r)."""
    amplitude = trace_amplitude(density_from_polarization(r), u)
    visibility = abs(amplitude)
    if visibility < DEGENERATE_VISIBILITY:
        return MixedReport(Phi=None, V=visibility, defined=False)
    return MixedReport(Phi=fold_half_turn(float(np.angle(amplitude))), V=visibility, defined=True)
