"""Spin-1/2 linear algebra: density operators, SU(2) matrices and Bloch vectors.

Everything here is a 2x2 complex matrix in the basis {|+z>, |-z>}. All value
types are immutable (frozen dataclasses holding read-only arrays), so they can
be shared between threads freely.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from errors import DomainError, ValidationError

logger = logging.getLogger(__name__)

STRUCTURAL_TOL = 1e-12
# Below this modulus a matrix entry is treated as zero when reading angles off it.
_ZERO_ENTRY = 1e-15
# Slack accepted on the xi range before rejecting, e.g. for pi/2 typed with ten digits.
_ANGLE_SLACK = 1e-9

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

KET_UP = np.array([1, 0], dtype=complex)
KET_DOWN = np.array([0, 1], dtype=complex)

X_HAT = np.array([1.0, 0.0, 0.0])
Y_HAT = np.array([0.0, 1.0, 0.0])
Z_HAT = np.array([0.0, 0.0, 1.0])

for _constant in (IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z, KET_UP, KET_DOWN, X_HAT, Y_HAT, Z_HAT):
    _constant.setflags(write=False)


def pauli() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return the Pauli matrices (sigma_x, sigma_y, sigma_z)."""
    return SIGMA_X, SIGMA_Y, SIGMA_Z


def wrap_angle(angle: float) -> float:
    """Reduce an angle into (-pi, pi]."""
    return -((-angle + math.pi) % (2 * math.pi) - math.pi)


def as_unit_vector(vector: np.ndarray | list[float] | tuple[float, ...], tol: float = STRUCTURAL_TOL) -> np.ndarray:
    """Return a read-only float copy of a 3-vector, checking that it has unit length.

    Raises:
        DomainError: If the vector is not 3-dimensional or its length differs from 1 by more than tol

    """
    arr = np.array(vector, dtype=float)
    if arr.shape != (3,) or not np.all(np.isfinite(arr)):
        raise DomainError(f"expected a finite 3-vector, got {vector!r}")
    norm = float(np.linalg.norm(arr))
    if abs(norm - 1.0) > tol:
        raise DomainError(f"vector {arr.tolist()} is not unit length (|n| = {norm:.15g})")
    arr.setflags(write=False)
    return arr


def _as_matrix(matrix: np.ndarray) -> np.ndarray:
    arr = np.array(matrix, dtype=complex)
    if arr.shape != (2, 2):
        raise ValidationError(f"expected a 2x2 matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("matrix has non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian, unit-trace, positive semidefinite 2x2 state of the spin beam."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = _as_matrix(self.matrix)
        hermitian_dev = float(np.max(np.abs(m - m.conj().T)))
        if hermitian_dev > STRUCTURAL_TOL:
            raise ValidationError(f"density operator is not Hermitian (deviation {hermitian_dev:.3g})")
        trace = complex(np.trace(m))
        if abs(trace - 1.0) > STRUCTURAL_TOL:
            raise ValidationError(f"density operator trace is {trace:.15g}, expected 1")
        min_eig = float(np.min(np.linalg.eigvalsh(0.5 * (m + m.conj().T))))
        if min_eig < -STRUCTURAL_TOL:
            raise ValidationError(f"density operator has negative eigenvalue {min_eig:.3g}")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "DensityOperator":
        return cls(matrix)

    @property
    def polarization(self) -> float:
        """Degree of polarisation r, the Bloch-vector length."""
        return bloch_of(self).length

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


@dataclass(frozen=True)
class SU2Params:
    """Angles (xi, delta, zeta) of the SU(2) parametrisation.

    U = e^{i delta} cos(xi) |+z><+z| + e^{i zeta} sin(xi) |-z><+z|
        - e^{-i zeta} sin(xi) |+z><-z| + e^{-i delta} cos(xi) |-z><-z|

    xi is restricted to [0, pi/2] so cos(xi) >= 0; delta and zeta lie in (-pi, pi].
    """

    xi: float
    delta: float
    zeta: float

    def __post_init__(self) -> None:
        xi, delta, zeta = float(self.xi), float(self.delta), float(self.zeta)
        if not all(math.isfinite(v) for v in (xi, delta, zeta)):
            raise DomainError(f"non-finite SU(2) angles ({xi}, {delta}, {zeta})")
        if -_ANGLE_SLACK <= xi < 0:
            xi = 0.0
        elif math.pi / 2 < xi <= math.pi / 2 + _ANGLE_SLACK:
            xi = math.pi / 2
        if not 0 <= xi <= math.pi / 2:
            raise DomainError(f"xi = {xi} outside [0, pi/2]")
        for name, value in (("delta", delta), ("zeta", zeta)):
            if not -math.pi < value <= math.pi:
                raise DomainError(f"{name} = {value} outside (-pi, pi]")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "zeta", zeta)

    @classmethod
    def wrapped(cls, xi: float, delta: float, zeta: float) -> "SU2Params":
        """Build parameters after reducing delta and zeta into (-pi, pi]."""
        return cls(xi, wrap_angle(delta), wrap_angle(zeta))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.xi, self.delta, self.zeta)


@dataclass(frozen=True, eq=False)
class SU2Matrix:
    """Unitary 2x2 matrix with determinant +1."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = _as_matrix(self.matrix)
        unitary_dev = float(np.max(np.abs(m.conj().T @ m - IDENTITY)))
        if unitary_dev > STRUCTURAL_TOL:
            raise ValidationError(f"matrix is not unitary (deviation {unitary_dev:.3g})")
        det = complex(np.linalg.det(m))
        if abs(det - 1.0) > STRUCTURAL_TOL:
            raise ValidationError(f"determinant is {det:.15g}, expected +1")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "SU2Matrix":
        return cls(matrix)

    @classmethod
    def identity(cls) -> "SU2Matrix":
        return cls(IDENTITY)

    def dagger(self) -> "SU2Matrix":
        return SU2Matrix(self.matrix.conj().T)

    def then(self, other: "SU2Matrix") -> "SU2Matrix":
        """Apply self first, then other."""
        return SU2Matrix(other.matrix @ self.matrix)

    def amplitude(self, bra: np.ndarray, ket: np.ndarray) -> complex:
        """Matrix element <bra|U|ket>."""
        return complex(np.vdot(bra, self.matrix @ ket))


@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        if self.length > 1 + STRUCTURAL_TOL:
            raise DomainError(f"Bloch vector length {self.length:.15g} exceeds 1")

    @property
    def length(self) -> float:
        return math.sqrt(self.x**2 + self.y**2 + self.z**2)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


def density_from_polarization(r: float) -> DensityOperator:
    """Build rho = (1 + r sigma_z) / 2 for a beam polarised along +z.

    Args:
        r: Degree of polarisation in [0, 1]

    Returns:
        diag((1 + r)/2, (1 - r)/2)

    """
    check_polarization(r)
    return DensityOperator(np.diag([(1 + r) / 2, (1 - r) / 2]).astype(complex))


def check_polarization(r: float) -> float:
    """Raise DomainError unless 0 <= r <= 1."""
    if not (math.isfinite(r) and 0.0 <= r <= 1.0):
        raise DomainError(f"degree of polarisation r = {r} outside [0, 1]")
    return float(r)


def density_from_bloch(s: BlochVector) -> DensityOperator:
    """Inverse of bloch_of: rho = (1 + s . sigma) / 2."""
    m = 0.5 * (IDENTITY + s.x * SIGMA_X + s.y * SIGMA_Y + s.z * SIGMA_Z)
    return DensityOperator(m)


def pure_density(ket: np.ndarray) -> DensityOperator:
    """Projector |k><k| onto a normalised ket."""
    k = np.asarray(ket, dtype=complex)
    if k.shape != (2,):
        raise DomainError(f"expected a 2-component ket, got shape {k.shape}")
    norm = float(np.linalg.norm(k))
    if abs(norm - 1.0) > STRUCTURAL_TOL:
        raise DomainError(f"ket is not normalised (|k| = {norm:.15g})")
    return DensityOperator(np.outer(k, k.conj()))


def su2_from_params(p: SU2Params) -> SU2Matrix:
    """Matrix form of the (xi, delta, zeta) parametrisation."""
    c, s = math.cos(p.xi), math.sin(p.xi)
    m = np.array(
        [
            [np.exp(1j * p.delta) * c, -np.exp(-1j * p.zeta) * s],
            [np.exp(1j * p.zeta) * s, np.exp(-1j * p.delta) * c],
        ]
    )
    return SU2Matrix(m)


def params_from_su2(u: SU2Matrix | np.ndarray) -> SU2Params:
    """Read (xi, delta, zeta) back off an SU(2) matrix.

    Branch conventions: xi = arccos|U11| in [0, pi/2]; delta = arg U11 unless
    xi = pi/2, zeta = arg U21 unless xi = 0. The undefined angle on either
    degenerate line is set to 0.

    Raises:
        ValidationError: If a raw matrix is not unitary with det = +1

    """
    m = (u if isinstance(u, SU2Matrix) else SU2Matrix(u)).matrix
    u11, u21 = m[0, 0], m[1, 0]
    xi = math.acos(min(1.0, abs(u11)))
    delta = float(np.angle(u11)) if abs(u11) > _ZERO_ENTRY else 0.0
    zeta = float(np.angle(u21)) if abs(u21) > _ZERO_ENTRY else 0.0
    return SU2Params(xi, wrap_angle(delta), wrap_angle(zeta))


def axis_rotation(axis: np.ndarray | list[float] | tuple[float, ...], angle: float) -> SU2Matrix:
    """Spin rotation exp(-i angle (n . sigma) / 2).

    With this sign, axis_rotation(y, pi/2) takes |+z> to (|+z> + |-z>)/sqrt(2).

    Raises:
        DomainError: If the axis is not a unit vector

    """
    n = as_unit_vector(axis)
    n_sigma = n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z
    m = math.cos(angle / 2) * IDENTITY - 1j * math.sin(angle / 2) * n_sigma
    return SU2Matrix(m)


def su2_compose(*unitaries: SU2Matrix) -> SU2Matrix:
    """Product of unitaries in application order (the first argument acts first)."""
    m = IDENTITY.copy()
    for u in unitaries:
        m = u.matrix @ m
    return SU2Matrix(m)


def evolve(rho: DensityOperator, u: SU2Matrix) -> DensityOperator:
    """Unitary channel rho -> U rho U^dagger."""
    m = u.matrix @ rho.matrix @ u.matrix.conj().T
    return DensityOperator(0.5 * (m + m.conj().T))


def bloch_of(rho: DensityOperator) -> BlochVector:
    """Bloch vector s = (Tr rho sigma_x, Tr rho sigma_y, Tr rho sigma_z)."""
    m = rho.matrix
    s = [float(np.real(np.trace(m @ sigma))) for sigma in (SIGMA_X, SIGMA_Y, SIGMA_Z)]
    length = math.sqrt(sum(v * v for v in s))
    if 1 < length <= 1 + STRUCTURAL_TOL:
        s = [v / length for v in s]
    return BlochVector(*s)


def so3_of(u: SU2Matrix) -> np.ndarray:
    """Rotation R with U (n . sigma) U^dagger = (R n) . sigma.

    R_ij = Tr(sigma_i U sigma_j U^dagger) / 2.
    """
    m = u.matrix
    m_dag = m.conj().T
    sigmas = (SIGMA_X, SIGMA_Y, SIGMA_Z)
    rot = np.array([[0.5 * np.real(np.trace(si @ m @ sj @ m_dag)) for sj in sigmas] for si in sigmas])
    rot.setflags(write=False)
    return rot


def haar_random_su2(rng: np.random.Generator) -> SU2Matrix:
    """Draw a Haar-random SU(2) matrix from a uniformly random unit quaternion."""
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    alpha = complex(q[0], q[3])
    beta = complex(q[2], q[1])
    m = np.array([[alpha, -beta.conjugate()], [beta, alpha.conjugate()]])
    return SU2Matrix(m)
