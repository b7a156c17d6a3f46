"""Unit tests for closed-form phases, visibilities and geodesic geometry."""

import math
import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from errors import AmbiguousGeodesicError, DomainError
from spinops import (
    IDENTITY,
    X_HAT,
    Y_HAT,
    Z_HAT,
    SU2Matrix,
    SU2Params,
    density_from_polarization,
    haar_random_su2,
    so3_of,
    su2_from_params,
)
from theory import (
    GeodesicPath,
    cos2_mixed_phase,
    geodesic_unitary,
    geometric_phase_prediction,
    mixed_extrema,
    mixed_intensity,
    mixed_phase_visibility,
    mixed_report_for,
    mixed_report_from_trace,
    pure_extrema,
    pure_intensity,
    pure_phase_visibility,
    solid_angle,
    solid_angle_fan,
    trace_amplitude,
    transport_certificate,
    transported_states,
)

OCTANT = [Z_HAT, X_HAT, Y_HAT, Z_HAT]


def random_convex_polygon(rng: np.random.Generator) -> GeodesicPath:
    """Closed convex geodesic polygon with +z as its first vertex.

    Vertices lie on a small circle through +z at increasing azimuth.
    """
    radius = rng.uniform(0.2, 1.2)
    azimuth = rng.uniform(0, 2 * math.pi)
    centre = np.array(
        [math.sin(radius) * math.cos(azimuth), math.sin(radius) * math.sin(azimuth), math.cos(radius)]
    )
    e1 = (Z_HAT - math.cos(radius) * centre) / math.sin(radius)
    e2 = np.cross(centre, e1)
    if rng.uniform() < 0.5:
        e2 = -e2
    angles = np.sort(rng.uniform(0.3, 2 * math.pi - 0.3, size=rng.integers(2, 6)))
    angles = angles[np.concatenate([[True], np.diff(angles) > 0.1])]
    vertices = [Z_HAT]
    for t in angles:
        vertices.append(math.cos(radius) * centre + math.sin(radius) * (math.cos(t) * e1 + math.sin(t) * e2))
    vertices.append(Z_HAT)
    return GeodesicPath.from_vertices(vertices)


class TestPhaseAndVisibility:
    """Test pure and mixed phase/visibility closed forms."""

    def setup_method(self) -> None:
        """Set up test fixtures."""
        self.rng = np.random.default_rng(99)

    def test_identity_has_zero_phase(self) -> None:
        report = pure_phase_visibility(SU2Matrix.identity())
        assert report.phi == 0.0
        assert report.nu == pytest.approx(1.0)
        assert report.defined

    def test_pure_phase_is_delta(self) -> None:
        p = SU2Params(math.pi / 3, math.pi / 4, math.pi / 6)
        report = pure_phase_visibility(su2_from_params(p))

        assert report.phi == pytest.approx(math.pi / 4, abs=1e-12)
        assert report.nu == pytest.approx(0.5, abs=1e-12)
        assert report.cos2_phi == pytest.approx(0.5, abs=1e-12)

    def test_orthogonal_evolution_leaves_phase_undefined(self) -> None:
        report = pure_phase_visibility(su2_from_params(SU2Params(math.pi / 2, 0.3, 0.1)))
        assert report.phi is None
        assert report.cos2_phi is None
        assert not report.defined

    def test_mixed_example(self) -> None:
        """xi = pi/3, delta = pi/4, r = 0.8 gives Phi = arctan(0.8) and V = sqrt(0.205)."""
        report = mixed_report_for(0.8, SU2Params(math.pi / 3, math.pi / 4, 0.0))

        assert report.Phi == pytest.approx(math.atan(0.8), abs=1e-12)
        assert report.V == pytest.approx(math.sqrt(0.205), abs=1e-12)
        assert report.cos2_Phi == pytest.approx(1 / 1.64, abs=1e-12)

    def test_matches_trace_of_rho_u(self) -> None:
        """Weighted sum equals Tr(rho U) for random r and U."""
        for _ in range(1000):
            r = self.rng.uniform(0, 1)
            u = haar_random_su2(self.rng)
            a = mixed_phase_visibility(r, u)
            b = mixed_report_from_trace(r, u)
            amplitude = trace_amplitude(density_from_polarization(r), u)

            assert a.V == pytest.approx(abs(amplitude), abs=1e-12)
            assert a.V == pytest.approx(b.V, abs=1e-12)
            if a.defined:
                assert abs(np.exp(2j * a.Phi) - np.exp(2j * b.Phi)) < 1e-10

    def test_reduces_to_pure_at_full_polarization(self) -> None:
        for _ in range(200):
            u = haar_random_su2(self.rng)
            pure = pure_phase_visibility(u)
            mixed = mixed_phase_visibility(1.0, u)
            assert mixed.V == pytest.approx(pure.nu, abs=1e-12)
            if pure.defined:
                assert abs(np.exp(2j * mixed.Phi) - np.exp(2j * pure.phi)) < 1e-12

    def test_visibility_grows_with_polarization(self) -> None:
        """V(r) is nondecreasing and |Phi(r)| <= |delta| with equality at r = 1."""
        u = su2_from_params(SU2Params(0.4, 0.9, -1.1))
        rs = np.linspace(0, 1, 41)
        reports = [mixed_phase_visibility(float(r), u) for r in rs]

        visibilities = [rep.V for rep in reports]
        assert all(b >= a - 1e-15 for a, b in zip(visibilities, visibilities[1:]))
        assert all(abs(rep.Phi) <= 0.9 + 1e-12 for rep in reports)
        assert abs(reports[-1].Phi) == pytest.approx(0.9, abs=1e-12)

    def test_unpolarized_phase_vanishes(self) -> None:
        """At r = 0, Tr(rho U) is real: Phi = 0 (mod pi) and cos^2 Phi = 1."""
        report = mixed_phase_visibility(0.0, su2_from_params(SU2Params(0.3, 1.2, 0.5)))
        assert report.cos2_Phi == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize(
        ("r", "delta", "expected"),
        [
            (0.8, math.pi / 4, 1 / 1.64),
            (0.5, math.pi / 2, 0.0),
            (0.5, -math.pi / 2, 0.0),
            (0.0, math.pi / 2, 1.0),
            (1.0, 0.3, math.cos(0.3) ** 2),
        ],
    )
    def test_cos2_mixed_phase(self, r: float, delta: float, expected: float) -> None:
        assert cos2_mixed_phase(r, delta) == pytest.approx(expected, abs=1e-12)

    def test_cos2_mixed_phase_agrees_with_report(self) -> None:
        for _ in range(200):
            r = self.rng.uniform(0, 1)
            p = SU2Params(self.rng.uniform(0, 1.4), self.rng.uniform(-3, 3), 0.0)
            assert mixed_report_for(r, p).cos2_Phi == pytest.approx(cos2_mixed_phase(r, p.delta), abs=1e-10)

    def test_polarization_out_of_range(self) -> None:
        with pytest.raises(DomainError):
            mixed_phase_visibility(1.5, SU2Matrix.identity())

    def test_unpolarized_visibility(self) -> None:
        """At r = 0 the visibility is |cos(delta) cos(xi)|."""
        report = mixed_report_for(0.0, SU2Params(math.pi / 6, math.pi / 3, 0.2))

        assert report.V == pytest.approx(math.cos(math.pi / 3) * math.cos(math.pi / 6), abs=1e-12)
        assert report.Phi == pytest.approx(0.0, abs=1e-12)

    def test_visibility_bounded_by_pure(self) -> None:
        for _ in range(200):
            u = haar_random_su2(self.rng)
            assert mixed_phase_visibility(float(self.rng.uniform(0, 1)), u).V <= pure_phase_visibility(u).nu + 1e-12


class TestIntensities:
    """Test closed-form intensities and extrema."""

    def test_pure_extrema(self) -> None:
        assert pure_extrema(SU2Params(math.pi / 3, math.pi / 4, 0.0)) == pytest.approx((0.125, 0.875))

    def test_mixed_extrema(self) -> None:
        assert mixed_extrema(0.8, SU2Params(math.pi / 3, math.pi / 4, 0.0)) == pytest.approx((0.2, 0.8))

    def test_unpolarized_extrema_are_half(self) -> None:
        assert mixed_extrema(0.0, SU2Params(0.7, 0.2, 0.1)) == (0.5, 0.5)

    def test_cyclic_case_is_flat(self) -> None:
        p = SU2Params(0.0, 0.7, 0.0)
        assert pure_intensity(p, 0.0) == pytest.approx(math.cos(0.7) ** 2)
        assert pure_intensity(p, 2.0) == pytest.approx(math.cos(0.7) ** 2)

    def test_mixed_intensity_is_affine(self) -> None:
        p = SU2Params(1.0, 0.4, -0.3)
        assert mixed_intensity(0.3, p, 1.1) == pytest.approx(0.35 + 0.3 * pure_intensity(p, 1.1))


class TestGeodesicPaths:
    """Test geodesic unitaries, transport and solid angles."""

    def setup_method(self) -> None:
        """Set up test fixtures."""
        self.rng = np.random.default_rng(5)

    def test_path_must_start_at_z(self) -> None:
        with pytest.raises(DomainError):
            GeodesicPath.from_vertices([X_HAT, Y_HAT])

    def test_path_needs_two_vertices(self) -> None:
        with pytest.raises(DomainError):
            GeodesicPath.from_vertices([Z_HAT])

    def test_antipodal_segment_rejected(self) -> None:
        with pytest.raises(AmbiguousGeodesicError):
            GeodesicPath.from_vertices([Z_HAT, -Z_HAT])

    def test_antipodal_closure_rejected(self) -> None:
        path = GeodesicPath.from_vertices([Z_HAT, X_HAT, -Z_HAT])
        with pytest.raises(AmbiguousGeodesicError):
            solid_angle(path)

    def test_retraced_arc_is_trivial(self) -> None:
        path = GeodesicPath.from_vertices([Z_HAT, X_HAT, Z_HAT])
        u = geodesic_unitary(path)

        assert np.allclose(so3_of(u) @ Z_HAT, Z_HAT, atol=1e-12)
        assert np.allclose(np.abs(u.matrix), np.abs(IDENTITY), atol=1e-12)
        assert solid_angle(path).omega == 0.0

    def test_octant(self) -> None:
        """The octant triangle encloses pi/2 and gives cos^2 phi = 1/2 with nu = 1."""
        path = GeodesicPath.from_vertices(OCTANT)
        report = pure_phase_visibility(geodesic_unitary(path))

        assert solid_angle(path).omega == pytest.approx(math.pi / 2, abs=1e-12)
        assert solid_angle_fan(path).omega == pytest.approx(math.pi / 2, abs=1e-12)
        assert report.nu == pytest.approx(1.0, abs=1e-12)
        assert report.cos2_phi == pytest.approx(0.5, abs=1e-12)
        assert report.phi == pytest.approx(-math.pi / 4, abs=1e-12)

    def test_reversed_octant_flips_sign(self) -> None:
        path = GeodesicPath.from_vertices([Z_HAT, Y_HAT, X_HAT, Z_HAT])
        assert solid_angle(path).omega == pytest.approx(-math.pi / 2, abs=1e-12)

    def test_single_arc(self) -> None:
        """A quarter arc from +z to +x has nu = 1/sqrt(2) and no phase."""
        path = GeodesicPath.from_vertices([Z_HAT, X_HAT])
        report = pure_phase_visibility(geodesic_unitary(path))

        assert report.nu == pytest.approx(1 / math.sqrt(2), abs=1e-12)
        assert report.phi == pytest.approx(0.0, abs=1e-12)
        assert solid_angle(path).omega == 0.0

    def test_transport_certificate(self) -> None:
        """Every segment overlap in the transported frame is real and non-negative."""
        for _ in range(50):
            cert = transport_certificate(random_convex_polygon(self.rng))
            assert np.all(np.abs(cert.imag) < 1e-10)
            assert np.all(cert.real >= -1e-10)

    def test_transported_states_follow_vertices(self) -> None:
        path = GeodesicPath.from_vertices(OCTANT)
        for ket, vertex in zip(transported_states(path), path.vertices):
            bloch = [
                2 * (ket[0].conjugate() * ket[1]).real,
                2 * (ket[0].conjugate() * ket[1]).imag,
                abs(ket[0]) ** 2 - abs(ket[1]) ** 2,
            ]
            assert np.allclose(bloch, vertex, atol=1e-12)

    def test_two_solid_angle_methods_agree(self) -> None:
        for _ in range(200):
            path = random_convex_polygon(self.rng)
            assert solid_angle(path).omega == pytest.approx(solid_angle_fan(path).omega, abs=1e-9)

    def test_geometric_phase_law(self) -> None:
        """cos^2 phi = cos^2(Omega/2) and cos^2 Phi = 1/(1 + r^2 tan^2(Omega/2))."""
        for _ in range(200):
            path = random_convex_polygon(self.rng)
            r = float(self.rng.uniform(0, 1))
            omega = solid_angle(path).omega
            u = geodesic_unitary(path)

            assert pure_phase_visibility(u).cos2_phi == pytest.approx(math.cos(omega / 2) ** 2, abs=1e-9)
            assert mixed_phase_visibility(r, u).cos2_Phi == pytest.approx(
                1 / (1 + r**2 * math.tan(omega / 2) ** 2), abs=1e-9
            )

    def test_open_path_phase_uses_geodesic_closure(self) -> None:
        s = 1 / math.sqrt(2)
        path = GeodesicPath.from_vertices([Z_HAT, [s, 0.0, s], [0.5, 0.5, s]])
        u = geodesic_unitary(path)
        prediction = geometric_phase_prediction(path, 1.0)
        report = pure_phase_visibility(u)

        assert report.cos2_phi == pytest.approx(prediction.cos2_phi, abs=1e-9)
        assert report.nu == pytest.approx(prediction.nu, abs=1e-12)

    def test_prediction_for_octant(self) -> None:
        prediction = geometric_phase_prediction(GeodesicPath.from_vertices(OCTANT), 0.5)

        assert prediction.omega == pytest.approx(math.pi / 2)
        assert prediction.cos2_phi == pytest.approx(0.5)
        assert prediction.cos2_Phi == pytest.approx(0.8)
        assert prediction.nu == pytest.approx(1.0)
        assert prediction.V == pytest.approx(math.sqrt(0.5 + 0.25 * 0.5))

    def test_prediction_matches_transported_unitary(self) -> None:
        for _ in range(50):
            path = random_convex_polygon(self.rng)
            r = float(self.rng.uniform(0.05, 1))
            prediction = geometric_phase_prediction(path, r)
            mixed = mixed_phase_visibility(r, geodesic_unitary(path))

            assert prediction.V == pytest.approx(mixed.V, abs=1e-9)
            assert prediction.cos2_Phi == pytest.approx(mixed.cos2_Phi, abs=1e-9)
