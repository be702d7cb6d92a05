import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from esfem.errors import DomainError, GeometryError
from esfem.geometry import (
    FrozenSurface,
    constant_field,
    coordinate_field,
    get_surface,
    laplace_beltrami_ambient,
    manufactured_rhs,
    material_derivative,
    material_derivative_field,
    xy_decay,
)

A25 = np.sqrt(1.25)


def random_surface_points(surface, t, n, seed=0):
    rng = np.random.default_rng(seed)
    p = rng.normal(size=(n, 3))
    p /= np.linalg.norm(p, axis=1, keepdims=True)
    return surface.evaluate_flow(p, t)


class TestFlow:
    def test_identity_at_zero(self, ellipsoid):
        np.testing.assert_allclose(ellipsoid.evaluate_flow([1.0, 0, 0], 0.0), [1, 0, 0])

    def test_stretch_at_quarter(self, ellipsoid):
        np.testing.assert_allclose(ellipsoid.evaluate_flow([1.0, 0, 0], 0.25), [1.1180340, 0, 0], atol=1e-7)

    @pytest.mark.parametrize("t", [0.0, 0.3, 0.77])
    def test_y_axis_fixed(self, ellipsoid, t):
        np.testing.assert_allclose(ellipsoid.evaluate_flow([0.0, 1, 0], t), [0, 1, 0])

    def test_flow_stays_on_surface(self, ellipsoid):
        for t in np.linspace(0, 1, 7):
            x = random_surface_points(ellipsoid, t, 50)
            assert np.abs(ellipsoid.level_set(x, t)).max() <= 1e-12

    def test_time_outside_interval(self, ellipsoid):
        with pytest.raises(DomainError):
            ellipsoid.evaluate_flow([1.0, 0, 0], 1.5)
        with pytest.raises(DomainError):
            ellipsoid.velocity_at([1.0, 0, 0], -0.1)

    def test_velocity_values(self, ellipsoid):
        np.testing.assert_allclose(ellipsoid.velocity_at([1.0, 0, 0], 0.0), [np.pi / 4, 0, 0], atol=1e-7)
        np.testing.assert_allclose(ellipsoid.velocity_at([0.0, 0.3, 0.9539392], 0.4), 0.0)

    def test_velocity_matches_flow_derivative(self, ellipsoid):
        rng = np.random.default_rng(1)
        p0 = rng.normal(size=(40, 3))
        p0 /= np.linalg.norm(p0, axis=1, keepdims=True)
        dt = 1e-4
        for t in (0.1, 0.45, 0.8):
            fd = (ellipsoid.evaluate_flow(p0, t + dt) - ellipsoid.evaluate_flow(p0, t - dt)) / (2 * dt)
            v = ellipsoid.velocity_at(ellipsoid.evaluate_flow(p0, t), t)
            assert np.abs(fd - v).max() <= 1e-6

    def test_analytic_jacobian_matches_differences(self, ellipsoid):
        x = random_surface_points(ellipsoid, 0.3, 10)
        analytic = ellipsoid.velocity_jacobian(x, 0.3)
        generic = type(ellipsoid).__mro__[2].velocity_jacobian(ellipsoid, x, 0.3)
        np.testing.assert_allclose(analytic, generic, atol=1e-8)


class TestClosestPoint:
    def test_sphere_outside_reach(self, sphere):
        with pytest.raises(GeometryError):
            sphere.closest_point([2.0, 0, 0], 0.0)

    def test_sphere_radial_large_reach(self):
        from esfem.geometry import UnitSphere

        s = UnitSphere()
        s.reach = 2.0
        data = s.closest_point([2.0, 0, 0], 0.0)
        np.testing.assert_allclose(data.lifted_point, [1, 0, 0], atol=1e-12)
        assert data.signed_distance == pytest.approx(1.0, abs=1e-12)

    def test_sphere_inside(self, sphere):
        x = np.array([0.5, 0.5, 0.5])
        s = get_surface("sphere-static")
        s.reach = 0.5
        data = s.closest_point(x, 0.0)
        np.testing.assert_allclose(data.lifted_point, x / np.linalg.norm(x), atol=1e-12)
        assert data.signed_distance == pytest.approx(-0.1339746, abs=1e-7)

    def test_ellipsoid_axis(self, ellipsoid):
        data = ellipsoid.closest_point([1.2, 0, 0], 0.25)
        np.testing.assert_allclose(data.lifted_point, [1.1180340, 0, 0], atol=1e-7)
        assert data.signed_distance == pytest.approx(0.0819660, abs=1e-7)

    def test_beyond_reach(self, ellipsoid):
        with pytest.raises(GeometryError):
            ellipsoid.closest_point([1.5, 0, 0], 0.0)

    @settings(max_examples=40, deadline=None)
    @given(
        theta=st.floats(0.05, np.pi - 0.05),
        phi=st.floats(0, 2 * np.pi),
        d=st.floats(-0.15, 0.15),
        t=st.floats(0, 1),
    )
    def test_reconstruction(self, ellipsoid, theta, phi, d, t):
        p = np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])
        p = ellipsoid.evaluate_flow(p, t)
        x = np.atleast_2d(p + d * ellipsoid.normal(p, t))
        data = ellipsoid.closest_point(x, t)
        np.testing.assert_allclose(data.lifted_point + data.signed_distance * data.normal, x, atol=1e-11)
        assert abs(ellipsoid.level_set(data.lifted_point, t)) <= 1e-12
        assert data.signed_distance == pytest.approx(d, abs=1e-10)
        np.testing.assert_allclose(np.einsum("nij,nj->ni", data.weingarten, data.normal), 0.0, atol=1e-12)
        np.testing.assert_allclose(data.weingarten, data.weingarten.transpose(0, 2, 1), atol=1e-12)

    def test_idempotent(self, ellipsoid):
        x = random_surface_points(ellipsoid, 0.6, 30)
        data = ellipsoid.closest_point(x, 0.6)
        np.testing.assert_allclose(data.lifted_point, x, atol=1e-10)
        assert np.abs(data.signed_distance).max() <= 1e-10

    def test_sphere_weingarten(self, sphere):
        x = random_surface_points(sphere, 0.0, 20)
        data = sphere.closest_point(x, 0.0)
        np.testing.assert_allclose(data.mean_curvature, 2.0, atol=1e-10)
        proj = np.eye(3) - data.normal[:, :, None] * data.normal[:, None, :]
        np.testing.assert_allclose(data.weingarten, proj, atol=1e-10)

    def test_ellipsoid_vertex_curvature(self, ellipsoid):
        data = ellipsoid.closest_point([A25, 0, 0], 0.25)
        assert data.mean_curvature == pytest.approx(2 * A25, abs=1e-7)

    def test_mean_curvature_on_surface_matches_lift(self, ellipsoid):
        x = random_surface_points(ellipsoid, 0.4, 25)
        np.testing.assert_allclose(ellipsoid.mean_curvature(x, 0.4),
                                   ellipsoid.closest_point(x, 0.4).mean_curvature, atol=1e-12)

    def test_generic_newton_agrees_with_quadric(self, ellipsoid):
        frozen = FrozenSurface(ellipsoid)
        rng = np.random.default_rng(3)
        x = random_surface_points(ellipsoid, 0.7, 30) * (1 + 0.1 * rng.uniform(-1, 1, (30, 1)))
        generic = type(ellipsoid).__mro__[2]._project(ellipsoid, x, 0.7, 1e-13, 50)
        np.testing.assert_allclose(frozen._project(x, 0.7, 1e-13, 50), generic, atol=1e-11)


class TestLaplaceBeltrami:
    def test_xy_on_sphere(self, sphere):
        x = random_surface_points(sphere, 0.0, 30)
        u = xy_decay(0.0)
        np.testing.assert_allclose(laplace_beltrami_ambient(sphere, u, x, 0.0), -6 * x[:, 0] * x[:, 1],
                                   atol=1e-12)

    def test_constant_harmonic(self, ellipsoid):
        x = random_surface_points(ellipsoid, 0.3, 30)
        np.testing.assert_allclose(laplace_beltrami_ambient(ellipsoid, constant_field(), x, 0.3), 0.0)

    def test_coordinate_on_sphere(self, sphere):
        x = random_surface_points(sphere, 0.0, 30)
        np.testing.assert_allclose(laplace_beltrami_ambient(sphere, coordinate_field(2), x, 0.0),
                                   -2 * x[:, 2], atol=1e-12)

    def test_finite_difference_fallback(self, sphere):
        from esfem.geometry import SpaceTimeField

        x = random_surface_points(sphere, 0.0, 10)
        u = SpaceTimeField(lambda y, t: y[:, 0] * y[:, 1])
        np.testing.assert_allclose(laplace_beltrami_ambient(sphere, u, x, 0.0), -6 * x[:, 0] * x[:, 1],
                                   atol=1e-5)


class TestManufacturedRhs:
    def test_frozen_sphere_vanishes(self, sphere):
        frozen = FrozenSurface(sphere)
        x = random_surface_points(sphere, 0.0, 30)
        for t in (0.0, 0.5):
            assert np.abs(manufactured_rhs(frozen, xy_decay(), x, t)).max() <= 1e-12

    def test_oracle_point(self, ellipsoid):
        x = np.array([1 / np.sqrt(2), 1 / np.sqrt(2), 0.0])
        assert manufactured_rhs(ellipsoid, xy_decay(), x, 0.0) == pytest.approx(3 * np.pi / 16, abs=1e-10)
        assert manufactured_rhs(ellipsoid, xy_decay(), [1.0, 0, 0], 0.0) == pytest.approx(0.0, abs=1e-12)

    def test_closed_form_at_zero(self, ellipsoid):
        x = random_surface_points(ellipsoid, 0.0, 200, seed=5)
        oracle = np.pi / 4 * x[:, 0] * x[:, 1] * (2 - x[:, 0] ** 2)
        np.testing.assert_allclose(manufactured_rhs(ellipsoid, xy_decay(), x, 0.0), oracle, atol=1e-10)

    def test_self_consistency(self, ellipsoid):
        u = xy_decay()
        rng = np.random.default_rng(7)
        for t in rng.uniform(0, 1, 5):
            x = random_surface_points(ellipsoid, t, 20, seed=int(t * 1e6))
            lhs = (material_derivative(ellipsoid, u, x, t)
                   + u(x, t) * ellipsoid.surface_divergence_velocity(x, t)
                   - laplace_beltrami_ambient(ellipsoid, u, x, t))
            assert np.abs(lhs - manufactured_rhs(ellipsoid, u, x, t)).max() <= 1e-10

    def test_material_derivative_gradient(self, ellipsoid):
        field = material_derivative_field(ellipsoid, xy_decay())
        x = random_surface_points(ellipsoid, 0.3, 10)
        fd = np.empty_like(x)
        for j in range(3):
            e = np.zeros(3)
            e[j] = 1e-6
            fd[:, j] = (field(x + e, 0.3) - field(x - e, 0.3)) / 2e-6
        np.testing.assert_allclose(field.gradient(x, 0.3), fd, atol=1e-6)


def test_registry():
    assert get_surface("ellipsoid").name == "ellipsoid"
    assert get_surface("sphere-static").static
    with pytest.raises(KeyError):
        get_surface("torus")
