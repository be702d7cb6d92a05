import warnings

import numpy as np
import pytest

from esfem.assembly import assemble_mass, assemble_stiffness
from esfem.errors import GeometryError
from esfem.geometry import FrozenSurface, coordinate_field, xy_decay
from esfem.mesh import advect_mesh, build_icosphere
from esfem.norms import norm_eval
from esfem.operators import (
    FeFunction,
    discrete_delta,
    discrete_green,
    interpolate,
    l2_project,
    locate_point,
    ritz_map,
    ritz_material_derivative,
    ritz_residual,
)


@pytest.fixture(scope="module")
def mesh(ellipsoid_meshes):
    return advect_mesh(ellipsoid_meshes[3], 0.3)


def test_interpolate_nodal(mesh):
    u = xy_decay()
    fe = interpolate(u, mesh)
    np.testing.assert_allclose(fe.coefficients, u(mesh.vertices, 0.3))
    assert fe(5, (0.0, 0.0)) == pytest.approx(fe.coefficients[mesh.triangles[5, 0]])


def test_fe_function_validates(mesh):
    with pytest.raises(ValueError):
        FeFunction(mesh, np.zeros(3))


def test_locate_point(mesh):
    f, xi = 17, np.array([0.2, 0.3])
    v = mesh.vertices[mesh.triangles[f]]
    x = v[0] + xi[0] * (v[1] - v[0]) + xi[1] * (v[2] - v[0])
    f2, xi2 = locate_point(mesh, x)
    assert f2 == f
    np.testing.assert_allclose(xi2, xi, atol=1e-12)
    with pytest.raises(GeometryError):
        locate_point(mesh, [0.0, 0.0, 0.0])


def test_csv_roundtrip(tmp_path, mesh):
    fe = interpolate(xy_decay(), mesh)
    fe.to_csv(tmp_path / "u.csv")
    back = FeFunction.from_csv(mesh, tmp_path / "u.csv")
    np.testing.assert_array_equal(back.coefficients, fe.coefficients)


def test_l2_projection_idempotent(mesh):
    rng = np.random.default_rng(2)
    fe = FeFunction(mesh, rng.normal(size=mesh.n_vertices))
    np.testing.assert_allclose(l2_project(fe, mesh).coefficients, fe.coefficients, atol=1e-9)
    # piecewise constant data: the projection preserves the mean
    vals = rng.normal(size=mesh.n_triangles)
    proj = l2_project(vals, mesh)
    m = assemble_mass(mesh)
    assert m(np.ones(mesh.n_vertices), proj.coefficients) == pytest.approx(np.sum(vals * mesh.areas))
    with pytest.raises(ValueError):
        l2_project(np.zeros(7), mesh)


def test_discrete_delta_reproduces_values(mesh):
    rng = np.random.default_rng(4)
    f, xi = 40, np.array([0.1, 0.6])
    delta = discrete_delta(mesh, triangle=f, xi=xi)
    m = assemble_mass(mesh)
    for _ in range(5):
        phi = FeFunction(mesh, rng.normal(size=mesh.n_vertices))
        assert m(delta.coefficients, phi.coefficients) == pytest.approx(phi(f, xi), abs=1e-9)


def test_discrete_green(mesh):
    f, xi = 40, np.array([0.1, 0.6])
    g = discrete_green(mesh, triangle=f, xi=xi)
    a = assemble_stiffness(mesh).matrix + assemble_mass(mesh).matrix
    e = np.zeros(mesh.n_vertices)
    np.add.at(e, mesh.triangles[f], [0.3, 0.1, 0.6])
    np.testing.assert_allclose(a @ g.coefficients, e, atol=1e-12)
    # the Green's function integrates to one against the constant
    assert assemble_mass(mesh)(np.ones(mesh.n_vertices), g.coefficients) == pytest.approx(1.0, abs=1e-9)


def test_ritz_residual(mesh):
    u = xy_decay()
    r = ritz_map(u, mesh)
    assert ritz_residual(r, u) <= 1e-12


def test_ritz_convergence(ellipsoid_meshes):
    u = xy_decay()
    errs = []
    for level in (2, 3, 4):
        m = advect_mesh(ellipsoid_meshes[level], 0.3)
        errs.append(norm_eval(ritz_map(u, m), "L2", exact=u))
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(rates > 1.8)


def test_ritz_of_sphere_eigenfunction():
    # the Ritz map of a smooth function is as accurate as its interpolant
    mesh = build_icosphere(3)
    r = ritz_map(coordinate_field(2), mesh)
    i = interpolate(coordinate_field(2), mesh)
    assert norm_eval(r, "Linf", exact=coordinate_field(2)) < 2 * norm_eval(i, "Linf", exact=coordinate_field(2)) + 1e-3


def test_material_derivative_static_surface():
    sphere_mesh = build_icosphere(2, FrozenSurface(build_icosphere(0).surface))
    u = coordinate_field(0)  # time independent
    d = ritz_material_derivative(u, sphere_mesh, 0.5)
    assert np.abs(d.coefficients).max() <= 1e-8


def test_material_derivative_one_sided(ellipsoid_meshes):
    u = xy_decay()
    mesh0 = ellipsoid_meshes[2]
    with pytest.warns(UserWarning):
        d0 = ritz_material_derivative(u, mesh0, 0.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        d1 = ritz_material_derivative(u, mesh0, 1e-3)
    assert np.abs(d0.coefficients - d1.coefficients).max() <= 0.05 * np.abs(d1.coefficients).max()
