import numpy as np
import pytest

from esfem.assembly import (
    assemble_exact_forms,
    assemble_mass,
    assemble_stiffness,
    assemble_velocity_forms,
    load_vector,
    nodal_velocity,
    point_load,
    write_coo,
)
from esfem.geometry import coordinate_field, constant_field, xy_decay
from esfem.mesh import advect_mesh


def test_reference_mass(unit_triangle):
    m = assemble_mass(unit_triangle).matrix.toarray()
    expected = np.full((3, 3), 1 / 24) + np.eye(3) / 24
    np.testing.assert_allclose(m, expected, atol=1e-15)
    assert m[0, 0] == pytest.approx(1 / 12)


def test_reference_stiffness(unit_triangle):
    a = assemble_stiffness(unit_triangle).matrix.toarray()
    expected = np.array([[1, -0.5, -0.5], [-0.5, 0.5, 0], [-0.5, 0, 0.5]])
    np.testing.assert_allclose(a, expected, atol=1e-15)


def test_stiffness_kernel_and_mass_total(ellipsoid_meshes):
    for t in (0.0, 0.25, 0.7):
        mesh = advect_mesh(ellipsoid_meshes[3], t)
        a = assemble_stiffness(mesh)
        m = assemble_mass(mesh)
        ones = np.ones(mesh.n_vertices)
        assert np.abs(a @ ones).max() <= 1e-12
        assert m(ones, ones) == pytest.approx(mesh.areas.sum(), rel=1e-14)
        assert a.asymmetry() <= 1e-14 and m.asymmetry() <= 1e-14
        eig_min = np.linalg.eigvalsh(m.matrix.toarray()).min() if mesh.n_vertices < 700 else 1
        assert eig_min > 0


def test_transport_identities(ellipsoid_meshes):
    """d/dt m_h = g_h and d/dt a_h = b_h for moving-basis coefficient vectors."""
    rng = np.random.default_rng(0)
    mesh0 = ellipsoid_meshes[2]
    z, phi = rng.normal(size=(2, mesh0.n_vertices))
    dt = 1e-5
    for t in (0.1, 0.4, 0.85):
        mesh = advect_mesh(mesh0, t)
        g, b = assemble_velocity_forms(mesh, nodal_velocity(mesh))
        mp, mm = (assemble_mass(advect_mesh(mesh0, t + s)) for s in (dt, -dt))
        ap, am = (assemble_stiffness(advect_mesh(mesh0, t + s)) for s in (dt, -dt))
        dm = (mp(z, phi) - mm(z, phi)) / (2 * dt)
        da = (ap(z, phi) - am(z, phi)) / (2 * dt)
        assert abs(dm - g(z, phi)) <= 1e-4 * max(1.0, abs(dm))
        assert abs(da - b(z, phi)) <= 1e-3 * max(1.0, abs(da))


def test_velocity_forms_static(sphere_meshes):
    mesh = sphere_meshes[2]
    g, b = assemble_velocity_forms(mesh, nodal_velocity(mesh))
    assert abs(g.matrix).max() == 0 and abs(b.matrix).max() == 0


def test_exact_forms_constant(ellipsoid_meshes):
    mesh = advect_mesh(ellipsoid_meshes[3], 0.5)
    m_load, a_load = assemble_exact_forms(mesh, constant_field(), order=6)
    np.testing.assert_allclose(a_load, 0.0, atol=1e-14)
    area = 4 * np.pi  # ellipsoid area is within a few percent; check via a direct integral
    from esfem.mesh import lifted_quadrature

    pts = lifted_quadrature(mesh, 6)
    assert m_load.sum() == pytest.approx(pts.integrate(np.ones_like(pts.delta)), rel=1e-13)
    assert 0.9 * area < m_load.sum() < 1.2 * area


def test_exact_forms_sphere_oracle(sphere_meshes):
    # on the unit sphere, a(x3, chi) = 2 m(x3, chi)
    mesh = sphere_meshes[4]
    m_load, a_load = assemble_exact_forms(mesh, coordinate_field(2), order=6)
    np.testing.assert_allclose(a_load, 2 * m_load, atol=1e-14)
    ones = np.ones(mesh.n_vertices)
    assert ones @ m_load == pytest.approx(0.0, abs=1e-13)


def test_load_matches_mass_part(ellipsoid_meshes):
    mesh = ellipsoid_meshes[2]
    u = xy_decay()
    np.testing.assert_allclose(load_vector(mesh, u, 6), assemble_exact_forms(mesh, u, 6)[0])


def test_point_load(unit_triangle):
    np.testing.assert_allclose(point_load(unit_triangle, 0, (0.25, 0.5)), [0.25, 0.25, 0.5])


def test_write_coo(tmp_path, unit_triangle):
    path = tmp_path / "m.txt"
    write_coo(assemble_mass(unit_triangle), path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# mass 3"
    assert len(lines) == 10


def test_stiffness_positive_semidefinite(ellipsoid_meshes):
    from scipy.linalg import eigvalsh

    mesh = advect_mesh(ellipsoid_meshes[2], 0.6)
    lam = eigvalsh(assemble_stiffness(mesh).matrix.toarray(), assemble_mass(mesh).matrix.toarray())
    assert lam[0] >= -1e-12
    assert lam[1] > 0.5  # a single zero mode: the constants
