import numpy as np
import pytest

from esfem.geometry import constant_field, xy_decay
from esfem.mesh import advect_mesh
from esfem.norms import WeightSpec, gradient_ratio, norm_eval
from esfem.operators import FeFunction, interpolate


def test_constant_on_sphere(sphere_meshes):
    mesh = sphere_meshes[3]
    one = constant_field()
    assert norm_eval(kind="L2", exact=one, mesh=mesh) == pytest.approx(np.sqrt(4 * np.pi), rel=1e-9)
    assert norm_eval(kind="L1", exact=one, mesh=mesh) == pytest.approx(4 * np.pi, rel=1e-9)
    assert norm_eval(kind="Linf", exact=one, mesh=mesh) == 1.0
    assert norm_eval(kind="H1", exact=one, mesh=mesh) == pytest.approx(np.sqrt(4 * np.pi), rel=1e-9)


def test_discrete_norms(sphere_meshes):
    mesh = sphere_meshes[2]
    ones = FeFunction(mesh, np.ones(mesh.n_vertices))
    assert norm_eval(ones, "L1", on="discrete") == pytest.approx(mesh.areas.sum())
    assert norm_eval(ones, "grad-L2", on="discrete") == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        norm_eval(ones, "L2", exact=constant_field(), on="discrete")


def test_unweighted_equals_alpha_zero(ellipsoid_meshes):
    mesh = advect_mesh(ellipsoid_meshes[3], 0.4)
    u = xy_decay()
    fe = interpolate(u, mesh)
    w = WeightSpec(anchor=[1.0, 0, 0], h=mesh.h, alpha=0.0)
    assert norm_eval(fe, "weighted-L2", exact=u, weight=w) == pytest.approx(norm_eval(fe, "L2", exact=u))
    assert norm_eval(fe, "weighted-H1", exact=u, weight=w) == pytest.approx(norm_eval(fe, "H1", exact=u))


def test_weight_values():
    w = WeightSpec(anchor=[0, 0, 0], h=0.1, gamma=2.0)
    assert w(np.array([[0.0, 0, 0]]))[0] == pytest.approx(2 * 0.01 * np.log(10))
    wt = WeightSpec(anchor=[0, 0, 0], h=0.1, kind="mu_tilde")
    assert wt(np.array([[0.3, 0.4, 0]]))[0] == pytest.approx(np.sqrt(0.26))
    with pytest.raises(ValueError):
        WeightSpec(anchor=[0, 0, 0], h=0.1, kind="nu")
    with pytest.raises(ValueError):
        WeightSpec(anchor=[0, 0, 0], h=0.1, gamma=0)


def test_interpolation_error_rates(ellipsoid_meshes):
    u = xy_decay()
    e = {k: [] for k in ("L2", "Linf", "H1", "W1inf")}
    hs = []
    for level in (2, 3, 4):
        mesh = advect_mesh(ellipsoid_meshes[level], 0.6)
        fe = interpolate(u, mesh)
        hs.append(mesh.h)
        for k in e:
            e[k].append(norm_eval(fe, k, exact=u))
    rate = {k: np.log(v[-2] / v[-1]) / np.log(hs[-2] / hs[-1]) for k, v in e.items()}
    assert rate["L2"] > 1.8 and rate["Linf"] > 1.8
    assert 0.8 < rate["H1"] < 1.3 and 0.8 < rate["W1inf"] < 1.3


def test_unknown_kind(sphere_meshes):
    with pytest.raises(ValueError):
        norm_eval(kind="L3", exact=constant_field(), mesh=sphere_meshes[1])


def test_gradient_ratio_near_one(ellipsoid_meshes):
    fe = interpolate(xy_decay(), advect_mesh(ellipsoid_meshes[3], 0.25))
    lo, hi = gradient_ratio(fe)
    assert 0.8 < lo <= hi < 1.25
