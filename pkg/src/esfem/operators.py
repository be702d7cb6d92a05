"""Finite element functions and the projections acting on them."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import (
    assemble_exact_forms,
    assemble_mass,
    assemble_stiffness,
    point_load,
)
from .errors import GeometryError, NumericError
from .mesh import SurfaceMesh, advect_mesh

CG_TOL = 1e-12


@dataclass(frozen=True)
class FeFunction:
    """Member of S_h(t): nodal coefficients on a mesh."""

    mesh: SurfaceMesh
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        if c.shape[0] != self.mesh.n_vertices:
            raise ValueError("coefficient count must equal vertex count")
        object.__setattr__(self, "coefficients", c)

    def __call__(self, triangle, xi):
        """Evaluate at reference coordinates ``xi`` of ``triangle``."""
        c = self.coefficients[self.mesh.triangles[triangle]]
        return c[0] * (1 - xi[0] - xi[1]) + c[1] * xi[0] + c[2] * xi[1]

    def at_point(self, x):
        tri, xi = locate_point(self.mesh, x)
        return self(tri, xi)

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("vertex,value\n")
            for j, v in enumerate(self.coefficients):
                fh.write(f"{j},{v:.17g}\n")

    @classmethod
    def from_csv(cls, mesh, path):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        coeffs = np.zeros(mesh.n_vertices)
        coeffs[data[:, 0].astype(int)] = data[:, 1]
        return cls(mesh, coeffs)


def solve_spd(matrix, rhs, tol=CG_TOL, what="system"):
    """Jacobi-preconditioned CG with relative residual ``tol``, at most 10 N iterations."""
    matrix = sp.csr_matrix(matrix)
    n = matrix.shape[0]
    precond = sp.diags(1.0 / matrix.diagonal())
    rhs = np.asarray(rhs, dtype=float)
    if not np.any(rhs):
        return np.zeros_like(rhs)
    x, info = spla.cg(matrix, rhs, rtol=tol, atol=0.0, maxiter=10 * n, M=precond)
    if info != 0:
        raise NumericError(f"CG failed for {what} (info={info})")
    return x


def locate_point(mesh: SurfaceMesh, x, tol=1e-9):
    """Triangle index and reference coordinates of a point on Gamma_h(t)."""
    x = np.asarray(x, dtype=float)
    e = mesh.edge_vectors
    a0 = mesh.vertices[mesh.triangles[:, 0]]
    gram = np.einsum("fik,fil->fkl", e, e)
    rhs = np.einsum("fik,fi->fk", e, x - a0)
    xi = np.linalg.solve(gram, rhs[..., None])[..., 0]
    off_plane = np.linalg.norm(a0 + np.einsum("fik,fk->fi", e, xi) - x, axis=1)
    inside = (xi >= -tol).all(axis=1) & (xi.sum(axis=1) <= 1 + tol)
    ok = inside & (off_plane <= tol * max(1.0, mesh.h))
    if not ok.any():
        raise GeometryError("point does not lie on the discrete surface")
    f = int(np.flatnonzero(ok)[0])
    return f, xi[f]


def interpolate(field, mesh) -> FeFunction:
    """Nodal interpolant I_h u."""
    return FeFunction(mesh, field(mesh.vertices, mesh.t))


def element_load(mesh, element_values):
    """Load m_h(f, chi_j) of a piecewise-constant function given per element."""
    vals = np.asarray(element_values)[:, None] * mesh.areas[:, None] / 3.0 * np.ones(3)
    return np.bincount(mesh.triangles.ravel(), weights=vals.ravel(), minlength=mesh.n_vertices)


def l2_project(f, mesh, tol=CG_TOL) -> FeFunction:
    """L2 projection P_h onto S_h(t).

    ``f`` is an FeFunction on ``mesh``, a per-element array (piecewise
    constant data) or a precomputed load vector via ``load=``.
    """
    mass = assemble_mass(mesh).matrix
    if isinstance(f, FeFunction):
        load = mass @ f.coefficients
    else:
        f = np.asarray(f, dtype=float)
        if f.shape == (mesh.n_triangles,):
            load = element_load(mesh, f)
        elif f.shape == (mesh.n_vertices,):
            load = f
        else:
            raise ValueError("expected an FeFunction, element values or a load vector")
    return FeFunction(mesh, solve_spd(mass, load, tol, "L2 projection"))


def ritz_matrix(mesh):
    return (assemble_stiffness(mesh).matrix + assemble_mass(mesh).matrix).tocsr()


def ritz_map(field, mesh, order=4, tol=CG_TOL) -> FeFunction:
    """Ritz map for a* = a + m: (A + M) r = a*(u, chi_j^l)."""
    m_load, a_load = assemble_exact_forms(mesh, field, order)
    return FeFunction(mesh, solve_spd(ritz_matrix(mesh), m_load + a_load, tol, "Ritz map"))


def ritz_residual(ritz: FeFunction, field, order=4):
    """max_j |a*_h(R_h u, chi_j) - a*(u, chi_j^l)|."""
    m_load, a_load = assemble_exact_forms(ritz.mesh, field, order)
    return float(np.abs(ritz_matrix(ritz.mesh) @ ritz.coefficients - m_load - a_load).max())


def ritz_material_derivative(field, mesh0, t, dt=1e-4, order=4):
    """Discrete material derivative of R_h u at time ``t``.

    Basis functions move with the nodes, so the derivative is carried by the
    Ritz coefficients alone; they are differenced at ``t +- dt`` on the
    advected meshes. Near the ends of the time interval a one-sided
    three-point stencil is used and a warning is issued.
    """
    surface = mesh0.surface
    surface.check_time(t)
    mesh_t = advect_mesh(mesh0, t)

    def coeffs(s):
        return ritz_map(field, advect_mesh(mesh0, s), order).coefficients

    if t - dt >= 0 and t + dt <= surface.t_final:
        return FeFunction(mesh_t, (coeffs(t + dt) - coeffs(t - dt)) / (2 * dt))
    warnings.warn("one-sided difference for the material derivative near the end of the time interval",
                  stacklevel=2)
    sign = 1.0 if t - dt < 0 else -1.0
    # second-order one-sided stencil (-3 f0 + 4 f1 - f2) / (2 dt)
    c0, c1, c2 = coeffs(t), coeffs(t + sign * dt), coeffs(t + 2 * sign * dt)
    return FeFunction(mesh_t, sign * (-3 * c0 + 4 * c1 - c2) / (2 * dt))


def discrete_delta(mesh, x=None, triangle=None, xi=None, tol=CG_TOL) -> FeFunction:
    """delta_h with m_h(delta_h, phi_h) = phi_h(x_h)."""
    if triangle is None:
        triangle, xi = locate_point(mesh, x)
    e = point_load(mesh, triangle, xi)
    return FeFunction(mesh, solve_spd(assemble_mass(mesh).matrix, e, tol, "discrete delta"))


def discrete_green(mesh, x=None, triangle=None, xi=None, tol=CG_TOL) -> FeFunction:
    """G_h = T*_h delta_h, i.e. (A + M) g = e(x_h)."""
    if triangle is None:
        triangle, xi = locate_point(mesh, x)
    e = point_load(mesh, triangle, xi)
    return FeFunction(mesh, solve_spd(ritz_matrix(mesh), e, tol, "discrete Green's function"))
