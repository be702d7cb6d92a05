"""Assembly of the P1 bilinear forms on flat triangulations and of exact-surface loads."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import SurfaceMesh, lifted_quadrature
from .quadrature import SHAPE_GRADIENTS

LOCAL_MASS = (np.ones((3, 3)) + np.eye(3)) / 12.0  # times area


@dataclass(frozen=True)
class SparseSymmetricForm:
    """An assembled symmetric bilinear form on S_h(t)."""

    matrix: sp.csr_matrix
    kind: str  # "mass", "stiffness", "velocity-g", "velocity-b"

    @property
    def dimension(self):
        return self.matrix.shape[0]

    def __call__(self, z, phi):
        """Form value for coefficient vectors ``z`` and ``phi``."""
        return float(np.asarray(z) @ (self.matrix @ np.asarray(phi)))

    def __matmul__(self, other):
        return self.matrix @ other

    def asymmetry(self):
        m = self.matrix
        diff = abs(m - m.T).max()
        return float(diff / max(abs(m).max(), 1e-300))


def _scatter(mesh: SurfaceMesh, local):
    """Sum (F, 3, 3) element matrices into an N x N CSR matrix."""
    tri = mesh.triangles
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    n = mesh.n_vertices
    mat = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    mat.sum_duplicates()
    mat.sort_indices()
    return mat


def local_mass(mesh):
    return mesh.areas[:, None, None] * LOCAL_MASS


def local_stiffness(mesh):
    g = mesh.basis_gradients
    return mesh.areas[:, None, None] * np.einsum("fid,fjd->fij", g, g)


def assemble_mass(mesh) -> SparseSymmetricForm:
    return SparseSymmetricForm(_scatter(mesh, local_mass(mesh)), "mass")


def assemble_stiffness(mesh) -> SparseSymmetricForm:
    return SparseSymmetricForm(_scatter(mesh, local_stiffness(mesh)), "stiffness")


def velocity_gradient(mesh, nodal_velocity):
    """Per-element tangential Jacobian ``D[f, i, j] = (grad_Gamma_h)_i V_j``."""
    v = np.asarray(nodal_velocity)[mesh.triangles]  # (F, 3 local, 3 comp)
    return np.einsum("fli,flj->fij", mesh.basis_gradients, v)


def assemble_velocity_forms(mesh, nodal_velocity):
    """Forms g_h(V_h; ., .) and b_h(V_h; ., .) for a nodal velocity (N, 3)."""
    jac = velocity_gradient(mesh, nodal_velocity)
    div = np.trace(jac, axis1=1, axis2=2)
    g_local = div[:, None, None] * local_mass(mesh)
    btensor = div[:, None, None] * np.eye(3) - (jac + jac.transpose(0, 2, 1))
    grads = mesh.basis_gradients
    b_local = mesh.areas[:, None, None] * np.einsum("fid,fde,fje->fij", grads, btensor, grads)
    return (
        SparseSymmetricForm(_scatter(mesh, g_local), "velocity-g"),
        SparseSymmetricForm(_scatter(mesh, b_local), "velocity-b"),
    )


def nodal_velocity(mesh):
    """Nodal interpolant of the exact velocity, V_h = sum v(a_j(t)) chi_j."""
    return mesh.surface.velocity_at(mesh.vertices, mesh.t)


def _load(mesh, values):
    """Scatter (F, 3) element contributions into a length-N vector."""
    return np.bincount(mesh.triangles.ravel(), weights=values.ravel(), minlength=mesh.n_vertices)


def assemble_exact_forms(mesh, field, order=4, quad=None):
    """Exact-surface loads m(u, chi_j^l) and a(u, chi_j^l) via lifted quadrature."""
    quad = lifted_quadrature(mesh, order) if quad is None else quad
    pts = quad.lifted.reshape(-1, 3)
    nf, nq = quad.delta.shape
    w = quad.weights * quad.delta
    u = field(pts, mesh.t).reshape(nf, nq)
    m_load = _load(mesh, np.einsum("fq,fq,qj->fj", w, u, quad.shape))
    grad = field.gradient(pts, mesh.t)
    nu = quad.normal.reshape(-1, 3)
    grad -= np.einsum("ni,ni->n", grad, nu)[:, None] * nu
    grad = grad.reshape(nf, nq, 3)
    # surface gradient of chi_j^l = gradient_map @ d lambda_j / d xi
    basis_grad = np.einsum("fqik,jk->fqji", quad.gradient_map, SHAPE_GRADIENTS)
    a_load = _load(mesh, np.einsum("fq,fqi,fqji->fj", w, grad, basis_grad))
    return m_load, a_load


def load_vector(mesh, field, order=4, quad=None):
    """m(f, chi_j^l) only."""
    quad = lifted_quadrature(mesh, order) if quad is None else quad
    nf, nq = quad.delta.shape
    f = field(quad.lifted.reshape(-1, 3), mesh.t).reshape(nf, nq)
    return _load(mesh, np.einsum("fq,fq,qj->fj", quad.weights * quad.delta, f, quad.shape))


def point_load(mesh, triangle, xi):
    """Vector e_j = chi_j(x_h) for the point with reference coords ``xi`` in ``triangle``."""
    e = np.zeros(mesh.n_vertices)
    lam = np.array([1.0 - xi[0] - xi[1], xi[0], xi[1]])
    np.add.at(e, mesh.triangles[triangle], lam)
    return e


def write_coo(form: SparseSymmetricForm, path):
    """Write the form as ``i j value`` lines."""
    coo = form.matrix.tocoo()
    with open(path, "w") as fh:
        fh.write(f"# {form.kind} {form.dimension}\n")
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i} {j} {v:.17g}\n")
