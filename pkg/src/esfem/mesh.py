"""Triangulated evolving surfaces.

Vertices of an evolving mesh ride the exact flow, ``a_j(t) = Phi(a_j(0), t)``,
while the connectivity stays fixed. The lift of a flat element onto the exact
surface is described pointwise by the 3x2 Jacobian ``K = Dp E`` of the map
from reference coordinates to the lifted point, where ``E`` holds the element
edge vectors and ``Dp = (I + d W)^{-1} P`` is the closest-point derivative.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra

from ._linalg import inv3, pinv_columns
from .errors import MeshError
from .geometry import EvolvingSurface, UnitSphere
from .quadrature import SHAPE_GRADIENTS, barycentric, triangle_rule

MIN_INRADIUS_RATIO = 0.1


def _readonly(a, dtype):
    a = np.array(a, dtype=dtype)
    a.flags.writeable = False
    return a


class SurfaceMesh:
    """Time-stamped triangulation Gamma_h(t) of an evolving surface."""

    def __init__(self, vertices, triangles, surface=None, t=0.0, reference_vertices=None, level=0):
        self.vertices = _readonly(vertices, float)
        self.triangles = _readonly(triangles, np.int64)
        self.reference_vertices = _readonly(
            vertices if reference_vertices is None else reference_vertices, float
        )
        self.surface = surface
        self.t = float(t)
        self.level = level

    def __repr__(self):
        return f"SurfaceMesh(level={self.level}, t={self.t:g}, N={self.n_vertices}, F={self.n_triangles})"

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @cached_property
    def edges(self):
        tri = self.triangles
        e = np.vstack([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    @cached_property
    def edge_vectors(self):
        """(F, 3, 2) array [a1 - a0, a2 - a0] per element."""
        v = self.vertices[self.triangles]
        return np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=2)

    @cached_property
    def areas(self):
        e = self.edge_vectors
        return 0.5 * np.linalg.norm(np.cross(e[:, :, 0], e[:, :, 1]), axis=1)

    @cached_property
    def element_normals(self):
        e = self.edge_vectors
        n = np.cross(e[:, :, 0], e[:, :, 1])
        return n / np.linalg.norm(n, axis=1, keepdims=True)

    @cached_property
    def diameters(self):
        v = self.vertices[self.triangles]
        lengths = np.linalg.norm(v - np.roll(v, -1, axis=1), axis=2)
        return lengths.max(axis=1)

    @property
    def h(self):
        return float(self.diameters.max())

    @cached_property
    def basis_gradients(self):
        """(F, 3, 3): row i is the tangential gradient of the P1 basis on local vertex i."""
        e = self.edge_vectors
        gram = np.einsum("fik,fil->fkl", e, e)
        dual = e @ np.linalg.inv(gram)  # columns are grad lambda_1, grad lambda_2
        return np.einsum("fik,jk->fji", dual, SHAPE_GRADIENTS)

    def euler_characteristic(self):
        return self.n_vertices - len(self.edges) + self.n_triangles

    def check_manifold(self):
        tri = self.triangles
        e = np.sort(np.vstack([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]]), axis=1)
        _, counts = np.unique(e, axis=0, return_counts=True)
        return bool(np.all(counts == 2))


# --------------------------------------------------------------------------
# generation and motion
# --------------------------------------------------------------------------

def _icosahedron():
    phi = (1 + 5**0.5) / 2
    v = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=float,
    )
    f = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ]
    )
    return v / np.linalg.norm(v, axis=1, keepdims=True), f


def _subdivide(v, f):
    edges = np.sort(np.vstack([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]]), axis=1)
    uniq, inv = np.unique(edges, axis=0, return_inverse=True)
    mid = 0.5 * (v[uniq[:, 0]] + v[uniq[:, 1]])
    mid /= np.linalg.norm(mid, axis=1, keepdims=True)
    nf = len(f)
    m01, m12, m20 = (len(v) + inv.reshape(3, nf)).reshape(3, nf)
    a, b, c = f.T
    new_f = np.vstack(
        [
            np.column_stack([a, m01, m20]),
            np.column_stack([b, m12, m01]),
            np.column_stack([c, m20, m12]),
            np.column_stack([m01, m12, m20]),
        ]
    )
    return np.vstack([v, mid]), new_f


def build_icosphere(level, surface: EvolvingSurface | None = None):
    """Icosahedron refined ``level`` times, projected onto Gamma(0)."""
    if not 0 <= level <= 8:
        raise ValueError("icosphere level must be in 0..8")
    surface = surface if surface is not None else UnitSphere()
    v, f = _icosahedron()
    for _ in range(level):
        v, f = _subdivide(v, f)
    v = surface.closest_point(v, 0.0).lifted_point
    return SurfaceMesh(v, f, surface=surface, t=0.0, level=level)


def advect_mesh(mesh0: SurfaceMesh, t, min_ratio=MIN_INRADIUS_RATIO, check=True):
    """Move the vertices of ``mesh0`` along the exact flow to time ``t``."""
    surface = mesh0.surface
    vertices = surface.evaluate_flow(mesh0.reference_vertices, t)
    mesh = SurfaceMesh(
        vertices, mesh0.triangles, surface=surface, t=t,
        reference_vertices=mesh0.reference_vertices, level=mesh0.level,
    )
    if check:
        report = admissibility_report(mesh)
        if report["min_inradius_ratio"] < min_ratio:
            raise MeshError(
                f"mesh not admissible at t={t}: inradius ratio {report['min_inradius_ratio']:.3g}"
            )
    return mesh


def admissibility_report(mesh: SurfaceMesh):
    """Mesh size, smallest inradius/h and the spread of element areas."""
    v = mesh.vertices[mesh.triangles]
    lengths = np.linalg.norm(v - np.roll(v, -1, axis=1), axis=2)
    area = mesh.areas
    if np.any(area <= 1e-14 * mesh.h**2):
        raise MeshError("degenerate (zero-area) triangle")
    inradius = 2.0 * area / lengths.sum(axis=1)
    h = mesh.h
    return {
        "h": h,
        "min_inradius_ratio": float(inradius.min() / h),
        "area_ratio": float(area.max() / area.min()),
    }


def graph_geodesic(mesh: SurfaceMesh, source):
    """Shortest edge-path distance from ``source`` to every vertex."""
    e = mesh.edges
    w = np.linalg.norm(mesh.vertices[e[:, 0]] - mesh.vertices[e[:, 1]], axis=1)
    n = mesh.n_vertices
    graph = sp.coo_matrix((w, (e[:, 0], e[:, 1])), shape=(n, n)).tocsr()
    return dijkstra(graph, directed=False, indices=source)


# --------------------------------------------------------------------------
# lifted points and quadrature
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LiftedPoints:
    """Per-element points with their lifts onto the exact surface.

    Arrays are indexed ``[element, point, ...]``. ``weights`` are flat
    surface-measure weights (zero for pure sampling sets); multiply by
    ``delta`` to integrate over the exact surface.
    """

    xi: np.ndarray  # (q, 2)
    shape: np.ndarray  # (q, 3) P1 values
    flat: np.ndarray  # (F, q, 3)
    weights: np.ndarray  # (F, q)
    lifted: np.ndarray  # (F, q, 3)
    signed_distance: np.ndarray  # (F, q)
    normal: np.ndarray  # (F, q, 3)
    weingarten: np.ndarray  # (F, q, 3, 3)
    jacobian: np.ndarray  # (F, q, 3, 2) reference -> lifted
    delta: np.ndarray  # (F, q) exact / discrete measure ratio
    gradient_map: np.ndarray  # (F, q, 3, 2) K (K^T K)^{-1}
    t: float


    def integrate(self, values):
        """Integral over the exact surface of pointwise values shaped (F, q)."""
        return float(np.sum(self.weights * self.delta * values))

    def lift_fe_gradient(self, mesh, coefficients):
        """Surface gradient of the lifted P1 function, shape (F, q, 3)."""
        c = np.asarray(coefficients)[mesh.triangles]
        dxi = c @ SHAPE_GRADIENTS  # (F, 2)
        return np.einsum("fqik,fk->fqi", self.gradient_map, dxi)

    def fe_values(self, mesh, coefficients):
        c = np.asarray(coefficients)[mesh.triangles]
        return c @ self.shape.T


def lift_points(mesh: SurfaceMesh, xi, weights=None):
    """Lift the reference points ``xi`` of every element onto Gamma(t)."""
    surface = mesh.surface
    xi = np.atleast_2d(xi)
    shape = barycentric(xi)
    v = mesh.vertices[mesh.triangles]
    flat = np.einsum("qj,fjd->fqd", shape, v)
    nf, nq = flat.shape[:2]
    data = surface.closest_point(flat.reshape(-1, 3), mesh.t)
    d = data.signed_distance
    nu = data.normal
    weing = data.weingarten
    # K = (I + d W)^{-1} P E, with P E formed without the projector
    e = np.broadcast_to(mesh.edge_vectors[:, None], (nf, nq, 3, 2)).reshape(-1, 3, 2)
    pe = e - nu[:, :, None] * np.einsum("ni,nij->nj", nu, e)[:, None, :]
    k = inv3(np.eye(3) + d[:, None, None] * weing) @ pe
    gmap, gram_k = pinv_columns(k)
    gram_e = np.repeat(4.0 * mesh.areas**2, nq)
    delta = np.sqrt(gram_k / gram_e)
    if weights is None:
        w = np.zeros((nf, nq))
    else:
        w = np.outer(mesh.areas, weights)
    return LiftedPoints(
        xi=xi,
        shape=shape,
        flat=flat,
        weights=w,
        lifted=data.lifted_point.reshape(nf, nq, 3),
        signed_distance=d.reshape(nf, nq),
        normal=nu.reshape(nf, nq, 3),
        weingarten=weing.reshape(nf, nq, 3, 3),
        jacobian=k.reshape(nf, nq, 3, 2),
        delta=delta.reshape(nf, nq),
        gradient_map=gmap.reshape(nf, nq, 3, 2),
        t=mesh.t,
    )


def lifted_quadrature(mesh: SurfaceMesh, order=4):
    """Quadrature of the given degree on every flat element, with lifts."""
    xi, w = triangle_rule(order)
    return lift_points(mesh, xi, w)
