"""Norms of finite element functions and of lifted errors.

Integral norms use lifted quadrature on the exact surface; maximum norms are
taken over the element corners plus six interior points per element.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import lift_points, lifted_quadrature
from .quadrature import barycentric, sample_points, triangle_rule

NORM_KINDS = ("L1", "L2", "H1", "Linf", "W1inf", "grad-L2", "grad-Linf", "weighted-L2", "weighted-H1")


@dataclass(frozen=True)
class WeightSpec:
    """Weight mu = |x - y|^2 + gamma h^2 |log h| or mu~ = (|x - y|^2 + h^2)^(1/2).

    Weighted norms integrate ``mu^(-alpha) |u|^2``.
    """

    anchor: np.ndarray
    h: float
    kind: str = "mu"  # or "mu_tilde"
    gamma: float = 1.0
    alpha: float = 0.0

    def __post_init__(self):
        if self.kind not in ("mu", "mu_tilde"):
            raise ValueError("weight kind must be 'mu' or 'mu_tilde'")
        if self.gamma <= 0 or self.h <= 0:
            raise ValueError("gamma and h must be positive")
        object.__setattr__(self, "anchor", np.asarray(self.anchor, dtype=float))

    @property
    def rho2(self):
        # |log h| vanishes at h = 1; coarse fixtures fall back to gamma h^2
        if self.h >= 1.0:
            return self.gamma * self.h**2
        return self.gamma * self.h**2 * abs(np.log(self.h))

    def __call__(self, x):
        r2 = np.sum((np.asarray(x) - self.anchor) ** 2, axis=-1)
        if self.kind == "mu":
            return r2 + self.rho2
        return np.sqrt(r2 + self.h**2)

    def factor(self, x):
        """Pointwise integrand factor mu^(-alpha)."""
        if self.alpha == 0:
            return np.ones(np.shape(x)[:-1])
        return self(x) ** (-self.alpha)


def _fe_parts(fe):
    if fe is None:
        return None, None
    return fe.mesh, fe.coefficients


def _exact_values(exact, pts, normals, t):
    u = exact(pts.reshape(-1, 3), t).reshape(pts.shape[:-1])
    g = exact.gradient(pts.reshape(-1, 3), t)
    nu = normals.reshape(-1, 3)
    g -= np.einsum("ni,ni->n", g, nu)[:, None] * nu
    return u, g.reshape(pts.shape)


def pointwise_error(fe=None, exact=None, mesh=None, points=None, order=None):
    """Values and surface gradients of ``exact - fe^l`` at lifted points.

    Returns ``(points, values, gradients)`` with arrays shaped (F, q[, 3]).
    Either argument may be omitted; the missing one counts as zero.
    """
    mesh = mesh if mesh is not None else fe.mesh
    if points is None:
        if order is None:
            points = lift_points(mesh, sample_points())
        else:
            points = lifted_quadrature(mesh, order)
    nf, nq = points.delta.shape
    val = np.zeros((nf, nq))
    grad = np.zeros((nf, nq, 3))
    if exact is not None:
        u, g = _exact_values(exact, points.lifted, points.normal, mesh.t)
        val += u
        grad += g
    if fe is not None:
        val -= points.fe_values(mesh, fe.coefficients)
        grad -= points.lift_fe_gradient(mesh, fe.coefficients)
    return points, val, grad


def _discrete_parts(fe, order, max_norm):
    mesh, c = _fe_parts(fe)
    xi, w = (sample_points(), None) if max_norm else triangle_rule(order)
    shape = barycentric(xi)
    v = mesh.vertices[mesh.triangles]
    pts = np.einsum("qj,fjd->fqd", shape, v)
    vals = c[mesh.triangles] @ shape.T
    grad = np.einsum("fjd,fj->fd", mesh.basis_gradients, c[mesh.triangles])
    grad = np.broadcast_to(grad[:, None, :], pts.shape)
    weights = None if w is None else np.outer(mesh.areas, w)
    return pts, vals, grad, weights


def norm_eval(fe=None, kind="L2", exact=None, weight: WeightSpec | None = None,
              mesh=None, order=6, on="exact"):
    """Norm of ``exact - fe^l`` (or of either alone).

    ``on="exact"`` integrates over Gamma(t) through the lift; ``on="discrete"``
    measures the finite element function itself on Gamma_h(t) (``exact`` must
    then be omitted). Weighted kinds need ``weight``; without it the weight
    is one.
    """
    if kind not in NORM_KINDS:
        raise ValueError(f"unknown norm kind {kind!r}")
    max_norm = kind in ("Linf", "W1inf", "grad-Linf")
    if on == "discrete":
        if exact is not None:
            raise ValueError("discrete norms take a finite element function only")
        pts, val, grad, weights = _discrete_parts(fe, order, max_norm)
    else:
        points, val, grad = pointwise_error(
            fe, exact, mesh=mesh, order=None if max_norm else order
        )
        pts = points.lifted
        weights = None if max_norm else points.weights * points.delta

    gnorm = np.linalg.norm(grad, axis=-1)
    if kind == "Linf":
        return float(np.abs(val).max())
    if kind == "grad-Linf":
        return float(gnorm.max())
    if kind == "W1inf":
        return float(np.abs(val).max() + gnorm.max())
    factor = weight.factor(pts) if weight is not None else 1.0
    if kind == "L1":
        return float(np.sum(weights * factor * np.abs(val)))
    if kind == "grad-L2":
        return float(np.sqrt(np.sum(weights * factor * gnorm**2)))
    sq = np.sum(weights * factor * val**2)
    if kind in ("H1", "weighted-H1"):
        sq += np.sum(weights * factor * gnorm**2)
    return float(np.sqrt(sq))


def gradient_ratio(fe):
    """Range of |grad_Gamma eta^l| / |grad_Gamma_h eta| over sample points."""
    mesh = fe.mesh
    points = lift_points(mesh, sample_points())
    lifted = np.linalg.norm(points.lift_fe_gradient(mesh, fe.coefficients), axis=-1)
    flat = np.linalg.norm(
        np.einsum("fjd,fj->fd", mesh.basis_gradients, fe.coefficients[mesh.triangles]), axis=-1
    )
    mask = flat > 1e-12 * flat.max()
    ratio = lifted[mask] / flat[mask][:, None]
    return float(ratio.min()), float(ratio.max())


def fe_gradient_flat(fe):
    """Per-element gradient on Gamma_h, shape (F, 3)."""
    mesh = fe.mesh
    c = fe.coefficients[mesh.triangles]
    return np.einsum("fjd,fj->fd", mesh.basis_gradients, c)


__all__ = [
    "NORM_KINDS",
    "WeightSpec",
    "fe_gradient_flat",
    "gradient_ratio",
    "norm_eval",
    "pointwise_error",
]
