"""Exact evolving surfaces and ambient space-time fields.

A surface is described by a level set ``phi(x, t)`` together with its flow
map and velocity. Points near the surface are related to it through the
closest-point lift ``x = x_l + d * nu(x_l)``, computed by Newton iteration.

All array arguments are batched: points have shape ``(n, 3)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._linalg import inv3
from .errors import DomainError, GeometryError, NumericError

FD_STEP = 1e-5


def _as_points(x):
    x = np.asarray(x, dtype=float)
    return x.reshape(-1, 3), x.ndim == 1


@dataclass(frozen=True)
class SurfacePointData:
    """Closest-point data for a batch of ambient points."""

    lifted_point: np.ndarray  # (n, 3) on the surface
    signed_distance: np.ndarray  # (n,), positive outside
    normal: np.ndarray  # (n, 3) outward unit normal at lifted_point
    weingarten: np.ndarray  # (n, 3, 3), annihilates the normal
    mean_curvature: np.ndarray  # (n,), trace of weingarten

    def __len__(self):
        return len(self.signed_distance)


class EvolvingSurface:
    """Closed surface Gamma(t) = {phi(., t) = 0} moved by a flow map.

    Subclasses provide the level set with its first two spatial derivatives,
    the flow map from Gamma(0) and the ambient velocity field.
    """

    name = "surface"
    t_final = 1.0
    reach = 0.2
    static = False

    # -- to be provided by subclasses ------------------------------------
    def level_set(self, x, t):
        raise NotImplementedError

    def level_set_gradient(self, x, t):
        raise NotImplementedError

    def level_set_hessian(self, x, t):
        raise NotImplementedError

    def _flow(self, p0, t):
        raise NotImplementedError

    def _velocity(self, x, t):
        raise NotImplementedError

    def velocity_jacobian(self, x, t):
        """``J[n, i, j] = d v_i / d x_j``; central differences by default."""
        x, _ = _as_points(x)
        jac = np.empty((len(x), 3, 3))
        for j in range(3):
            e = np.zeros(3)
            e[j] = FD_STEP
            jac[:, :, j] = (self._velocity(x + e, t) - self._velocity(x - e, t)) / (2 * FD_STEP)
        return jac

    # -- public operations -------------------------------------------------
    def check_time(self, t):
        if not (0.0 <= t <= self.t_final):
            raise DomainError(f"time {t} outside [0, {self.t_final}]")

    def evaluate_flow(self, p0, t):
        """Map points of Gamma(0) to Gamma(t)."""
        self.check_time(t)
        p, single = _as_points(p0)
        out = self._flow(p, t)
        return out[0] if single else out

    def velocity_at(self, x, t):
        self.check_time(t)
        p, single = _as_points(x)
        out = self._velocity(p, t)
        return out[0] if single else out

    def normal(self, x, t):
        g = self.level_set_gradient(x, t)
        return g / np.linalg.norm(g, axis=-1, keepdims=True)

    def mean_curvature(self, x, t):
        """H = div_Gamma nu at points on Gamma(t)."""
        x, _ = _as_points(x)
        g = self.level_set_gradient(x, t)
        gnorm = np.linalg.norm(g, axis=1)
        nu = g / gnorm[:, None]
        hess = self.level_set_hessian(x, t)
        return (np.trace(hess, axis1=1, axis2=2) - np.einsum("ni,nij,nj->n", nu, hess, nu)) / gnorm

    def surface_divergence_velocity(self, x, t):
        """div_Gamma v = div v - nu . (grad v) nu at points on Gamma(t)."""
        x, _ = _as_points(x)
        jac = self.velocity_jacobian(x, t)
        nu = self.normal(x, t)
        return np.trace(jac, axis1=1, axis2=2) - np.einsum("ni,nij,nj->n", nu, jac, nu)

    def _project(self, x, t, tol, max_iter):
        """Foot points of ``x``: Newton on ``p + s grad phi(p) = x, phi(p) = 0``."""
        p = x.copy()
        s = np.zeros(len(x))
        scale = max(1.0, float(np.abs(x).max(initial=0.0)))
        for _ in range(max_iter):
            g = self.level_set_gradient(p, t)
            r1 = p + s[:, None] * g - x
            r2 = self.level_set(p, t)
            res = np.maximum(np.abs(r1).max(axis=1), np.abs(r2))
            if res.max(initial=0.0) <= tol * scale:
                return p
            # Schur complement of [[I + s H, g], [g^T, 0]]
            binv = inv3(np.eye(3) + s[:, None, None] * self.level_set_hessian(p, t))
            b_r1 = np.einsum("nij,nj->ni", binv, r1)
            b_g = np.einsum("nij,nj->ni", binv, g)
            ds = (r2 - np.einsum("ni,ni->n", g, b_r1)) / np.einsum("ni,ni->n", g, b_g)
            p = p - b_r1 - ds[:, None] * b_g
            s = s + ds
        raise NumericError("closest-point Newton iteration did not converge")

    def closest_point(self, x, t, tol=1e-12, max_iter=50):
        """Lift ambient points onto Gamma(t).

        Returns foot point, signed distance (positive outside), outward
        normal, Weingarten map and mean curvature.
        """
        x, single = _as_points(x)
        p = self._project(x, t, tol, max_iter)
        g = self.level_set_gradient(p, t)
        gnorm = np.linalg.norm(g, axis=1)
        nu = g / gnorm[:, None]
        d = np.einsum("ni,ni->n", x - p, nu)
        if np.any(np.abs(d) > self.reach):
            raise GeometryError(f"point farther than reach {self.reach} from the surface")
        hess = self.level_set_hessian(p, t)
        h_nu = np.einsum("nij,nj->ni", hess, nu)
        nhn = np.einsum("ni,ni->n", nu, h_nu)
        # P H P without forming P
        weingarten = (
            hess
            - nu[:, :, None] * h_nu[:, None, :]
            - h_nu[:, :, None] * nu[:, None, :]
            + nhn[:, None, None] * nu[:, :, None] * nu[:, None, :]
        ) / gnorm[:, None, None]
        data = SurfacePointData(p, d, nu, weingarten, np.einsum("nii->n", weingarten))
        if single:
            return SurfacePointData(*(a[0] for a in (p, d, nu, weingarten, data.mean_curvature)))
        return data


class QuadricSurface(EvolvingSurface):
    """Level set sum_i c_i(t) x_i^2 - 1 with positive coefficients."""

    def coefficients(self, t):
        raise NotImplementedError

    def level_set(self, x, t):
        x, _ = _as_points(x)
        return x**2 @ self.coefficients(t) - 1.0

    def level_set_gradient(self, x, t):
        x, _ = _as_points(x)
        return 2.0 * x * self.coefficients(t)

    def level_set_hessian(self, x, t):
        x, _ = _as_points(x)
        return np.broadcast_to(np.diag(2.0 * self.coefficients(t)), (len(x), 3, 3))

    def _project(self, x, t, tol, max_iter):
        # p_i = x_i / (1 + 2 s c_i); Newton on the scalar s with phi(p(s)) = 0
        c = self.coefficients(t)
        s = (np.sqrt(x**2 @ c) - 1.0) / (2.0 * c.max())
        for _ in range(max_iter):
            q = 1.0 / (1.0 + 2.0 * s[:, None] * c)
            cx2 = c * x**2
            f = np.sum(cx2 * q**2, axis=1) - 1.0
            if np.abs(f).max(initial=0.0) <= tol:
                break
            s = s + f / np.sum(4.0 * c * cx2 * q**3, axis=1)
        else:
            raise NumericError("closest-point Newton iteration did not converge")
        return x / (1.0 + 2.0 * s[:, None] * c)


class UnitSphere(QuadricSurface):
    """Static unit sphere; level set |x|^2 - 1."""

    name = "sphere-static"
    static = True

    def coefficients(self, t):
        return np.ones(3)

    def _flow(self, p0, t):
        return p0.copy()

    def _velocity(self, x, t):
        return np.zeros_like(x)

    def velocity_jacobian(self, x, t):
        x, _ = _as_points(x)
        return np.zeros((len(x), 3, 3))


class OscillatingEllipsoid(QuadricSurface):
    """Unit sphere stretched along x: Gamma(t) = {x^2/a(t)^2 + y^2 + z^2 = 1}.

    ``a(t) = sqrt(1 + 0.25 sin(2 pi t))`` on ``[0, 1]``; the flow scales the
    x coordinate by ``a(t)``.
    """

    name = "ellipsoid"

    @staticmethod
    def semi_axis(t):
        return np.sqrt(1.0 + 0.25 * np.sin(2 * np.pi * t))

    @staticmethod
    def stretch_rate(t):
        """a'(t) / a(t)."""
        return np.pi * np.cos(2 * np.pi * t) / (4.0 + np.sin(2 * np.pi * t))

    def coefficients(self, t):
        return np.array([1.0 / self.semi_axis(t) ** 2, 1.0, 1.0])

    def _flow(self, p0, t):
        out = p0.copy()
        out[:, 0] *= self.semi_axis(t)
        return out

    def _velocity(self, x, t):
        out = np.zeros_like(x)
        out[:, 0] = self.stretch_rate(t) * x[:, 0]
        return out

    def velocity_jacobian(self, x, t):
        x, _ = _as_points(x)
        jac = np.zeros((len(x), 3, 3))
        jac[:, 0, 0] = self.stretch_rate(t)
        return jac


class Plane(EvolvingSurface):
    """The static plane z = 0; used for flat-mesh fixtures."""

    name = "plane"
    static = True
    reach = np.inf

    def level_set(self, x, t):
        x, _ = _as_points(x)
        return x[:, 2].copy()

    def level_set_gradient(self, x, t):
        x, _ = _as_points(x)
        g = np.zeros_like(x)
        g[:, 2] = 1.0
        return g

    def level_set_hessian(self, x, t):
        x, _ = _as_points(x)
        return np.zeros((len(x), 3, 3))

    def _flow(self, p0, t):
        return p0.copy()

    def _velocity(self, x, t):
        return np.zeros_like(x)

    def velocity_jacobian(self, x, t):
        x, _ = _as_points(x)
        return np.zeros((len(x), 3, 3))


class FrozenSurface(EvolvingSurface):
    """View of another surface with the velocity forced to zero."""

    def __init__(self, base: EvolvingSurface):
        self.base = base
        self.name = base.name + "-frozen"
        self.t_final = base.t_final
        self.reach = base.reach

    def level_set(self, x, t):
        return self.base.level_set(x, t)

    def level_set_gradient(self, x, t):
        return self.base.level_set_gradient(x, t)

    def level_set_hessian(self, x, t):
        return self.base.level_set_hessian(x, t)

    def _project(self, x, t, tol, max_iter):
        return self.base._project(x, t, tol, max_iter)

    def _flow(self, p0, t):
        return self.base._flow(p0, t)

    def _velocity(self, x, t):
        return np.zeros_like(x)

    def velocity_jacobian(self, x, t):
        x, _ = _as_points(x)
        return np.zeros((len(x), 3, 3))


# --------------------------------------------------------------------------
# space-time fields
# --------------------------------------------------------------------------

Fn = Callable[[np.ndarray, float], np.ndarray]


@dataclass(frozen=True)
class SpaceTimeField:
    """Ambient scalar field u(x, t) with optional closed-form derivatives.

    Missing derivatives fall back to central differences with step 1e-5.
    """

    value: Fn
    grad: Fn | None = None
    hess: Fn | None = None
    dt: Fn | None = None
    time_independent: bool = False

    def __call__(self, x, t):
        x, _ = _as_points(x)
        return np.broadcast_to(np.asarray(self.value(x, t), dtype=float), (len(x),)).copy()

    def gradient(self, x, t):
        x, _ = _as_points(x)
        if self.grad is not None:
            return np.broadcast_to(self.grad(x, t), x.shape).copy()
        out = np.empty_like(x)
        for j in range(3):
            e = np.zeros(3)
            e[j] = FD_STEP
            out[:, j] = (self(x + e, t) - self(x - e, t)) / (2 * FD_STEP)
        return out

    def hessian(self, x, t):
        x, _ = _as_points(x)
        if self.hess is not None:
            return np.broadcast_to(self.hess(x, t), (len(x), 3, 3)).copy()
        out = np.empty((len(x), 3, 3))
        for j in range(3):
            e = np.zeros(3)
            e[j] = FD_STEP
            out[:, :, j] = (self.gradient(x + e, t) - self.gradient(x - e, t)) / (2 * FD_STEP)
        return 0.5 * (out + out.transpose(0, 2, 1))

    def time_derivative(self, x, t):
        x, _ = _as_points(x)
        if self.time_independent:
            return np.zeros(len(x))
        if self.dt is not None:
            return np.broadcast_to(self.dt(x, t), (len(x),)).copy()
        return (self(x, t + FD_STEP) - self(x, t - FD_STEP)) / (2 * FD_STEP)


def constant_field(c=1.0):
    return SpaceTimeField(
        lambda x, t: np.full(len(x), float(c)),
        grad=lambda x, t: np.zeros_like(x),
        hess=lambda x, t: np.zeros((len(x), 3, 3)),
        time_independent=True,
    )


def coordinate_field(i):
    """u(x) = x_i."""

    def grad(x, t):
        g = np.zeros_like(x)
        g[:, i] = 1.0
        return g

    return SpaceTimeField(
        lambda x, t: x[:, i].copy(),
        grad=grad,
        hess=lambda x, t: np.zeros((len(x), 3, 3)),
        time_independent=True,
    )


def xy_decay(rate=6.0):
    """u(x, y, z, t) = x y exp(-rate t); rate 0 gives the stationary x y."""

    def value(x, t):
        return x[:, 0] * x[:, 1] * np.exp(-rate * t)

    def grad(x, t):
        g = np.zeros_like(x)
        g[:, 0] = x[:, 1]
        g[:, 1] = x[:, 0]
        return g * np.exp(-rate * t)

    def hess(x, t):
        h = np.zeros((len(x), 3, 3))
        h[:, 0, 1] = h[:, 1, 0] = np.exp(-rate * t)
        return h

    return SpaceTimeField(
        value, grad, hess, dt=lambda x, t: -rate * value(x, t), time_independent=(rate == 0)
    )


# --------------------------------------------------------------------------
# surface differential operators
# --------------------------------------------------------------------------


def surface_gradient(surface, field, x, t):
    """Tangential gradient P grad u at points on Gamma(t)."""
    nu = surface.normal(x, t)
    g = field.gradient(x, t)
    return g - np.einsum("ni,ni->n", g, nu)[:, None] * nu


def laplace_beltrami_ambient(surface, field, x, t):
    """Delta_Gamma u = Delta u - hess u(nu, nu) - H nu . grad u."""
    x, single = _as_points(x)
    nu = surface.normal(x, t)
    curv = surface.mean_curvature(x, t)
    hess = field.hessian(x, t)
    grad = field.gradient(x, t)
    out = (
        np.trace(hess, axis1=1, axis2=2)
        - np.einsum("ni,nij,nj->n", nu, hess, nu)
        - curv * np.einsum("ni,ni->n", nu, grad)
    )
    return out[0] if single else out


def material_derivative(surface, field, x, t):
    """du/dt + v . grad u along the exact flow."""
    x, _ = _as_points(x)
    return field.time_derivative(x, t) + np.einsum(
        "ni,ni->n", surface._velocity(x, t), field.gradient(x, t)
    )


def manufactured_rhs(surface, field, x, t):
    """Source term f making ``field`` solve the parabolic problem on ``surface``.

    f = mat_deriv u + u div_Gamma v - Delta_Gamma u
    """
    x, single = _as_points(x)
    out = (
        material_derivative(surface, field, x, t)
        + field(x, t) * surface.surface_divergence_velocity(x, t)
        - laplace_beltrami_ambient(surface, field, x, t)
    )
    return out[0] if single else out


def material_derivative_field(surface, field):
    """The ambient field du/dt + v . grad u with its spatial gradient.

    grad(mat_deriv u) = grad u_t + J^T grad u + hess(u) v, where grad u_t is
    differenced in time unless the field is stationary.
    """

    def grad(x, t):
        g = field.gradient(x, t)
        out = np.einsum("nji,nj->ni", surface.velocity_jacobian(x, t), g)
        out += np.einsum("nij,nj->ni", field.hessian(x, t), surface._velocity(x, t))
        if not field.time_independent:
            out += (field.gradient(x, t + FD_STEP) - field.gradient(x, t - FD_STEP)) / (2 * FD_STEP)
        return out

    return SpaceTimeField(lambda x, t: material_derivative(surface, field, x, t), grad=grad)


def rhs_field(surface, field):
    """The manufactured source as a SpaceTimeField (value only)."""
    return SpaceTimeField(lambda x, t: manufactured_rhs(surface, field, x, t))


SURFACES = {
    "sphere-static": UnitSphere,
    "ellipsoid": OscillatingEllipsoid,
    "plane": Plane,
}


def get_surface(name) -> EvolvingSurface:
    try:
        return SURFACES[name]()
    except KeyError:
        raise KeyError(f"unknown surface {name!r}; choose from {sorted(SURFACES)}") from None
