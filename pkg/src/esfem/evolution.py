"""Time integration of the matrix ODE d/dt(M(t) alpha) + A(t) alpha = F(t).

The forward problem is discretised by BDF-k applied to ``y = M alpha``, so
that with F = 0 the invariant ``1^T M alpha`` is preserved exactly. The
adjoint evolution ``M(s) d beta/ds = A(s) beta`` is integrated backward in
``s`` with the same BDF-k. Startup values come either from a user supplied
function of time (manufactured runs) or from a three-stage Radau IIA step.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import assemble_mass, assemble_stiffness, load_vector
from .errors import DivergenceError, DomainError
from .mesh import SurfaceMesh, advect_mesh, lift_points, lifted_quadrature
from .norms import norm_eval
from .operators import FeFunction, discrete_delta
from .quadrature import sampling_rule

_S6 = np.sqrt(6.0)
RADAU_C = np.array([(4 - _S6) / 10, (4 + _S6) / 10, 1.0])
RADAU_A = np.array(
    [
        [(88 - 7 * _S6) / 360, (296 - 169 * _S6) / 1800, (-2 + 3 * _S6) / 225],
        [(296 + 169 * _S6) / 1800, (88 + 7 * _S6) / 360, (-2 - 3 * _S6) / 225],
        [(16 - _S6) / 36, (16 + _S6) / 36, 1 / 9],
    ]
)


def bdf_coefficients(k):
    """delta_0..delta_k with sum_j delta_j y^{n-j} ~ tau y'(t_n)."""
    if not 1 <= k <= 6:
        raise ValueError("BDF order must be in 1..6")
    delta = np.zeros(k + 1)
    for ell in range(1, k + 1):
        for j in range(ell + 1):
            delta[j] += (-1) ** j * comb(ell, j) / ell
    return delta


def n_steps(t0, t_end, tau):
    return int(np.floor((t_end - t0) / tau + 1e-9))


class ODESystem:
    """M(t), A(t) and the load F(t) of an evolving mesh, cached per time."""

    def __init__(self, mesh0: SurfaceMesh, rhs=None, quad_order=4, check_mesh=False):
        self.mesh0 = mesh0
        self.rhs = rhs
        self.quad_order = quad_order
        self.check_mesh = check_mesh
        self._cache = {}
        self._points = {}

    def at(self, t):
        key = round(t, 14)
        hit = self._cache.get(key)
        if hit is None:
            mesh = advect_mesh(self.mesh0, t, check=self.check_mesh)
            hit = (mesh, assemble_mass(mesh).matrix, assemble_stiffness(mesh).matrix)
            if len(self._cache) > 8:
                self._cache.pop(next(iter(self._cache)))
            self._cache[key] = hit
        return hit

    def points(self, t):
        """Lifted points at time ``t`` used for the load.

        With the default degree-4 rule these are the corners plus the
        quadrature points, so error sampling can reuse the same lift.
        """
        key = round(t, 14)
        hit = self._points.get(key)
        if hit is None:
            mesh = self.at(t)[0]
            if self.quad_order == 4:
                hit = lift_points(mesh, *sampling_rule())
            else:
                hit = lifted_quadrature(mesh, self.quad_order)
            if len(self._points) > 4:
                self._points.pop(next(iter(self._points)))
            self._points[key] = hit
        return hit

    def load(self, t):
        if self.rhs is None:
            return None
        mesh = self.at(t)[0]
        return load_vector(mesh, self.rhs, quad=self.points(t))


def _solve(matrix, rhs):
    return spla.splu(sp.csc_matrix(matrix)).solve(rhs)


def _stage_matrix(diagonal, blocks):
    rows = [[blocks[i][j] + diagonal[i] if i == j else blocks[i][j] for j in range(3)]
            for i in range(3)]
    return sp.bmat(rows, format="csc")


def _radau_forward(system: ODESystem, t, tau, alpha0, y0):
    n = len(alpha0)
    times = t + RADAU_C * tau
    mats = [system.at(s) for s in times]
    big = _stage_matrix([m[1] for m in mats], [[RADAU_A[i, j] * tau * mats[j][2]
                                                for j in range(3)] for i in range(3)])
    rhs = np.concatenate([y0] * 3, axis=0)
    if system.rhs is not None:
        loads = [system.load(s) for s in times]
        for i in range(3):
            extra = sum(RADAU_A[i, j] * tau * loads[j] for j in range(3))
            rhs[i * n:(i + 1) * n] += extra if alpha0.ndim == 1 else extra[:, None]
    z = spla.splu(big).solve(rhs)
    return z[2 * n:]


def _radau_adjoint(system: ODESystem, s, tau, beta0):
    # reversed variable: M(s) beta' = -A(s) beta while s decreases
    n = len(beta0)
    times = s - RADAU_C * tau
    mats = [system.at(max(r, 0.0)) for r in times]
    big = _stage_matrix([m[1] for m in mats], [[RADAU_A[i, j] * tau * mats[i][2]
                                                for j in range(3)] for i in range(3)])
    rhs = np.concatenate([-(mats[i][2] @ beta0) for i in range(3)], axis=0)
    kk = spla.splu(big).solve(rhs)
    incr = sum(RADAU_A[2, j] * kk[j * n:(j + 1) * n] for j in range(3))
    return beta0 + tau * incr


@dataclass
class Trajectory:
    """Time grid with nodal coefficients per step (static connectivity)."""

    mesh0: SurfaceMesh
    times: np.ndarray
    coefficients: np.ndarray  # (steps + 1, N) or (steps + 1, N, P)
    conserved: np.ndarray  # 1^T M(t_n) alpha^n
    errors: dict = field(default_factory=dict)

    @property
    def tau(self):
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    def mesh(self, n) -> SurfaceMesh:
        return advect_mesh(self.mesh0, float(self.times[n]), check=False)

    def function(self, n, column=None) -> FeFunction:
        c = self.coefficients[n] if column is None else self.coefficients[n][:, column]
        return FeFunction(self.mesh(n), c)

    def to_csv(self, path):
        cols = ["step", "time", "min_coefficient", "max_coefficient", "conserved_integral"]
        names = sorted(self.errors)
        with open(path, "w") as fh:
            fh.write(",".join(cols + names) + "\n")
            for n, t in enumerate(self.times):
                c = self.coefficients[n]
                row = [str(n), f"{t:.10g}", f"{c.min():.12e}", f"{c.max():.12e}",
                       f"{np.ravel(self.conserved[n])[0]:.12e}"]
                row += [f"{self.errors[k][n]:.12e}" for k in names]
                fh.write(",".join(row) + "\n")


def bdf_solve(mesh0: SurfaceMesh, tau, k, t_end, rhs=None, initial=None, startup=None,
              t0=0.0, quad_order=4, callback=None, system=None) -> Trajectory:
    """Integrate the ESFEM ODE system with BDF-k from ``t0`` to ``t_end``.

    ``initial`` is a coefficient vector (or an (N, P) block of them) on the
    mesh at ``t0``. ``startup(t)`` may supply coefficients for steps
    1..k-1; otherwise they are computed with Radau IIA. ``callback(n, t,
    mesh, alpha)`` is invoked after every step, including step 0.
    """
    if tau <= 0:
        raise DomainError("time step must be positive")
    mesh0.surface.check_time(t_end)
    system = system or ODESystem(mesh0, rhs, quad_order)
    delta = bdf_coefficients(k)
    steps = n_steps(t0, t_end, tau)
    times = t0 + tau * np.arange(steps + 1)
    alpha = np.asarray(initial, dtype=float)
    coeffs = np.empty((steps + 1,) + alpha.shape)
    conserved = np.empty((steps + 1,) + alpha.shape[1:])
    history = []  # y^n = M(t_n) alpha^n, newest last

    def record(n, a):
        mesh, mass, _ = system.at(times[n])
        if not np.all(np.isfinite(a)):
            raise DivergenceError(n, times[n])
        coeffs[n] = a
        y = mass @ a
        conserved[n] = y.sum(axis=0)
        history.append(y)
        if len(history) > k:
            history.pop(0)
        if callback is not None:
            callback(n, times[n], mesh, a)

    record(0, alpha)
    for n in range(1, steps + 1):
        t = times[n]
        if n < k:
            if startup is not None:
                alpha = np.asarray(startup(t), dtype=float)
            else:
                alpha = _radau_forward(system, times[n - 1], tau, alpha, history[-1])
        else:
            _, mass, stiff = system.at(t)
            rhs_vec = -sum(delta[j] * history[-j] for j in range(1, k + 1))
            if system.rhs is not None:
                load = system.load(t)
                rhs_vec = rhs_vec + tau * (load if alpha.ndim == 1 else load[:, None])
            alpha = _solve(delta[0] * mass + tau * stiff, rhs_vec)
        record(n, alpha)
    return Trajectory(mesh0, times, coeffs, conserved)


def adjoint_solve(mesh0: SurfaceMesh, t, s, w, tau, k=4, system=None):
    """Coefficients of E*(t, s) w on the mesh at time ``s``.

    Integrates ``M(r) d beta/dr = A(r) beta`` backward from ``beta(t) = w``.
    """
    if not 0 <= s <= t:
        raise DomainError("adjoint requires 0 <= s <= t")
    mesh0.surface.check_time(t)
    beta = np.asarray(w.coefficients if isinstance(w, FeFunction) else w, dtype=float)
    steps = n_steps(s, t, tau)
    if steps == 0:
        return beta.copy()
    system = system or ODESystem(mesh0)
    delta = bdf_coefficients(k)
    times = t - tau * np.arange(steps + 1)
    history = [beta]
    for n in range(1, steps + 1):
        r = times[n]
        if n < k:
            beta = _radau_adjoint(system, times[n - 1], tau, beta)
        else:
            _, mass, stiff = system.at(r)
            past = sum(delta[j] * history[-j] for j in range(1, k + 1))
            beta = _solve(delta[0] * mass + tau * stiff, -(mass @ past))
        if not np.all(np.isfinite(beta)):
            raise DivergenceError(n, r)
        history.append(beta)
        if len(history) > k:
            history.pop(0)
    return beta


def nearest_vertex(mesh, x):
    return int(np.argmin(np.linalg.norm(mesh.vertices - np.asarray(x), axis=1)))


def weak_max_data(mesh0: SurfaceMesh, x, t, tau, k=4, n_probes=20, seed=0):
    """Diagnostics of the discrete weak maximum principle at time ``t``.

    Returns the L1(Gamma_h(0)) norm of E*(t, 0) delta_h^{t, x} and the
    largest ratio ||U_h(t)||_inf / ||U_h(0)||_inf over probe initial data
    (random +-1 nodal vectors and a nodal delta). ``x`` is snapped to the
    nearest vertex of the mesh at time ``t``.
    """
    system = ODESystem(mesh0)
    mesh_t = system.at(t)[0]
    j = nearest_vertex(mesh_t, x)
    tri = int(np.flatnonzero((mesh_t.triangles == j).any(axis=1))[0])
    local = int(np.flatnonzero(mesh_t.triangles[tri] == j)[0])
    xi = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])[local]
    delta_h = discrete_delta(mesh_t, triangle=tri, xi=xi)
    green0 = adjoint_solve(mesh0, t, 0.0, delta_h, tau, k, system=system)
    l1 = norm_eval(FeFunction(mesh0, green0), "L1", on="discrete")

    rng = np.random.default_rng(seed)
    probes = rng.choice([-1.0, 1.0], size=(mesh0.n_vertices, n_probes + 1))
    probes[:, -1] = 0.0
    probes[j, -1] = 1.0
    traj = bdf_solve(mesh0, tau, k, t, initial=probes, system=system)
    final = np.abs(traj.coefficients[-1]).max(axis=0)
    sup_ratio = float((final / np.abs(probes).max(axis=0)).max())
    return {"green_l1": l1, "sup_ratio": sup_ratio, "vertex": j}
