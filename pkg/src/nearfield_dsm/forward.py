"""Lippmann-Schwinger forward solvers on a uniform grid.

The total field solves

    u = u_inc + V[k^2 q u + div(Q grad u)],   V[f](x) = int Phi(x - y) f(y) dy,

which covers the isotropic equation (Q = 0) and the divergence form of the
anisotropic one. Discretization:

* nodes are cell centers of an n x n grid over a square of half-width A;
* V is the midpoint rule with the singular cell replaced by the exact cell
  average of Phi, applied as a linear convolution through FFTs on a
  zero-padded 2n x 2n grid (the kernel is periodized over side 4A);
* div(Q grad u) is the weighted five-point operator with Q_xx, Q_yy sampled
  on edge midpoints and Q_xy at cell centers; it is the negative transpose of
  the edge gradient weighted by Q, so the discrete system is complex
  symmetric and synthesized data are exactly reciprocal up to the Krylov
  tolerance.

The unknown is the total field restricted to the support of the contrast
(plus the one-node halo reached by the difference stencil), and the system
is solved matrix-free with restarted GMRES.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
from scipy import fft as sfft
from scipy import special
from scipy.sparse.linalg import LinearOperator, gmres

from .media import Medium
from .specfun import (WaveContext, fundamental_gradient, fundamental_normal_derivative,
                      fundamental_solution)

logger = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Krylov iteration failed to reach the requested tolerance."""

    def __init__(self, message, residual=np.nan, source_index=None):
        super().__init__(message)
        self.residual = residual
        self.source_index = source_index


@dataclass(frozen=True)
class SolverOptions:
    """Forward-solver settings.

    ``A=None`` fits the computational square to the medium's bounding box
    (centered on it, three-cell margin); an explicit ``A`` uses the square
    ``center +- A`` with ``center`` defaulting to the origin.
    """

    n: int = 256
    A: Optional[float] = None
    center: Optional[tuple] = None
    tol: float = 1e-8
    max_iter: int = 500
    restart: int = 60

    def __post_init__(self):
        if self.n < 64 or self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two >= 64, got {self.n}")
        if not (0 < self.tol <= 1e-2):
            raise ValueError(f"tolerance must lie in (0, 1e-2], got {self.tol}")
        if self.A is not None and self.A <= 0:
            raise ValueError("half-width A must be positive")


@dataclass(frozen=True)
class Grid:
    """Cell-centered n x n grid over ``center +- half_width``; arrays use ij indexing."""

    center: tuple
    half_width: float
    n: int

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / self.n

    @cached_property
    def axes(self):
        off = -self.half_width + (np.arange(self.n) + 0.5) * self.h
        return self.center[0] + off, self.center[1] + off

    @cached_property
    def points(self) -> np.ndarray:
        x, y = self.axes
        X, Y = np.meshgrid(x, y, indexing="ij")
        return np.stack([X, Y], axis=-1)

    def contains_box(self, lo, hi, margin: float) -> bool:
        c = np.asarray(self.center)
        return bool(np.all(lo - margin >= c - self.half_width) and
                    np.all(hi + margin <= c + self.half_width))


@dataclass
class FieldGrid:
    """Complex samples of a field on a :class:`Grid`."""

    grid: Grid
    values: np.ndarray

    @property
    def A(self):
        return self.grid.half_width

    @property
    def n(self):
        return self.grid.n


@dataclass(frozen=True)
class CauchyPair:
    """Scattered field and its normal derivative at the nodes of a circle."""

    us: np.ndarray
    dnus: np.ndarray


def make_grid(medium: Medium, opts: SolverOptions) -> Grid:
    bounds = medium.bounds()
    n = opts.n
    if opts.A is None:
        if bounds is None:
            return Grid((0.0, 0.0), 1.0, n)
        lo, hi = bounds
        center = tuple(map(float, (lo + hi) / 2))
        half = float(np.max(hi - lo)) / 2
        A = max(half, 1e-3) / (1.0 - 6.0 / n)
        return Grid(center, A, n)
    center = tuple(map(float, opts.center)) if opts.center is not None else (0.0, 0.0)
    grid = Grid(center, float(opts.A), n)
    if bounds is not None and not grid.contains_box(*bounds, margin=2 * grid.h):
        raise ValueError("computational square must contain the medium with a 2h margin")
    return grid


def cell_average_phi(h: float, k: float, n_quad: int = 48) -> complex:
    """Integral of Phi over the square cell [-h/2, h/2]^2 centered at the source.

    Uses int_0^a r H0(kr) dr = a H1(ka)/k + 2i/(pi k^2) along rays, then
    Gauss-Legendre in the angle over one octant.
    """
    x, w = np.polynomial.legendre.leggauss(n_quad)
    theta = (x + 1.0) * np.pi / 8.0
    a = h / (2.0 * np.cos(theta))
    radial = a * special.hankel1(1, k * a) / k + 2j / (np.pi * k**2)
    return complex(8.0 * 0.25j * np.sum(w * radial) * np.pi / 8.0)


class VolumePotential:
    """Discrete convolution with Phi (and its gradient) on a fixed grid."""

    def __init__(self, grid: Grid, ctx: WaveContext):
        self.grid = grid
        self.ctx = ctx
        n, h, k = grid.n, grid.h, ctx.k
        idx = np.fft.fftfreq(2 * n, d=1.0 / (2 * n))
        DX, DY = np.meshgrid(idx * h, idx * h, indexing="ij")
        r = np.hypot(DX, DY)
        r[0, 0] = 1.0
        kern = 0.25j * special.hankel1(0, k * r) * h * h
        kern[0, 0] = cell_average_phi(h, k)
        gscale = -0.25j * k * special.hankel1(1, k * r) / r * h * h
        gscale[0, 0] = 0.0
        self._hat = sfft.fft2(kern)
        self._ghat = (sfft.fft2(gscale * DX), sfft.fft2(gscale * DY))

    def _conv(self, f, hat):
        # transforms skip the all-zero half of the padded array and the unused output half
        n = self.grid.n
        F = sfft.fft(sfft.fft(f, n=2 * n, axis=-1), n=2 * n, axis=-2)
        g = sfft.ifft(F * hat, axis=-2)[..., :n, :]
        return sfft.ifft(g, axis=-1)[..., :n]

    def apply(self, f: np.ndarray) -> np.ndarray:
        return self._conv(f, self._hat)

    def gradient(self, f: np.ndarray) -> np.ndarray:
        """grad V[f] on the grid, shape (2, n, n)."""
        return np.stack([self._conv(f, g) for g in self._ghat])


class ContrastOperator:
    """Discrete ``f = k^2 q u + div(Q grad u)`` for a medium on a grid."""

    def __init__(self, medium: Medium, grid: Grid, ctx: WaveContext):
        n, h = grid.n, grid.h
        x, y = grid.axes
        self.k2 = ctx.k**2
        q, _ = medium.sample(grid.points.reshape(-1, 2))
        self.q = q.reshape(n, n)
        # x-edges (i+1/2, j), y-edges (i, j+1/2), cells (i+1/2, j+1/2)
        xm, ym = (x[:-1] + x[1:]) / 2, (y[:-1] + y[1:]) / 2
        ex = np.stack(np.meshgrid(xm, y, indexing="ij"), axis=-1)
        ey = np.stack(np.meshgrid(x, ym, indexing="ij"), axis=-1)
        ec = np.stack(np.meshgrid(xm, ym, indexing="ij"), axis=-1)
        self.anisotropic = not medium.isotropic
        if self.anisotropic:
            self.qxx = medium.sample(ex.reshape(-1, 2))[1][:, 0, 0].reshape(n - 1, n)
            self.qyy = medium.sample(ey.reshape(-1, 2))[1][:, 1, 1].reshape(n, n - 1)
            self.qxy = medium.sample(ec.reshape(-1, 2))[1][:, 0, 1].reshape(n - 1, n - 1)
        self.h = h
        support = self.q != 0
        if self.anisotropic:
            for mask, axis in ((self.qxx != 0, 0), (self.qyy != 0, 1)):
                s = [slice(None)] * 2
                s[axis] = slice(0, n - 1)
                support[tuple(s)] |= mask
                s[axis] = slice(1, n)
                support[tuple(s)] |= mask
            c = self.qxy != 0
            support[:-1, :-1] |= c
            support[1:, :-1] |= c
            support[:-1, 1:] |= c
            support[1:, 1:] |= c
        self.support = support

    def apply(self, u: np.ndarray) -> np.ndarray:
        f = self.k2 * self.q * u
        if not self.anisotropic:
            return f
        h = self.h
        dx = np.diff(u, axis=-2) / h
        dy = np.diff(u, axis=-1) / h
        fx = self.qxx * dx
        fy = self.qyy * dy
        if np.any(self.qxy):
            # cell-centered gradients, coupled through Q_xy
            gxc = 0.5 * (dx[..., :, :-1] + dx[..., :, 1:])
            gyc = 0.5 * (dy[..., :-1, :] + dy[..., 1:, :])
            cx = self.qxy * gyc
            cy = self.qxy * gxc
            fx = fx.copy()
            fy = fy.copy()
            fx[..., :, :-1] += 0.5 * cx
            fx[..., :, 1:] += 0.5 * cx
            fy[..., :-1, :] += 0.5 * cy
            fy[..., 1:, :] += 0.5 * cy
        # div = -(edge gradient)^T
        div = np.zeros_like(f)
        div[..., :-1, :] += fx / h
        div[..., 1:, :] -= fx / h
        div[..., :, :-1] += fy / h
        div[..., :, 1:] -= fy / h
        return f + div


@dataclass
class Solution:
    """Output of one Lippmann-Schwinger solve."""

    u: FieldGrid
    density: np.ndarray
    residual: float
    iterations: int
    grad_u: Optional[np.ndarray] = None


class ScatteringProblem:
    """Precomputed discretization for a fixed (medium, k, grid).

    Immutable after construction; ``solve`` calls are independent.
    """

    def __init__(self, medium: Medium, ctx: WaveContext, opts: SolverOptions = SolverOptions(),
                 grid: Optional[Grid] = None):
        self.medium = medium
        self.ctx = ctx
        self.opts = opts
        self.grid = grid if grid is not None else make_grid(medium, opts)
        self.volume = VolumePotential(self.grid, ctx)
        self.contrast = ContrastOperator(medium, self.grid, ctx)
        self.support = self.contrast.support
        self.support_points = self.grid.points[self.support]
        self._trace_cache = {}

    @property
    def n_unknowns(self) -> int:
        return int(self.support.sum())

    def _matvec(self, x):
        n = self.grid.n
        U = np.zeros((n, n), dtype=complex)
        U[self.support] = x
        return x - self.volume.apply(self.contrast.apply(U))[self.support]

    def solve_density(self, incident_on_support: np.ndarray, source_index=None):
        """Solve for u on the support and return ``(u_S, density, residual, iterations)``."""
        b = np.asarray(incident_on_support, dtype=complex)
        N = self.n_unknowns
        n = self.grid.n
        if N == 0 or not np.any(b):
            return b.copy(), np.zeros((n, n), dtype=complex), 0.0, 0
        op = LinearOperator((N, N), matvec=self._matvec, dtype=complex)
        count = [0]

        def cb(_):
            count[0] += 1

        restart = min(self.opts.restart, self.opts.max_iter, N)
        x, info = gmres(op, b, rtol=self.opts.tol, atol=0.0, restart=restart,
                        maxiter=max(1, self.opts.max_iter // restart),
                        callback=cb, callback_type="pr_norm")
        res = float(np.linalg.norm(op.matvec(x) - b) / np.linalg.norm(b))
        if info != 0 and res > self.opts.tol:
            raise SolverError(f"GMRES stalled at relative residual {res:.3e} after "
                              f"{count[0]} iterations", residual=res, source_index=source_index)
        U = np.zeros((n, n), dtype=complex)
        U[self.support] = x
        return x, self.contrast.apply(U), res, count[0]

    def solve(self, incident, incident_grad=None) -> Solution:
        """Total field on the whole grid for a sampled incident field."""
        inc = incident.values if isinstance(incident, FieldGrid) else np.asarray(incident, complex)
        if inc.shape != (self.grid.n, self.grid.n):
            raise ValueError("incident field must be sampled on the solver grid")
        _, density, res, its = self.solve_density(inc[self.support])
        u = inc + self.volume.apply(density)
        grad = None
        if incident_grad is not None:
            grad = np.asarray(incident_grad, complex) + self.volume.gradient(density)
        return Solution(FieldGrid(self.grid, u), density, res, its, grad)

    def density_from_field(self, u: np.ndarray) -> np.ndarray:
        return self.contrast.apply(np.asarray(u, dtype=complex))

    def trace_kernels(self, circle):
        """Phi and d_nu Phi from the support nodes to the circle nodes (cached)."""
        key = (circle.R, circle.m)
        if key not in self._trace_cache:
            nodes = circle.nodes[:, None, :]
            pts = self.support_points[None, :, :]
            phi = fundamental_solution(nodes, pts, self.ctx)
            dphi = fundamental_normal_derivative(nodes, circle.normals[:, None, :], pts, self.ctx)
            w = self.grid.h**2
            self._trace_cache[key] = (phi * w, dphi * w)
        return self._trace_cache[key]

    def cauchy_from_density(self, density: np.ndarray, circle) -> CauchyPair:
        """Representation formula on the circle; ``density`` is (n, n) or (n, n, s)."""
        dist = circle.R - self.medium.max_radius()
        if self.n_unknowns and dist <= 2 * self.grid.h:
            raise ValueError(f"measurement circle within 2h of the scatterer (gap {dist:.3g})")
        if self.n_unknowns == 0:
            shape = (circle.m,) + np.shape(density)[2:]
            return CauchyPair(np.zeros(shape, complex), np.zeros(shape, complex))
        phi, dphi = self.trace_kernels(circle)
        f = density[self.support]
        return CauchyPair(phi @ f, dphi @ f)

    def point_source(self, y):
        """Incident Phi(., y) and its gradient on the full grid."""
        return point_source_field(self.grid, y, self.ctx)


def point_source_field(grid: Grid, y, ctx: WaveContext):
    """``(FieldGrid, gradient)`` of the point-source field Phi(., y) on a grid."""
    pts = grid.points
    vals = fundamental_solution(pts, np.asarray(y, float), ctx)
    grad = np.moveaxis(fundamental_gradient(pts, np.asarray(y, float), ctx), -1, 0)
    return FieldGrid(grid, vals), grad


def solve_isotropic(medium: Medium, ctx: WaveContext, incident: FieldGrid,
                    opts: SolverOptions = SolverOptions()) -> FieldGrid:
    """Total field for an isotropic medium; ``incident`` lives on ``make_grid(medium, opts)``."""
    if not medium.isotropic:
        raise ValueError("solve_isotropic requires Q = 0; use solve_anisotropic")
    problem = ScatteringProblem(medium, ctx, opts, grid=incident.grid)
    return problem.solve(incident).u


def solve_anisotropic(medium: Medium, ctx: WaveContext, incident: FieldGrid, incident_grad,
                      opts: SolverOptions = SolverOptions()):
    """Total field and its gradient ``(u, grad_u)``; ``grad_u`` has shape (2, n, n)."""
    problem = ScatteringProblem(medium, ctx, opts, grid=incident.grid)
    sol = problem.solve(incident, incident_grad)
    return sol.u, FieldGrid(incident.grid, sol.grad_u)


def evaluate_cauchy(medium: Medium, ctx: WaveContext, u: FieldGrid, circle) -> CauchyPair:
    """Scattered Cauchy data on a circle from a solved total field.

    The equivalent source ``k^2 q u + div(Q grad u)`` is rebuilt from ``u``
    with the solver's own difference operator, so no separate gradient input
    is needed in the anisotropic case.
    """
    problem = ScatteringProblem(medium, ctx, grid=u.grid)
    return problem.cauchy_from_density(problem.density_from_field(u.values), circle)


def mie_disk_reference(radius: float, center, q: float, ctx: WaveContext, y, circle,
                       max_order: int = 200, rel_tol: float = 1e-14,
                       fixed_order: Optional[int] = None) -> CauchyPair:
    """Scattered Cauchy data for a homogeneous disk under point-source incidence.

    Separation of variables about the disk center: the incident field
    (i/4) H0(k|x - y|) expands as (i/4) sum_m J_m(kr) H_m(k r_y) e^{im(t - t_y)}
    inside r < r_y, the interior field on J_m(k sqrt(1+q) r) and the scattered
    field on H_m(kr), matched in value and radial derivative at the rim.
    """
    if q <= -1:
        raise ValueError("q must exceed -1")
    k = ctx.k
    k1 = k * np.sqrt(1.0 + q)
    c = np.asarray(center, float)
    dy = np.asarray(y, float) - c
    ry, ty = np.hypot(*dy), np.arctan2(dy[1], dy[0])
    if ry <= radius:
        raise ValueError("source must lie outside the disk")
    d = circle.nodes - c
    r = np.hypot(d[:, 0], d[:, 1])
    t = np.arctan2(d[:, 1], d[:, 0])
    er = d / r[:, None]
    et = np.stack([-er[:, 1], er[:, 0]], axis=1)
    nr = np.sum(circle.normals * er, axis=1)
    nt = np.sum(circle.normals * et, axis=1)

    us = np.zeros(circle.m, complex)
    dnus = np.zeros(circle.m, complex)
    ka, k1a = k * radius, k1 * radius

    def mode(m):
        a_m = 0.25j * special.hankel1(m, k * ry) * np.exp(-1j * m * ty)
        num = k1 * special.jvp(m, k1a) * special.jv(m, ka) - k * special.jvp(m, ka) * special.jv(m, k1a)
        den = (k * special.h1vp(m, ka) * special.jv(m, k1a)
               - k1 * special.jvp(m, k1a) * special.hankel1(m, ka))
        b_m = a_m * num / den
        e = np.exp(1j * m * t)
        val = b_m * special.hankel1(m, k * r) * e
        dr = b_m * k * special.h1vp(m, k * r) * e
        dt = 1j * m * val / r
        return val, dr * nr + dt * nt

    if q == 0:
        return CauchyPair(us, dnus)
    top = fixed_order if fixed_order is not None else max_order
    for m in range(0, top + 1):
        for mm in ((0,) if m == 0 else (m, -m)):
            v, dv = mode(mm)
            us += v
            dnus += dv
        if fixed_order is None and m > 2:
            last = np.max(np.abs(v))
            if last < rel_tol * np.max(np.abs(us)):
                break
    else:
        if fixed_order is None:
            raise ArithmeticError(f"Mie series did not converge by order {max_order}")
    return CauchyPair(us, dnus)
