"""Direct sampling indicators for near-field point-source data.

Two indicators are evaluated on a lattice of sampling points ``z``:

* far-field transform indicator
  ``I_FF(z) = |(Q_M N conj(Phi(., z)), exp(-ik z.yhat))_{L2(S^1)}|``,
  where ``N`` is the near-field operator assembled from the data matrix
  and ``Q_M`` the truncated Dirichlet-to-far-field map of the measurement
  circle;
* Cauchy-data indicator
  ``I_CD(z) = int_G |int_G d_nu conj(Phi(x,z)) u^s(x,y) - conj(Phi(x,z)) d_nu u^s(x,y) ds(x)|^rho ds(y)``
  and its variant ``I_CD^far`` that replaces ``d_nu u^s`` by ``ik u^s``.

Every integral is the uniform trapezoid rule on the circle (weight
``2 pi R / m``) or on the unit circle (weight ``2 pi / m``).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .forward import ScatteringProblem, SolverOptions
from .media import Medium
from .specfun import (WaveContext, fundamental_normal_derivative, fundamental_solution,
                      fundamental_solution_imag, hankel1)
from .synth import MeasurementCircle, NearFieldData

DEFAULT_REGION = (-2.0, 2.0, -2.0, 2.0)


def _prefactor(k: float) -> complex:
    return (1 - 1j) / (np.pi * np.sqrt(2 * k * np.pi))


def qm_kernel(theta, phi, ctx: WaveContext, R: float, M: int):
    """Truncated kernel K_M(theta, phi), summing orders -M..M (order 0 once)."""
    if R <= 0 or M < 0:
        raise ValueError("need R > 0 and M >= 0")
    orders = np.arange(-M, M + 1)
    inv_h = 1.0 / hankel1(orders, ctx.k * R)
    d = np.asarray(theta, float) - np.asarray(phi, float)
    phase = np.exp(1j * np.multiply.outer(d - np.pi / 2, orders))
    return _prefactor(ctx.k) * phase @ inv_h


@dataclass(frozen=True)
class FarFieldTransform:
    """Discrete Q_M: boundary samples h(phi_b) -> far-field samples v(theta_a)."""

    R: float
    k: float
    M: int
    m: int
    matrix: np.ndarray

    def __call__(self, h):
        return self.matrix @ h


def build_fft(ctx: WaveContext, R: float, M: int, m: int) -> FarFieldTransform:
    if m < 2 * M + 2:
        raise ValueError(f"m={m} nodes cannot resolve harmonics up to M={M}; need m >= {2 * M + 2}")
    ang = 2 * np.pi * np.arange(m) / m
    # circulant: K depends on theta_a - phi_b only
    first_col = qm_kernel(ang, 0.0, ctx, R, M)
    idx = (np.arange(m)[:, None] - np.arange(m)[None, :]) % m
    matrix = first_col[idx] * (2 * np.pi / m)
    matrix.setflags(write=False)
    return FarFieldTransform(float(R), float(ctx.k), int(M), int(m), matrix)


def default_probe(m: int) -> np.ndarray:
    """Samples of sum_l (1 + l^2)^(-1/2) e^{il phi} over the resolvable band."""
    ang = 2 * np.pi * np.arange(m) / m
    band = np.arange(-(m // 2) + 1, m // 2)
    return np.exp(1j * np.multiply.outer(ang, band)) @ (1 + band**2) ** -0.5


def qm_convergence_rate(ctx: WaveContext, R: float, m: int, M_list: Sequence[int],
                        probe: Optional[np.ndarray] = None) -> np.ndarray:
    """L2(0, 2 pi) norms of (Q_Mref - Q_M) h for each M, with Mref = max(M_list) + 20."""
    M_ref = max(M_list) + 20
    h = default_probe(m) if probe is None else np.asarray(probe, complex)
    ref = build_fft(ctx, R, M_ref, m)(h)
    out = []
    for M in M_list:
        diff = ref - build_fft(ctx, R, M, m)(h)
        out.append(np.sqrt(2 * np.pi / m * np.sum(np.abs(diff) ** 2)))
    return np.array(out)


def _as_points(z):
    z = np.asarray(z, float)
    return z, z.ndim == 1


def _check_data(data: NearFieldData, fft: Optional[FarFieldTransform] = None):
    if fft is not None and (fft.m != data.circle.m or not np.isclose(fft.R, data.circle.R)
                            or not np.isclose(fft.k, data.k)):
        raise ValueError("far-field transform does not match the data (m, R, k)")


def _check_sampling(points: np.ndarray, circle: MeasurementCircle):
    spacing = 2 * np.pi * circle.R / circle.m
    d = np.linalg.norm(points[:, None, :] - circle.nodes[None, :, :], axis=-1).min(axis=1)
    if np.any(d < spacing) or np.any(np.hypot(points[:, 0], points[:, 1]) >= circle.R):
        raise ValueError("sampling point on or too close to the measurement circle")


def sphere_inner(v: np.ndarray, z: np.ndarray, k: float) -> np.ndarray:
    """Trapezoid (v, exp(-ik z.yhat))_{L2(S^1)} for far-field samples ``v`` of shape (m, P)."""
    m = v.shape[0]
    ang = 2 * np.pi * np.arange(m) / m
    yhat = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    return np.sum(v * np.exp(1j * k * yhat @ z.T), axis=0) * (2 * np.pi / m)


def i_ff(z, data: NearFieldData, fft: FarFieldTransform, chunk: int = 4096):
    """Far-field transform indicator at one point (2,) or many points (P, 2)."""
    _check_data(data, fft)
    z, single = _as_points(z)
    pts = np.atleast_2d(z)
    _check_sampling(pts, data.circle)
    ctx = data.ctx
    out = np.empty(len(pts))
    for s in range(0, len(pts), chunk):
        p = pts[s:s + chunk]
        g = np.conj(fundamental_solution(data.circle.nodes[:, None, :], p[None, :, :], ctx))
        Ng = data.Us @ g * data.circle.weight
        out[s:s + chunk] = np.abs(sphere_inner(fft.matrix @ Ng, p, ctx.k))
    return float(out[0]) if single else out


def _cd_kernels(pts, circle: MeasurementCircle, ctx: WaveContext):
    nodes = circle.nodes[None, :, :]
    p = pts[:, None, :]
    phi = np.conj(fundamental_solution(nodes, p, ctx))
    dphi = np.conj(fundamental_normal_derivative(nodes, circle.normals[None, :, :], p, ctx))
    return phi, dphi


def i_cd(z, data: NearFieldData, rho: float = 2.0, chunk: int = 4096):
    """Cauchy-data indicator with exponent ``rho``."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    z, single = _as_points(z)
    pts = np.atleast_2d(z)
    _check_sampling(pts, data.circle)
    w = data.circle.weight
    out = np.empty(len(pts))
    for s in range(0, len(pts), chunk):
        phi, dphi = _cd_kernels(pts[s:s + chunk], data.circle, data.ctx)
        inner = (dphi @ data.Us - phi @ data.dUs) * w
        out[s:s + chunk] = np.sum(np.abs(inner) ** rho, axis=1) * w
    return float(out[0]) if single else out


def i_cd_far(z, data: NearFieldData, rho: float = 2.0, chunk: int = 4096):
    """Cauchy-data indicator with d_nu u^s replaced by ik u^s; uses ``Us`` only."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    z, single = _as_points(z)
    pts = np.atleast_2d(z)
    _check_sampling(pts, data.circle)
    w = data.circle.weight
    k = data.k
    out = np.empty(len(pts))
    for s in range(0, len(pts), chunk):
        phi, dphi = _cd_kernels(pts[s:s + chunk], data.circle, data.ctx)
        inner = ((dphi - 1j * k * phi) @ data.Us) * w
        out[s:s + chunk] = np.sum(np.abs(inner) ** rho, axis=1) * w
    return float(out[0]) if single else out


@dataclass
class IndicatorGrid:
    """Indicator values at cell centers; ``values[j, i]`` sits at ``(x[i], y[j])``."""

    region: tuple
    values: np.ndarray
    normalized: bool = False

    @property
    def resolution(self):
        ny, nx = self.values.shape
        return nx, ny

    @property
    def axes(self):
        return cell_centers(self.region, self.resolution)

    def points(self) -> np.ndarray:
        x, y = self.axes
        X, Y = np.meshgrid(x, y)
        return np.stack([X, Y], axis=-1)

    def normalize(self) -> "IndicatorGrid":
        vmax = float(self.values.max()) if self.values.size else 0.0
        vals = self.values / vmax if vmax > 0 else self.values.copy()
        return IndicatorGrid(self.region, vals, True)

    def argmax_point(self) -> np.ndarray:
        j, i = np.unravel_index(np.argmax(self.values), self.values.shape)
        x, y = self.axes
        return np.array([x[i], y[j]])

    def to_csv(self, path) -> None:
        x0, x1, y0, y1 = self.region
        nx, ny = self.resolution
        lines = [f"# region {x0:.17g} {x1:.17g} {y0:.17g} {y1:.17g}",
                 f"# resolution {nx} {ny}",
                 f"# normalized {int(self.normalized)}"]
        lines += [",".join(f"{v:.17g}" for v in row) for row in self.values]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path) -> "IndicatorGrid":
        lines = Path(path).read_text().splitlines()
        region = tuple(float(v) for v in lines[0].split()[2:6])
        nx, ny = (int(v) for v in lines[1].split()[2:4])
        normalized = lines[2].split()[2] == "1"
        vals = np.array([[float(v) for v in ln.split(",")] for ln in lines[3:3 + ny]])
        if vals.shape != (ny, nx):
            raise ValueError(f"expected {ny} rows of {nx} values, got {vals.shape}")
        return cls(region, vals, normalized)

    def to_pgm(self, path) -> None:
        """8-bit binary graymap, top row = largest y."""
        vmax = float(self.values.max()) if self.values.size else 0.0
        scaled = self.values / vmax if vmax > 0 else np.zeros_like(self.values)
        img = np.clip(np.rint(scaled * 255), 0, 255).astype(np.uint8)[::-1]
        nx, ny = self.resolution
        Path(path).write_bytes(f"P5\n{nx} {ny}\n255\n".encode() + img.tobytes())


def cell_centers(region, resolution):
    x0, x1, y0, y1 = region
    nx, ny = resolution
    x = x0 + (np.arange(nx) + 0.5) * (x1 - x0) / nx
    y = y0 + (np.arange(ny) + 0.5) * (y1 - y0) / ny
    return x, y


def scan(functional: Callable[[np.ndarray], np.ndarray], region=DEFAULT_REGION,
         resolution=128, normalize: bool = True) -> IndicatorGrid:
    """Evaluate a vectorized functional of (P, 2) points at lattice cell centers."""
    if np.isscalar(resolution):
        resolution = (int(resolution), int(resolution))
    if min(resolution) < 16:
        raise ValueError("resolution must be at least 16 per axis")
    x, y = cell_centers(region, resolution)
    X, Y = np.meshgrid(x, y)
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    vals = np.asarray(functional(pts), float).reshape(len(y), len(x))
    grid = IndicatorGrid(tuple(map(float, region)), vals, False)
    return grid.normalize() if normalize else grid


def verify_factorization(medium: Medium, ctx: WaveContext, circle: MeasurementCircle, g,
                         opts: SolverOptions = SolverOptions(), data: Optional[NearFieldData] = None,
                         problem: Optional[ScatteringProblem] = None):
    """Near-field operator two ways: ``(N g from the data, trace of w for f = S g)``.

    ``w`` solves the scattering problem with incident field ``S g``, the
    single-layer potential of ``g`` on the circle.
    """
    if not medium.isotropic:
        raise ValueError("factorization check is for isotropic media")
    problem = problem or ScatteringProblem(medium, ctx, opts)
    if data is None:
        from .synth import generate_data
        data = generate_data(medium, ctx, circle, opts, problem=problem)
    g = np.asarray(g, complex)
    w = circle.weight
    lhs = data.Us @ g * w
    if problem.n_unknowns == 0:
        return lhs, np.zeros(circle.m, complex)
    Sg = fundamental_solution(problem.support_points[:, None, :], circle.nodes[None], ctx) @ g * w
    _, density, _, _ = problem.solve_density(Sg)
    rhs = problem.cauchy_from_density(density, circle).us
    return lhs, rhs


def greens_boundary_integral(z, y, circle: MeasurementCircle, ctx: WaveContext) -> complex:
    """Trapezoid value of int_G d_nu conj(Phi(x,z)) Phi(x,y) - conj(Phi(x,z)) d_nu Phi(x,y) ds(x)."""
    x, nu = circle.nodes, circle.normals
    z = np.asarray(z, float)
    y = np.asarray(y, float)
    a = np.conj(fundamental_normal_derivative(x, nu, z, ctx)) * fundamental_solution(x, y, ctx)
    b = np.conj(fundamental_solution(x, z, ctx)) * fundamental_normal_derivative(x, nu, y, ctx)
    return complex(np.sum(a - b) * circle.weight)


def verify_greens_identity(z, y, circle: MeasurementCircle, ctx: WaveContext):
    """``(lhs, rhs)`` with lhs the boundary integral and rhs = 2i Im Phi(z, y)."""
    spacing = 2 * np.pi * circle.R / circle.m
    for p in (z, y):
        if circle.R - np.hypot(*np.asarray(p, float)) <= spacing:
            raise ValueError("points must lie strictly inside the circle, away from its nodes")
    lhs = greens_boundary_integral(z, y, circle, ctx)
    rhs = 2j * complex(fundamental_solution_imag(np.asarray(z, float), np.asarray(y, float), ctx))
    return lhs, rhs
