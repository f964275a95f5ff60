"""Cylindrical special functions and the 2D Helmholtz fundamental solution.

Bessel and Hankel values come from ``scipy.special`` (AMOS/Cephes), wrapped
with the order cap and the singularity checks the rest of the package relies
on. All functions broadcast over array arguments.

    Phi(x, y)        = (i/4) H0(k|x - y|)
    d/dnu_x Phi(x,z) = -(ik/4) H1(k|x - z|) (x - z).nu / |x - z|
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

MAX_ORDER = 128


class SingularityError(ValueError):
    """Raised when a kernel is evaluated at its singular point."""


class CapabilityError(ValueError):
    """Raised when a request exceeds the configured evaluation range."""


@dataclass(frozen=True)
class WaveContext:
    """Wavenumber of the background medium."""

    k: float

    def __post_init__(self):
        if not (np.isfinite(self.k) and self.k > 0):
            raise ValueError(f"wavenumber must be positive, got {self.k!r}")


def _check_order(order, max_order):
    if np.any(np.abs(np.asarray(order)) > max_order):
        raise CapabilityError(f"Bessel order {order} exceeds maximum {max_order}")


def bessel_j(order, t, max_order: int = MAX_ORDER):
    """J_order(t) for integer order and t >= 0."""
    _check_order(order, max_order)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("bessel_j expects t >= 0")
    return special.jv(order, t)


def bessel_y(order, t, max_order: int = MAX_ORDER):
    """Y_order(t) for t > 0."""
    _check_order(order, max_order)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise SingularityError("Y_m(t) diverges at t = 0")
    return special.yv(order, t)


def hankel1(order, t, max_order: int = MAX_ORDER):
    """H^(1)_order(t) = J_order(t) + i Y_order(t) for t > 0.

    Negative orders follow H_{-m} = (-1)^m H_m exactly (the reflection is
    applied here rather than left to the library).
    """
    _check_order(order, max_order)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise SingularityError("H^(1)_m(t) diverges at t = 0")
    order = np.asarray(order)
    m = np.abs(order)
    sign = np.where((order < 0) & (m % 2 == 1), -1.0, 1.0)
    return sign * special.hankel1(m, t)


def _distance(x, y):
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    return d, np.hypot(d[..., 0], d[..., 1])


def fundamental_solution(x, y, ctx: WaveContext):
    """Outgoing fundamental solution (i/4) H0(k|x - y|); points on the last axis."""
    _, r = _distance(x, y)
    if np.any(r == 0):
        raise SingularityError("fundamental solution evaluated at x = y")
    return 0.25j * special.hankel1(0, ctx.k * r)


def fundamental_solution_imag(x, y, ctx: WaveContext):
    """Im Phi(x, y) = J0(k|x - y|)/4, continuous through x = y."""
    _, r = _distance(x, y)
    return 0.25 * special.j0(ctx.k * r)


def fundamental_normal_derivative(x, nu, z, ctx: WaveContext):
    """Derivative of Phi(., z) at x in the direction nu."""
    d, r = _distance(x, z)
    if np.any(r == 0):
        raise SingularityError("normal derivative evaluated at x = z")
    proj = np.sum(d * np.asarray(nu, dtype=float), axis=-1)
    return -0.25j * ctx.k * special.hankel1(1, ctx.k * r) * proj / r


def fundamental_gradient(x, z, ctx: WaveContext):
    """Gradient of Phi(., z) evaluated at x, shape (..., 2)."""
    d, r = _distance(x, z)
    if np.any(r == 0):
        raise SingularityError("gradient evaluated at x = z")
    scale = -0.25j * ctx.k * special.hankel1(1, ctx.k * r) / r
    return scale[..., None] * d


def herglotz_point(x, z, ctx: WaveContext):
    """Closed form 2 pi J0(k|x - z|) of the plane-wave superposition over S^1."""
    _, r = _distance(x, z)
    return 2.0 * np.pi * special.j0(ctx.k * r)
