"""Measurement circle, near-field data synthesis, noise, and ``nfd 1`` files.

File grammar (whitespace separated, one record per line)::

    nfd 1
    k R m delta seed shared
    i j Re(us) Im(us) Re(dnus) Im(dnus)      # m*m lines, row-major

``seed = -1`` marks clean data (no noise applied); ``shared`` is 0 or 1.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path
from typing import Optional

import numpy as np

from .forward import ScatteringProblem, SolverError, SolverOptions
from .media import Medium
from .specfun import WaveContext, fundamental_solution

logger = logging.getLogger(__name__)

NFD_VERSION = 1


class NFDParseError(ValueError):
    """Malformed ``nfd`` file; message carries the offending line number."""

    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


@dataclass(frozen=True)
class MeasurementCircle:
    """m equispaced nodes on the circle of radius R centered at the origin."""

    R: float
    m: int

    def __post_init__(self):
        if self.R <= 0:
            raise ValueError("circle radius must be positive")
        if self.m < 8:
            raise ValueError("need at least 8 nodes")

    @cached_property
    def angles(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.m) / self.m

    @cached_property
    def normals(self) -> np.ndarray:
        return np.stack([np.cos(self.angles), np.sin(self.angles)], axis=1)

    @cached_property
    def nodes(self) -> np.ndarray:
        return self.R * self.normals

    @property
    def weight(self) -> float:
        return 2.0 * np.pi * self.R / self.m


def build_circle(R: float, m: int) -> MeasurementCircle:
    return MeasurementCircle(float(R), int(m))


@dataclass(frozen=True)
class Noise:
    delta: float
    seed: int
    shared: bool = True


@dataclass(frozen=True)
class NearFieldData:
    """Scattered Cauchy data ``Us[i, j] = u^s(x_i, y_j)`` and ``dUs`` on a circle."""

    circle: MeasurementCircle
    k: float
    Us: np.ndarray
    dUs: np.ndarray
    noise: Optional[Noise] = None

    def __post_init__(self):
        m = self.circle.m
        for name in ("Us", "dUs"):
            a = np.asarray(getattr(self, name), dtype=complex)
            if a.shape != (m, m):
                raise ValueError(f"{name} must be {m}x{m}, got {a.shape}")
            if not np.all(np.isfinite(a)):
                raise ValueError(f"{name} has non-finite entries")
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def ctx(self) -> WaveContext:
        return WaveContext(self.k)


def generate_data(medium: Medium, ctx: WaveContext, circle: MeasurementCircle,
                  opts: SolverOptions = SolverOptions(), problem: Optional[ScatteringProblem] = None,
                  report=None) -> NearFieldData:
    """Solve one forward problem per circle node used as a point source.

    Column ``j`` of the result holds the Cauchy data for the source at node
    ``j``. ``report(j, residual, iterations)`` is called after each solve.
    """
    if medium.components and medium.max_radius() >= circle.R:
        raise ValueError("scatterer must lie strictly inside the measurement circle")
    problem = problem or ScatteringProblem(medium, ctx, opts)
    m = circle.m
    Us = np.zeros((m, m), complex)
    dUs = np.zeros((m, m), complex)
    if problem.n_unknowns:
        pts = problem.support_points
        phi_sy = fundamental_solution(pts[:, None, :], circle.nodes[None, :, :], ctx)
        densities = np.empty((problem.n_unknowns, m), complex)
        for j in range(m):
            try:
                _, dens, res, its = problem.solve_density(phi_sy[:, j], source_index=j)
            except SolverError as err:
                err.source_index = j
                raise SolverError(f"source {j}: {err}", err.residual, j) from err
            densities[:, j] = dens[problem.support]
            if report is not None:
                report(j, res, its)
            logger.debug("source %d: residual %.2e after %d iterations", j, res, its)
        phi, dphi = problem.trace_kernels(circle)
        gap = circle.R - medium.max_radius()
        if gap <= 2 * problem.grid.h:
            raise ValueError(f"measurement circle within 2h of the scatterer (gap {gap:.3g})")
        Us = phi @ densities
        dUs = dphi @ densities
    return NearFieldData(circle, float(ctx.k), Us, dUs)


def noise_matrix(m: int, rng: np.random.Generator) -> np.ndarray:
    """Complex matrix with uniform [-1, 1] parts, scaled to unit Frobenius norm."""
    E = rng.uniform(-1.0, 1.0, (m, m)) + 1j * rng.uniform(-1.0, 1.0, (m, m))
    return E / np.linalg.norm(E)


def add_noise(data: NearFieldData, delta: float, seed: int, shared: bool = True) -> NearFieldData:
    """Multiplicative noise ``u <- u (1 + delta E)`` with ``||E||_F = 1``."""
    if delta < 0:
        raise ValueError("noise level must be non-negative")
    noise = Noise(float(delta), int(seed), bool(shared))
    if delta == 0:
        return replace(data, noise=noise)
    rng = np.random.default_rng(seed)
    E1 = noise_matrix(data.circle.m, rng)
    E2 = E1 if shared else noise_matrix(data.circle.m, rng)
    return replace(data, Us=data.Us * (1 + delta * E1), dUs=data.dUs * (1 + delta * E2), noise=noise)


def save_nfd(data: NearFieldData, path) -> None:
    noise = data.noise
    delta, seed, shared = (noise.delta, noise.seed, int(noise.shared)) if noise else (0.0, -1, 1)
    m = data.circle.m
    lines = [f"nfd {NFD_VERSION}",
             f"{data.k:.17g} {data.circle.R:.17g} {m} {delta:.17g} {seed} {shared}"]
    us, dus = data.Us, data.dUs
    for i in range(m):
        for j in range(m):
            a, b = us[i, j], dus[i, j]
            lines.append(f"{i} {j} {a.real:.17g} {a.imag:.17g} {b.real:.17g} {b.imag:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_nfd(path) -> NearFieldData:
    text = Path(path).read_text().splitlines()
    if not text or text[0].split()[:1] != ["nfd"]:
        raise NFDParseError("missing 'nfd <version>' header", 1)
    head = text[0].split()
    if len(head) != 2:
        raise NFDParseError("malformed version line", 1)
    if head[1] != str(NFD_VERSION):
        raise NFDParseError(f"unsupported nfd version {head[1]!r}", 1)
    if len(text) < 2:
        raise NFDParseError("missing parameter line", 2)
    fields = text[1].split()
    if len(fields) != 6:
        raise NFDParseError("parameter line needs 'k R m delta seed shared'", 2)
    try:
        k, R = float(fields[0]), float(fields[1])
        m, seed, shared = int(fields[2]), int(fields[4]), int(fields[5])
        delta = float(fields[3])
    except ValueError as err:
        raise NFDParseError(str(err), 2) from None
    if shared not in (0, 1) or m < 1 or not (np.isfinite(k) and np.isfinite(R) and np.isfinite(delta)):
        raise NFDParseError("invalid parameter values", 2)
    body = [ln for ln in text[2:]]
    while body and not body[-1].strip():
        body.pop()
    if len(body) != m * m:
        raise NFDParseError(f"dimension mismatch: header m={m} needs {m * m} rows, found {len(body)}",
                            2 + len(body))
    Us = np.empty((m, m), complex)
    dUs = np.empty((m, m), complex)
    for lineno, ln in enumerate(body, start=3):
        tok = ln.split()
        if len(tok) != 6:
            raise NFDParseError("expected 6 fields", lineno)
        try:
            i, j = int(tok[0]), int(tok[1])
            vals = [float(v) for v in tok[2:]]
        except ValueError as err:
            raise NFDParseError(str(err), lineno) from None
        if (i, j) != divmod(lineno - 3, m):
            raise NFDParseError(f"index ({i}, {j}) out of row-major order", lineno)
        if not all(np.isfinite(vals)):
            raise NFDParseError("non-finite entry", lineno)
        Us[i, j] = complex(vals[0], vals[1])
        dUs[i, j] = complex(vals[2], vals[3])
    noise = None if seed == -1 else Noise(delta, seed, bool(shared))
    return NearFieldData(build_circle(R, m), k, Us, dUs, noise)
