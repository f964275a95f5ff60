"""Scatterer geometry and piecewise-constant contrasts.

A :class:`Shape` is a closed curve given either parametrically (disk,
rectangle, kite, ellipse) or implicitly (peanut). Membership for parametric
shapes is a winding-number test against a polygonization; the peanut uses the
sign of its defining quartic. A :class:`Medium` is a list of disjoint
components, each carrying a scalar contrast ``q`` and a symmetric 2x2 matrix
contrast ``Q``; both vanish outside the components.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DEFAULT_VERTICES = 1024
SHAPE_KINDS = ("disk", "rectangle", "kite", "ellipse", "peanut")
VARIANTS = ("one_scatterer", "two_scatterers", "three_scatterers")


def _winding_number(vertices: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Winding number of a closed polygon around each point (Sunday's rule)."""
    px, py = points[:, 0], points[:, 1]
    wn = np.zeros(len(points), dtype=int)
    v0 = vertices
    v1 = np.roll(vertices, -1, axis=0)
    for (x0, y0), (x1, y1) in zip(v0, v1):
        cross = (x1 - x0) * (py - y0) - (px - x0) * (y1 - y0)
        up = (y0 <= py) & (y1 > py) & (cross > 0)
        down = (y0 > py) & (y1 <= py) & (cross < 0)
        wn += up.astype(int) - down.astype(int)
    return wn


@dataclass(frozen=True)
class Shape:
    """A closed scatterer boundary.

    ``params`` holds the variant's coefficients:

    - disk: ``center``, ``radius``
    - rectangle: ``center``, ``half_widths``
    - kite: ``x_offset``, ``y_center``, ``radius``, ``bend``, ``bend_offset``,
      describing ``x1 = x_offset + radius cos t - bend (bend_offset + radius sin t)^2``,
      ``x2 = y_center + radius sin t``
    - ellipse: ``center``, ``semi_axes``
    - peanut: ``center``, ``a``, ``b`` for the level set
      ``(X^2 + Y^2)^2 - a (X^2 - Y^2) = b`` in shifted coordinates
    """

    kind: str
    params: dict
    name: str = ""
    n_vertices: int = DEFAULT_VERTICES
    vertices: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in SHAPE_KINDS:
            raise ValueError(f"unknown shape kind {self.kind!r}")
        if self.n_vertices < 3:
            raise ValueError("polygonization needs at least 3 vertices")
        t = 2.0 * np.pi * np.arange(self.n_vertices) / self.n_vertices
        if self.kind == "rectangle":
            # keep the corners exact
            hx, hy = self.params["half_widths"]
            perim = 4.0 * (hx + hy)
            corners = np.cumsum([hy, 2 * hx, 2 * hy, 2 * hx]) / perim * 2.0 * np.pi
            t = np.unique(np.concatenate([t, corners]))
        object.__setattr__(self, "vertices", self.boundary(t))

    # constructors -------------------------------------------------------
    @classmethod
    def disk(cls, center, radius, **kw):
        return cls("disk", {"center": tuple(map(float, center)), "radius": float(radius)}, **kw)

    @classmethod
    def rectangle(cls, center, half_widths, **kw):
        return cls("rectangle", {"center": tuple(map(float, center)),
                                 "half_widths": tuple(map(float, half_widths))}, **kw)

    @classmethod
    def kite(cls, x_offset, y_center, radius, bend, bend_offset=0.0, **kw):
        return cls("kite", {"x_offset": float(x_offset), "y_center": float(y_center),
                            "radius": float(radius), "bend": float(bend),
                            "bend_offset": float(bend_offset)}, **kw)

    @classmethod
    def ellipse(cls, center, semi_axes, **kw):
        return cls("ellipse", {"center": tuple(map(float, center)),
                               "semi_axes": tuple(map(float, semi_axes))}, **kw)

    @classmethod
    def peanut(cls, center, a, b, **kw):
        return cls("peanut", {"center": tuple(map(float, center)), "a": float(a), "b": float(b)}, **kw)

    # geometry -----------------------------------------------------------
    def boundary(self, t) -> np.ndarray:
        """Boundary points for parameter values ``t`` in [0, 2 pi), shape (..., 2)."""
        t = np.asarray(t, dtype=float)
        p = self.params
        c, s = np.cos(t), np.sin(t)
        if self.kind == "disk":
            (cx, cy), r = p["center"], p["radius"]
            x, y = cx + r * c, cy + r * s
        elif self.kind == "ellipse":
            (cx, cy), (a, b) = p["center"], p["semi_axes"]
            x, y = cx + a * c, cy + b * s
        elif self.kind == "kite":
            y = p["y_center"] + p["radius"] * s
            x = p["x_offset"] + p["radius"] * c - p["bend"] * (p["bend_offset"] + p["radius"] * s) ** 2
        elif self.kind == "rectangle":
            # perimeter parametrization, counterclockwise from the right edge midpoint
            (cx, cy), (hx, hy) = p["center"], p["half_widths"]
            perim = 4.0 * (hx + hy)
            s_arc = (np.mod(t, 2 * np.pi) / (2 * np.pi) * perim + hy) % perim
            x = np.empty_like(t)
            y = np.empty_like(t)
            legs = [2 * hy, 2 * hx, 2 * hy, 2 * hx]
            starts = np.cumsum([0.0] + legs[:-1])
            for i, (st, ln) in enumerate(zip(starts, legs)):
                sel = (s_arc >= st) & (s_arc < st + ln)
                u = s_arc[sel] - st
                if i == 0:
                    x[sel], y[sel] = cx + hx, cy - hy + u
                elif i == 1:
                    x[sel], y[sel] = cx + hx - u, cy + hy
                elif i == 2:
                    x[sel], y[sel] = cx - hx, cy + hy - u
                else:
                    x[sel], y[sel] = cx - hx + u, cy - hy
        else:  # peanut, polar form of the quartic about its center
            (cx, cy), a, b = p["center"], p["a"], p["b"]
            c2 = np.cos(2 * t)
            r = np.sqrt(0.5 * (a * c2 + np.sqrt(a * a * c2 * c2 + 4.0 * b)))
            x, y = cx + r * c, cy + r * s
        return np.stack([x, y], axis=-1)

    def implicit(self, points) -> np.ndarray:
        """Peanut level-set function, negative inside."""
        if self.kind != "peanut":
            raise TypeError("implicit form is only defined for the peanut")
        pts = np.asarray(points, dtype=float)
        (cx, cy), a, b = self.params["center"], self.params["a"], self.params["b"]
        X2 = (pts[..., 0] - cx) ** 2
        Y2 = (pts[..., 1] - cy) ** 2
        return (X2 + Y2) ** 2 - a * (X2 - Y2) - b

    def contains(self, points) -> np.ndarray:
        """Membership of one point (returns bool) or an (N, 2) array."""
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if self.kind == "peanut":
            inside = self.implicit(pts) < 0
        else:
            lo, hi = self.bounds()
            inside = np.zeros(len(pts), dtype=bool)
            cand = np.all((pts >= lo) & (pts <= hi), axis=1)
            if cand.any():
                inside[cand] = _winding_number(self.vertices, pts[cand]) != 0
        return bool(inside[0]) if single else inside

    def bounds(self):
        """Axis-aligned bounding box ``(lo, hi)`` of the polygonization."""
        return self.vertices.min(axis=0), self.vertices.max(axis=0)


def contains(shape: Shape, p) -> bool:
    return shape.contains(p)


def preset_shapes(variant: str) -> list[Shape]:
    """Scatterer geometries of the three reconstruction examples.

    The kites bend about their own center line, ``(radius sin t)^2``; taking
    ``bend_offset=0.75`` instead reproduces a curve that reaches past the
    radius-3 measurement circle.
    """
    if variant == "one_scatterer":
        return [Shape.kite(-0.75, 0.75, 0.3, 1.84, name="kite")]
    if variant == "two_scatterers":
        return [Shape.disk((-1.0, -1.0), 0.25, name="disk"),
                Shape.rectangle((0.5, -0.5), (0.5, 0.25), name="rectangle")]
    if variant == "three_scatterers":
        return [Shape.kite(-0.75, 0.75, 0.2, 1.84, name="kite"),
                Shape.ellipse((1.0, -0.75), (0.25, 0.5), name="ellipse"),
                Shape.peanut((-0.75, -1.0), 0.32, 0.0154, name="peanut")]
    raise ValueError(f"unknown preset variant {variant!r}; expected one of {VARIANTS}")


def make_preset_shape(name: str, variant: str) -> Shape:
    """One named shape (``kite``, ``disk``, ...) of a preset variant."""
    for shape in preset_shapes(variant):
        if shape.name == name:
            return shape
    raise ValueError(f"variant {variant!r} has no shape named {name!r}")


CONTRAST_PRESETS = {
    "Q1q1": (np.zeros((2, 2)), 0.3),
    "Q2q2": (np.diag([0.3, 0.5]), 0.0),
    "Q3q3": (np.diag([0.3, 0.5]), 0.2),
}


@dataclass(frozen=True)
class Component:
    shape: Shape
    q: float
    Q: np.ndarray

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=float).reshape(2, 2)
        if not np.allclose(Q, Q.T):
            raise ValueError("matrix contrast Q must be symmetric")
        object.__setattr__(self, "Q", Q)


class Medium:
    """Union of disjoint scatterer components with constant contrasts.

    Raises ``ValueError`` if components overlap or if ``I + Q`` has an
    eigenvalue below ``q_min`` on some component.
    """

    def __init__(self, components: Sequence[Component], q_min: float = 1e-3):
        self.components = tuple(components)
        self.q_min = q_min
        for c in self.components:
            lam = np.linalg.eigvalsh(np.eye(2) + c.Q)
            if lam.min() < q_min:
                raise ValueError(f"I + Q not uniformly positive on {c.shape.name or c.shape.kind}: "
                                 f"min eigenvalue {lam.min():.3g}")
            if c.q <= -1:
                raise ValueError("scalar contrast must satisfy q > -1")
        for i, a in enumerate(self.components):
            for b in self.components[i + 1:]:
                if a.shape.contains(b.shape.vertices).any() or b.shape.contains(a.shape.vertices).any():
                    raise ValueError(f"components {a.shape.name!r} and {b.shape.name!r} overlap")

    @classmethod
    def empty(cls) -> "Medium":
        return cls([])

    @property
    def isotropic(self) -> bool:
        return all(not np.any(c.Q) for c in self.components)

    @property
    def is_empty(self) -> bool:
        return all(c.q == 0 and not np.any(c.Q) for c in self.components)

    def bounds(self):
        if not self.components:
            return None
        los, his = zip(*(c.shape.bounds() for c in self.components))
        return np.min(los, axis=0), np.max(his, axis=0)

    def boundary_points(self) -> np.ndarray:
        if not self.components:
            return np.empty((0, 2))
        return np.concatenate([c.shape.vertices for c in self.components])

    def max_radius(self) -> float:
        pts = self.boundary_points()
        return float(np.hypot(pts[:, 0], pts[:, 1]).max()) if len(pts) else 0.0

    def component_index(self, points) -> np.ndarray:
        """Index of the containing component for each point, -1 outside."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        idx = np.full(len(pts), -1)
        for i, c in enumerate(self.components):
            idx[c.shape.contains(pts) & (idx < 0)] = i
        return idx

    def sample(self, points):
        """Contrasts at an (N, 2) array of points: ``q`` (N,) and ``Q`` (N, 2, 2)."""
        idx = self.component_index(points)
        q = np.zeros(len(idx))
        Q = np.zeros((len(idx), 2, 2))
        for i, c in enumerate(self.components):
            sel = idx == i
            q[sel] = c.q
            Q[sel] = c.Q
        return q, Q

    def contrast_at(self, p):
        q, Q = self.sample(np.asarray(p, dtype=float)[None, :])
        return float(q[0]), Q[0]

    def dist_to_boundary(self, points) -> np.ndarray:
        """Distance from points to the union of polygonized boundaries."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.full(len(pts), np.inf)
        for c in self.components:
            v0 = c.shape.vertices
            v1 = np.roll(v0, -1, axis=0)
            e = v1 - v0
            ee = np.maximum(np.einsum("ij,ij->i", e, e), 1e-300)
            for chunk in np.array_split(np.arange(len(pts)), max(1, len(pts) // 2048)):
                d = pts[chunk, None, :] - v0[None]
                t = np.clip(np.einsum("pij,ij->pi", d, e) / ee, 0.0, 1.0)
                r = d - t[..., None] * e
                out[chunk] = np.minimum(out[chunk], np.sqrt((r**2).sum(-1)).min(axis=1))
        return out

    def dist_to_support(self, points) -> np.ndarray:
        """Distance to D: zero inside a component, boundary distance outside."""
        d = self.dist_to_boundary(points)
        d[self.component_index(points) >= 0] = 0.0
        return d


def contrast_at(medium: Medium, p):
    return medium.contrast_at(p)


def make_medium(shapes: Sequence[Shape], contrast: str) -> Medium:
    """Assign one of the named contrast pairs to every shape."""
    try:
        Q, q = CONTRAST_PRESETS[contrast]
    except KeyError:
        raise ValueError(f"unknown contrast preset {contrast!r}; expected one of "
                         f"{sorted(CONTRAST_PRESETS)}") from None
    return Medium([Component(s, q, Q) for s in shapes])


def preset_medium(variant: str, contrast: str = "Q1q1") -> Medium:
    return make_medium(preset_shapes(variant), contrast)
