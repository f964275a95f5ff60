"""Experiment configuration files.

Line-oriented ``key = value`` text; ``#`` starts a comment. Top-level keys
set experiment parameters, and each ``[component]`` section adds one
scatterer component. Unknown keys are errors. Example::

    k = 8
    preset = two_scatterers
    contrast = Q3q3
    delta = 0.5
    seed = 7

    # or, instead of a preset (``preset = none`` with no components is the empty medium):
    [component]
    shape = disk
    center = 0 0
    radius = 0.25
    q = 0.3
    Q = 0 0 0 0
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .media import CONTRAST_PRESETS, Component, Medium, Shape, preset_medium
from .forward import SolverOptions


class ConfigError(ValueError):
    pass


FUNCTIONALS = ("ff", "cd", "cd_far")


@dataclass(frozen=True)
class ExperimentConfig:
    k: float = 8.0
    R: float = 3.0
    m: int = 100
    n: int = 256
    A: Optional[float] = None
    tol: float = 1e-8
    max_iter: int = 500
    preset: Optional[str] = "one_scatterer"
    contrast: str = "Q1q1"
    components: tuple = ()
    delta: float = 0.5
    seed: Optional[int] = None
    shared: bool = True
    functional: str = "ff"
    rho: float = 2.0
    M: int = 20
    region: tuple = (-2.0, 2.0, -2.0, 2.0)
    resolution: tuple = (128, 128)
    data: Optional[str] = None
    output: Optional[str] = None
    image: Optional[str] = None

    def __post_init__(self):
        if self.functional not in FUNCTIONALS:
            raise ConfigError(f"functional must be one of {FUNCTIONALS}")
        if self.contrast not in CONTRAST_PRESETS:
            raise ConfigError(f"unknown contrast {self.contrast!r}")
        if self.preset and self.components:
            raise ConfigError("give either a preset or explicit components, not both")

    def solver_options(self) -> SolverOptions:
        return SolverOptions(n=self.n, A=self.A, tol=self.tol, max_iter=self.max_iter)

    def medium(self) -> Medium:
        if self.preset:
            return preset_medium(self.preset, self.contrast)
        return Medium([_component(c) for c in self.components])


_CONVERT = {
    "k": float, "R": float, "m": int, "n": int, "A": float, "tol": float, "max_iter": int,
    "preset": lambda v: None if v.lower() in ("none", "empty") else v, "contrast": str, "delta": float, "seed": int, "functional": str,
    "rho": float, "M": int, "data": str, "output": str, "image": str,
}

_COMPONENT_KEYS = {"shape", "center", "radius", "half_widths", "semi_axes", "x_offset",
                   "y_center", "bend", "bend_offset", "a", "b", "q", "Q", "contrast", "name"}


def _floats(text, count=None, key=""):
    try:
        vals = tuple(float(v) for v in text.replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"{key}: expected numbers, got {text!r}") from None
    if count is not None and len(vals) != count:
        raise ConfigError(f"{key}: expected {count} numbers, got {len(vals)}")
    return vals


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _component(entries: dict) -> Component:
    kind = entries.get("shape")
    g = lambda key, count=None: _floats(entries[key], count, key)  # noqa: E731
    try:
        if kind == "disk":
            shape = Shape.disk(g("center", 2), g("radius", 1)[0])
        elif kind == "rectangle":
            shape = Shape.rectangle(g("center", 2), g("half_widths", 2))
        elif kind == "ellipse":
            shape = Shape.ellipse(g("center", 2), g("semi_axes", 2))
        elif kind == "kite":
            shape = Shape.kite(g("x_offset", 1)[0], g("y_center", 1)[0], g("radius", 1)[0],
                               g("bend", 1)[0], g("bend_offset", 1)[0] if "bend_offset" in entries else 0.0)
        elif kind == "peanut":
            shape = Shape.peanut(g("center", 2), g("a", 1)[0], g("b", 1)[0])
        else:
            raise ConfigError(f"unknown shape {kind!r}")
    except KeyError as err:
        raise ConfigError(f"component {kind!r} is missing {err.args[0]!r}") from None
    if "contrast" in entries:
        Q, q = CONTRAST_PRESETS[entries["contrast"]]
    else:
        q = _floats(entries.get("q", "0"), 1, "q")[0]
        Q = np.array(_floats(entries.get("Q", "0 0 0 0"), 4, "Q")).reshape(2, 2)
    return Component(shape, q, Q)


def parse_config(text: str) -> ExperimentConfig:
    top: dict = {}
    comps: list = []
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if line != "[component]":
                raise ConfigError(f"line {lineno}: unknown section {line}")
            current = {}
            comps.append(current)
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if current is not None:
            if key not in _COMPONENT_KEYS:
                raise ConfigError(f"line {lineno}: unknown component key {key!r}")
            current[key] = value
            continue
        try:
            top[key] = _convert(key, value)
        except ConfigError as err:
            raise ConfigError(f"line {lineno}: {err}") from None
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {value!r}") from None
    if comps and "preset" not in top:
        top["preset"] = None
    return ExperimentConfig(components=tuple(comps), **top)


def _convert(key, value):
    if key in _CONVERT:
        return _CONVERT[key](value)
    if key == "shared":
        return _bool(value)
    if key == "region":
        return _floats(value, 4, key)
    if key == "resolution":
        r = tuple(int(v) for v in value.split())
        if len(r) == 1:
            r = r * 2
        if len(r) != 2:
            raise ConfigError("resolution takes one or two integers")
        return r
    raise ConfigError(f"unknown key {key!r}")


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def override(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    """Replace the non-None keyword values."""
    kw = {k: v for k, v in kw.items() if v is not None}
    names = {f.name for f in fields(ExperimentConfig)}
    bad = set(kw) - names
    if bad:
        raise ConfigError(f"unknown override(s) {sorted(bad)}")
    return replace(cfg, **kw)
