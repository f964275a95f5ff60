"""Self-checks of the kernels, quadratures and solvers against independent oracles.

Each suite returns a list of :class:`Check` records; nothing here prints.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from . import specfun
from .forward import ScatteringProblem, SolverOptions, mie_disk_reference
from .imaging import qm_convergence_rate, sphere_inner, verify_factorization, verify_greens_identity
from .media import Component, Medium, Shape, preset_medium
from .specfun import WaveContext
from .synth import build_circle, generate_data

SUITES = ("specfun", "greens", "funk_hecke", "qm_rate", "mie", "factorization", "reciprocity")


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    measured: float
    bound: float

    def line(self) -> str:
        return (f"{self.name}: {'PASS' if self.passed else 'FAIL'} "
                f"(measured={self.measured:.3e}, bound={self.bound:.3e})")


def _check(name, measured, bound, upper=True):
    measured = float(measured)
    return Check(name, measured <= bound if upper else measured >= bound, measured, float(bound))


def j_power_series(order: int, t: float, terms: int = 40) -> float:
    """sum_s (-1)^s (t/2)^(2s+order) / (s! (s+order)!)."""
    s = np.arange(terms)
    logs = (2 * s + order) * np.log(t / 2) - special.gammaln(s + 1) - special.gammaln(s + order + 1)
    return float(np.sum((-1.0) ** s * np.exp(logs)))


def y0_power_series(t: float, terms: int = 40) -> float:
    """Y0(t) = (2/pi)(ln(t/2) + gamma) J0(t) + (2/pi) sum_s (-1)^(s+1) H_s (t/2)^(2s) / (s!)^2."""
    s = np.arange(1, terms)
    harmonic = np.cumsum(1.0 / s)
    series = np.sum((-1.0) ** (s + 1) * harmonic * np.exp(2 * s * np.log(t / 2) - 2 * special.gammaln(s + 1)))
    return float(2 / np.pi * ((np.log(t / 2) + np.euler_gamma) * j_power_series(0, t, terms) + series))


def suite_specfun() -> list[Check]:
    out = []
    ts = np.array([0.1, 1.0, 24.0, 100.0])
    worst = 0.0
    for m in range(41):
        a = specfun.hankel1(-m, ts)
        b = (-1) ** m * specfun.hankel1(m, ts)
        worst = max(worst, np.max(np.abs(a - b) / np.abs(b)))
    out.append(_check("reflection H_{-m} = (-1)^m H_m", worst, 1e-14))
    t = np.linspace(0.5, 100, 400)
    worst = 0.0
    for m in range(0, 41):
        w = special.jv(m, t) * special.yvp(m, t) - special.jvp(m, t) * special.yv(m, t)
        worst = max(worst, np.max(np.abs(w / (2 / (np.pi * t)) - 1)))
    out.append(_check("Wronskian J Y' - J' Y = 2/(pi t)", worst, 1e-10))
    j01 = j_power_series(0, 1.0)
    out.append(_check("J0(1) vs power series", abs(specfun.bessel_j(0, 1.0) - j01) / abs(j01), 1e-12))
    h = specfun.hankel1(0, 24.0)
    asym = np.sqrt(2 / (np.pi * 24.0)) * np.exp(1j * (24.0 - np.pi / 4))
    out.append(_check("H0(24) vs large-argument asymptotic", abs(h - asym) / abs(h), 1e-2))
    env = max(np.max(np.sqrt(tt) * np.abs(specfun.bessel_j(0, tt)))
              for T in (50, 100, 200) for tt in [np.linspace(T, 2 * T, 4001)])
    out.append(_check("envelope sqrt(t)|J0(t)| on [T, 2T], T >= 50", env, 0.9))
    return out


def suite_greens(k=8.0, R=3.0, m=100, n_pairs=50, seed=0) -> list[Check]:
    """Boundary integral against 2i Im Phi for random interior pairs in B(0, 2.5)."""
    ctx = WaveContext(k)
    circle = build_circle(R, m)
    rng = np.random.default_rng(seed)
    r = 2.5 * np.sqrt(rng.uniform(size=(2, n_pairs)))
    a = rng.uniform(0, 2 * np.pi, size=(2, n_pairs))
    pts = np.stack([r * np.cos(a), r * np.sin(a)], axis=-1)
    err_stated, err_flipped = 0.0, 0.0
    for z, y in zip(pts[0], pts[1]):
        lhs, rhs = verify_greens_identity(z, y, circle, ctx)
        err_stated = max(err_stated, abs(lhs - rhs))
        err_flipped = max(err_flipped, abs(lhs + rhs))
    return [_check("greens: lhs = 2i Im Phi(z, y)", err_stated, 1e-8),
            _check("greens: lhs = -2i Im Phi(z, y)", err_flipped, 1e-8)]


def suite_funk_hecke(k=8.0, m=100, n_pairs=50, seed=1) -> list[Check]:
    ctx = WaveContext(k)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_pairs):
        x = rng.uniform(-2.5, 2.5, 2)
        d = rng.normal(size=2)
        d *= rng.uniform(0, 40 / k) / np.linalg.norm(d)
        z = x + d
        quad = sphere_inner(np.exp(-1j * k * _unit_circle(m) @ x)[:, None], z[None, :], k)[0]
        exact = specfun.herglotz_point(x, z, ctx)
        worst = max(worst, abs(quad - exact) / max(abs(exact), 1e-300))
    return [_check("Funk-Hecke trapezoid vs 2 pi J0", worst, 1e-10)]


def _unit_circle(m):
    a = 2 * np.pi * np.arange(m) / m
    return np.stack([np.cos(a), np.sin(a)], axis=1)


def suite_qm_rate(k=8.0, R=3.0, m=128) -> list[Check]:
    ctx = WaveContext(k)
    Ms = list(range(20, 41))
    tails = qm_convergence_rate(ctx, R, m, Ms)
    diffs = np.diff(tails)
    ratios = tails[1:] / tails[:-1]
    beyond = [r for M, r in zip(Ms[:-1], ratios) if M >= 29]
    band = np.exp(1j * np.multiply.outer(2 * np.pi * np.arange(m) / m, np.arange(-10, 11))) @ np.ones(21)
    band_tail = qm_convergence_rate(ctx, R, m, [10, 12, 15], probe=band)
    strict = float(diffs.max())
    return [Check("Q_M tail norms strictly decreasing (max successive diff)", strict < 0, strict, 0.0),
            _check("Q_M successive tail ratio for M >= 29", max(beyond), 0.75),
            _check("Q_M tail of band-limited probe (|l| <= 10)", band_tail.max(), 1e-13)]


def suite_mie(k=8.0, R=3.0, m=100, opts=SolverOptions()) -> list[Check]:
    ctx = WaveContext(k)
    circle = build_circle(R, m)
    medium = Medium([Component(Shape.disk((0.0, 0.0), 0.25), 0.3, np.zeros((2, 2)))])
    problem = ScatteringProblem(medium, ctx, opts)
    y = circle.nodes[0]
    inc, _ = problem.point_source(y)
    sol = problem.solve(inc)
    got = problem.cauchy_from_density(sol.density, circle)
    ref = mie_disk_reference(0.25, (0.0, 0.0), 0.3, ctx, y, circle)
    e_u = np.linalg.norm(got.us - ref.us) / np.linalg.norm(ref.us)
    e_d = np.linalg.norm(got.dnus - ref.dnus) / np.linalg.norm(ref.dnus)
    return [_check("Mie disk trace", e_u, 1e-2), _check("Mie disk normal derivative", e_d, 2e-2)]


def suite_factorization(k=8.0, R=3.0, m=100, opts=SolverOptions(), data=None) -> list[Check]:
    ctx = WaveContext(k)
    circle = build_circle(R, m)
    medium = preset_medium("one_scatterer", "Q1q1")
    problem = ScatteringProblem(medium, ctx, opts)
    if data is None:
        data = generate_data(medium, ctx, circle, opts, problem=problem)
    out = []
    for l in (0, 1, 5):
        g = np.exp(1j * l * circle.angles)
        lhs, rhs = verify_factorization(medium, ctx, circle, g, opts, data=data, problem=problem)
        out.append(_check(f"N g two-path agreement, g = exp({l}i theta)",
                          np.linalg.norm(lhs - rhs) / np.linalg.norm(lhs), 2e-2))
    return out


def reciprocity_error(Us: np.ndarray) -> float:
    return float(np.abs(Us - Us.T).max() / np.abs(Us).max())


def suite_reciprocity(k=8.0, R=3.0, m=100, opts=SolverOptions(), datasets=None) -> list[Check]:
    ctx = WaveContext(k)
    circle = build_circle(R, m)
    out = []
    for contrast in ("Q1q1", "Q2q2"):
        if datasets and contrast in datasets:
            data = datasets[contrast]
        else:
            data = generate_data(preset_medium("one_scatterer", contrast), ctx, circle, opts)
        out.append(_check(f"reciprocity {contrast}", reciprocity_error(data.Us), 1e-3))
    return out


def run_suite(name: str, **kw) -> list[Check]:
    try:
        fn = globals()[f"suite_{name}"]
    except KeyError:
        raise ValueError(f"unknown suite {name!r}; expected one of {SUITES}") from None
    return fn(**kw)
