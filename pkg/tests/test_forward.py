import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from nearfield_dsm.forward import (
    CauchyPair, ScatteringProblem, SolverError, SolverOptions, VolumePotential, cell_average_phi,
    evaluate_cauchy, make_grid, mie_disk_reference, point_source_field, solve_anisotropic,
    solve_isotropic,
)
from nearfield_dsm.media import Component, Medium, Shape, make_medium, preset_medium
from nearfield_dsm.specfun import WaveContext, fundamental_solution
from nearfield_dsm.synth import build_circle

CTX = WaveContext(8.0)
CIRCLE = build_circle(3.0, 100)
SMALL = SolverOptions(n=128)


def disk_medium(radius=0.25, q=0.3, Q=None, center=(0.0, 0.0)):
    return Medium([Component(Shape.disk(center, radius), q, np.zeros((2, 2)) if Q is None else Q)])


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


# --- options and grid ---------------------------------------------------

@pytest.mark.parametrize("kw", [dict(n=100), dict(n=32), dict(tol=0.0), dict(tol=0.1), dict(A=-1.0)])
def test_solver_options_validation(kw):
    with pytest.raises(ValueError):
        SolverOptions(**kw)


def test_explicit_square_must_contain_medium():
    with pytest.raises(ValueError):
        make_grid(preset_medium("one_scatterer"), SolverOptions(A=0.5))
    grid = make_grid(preset_medium("one_scatterer"), SolverOptions(A=2.2))
    assert grid.half_width == 2.2 and grid.h == pytest.approx(4.4 / 256)


def test_auto_grid_covers_medium_with_margin():
    medium = preset_medium("three_scatterers")
    grid = make_grid(medium, SolverOptions())
    assert grid.contains_box(*medium.bounds(), margin=2 * grid.h)


def test_cell_average_matches_brute_force():
    h, k = 0.05, 8.0
    # offset lattice avoids the origin; log singularity is integrable so the midpoint sum converges
    s = (np.arange(400) + 0.5) / 400 - 0.5
    X, Y = np.meshgrid(s * h, s * h)
    brute = np.mean(fundamental_solution(np.stack([X, Y], -1), np.zeros(2), WaveContext(k))) * h * h
    assert abs(cell_average_phi(h, k) - brute) / abs(brute) < 2e-3


def test_volume_potential_matches_direct_sum():
    medium = disk_medium()
    grid = make_grid(medium, SolverOptions(n=64))
    V = VolumePotential(grid, CTX)
    rng = np.random.default_rng(0)
    f = rng.normal(size=(64, 64)) + 1j * rng.normal(size=(64, 64))
    out = V.apply(f)
    pts = grid.points.reshape(-1, 2)
    for idx in [(0, 0), (10, 37), (63, 5)]:
        x = grid.points[idx]
        d = np.hypot(*(pts - x).T)
        mask = d > 0
        direct = np.sum(fundamental_solution(pts[mask], x, CTX) * f.reshape(-1)[mask]) * grid.h**2
        direct += cell_average_phi(grid.h, CTX.k) * f[idx]
        assert_allclose(out[idx], direct, rtol=1e-10)


# --- isotropic solves -----------------------------------------------------

def test_zero_contrast_returns_incident():
    medium = Medium([Component(Shape.disk((0, 0), 0.25), 0.0, np.zeros((2, 2)))])
    grid = make_grid(medium, SMALL)
    inc, _ = point_source_field(grid, (3.0, 0.0), CTX)
    u = solve_isotropic(medium, CTX, inc, SMALL)
    assert np.array_equal(u.values, inc.values)
    pair = evaluate_cauchy(medium, CTX, u, CIRCLE)
    assert not pair.us.any() and not pair.dnus.any()


def test_isotropic_solver_rejects_anisotropic_medium():
    medium = preset_medium("one_scatterer", "Q2q2")
    grid = make_grid(medium, SMALL)
    inc, _ = point_source_field(grid, (3.0, 0.0), CTX)
    with pytest.raises(ValueError):
        solve_isotropic(medium, CTX, inc, SMALL)


def test_born_approximation_at_weak_contrast():
    medium = disk_medium(q=0.3e-4)
    problem = ScatteringProblem(medium, CTX, SMALL)
    inc, _ = problem.point_source((3.0, 0.0))
    sol = problem.solve(inc)
    born = problem.volume.apply(problem.contrast.apply(inc.values))
    assert rel(sol.u.values - inc.values, born) < 1e-3


def test_linearity_in_the_source():
    medium = preset_medium("one_scatterer", "Q1q1")
    problem = ScatteringProblem(medium, CTX, SMALL)
    rng = np.random.default_rng(4)
    f = np.where(problem.support, rng.normal(size=(128, 128)) + 1j * rng.normal(size=(128, 128)), 0)
    alpha = 0.7 - 1.3j
    u1 = problem.solve(f).u.values
    u2 = problem.solve(alpha * f).u.values
    assert rel(u2, alpha * u1) < 1e-7


def test_solver_error_on_exhausted_iterations():
    opts = SolverOptions(n=64, tol=1e-12, max_iter=1, restart=1)
    problem = ScatteringProblem(preset_medium("one_scatterer", "Q1q1"), CTX, opts)
    inc, _ = problem.point_source((3.0, 0.0))
    with pytest.raises(SolverError) as info:
        problem.solve(inc)
    assert info.value.residual > 1e-12


def test_mie_agreement_trace_and_normal_derivative():
    medium = disk_medium()
    problem = ScatteringProblem(medium, CTX, SolverOptions())
    y = CIRCLE.nodes[0]
    inc, _ = problem.point_source(y)
    got = evaluate_cauchy(medium, CTX, problem.solve(inc).u, CIRCLE)
    ref = mie_disk_reference(0.25, (0, 0), 0.3, CTX, y, CIRCLE)
    assert rel(got.us, ref.us) < 1e-2
    assert rel(got.dnus, ref.dnus) < 2e-2


@pytest.mark.parametrize("variant", ["one_scatterer", "two_scatterers", "three_scatterers"])
def test_grid_refinement_reduces_trace_differences(variant):
    medium = preset_medium(variant, "Q1q1")
    y = CIRCLE.nodes[0]
    traces = []
    for n in (128, 256, 512):
        problem = ScatteringProblem(medium, CTX, SolverOptions(n=n))
        inc, _ = problem.point_source(y)
        traces.append(problem.cauchy_from_density(problem.solve(inc).density, CIRCLE).us)
    assert np.linalg.norm(traces[2] - traces[1]) < np.linalg.norm(traces[1] - traces[0])


def test_cauchy_gap_check():
    medium = disk_medium(radius=0.5)
    problem = ScatteringProblem(medium, CTX, SolverOptions(n=64))
    with pytest.raises(ValueError):
        problem.cauchy_from_density(np.zeros((64, 64), complex), build_circle(0.5 + problem.grid.h, 100))


def test_radiation_condition_on_large_circle():
    circle = build_circle(10.0, 100)
    for contrast in ("Q1q1", "Q3q3"):
        medium = make_medium([Shape.disk((0, 0), 0.25)], contrast)
        problem = ScatteringProblem(medium, CTX, SMALL)
        inc, _ = problem.point_source(circle.nodes[0])
        pair = problem.cauchy_from_density(problem.solve(inc).density, circle)
        assert rel(pair.dnus, 1j * CTX.k * pair.us) < 0.1


def test_reciprocity_of_two_solves():
    medium = preset_medium("one_scatterer", "Q2q2")
    problem = ScatteringProblem(medium, CTX, SMALL)
    i, j = 7, 61
    out = {}
    for a, b in ((i, j), (j, i)):
        inc, _ = problem.point_source(CIRCLE.nodes[b])
        out[(a, b)] = problem.cauchy_from_density(problem.solve(inc).density, CIRCLE).us[a]
    assert abs(out[(i, j)] - out[(j, i)]) / abs(out[(i, j)]) < 1e-3


# --- anisotropic solves ---------------------------------------------------

def test_anisotropic_with_zero_matrix_matches_isotropic():
    medium = disk_medium()
    grid = make_grid(medium, SMALL)
    inc, ginc = point_source_field(grid, (3.0, 0.0), CTX)
    u_iso = solve_isotropic(medium, CTX, inc, SMALL)
    u_an, _ = solve_anisotropic(medium, CTX, inc, ginc, SMALL)
    a = evaluate_cauchy(medium, CTX, u_iso, CIRCLE)
    b = evaluate_cauchy(medium, CTX, u_an, CIRCLE)
    assert rel(b.us, a.us) < 1e-8


@pytest.mark.parametrize("contrast", ["Q1q1", "Q3q3"])
def test_gradient_consistency_away_from_interface(contrast):
    medium = make_medium([Shape.disk((0, 0), 0.25)], contrast)
    opts = SolverOptions(n=128, A=0.6)
    grid = make_grid(medium, opts)
    inc, ginc = point_source_field(grid, (3.0, 0.0), CTX)
    u, grad = solve_anisotropic(medium, CTX, inc, ginc, opts)
    U, h = u.values, grid.h
    # sixth-order central differences on the grid samples
    c = np.array([-1, 9, -45, 0, 45, -9, 1]) / 60.0
    for axis in (0, 1):
        fd = sum(c[s] * np.roll(U, 3 - s, axis=axis) for s in range(7)) / h
        d = medium.dist_to_boundary(grid.points.reshape(-1, 2)).reshape(grid.n, grid.n)
        mask = d > 0.1
        edge = [slice(None)] * 2
        for cut in (slice(0, 4), slice(-4, None)):
            edge[axis] = cut
            mask[tuple(edge)] = False
        g = grad.values[axis]
        assert np.abs(fd - g)[mask].max() / np.abs(g[mask]).max() < 1e-4


# --- Mie oracle -------------------------------------------------------------

def test_mie_zero_contrast():
    pair = mie_disk_reference(0.25, (0, 0), 0.0, CTX, CIRCLE.nodes[0], CIRCLE)
    assert isinstance(pair, CauchyPair)
    assert not pair.us.any() and not pair.dnus.any()


def test_mie_truncation_self_consistency():
    y = CIRCLE.nodes[3]
    a = mie_disk_reference(0.25, (0.1, -0.2), 0.3, CTX, y, CIRCLE, fixed_order=60)
    b = mie_disk_reference(0.25, (0.1, -0.2), 0.3, CTX, y, CIRCLE, fixed_order=80)
    assert rel(a.us, b.us) < 1e-12 and rel(a.dnus, b.dnus) < 1e-12


@given(st.integers(0, 99))
@settings(max_examples=10, deadline=None)
def test_mie_rotation_equivariance(shift):
    base = mie_disk_reference(0.25, (0, 0), 0.3, CTX, CIRCLE.nodes[0], CIRCLE)
    rot = mie_disk_reference(0.25, (0, 0), 0.3, CTX, CIRCLE.nodes[shift], CIRCLE)
    assert_allclose(rot.us, np.roll(base.us, shift), rtol=1e-10, atol=1e-14 * np.abs(base.us).max())


def test_mie_source_inside_disk_rejected():
    with pytest.raises(ValueError):
        mie_disk_reference(0.25, (0, 0), 0.3, CTX, (0.1, 0.0), CIRCLE)
