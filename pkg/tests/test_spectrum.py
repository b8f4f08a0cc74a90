"""Engine tests: the three-equation solver, continuation, mapping, regions."""

import cmath
import math

import numpy as np
import pytest

from ringnlse import (DeltaBC, DeltaPrimeBC, RingConfig, SolutionSpec,
                      classify_regions, detect_bubble, map_surface_to_delta_prime,
                      newton_solve, nlse_residual, norm_squared, parity_check,
                      residual_system, solve_periodic, sweep, trace)
from ringnlse.boundary import residual_delta, residual_delta_prime
from ringnlse.errors import NoConvergence, NotFound
from ringnlse.linear_limit import linear_levels
from ringnlse.spectrum import (SolveProblem, continue_in_g, continue_point_in_g,
                               lift_from_linear, solve_with_switches)
from ringnlse.surface import CELL_OK

import oracles

TWO_PI = 2 * math.pi
GRID = np.linspace(0.0, TWO_PI, 101)


def test_residual_system_zero_at_anchor():
    sol = solve_periodic("sn", 1, 5.0)
    problem = SolveProblem("delta", 1.0, 0.0, 5.0, "sn")
    F = residual_system(problem, (sol.E, sol.m, 0.0))
    assert np.max(np.abs(F)) < 1e-8


def test_residual_system_detects_perturbation():
    sol = solve_periodic("sn", 1, 5.0)
    problem = SolveProblem("delta", 1.0, 0.0, 5.0, "sn")
    F = residual_system(problem, (sol.E + 0.1, sol.m, 0.0))
    assert np.max(np.abs(F)) > 1e-3


def test_residual_system_zero_on_linear_anchor():
    # g -> 0 limit sanity: tiny coupling reproduces the linear state
    bc = DeltaBC(1.3, 0.7)
    lin = linear_levels(bc, "delta", 1)[0]
    from ringnlse.spectrum import seed_from_linear
    kind, circle, z = seed_from_linear(lin, 1e-4, 1e-4)
    problem = SolveProblem("delta", 1.3, 0.7, 1e-4, kind, circle)
    sol = newton_solve(problem, z)
    assert sol.E == pytest.approx(lin.E, abs=1e-3)


def test_newton_converges_in_one_step_from_exact():
    p = solve_periodic("dn", 1, -5.0)
    problem = SolveProblem("delta", 1.0, 0.5, -5.0, "dn")
    # converge once, then re-solve from the answer
    first = newton_solve(problem, (p.E, p.m, math.pi))
    again = newton_solve(problem, (first.E, first.mm, first.x0))
    assert again.steps <= 1
    assert max(again.res) < 1e-10


def test_newton_neighbor_continuation():
    p = solve_periodic("cn", 1, -5.0)
    prob1 = SolveProblem("delta", 1.0, 0.5, -5.0, "cn")
    sol1 = newton_solve(prob1, (p.E, p.m, 0.05))
    prob2 = SolveProblem("delta", 1.0, 0.6, -5.0, "cn")
    sol2 = newton_solve(prob2, (sol1.E, sol1.mm, sol1.x0))
    assert abs(sol2.E - sol1.E) < 0.2
    assert max(sol2.res) < 1e-10


def test_newton_rejects_far_guess():
    problem = SolveProblem("delta", 1.7, 4.0, -5.0, "cn")
    with pytest.raises(NoConvergence):
        newton_solve(problem, (50.0, 0.5, 0.3), maxit=12)


def test_converged_cell_passes_independent_oracles():
    p = solve_periodic("cn", 1, -5.0)
    problem = SolveProblem("delta", 1.2, 0.8, -5.0, "cn")
    sol = newton_solve(problem, (p.E, p.m, 0.05))
    spec = sol.spec(-5.0)
    assert nlse_residual(spec, GRID) < 1e-6
    assert norm_squared(spec) == pytest.approx(1.0, abs=1e-8)
    tr = trace(spec)
    r1, r2 = residual_delta(DeltaBC(1.2, 0.8), tr)
    assert max(abs(r1), abs(r2)) < 1e-9
    phi_L, dphi_L = oracles.rk4_shoot(-5.0, sol.E, tr.phi0, tr.dphi0, TWO_PI)
    assert phi_L == pytest.approx(tr.phiL, abs=1e-6)
    assert dphi_L == pytest.approx(tr.dphiL, abs=1e-6)


def test_circle_branch_solve():
    # known circle-branch territory: g = 5, t = 1.7, v = 0.5 (entered from sn)
    sol, prob = lift_from_linear("delta", 1.0, 0.5, 5.0)
    state = (prob.kind, prob.circle, (sol.E, sol.mm, sol.x0))
    for t in (1.2, 1.4, 1.6, 1.7):
        problem = SolveProblem("delta", t, 0.5, 5.0, state[0], state[1])
        s, p = solve_with_switches(problem, state[2])
        state = (p.kind, p.circle, (s.E, s.mm, s.x0))
    assert state[1] is True  # unit-circle modulus chart
    spec = SolutionSpec(state[0], state[2][0], cmath.exp(1j * state[2][1]),
                        state[2][2], RingConfig(5.0))
    assert nlse_residual(spec, GRID) < 1e-6
    assert norm_squared(spec) == pytest.approx(1.0, abs=1e-8)


def test_continue_point_identity_and_ramp():
    p = solve_periodic("cn", 1, -5.0)
    prob = SolveProblem("delta", 1.0, 0.5, -5.0, "cn")
    sol = newton_solve(prob, (p.E, p.m, 0.05))
    same, _ = continue_point_in_g("delta", 1.0, 0.5, -5.0, -5.0, "cn", False,
                                  (sol.E, sol.mm, sol.x0))
    assert same.E == pytest.approx(sol.E, abs=1e-12)
    moved, prob2 = continue_point_in_g("delta", 1.0, 0.5, -5.0, -3.0, "cn", False,
                                       (sol.E, sol.mm, sol.x0), steps=8)
    assert max(moved.res) < 1e-10
    spec = moved.spec(-3.0)
    assert nlse_residual(spec, GRID) < 1e-6


def test_lift_to_positive_g_residuals():
    sol, prob = lift_from_linear("delta", 1.0, -1.0, 5.0)
    spec = sol.spec(5.0)
    assert nlse_residual(spec, GRID) < 1e-6
    tr = trace(spec)
    r1, r2 = residual_delta(DeltaBC(1.0, -1.0), tr)
    assert max(abs(r1), abs(r2)) < 1e-9


def test_detect_bubble_j1():
    g_star, E_star = detect_bubble((-3.3, -3.0), 1)
    assert g_star == pytest.approx(-math.pi, abs=1e-3)
    assert E_star == pytest.approx(-0.5, abs=1e-6)


def test_detect_bubble_not_found():
    with pytest.raises(NotFound):
        detect_bubble((-1.0, 0.0 - 1e-9), 1)


def test_parity_check_tags():
    p = solve_periodic("dn", 1, -5.0)
    prob = SolveProblem("delta", 1.0, -0.5, -5.0, "dn", parity="even")
    sol = newton_solve(prob, (p.E, p.m, 0.02))
    assert parity_check(sol.spec(-5.0), 1.0) == "even"
    assert parity_check(sol.spec(-5.0), 1.3) == "none"


SMALL_TS = np.linspace(0.5, 1.5, 5)
SMALL_VS = np.linspace(-1.0, 1.0, 5)


@pytest.fixture(scope="module")
def small_surface():
    return sweep(SMALL_TS, SMALL_VS, -5.0, "delta", levels=2)


def test_sweep_small_grid_converges(small_surface):
    total_ok = sum(int(np.sum(s.status == CELL_OK)) for s in small_surface.sheets)
    cells = len(SMALL_TS) * len(SMALL_VS)
    assert total_ok > 4 * cells * 0.7  # most sheet cells converge on this window


def test_sweep_small_grid_residuals(small_surface):
    g = small_surface.g
    for s in small_surface.sheets:
        for it, iv in s.converged_cells():
            assert s.res[it, iv, 0] < 1e-8
            assert s.res[it, iv, 1] < 1e-9
            assert s.res[it, iv, 2] < 1e-9


def test_sweep_anchor_matches_ring_limit(small_surface):
    it1 = int(np.argmin(np.abs(SMALL_TS - 1.0)))
    iv0 = int(np.argmin(np.abs(SMALL_VS)))
    dn = solve_periodic("dn", 1, -5.0)
    Es = [E for E, _ in small_surface.level_energies(it1, iv0)]
    assert any(abs(E - dn.E) < 1e-7 for E in Es)
    assert any(abs(E - (-5.0 / TWO_PI)) < 1e-7 for E in Es)


def test_sweep_level_continuity_dense_line():
    # a discontinuity beyond 10x the local difference scale flags a crossing;
    # checked on a dense v-line where the local scale is meaningful
    surf = sweep(np.array([0.9, 1.0, 1.1]), np.linspace(-1.0, 1.0, 21),
                 -5.0, "delta", levels=2)
    it = 1
    for s in surf.sheets:
        E = s.E
        ok = s.status == CELL_OK
        for iv in range(1, E.shape[1] - 1):
            if ok[it, iv - 1] and ok[it, iv] and ok[it, iv + 1]:
                d1 = abs(E[it, iv] - E[it, iv - 1])
                d2 = abs(E[it, iv + 1] - E[it, iv])
                local = max(min(d1, d2), 0.02)
                assert max(d1, d2) <= 10 * local


def test_g_zero_sweep_matches_linear_grid():
    from ringnlse import linear_spectrum_grid
    ts = np.linspace(0.6, 1.4, 3)
    vs = np.linspace(-1.0, 1.0, 3)
    surf = sweep(ts, vs, 0.0, "delta", levels=3)
    E_lin = linear_spectrum_grid(ts, vs, "delta", 3)
    view = surf.level_view(3)
    mask = np.isfinite(E_lin)
    assert np.allclose(view[mask], E_lin[mask], atol=1e-8)


def test_map_surface_to_delta_prime(small_surface):
    mapped = map_surface_to_delta_prime(small_surface)
    assert len(mapped.points) > 20
    for p in mapped.points[:50]:
        assert max(p.residuals) < 1e-9
    # re-solve a few image points directly in the delta-prime chart
    rng = np.random.default_rng(5)
    pts = [mapped.points[i] for i in rng.integers(0, len(mapped.points), 5)]
    for p in pts:
        circle = p.kind.endswith("*")
        kind = p.kind.rstrip("*")
        mm = math.atan2(p.m.imag, p.m.real) if circle else p.m.real
        problem = SolveProblem("delta_prime", p.t, p.v, small_surface.g, kind, circle)
        sol = newton_solve(problem, (p.E, mm, p.x0))
        assert sol.E == pytest.approx(p.E, abs=1e-7)


def test_classify_regions_small(small_surface):
    region = classify_regions(small_surface, level=1)
    tagged = region.tags[region.tags != ""]
    assert tagged.size > 0
    assert set(np.unique(tagged)) <= {"sn", "cn", "dn", "ns", "cs", "ds",
                                      "sn*", "ns*", "const", "lin"}
