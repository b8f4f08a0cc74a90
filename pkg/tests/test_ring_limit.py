"""Periodic (no-defect) branches: constraint roots, energies, emergences."""

import math

import numpy as np
import pytest
from scipy.optimize import brentq

from ringnlse import (RingConfig, SolutionSpec, constant_and_plane_wave_spectrum,
                      emergence_points, nlse_residual, norm_squared, solve_periodic,
                      trace)
from ringnlse.elliptic import complete_E, complete_K
from ringnlse.errors import BranchAbsent
from ringnlse.ring_limit import branch_exists, periodic_anchor_set

TWO_PI = 2 * math.pi
GRID = np.linspace(0.0, TWO_PI, 101)


def test_dn_at_emergence_energy():
    sol = solve_periodic("dn", 1, -math.pi)
    assert sol.m == pytest.approx(0.0, abs=1e-5)
    assert sol.E == pytest.approx(-0.5, abs=1e-9)


def test_sn_linear_limit():
    sol = solve_periodic("sn", 1, 1e-8)
    assert sol.m == pytest.approx(0.0, abs=1e-6)
    assert sol.E == pytest.approx(1.0, abs=1e-6)


def test_cn_against_independent_bisection():
    g = -5.0
    target = math.pi ** 2 * g

    def f(m):
        K, Em = complete_K(m), complete_E(m)
        return 8 * TWO_PI * K * ((1 - m) * K - Em) - target
    m_oracle = brentq(f, 1e-9, 1 - 1e-9, xtol=1e-14)
    sol = solve_periodic("cn", 1, g)
    assert sol.m == pytest.approx(m_oracle, abs=1e-10)
    K = complete_K(m_oracle)
    E_oracle = (4 / math.pi ** 2) * (1 - 2 * m_oracle) * K * K
    assert sol.E == pytest.approx(E_oracle, rel=1e-10)


def test_constraint_identity_roundtrip():
    for kind, g in (("sn", 3.0), ("cn", -4.0), ("dn", -6.0)):
        sol = solve_periodic(kind, 1, g)
        K, Em = complete_K(sol.m), complete_E(sol.m)
        if kind == "sn":
            back = 8 * TWO_PI * K * (K - Em)
        elif kind == "cn":
            back = 8 * TWO_PI * K * ((1 - sol.m) * K - Em)
        else:
            back = -2 * TWO_PI * K * Em
        assert back == pytest.approx(math.pi ** 2 * g, rel=1e-9)


def test_solutions_pass_residual_and_norm():
    for kind, g, j in (("sn", 5.0, 1), ("sn", 5.0, 2), ("cn", -5.0, 1),
                       ("cn", -5.0, 2), ("dn", -5.0, 1), ("dn", -13.0, 2)):
        sol = solve_periodic(kind, j, g)
        spec = sol.spec(x0=0.0)
        assert nlse_residual(spec, GRID) < 1e-8
        assert norm_squared(spec) == pytest.approx(1.0, abs=1e-8)
        tr = trace(spec)
        # periodic boundary values
        assert tr.phi0 == pytest.approx(tr.phiL, abs=1e-8)
        assert tr.dphi0 == pytest.approx(tr.dphiL, abs=1e-8)


def test_antiperiodic_half_winding():
    sol = solve_periodic("sn", 0.5, 2.0)
    spec = sol.spec(x0=0.0)
    assert nlse_residual(spec, GRID) < 1e-8
    tr = trace(spec)
    assert tr.phi0 == pytest.approx(-tr.phiL, abs=1e-8)
    assert tr.dphi0 == pytest.approx(-tr.dphiL, abs=1e-8)


def test_dn_existence_boundary():
    for j in (1, 2):
        edge = -math.pi * j * j
        assert branch_exists("dn", j, edge - 1e-6)
        assert not branch_exists("dn", j, edge + 1e-6)
    with pytest.raises(BranchAbsent):
        solve_periodic("dn", 1, -3.0)


def test_constant_and_plane_waves():
    assert constant_and_plane_wave_spectrum(1, -math.pi) == pytest.approx(-0.5)
    assert constant_and_plane_wave_spectrum(1, 0.0) == 0.0
    assert constant_and_plane_wave_spectrum(3, 5.0) == pytest.approx(5 / TWO_PI + 4)


def test_emergence_points():
    pts = emergence_points(2)
    assert pts[0] == (1, pytest.approx(-math.pi), pytest.approx(-0.5))
    assert pts[1] == (2, pytest.approx(-4 * math.pi), pytest.approx(-2.0))
    assert emergence_points(0) == []


def test_anchor_set_ordering():
    anchors = periodic_anchor_set(-5.0, 5)
    Es = [a.E for a in anchors]
    assert Es == sorted(Es)
    kinds = [a.kind for a in anchors]
    assert kinds[0] == "dn"          # nodeless branch sits lowest at g = -5
    assert "const" in kinds
    anchors_pos = periodic_anchor_set(5.0, 4)
    assert anchors_pos[0].kind == "const"
    assert anchors_pos[1].kind == "sn"
