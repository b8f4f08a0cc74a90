"""Nonlinear spectrum engine: damped Newton on (E, m, x0) plus continuation.

The unknowns are energy, modulus (angle on the circle branch) and offset;
the equations are the unit norm and the two boundary residuals.  On the
|t| = 1 rows a parity residual (phi'(L/2) for even states, phi(L/2) for
odd) joins the system and the step is solved in the least-squares sense,
which pins the translational near-degeneracy of those rows.

Continuation walks the boundary-parameter grid serpentine-fashion from the
no-defect anchors at (t, v) = (1, 0), switching Jacobi charts whenever the
modulus runs into 0 or 1 (the adjacent charts share the degenerate
trigonometric shape there, including the unit-circle branch reached from
sn/ns at m -> 1).  Failed cells stay recorded as gaps; nothing is
interpolated silently.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace

import numpy as np

from . import ring_limit
from .boundary import (DeltaBC, DeltaPrimeBC, TraceValues, residual_delta,
                       residual_delta_prime, map_delta_to_delta_prime)
from .elliptic import complete_K
from .errors import (BranchAbsent, DerivativeVanishes, DomainViolation,
                     NoConvergence, NoRoot, NotFound, RingNLSEError)
from .linear_limit import linear_levels
from .quadrature import integrate
from .solutions import RingConfig, SolutionSpec, TWO_PI, _eval_raw, ensure_pole_free
from .surface import (CELL_EXCLUDED, CELL_FAILED, CELL_OK, MappedPoint,
                      MappedSurface, Sheet, SpectrumSurface)

L = TWO_PI
NEWTON_TOL = 1e-10
NEWTON_MAXIT = 50
_FD_REL = 1e-7
_NORM_ABSTOL = 1e-12
_M_MARGIN = 1e-13
_BAND = 1e-4  # chart-switch trigger band at the modulus endpoints


@dataclass(frozen=True)
class SolveProblem:
    which: str            # 'delta' | 'delta_prime'
    t: float
    v: float
    g: float
    kind: str
    circle: bool = False
    parity: str | None = None   # pin parity residual (|t| = 1 rows only)

    @property
    def bc(self):
        return DeltaBC(self.t, self.v) if self.which == "delta" else DeltaPrimeBC(self.t, self.v)


@dataclass(frozen=True)
class CellSolution:
    kind: str
    circle: bool
    E: float
    mm: float             # modulus, or its circle angle
    x0: float
    res: tuple            # (|norm-1|, |r1|, |r2|)
    steps: int

    @property
    def m(self):
        return cmath.exp(1j * self.mm) if self.circle else self.mm

    def spec(self, g: float) -> SolutionSpec:
        return SolutionSpec(self.kind, self.E, self.m, self.x0, RingConfig(g))


def _make_spec(problem: SolveProblem, z) -> SolutionSpec:
    E, mm, x0 = z
    m = cmath.exp(1j * mm) if problem.circle else float(mm)
    return SolutionSpec(problem.kind, float(E), m, float(x0), RingConfig(problem.g))


def residual_system(problem: SolveProblem, z):
    """(norm^2 - 1, r1, r2[, parity]) for unknowns z = (E, m_or_theta, x0)."""
    spec = _make_spec(problem, z)
    ensure_pole_free(spec)
    n2 = integrate(lambda xs: _eval_raw(spec, xs, 0) ** 2, 0.0, L, abstol=_NORM_ABSTOL)
    vals = _eval_raw(spec, np.array([0.0, L]), 0)
    dvals = _eval_raw(spec, np.array([0.0, L]), 1)
    tr = TraceValues(float(vals[0]), float(vals[1]), float(dvals[0]), float(dvals[1]))
    if problem.which == "delta":
        r1, r2 = residual_delta(problem.bc, tr)
    else:
        r1, r2 = residual_delta_prime(problem.bc, tr)
    out = [n2 - 1.0, r1, r2]
    if problem.parity == "even":
        out.append(float(_eval_raw(spec, L / 2, 1)))
    elif problem.parity == "odd":
        out.append(float(_eval_raw(spec, L / 2, 0)))
    return np.array(out)


def _safe_residual(problem, z):
    try:
        F = residual_system(problem, z)
    except RingNLSEError:
        return None
    except (ValueError, ZeroDivisionError, OverflowError):
        return None
    return F if np.all(np.isfinite(F)) else None


_W_CLIP = 36.0  # |logit| bound, m within ~2e-16 of an endpoint


def _to_logit(mm: float, circle: bool) -> float:
    frac = mm / math.pi if circle else mm
    frac = min(max(frac, 1e-16), 1.0 - 1e-16)
    return min(max(math.log(frac / (1.0 - frac)), -_W_CLIP), _W_CLIP)


def _from_logit(w: float, circle: bool) -> float:
    frac = 1.0 / (1.0 + math.exp(-min(max(w, -_W_CLIP), _W_CLIP)))
    return frac * math.pi if circle else frac


def newton_solve(problem: SolveProblem, z0, tol: float = NEWTON_TOL,
                 maxit: int = NEWTON_MAXIT) -> CellSolution:
    """Damped Newton with finite-difference Jacobian and secant fallback.

    The modulus unknown is iterated as its logit, so resolution survives the
    m -> 0 and m -> 1 ends (solitonic limits push 1 - m below 1e-8, where a
    direct finite-difference step would drown in rounding).  Raises
    NoConvergence with the best iterate attached when the residual cannot be
    pushed under tol.
    """

    def unpack(y):
        return np.array([y[0], _from_logit(y[1], problem.circle), y[2]])

    def FF(y):
        return _safe_residual(problem, unpack(y))

    y = np.array([z0[0], _to_logit(z0[1], problem.circle), z0[2]], dtype=float)
    F = FF(y)
    if F is None:
        raise NoConvergence("initial guess has no finite residual", best=tuple(z0))
    caps = np.array([max(0.5, 0.2 * abs(y[0])), 2.0, 0.8])
    J = None
    fails = 0
    last_dy = None
    last_dF = None

    def result(step):
        E, w, x0 = y
        res = tuple(float(abs(x)) for x in F[:3])
        return CellSolution(problem.kind, problem.circle, float(E),
                            float(_from_logit(w, problem.circle)), float(x0),
                            res, step)

    def best():
        return (float(y[0]), float(_from_logit(y[1], problem.circle)), float(y[2]))

    for step in range(maxit):
        if np.max(np.abs(F)) < tol:
            return result(step)
        if fails < 2 or J is None or last_dy is None:
            J = _fd_jacobian(FF, y, F)
            if J is None:
                raise NoConvergence("Jacobian not finite", best=best(),
                                    residual=float(np.max(np.abs(F))))
        else:
            # rank-one secant (quasi-Newton) refresh after repeated damping failures
            denom = float(last_dy @ last_dy)
            if denom > 0:
                J = J + np.outer(last_dF - J @ last_dy, last_dy) / denom
        try:
            dy = np.linalg.lstsq(J, -F, rcond=1e-12)[0]
        except np.linalg.LinAlgError:
            raise NoConvergence("singular step", best=best(),
                                residual=float(np.max(np.abs(F))))
        scale = float(np.max(np.abs(dy) / caps))
        if scale > 1.0:
            dy = dy / scale
        lam, moved = 1.0, False
        base = np.max(np.abs(F))
        for _ in range(14):
            yn = y + lam * dy
            yn[1] = min(max(yn[1], -_W_CLIP), _W_CLIP)
            Fn = FF(yn)
            if Fn is not None and np.max(np.abs(Fn)) < base:
                last_dy, last_dF = yn - y, Fn - F
                y, F = yn, Fn
                moved = True
                break
            lam *= 0.5
        if moved:
            fails = 0
        else:
            fails += 1
            if fails >= 3:
                raise NoConvergence("line search stalled", best=best(),
                                    residual=float(np.max(np.abs(F))))
    raise NoConvergence("iteration budget exhausted", best=best(),
                        residual=float(np.max(np.abs(F))))


def _fd_jacobian(FF, y, F0):
    n = len(F0)
    J = np.zeros((n, 3))
    for j in range(3):
        h = _FD_REL * max(abs(y[j]), 1.0)
        yp, ym = y.copy(), y.copy()
        yp[j] += h
        ym[j] -= h
        Fp = FF(yp)
        Fm = FF(ym)
        if Fp is None or Fm is None:
            if Fp is not None:
                J[:, j] = (Fp - F0) / h
                continue
            if Fm is not None:
                J[:, j] = (F0 - Fm) / h
                continue
            return None
        J[:, j] = (Fp - Fm) / (2 * h)
    return J


# ---------------------------------------------------------------------------
# chart switching

_PARTNER_M1 = {"cn": "dn", "dn": "cn", "cs": "ds", "ds": "cs"}
_PARTNER_M0 = {"ns": "ds", "ds": "ns", "dn": "dn", "cs": "ns"}


def _switch_candidates(kind, circle, z_fail):
    """(kind, circle, z_seed) alternatives keyed on which endpoint was hit."""
    E, mm, x0 = z_fail
    out = []
    if circle:
        if mm < 2e-2:
            out.append((kind, False, (E, min(1.0 - mm, 1.0 - 1e-9), x0)))
        return out
    if mm > 1.0 - 10 * _BAND:
        if kind in ("sn", "ns"):
            for th in (max(1.0 - mm, 1e-5), 1e-3, 1e-2):
                out.append((kind, True, (E, th, x0)))
        if kind in _PARTNER_M1:
            out.append((_PARTNER_M1[kind], False, (E, mm, x0)))
    if mm < 10 * _BAND:
        if kind in _PARTNER_M0:
            out.append((_PARTNER_M0[kind], False, (E, max(mm, 1e-6), x0)))
        out.append((kind, False, (E, 5e-4, x0)))
        if kind == "dn" and E < 0:
            # crest/trough classes exchange through the constant locus
            half = complete_K(5e-4) / math.sqrt(-E / 2.0)
            out.append((kind, False, (E, 5e-4, x0 + half)))
            out.append((kind, False, (E, 5e-4, x0 - half)))
    return out


def solve_with_switches(problem: SolveProblem, z0):
    """Newton solve that may change Jacobi chart when the modulus degenerates."""
    try:
        sol = newton_solve(problem, z0)
        return sol, problem
    except NoConvergence as err:
        z_fail = err.best if err.best is not None else z0
    for ck, ccirc, zc in _switch_candidates(problem.kind, problem.circle, z_fail):
        alt = replace(problem, kind=ck, circle=ccirc)
        try:
            sol = newton_solve(alt, zc)
            return sol, alt
        except NoConvergence:
            continue
    raise NoConvergence("no chart converged", best=tuple(z_fail))


# ---------------------------------------------------------------------------
# seeding helpers

def _norm_only(kind, E, m, x0, g):
    spec = SolutionSpec(kind, E, m, x0, RingConfig(g))
    ensure_pole_free(spec)
    return integrate(lambda xs: _eval_raw(spec, xs, 0) ** 2, 0.0, L, abstol=1e-9)


def _bisect_m_for_norm(kind, E, g, x0_of_m, m_lo, m_hi, samples=40):
    """Smallest bracketed root of norm(m) = 1 with x0 tied to m."""
    def f(m):
        try:
            return _norm_only(kind, E, m, x0_of_m(m), g) - 1.0
        except RingNLSEError:
            return None
        except (ValueError, OverflowError):
            return None
    ms = np.linspace(m_lo, m_hi, samples)
    vals = [f(m) for m in ms]
    for i in range(len(ms) - 1):
        a, b = vals[i], vals[i + 1]
        if a is None or b is None or a * b > 0:
            continue
        lo, hi, flo = ms[i], ms[i + 1], a
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            fm = f(mid)
            if fm is None:
                break
            if fm * flo > 0:
                lo, flo = mid, fm
            else:
                hi = mid
        return 0.5 * (lo + hi)
    return None


def seed_from_linear(linsol, g_small: float, g: float):
    """Chart guess for a linear eigenstate at a small coupling g_small."""
    E = linsol.E
    if linsol.form == "trig":
        x0_sin = linsol.x0 if linsol.x0 is not None else 0.0
        if g > 0:
            kind, x0 = "sn", x0_sin  # sn keeps the sine's zero at x0
        else:
            kind, x0 = "cn", x0_sin + 0.5 * math.pi / linsol.k  # crest alignment
        m = _bisect_m_for_norm(kind, E, g_small, lambda m: x0, 1e-10, 1.0 - 1e-10)
        if m is None:
            raise NoRoot("no modulus matches the linear amplitude")
        return kind, False, (E, m, x0)
    # hyperbolic bound state
    if g > 0:
        if linsol.shape == "cosh":
            kind = "ds"
            center = linsol.x0
            def x0_of_m(m):
                beta = E / (1.0 - 2.0 * m)
                return center - complete_K(m) / math.sqrt(beta)
            m = _bisect_m_for_norm(kind, E, g_small, x0_of_m, 0.5 + 1e-9, 1.0 - 1e-12)
            if m is None:
                raise NoRoot("no ds modulus matches the bound state")
            return kind, False, (E, m, x0_of_m(m))
        kind = "cs"  # sinh shape: one zero crossing
        center = linsol.x0
        def x0_of_m(m):
            beta = -E / (2.0 - m)
            return center - complete_K(m) / math.sqrt(beta)
        m = _bisect_m_for_norm(kind, E, g_small, x0_of_m, 1e-9, 1.0 - 1e-12)
        if m is None:
            raise NoRoot("no cs modulus matches the bound state")
        return kind, False, (E, m, x0_of_m(m))
    # attractive coupling: nodeless dn (cosh) or cn (sinh) soliton limits
    if linsol.shape == "cosh":
        kind = "dn"
        m = _bisect_m_for_norm(kind, E, g_small, lambda m: linsol.x0, 1e-9, 1.0 - 1e-12)
        if m is None:
            raise NoRoot("no dn modulus matches the bound state")
        return kind, False, (E, m, linsol.x0)
    kind = "cn"
    center = linsol.x0

    def x0_of_m(m):
        beta = E / (1.0 - 2.0 * m)
        return center - complete_K(m) / math.sqrt(beta)
    m = _bisect_m_for_norm(kind, E, g_small, x0_of_m, 0.5 + 1e-9, 1.0 - 1e-12)
    if m is None:
        raise NoRoot("no cn modulus matches the bound state")
    return kind, False, (E, m, x0_of_m(m))


def continue_point_in_g(which, t, v, g0, g1, kind, circle, z,
                        steps: int = 25, min_step: float = 1e-4, parity=None):
    """Homotopy in the coupling with per-step re-convergence and step halving."""
    if g1 == g0:
        problem = SolveProblem(which, t, v, g1, kind, circle, parity)
        sol = newton_solve(problem, z)
        return sol, problem
    g = g0
    dg = (g1 - g0) / max(steps, 1)
    state = (kind, circle, tuple(z))
    sol = None
    problem = None
    while (g1 - g) * math.copysign(1.0, dg) > 1e-12:
        step = dg
        while True:
            g_try = g + step
            if (g1 - g_try) * math.copysign(1.0, dg) < 0:
                g_try = g1
            problem = SolveProblem(which, t, v, g_try, state[0], state[1], parity)
            try:
                sol, problem = solve_with_switches(problem, state[2])
                state = (problem.kind, problem.circle, (sol.E, sol.mm, sol.x0))
                g = g_try
                break
            except NoConvergence:
                step *= 0.5
                if abs(step) < min_step:
                    raise NoConvergence(
                        f"fold suspected near g={g + step:.6f} (step floor reached)",
                        best=state[2])
    return sol, problem


def lift_from_linear(which, t, v, g, level: int = 1, steps: int = 25, parity=None):
    """State at (t, v) built by ramping the coupling from zero at fixed level."""
    bc = DeltaBC(t, v) if which == "delta" else DeltaPrimeBC(t, v)
    sols = linear_levels(bc, which, level)
    if len(sols) < level:
        raise NoRoot(f"linear level {level} absent at (t={t}, v={v})")
    linsol = sols[level - 1]
    g_small = math.copysign(0.05, g)
    kind, circle, z = seed_from_linear(linsol, g_small, g)
    problem = SolveProblem(which, t, v, g_small, kind, circle, parity)
    sol, problem = solve_with_switches(problem, z)
    return continue_point_in_g(which, t, v, g_small, g,
                               problem.kind, problem.circle,
                               (sol.E, sol.mm, sol.x0), steps=steps, parity=parity)


def lift_ground_from_linear(which, t, v, g, steps: int = 25, parity=None):
    return lift_from_linear(which, t, v, g, 1, steps, parity)


# ---------------------------------------------------------------------------
# sweeping

_EJUMP_FLOOR = 0.6


def _serpentine_fill(sheet, which, g, ts, vs, it, order, seeds, parity_row, notes):
    """Fill one t-row of a sheet in the given iv order, seeding per cell."""
    for iv in order:
        t = ts[it]
        v = vs[iv]
        if t == 0.0:
            sheet.status[it, iv] = CELL_EXCLUDED
            continue
        cands = [s for s in seeds(it, iv) if s is not None]
        if not cands:
            sheet.status[it, iv] = CELL_FAILED
            continue
        solved = False
        for state in cands:
            try:
                state2, sol = _continue_between(which, g, state, t, v, parity_row)
            except NoConvergence:
                continue
            sheet.put(it, iv, sol.E, cmath.exp(1j * sol.mm) if sol.circle else sol.mm,
                      sol.x0, sol.kind + ("*" if sol.circle else ""), sol.res)
            solved = True
            break
        if not solved:
            sheet.status[it, iv] = CELL_FAILED


def _continue_between(which, g, state, t, v, parity, depth: int = 0):
    """Solve at (t, v) from state; bisect the parameter step on failure.

    A converged result that jumps in energy beyond the guard counts as a
    failure too: genuinely steep level segments survive the sub-stepping,
    slides onto a different sheet (and fold crossings) do not.
    """
    kind, circle, z = state[:3]
    t0, v0 = state[3] if len(state) > 3 else (t, v)
    problem = SolveProblem(which, t, v, g, kind, circle, parity)
    try:
        sol, prob = solve_with_switches(problem, z)
        if abs(sol.E - z[0]) > max(_EJUMP_FLOOR, 0.3 * abs(z[0])):
            raise NoConvergence("energy jump beyond the continuation guard",
                                best=(sol.E, sol.mm, sol.x0))
        return (prob.kind, prob.circle, (sol.E, sol.mm, sol.x0), (t, v)), sol
    except NoConvergence:
        if depth >= 4 or (t0 == t and v0 == v):
            raise
        tm, vm = 0.5 * (t0 + t), 0.5 * (v0 + v)
        if tm == 0.0:
            tm = 0.5 * (tm + t)
        mid_state, _ = _continue_between(which, g, state, tm, vm, parity, depth + 1)
        return _continue_between(which, g, mid_state, t, v, parity, depth + 1)


def _parity_for_row(t):
    return abs(abs(t) - 1.0) < 1e-12


_PIN_OFFSET = {  # u(L/2) for the even/odd pinning classes, in units of K(m)
    "sn": {"odd": 0.0, "even": 1.0},
    "cn": {"even": 0.0, "odd": 1.0},
    "dn": {"crest": 0.0, "trough": 1.0},
}


def _anchor_states(anchor, pin, g):
    """Seed (kind, circle, z) for a periodic anchor with a given pinning class."""
    from .solutions import coefficients
    kind, m, E = anchor.kind, anchor.m, anchor.E
    _, beta = coefficients(kind, E, m)
    sb = math.sqrt(beta)
    uc = _PIN_OFFSET[kind][pin] * complete_K(m)
    x0 = L / 2 - uc / sb
    return (kind, False, (E, m, x0))


def _cell_res_of_spec(which, t, v, g, spec):
    vals = _eval_raw(spec, np.array([0.0, L]), 0)
    dvals = _eval_raw(spec, np.array([0.0, L]), 1)
    tr = TraceValues(float(vals[0]), float(vals[1]), float(dvals[0]), float(dvals[1]))
    bc = DeltaBC(t, v) if which == "delta" else DeltaPrimeBC(t, v)
    r = residual_delta(bc, tr) if which == "delta" else residual_delta_prime(bc, tr)
    n2 = integrate(lambda xs: _eval_raw(spec, xs, 0) ** 2, 0.0, L, abstol=1e-11)
    return (abs(n2 - 1.0), abs(r[0]), abs(r[1]))


def _sheet_plans(g, levels):
    """(name, parity-tag, anchor, pin) list covering the requested level count."""
    plans = []
    if g > 0:
        plans.append(("ground", "even", "lift", None))
        for j in range(1, levels):
            plans.append((f"sn{j}-odd", "odd", ring_limit.solve_periodic("sn", j, g), "odd"))
            plans.append((f"sn{j}-even", "even", ring_limit.solve_periodic("sn", j, g), "even"))
    else:
        plans.append(("const", "even", "const", None))
        j = 1
        while True:
            try:
                dn = ring_limit.solve_periodic("dn", float(j), g)
            except BranchAbsent:
                break
            plans.append((f"dn{j}-crest", "even", dn, "crest"))
            plans.append((f"dn{j}-trough", "even", dn, "trough"))
            j += 1
        for j in range(1, levels):
            plans.append((f"cn{j}-even", "even", ring_limit.solve_periodic("cn", j, g), "even"))
            plans.append((f"cn{j}-odd", "odd", ring_limit.solve_periodic("cn", j, g), "odd"))
    return plans


def sweep_one_sheet(ts, vs, g, which, plan) -> Sheet:
    """Run the full serpentine continuation for a single sheet plan."""
    ts = np.asarray(ts, dtype=float)
    vs = np.asarray(vs, dtype=float)
    name, parity, anchor, pin = plan
    it1 = int(np.argmin(np.abs(ts - 1.0)))
    iv0 = int(np.argmin(np.abs(vs)))
    notes = {}
    sheet = Sheet(name, parity, len(ts), len(vs))
    _fill_anchor_row(sheet, which, g, ts, vs, it1, iv0, anchor, pin, parity, notes)
    _grow_rows(sheet, which, g, ts, vs, it1, parity, notes)
    sheet.note.update(notes)
    return sheet


def sweep(ts, vs, g, which: str = "delta", levels: int = 4,
          progress=None, workers: int = 1) -> SpectrumSurface:
    """Serpentine continuation over the (t, v) grid from the no-defect anchors."""
    ts = np.asarray(ts, dtype=float)
    vs = np.asarray(vs, dtype=float)
    if g == 0.0:
        return _linear_surface(ts, vs, which, levels)
    plans = _sheet_plans(g, levels)
    sheets = []
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(sweep_one_sheet, ts, vs, g, which, p) for p in plans]
            for p, fut in zip(plans, futures):
                sheets.append(fut.result())
                if progress:
                    progress(p[0])
    else:
        for p in plans:
            sheets.append(sweep_one_sheet(ts, vs, g, which, p))
            if progress:
                progress(p[0])
    notes = {}
    for s in sheets:
        for key, val in s.note.items():
            notes.setdefault(key, []).extend(val)
    meta = {"levels": levels, "notes": notes}
    return SpectrumSurface(which, float(g), ts, vs, sheets, meta)


def _fill_anchor_row(sheet, which, g, ts, vs, it1, iv0, anchor, pin, parity, notes):
    t1 = ts[it1]
    parity_pin = parity if _parity_for_row(t1) else None
    if anchor == "lift":
        # ground sheet at g > 0: ramp the two columns flanking v = 0, then walk
        state_cache = {}
        for iv in (iv0 + 1, iv0 - 1):
            if not 0 <= iv < len(vs):
                continue
            try:
                sol, prob = lift_ground_from_linear(which, t1, vs[iv], g, parity=parity_pin)
            except (NoConvergence, NoRoot, RingNLSEError):
                continue
            state_cache[iv] = (prob.kind, prob.circle, (sol.E, sol.mm, sol.x0), (t1, vs[iv]))
            sheet.put(it1, iv, sol.E, cmath.exp(1j * sol.mm) if prob.circle else sol.mm,
                      sol.x0, prob.kind + ("*" if prob.circle else ""), sol.res)
        # the v = 0 cell is the constant state
        if abs(vs[iv0]) < 1e-14 and abs(t1 - 1.0) < 1e-14:
            sheet.put(it1, iv0, g / TWO_PI, 0.0, 0.0, "const", (0.0, 0.0, 0.0))
        seeds_up = lambda it, iv: [sheet_state(sheet, it, iv - 1, ts, vs)]
        seeds_dn = lambda it, iv: [sheet_state(sheet, it, iv + 1, ts, vs)]
        _serpentine_fill(sheet, which, g, ts, vs, it1,
                         range(iv0 + 2, len(vs)), seeds_up, parity_pin, notes)
        _serpentine_fill(sheet, which, g, ts, vs, it1,
                         range(iv0 - 2, -1, -1), seeds_dn, parity_pin, notes)
        return
    if anchor == "const":
        # small-modulus dn ring around the constant state (g < 0); the chart
        # class flips through m = 0 at the anchor: the trough sits at the
        # ring midpoint on the repulsive side, the crest on the attractive one
        E0 = g / TWO_PI
        m0 = 1e-3
        beta = -E0 / (2.0 - m0)
        sb = math.sqrt(beta)
        state_up = ("dn", False, (E0, m0, L / 2 - complete_K(m0) / sb), (ts[it1], vs[iv0]))
        state_dn = ("dn", False, (E0, m0, L / 2), (ts[it1], vs[iv0]))
        if abs(vs[iv0]) < 1e-14 and abs(ts[it1] - 1.0) < 1e-14:
            sheet.put(it1, iv0, E0, 0.0, 0.0, "const", (0.0, 0.0, 0.0))
    else:
        state_up = state_dn = _anchor_states(anchor, pin, g) + ((ts[it1], vs[iv0]),)
        spec = SolutionSpec(anchor.kind, anchor.E, anchor.m, state_up[2][2], RingConfig(g))
        res = _cell_res_of_spec(which, ts[it1], vs[iv0], g, spec)
        sheet.put(it1, iv0, anchor.E, anchor.m, state_up[2][2], anchor.kind, res)
    seeds_up = lambda it, iv: [sheet_state(sheet, it, iv - 1, ts, vs) or
                               (state_up if iv - 1 == iv0 else None)]
    seeds_dn = lambda it, iv: [sheet_state(sheet, it, iv + 1, ts, vs) or
                               (state_dn if iv + 1 == iv0 else None)]
    _serpentine_fill(sheet, which, g, ts, vs, it1,
                     range(iv0 + 1, len(vs)), seeds_up, parity_pin, notes)
    _serpentine_fill(sheet, which, g, ts, vs, it1,
                     range(iv0 - 1, -1, -1), seeds_dn, parity_pin, notes)


def sheet_state(sheet, it, iv, ts, vs):
    """Continuation state stored at a converged cell, or None."""
    if not (0 <= it < sheet.status.shape[0] and 0 <= iv < sheet.status.shape[1]):
        return None
    if sheet.status[it, iv] != CELL_OK:
        return None
    m = sheet.m[it, iv]
    kind = str(sheet.kind[it, iv]).rstrip("*")
    if kind in ("const", "lin", ""):
        return None
    circle = bool(abs(m.imag) > 1e-15)
    mm = math.atan2(m.imag, m.real) if circle else float(m.real)
    return (kind, circle, (float(sheet.E[it, iv]), mm, float(sheet.x0[it, iv])),
            (float(ts[it]), float(vs[iv])))


def _grow_rows(sheet, which, g, ts, vs, it1, parity, notes):
    for direction in (1, -1):
        rng = range(it1 + direction, len(ts) if direction > 0 else -1, direction)
        for it in rng:
            parity_pin = parity if _parity_for_row(ts[it]) else None
            order = list(range(len(vs)))
            if (it - it1) % 2:
                order = order[::-1]
            def seeds(it_, iv_, d=direction):
                # look across excluded/failed rows (e.g. the t = 0 gap)
                return [sheet_state(sheet, it_ - d, iv_, ts, vs),
                        sheet_state(sheet, it_, iv_ - 1, ts, vs),
                        sheet_state(sheet, it_, iv_ + 1, ts, vs),
                        sheet_state(sheet, it_ - 2 * d, iv_, ts, vs),
                        sheet_state(sheet, it_ - 3 * d, iv_, ts, vs)]
            _serpentine_fill(sheet, which, g, ts, vs, it, order, seeds, parity_pin, notes)


def _linear_surface(ts, vs, which, levels):
    sheets = [Sheet(f"lin{j}", "none", len(ts), len(vs)) for j in range(1, levels + 1)]
    for it, t in enumerate(ts):
        for iv, v in enumerate(vs):
            if t == 0.0:
                for s in sheets:
                    s.status[it, iv] = CELL_EXCLUDED
                continue
            bc = DeltaBC(t, v) if which == "delta" else DeltaPrimeBC(t, v)
            try:
                sols = linear_levels(bc, which, levels)
            except (NoRoot, RingNLSEError):
                for s in sheets:
                    s.status[it, iv] = CELL_FAILED
                continue
            for s, sol in zip(sheets, sols):
                s.put(it, iv, sol.E, 0.0, sol.x0 if sol.x0 is not None else np.nan,
                      "lin", (0.0, 0.0, 0.0))
            for s in sheets[len(sols):]:
                s.status[it, iv] = CELL_FAILED
    return SpectrumSurface(which, 0.0, ts, vs, sheets, {"levels": levels, "linear": True})


# ---------------------------------------------------------------------------
# coupling continuation of a whole surface

def continue_in_g(surface: SpectrumSurface, g1: float, steps: int = 25) -> SpectrumSurface:
    """Per-cell homotopy of every converged cell to the new coupling.

    New periodic branches appearing at (t, v) = (1, 0) along the way (dn
    emergences) are reported in meta['new_branches']; sweeping them out is
    the caller's choice.
    """
    ts, vs = surface.ts, surface.vs
    out_sheets = []
    for s in surface.sheets:
        ns = Sheet(s.name, s.parity, len(ts), len(vs))
        ns.status[:] = np.where(s.status == CELL_OK, 0, s.status)
        level = int(s.name[3:]) if s.name.startswith("lin") and s.name[3:].isdigit() else None
        for it, iv in s.converged_cells():
            st = sheet_state(s, it, iv, ts, vs)
            parity_pin = s.parity if _parity_for_row(ts[it]) and s.parity != "none" else None
            try:
                if st is None and str(s.kind[it, iv]) == "const":
                    ns.put(it, iv, g1 / TWO_PI, 0.0, 0.0, "const", (0.0, 0.0, 0.0))
                    continue
                if st is None and level is not None:
                    sol, prob = lift_from_linear(surface.which, float(ts[it]), float(vs[iv]),
                                                 g1, level, steps=steps, parity=parity_pin)
                elif st is None:
                    ns.status[it, iv] = CELL_FAILED
                    continue
                else:
                    sol, prob = continue_point_in_g(surface.which, ts[it], vs[iv],
                                                    surface.g, g1, st[0], st[1], st[2],
                                                    steps=steps, parity=parity_pin)
            except (NoConvergence, RingNLSEError):
                ns.status[it, iv] = CELL_FAILED
                continue
            ns.put(it, iv, sol.E, cmath.exp(1j * sol.mm) if prob.circle else sol.mm,
                   sol.x0, prob.kind + ("*" if prob.circle else ""), sol.res)
        out_sheets.append(ns)
    meta = dict(surface.meta)
    new_branches = []
    j = 1
    while True:
        try:
            dn = ring_limit.solve_periodic("dn", float(j), g1)
        except BranchAbsent:
            break
        if surface.g >= -math.pi * j * j:  # branch absent at the source coupling
            new_branches.append({"kind": "dn", "j": j, "E": dn.E, "m": dn.m})
        j += 1
    meta["new_branches"] = new_branches
    return SpectrumSurface(surface.which, float(g1), ts, vs, out_sheets, meta)


# ---------------------------------------------------------------------------
# bubble detection

def detect_bubble(g_range, j: int, tol: float = 1e-9):
    """Bisect the emergence coupling of the nodeless dn branch at (1, 0).

    Returns (g_star, E_star) with E_star the touching energy of the
    constant-state line at the emergence point.
    """
    g_lo, g_hi = min(g_range), max(g_range)
    lo_exists = ring_limit.branch_exists("dn", j, g_lo)
    hi_exists = ring_limit.branch_exists("dn", j, g_hi)
    if lo_exists == hi_exists:
        raise NotFound(f"range [{g_lo}, {g_hi}] does not bracket the dn-{j} emergence")
    for _ in range(200):
        if g_hi - g_lo < tol:
            break
        mid = 0.5 * (g_lo + g_hi)
        if ring_limit.branch_exists("dn", j, mid) == lo_exists:
            g_lo = mid
        else:
            g_hi = mid
    g_star = 0.5 * (g_lo + g_hi)
    return g_star, g_star / TWO_PI


# ---------------------------------------------------------------------------
# delta -> delta-prime mapping

def map_surface_to_delta_prime(surface: SpectrumSurface,
                               residual_tol: float = 1e-9) -> MappedSurface:
    """Relabel every converged delta cell in the (t', v') chart.

    The eigenfunction is unchanged; only the boundary parameters move. Each
    image point is re-verified against the delta-prime residuals.
    """
    if surface.which != "delta":
        raise DomainViolation("mapping starts from a delta surface")
    points, singular = [], []
    for s in surface.sheets:
        for it, iv in s.converged_cells():
            st = sheet_state(s, it, iv, surface.ts, surface.vs)
            if st is None:
                singular.append((s.name, it, iv, "no Jacobi chart (const/linear cell)"))
                continue
            kind, circle, (E, mm, x0), _ = st
            m = cmath.exp(1j * mm) if circle else mm
            spec = SolutionSpec(kind, E, m, x0, RingConfig(surface.g))
            vals = _eval_raw(spec, np.array([0.0, L]), 0)
            dvals = _eval_raw(spec, np.array([0.0, L]), 1)
            tr = TraceValues(float(vals[0]), float(vals[1]), float(dvals[0]), float(dvals[1]))
            bc = DeltaBC(float(surface.ts[it]), float(surface.vs[iv]))
            try:
                image = map_delta_to_delta_prime(bc, tr)
            except DerivativeVanishes as err:
                singular.append((s.name, it, iv, str(err)))
                continue
            r1, r2 = residual_delta_prime(image, tr)
            if max(abs(r1), abs(r2)) > residual_tol * max(1.0, abs(image.t)):
                singular.append((s.name, it, iv, f"image residual {max(abs(r1), abs(r2))}"))
                continue
            points.append(MappedPoint(image.t, image.v, E, m, x0,
                                      kind + ("*" if circle else ""),
                                      s.name, it, iv, (abs(r1), abs(r2))))
    return MappedSurface(surface.g, points, singular, {"src_which": "delta"})


# ---------------------------------------------------------------------------
# region classification and parity

@dataclass
class RegionMap:
    level: int
    ts: np.ndarray
    vs: np.ndarray
    tags: np.ndarray          # object array: '', 'sn', 'ns*', 'const', ...
    boundaries: list          # (v, t_lo, t_hi, tag_lo, tag_hi) per crossing


def classify_regions(surface: SpectrumSurface, level: int = 1,
                     refine_steps: int = 0) -> RegionMap:
    """Kind tags of the rank-`level` state per cell, with boundary brackets.

    With refine_steps > 0 each tag change along a t-line is narrowed by
    bisection re-solves starting from the adjacent converged cells.
    """
    nt, nv = len(surface.ts), len(surface.vs)
    tags = np.full((nt, nv), "", dtype=object)
    cellof = np.full((nt, nv), "", dtype=object)
    for it in range(nt):
        for iv in range(nv):
            ranked = surface.level_energies(it, iv)
            if len(ranked) >= level:
                name = ranked[level - 1][1]
                tags[it, iv] = str(surface.sheet(name).kind[it, iv])
                cellof[it, iv] = name
    boundaries = []
    for iv in range(nv):
        for it in range(nt - 1):
            a, b = tags[it, iv], tags[it + 1, iv]
            if a and b and a != b:
                t_lo, t_hi = float(surface.ts[it]), float(surface.ts[it + 1])
                if refine_steps > 0:
                    st = sheet_state(surface.sheet(cellof[it, iv]), it, iv,
                                     surface.ts, surface.vs)
                    if st is not None:
                        t_lo, t_hi = _refine_boundary(surface.which, surface.g, st,
                                                      t_lo, t_hi, float(surface.vs[iv]),
                                                      refine_steps)
                boundaries.append((float(surface.vs[iv]), t_lo, t_hi, a, b))
    return RegionMap(level, surface.ts, surface.vs, tags, boundaries)


def _refine_boundary(which, g, state, t_in, t_out, v, steps):
    """Narrow a region boundary: the modulus of the inside chart hits the band."""
    kind, circle, z = state[0], state[1], state[2]
    lo, hi = t_in, t_out
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        problem = SolveProblem(which, mid, v, g, kind, circle)
        try:
            sol = newton_solve(problem, z)
            inside_band = _BAND < (sol.mm if not circle else sol.mm / math.pi) < 1 - _BAND
        except NoConvergence:
            inside_band = False
        if inside_band:
            lo = mid
            z = (sol.E, sol.mm, sol.x0)
        else:
            hi = mid
    return lo, hi


def parity_check(spec: SolutionSpec, t: float, tol: float = 1e-8,
                 samples: int = 257) -> str:
    """'even' | 'odd' | 'none' under x -> L - x (defined only at t = +-1)."""
    if abs(abs(t) - 1.0) > 1e-12:
        return "none"
    xs = np.linspace(0.0, L, samples)
    f = _eval_raw(spec, xs, 0)
    fr = f[::-1]  # phi(L - x) on the same grid
    scale = max(1.0, float(np.max(np.abs(f))))
    if float(np.max(np.abs(fr - f))) < tol * scale:
        return "even"
    if float(np.max(np.abs(fr + f))) < tol * scale:
        return "odd"
    return "none"
