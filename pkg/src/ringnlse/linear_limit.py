"""Defect eigenvalues of the linear ring (g = 0).

Positive-energy states are A sin(k(x - x0)); the quantization condition for
the delta chart is t = (1 +- sqrt(sin^2(Lk) - (v/k) sin(Lk) cos(Lk)))/cos(Lk)
and its delta-prime mirror carries +v'k inside the root.  Negative-energy
bound states follow from the k -> i kappa continuation (sin -> sinh), which
the attractive side of either chart supports.

Roots are located by sign-change bracketing of both branch functions on a
fine k grid, refined by bisection; tangent (double) roots at level-touching
points are recovered by polishing local minima of the squared condition.
Every returned solution is rebuilt as an explicit nullvector of the 2x2
boundary system, normalized in closed form, and residual-checked - the
displayed formulas are never trusted blind.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .boundary import DeltaBC, DeltaPrimeBC, TraceValues, residual_delta, residual_delta_prime
from .errors import NoRoot

TWO_PI = 2.0 * math.pi
L = TWO_PI
_SCAN_STEP = 0.01
_BISECT_TOL = 1e-13
_RESIDUAL_TOL = 1e-9


@dataclass(frozen=True)
class LinearSolution:
    level: int
    E: float
    k: float              # wavenumber (sqrt(E) for trig, kappa = sqrt(-E) for hyperbolic)
    form: str             # 'trig' | 'hyp'
    B: float              # trig: phi = B sin(kx) + C cos(kx); hyp: B e^{kx} + C e^{-kx}
    C: float
    A: float | None       # A sin(k(x-x0)) / A sinh / A cosh when representable
    x0: float | None
    shape: str            # 'sin' | 'sinh' | 'cosh' | 'mixed'

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        if self.form == "trig":
            return self.B * np.sin(self.k * x) + self.C * np.cos(self.k * x)
        return self.B * np.exp(self.k * x) + self.C * np.exp(-self.k * x)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        if self.form == "trig":
            return self.k * (self.B * np.cos(self.k * x) - self.C * np.sin(self.k * x))
        return self.k * (self.B * np.exp(self.k * x) - self.C * np.exp(-self.k * x))

    def trace(self) -> TraceValues:
        v0, vL = self.evaluate(np.array([0.0, L]))
        d0, dL = self.derivative(np.array([0.0, L]))
        return TraceValues(float(v0), float(vL), float(d0), float(dL))


# ---------------------------------------------------------------------------
# boundary matrices on the (B, C) coefficients

def _matrix(bc, k: float, form: str, which: str):
    if form == "trig":
        s, c = math.sin(L * k), math.cos(L * k)
        if which == "delta":
            return ((-s, bc.t - c),
                    (k * (1.0 - bc.t * c), bc.t * k * s - bc.v))
        return ((-s - bc.v * k * c, bc.t - c + bc.v * k * s),
                (k * (1.0 - bc.t * c), bc.t * k * s))
    # exponential basis phi = P e^{kx} + Q e^{-kx}: no sinh/cosh cancellation
    ep, em = math.exp(L * k), math.exp(-L * k)
    if which == "delta":
        return ((bc.t - ep, bc.t - em),
                (k * (1.0 - bc.t * ep) - bc.v, -k * (1.0 - bc.t * em) - bc.v))
    return ((bc.t - ep - bc.v * k * ep, bc.t - em + bc.v * k * em),
            (k * (1.0 - bc.t * ep), -k * (1.0 - bc.t * em)))


def _detM(bc, k, form, which):
    (a, b), (c, d) = _matrix(bc, k, form, which)
    return a * d - b * c


def _scaled_det(bc, k, form, which):
    """Boundary-system determinant on a bounded scale.

    Zero exactly at eigenvalues (double zeros at level-touching points); the
    divisor never vanishes, so no roots are created or destroyed.  The
    hyperbolic form deflates the e^{2kL} growth of the exponential basis.
    """
    (a, b), (c, d) = _matrix(bc, k, form, which)
    det = a * d - b * c
    if form == "hyp":
        det *= math.exp(-2.0 * L * k)
    return det / (1.0 + k + bc.t * bc.t + abs(bc.v))


def _nullvector(M):
    (a, b), (c, d) = M
    if math.hypot(a, b) >= math.hypot(c, d):
        B, C = b, -a
    else:
        B, C = d, -c
    return B, C


def _normalize(B, C, k, form):
    if form == "trig":
        s2, c2 = math.sin(2 * k * L), math.cos(2 * k * L)
        I = (B * B + C * C) * L / 2 - (B * B - C * C) * s2 / (4 * k) - B * C * (c2 - 1.0) / (2 * k)
    else:
        I = (B * B * (math.exp(2 * k * L) - 1.0) + C * C * (1.0 - math.exp(-2 * k * L))) / (2 * k) \
            + 2.0 * B * C * L
    scale = 1.0 / math.sqrt(I)
    B, C = B * scale, C * scale
    lead = B if abs(B) > 1e-300 else C
    if lead < 0:
        B, C = -B, -C
    return B, C


def _canonical(B, C, k, form):
    if form == "trig":
        return math.hypot(B, C), -math.atan2(C, B) / k, "sin"
    # phi = B e^{kx} + C e^{-kx}
    if B == 0.0 or C == 0.0:
        return None, None, "mixed"
    if B * C > 0:
        A = math.copysign(2.0 * math.sqrt(B * C), B)
        return A, -math.log(B / C) / (2 * k), "cosh"
    A = math.copysign(2.0 * math.sqrt(-B * C), B)
    return A, -math.log(-B / C) / (2 * k), "sinh"


def _build(bc, k, form, which, level=0) -> LinearSolution:
    M = _matrix(bc, k, form, which)
    B, C = _nullvector(M)
    B, C = _normalize(B, C, k, form)
    A, x0, shape = _canonical(B, C, k, form)
    E = k * k if form == "trig" else -k * k
    sol = LinearSolution(level, E, k, form, B, C, A, x0, shape)
    tr = sol.trace()
    r = residual_delta(bc, tr) if which == "delta" else residual_delta_prime(bc, tr)
    if max(abs(r[0]), abs(r[1])) > _RESIDUAL_TOL * max(1.0, abs(bc.t), abs(k)):
        raise NoRoot(f"candidate k={k} fails the residual check: {r}")
    return sol


# ---------------------------------------------------------------------------
# root location

def _branch_value(bc, k, form, which, sign):
    if form == "trig":
        s, c = math.sin(L * k), math.cos(L * k)
    else:
        s, c = math.sinh(L * k), math.cosh(L * k)
    if which == "delta":
        D = (-s * s - (bc.v / k) * s * c) if form == "hyp" else (s * s - (bc.v / k) * s * c)
    else:
        D = (-s * s + bc.v * k * s * c) if form == "hyp" else (s * s + bc.v * k * s * c)
    if -1e-13 * max(1.0, abs(bc.v)) < D < 0.0:
        D = 0.0  # rounding at the sin zeros
    if D < 0 or c == 0.0:
        return None
    return bc.t - (1.0 + sign * math.sqrt(D)) / c


def _bisect_branch(bc, a, b, form, which, sign):
    fa = _branch_value(bc, a, form, which, sign)
    for _ in range(200):
        mid = 0.5 * (a + b)
        fm = _branch_value(bc, mid, form, which, sign)
        if fm is None:
            return None
        if b - a < _BISECT_TOL * max(1.0, mid):
            return mid
        if fa * fm <= 0:
            b = mid
        else:
            a, fa = mid, fm
    return 0.5 * (a + b)


def _polish_minimum(bc, a, b, form, which):
    """Critical point of the scaled determinant inside [a, b] via derivative bisection."""
    h = 1e-7
    def dG(k):
        return (_scaled_det(bc, k + h, form, which) -
                _scaled_det(bc, k - h, form, which)) / (2 * h)
    fa = dG(a)
    fb = dG(b)
    if fa * fb > 0:
        return None
    for _ in range(200):
        mid = 0.5 * (a + b)
        if b - a < _BISECT_TOL * max(1.0, mid):
            break
        if fa * dG(mid) <= 0:
            b = mid
        else:
            a, fa = mid, dG(mid)
    return 0.5 * (a + b)


def _scan_roots(bc, form, which, kmax):
    ks = np.arange(_SCAN_STEP, kmax + _SCAN_STEP, _SCAN_STEP)
    roots = []
    for sign in (1.0, -1.0):
        vals = [_branch_value(bc, k, form, which, sign) for k in ks]
        for i in range(len(ks) - 1):
            fa, fb = vals[i], vals[i + 1]
            if fa is None or fb is None or fa * fb > 0:
                continue
            r = _bisect_branch(bc, ks[i], ks[i + 1], form, which, sign)
            if r is None:
                continue
            fr = _branch_value(bc, r, form, which, sign)
            if fr is not None and abs(fr) < 1e-6 * max(1.0, abs(bc.t)):
                roots.append(r)
    # determinant of the boundary system: vanishes exactly at eigenvalues,
    # is smooth and pole-free, and catches roots the branch scan misses at
    # the cos zeros and discriminant boundaries
    G = np.array([_scaled_det(bc, k, form, which) for k in ks])
    sg = np.sign(G)
    for i in range(len(ks) - 1):
        if sg[i] * sg[i + 1] < 0:
            lo, hi, glo = ks[i], ks[i + 1], G[i]
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                gm = _scaled_det(bc, mid, form, which)
                if hi - lo < _BISECT_TOL * max(1.0, mid):
                    break
                if gm * glo > 0:
                    lo, glo = mid, gm
                else:
                    hi = mid
            roots.append(0.5 * (lo + hi))
    # tangent (even-multiplicity) roots: |det| dips to zero without a sign change
    A = np.abs(G)
    for i in range(1, len(ks) - 1):
        if A[i] <= A[i - 1] and A[i] <= A[i + 1] and A[i] < 1e-2:
            if any(abs(ks[i] - r) < 1e-4 for r in roots):
                continue
            r = _polish_minimum(bc, ks[i - 1], ks[i + 1], form, which)
            if r is not None and abs(_scaled_det(bc, r, form, which)) < 1e-10:
                roots.append(r)
    roots.sort()
    out = []
    for r in roots:
        if not out or r - out[-1] > 1e-8:
            out.append(r)
    return out


def _pinned_levels(bc, which, nlevels):
    """Dirichlet (delta, v=inf) / Neumann (delta-prime, v'=inf) closed forms."""
    sols = []
    for j in range(1, nlevels + 1):
        k = 0.5 * j
        if which == "delta":
            # node pinned at the defect: phi = A sin(kx)
            I = L / 2 - math.sin(2 * k * L) / (4 * k)
            sols.append(LinearSolution(j, k * k, k, "trig", 1.0 / math.sqrt(I), 0.0,
                                       1.0 / math.sqrt(I), 0.0, "sin"))
        else:
            # extremum pinned: phi = A cos(kx)
            I = L / 2 + math.sin(2 * k * L) / (4 * k)
            A = 1.0 / math.sqrt(I)
            sols.append(LinearSolution(j, k * k, k, "trig", 0.0, A, A, -math.pi / (2 * k), "sin"))
    return sols


def linear_levels(bc, which: str, nlevels: int, kmax: float | None = None):
    """First nlevels eigen-solutions ordered by increasing energy."""
    if which not in ("delta", "delta_prime"):
        raise NoRoot(f"unknown condition family {which!r}")
    if (which == "delta" and math.isinf(bc.v)) or (which == "delta_prime" and math.isinf(bc.v)):
        return _pinned_levels(bc, which, nlevels)
    sols = []
    # negative-energy states exist on the attractive side of either chart
    # (v < 0, and v' < 0 where the delta-prime image of the deep well lives)
    if bc.v < 0:
        if which == "delta":
            kapmax = max(4.0, 0.75 * abs(bc.v) + 2.0)
        else:
            kapmax = min(40.0, max(4.0, 2.0 / max(abs(bc.v), 0.05) + 2.0))
        for kap in reversed(_scan_roots(bc, "hyp", which, kapmax)):
            try:
                sols.append(_build(bc, kap, "hyp", which, 0))
            except NoRoot:
                pass
    need = nlevels - len(sols)
    km = kmax if kmax is not None else 0.5 * max(need, 1) + 2.5
    for k in _scan_roots(bc, "trig", which, km):
        if len(sols) >= nlevels:
            break
        try:
            sols.append(_build(bc, k, "trig", which, 0))
        except NoRoot:
            pass
    sols = sols[:nlevels]
    out = []
    for i, s in enumerate(sols, start=1):
        out.append(LinearSolution(i, s.E, s.k, s.form, s.B, s.C, s.A, s.x0, s.shape))
    return out


def solve_linear_delta(bc: DeltaBC, level: int) -> LinearSolution:
    """The level-th solution (by increasing E) of the delta chart at g = 0."""
    if level < 1:
        raise NoRoot("levels are 1-based")
    sols = linear_levels(bc, "delta", level)
    if len(sols) < level:
        raise NoRoot(f"only {len(sols)} levels found for t={bc.t}, v={bc.v}")
    return sols[level - 1]


def solve_linear_delta_prime(bc: DeltaPrimeBC, level: int) -> LinearSolution:
    if level < 1:
        raise NoRoot("levels are 1-based")
    sols = linear_levels(bc, "delta_prime", level)
    if len(sols) < level:
        raise NoRoot(f"only {len(sols)} levels found for t'={bc.t}, v'={bc.v}")
    return sols[level - 1]


def dual_parameters(bc: DeltaBC, k: float) -> DeltaPrimeBC:
    """The (t', v') chart sharing this eigenvalue: v' = -v/k^2, same t."""
    return DeltaPrimeBC(bc.t, -bc.v / (k * k))


def linear_spectrum_grid(ts, vs, which: str, levels: int):
    """Eigenvalue grid: E[level, it, iv] with NaN marking NoRoot cells."""
    ts = np.asarray(ts, dtype=float)
    vs = np.asarray(vs, dtype=float)
    E = np.full((levels, len(ts), len(vs)), np.nan)
    for i, t in enumerate(ts):
        for j, v in enumerate(vs):
            if t == 0.0:
                continue  # outside the connected chart
            bc = DeltaBC(t, v) if which == "delta" else DeltaPrimeBC(t, v)
            try:
                sols = linear_levels(bc, which, levels)
            except NoRoot:
                continue
            for s in sols:
                E[s.level - 1, i, j] = s.E
    return E
