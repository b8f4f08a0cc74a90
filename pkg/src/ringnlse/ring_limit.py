"""No-defect (periodic) solutions and their coupling curves.

With continuity imposed at the junction the admissible families reduce to
sn, cn, dn (plus the constant), each carrying an integer winding j.  The
modulus solves one scalar constraint linking g and m; the energy follows in
closed form.  Antiperiodic states (t = -1) obey the same constraints with
half-integer winding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .elliptic import complete_E, complete_K
from .errors import BranchAbsent, DomainViolation, NotFound
from .solutions import RingConfig, SolutionSpec, TWO_PI

L = TWO_PI
_M_LO = 1e-14
_M_HI = 1.0 - 1e-14


@dataclass(frozen=True)
class PeriodicSolution:
    kind: str      # 'sn' | 'cn' | 'dn' | 'const'
    j: float       # winding index; half-integers encode antiperiodic states
    m: float
    E: float
    g: float

    def spec(self, x0: float = 0.0) -> SolutionSpec:
        if self.kind == "const":
            raise DomainViolation("constant solution has no Jacobi spec")
        return SolutionSpec(self.kind, self.E, self.m, x0, RingConfig(self.g))


def _coupling(kind: str, j: float, m: float) -> float:
    """pi^2 g as a function of the modulus for winding j."""
    K = complete_K(m)
    Em = complete_E(m)
    if kind == "sn":
        return 8 * j * j * L * K * (K - Em)
    if kind == "cn":
        return 8 * j * j * L * K * ((1.0 - m) * K - Em)
    if kind == "dn":
        return -2 * j * j * L * K * Em
    raise DomainViolation(f"unknown periodic kind {kind!r}")


def _energy(kind: str, j: float, m: float) -> float:
    K = complete_K(m)
    if kind == "sn":
        return (4 * j * j / math.pi ** 2) * (1.0 + m) * K * K
    if kind == "cn":
        return (4 * j * j / math.pi ** 2) * (1.0 - 2.0 * m) * K * K
    return -(j * j / math.pi ** 2) * (2.0 - m) * K * K


def solve_periodic(kind: str, j: float, g: float, m_tol: float = 1e-13) -> PeriodicSolution:
    """Modulus and energy of the periodic branch at coupling g.

    Raises BranchAbsent outside the existence domain (sn: g>0, cn: g<0,
    dn: g <= -pi j^2 with the first two j-independent in sign only).
    Half-integer j gives the antiperiodic branch.
    """
    if kind == "const":
        return PeriodicSolution("const", j, 0.0, constant_and_plane_wave_spectrum(1, g), g)
    target = math.pi ** 2 * g
    lo, hi = _M_LO, _M_HI
    f_lo = _coupling(kind, j, lo) - target
    f_hi = _coupling(kind, j, hi) - target
    if f_lo == 0.0:
        m = lo
    elif f_lo * f_hi > 0:
        raise BranchAbsent(f"{kind} j={j}: no modulus solves g={g}")
    else:
        # the coupling is monotone in m on each branch; plain bisection
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if hi - lo < m_tol:
                break
            if (_coupling(kind, j, mid) - target) * f_lo > 0:
                lo = mid
            else:
                hi = mid
        m = 0.5 * (lo + hi)
    resid = abs(_coupling(kind, j, m) - target) / max(1.0, abs(target))
    if resid > 1e-6:
        raise BranchAbsent(f"{kind} j={j}: bisection landed at relative misfit {resid}")
    return PeriodicSolution(kind, j, m, _energy(kind, j, m), g)


def branch_exists(kind: str, j: float, g: float) -> bool:
    try:
        solve_periodic(kind, j, g)
        return True
    except BranchAbsent:
        return False


def constant_and_plane_wave_spectrum(j: int, g: float) -> float:
    """E = g/(2 pi) + (j-1)^2: the constant state (j=1) and its plane-wave tower."""
    if j < 1:
        raise DomainViolation("plane-wave index is 1-based")
    return g / TWO_PI + (j - 1) ** 2


def emergence_points(j_max: int):
    """Couplings and energies where the nodeless dn branches appear."""
    return [(j, -math.pi * j * j, -0.5 * j * j) for j in range(1, j_max + 1)]


def periodic_anchor_set(g: float, count: int, antiperiodic: bool = False):
    """The lowest `count` periodic (or antiperiodic) states at coupling g, by E.

    Includes the constant state (periodic case only), every existing dn
    branch, and the sn/cn tower as the coupling sign allows.
    """
    half = 0.5 if antiperiodic else 0.0
    out = []
    if not antiperiodic:
        out.append(PeriodicSolution("const", 1, 0.0, g / TWO_PI, g))
    kind = "sn" if g > 0 else "cn"
    j = 1
    while len(out) < count + 4 and j < count + 6:
        jj = j - half if antiperiodic else j
        if jj > 0:
            try:
                out.append(solve_periodic(kind, jj, g))
            except BranchAbsent:
                pass
        j += 1
    if g < 0:
        j = 1
        while True:
            jj = j - half if antiperiodic else float(j)
            try:
                out.append(solve_periodic("dn", jj, g))
            except BranchAbsent:
                break
            j += 1
    out.sort(key=lambda s: s.E)
    return out[:count]
