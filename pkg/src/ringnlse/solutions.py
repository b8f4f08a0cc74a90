"""Closed-form stationary solutions phi(x) = sqrt(alpha/g) * pq(sqrt(beta)(x-x0), m).

The coefficient table maps each Jacobi kind to (alpha, beta) and an
admissible (g, E, m) domain; every spec that passes its domain checks solves
-phi'' + g phi^3 = E phi identically.  The modulus may sit on the unit
circle for sn/ns, in which case the evaluation runs in complex arithmetic
and the imaginary residue is checked before being discarded.

At exactly m = 0 or m = 1 the Jacobi forms are replaced by their
trigonometric/hyperbolic degenerations (csc, cot, sech, tanh, coth, csch),
which are the region-boundary shapes and must stay evaluable.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import elliptic
from .elliptic import JACOBI_KINDS, DIVERGENT_KINDS
from .errors import DomainViolation, PoleInDomain, RealnessViolation
from .quadrature import integrate

TWO_PI = 2.0 * math.pi
_POLE_MARGIN_FRAC = 1e-6  # of L, distance required between poles and [0, L]
_IMAG_TOL = 1e-9


@dataclass(frozen=True)
class RingConfig:
    g: float
    L: float = TWO_PI

    def __post_init__(self):
        if abs(self.L - TWO_PI) > 1e-14:
            raise DomainViolation("ring length is fixed to 2*pi")


@dataclass(frozen=True)
class SolutionSpec:
    kind: str
    E: float
    m: object  # float in [0,1] or complex on the unit circle
    x0: float
    ring: RingConfig

    @property
    def g(self) -> float:
        return self.ring.g

    @property
    def branch(self) -> str:
        if isinstance(self.m, complex) and self.m.imag != 0.0:
            return "circle"
        return "real"

    @property
    def theta(self) -> float:
        """Circle-branch angle of the modulus."""
        return math.atan2(self.m.imag, self.m.real)


def coefficients(kind: str, E: float, m):
    """Table pair (alpha, beta) for the requested kind, with domain checks."""
    if kind not in JACOBI_KINDS:
        raise DomainViolation(f"unknown kind {kind!r}")
    circle = isinstance(m, complex) and m.imag != 0.0
    if circle and kind not in ("sn", "ns"):
        raise DomainViolation(f"row {kind}: circle modulus is admitted for sn/ns only")
    if kind == "sn":
        return 2.0 * E * m / (1.0 + m), E / (1.0 + m)
    if kind == "cn":
        return 2.0 * E * m / (2.0 * m - 1.0), E / (1.0 - 2.0 * m)
    if kind == "dn":
        return 2.0 * E / (2.0 - m), -E / (2.0 - m)
    if kind == "ns":
        return 2.0 * E / (1.0 + m), E / (1.0 + m)
    if kind == "cs":
        return -2.0 * E / (2.0 - m), -E / (2.0 - m)
    return 2.0 * E / (1.0 - 2.0 * m), E / (1.0 - 2.0 * m)  # ds


_G_SIGN = {"sn": 1, "cn": -1, "dn": -1, "ns": 1, "cs": 1, "ds": 1}
_E_SIGN = {"sn": 1, "dn": -1, "ns": 1, "cs": -1}  # cn, ds: either sign


def check_domain(kind: str, E: float, m, g: float) -> tuple:
    """Validate (kind, g, E, m) against the coefficient table; return (alpha, beta)."""
    alpha, beta = coefficients(kind, E, m)
    if _G_SIGN[kind] * g <= 0.0:
        raise DomainViolation(f"row {kind}: requires g {'>' if _G_SIGN[kind] > 0 else '<'} 0, got g={g}")
    circle = isinstance(m, complex) and m.imag != 0.0
    if not circle:
        if kind in _E_SIGN and _E_SIGN[kind] * E <= 0.0:
            raise DomainViolation(f"row {kind}: energy sign violates the table domain (E={E})")
        if alpha / g < -1e-15:
            raise DomainViolation(f"row {kind}: alpha/g = {alpha / g} < 0, amplitude not real")
        if beta < -1e-15:
            raise DomainViolation(f"row {kind}: beta = {beta} < 0, argument scale not real")
    return alpha, beta


# degenerate shapes at the modulus endpoints
_DEGENERATE = {
    (0.0, "sn"): None,  # amplitude vanishes identically
    (0.0, "cn"): None,
    (0.0, "dn"): "one",
    (0.0, "ns"): "csc",
    (0.0, "cs"): "cot",
    (0.0, "ds"): "csc",
    (1.0, "sn"): "tanh",
    (1.0, "cn"): "sech",
    (1.0, "dn"): "sech",
    (1.0, "ns"): "coth",
    (1.0, "cs"): "csch",
    (1.0, "ds"): "csch",
}


def _degenerate_fns(shape):
    if shape == "one":
        return (lambda u: np.ones_like(u), lambda u: np.zeros_like(u))
    if shape == "csc":
        return (lambda u: 1.0 / np.sin(u), lambda u: -np.cos(u) / np.sin(u) ** 2)
    if shape == "cot":
        return (lambda u: np.cos(u) / np.sin(u), lambda u: -1.0 / np.sin(u) ** 2)
    if shape == "tanh":
        return (lambda u: np.tanh(u), lambda u: 1.0 / np.cosh(u) ** 2)
    if shape == "sech":
        return (lambda u: 1.0 / np.cosh(u), lambda u: -np.tanh(u) / np.cosh(u))
    if shape == "coth":
        return (lambda u: 1.0 / np.tanh(u), lambda u: -1.0 / np.sinh(u) ** 2)
    if shape == "csch":
        return (lambda u: 1.0 / np.sinh(u), lambda u: -np.cosh(u) / np.sinh(u) ** 2)
    raise DomainViolation(f"degenerate modulus leaves no usable {shape} shape")


def _cubic_second(kind, m, f):
    """f'' from the cubic identities, valid on both branches and at m=0,1."""
    if kind == "sn":
        return -(1.0 + m) * f + 2.0 * m * f ** 3
    if kind == "cn":
        return -(1.0 - 2.0 * m) * f - 2.0 * m * f ** 3
    if kind == "dn":
        return (2.0 - m) * f - 2.0 * f ** 3
    if kind == "ns":
        return -(1.0 + m) * f + 2.0 * f ** 3
    if kind == "cs":
        return (2.0 - m) * f + 2.0 * f ** 3
    return -(1.0 - 2.0 * m) * f + 2.0 * f ** 3  # ds


@lru_cache(maxsize=2048)
def _prepare(spec: SolutionSpec):
    """Amplitude, argument scale and shape dispatch for one spec."""
    kind, E, m, g = spec.kind, spec.E, spec.m, spec.g
    alpha, beta = check_domain(kind, E, m, g)
    if spec.branch == "circle":
        return ("circle", cmath.sqrt(alpha / g), cmath.sqrt(beta))
    m = float(m.real if isinstance(m, complex) else m)
    if m in (0.0, 1.0):
        shape = _DEGENERATE[(m, kind)]
        if shape is None:
            raise DomainViolation(f"row {kind}: amplitude vanishes identically at m={m}")
        return ("degenerate", math.sqrt(max(alpha / g, 0.0)), math.sqrt(max(beta, 0.0)), shape)
    return ("regular", math.sqrt(max(alpha / g, 0.0)), math.sqrt(max(beta, 0.0)))


def pole_positions(spec: SolutionSpec):
    """Pole abscissae of the scaled argument inside/near [0, L]; real branch only."""
    prep = _prepare(spec)
    if prep[0] == "circle":
        return []
    sb = prep[2]
    if sb == 0.0:
        return []
    kind = spec.kind
    if prep[0] == "degenerate":
        shape = prep[3]
        if shape in ("one", "tanh", "sech"):
            return []
        spacing = math.pi / sb if shape in ("csc", "cot") else None
    else:
        if kind not in DIVERGENT_KINDS:
            return []
        spacing = 2.0 * elliptic.complete_K(spec.m) / sb
    L = spec.ring.L
    if spacing is None:
        # single hyperbolic pole at u = 0
        return [spec.x0] if -L <= spec.x0 <= 2 * L else []
    n_lo = math.floor((-L - spec.x0) / spacing)
    n_hi = math.ceil((2 * L - spec.x0) / spacing)
    return [spec.x0 + n * spacing for n in range(n_lo, n_hi + 1)]


def ensure_pole_free(spec: SolutionSpec) -> None:
    L = spec.ring.L
    margin = _POLE_MARGIN_FRAC * L
    for xp in pole_positions(spec):
        dist = max(0.0 - xp, xp - L, 0.0)
        if dist < margin:
            raise PoleInDomain(f"pole at x={xp:.6g} within margin of [0, {L:.6g}]")


def _discard_imag(arr, what):
    worst = float(np.max(np.abs(arr.imag))) if arr.size else 0.0
    scale = max(1.0, float(np.max(np.abs(arr.real)))) if arr.size else 1.0
    if worst > _IMAG_TOL * scale:
        raise RealnessViolation(f"{what}: |Im| = {worst:.3e}")
    return arr.real


def _eval_raw(spec: SolutionSpec, x, order=0):
    """phi (order 0), phi' (1) or phi'' (2) at x, without the [0,L] pole screen."""
    prep = _prepare(spec)
    mode = prep[0]
    amp, sb = prep[1], prep[2]
    scalar = np.isscalar(x) or np.asarray(x).ndim == 0
    if mode == "circle":
        u = sb * (np.asarray(x, dtype=complex) - spec.x0)
        kind = spec.kind
        f = elliptic.jacobi(kind, u, spec.m) if scalar else elliptic.jacobi(kind, u, spec.m)
        f = np.asarray(f)
        if order == 0:
            out = _discard_imag(amp * f, "phi")
        elif order == 1:
            fp = np.asarray(elliptic.jacobi_derivative(kind, u, spec.m))
            out = _discard_imag(amp * sb * fp, "phi'")
        else:
            beta = sb * sb
            out = _discard_imag(amp * beta * _cubic_second(kind, spec.m, f), "phi''")
    else:
        u = sb * (np.asarray(x, dtype=float) - spec.x0)
        if mode == "degenerate":
            fval, fder = _degenerate_fns(prep[3])
            m_eff = float(spec.m)
            if order == 0:
                out = amp * fval(u)
            elif order == 1:
                out = amp * sb * fder(u)
            else:
                out = amp * sb * sb * _cubic_second(spec.kind, m_eff, fval(u))
        else:
            if order == 0:
                out = amp * np.asarray(elliptic.jacobi(spec.kind, u, spec.m))
            elif order == 1:
                out = amp * sb * np.asarray(elliptic.jacobi_derivative(spec.kind, u, spec.m))
            else:
                f = np.asarray(elliptic.jacobi(spec.kind, u, spec.m))
                out = amp * sb * sb * _cubic_second(spec.kind, spec.m, f)
    out = np.asarray(out)
    return float(out) if scalar else out


def evaluate(spec: SolutionSpec, x):
    """phi(x) on [0, L]."""
    ensure_pole_free(spec)
    return _eval_raw(spec, x, 0)


def evaluate_derivative(spec: SolutionSpec, x):
    """phi'(x) on [0, L]."""
    ensure_pole_free(spec)
    return _eval_raw(spec, x, 1)


def evaluate_second_derivative(spec: SolutionSpec, x):
    ensure_pole_free(spec)
    return _eval_raw(spec, x, 2)


def nlse_residual(spec: SolutionSpec, xs) -> float:
    """max |-phi'' + g phi^3 - E phi| over the sample points."""
    ensure_pole_free(spec)
    xs = np.asarray(xs, dtype=float)
    phi = _eval_raw(spec, xs, 0)
    phi2 = _eval_raw(spec, xs, 2)
    res = -phi2 + spec.g * phi ** 3 - spec.E * phi
    return float(np.max(np.abs(res)))


def norm_squared(spec: SolutionSpec, abstol: float = 1e-10) -> float:
    """integral of phi^2 over [0, L] by adaptive nested-Gauss refinement."""
    ensure_pole_free(spec)
    return integrate(lambda xs: _eval_raw(spec, xs, 0) ** 2, 0.0, spec.ring.L, abstol=abstol)


def scaling_family(spec: SolutionSpec, n: int):
    """Period-shift rescaling: new solution at g -> N lam^2 g, E -> lam^2 E.

    lam_n = 1 + T n / (sqrt(beta) L); the rescaled, renormalized solution
    satisfies the same delta condition with v -> lam_n v (or v' -> v'/lam_n).
    Returns (new_spec, g_new, lam_n, N).
    """
    if spec.branch != "real":
        raise DomainViolation("scaling family is defined for real modulus")
    if n < 0 or int(n) != n:
        raise DomainViolation("period shift count must be a non-negative integer")
    prep = _prepare(spec)
    if prep[0] != "regular":
        raise DomainViolation("scaling family needs a non-degenerate modulus")
    sb = prep[2]
    L = spec.ring.L
    T = elliptic.period(spec.kind, spec.m)
    lam = 1.0 + T * n / (sb * L)
    if n == 0:
        return spec, spec.g, 1.0, 1.0
    # N = int_0^L phi(lam x)^2 dx = (1/lam) int_0^{lam L} phi^2
    N = integrate(lambda xs: _eval_raw(spec, xs, 0) ** 2, 0.0, lam * L, abstol=1e-11) / lam
    g_new = N * lam * lam * spec.g
    new = SolutionSpec(
        kind=spec.kind,
        E=lam * lam * spec.E,
        m=spec.m,
        x0=spec.x0 / lam,
        ring=RingConfig(g=g_new),
    )
    ensure_pole_free(new)
    return new, g_new, lam, N
