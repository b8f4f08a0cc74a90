"""Jacobi elliptic functions and complete elliptic integrals.

Everything is evaluated through a descending Landen transformation whose
scale factors come from the AGM-type recurrence k1 = (1-k')/(1+k').  The
same recurrence runs in complex arithmetic (principal-branch square roots)
for a modulus on the unit circle, which is the only complex case admitted.
No external special-function library is used; accuracy is set by the
quadratically convergent descent and is near machine precision.

The six supported kinds are sn, cn, dn and the pole-bearing ns, cs, ds.
Circle modulus is accepted for sn and ns only.
"""

from __future__ import annotations

import cmath
import math
from functools import lru_cache

import numpy as np

from .errors import InvalidModulus, PoleProximity

JACOBI_KINDS = ("sn", "cn", "dn", "ns", "cs", "ds")
DIVERGENT_KINDS = ("ns", "cs", "ds")

_CIRCLE_TOL = 1e-12
_POLE_TOL = 1e-9
_CHAIN_FLOOR = 1e-24


def circle_modulus(theta: float) -> complex:
    """Unit-circle modulus e^{i theta}, theta in (0, pi)."""
    if not 0.0 < theta < math.pi:
        raise InvalidModulus(f"circle angle must lie in (0, pi), got {theta}")
    return complex(math.cos(theta), math.sin(theta))


def modulus_branch(m) -> str:
    """Classify m as 'real' (0<m<1) or 'circle' (|m|=1, m != +-1)."""
    if isinstance(m, complex) and m.imag != 0.0:
        if abs(abs(m) - 1.0) > _CIRCLE_TOL:
            raise InvalidModulus(f"complex modulus must sit on the unit circle, |m|={abs(m)}")
        if abs(m - 1.0) < _CIRCLE_TOL or abs(m + 1.0) < _CIRCLE_TOL:
            raise InvalidModulus("circle modulus degenerates at m = +-1")
        return "circle"
    mr = m.real if isinstance(m, complex) else float(m)
    if not 0.0 < mr < 1.0:
        raise InvalidModulus(f"real modulus must lie strictly in (0,1), got {mr}")
    return "real"


def _kind_check(kind: str) -> None:
    if kind not in JACOBI_KINDS:
        raise InvalidModulus(f"unknown Jacobi kind {kind!r}")


# ---------------------------------------------------------------------------
# complete integrals (real modulus)

def complete_K(m: float) -> float:
    """Complete elliptic integral of the first kind, parameter convention."""
    if modulus_branch(m) != "real":
        raise InvalidModulus("complete_K is defined on the real branch only")
    m = float(m.real if isinstance(m, complex) else m)
    a, b = 1.0, math.sqrt(1.0 - m)
    for _ in range(64):
        if abs(a - b) <= 2e-16 * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return math.pi / (a + b)


def complete_E(m: float) -> float:
    """Complete elliptic integral of the second kind via the AGM c-sum."""
    if modulus_branch(m) != "real":
        raise InvalidModulus("complete_E is defined on the real branch only")
    m = float(m.real if isinstance(m, complex) else m)
    a, b = 1.0, math.sqrt(1.0 - m)
    terms = [0.5 * m]  # 2^{-1} c_0^2 with c_0 = sqrt(m)
    p = 1.0
    for _ in range(64):
        c = 0.5 * (a - b)
        if abs(c) <= 1e-17:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        p *= 2.0
        terms.append(0.5 * p * c * c)
    return complete_K(m) * (1.0 - math.fsum(terms))


# ---------------------------------------------------------------------------
# Landen descent

@lru_cache(maxsize=4096)
def _landen_chain(m):
    """Descending-Landen factors k1 until the residual modulus is negligible.

    Returns (ks, m_end, scale) with scale = prod(1 + k1).  Works for real m
    in (0,1) and for complex m off the degenerate points; convergence is
    quadratic because Re sqrt(1-m) > 0 keeps |k1| < 1.
    """
    ks = []
    scale = 1.0
    for _ in range(64):
        if abs(m) < _CHAIN_FLOOR:
            break
        kp = cmath.sqrt(1.0 - m) if isinstance(m, complex) else math.sqrt(1.0 - m)
        k1 = (1.0 - kp) / (1.0 + kp)
        ks.append(k1)
        scale *= 1.0 + k1
        m = k1 * k1
    return tuple(ks), m, scale


def _sn_cn_dn(u, m):
    """Core evaluation; u may be a scalar or ndarray, real or complex."""
    branch = modulus_branch(m)
    if branch == "real":
        m = float(m.real if isinstance(m, complex) else m)
        # reduce along the real period so large arguments keep full precision
        T = 4.0 * complete_K(m)
        u = np.asarray(u, dtype=float)
        u = u - T * np.round(u / T)
    else:
        u = np.asarray(u, dtype=complex)
    ks, m_end, scale = _landen_chain(m)
    v = u / scale
    sinv, cosv = np.sin(v), np.cos(v)
    corr = 0.25 * m_end * (v - sinv * cosv)
    sn = sinv - corr * cosv
    cn = cosv + corr * sinv
    dn = 1.0 - 0.5 * m_end * sinv * sinv
    for k1 in reversed(ks):
        s2 = sn * sn
        d = 1.0 + k1 * s2
        sn, cn, dn = (1.0 + k1) * sn / d, cn * dn / d, (1.0 - k1 * s2) / d
    return sn, cn, dn


def _guard_poles(kind, u, m, branch):
    if kind not in DIVERGENT_KINDS:
        return
    if branch == "real":
        two_k = 2.0 * complete_K(m)
        r = np.asarray(u, dtype=float)
        dist = np.abs(r - two_k * np.round(r / two_k))
        if np.any(dist < _POLE_TOL):
            raise PoleProximity(f"{kind} argument within {_POLE_TOL} of a pole")


def _eval_kind(kind, sn, cn, dn, m):
    if kind == "sn":
        return sn
    if kind == "cn":
        return cn
    if kind == "dn":
        return dn
    small = np.abs(sn) < _POLE_TOL
    if np.any(small):
        raise PoleProximity(f"{kind} evaluated at a zero of sn")
    if kind == "ns":
        return 1.0 / sn
    if kind == "cs":
        return cn / sn
    return dn / sn  # ds


def _deriv_kind(kind, sn, cn, dn, m):
    if kind == "sn":
        return cn * dn
    if kind == "cn":
        return -sn * dn
    if kind == "dn":
        return -m * sn * cn
    small = np.abs(sn) < _POLE_TOL
    if np.any(small):
        raise PoleProximity(f"{kind}' evaluated at a zero of sn")
    inv = 1.0 / sn
    if kind == "ns":
        return -(cn * inv) * (dn * inv)
    if kind == "cs":
        return -inv * (dn * inv)
    return -(cn * inv) * inv  # ds


def _restrict_circle(kind, branch):
    if branch == "circle" and kind not in ("sn", "ns"):
        raise InvalidModulus(f"circle modulus is supported for sn and ns only, not {kind}")


def jacobi(kind: str, u, m):
    """Jacobi function of the given kind at argument u and modulus m.

    u may be a scalar or an ndarray; for the circle branch it may be complex.
    Real modulus returns real values, circle modulus complex ones.
    """
    _kind_check(kind)
    branch = modulus_branch(m)
    _restrict_circle(kind, branch)
    _guard_poles(kind, u, m, branch)
    sn, cn, dn = _sn_cn_dn(u, m)
    out = _eval_kind(kind, sn, cn, dn, m)
    if np.isscalar(u) or np.asarray(u).ndim == 0:
        return complex(out) if branch == "circle" else float(out)
    return out


def jacobi_derivative(kind: str, u, m):
    """d/du of the named Jacobi function via the product identities."""
    _kind_check(kind)
    branch = modulus_branch(m)
    _restrict_circle(kind, branch)
    _guard_poles(kind, u, m, branch)
    sn, cn, dn = _sn_cn_dn(u, m)
    out = _deriv_kind(kind, sn, cn, dn, m)
    if np.isscalar(u) or np.asarray(u).ndim == 0:
        return complex(out) if branch == "circle" else float(out)
    return out


def jacobi_second_derivative(kind: str, u, m):
    """d^2/du^2 from the duplication-free cubic identities.

    sn'' = -(1+m) sn + 2m sn^3 and the analogous forms for the other kinds;
    these follow from the squared-function relations alone.
    """
    _kind_check(kind)
    branch = modulus_branch(m)
    _restrict_circle(kind, branch)
    _guard_poles(kind, u, m, branch)
    f = jacobi(kind, u, m)
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


def period(kind: str, m) -> float:
    """Minimal real period: 4K for sn, cn, ns, ds; 2K for dn, cs."""
    _kind_check(kind)
    if modulus_branch(m) != "real":
        raise InvalidModulus("period is defined for the real branch only")
    K = complete_K(m)
    return 2.0 * K if kind in ("dn", "cs") else 4.0 * K
