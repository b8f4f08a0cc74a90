"""Point-interaction boundary conditions and the maps between their charts.

The general real condition is a unit-determinant 2x2 matrix acting on
(phi, phi') across the defect.  Its four zero-entry subsets A-D, and the
two-parameter delta / delta-prime charts, all select the same eigenfunction
set; the maps below convert between them for a given endpoint trace.

Residuals are always (left side - right side) of the defining equations, in
their displayed order.  Dirichlet / Neumann limits are carried as infinite
v (resp. v'), and the corresponding residual swaps in the clamped condition
instead of multiplying by the infinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DerivativeVanishes, DomainViolation, UnreachableSubset
from .solutions import SolutionSpec, evaluate, evaluate_derivative

_DEGEN_TOL = 1e-12


@dataclass(frozen=True)
class GeneralBC:
    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        if abs(det - 1.0) > 1e-12:
            raise DomainViolation(f"boundary matrix determinant {det} != 1")


@dataclass(frozen=True)
class DeltaBC:
    """t phi(0) - phi(L) = 0;  phi'(0) - t phi'(L) = v phi(0).

    v = +-inf is the Dirichlet limit (phi pinned to zero at the defect).
    """
    t: float
    v: float

    @property
    def dirichlet(self) -> bool:
        return math.isinf(self.v)


@dataclass(frozen=True)
class DeltaPrimeBC:
    """t' phi(0) - phi(L) = v' phi'(L);  phi'(0) - t' phi'(L) = 0.

    v' = +-inf is the Neumann limit (phi' pinned to zero at the defect).
    """
    t: float
    v: float

    @property
    def neumann(self) -> bool:
        return math.isinf(self.v)


@dataclass(frozen=True)
class SubsetBC:
    """One of the zero-entry families A (a=0), B (b=0), C (c=0), D (d=0)."""
    subset: str
    p: float  # A: b_A, B: a_B, C: a_C, D: a_D
    q: float  # A: d_A, B: c_B, C: b_C, D: b_D

    def matrix(self) -> GeneralBC:
        if self.subset == "A":
            return GeneralBC(0.0, self.p, -1.0 / self.p, self.q)
        if self.subset == "B":
            return GeneralBC(self.p, 0.0, self.q, 1.0 / self.p)
        if self.subset == "C":
            return GeneralBC(self.p, self.q, 0.0, 1.0 / self.p)
        if self.subset == "D":
            return GeneralBC(self.p, self.q, -1.0 / self.q, 0.0)
        raise DomainViolation(f"unknown subset {self.subset!r}")


@dataclass(frozen=True)
class TraceValues:
    phi0: float
    phiL: float
    dphi0: float
    dphiL: float

    def scale(self) -> float:
        return max(abs(self.phi0), abs(self.dphi0))


def trace(spec: SolutionSpec) -> TraceValues:
    """One-sided limits of phi and phi' at the defect (x -> 0+ and x -> L-)."""
    L = spec.ring.L
    import numpy as np
    xs = np.array([0.0, L])
    vals = evaluate(spec, xs)
    dvals = evaluate_derivative(spec, xs)
    return TraceValues(float(vals[0]), float(vals[1]), float(dvals[0]), float(dvals[1]))


def residual_delta(bc: DeltaBC, tr: TraceValues):
    if bc.dirichlet:
        return bc.t * tr.phi0 - tr.phiL, tr.phi0
    r1 = bc.t * tr.phi0 - tr.phiL
    r2 = tr.dphi0 - bc.t * tr.dphiL - bc.v * tr.phi0
    return r1, r2


def residual_delta_prime(bc: DeltaPrimeBC, tr: TraceValues):
    if bc.neumann:
        return tr.dphi0 - bc.t * tr.dphiL, tr.dphiL
    r1 = bc.t * tr.phi0 - tr.phiL - bc.v * tr.dphiL
    r2 = tr.dphi0 - bc.t * tr.dphiL
    return r1, r2


def residual_general(bc: GeneralBC, tr: TraceValues):
    r1 = tr.phiL - (bc.a * tr.phi0 + bc.b * tr.dphi0)
    r2 = tr.dphiL - (bc.c * tr.phi0 + bc.d * tr.dphi0)
    return r1, r2


def residual_subset(bc: SubsetBC, tr: TraceValues):
    return residual_general(bc.matrix(), tr)


class SubsetMap(dict):
    """Mapping subset letter -> SubsetBC; unreachable entries raise on access."""

    def __init__(self, entries, unreachable):
        super().__init__(entries)
        self.unreachable = dict(unreachable)

    def __missing__(self, key):
        if key in self.unreachable:
            raise UnreachableSubset(key, self.unreachable[key])
        raise KeyError(key)


def map_to_subsets(bc: GeneralBC, mu: float, scale: float = 1.0) -> SubsetMap:
    """Parameter pairs of the four zero-entry subsets for trace ratio mu = phi0/phi0'.

    Subsets whose construction divides by a vanishing quantity (|.| below
    1e-12 of the trace scale) are flagged unreachable instead of returned.
    """
    tol = _DEGEN_TOL * max(scale, 1.0)
    entries, unreachable = {}, {}
    b_a = bc.b + bc.a * mu
    d_c = bc.d + bc.c * mu
    if abs(b_a) > tol:
        entries["A"] = SubsetBC("A", b_a, bc.d + bc.c * mu + mu / b_a)
    else:
        unreachable["A"] = "b + a*mu vanished"
    if abs(mu) <= tol:
        unreachable["B"] = "mu vanished"
    elif abs(b_a) <= tol:
        unreachable["B"] = "b + a*mu vanished"
    else:
        entries["B"] = SubsetBC("B", bc.a + bc.b / mu, bc.c + bc.d / mu - 1.0 / b_a)
    if abs(d_c) > tol:
        entries["C"] = SubsetBC("C", 1.0 / d_c, b_a - mu / d_c)
    else:
        unreachable["C"] = "d + c*mu vanished"
    if abs(mu) <= tol:
        unreachable["D"] = "mu vanished"
    elif abs(d_c) <= tol:
        unreachable["D"] = "d + c*mu vanished"
    else:
        entries["D"] = SubsetBC("D", bc.a + bc.b / mu + 1.0 / d_c, -mu / d_c)
    return SubsetMap(entries, unreachable)


def map_delta_to_delta_prime(bc: DeltaBC, tr: TraceValues) -> DeltaPrimeBC:
    """t' = t + v phi(0)/phi'(L), v' = v (phi(0)/phi'(L))^2."""
    if bc.dirichlet:
        raise DerivativeVanishes("Dirichlet limit has no finite delta-prime image")
    if abs(tr.dphiL) <= _DEGEN_TOL:
        raise DerivativeVanishes(f"phi'(L) = {tr.dphiL} below tolerance")
    ratio = tr.phi0 / tr.dphiL
    return DeltaPrimeBC(bc.t + bc.v * ratio, bc.v * ratio * ratio)


def delta_from_trace(tr: TraceValues) -> DeltaBC:
    """The unique (t, v) chart satisfied by this trace."""
    if abs(tr.phi0) <= _DEGEN_TOL * max(1.0, tr.scale()):
        raise DerivativeVanishes("phi(0) ~ 0: delta chart singular (Dirichlet-like trace)")
    t = tr.phiL / tr.phi0
    v = (tr.dphi0 - t * tr.dphiL) / tr.phi0
    return DeltaBC(t, v)


def delta_prime_from_trace(tr: TraceValues) -> DeltaPrimeBC:
    """The unique (t', v') chart satisfied by this trace."""
    if abs(tr.dphiL) <= _DEGEN_TOL * max(1.0, tr.scale()):
        raise DerivativeVanishes("phi'(L) ~ 0: delta-prime chart singular (Neumann-like trace)")
    t = tr.dphi0 / tr.dphiL
    v = (t * tr.phi0 - tr.phiL) / tr.dphiL
    return DeltaPrimeBC(t, v)
