"""Schwarzian derivative, its shift identity, the regular-singular series
solver for S{f, z^n} = -sigma, and end classification.

Conventions.  For meromorphic f, g the Schwarzian of f with respect to g is
the quadratic differential

    S{f,g} = [ (df/dg)^{-1} d^3f/dg^3 - (3/2)(df/dg)^{-2} (d^2f/dg^2)^2 ] dg^2,

whose dz^2 coefficient in a chart equals s(f)(z) - s(g)(z) with
s(u) = u'''/u' - (3/2)(u''/u')^2.  Both routes are implemented; the jet route
follows the chain-rule definition, the s-difference route serves as an
independent oracle in tests.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .expr import (
    ExprError,
    Jet,
    LaurentSeries,
    MeroExpr,
    SingularPoint,
    ZVAR,
    as_expr,
    differentiate,
    div,
    eval_jet,
    ipow,
    is_constant_expr,
    laurent,
    mul,
    sub,
)


class DegenerateData(ExprError):
    pass


class ResonanceError(ExprError):
    pass


class BadPole(ExprError):
    pass


@dataclass(frozen=True)
class QuadDifferential:
    """A quadratic differential sigma = coeff(z) dz^2 on a chart."""

    coeff: MeroExpr

    def at(self, z: complex) -> complex:
        return eval_jet(self.coeff, z, 0).value

    def __add__(self, other: "QuadDifferential") -> "QuadDifferential":
        return QuadDifferential(self.coeff + other.coeff)

    def scale(self, c) -> "QuadDifferential":
        return QuadDifferential(mul(as_expr(c), self.coeff))


def _dg_jet(x: Jet, g: Jet) -> Jet:
    """Jet of dx/dg from jets of x and g at the same center (order drops by 1)."""
    k = x.order
    dx = Jet(x.center, x.coeffs[1:] * np.arange(1, k + 1))
    dg = Jet(g.center, g.coeffs[1: ] * np.arange(1, k + 1))
    return dx / dg


def schwarzian_jet_at(f: MeroExpr, g, z: complex) -> complex:
    """dz^2 coefficient of S{f,g} at z via the chain-rule jet route.

    g may be a MeroExpr or a precomputed order-4 Jet at z.  f may be any
    object with a ``jet(z, k)`` method or a MeroExpr.
    """
    jf = f.jet(z, 4) if hasattr(f, "jet") else eval_jet(f, z, 4)
    jg = g if isinstance(g, Jet) else eval_jet(g, z, 4)
    gp = jg.coeffs[1]
    if gp == 0:
        raise SingularPoint("critical point of g")
    u1 = _dg_jet(jf, jg)            # df/dg, order 3
    u2 = _dg_jet(u1, Jet(z, jg.coeffs[:4]))   # d2f/dg2, order 2
    u3 = _dg_jet(u2, Jet(z, jg.coeffs[:3]))   # d3f/dg3, order 1
    a1, a2, a3 = u1.value, u2.value, u3.value
    if a1 == 0:
        raise SingularPoint("df/dg vanishes; critical point mismatch")
    return (a3 / a1 - 1.5 * (a2 / a1) ** 2) * gp ** 2


def schwarzian_s_at(f: MeroExpr, z: complex) -> complex:
    """s(f)(z) = f'''/f' - (3/2)(f''/f')^2 from a single order-3 jet."""
    j = f.jet(z, 3) if hasattr(f, "jet") else eval_jet(f, z, 3)
    fp = j.coeffs[1]
    if fp == 0:
        raise SingularPoint("critical point of f")
    fpp = 2.0 * j.coeffs[2]
    fppp = 6.0 * j.coeffs[3]
    return fppp / fp - 1.5 * (fpp / fp) ** 2


def schwarzian(f: MeroExpr, g: MeroExpr) -> QuadDifferential:
    """Symbolic S{f,g} as a quadratic differential (chain rule through d/dg)."""
    if is_constant_expr(f) or is_constant_expr(g):
        raise DegenerateData("Schwarzian of constant data")
    fp = differentiate(f)
    gp = differentiate(g)
    u1 = div(fp, gp)
    u2 = div(differentiate(u1), gp)
    u3 = div(differentiate(u2), gp)
    coeff = mul(sub(div(u3, u1), mul(as_expr(1.5), ipow(div(u2, u1), 2))), ipow(gp, 2))
    return QuadDifferential(coeff)


def schwarzian_shift(q: QuadDifferential, n: int, inverse: bool = False) -> QuadDifferential:
    """S{f, z^n} = S{f, z} + (n^2-1)/(2 z^2) dz^2; inverse undoes the shift."""
    if n < 1:
        raise ValueError("n must be >= 1")
    c = (n * n - 1) / 2.0
    if inverse:
        c = -c
    return QuadDifferential(q.coeff + mul(as_expr(c), ipow(ZVAR, -2)))


# ---------------------------------------------------------------------------
# Series solver
# ---------------------------------------------------------------------------

@dataclass
class HalfPowerSeries:
    """z^offset * (c_0 + c_1 z + ...) with offset an exact half-integer,
    stored as numerator over 2."""

    offset_num: int          # offset = offset_num / 2
    coeffs: np.ndarray

    def eval(self, z: complex, branch: int = 0) -> complex:
        acc = 0j
        for c in self.coeffs[::-1]:
            acc = acc * z + c
        lg = cmath.log(z) + 2j * math.pi * branch
        return acc * cmath.exp(0.5 * self.offset_num * lg)


@dataclass
class SchwarzianSolution:
    """Local solution f of S{f, z^n} = -sigma with f = z^n (1 + O(z)).

    When sigma carries the admissible double pole (k^2-n^2)/(2 z^2), the
    effective multiplicity is k and f = z^k (1 + O(z)).
    """

    n: int                        # effective local multiplicity
    p1: HalfPowerSeries
    p2: HalfPowerSeries
    f_series: LaurentSeries
    truncation: int
    a: np.ndarray = field(repr=False, default=None)
    b: np.ndarray = field(repr=False, default=None)


def _sigma_as_series(sigma, N: int) -> LaurentSeries:
    if isinstance(sigma, LaurentSeries):
        return sigma
    coeff = sigma.coeff if isinstance(sigma, QuadDifferential) else as_expr(sigma)
    return laurent(coeff, 0j, N + 4)


def _recurse(alpha_num: int, mult: int, s_reg: dict, N: int, gauge_zero_at: int | None):
    """Coefficients c_1..c_N of p = z^(alpha_num/2) (1 + sum c_j z^j) solving
    p'' + (-sigma_reg/2 - (mult^2-1)/(4 z^2)) p = 0.

    s_reg maps exponents >= -1 to coefficients of sigma_reg.  gauge_zero_at
    marks the resonant index where the free coefficient is set to zero."""
    c = np.zeros(N + 1, dtype=complex)
    c[0] = 1.0
    alpha = alpha_num / 2.0
    for J in range(1, N + 1):
        dj = (alpha + J) * (alpha + J - 1) - (mult * mult - 1) / 4.0
        rhs = 0.5 * sum(s_reg.get(J - 2 - j, 0j) * c[j] for j in range(J))
        if gauge_zero_at is not None and J == gauge_zero_at:
            scale = max(1.0, max(abs(v) for v in s_reg.values()) if s_reg else 1.0)
            if abs(rhs) > 1e-9 * scale:
                raise BadPole(
                    f"logarithmic obstruction at order {J}: the expansion of "
                    f"sigma is incompatible with a power-series solution")
            c[J] = 0.0
            continue
        if abs(dj) < 1e-12:
            raise ResonanceError(f"unexpected resonance at index {J}")
        c[J] = rhs / dj
    return c


def solve_schwarzian_series(sigma, n: int, N: int = 24) -> SchwarzianSolution:
    """Solve S{f, z^n} = -sigma near 0 by the p'' + (q/2) p = 0 recursion.

    sigma may be a QuadDifferential, a MeroExpr coefficient, or a
    LaurentSeries at 0.  It must be holomorphic at 0, or have a pole of order
    at most 2 whose z^-2 coefficient is (k^2 - n^2)/2 for an integer k >= 2
    (the end is then solved with multiplicity k).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    s = _sigma_as_series(sigma, N)
    if s.is_zero:
        s_map = {}
        pole2 = 0j
    else:
        if s.order < -2:
            raise BadPole(f"sigma has a pole of order {-s.order} > 2")
        pole2 = s.coefficient(-2)
        s_map = {t: s.coefficient(t) for t in range(-1, N + 1)
                 if s.coefficient(t) != 0}

    if pole2 == 0:
        mult = n
    else:
        ksq = 2 * pole2 + n * n
        k = math.sqrt(abs(ksq))
        if abs(ksq.imag) > 1e-8 or abs(k - round(k)) > 1e-8 or round(k) < 2:
            raise BadPole(
                f"z^-2 coefficient {pole2} is not (k^2-n^2)/2 for integer k >= 2")
        mult = int(round(k))

    a = _recurse(mult + 1, mult, s_map, N, gauge_zero_at=None)
    b = _recurse(1 - mult, mult, s_map, N, gauge_zero_at=mult)
    p1 = HalfPowerSeries(mult + 1, a)
    p2 = HalfPowerSeries(1 - mult, b)

    num = LaurentSeries(0j, 0, a)
    den = LaurentSeries(0j, 0, b)
    f_series = LaurentSeries(0j, mult, (num / den).coeffs)
    return SchwarzianSolution(n=mult, p1=p1, p2=p2, f_series=f_series,
                              truncation=N, a=a, b=b)


def schwarzian_of_series(f: LaurentSeries, n: int, N: int | None = None) -> LaurentSeries:
    """Series of the dz^2 coefficient of S{f_series, z^n} at 0.

    Used to back-substitute solver output; returns s(f) - (1-n^2)/(2 z^2)."""
    ncoef = N if N is not None else f.ncoeffs
    fp = _series_derivative(f)
    fpp = _series_derivative(fp)
    fppp = _series_derivative(fpp)
    u = fpp / fp
    sf = fppp / fp - (u * u).scale(1.5)
    shift = LaurentSeries(0j, -2, [-(1 - n * n) / 2.0] + [0.0] * (ncoef - 1))
    return sf + shift


def _series_derivative(s: LaurentSeries) -> LaurentSeries:
    if s.is_zero:
        return s
    exps = s.order + np.arange(len(s.coeffs))
    return LaurentSeries(s.center, s.order - 1, s.coeffs * exps)


def mobius_normalize_series(f: LaurentSeries) -> LaurentSeries:
    """Canonical representative of the Moebius orbit of a series of local
    multiplicity n: postcompose with theta in PSL2(C) so that f(0) = 0, the
    z^n coefficient is 1 and the z^(2n) coefficient is 0."""
    if f.is_zero:
        raise ValueError("cannot normalize the zero series")
    g = f
    if g.order < 0:
        g = g.inverse()
    if g.order == 0:
        c0 = g.coefficient(0)
        g = g - LaurentSeries(0j, 0, [c0] + [0.0] * (g.ncoeffs - 1))
        if g.is_zero:
            raise ValueError("series is Moebius-constant")
        if g.order <= 0:
            raise ValueError("series has no positive local multiplicity")
    n = g.order
    g = g.scale(1.0 / g.leading())
    # theta(w) = w / (1 + t w) kills the z^(2n) coefficient with t = coeff(2n)
    t = g.coefficient(2 * n)
    ncoef = g.ncoeffs
    out = g
    if t != 0:
        one = LaurentSeries(0j, 0, [1.0] + [0.0] * (ncoef - 1))
        out = g / (one + g.scale(t))
    return LaurentSeries(0j, out.order, out.coeffs[:ncoef])


def classify_end(sigma_series: LaurentSeries, n: int):
    """Type of a regular end from the expansion of sigma at the puncture.

    Returns ("type1",), ("type2", k) or ("irregular",)."""
    if sigma_series.is_zero or sigma_series.order >= 0:
        return ("type1",)
    if sigma_series.order < -2:
        return ("irregular",)
    ksq = 2 * sigma_series.coefficient(-2) + n * n
    if abs(ksq.imag) > 1e-8 or ksq.real <= 0:
        return ("irregular",)
    k = math.sqrt(ksq.real)
    if abs(k - round(k)) > 1e-8 or round(k) < 2:
        return ("irregular",)
    return ("type2", int(round(k)))
