"""Meromorphic expression trees on a chart, closed under differentiation.

Expressions are immutable.  Three evaluation backends are provided: jets
(truncated Taylor arithmetic at a regular point), Laurent series at a chart
point or at infinity, and branch-tracked evaluation along paths for analytic
continuation of multivalued data (real powers z^mu, logarithms).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np


class ExprError(Exception):
    pass


class SingularPoint(ExprError):
    """Evaluation at a pole, branch point or zero of a required denominator."""


class BranchUnset(ExprError):
    """A real-power node has no branch index fixed."""


class EssentialOrBranch(ExprError):
    """Expansion at this center is not a Laurent series."""


class ParseError(ExprError):
    pass


class _Infinity:
    """Point at infinity on the Riemann sphere (chart-level sentinel)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "inf"


INFTY = _Infinity()


def is_infinity(w) -> bool:
    if w is INFTY:
        return True
    if isinstance(w, complex) and (math.isinf(w.real) or math.isinf(w.imag)):
        return True
    return False


# ---------------------------------------------------------------------------
# Expression nodes
# ---------------------------------------------------------------------------

class MeroExpr:
    """Base node.  Arithmetic operators build trees with light constant folding."""

    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __pow__(self, n):
        if isinstance(n, int):
            return ipow(self, n)
        raise TypeError("use ppow() for non-integer exponents")

    def __neg__(self):
        return mul(Const(-1.0 + 0.0j), self)


@dataclass(frozen=True)
class Const(MeroExpr):
    value: complex

    def __post_init__(self):
        object.__setattr__(self, "value", complex(self.value))


@dataclass(frozen=True)
class Z(MeroExpr):
    pass


@dataclass(frozen=True)
class Add(MeroExpr):
    a: MeroExpr
    b: MeroExpr


@dataclass(frozen=True)
class Sub(MeroExpr):
    a: MeroExpr
    b: MeroExpr


@dataclass(frozen=True)
class Mul(MeroExpr):
    a: MeroExpr
    b: MeroExpr


@dataclass(frozen=True)
class Div(MeroExpr):
    a: MeroExpr
    b: MeroExpr


@dataclass(frozen=True)
class Pow(MeroExpr):
    base: MeroExpr
    n: int


@dataclass(frozen=True)
class PPow(MeroExpr):
    """Principal power base**mu with a fixed branch index.

    Branch k means arg(base) is taken in (-pi + 2*pi*k, pi + 2*pi*k].
    branch=None marks an unset branch; evaluation then raises BranchUnset.
    """

    base: MeroExpr
    mu: float
    branch: int | None = 0


@dataclass(frozen=True)
class Log(MeroExpr):
    arg: MeroExpr
    branch: int | None = 0


ZVAR = Z()


def as_expr(x) -> MeroExpr:
    if isinstance(x, MeroExpr):
        return x
    if isinstance(x, (int, float, complex)):
        return Const(complex(x))
    raise TypeError(f"cannot convert {x!r} to MeroExpr")


def _cval(e):
    return e.value if isinstance(e, Const) else None


def add(a, b):
    a, b = as_expr(a), as_expr(b)
    va, vb = _cval(a), _cval(b)
    if va is not None and vb is not None:
        return Const(va + vb)
    if va == 0:
        return b
    if vb == 0:
        return a
    return Add(a, b)


def sub(a, b):
    a, b = as_expr(a), as_expr(b)
    va, vb = _cval(a), _cval(b)
    if va is not None and vb is not None:
        return Const(va - vb)
    if vb == 0:
        return a
    return Sub(a, b)


def mul(a, b):
    a, b = as_expr(a), as_expr(b)
    va, vb = _cval(a), _cval(b)
    if va is not None and vb is not None:
        return Const(va * vb)
    if va == 0 or vb == 0:
        return Const(0j)
    if va == 1:
        return b
    if vb == 1:
        return a
    return Mul(a, b)


def div(a, b):
    a, b = as_expr(a), as_expr(b)
    va, vb = _cval(a), _cval(b)
    if vb is not None and vb == 0:
        raise ZeroDivisionError("division by constant zero expression")
    if va is not None and vb is not None:
        return Const(va / vb)
    if va == 0:
        return Const(0j)
    if vb == 1:
        return a
    return Div(a, b)


def ipow(base, n: int):
    base = as_expr(base)
    if n == 0:
        return Const(1.0 + 0j)
    if n == 1:
        return base
    v = _cval(base)
    if v is not None:
        return Const(v ** n)
    return Pow(base, n)


def ppow(base, mu: float, branch: int | None = 0):
    base = as_expr(base)
    if float(mu).is_integer():
        return ipow(base, int(mu))
    return PPow(base, float(mu), branch)


def log(arg, branch: int | None = 0):
    return Log(as_expr(arg), branch)


def differentiate(e: MeroExpr) -> MeroExpr:
    """d/dz of the expression; the result is again a MeroExpr."""
    if isinstance(e, Const):
        return Const(0j)
    if isinstance(e, Z):
        return Const(1.0 + 0j)
    if isinstance(e, Add):
        return add(differentiate(e.a), differentiate(e.b))
    if isinstance(e, Sub):
        return sub(differentiate(e.a), differentiate(e.b))
    if isinstance(e, Mul):
        return add(mul(differentiate(e.a), e.b), mul(e.a, differentiate(e.b)))
    if isinstance(e, Div):
        num = sub(mul(differentiate(e.a), e.b), mul(e.a, differentiate(e.b)))
        return div(num, ipow(e.b, 2))
    if isinstance(e, Pow):
        return mul(mul(Const(complex(e.n)), ipow(e.base, e.n - 1)), differentiate(e.base))
    if isinstance(e, PPow):
        return mul(mul(Const(complex(e.mu)), PPow(e.base, e.mu - 1.0, e.branch)),
                   differentiate(e.base))
    if isinstance(e, Log):
        return div(differentiate(e.arg), e.arg)
    raise TypeError(f"unknown node {e!r}")


def is_constant_expr(e: MeroExpr, rng=None, tol=1e-12) -> bool:
    """Probe the derivative at a few generic points; constants fold anyway."""
    if isinstance(e, Const):
        return True
    de = differentiate(e)
    if isinstance(de, Const):
        return abs(de.value) <= tol
    rng = rng or np.random.default_rng(7)
    hits = 0
    for _ in range(12):
        z0 = complex(rng.uniform(0.3, 1.7), rng.uniform(0.2, 1.5))
        try:
            v = eval_at(de, z0)
        except ExprError:
            continue
        hits += 1
        if abs(v) > tol * max(1.0, abs(eval_at(e, z0))):
            return False
    return hits > 0


# ---------------------------------------------------------------------------
# Jets: Taylor-normalized truncated series at a regular point
# ---------------------------------------------------------------------------

def _branch_log(v: complex, branch: int) -> complex:
    if v == 0:
        raise SingularPoint("log/power of zero")
    return cmath.log(v) + 2j * math.pi * branch


class Jet:
    """Value and Taylor coefficients through order k at a fixed center.

    coeffs[j] is the j-th Taylor coefficient (derivative / j!), so arithmetic
    never touches factorials of the order.
    """

    __slots__ = ("center", "coeffs")

    def __init__(self, center: complex, coeffs):
        self.center = complex(center)
        self.coeffs = np.asarray(coeffs, dtype=complex)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def value(self) -> complex:
        return complex(self.coeffs[0])

    def derivative(self, j: int) -> complex:
        """j-th derivative of the underlying function at the center."""
        if j > self.order:
            raise ValueError("jet order too low")
        return complex(self.coeffs[j]) * math.factorial(j)

    @staticmethod
    def constant(v: complex, center: complex, k: int) -> "Jet":
        c = np.zeros(k + 1, dtype=complex)
        c[0] = v
        return Jet(center, c)

    @staticmethod
    def variable(center: complex, k: int) -> "Jet":
        c = np.zeros(k + 1, dtype=complex)
        c[0] = center
        if k >= 1:
            c[1] = 1.0
        return Jet(center, c)

    def __add__(self, o):
        return Jet(self.center, self.coeffs + o.coeffs)

    def __sub__(self, o):
        return Jet(self.center, self.coeffs - o.coeffs)

    def __mul__(self, o):
        k = self.order
        out = np.zeros(k + 1, dtype=complex)
        for j in range(k + 1):
            out[j] = np.dot(self.coeffs[: j + 1], o.coeffs[j::-1])
        return Jet(self.center, out)

    def inverse(self) -> "Jet":
        if self.coeffs[0] == 0:
            raise SingularPoint("jet division by zero value")
        k = self.order
        out = np.zeros(k + 1, dtype=complex)
        out[0] = 1.0 / self.coeffs[0]
        for j in range(1, k + 1):
            out[j] = -out[0] * np.dot(self.coeffs[1: j + 1], out[j - 1:: -1])
        return Jet(self.center, out)

    def __truediv__(self, o):
        return self * o.inverse()

    def ipow(self, n: int) -> "Jet":
        if n == 0:
            return Jet.constant(1.0, self.center, self.order)
        base = self if n > 0 else self.inverse()
        m = abs(n)
        out = base
        for _ in range(m - 1):
            out = out * base
        return out

    def _log1p_tail(self):
        """Series of log(1+u) where u = normalized tail, u(center)=0."""
        k = self.order
        u = self.coeffs.copy()
        u[0] = 0.0
        out = np.zeros(k + 1, dtype=complex)
        term = u.copy()
        for m in range(1, k + 1):
            out += ((-1) ** (m + 1) / m) * term
            if m < k:
                nxt = np.zeros(k + 1, dtype=complex)
                for j in range(k + 1):
                    nxt[j] = np.dot(term[: j + 1], u[j::-1])
                term = nxt
        return out

    @staticmethod
    def _exp_series(v: np.ndarray) -> np.ndarray:
        """exp of a series with v[0]=0."""
        k = len(v) - 1
        out = np.zeros(k + 1, dtype=complex)
        out[0] = 1.0
        # (exp v)' = v' exp v, solved coefficient by coefficient
        for j in range(1, k + 1):
            s = 0j
            for m in range(1, j + 1):
                s += m * v[m] * out[j - m]
            out[j] = s / j
        return out

    def log(self, branch: int = 0) -> "Jet":
        v0 = complex(self.coeffs[0])
        lead = _branch_log(v0, branch)
        norm = Jet(self.center, self.coeffs / v0)
        tail = norm._log1p_tail()
        tail[0] += lead
        return Jet(self.center, tail)

    def ppow(self, mu: float, branch: int = 0) -> "Jet":
        v0 = complex(self.coeffs[0])
        lead = cmath.exp(mu * _branch_log(v0, branch))
        norm = Jet(self.center, self.coeffs / v0)
        tail = mu * norm._log1p_tail()
        return Jet(self.center, lead * Jet._exp_series(tail))


def eval_jet(e: MeroExpr, z0: complex, k: int) -> Jet:
    """Taylor jet of e at a regular point z0 through order k.

    Raises SingularPoint at poles/branch points and BranchUnset when a PPow
    node has no branch index fixed.
    """
    if k < 0:
        raise ValueError("jet order must be >= 0")
    z0 = complex(z0)

    def go(n: MeroExpr) -> Jet:
        if isinstance(n, Const):
            return Jet.constant(n.value, z0, k)
        if isinstance(n, Z):
            return Jet.variable(z0, k)
        if isinstance(n, Add):
            return go(n.a) + go(n.b)
        if isinstance(n, Sub):
            return go(n.a) - go(n.b)
        if isinstance(n, Mul):
            return go(n.a) * go(n.b)
        if isinstance(n, Div):
            return go(n.a) / go(n.b)
        if isinstance(n, Pow):
            return go(n.base).ipow(n.n)
        if isinstance(n, PPow):
            if n.branch is None:
                raise BranchUnset("z^mu with unset branch index")
            return go(n.base).ppow(n.mu, n.branch)
        if isinstance(n, Log):
            if n.branch is None:
                raise BranchUnset("log with unset branch index")
            return go(n.arg).log(n.branch)
        raise TypeError(f"unknown node {n!r}")

    return go(e)


def eval_at(e: MeroExpr, z0: complex) -> complex:
    return eval_jet(e, z0, 0).value


# ---------------------------------------------------------------------------
# Laurent series
# ---------------------------------------------------------------------------

_TRIM_TOL = 1e-13


class LaurentSeries:
    """Truncated Laurent series sum_{j} c_j t^(order+frac+j) in the local variable.

    Local variable is t = z - center for finite centers and t = 1/z at
    infinity.  A zero-to-truncation series has empty coeffs and order None.
    frac is a fractional exponent offset in [0,1); it arises from real powers
    of the variable inside an expression and must cancel to 0 (mod 1) in any
    expansion reported as Laurent.
    """

    __slots__ = ("center", "order", "coeffs", "frac")

    def __init__(self, center, order, coeffs, frac: float = 0.0):
        self.center = center
        k = math.floor(frac + 1e-9)
        frac -= k
        if abs(frac) < 1e-9 or abs(frac - 1.0) < 1e-9:
            frac = 0.0
        order += k
        self.frac = frac
        coeffs = np.asarray(coeffs, dtype=complex)
        scale = np.max(np.abs(coeffs)) if len(coeffs) else 0.0
        lead = 0
        while lead < len(coeffs) and abs(coeffs[lead]) <= _TRIM_TOL * max(scale, 1e-300):
            lead += 1
        if lead == len(coeffs):
            self.order = None
            self.coeffs = np.zeros(0, dtype=complex)
        else:
            self.order = order + lead
            self.coeffs = coeffs[lead:]

    @property
    def is_zero(self) -> bool:
        return self.order is None

    @property
    def ncoeffs(self) -> int:
        return len(self.coeffs)

    def leading(self) -> complex:
        if self.is_zero:
            raise ValueError("zero series has no leading coefficient")
        return complex(self.coeffs[0])

    def coefficient(self, exponent: int) -> complex:
        """Coefficient of t^exponent (0 if outside the retained window)."""
        if self.is_zero:
            return 0j
        j = exponent - self.order
        if 0 <= j < len(self.coeffs):
            return complex(self.coeffs[j])
        return 0j

    def residue(self) -> complex:
        return self.coefficient(-1)

    def eval(self, t: complex) -> complex:
        if self.is_zero:
            return 0j
        acc = 0j
        for j in range(len(self.coeffs) - 1, -1, -1):
            acc = acc * t + self.coeffs[j]
        return acc * t ** self.order

    def _aligned(self, other, n):
        lo = min(self.order, other.order)
        a = np.zeros(n, dtype=complex)
        b = np.zeros(n, dtype=complex)
        ja = self.order - lo
        jb = other.order - lo
        a[ja: ja + min(len(self.coeffs), n - ja)] = self.coeffs[: max(0, n - ja)]
        b[jb: jb + min(len(other.coeffs), n - jb)] = other.coeffs[: max(0, n - jb)]
        return lo, a, b

    def __add__(self, other):
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        if abs(self.frac - other.frac) > 1e-9:
            raise EssentialOrBranch("sum of series with different fractional offsets")
        n = min(self.order + len(self.coeffs), other.order + len(other.coeffs)) \
            - min(self.order, other.order)
        lo, a, b = self._aligned(other, n)
        return LaurentSeries(self.center, lo, a + b, self.frac)

    def __sub__(self, other):
        return self + other.scale(-1.0)

    def scale(self, c):
        if self.is_zero:
            return self
        return LaurentSeries(self.center, self.order, c * self.coeffs, self.frac)

    def __mul__(self, other):
        if self.is_zero or other.is_zero:
            return LaurentSeries(self.center, 0, [])
        n = min(len(self.coeffs), len(other.coeffs))
        out = np.zeros(n, dtype=complex)
        for j in range(n):
            m = min(j + 1, len(self.coeffs))
            for i in range(m):
                if j - i < len(other.coeffs):
                    out[j] += self.coeffs[i] * other.coeffs[j - i]
        return LaurentSeries(self.center, self.order + other.order, out,
                             self.frac + other.frac)

    def inverse(self):
        if self.is_zero:
            raise SingularPoint("inverse of zero series")
        n = len(self.coeffs)
        out = np.zeros(n, dtype=complex)
        out[0] = 1.0 / self.coeffs[0]
        for j in range(1, n):
            out[j] = -out[0] * np.dot(self.coeffs[1: j + 1], out[j - 1:: -1])
        return LaurentSeries(self.center, -self.order, out, -self.frac)

    def __truediv__(self, other):
        return self * other.inverse()

    def ipow(self, n: int):
        if n == 0:
            return LaurentSeries(self.center, 0, [1.0])
        base = self if n > 0 else self.inverse()
        out = base
        for _ in range(abs(n) - 1):
            out = out * base
        return out

    def unit_part(self):
        """(series) / (lead * t^(order+frac)): order-0 series, unit constant term."""
        return LaurentSeries(self.center, 0, self.coeffs / self.coeffs[0])

    def ppow(self, mu: float, branch: int = 0):
        if self.is_zero:
            raise SingularPoint("zero series under real power")
        target = (self.order + self.frac) * mu
        lead = cmath.exp(mu * _branch_log(self.leading(), branch))
        u = self.unit_part()
        logu = u._log_tail()
        expo = Jet._exp_series(mu * logu)
        return LaurentSeries(self.center, math.floor(target + 1e-9), lead * expo,
                             target - math.floor(target + 1e-9))

    def _log_tail(self):
        c = self.coeffs / self.coeffs[0]
        c0 = c.copy()
        c0[0] = 0.0
        n = len(c)
        out = np.zeros(n, dtype=complex)
        term = c0.copy()
        for m in range(1, n):
            out += ((-1) ** (m + 1) / m) * term
            if m < n - 1:
                nxt = np.zeros(n, dtype=complex)
                for j in range(n):
                    nxt[j] = np.dot(term[: j + 1], c0[j::-1])
                term = nxt
        return out

    def log(self, branch: int = 0):
        if self.is_zero or self.order != 0 or self.frac != 0.0:
            raise EssentialOrBranch("log of a series with nonzero valuation")
        tail = self._log_tail()
        tail[0] += _branch_log(self.leading(), branch)
        return LaurentSeries(self.center, 0, tail)

    def __repr__(self):
        if self.is_zero:
            return "LaurentSeries(0)"
        return f"LaurentSeries(center={self.center}, order={self.order}, coeffs={self.coeffs})"


def laurent(e: MeroExpr, center, N: int) -> LaurentSeries:
    """Laurent expansion of e at a finite center or INFTY, keeping N+1 terms
    past the leading order.

    Raises EssentialOrBranch when the expansion is not Laurent there.
    """
    ncoef = N + 1

    def go(n: MeroExpr) -> LaurentSeries:
        if isinstance(n, Const):
            return LaurentSeries(center, 0, [n.value] + [0] * (ncoef - 1))
        if isinstance(n, Z):
            if center is INFTY:
                c = np.zeros(ncoef, dtype=complex)
                c[0] = 1.0
                return LaurentSeries(center, -1, c)
            c = np.zeros(max(ncoef, 2), dtype=complex)
            c[0] = complex(center)
            c[1] = 1.0
            return LaurentSeries(center, 0, c[:max(ncoef, 2)])
        if isinstance(n, Add):
            return go(n.a) + go(n.b)
        if isinstance(n, Sub):
            return go(n.a) - go(n.b)
        if isinstance(n, Mul):
            return go(n.a) * go(n.b)
        if isinstance(n, Div):
            return go(n.a) / go(n.b)
        if isinstance(n, Pow):
            return go(n.base).ipow(n.n)
        if isinstance(n, PPow):
            if n.branch is None:
                raise BranchUnset("z^mu with unset branch index")
            return go(n.base).ppow(n.mu, n.branch)
        if isinstance(n, Log):
            if n.branch is None:
                raise BranchUnset("log with unset branch index")
            return go(n.arg).log(n.branch)
        raise TypeError(f"unknown node {n!r}")

    out = go(e)
    if not out.is_zero and out.frac != 0.0:
        raise EssentialOrBranch(
            f"expansion has fractional exponent offset {out.frac}")
    return out


def form_order_at(coeff_expr: MeroExpr, point, N: int = 8) -> int:
    """Order of the 1-form (coeff_expr) dz at a point of the sphere.

    At infinity the local order includes the -2 shift from dz = -w^{-2} dw.
    """
    s = laurent(coeff_expr, point, N)
    if s.is_zero:
        raise ExprError("form vanishes to truncation order; raise N")
    if point is INFTY:
        return s.order - 2
    return s.order


# ---------------------------------------------------------------------------
# Branch-tracked evaluation along paths
# ---------------------------------------------------------------------------

class BranchState:
    """Continuous argument bookkeeping for PPow/Log nodes along a path."""

    def __init__(self):
        self.args = {}      # id(node) -> continuous arg of the node's base
        self.last = {}      # id(node) -> last base value

    def copy(self):
        s = BranchState()
        s.args = dict(self.args)
        s.last = dict(self.last)
        return s


def eval_continued(e: MeroExpr, z: complex, state: BranchState) -> complex:
    """Evaluate with branch continuity relative to the state; updates state.

    The first call seeds each multivalued node with its stored branch index.
    Successive calls must move z in steps small enough that no base value
    crosses its branch cut by more than pi in argument.
    """
    memo = {}

    def go(n: MeroExpr) -> complex:
        key = id(n)
        if key in memo:
            return memo[key]
        if isinstance(n, Const):
            v = n.value
        elif isinstance(n, Z):
            v = z
        elif isinstance(n, Add):
            v = go(n.a) + go(n.b)
        elif isinstance(n, Sub):
            v = go(n.a) - go(n.b)
        elif isinstance(n, Mul):
            v = go(n.a) * go(n.b)
        elif isinstance(n, Div):
            d = go(n.b)
            if d == 0:
                raise SingularPoint("path through pole")
            v = go(n.a) / d
        elif isinstance(n, Pow):
            v = go(n.base) ** n.n
        elif isinstance(n, (PPow, Log)):
            base = go(n.base if isinstance(n, PPow) else n.arg)
            if base == 0:
                raise SingularPoint("path through branch point")
            if key not in self_args:
                k0 = n.branch
                if k0 is None:
                    raise BranchUnset("continuation requires a starting branch")
                self_args[key] = cmath.phase(base) + 2 * math.pi * k0
            else:
                prev = self_last[key]
                delta = cmath.phase(base / prev)
                self_args[key] += delta
            self_last[key] = base
            lg = math.log(abs(base)) + 1j * self_args[key]
            v = cmath.exp(n.mu * lg) if isinstance(n, PPow) else lg
        else:
            raise TypeError(f"unknown node {n!r}")
        memo[key] = v
        return v

    self_args = state.args
    self_last = state.last
    return go(e)


def continue_along(e: MeroExpr, path: np.ndarray, state: BranchState | None = None):
    """Values of e along the path with continuous branch tracking.

    Returns (values, final_state)."""
    st = state or BranchState()
    vals = np.empty(len(path), dtype=complex)
    for i, z in enumerate(path):
        vals[i] = eval_continued(e, complex(z), st)
    return vals, st


def invert_chart(e: MeroExpr) -> MeroExpr:
    """Substitute z -> 1/z, mapping an expression to the chart at infinity."""
    if isinstance(e, Const):
        return e
    if isinstance(e, Z):
        return div(Const(1.0 + 0j), ZVAR)
    if isinstance(e, Add):
        return add(invert_chart(e.a), invert_chart(e.b))
    if isinstance(e, Sub):
        return sub(invert_chart(e.a), invert_chart(e.b))
    if isinstance(e, Mul):
        return mul(invert_chart(e.a), invert_chart(e.b))
    if isinstance(e, Div):
        return div(invert_chart(e.a), invert_chart(e.b))
    if isinstance(e, Pow):
        return ipow(invert_chart(e.base), e.n)
    if isinstance(e, PPow):
        return PPow(invert_chart(e.base), e.mu, e.branch)
    if isinstance(e, Log):
        return Log(invert_chart(e.arg), e.branch)
    raise TypeError(f"unknown node {e!r}")


# ---------------------------------------------------------------------------
# Plain-text expression grammar (scene files)
# ---------------------------------------------------------------------------

_TOKEN_CHARS = set("+-*/^(){}")


def _tokenize(s: str):
    toks = []
    i = 0
    while i < len(s):
        c = s[i]
        if c.isspace():
            i += 1
            continue
        if c in _TOKEN_CHARS:
            toks.append(c)
            i += 1
            continue
        if c.isdigit() or c == ".":
            j = i
            while j < len(s) and (s[j].isdigit() or s[j] == "."):
                j += 1
            if j < len(s) and s[j] in "iI":
                toks.append(("num", complex(0, float(s[i:j]))))
                j += 1
            else:
                toks.append(("num", complex(float(s[i:j]))))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < len(s) and (s[j].isalnum() or s[j] == "_"):
                j += 1
            toks.append(("name", s[i:j]))
            i = j
            continue
        raise ParseError(f"unexpected character {c!r} in expression")
    return toks


class _Parser:
    def __init__(self, toks, params):
        self.toks = toks
        self.pos = 0
        self.params = params or {}

    def peek(self):
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def take(self, want=None):
        t = self.peek()
        if t is None:
            raise ParseError("unexpected end of expression")
        if want is not None and t != want:
            raise ParseError(f"expected {want!r}, got {t!r}")
        self.pos += 1
        return t

    def parse_expr(self):
        node = self.parse_term()
        while self.peek() in ("+", "-"):
            op = self.take()
            rhs = self.parse_term()
            node = add(node, rhs) if op == "+" else sub(node, rhs)
        return node

    def parse_term(self):
        node = self.parse_factor()
        while self.peek() in ("*", "/"):
            op = self.take()
            rhs = self.parse_factor()
            node = mul(node, rhs) if op == "*" else div(node, rhs)
        return node

    def parse_factor(self):
        if self.peek() == "-":
            self.take()
            return mul(Const(-1 + 0j), self.parse_factor())
        node = self.parse_atom()
        while self.peek() == "^":
            self.take()
            node = self.parse_exponent(node)
        return node

    def parse_exponent(self, base):
        t = self.peek()
        if t == "{":
            self.take()
            name = self.take()
            if not (isinstance(name, tuple) and name[0] == "name"):
                raise ParseError("expected parameter name in ^{...}")
            self.take("}")
            if name[1] not in self.params:
                raise ParseError(f"unbound parameter {name[1]!r}")
            return ppow(base, float(self.params[name[1]]))
        paren = False
        if t == "(":
            self.take()
            paren = True
            t = self.peek()
        neg = False
        if t == "-":
            self.take()
            neg = True
        t = self.take()
        if isinstance(t, tuple) and t[0] == "num":
            v = t[1]
            if v.imag != 0:
                raise ParseError("imaginary exponent not supported")
            x = -v.real if neg else v.real
            if paren:
                self.take(")")
            if float(x).is_integer():
                return ipow(base, int(x))
            return ppow(base, x)
        if isinstance(t, tuple) and t[0] == "name":
            if t[1] not in self.params:
                raise ParseError(f"unbound parameter {t[1]!r}")
            x = float(self.params[t[1]])
            if paren:
                self.take(")")
            return ppow(base, -x if neg else x)
        raise ParseError(f"bad exponent token {t!r}")

    def parse_atom(self):
        t = self.take()
        if t == "(":
            node = self.parse_expr()
            self.take(")")
            return node
        if isinstance(t, tuple) and t[0] == "num":
            return Const(t[1])
        if isinstance(t, tuple) and t[0] == "name":
            name = t[1]
            if name == "z":
                return ZVAR
            if name in ("i", "I"):
                return Const(1j)
            if name == "log":
                self.take("(")
                node = self.parse_expr()
                self.take(")")
                return Log(node)
            if name in self.params:
                return Const(complex(self.params[name]))
            raise ParseError(f"unknown name {name!r}")
        raise ParseError(f"unexpected token {t!r}")


def parse_expr(s: str, params: dict | None = None) -> MeroExpr:
    """Parse the scene-file expression grammar, e.g. ``(1 - z^4)^-1``."""
    p = _Parser(_tokenize(s), params)
    node = p.parse_expr()
    if p.peek() is not None:
        raise ParseError(f"trailing tokens at {p.pos}")
    return node


def _fmt_complex(v: complex) -> str:
    def fr(x):
        return repr(int(x)) if float(x).is_integer() else repr(x)
    if v.imag == 0:
        return fr(v.real) if v.real >= 0 else f"(0 - {fr(-v.real)})"
    if v.real == 0:
        if v.imag == 1:
            return "i"
        return f"{fr(v.imag)}i" if v.imag > 0 else f"(0 - {fr(-v.imag)}i)"
    im = f"{fr(abs(v.imag))}i" if abs(v.imag) != 1 else "i"
    sign = "+" if v.imag > 0 else "-"
    return f"({fr(v.real)} {sign} {im})"


def to_string(e: MeroExpr) -> str:
    """Print an expression in the scene-file grammar; parse(to_string(e)) == e
    up to constant formatting."""
    def prec(n):
        if isinstance(n, (Add, Sub)):
            return 1
        if isinstance(n, (Mul, Div)):
            return 2
        if isinstance(n, (Pow, PPow)):
            return 3
        return 4

    def go(n, parent_prec):
        if isinstance(n, Const):
            s = _fmt_complex(n.value)
        elif isinstance(n, Z):
            s = "z"
        elif isinstance(n, Add):
            s = f"{go(n.a, 1)} + {go(n.b, 1)}"
        elif isinstance(n, Sub):
            s = f"{go(n.a, 1)} - {go(n.b, 2)}"
        elif isinstance(n, Mul):
            s = f"{go(n.a, 2)}*{go(n.b, 2)}"
        elif isinstance(n, Div):
            s = f"{go(n.a, 2)}/{go(n.b, 3)}"
        elif isinstance(n, Pow):
            s = f"{go(n.base, 4)}^{n.n}" if n.n >= 0 else f"{go(n.base, 4)}^({n.n})"
        elif isinstance(n, PPow):
            s = f"{go(n.base, 4)}^{n.mu}" if n.mu >= 0 else f"{go(n.base, 4)}^({n.mu})"
        elif isinstance(n, Log):
            s = f"log({go(n.arg, 0)})"
        else:
            raise TypeError(f"unknown node {n!r}")
        if prec(n) < parent_prec:
            s = f"({s})"
        return s

    return go(e, 0)
