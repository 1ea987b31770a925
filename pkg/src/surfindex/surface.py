"""Surface descriptions, divisors, framedness and index bounds.

A surface is a genus-0 punctured sphere or a flat torus carrying holomorphic
data: a Weierstrass pair (g, eta), a Bryant pair (f, g), or constant
intrinsic data.  The fundamental divisor assigns -m to an end of order m and
+m to a branch point of order m; the Morse index bound is
(2 h^1(D) - 3)/3 for two-sided surfaces and (h^1(D) - 3)/3 for one-sided
double covers.

End order convention: the end has order m when |z|^(2m) ds^2 extends
positively across the puncture, i.e. the conformal factor has Laurent
leading order exactly -2m.  This is the convention under which the weighted
space, the truncation radii R^(1/(1-m)) and the curvature decay
|K| <= C |z|^(2m+l) are all consistent.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .expr import (
    INFTY,
    ExprError,
    MeroExpr,
    as_expr,
    differentiate,
    form_order_at,
    is_infinity,
    laurent,
)
from .moebius import Mat2, mobius_from_three_points
from .schwarzian import schwarzian


class SurfaceError(Exception):
    pass


class NotAnEnd(SurfaceError):
    pass


class IrregularEnd(SurfaceError):
    pass


class Unsupported(SurfaceError):
    pass


class ContinuationFailure(SurfaceError):
    pass


# ---------------------------------------------------------------------------
# Divisors
# ---------------------------------------------------------------------------

def _point_key(p):
    if is_infinity(p):
        return INFTY
    return complex(p)


class Divisor:
    """Formal integer combination of marked points on the sphere or torus."""

    def __init__(self, entries=()):
        self._d = {}
        for p, m in entries:
            if m == 0:
                continue
            k = _point_key(p)
            self._d[k] = self._d.get(k, 0) + int(m)
        self._d = {k: v for k, v in self._d.items() if v != 0}

    @property
    def entries(self):
        return tuple(sorted(self._d.items(), key=lambda kv: (kv[0] is INFTY,
                            (kv[0].real, kv[0].imag) if kv[0] is not INFTY else (0, 0))))

    def multiplicity(self, p) -> int:
        return self._d.get(_point_key(p), 0)

    @property
    def degree(self) -> int:
        return sum(self._d.values())

    def points(self):
        return tuple(self._d.keys())

    def __ge__(self, other: "Divisor") -> bool:
        pts = set(self._d) | set(other._d)
        return all(self._d.get(p, 0) >= other._d.get(p, 0) for p in pts)

    def __add__(self, other: "Divisor") -> "Divisor":
        return Divisor(list(self._d.items()) + list(other._d.items()))

    def __eq__(self, other) -> bool:
        return isinstance(other, Divisor) and self._d == other._d

    def __repr__(self):
        if not self._d:
            return "Divisor(0)"
        terms = " + ".join(f"{m}*({p})" for p, m in self.entries)
        return f"Divisor({terms})"


# ---------------------------------------------------------------------------
# Surface specification
# ---------------------------------------------------------------------------

@dataclass
class WeierstrassData:
    g: MeroExpr
    eta: MeroExpr
    phase: float = 0.0        # associated-family angle: eta -> e^{i phase} eta

    kind = "weierstrass"


@dataclass
class BryantData:
    f: object                 # MeroExpr or any object with .jet(z, k)
    g: MeroExpr
    sigma: MeroExpr = None    # -S{f,g}; computed symbolically when f is symbolic
    phase: float = 0.0

    kind = "bryant"

    def __post_init__(self):
        if self.sigma is None:
            if not isinstance(self.f, MeroExpr):
                raise ValueError("sigma must be supplied for non-symbolic f")
            self.sigma = schwarzian(self.f, self.g).scale(-1.0).coeff


@dataclass
class IntrinsicData:
    conformal_factor: float = 1.0     # constant e^{2 lambda}
    sigma_const: complex = 0j
    phase: float = 0.0

    kind = "intrinsic"


@dataclass
class SurfaceSpec:
    """Punctured sphere or flat torus with holomorphic surface data."""

    topology: str                       # "sphere" | "torus"
    data: object
    punctures: tuple = ()               # sphere: points of the sphere (may include INFTY)
    marked_points: tuple = ()           # candidate branch points
    lattice: tuple = (1.0 + 0j, 1j)     # torus generators
    sidedness: str = "two"

    def __post_init__(self):
        keys = [_point_key(p) for p in self.punctures]
        if len(set(map(str, keys))) != len(keys):
            raise SurfaceError("punctures must be pairwise distinct")
        self.punctures = tuple(keys)
        self.marked_points = tuple(_point_key(p) for p in self.marked_points)

    @property
    def genus(self) -> int:
        return 0 if self.topology == "sphere" else 1

    def eta_expr(self) -> MeroExpr:
        """Coefficient of dz of the Weierstrass 1-form (phase excluded):
        eta = sigma (dg)^-1 = -S{f,g} (dg)^-1."""
        d = self.data
        if d.kind == "weierstrass":
            return d.eta
        if d.kind == "bryant":
            return d.sigma / differentiate(d.g)
        raise Unsupported("no Weierstrass form for intrinsic data")

    def sigma_expr(self) -> MeroExpr:
        d = self.data
        if d.kind == "weierstrass":
            return d.eta * differentiate(d.g)
        if d.kind == "bryant":
            return d.sigma
        return as_expr(d.sigma_const)


# ---------------------------------------------------------------------------
# Ends, branch points, fundamental divisor
# ---------------------------------------------------------------------------

def metric_order_at(s: SurfaceSpec, p) -> int:
    """Laurent leading order of the conformal factor e^{2 lambda} at p.

    ord = 2 ord_p(eta-form) + 4 min(0, ord_p(g)); infinity handled in the
    w = 1/z chart including the dz Jacobian.
    """
    if s.data.kind == "intrinsic":
        # constant flat data: |dz|^2 becomes |w|^-4 |dw|^2 at infinity
        return -4 if is_infinity(p) else 0
    g = s.data.g
    eta = s.eta_expr()
    o_eta = form_order_at(eta, p)
    gs = laurent(g, p, 8)
    o_g = 0 if gs.is_zero else gs.order
    return 2 * o_eta + 4 * min(0, o_g)


def _order_to_end_order(order: int) -> int:
    if order >= 0:
        raise NotAnEnd("metric extends (or degenerates) at this point")
    if order % 2 != 0:
        raise IrregularEnd(f"metric leading order {order} is odd")
    return -order // 2


def end_order(s: SurfaceSpec, p) -> int:
    """Order m >= 1 of the complete end at puncture p: |z|^(2m) ds^2 extends."""
    return _order_to_end_order(metric_order_at(s, p))


def branch_divisor(s: SurfaceSpec) -> Divisor:
    """Branch points: zeros of sigma of higher multiplicity than dg zeros.

    Candidate locations are the declared marked points; an immersed surface
    returns the empty divisor.
    """
    if s.data.kind == "intrinsic":
        return Divisor()
    g = s.data.g
    dg = differentiate(g)
    sig = s.sigma_expr()
    entries = []
    for p in s.marked_points:
        ssig = laurent(sig, p, 10)
        sdg = laurent(dg, p, 10)
        if ssig.is_zero or sdg.is_zero:
            raise SurfaceError(f"data vanishes to truncation order at {p}")
        o_sig = ssig.order if not is_infinity(p) else ssig.order - 2
        o_dg = sdg.order if not is_infinity(p) else sdg.order - 2
        m = o_sig - o_dg
        if m < 0:
            raise SurfaceError(f"sigma has lower vanishing than dg at {p}")
        if m > 0:
            entries.append((p, m))
    return Divisor(entries)


def fundamental_divisor(s: SurfaceSpec) -> Divisor:
    """D = sum(-m_end P_end) + sum(+m_branch P_branch)."""
    entries = [(p, -end_order(s, p)) for p in s.punctures]
    entries += list(branch_divisor(s).entries)
    return Divisor(entries)


# ---------------------------------------------------------------------------
# h^1(D) and the index bound
# ---------------------------------------------------------------------------

def h1_exact_genus0(D: Divisor, rank_tol: float = 1e-8) -> int:
    """dim of meromorphic 1-forms on the sphere with div >= D, by brute-force
    linear algebra over a rational basis with poles confined to D's points."""
    n_inf = D.multiplicity(INFTY)
    finite = [(p, m) for p, m in D.entries if p is not INFTY]
    # Basis: (z - p)^-j dz for 1 <= j <= -m at poles, z^k dz for 0 <= k <= K,
    # K large enough for every polynomial part allowed at infinity.
    basis = []
    for p, m in finite:
        for j in range(1, -m + 1):
            basis.append(("pole", p, j))
    K = max(0, -n_inf - 2)
    for k in range(K + 1):
        basis.append(("poly", None, k))

    rows = []
    # Condition at infinity: ord_inf(omega) >= n_inf.  In w = 1/z the form
    # z^k dz = -w^(-k-2) dw and (z-p)^(-j) dz = -w^(j-2) (1-pw)^(-j) dw.
    # Constrain every coefficient of w^t with t < n_inf.
    lowest = min(-K - 2, -1)
    for t in range(lowest, n_inf):
        row = []
        for kind, p, j in basis:
            if kind == "poly":
                row.append(-1.0 if t == -(j + 2) else 0.0)
            else:
                i = t - (j - 2)
                row.append(0.0 if i < 0 else -_binom_neg(j, i) * (p ** i))
        rows.append(row)
    # Zero conditions at points with positive multiplicity: Taylor
    # coefficients through order m-1 vanish.
    for p, m in finite:
        if m <= 0:
            continue
        for t in range(m):
            row = []
            for kind, q, j in basis:
                if kind == "poly":
                    row.append(math.comb(j, t) * p ** (j - t) if j >= t else 0.0)
                else:
                    row.append(_fall(j, t) * (p - q) ** (-j - t))
            rows.append(row)

    A = np.array(rows, dtype=complex)
    if A.size == 0:
        return len(basis)
    sv = np.linalg.svd(A, compute_uv=False)
    rank = int(np.sum(sv > rank_tol * (sv[0] if len(sv) else 1.0)))
    return len(basis) - rank


def _binom_neg(j: int, i: int) -> float:
    # coefficient of x^i in (1-x)^(-j)
    return math.comb(j + i - 1, i)


def _fall(j: int, t: int) -> float:
    # (1/t!) d^t/dz^t (z-q)^(-j), without the (z-q) power
    out = 1.0
    for i in range(t):
        out *= (-j - i)
    return out / math.factorial(t)


def h1_flat_torus(D: Divisor) -> int:
    if D.degree < 0:
        if any(m > 0 for _, m in D.entries):
            raise Unsupported("mixed-sign divisors on tori are not supported")
        return -D.degree
    if D.degree == 0 and not D.entries:
        return 1
    raise Unsupported("special torus divisors are not supported")


@dataclass
class IndexBound:
    value: Fraction
    ceiling: int
    h1: int
    sided: str


def index_bound(genus: int, D: Divisor, sided: str = "two") -> IndexBound:
    """Theorem-level lower bound for the Morse index from the divisor.

    Two-sided: (2 h^1(D) - 3)/3.  One-sided (divisor on the double cover):
    (h^1(D) - 3)/3.  The integer ceiling is reported alongside because the
    index is an integer.
    """
    if genus == 0:
        h1 = h1_exact_genus0(D)
    elif genus == 1:
        h1 = h1_flat_torus(D)
    else:
        raise Unsupported("genus >= 2 is out of scope")
    if sided == "two":
        val = Fraction(2 * h1 - 3, 3)
    elif sided == "one":
        val = Fraction(h1 - 3, 3)
    else:
        raise ValueError("sided must be 'two' or 'one'")
    return IndexBound(value=val, ceiling=math.ceil(val), h1=h1, sided=sided)


# ---------------------------------------------------------------------------
# Monodromy / framedness
# ---------------------------------------------------------------------------

@dataclass
class MonodromyReport:
    generators: list            # per-puncture loop description
    g_monodromy: list           # Mat2 per generator
    periods: list               # np.ndarray(3) per generator
    framed: bool
    two_sided_consistent: bool
    details: dict = field(default_factory=dict)


def _loop_points(center: complex, radius: float, nodes: int) -> np.ndarray:
    th = np.linspace(0.0, 2.0 * math.pi, nodes + 1)
    return center + radius * np.exp(1j * th)


def _loop_radius(s: SurfaceSpec, p) -> float:
    others = [q for q in s.punctures if q is not p and not is_infinity(q)]
    others += [q for q in s.marked_points if q != p]
    if is_infinity(p):
        # loop around infinity: circle |z| = 2 * max |other|
        r = max((abs(q) for q in others), default=1.0)
        return 2.0 * max(r, 1.0)
    dists = [abs(q - p) for q in others]
    return 0.5 * min(dists) if dists else 1.0


def monodromy_report(s: SurfaceSpec, nodes: int = 512, tol: float = 1e-8) -> MonodromyReport:
    """Analytic continuation of g and loop periods of the immersion integrands
    around each puncture (sphere) or trivially for torus translations."""
    from .represent import immersion_integrands  # cycle-free: function import

    if s.topology == "torus":
        framed = True
        return MonodromyReport(generators=["lattice_1", "lattice_2"],
                               g_monodromy=[Mat2.identity(), Mat2.identity()],
                               periods=[np.zeros(3), np.zeros(3)],
                               framed=framed,
                               two_sided_consistent=True)
    if s.data.kind == "intrinsic":
        return MonodromyReport(generators=[], g_monodromy=[], periods=[],
                               framed=True, two_sided_consistent=True)

    g = s.data.g
    phis = immersion_integrands(s)
    gens, mats, periods = [], [], []
    for p in s.punctures:
        if is_infinity(p):
            center, radius = 0j, _loop_radius(s, p)
        else:
            center, radius = p, _loop_radius(s, p)
        pts = _loop_points(center, radius, nodes)
        sing = [q for q in list(s.punctures) + list(s.marked_points)
                if not is_infinity(q)]
        dmin = min((np.min(np.abs(pts - q)) for q in sing), default=np.inf)
        if dmin < 1e-6 * radius:
            raise ContinuationFailure(f"loop around {p} passes through a singularity")

        # continuation of g at three base points near the loop start
        base = [pts[0], center + radius * cmath.exp(0.25j), center + radius * cmath.exp(-0.4j)]
        vals0, vals1 = [], []
        from .expr import continue_along
        ok = True
        for zb in base:
            loop = zb + (pts - pts[0])
            try:
                vals, _ = continue_along(g, loop)
            except ExprError as exc:
                raise ContinuationFailure(str(exc)) from exc
            vals0.append(vals[0])
            vals1.append(vals[-1])
        if max(abs(a - b) for a, b in zip(vals0, vals1)) < tol * max(
                1.0, max(abs(v) for v in vals0)):
            mat = Mat2.identity()
        else:
            try:
                mat = mobius_from_three_points(vals0, vals1)
            except Exception:
                mat = None
                ok = False
        # loop periods of the three integrands: trapezoid on the circle is
        # spectrally accurate for analytic integrands
        per = np.zeros(3)
        th = np.linspace(0.0, 2.0 * math.pi, nodes, endpoint=False)
        circ = center + radius * np.exp(1j * th)
        dz_dth = 1j * radius * np.exp(1j * th)
        for i, phi in enumerate(phis):
            try:
                vals, _ = continue_along(phi, circ)
            except ExprError as exc:
                raise ContinuationFailure(str(exc)) from exc
            per[i] = float(np.real(np.sum(vals * dz_dth) * (2.0 * math.pi / nodes)))
        gens.append(f"loop around {p}")
        mats.append(mat)
        periods.append(per)
    framed = all(m is not None and m.is_identity_map(tol) for m in mats)
    return MonodromyReport(generators=gens, g_monodromy=mats, periods=periods,
                           framed=framed, two_sided_consistent=True)


# ---------------------------------------------------------------------------
# Weighted-space membership
# ---------------------------------------------------------------------------

def l2star_membership(varsigma: MeroExpr, s: SurfaceSpec) -> bool:
    """True iff div(varsigma) >= D_Sigma (Prop.-level divisor criterion).

    varsigma is the coefficient of dz of a meromorphic 1-form whose poles lie
    among the punctures, marked points and infinity; poles elsewhere are the
    caller's responsibility.
    """
    D = fundamental_divisor(s)
    check_points = set(D.points()) | {INFTY} | set(s.marked_points)
    for p in check_points:
        try:
            o = form_order_at(varsigma, p)
        except ExprError:
            return False
        if o < D.multiplicity(p):
            return False
    return True


def end_weight(m: int, r: np.ndarray) -> np.ndarray:
    """The end weight u(|z|=r) for an end of order m at the origin."""
    r = np.asarray(r, dtype=float)
    L = np.log(1.0 / r)
    if m == 1:
        return 1.0 / (L * np.log(L))
    return r ** (m - 1) / ((m - 1) * L)
