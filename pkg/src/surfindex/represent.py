"""Weierstrass and Bryant representations, the Lawson correspondence and
intrinsic-geometry evaluation.

Normalization.  The immersion is x(z) = Re int (phi1, phi2, phi3) dz with

    phi1 = (1/2)(1 - g^2) eta,  phi2 = (i/2)(1 + g^2) eta,  phi3 = g eta,

the unique scaling for which sum phi_i^2 = 0 (conformality), the induced
metric is ds^2 = (1/4)(1+|g|^2)^2 |eta|^2 |dz|^2, the harmonic forms
w^i equal dx_i, and the Gauss curvature is

    K = -16 |g'|^2 (1+|g|^2)^{-4} |eta|^{-2}
      = -16 |dg|^4 (1+|g|^2)^{-4} |sigma|^{-2}      (sigma = eta dg = -S{f,g}).

The oriented unit normal for the chart orientation is
N = -(2 Re g, 2 Im g, |g|^2 - 1)/(1 + |g|^2) (the antipode of g's
stereographic point) and the second fundamental form is Re(sigma).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, solve_ivp

from .expr import (
    ExprError,
    Jet,
    MeroExpr,
    SingularPoint,
    ZVAR,
    as_expr,
    differentiate,
    eval_at,
    eval_jet,
    is_infinity,
)
from .moebius import Mat2
from .schwarzian import DegenerateData, schwarzian
from .surface import (
    BryantData,
    IntrinsicData,
    SurfaceSpec,
    Unsupported,
    WeierstrassData,
)


class PathThroughSingularity(Exception):
    pass


class CriticalPoint(Exception):
    pass


@dataclass
class ImmersionSample:
    z: complex
    position: np.ndarray          # euclidean xyz or Poincare-ball coords
    model: str = "euclidean"
    hermitian: np.ndarray | None = None


@dataclass
class IntrinsicSample:
    z: complex
    conformal_factor: float
    curvature: float
    sigma: complex


# ---------------------------------------------------------------------------
# Pointwise intrinsic quantities
# ---------------------------------------------------------------------------

def _gauss_pair(s: SurfaceSpec, z: complex):
    """(g(z), g'(z), |eta(z)|) evaluated from whichever data form is present."""
    d = s.data
    if d.kind == "intrinsic":
        raise Unsupported("no Gauss map for intrinsic data")
    jg = eval_jet(d.g, z, 1)
    gv, gp = jg.value, jg.coeffs[1]
    if d.kind == "weierstrass":
        eta = eval_at(d.eta, z)
    else:
        sig = eval_at(d.sigma, z)
        if gp == 0:
            raise SingularPoint("critical point of g")
        eta = sig / gp
    return gv, gp, eta


def metric_factor(s: SurfaceSpec, z: complex) -> float:
    """Conformal factor e^{2 lambda}(z) of the induced metric."""
    if s.data.kind == "intrinsic":
        return float(s.data.conformal_factor)
    gv, _, eta = _gauss_pair(s, z)
    v = 0.25 * (1.0 + abs(gv) ** 2) ** 2 * abs(eta) ** 2
    if v == 0.0:
        raise SingularPoint("metric degenerates at this point")
    return float(v)


def gauss_curvature(s: SurfaceSpec, z: complex) -> float:
    """Gauss curvature K(z) <= 0; cross-checked against -e^{-2l} Lap(l)."""
    if s.data.kind == "intrinsic":
        return 0.0
    gv, gp, eta = _gauss_pair(s, z)
    if eta == 0:
        raise SingularPoint("branch point: K is undefined")
    return float(-16.0 * abs(gp) ** 2 / ((1.0 + abs(gv) ** 2) ** 4 * abs(eta) ** 2))


def jacobi_potential(s: SurfaceSpec, z: complex) -> float:
    """2 K e^{2 lambda}: the zeroth-order term of the Jacobi form in chart
    coordinates.  Depends on g alone, hence invariant under the associated
    family and under the Lawson correspondence."""
    if s.data.kind == "intrinsic":
        return 0.0
    d = s.data
    jg = eval_jet(d.g, z, 1)
    gv, gp = jg.value, jg.coeffs[1]
    return float(-8.0 * abs(gp) ** 2 / (1.0 + abs(gv) ** 2) ** 2)


def normal_vector(s: SurfaceSpec, z: complex) -> np.ndarray:
    """Oriented unit normal for the chart orientation; the antipode of the
    stereographic point of g, paired with II = Re(sigma)."""
    gv, _, _ = _gauss_pair(s, z)
    den = 1.0 + abs(gv) ** 2
    return -np.array([2 * gv.real, 2 * gv.imag, abs(gv) ** 2 - 1.0]) / den


def immersion_integrands(s: SurfaceSpec):
    """The three Weierstrass integrands phi_i as symbolic expressions,
    including the associated-family phase."""
    d = s.data
    if d.kind == "intrinsic":
        raise Unsupported("intrinsic data has no immersion integrands")
    g = d.g
    eta = s.eta_expr()
    if d.phase:
        eta = as_expr(cmath.exp(1j * d.phase)) * eta
    one = as_expr(1.0)
    half = as_expr(0.5)
    return (half * (one - g * g) * eta,
            as_expr(0.5j) * (one + g * g) * eta,
            g * eta)


# ---------------------------------------------------------------------------
# Path integration (minimal immersion)
# ---------------------------------------------------------------------------

def _segment_quad(phi: MeroExpr, a: complex, b: complex, tol: float = 1e-10) -> complex:
    dz = b - a

    def f_re(t):
        return (eval_at(phi, a + t * dz) * dz).real

    def f_im(t):
        return (eval_at(phi, a + t * dz) * dz).imag

    re, _ = quad(f_re, 0.0, 1.0, epsabs=tol, epsrel=1e-11, limit=200)
    im, _ = quad(f_im, 0.0, 1.0, epsabs=tol, epsrel=1e-11, limit=200)
    return complex(re, im)


def _check_path(s: SurfaceSpec, pts, tol: float = 1e-9):
    sing = [p for p in list(s.punctures) + list(s.marked_points)
            if not is_infinity(p)]
    for a, b in zip(pts[:-1], pts[1:]):
        for p in sing:
            # distance from p to the segment [a, b]
            ab = b - a
            t = 0.0 if ab == 0 else max(0.0, min(1.0, ((p - a) / ab).real))
            d = abs(a + t * ab - p)
            if d < tol:
                raise PathThroughSingularity(f"path passes within {d:g} of {p}")


def auto_path(s: SurfaceSpec, z0: complex, z1: complex, steps: int = 24):
    """Polyline from z0 to z1 avoiding the puncture set.

    For data punctured at 0 and infinity the path follows a circular arc to
    the target argument and then a radial segment."""
    finite_punct = [p for p in s.punctures if not is_infinity(p)]
    if set(map(abs, finite_punct)) <= {0.0} and abs(z0) > 0 and abs(z1) > 0:
        r0, r1 = abs(z0), abs(z1)
        a0, a1 = cmath.phase(z0), cmath.phase(z1)
        da = (a1 - a0 + math.pi) % (2 * math.pi) - math.pi
        arc = [r0 * cmath.exp(1j * (a0 + da * t))
               for t in np.linspace(0.0, 1.0, steps)]
        return arc + [z1]
    return [z0, z1]


def minimal_immersion(s: SurfaceSpec, z0: complex, z: complex,
                      path=None) -> np.ndarray:
    """x(z) = Re int_{z0}^{z} (phi1, phi2, phi3) dz along the given polyline.

    Adaptive Gauss-Kronrod per segment.  Path independence holds up to the
    period lattice; for non-framed data the value depends on the branch
    followed (flagged by monodromy_report, not here).
    """
    pts = list(path) if path is not None else auto_path(s, z0, z)
    if pts[0] != z0 or pts[-1] != z:
        pts = [z0] + pts + [z]
    _check_path(s, pts)
    phis = immersion_integrands(s)
    out = np.zeros(3)
    for i, phi in enumerate(phis):
        acc = 0j
        for a, b in zip(pts[:-1], pts[1:]):
            acc += _segment_quad(phi, a, b)
        out[i] = acc.real
    return out


# ---------------------------------------------------------------------------
# The omega matrix and the null property
# ---------------------------------------------------------------------------

def omega_matrix(f, g: MeroExpr, z: complex, align_to: Mat2 | None = None) -> Mat2:
    """Small's null lift omega(f, g) at z, as a unit-determinant matrix.

    The square-root branch of df/dg is the principal one; align_to picks the
    sign making the result closest to a reference lift (for stencils).
    """
    jf = f.jet(z, 3) if hasattr(f, "jet") else eval_jet(f, z, 3)
    jg = eval_jet(g, z, 3)
    if jg.coeffs[1] == 0:
        raise CriticalPoint("critical point of g")
    u1 = _dg(jf, jg)          # df/dg jet, order 2
    u2 = _dg(u1, Jet(z, jg.coeffs[:3]))     # d2f/dg2, order 1
    a1 = u1.value
    if a1 == 0:
        raise CriticalPoint("df/dg vanishes")
    fv, gv = jf.value, jg.value
    r = cmath.sqrt(a1)                       # (df/dg)^{1/2}, principal
    t = 0.5 * u2.value / (a1 * r)            # (1/2) (df/dg)^{-3/2} d2f/dg2
    alpha = r - fv * t
    beta = fv * (1.0 / r + gv * t) - gv * r
    gamma = -t
    delta = 1.0 / r + gv * t
    m = Mat2([[alpha, beta], [gamma, delta]])
    if align_to is not None:
        plus = float(np.linalg.norm(m.m - align_to.m))
        minus = float(np.linalg.norm(m.m + align_to.m))
        if minus < plus:
            m = m.scale(-1.0)
    return m


def _dg(x: Jet, g: Jet) -> Jet:
    k = x.order
    dx = Jet(x.center, x.coeffs[1:] * np.arange(1, k + 1))
    dgj = Jet(g.center, g.coeffs[1: k + 1] * np.arange(1, k + 1))
    return dx / dgj


def domega_closed_form(f, g: MeroExpr, z: complex) -> np.ndarray:
    """d omega / dz from the closed form
    -1/2 [[f, -fg], [1, -g]] (df/dg)^{-1/2} S{f,g} dg^{-1}."""
    from .schwarzian import schwarzian_jet_at

    jf = f.jet(z, 3) if hasattr(f, "jet") else eval_jet(f, z, 3)
    jg = eval_jet(g, z, 3)
    fv, gv = jf.value, jg.value
    gp = jg.coeffs[1]
    u1 = _dg(jf, jg).value
    S = schwarzian_jet_at(f, g, z)
    pref = -0.5 * S / (cmath.sqrt(u1) * gp)
    return pref * np.array([[fv, -fv * gv], [1.0, -gv]], dtype=complex)


def maurer_cartan_closed_form(f, g: MeroExpr, z: complex) -> np.ndarray:
    """omega^{-1} d omega / dz from the closed form
    -1/2 [[g, -g^2], [1, -g]] S{f,g} dg^{-1}; manifestly of zero determinant."""
    from .schwarzian import schwarzian_jet_at

    jg = eval_jet(g, z, 1)
    gv, gp = jg.value, jg.coeffs[1]
    S = schwarzian_jet_at(f, g, z)
    pref = -0.5 * S / gp
    return pref * np.array([[gv, -gv * gv], [1.0, -gv]], dtype=complex)


def null_check(f, g: MeroExpr, z: complex, h: float = 1e-4) -> float:
    """|det(omega^{-1} d omega/dz)| estimated by central differences along
    the two coordinate directions; O(h^2) for genuine null lifts."""
    w0 = omega_matrix(f, g, z)
    w0i = w0.inverse()
    res = 0.0
    for d in (h, 1j * h):
        wp = omega_matrix(f, g, z + d, align_to=w0)
        wm = omega_matrix(f, g, z - d, align_to=w0)
        der = (wp.m - wm.m) / (2.0 * d)
        res = max(res, abs(np.linalg.det(w0i.m @ der)))
    return res


# ---------------------------------------------------------------------------
# Hyperbolic positions
# ---------------------------------------------------------------------------

def hermitian_projection(F: Mat2) -> np.ndarray:
    """pi(A) = A conj(A)^T, normalized to det 1 (hyperboloid model)."""
    H = F.m @ F.m.conj().T
    d = np.linalg.det(H).real
    if d <= 0:
        raise ValueError("projection is not positive definite")
    return H / math.sqrt(d)


def hermitian_to_ball(H: np.ndarray) -> np.ndarray:
    """Hyperboloid (Hermitian, det 1) to Poincare-ball coordinates."""
    t = 0.5 * (H[0, 0].real + H[1, 1].real)
    x1 = H[1, 0].real
    x2 = H[1, 0].imag
    x3 = 0.5 * (H[0, 0].real - H[1, 1].real)
    return np.array([x1, x2, x3]) / (1.0 + t)


def bryant_position(F: Mat2, z: complex | None = None) -> ImmersionSample:
    H = hermitian_projection(F)
    b = hermitian_to_ball(H)
    return ImmersionSample(z=z if z is not None else 0j, position=b,
                           model="ball", hermitian=H)


# ---------------------------------------------------------------------------
# Lawson correspondence
# ---------------------------------------------------------------------------

class SolvedMap:
    """f with S{f, z} = q(z), realized by continuing the fundamental system
    of p'' + (q/2) p = 0 from a base point along straight or caller paths.

    Exposes jet(z, k): the ODE gives all higher derivatives of p1, p2 at z,
    so f = p1/p2 has jets of any order.
    """

    def __init__(self, q_expr: MeroExpr, base: complex, surface: SurfaceSpec | None = None,
                 rtol: float = 1e-12, atol: float = 1e-13):
        self.q = q_expr
        self.base = complex(base)
        self.surface = surface
        self.rtol = rtol
        self.atol = atol
        # p1(base)=0, p1'=1; p2(base)=1, p2'=0  (Wronskian 1, f ~ z - base)
        self._cache = {self.base: np.array([0j, 1.0 + 0j, 1.0 + 0j, 0j])}

    def _rhs(self, a: complex, dz: complex):
        def fun(t, y):
            z = a + t * dz
            qv = eval_at(self.q, z)
            p1, dp1, p2, dp2 = y[0] + 1j * y[1], y[2] + 1j * y[3], \
                y[4] + 1j * y[5], y[6] + 1j * y[7]
            dd1 = -0.5 * qv * p1
            dd2 = -0.5 * qv * p2
            out = np.array([dp1, dd1, dp2, dd2]) * dz
            return np.array([out[0].real, out[0].imag, out[1].real, out[1].imag,
                             out[2].real, out[2].imag, out[3].real, out[3].imag])
        return fun

    def _continue_to(self, z: complex) -> np.ndarray:
        z = complex(z)
        if z in self._cache:
            return self._cache[z]
        if self.surface is not None:
            pts = auto_path(self.surface, self.base, z)
        else:
            pts = [self.base, z]
        y = self._cache[self.base]
        state = np.array([y[0].real, y[0].imag, y[1].real, y[1].imag,
                          y[2].real, y[2].imag, y[3].real, y[3].imag])
        for a, b in zip(pts[:-1], pts[1:]):
            if a == b:
                continue
            sol = solve_ivp(self._rhs(a, b - a), (0.0, 1.0), state,
                            method="DOP853", rtol=self.rtol, atol=self.atol,
                            dense_output=False)
            if not sol.success:
                raise RuntimeError(f"ODE continuation failed: {sol.message}")
            state = sol.y[:, -1]
        out = np.array([state[0] + 1j * state[1], state[2] + 1j * state[3],
                        state[4] + 1j * state[5], state[6] + 1j * state[7]])
        self._cache[z] = out
        return out

    def p_jets(self, z: complex, k: int):
        """Jets of (p1, p2) at z through order k from the ODE recursion."""
        p1, dp1, p2, dp2 = self._continue_to(z)
        qj = eval_jet(self.q, z, max(k - 2, 0))
        c1 = np.zeros(k + 1, dtype=complex)
        c2 = np.zeros(k + 1, dtype=complex)
        c1[0], c2[0] = p1, p2
        if k >= 1:
            c1[1], c2[1] = dp1, dp2
        for j in range(k - 1):
            # p'' = -q/2 p: Taylor coefficient j of both sides
            s1 = sum(qj.coeffs[i] * c1[j - i] for i in range(j + 1))
            s2 = sum(qj.coeffs[i] * c2[j - i] for i in range(j + 1))
            c1[j + 2] = -0.5 * s1 / ((j + 2) * (j + 1))
            c2[j + 2] = -0.5 * s2 / ((j + 2) * (j + 1))
        return Jet(z, c1), Jet(z, c2)

    def jet(self, z: complex, k: int) -> Jet:
        j1, j2 = self.p_jets(z, k)
        if abs(j2.value) < 1e-13:
            raise SingularPoint("f has a pole here (p2 vanishes)")
        return j1 / j2


def lawson_min_to_bryant(s: SurfaceSpec, base: complex | None = None) -> SurfaceSpec:
    """Realize a Weierstrass scene as a Bryant scene with the same intrinsic
    data by solving S{f, g} = -sigma.

    f is produced as the series/ODE continuation of the fundamental system in
    the z-chart: S{f, z} = s(g) - sigma."""
    d = s.data
    if d.kind != "weierstrass":
        raise Unsupported("expected Weierstrass data")
    sigma = s.sigma_expr()
    sg = schwarzian(d.g, ZVAR).coeff
    q = sg - sigma
    if base is None:
        base = _generic_base(s)
    f = SolvedMap(q, base, surface=s)
    data = BryantData(f=f, g=d.g, sigma=sigma, phase=d.phase)
    return SurfaceSpec(topology=s.topology, data=data, punctures=s.punctures,
                       marked_points=s.marked_points, lattice=s.lattice,
                       sidedness=s.sidedness)


def lawson_bryant_to_min(s: SurfaceSpec) -> SurfaceSpec:
    """Weierstrass data (g, eta = -S{f,g} dg^{-1} = sigma dg^{-1}) of a
    Bryant scene; sigma is preserved exactly."""
    d = s.data
    if d.kind != "bryant":
        raise Unsupported("expected Bryant data")
    from .expr import is_constant_expr
    if is_constant_expr(d.g):
        raise DegenerateData("constant g: totally umbilic (horosphere) case")
    if is_constant_expr(d.sigma) and abs(eval_at(d.sigma, 0.73 + 0.41j)) < 1e-14:
        raise DegenerateData("sigma = 0: totally umbilic (f Moebius in g)")
    eta = d.sigma / differentiate(d.g)
    data = WeierstrassData(g=d.g, eta=eta, phase=d.phase)
    return SurfaceSpec(topology=s.topology, data=data, punctures=s.punctures,
                       marked_points=s.marked_points, lattice=s.lattice,
                       sidedness=s.sidedness)


def _generic_base(s: SurfaceSpec) -> complex:
    sing = [p for p in list(s.punctures) + list(s.marked_points)
            if not is_infinity(p)]
    for cand in (1.0 + 0j, 0.8 + 0.43j, 1.7 - 0.31j, 0.37 + 1.21j):
        if all(abs(cand - p) > 0.3 for p in sing):
            return cand
    return 2.31 + 1.17j


def associated_family(s: SurfaceSpec, theta: float) -> SurfaceSpec:
    """sigma -> e^{i theta} sigma.  The phase is carried separately so that
    metric, curvature and the assembled Jacobi matrices are bitwise
    unchanged."""
    d = s.data
    if d.kind == "weierstrass":
        data = WeierstrassData(g=d.g, eta=d.eta, phase=d.phase + theta)
    elif d.kind == "bryant":
        data = BryantData(f=d.f, g=d.g, sigma=d.sigma, phase=d.phase + theta)
    else:
        data = IntrinsicData(conformal_factor=d.conformal_factor,
                             sigma_const=d.sigma_const, phase=d.phase + theta)
    return SurfaceSpec(topology=s.topology, data=data, punctures=s.punctures,
                       marked_points=s.marked_points, lattice=s.lattice,
                       sidedness=s.sidedness)


def sigma_at(s: SurfaceSpec, z: complex) -> complex:
    """Value of the dz^2 coefficient of sigma, including the family phase."""
    d = s.data
    if d.kind == "intrinsic":
        v = complex(d.sigma_const)
    else:
        v = eval_at(s.sigma_expr(), z)
    return v * cmath.exp(1j * d.phase) if d.phase else v


def intrinsic_sample(s: SurfaceSpec, z: complex) -> IntrinsicSample:
    return IntrinsicSample(z=z, conformal_factor=metric_factor(s, z),
                           curvature=gauss_curvature(s, z), sigma=sigma_at(s, z))


# ---------------------------------------------------------------------------
# Harmonic forms and the Ros identity
# ---------------------------------------------------------------------------

def harmonic_form_coeffs(s: SurfaceSpec, z: complex) -> np.ndarray:
    """(W1, W2, W3) with w^i = Re(W_i dz); w^i = dx_i for the immersion."""
    phis = immersion_integrands(s)
    return np.array([eval_at(p, z) for p in phis], dtype=complex)


def _dz_log_metric(s: SurfaceSpec, z: complex) -> complex:
    """d/dz of 2*lambda, analytically: 2 g' conj(g)/(1+|g|^2) + eta'/eta."""
    d = s.data
    if d.kind == "intrinsic":
        return 0j
    g = d.g
    eta = s.eta_expr()
    jg = eval_jet(g, z, 1)
    je = eval_jet(eta, z, 1)
    if je.value == 0:
        raise SingularPoint("metric degenerates (branch point)")
    return 2.0 * jg.coeffs[1] * jg.value.conjugate() / (1.0 + abs(jg.value) ** 2) \
        + je.coeffs[1] / je.value


def x_w(s: SurfaceSpec, W: MeroExpr, z: complex) -> np.ndarray:
    """X_w = (<w, dx1>, <w, dx2>, <w, dx3>) for w = Re(W dz)."""
    e2l = metric_factor(s, z)
    Wv = eval_at(W, z)
    phis = harmonic_form_coeffs(s, z)
    return np.real(Wv * np.conj(phis)) / e2l


def covariant_grad_contraction(s: SurfaceSpec, W: MeroExpr, z: complex) -> float:
    """<nabla w, Re(sigma)> for w = Re(W dz), W holomorphic.

    In flat components: nabla w = J - Gamma.w with J the (symmetric,
    trace-free) Jacobian of the coefficients and the Christoffels of the
    conformal metric; the contraction carries e^{-4 lambda}.
    """
    jW = eval_jet(W, z, 1)
    Wv, Wp = jW.value, jW.coeffs[1]
    S = sigma_at(s, z)
    M11, M12 = S.real, -S.imag                 # Re(sigma) components
    D = _dz_log_metric(s, z)                   # d_z of 2*lambda
    lx, ly = D.real, -D.imag                   # lambda_x, lambda_y
    w1, w2 = Wv.real, -Wv.imag
    J11, J12 = Wp.real, -Wp.imag
    G11 = lx * w1 - ly * w2
    G12 = ly * w1 + lx * w2
    N11 = J11 - G11
    N12 = J12 - G12
    e2l = metric_factor(s, z)
    return float(2.0 * (N11 * M11 + N12 * M12) / e2l ** 2)


def ros_lhs_fd(s: SurfaceSpec, W: MeroExpr, z: complex, h: float) -> np.ndarray:
    """(Delta - 2K) X_w by a 5-point stencil in the conformal metric."""
    xc = x_w(s, W, z)
    lap = (x_w(s, W, z + h) + x_w(s, W, z - h) + x_w(s, W, z + 1j * h)
           + x_w(s, W, z - 1j * h) - 4.0 * xc) / h ** 2
    return lap / metric_factor(s, z) - 2.0 * gauss_curvature(s, z) * xc


def ros_rhs(s: SurfaceSpec, W: MeroExpr, z: complex) -> np.ndarray:
    """2 <nabla w, Re(sigma)> N with N the unit normal (Gauss map in R^3)."""
    return 2.0 * covariant_grad_contraction(s, W, z) * normal_vector(s, z)


def ros_identity_residual(s: SurfaceSpec, W: MeroExpr, z: complex,
                          h: float = 1e-3) -> np.ndarray:
    """Residual of Delta X_w - 2 K X_w = 2 <nabla w, Re(sigma)> N; O(h^2)."""
    return ros_lhs_fd(s, W, z, h) - ros_rhs(s, W, z)


# ---------------------------------------------------------------------------
# Integral quantities
# ---------------------------------------------------------------------------

def total_curvature(s: SurfaceSpec, rtol: float = 1e-9) -> float:
    """integral of K dA over the whole chart domain.

    K e^{2 lambda} = -4 |g'|^2/(1+|g|^2)^2 depends only on g and extends
    smoothly across eta poles; integrate in polar coordinates with
    r = tan(u) mapping the sphere to a finite box.
    """
    if s.data.kind == "intrinsic":
        return 0.0
    g = s.data.g
    nth = 256

    def ring(u: float) -> float:
        r = math.tan(u)
        jac = r * (1.0 + r * r)          # r dr = tan u sec^2 u du
        th = np.linspace(0.0, 2.0 * math.pi, nth, endpoint=False)
        tot = 0.0
        for t in th:
            z = r * cmath.exp(1j * t)
            try:
                jg = eval_jet(g, z, 1)
                dens = -4.0 * abs(jg.coeffs[1]) ** 2 / (1.0 + abs(jg.value) ** 2) ** 2
            except ExprError:
                dens = 0.0
            tot += dens
        return tot * (2.0 * math.pi / nth) * jac

    val, _ = quad(ring, 0.0, 0.5 * math.pi - 1e-12, epsabs=1e-10,
                  epsrel=rtol, limit=300)
    return float(val)


def cone_angle(s: SurfaceSpec, p: complex, r: float = 1e-2,
               nr: int = 320, nrays: int = 16) -> float:
    """Total cone angle of the metric at p: circumference(r) over the
    direction-averaged distance(r); tends to 2 pi (m+1) at a branch point of
    order m and to 2 pi at immersed points."""
    th = np.linspace(0.0, 2.0 * math.pi, 256, endpoint=False)
    circ = 0.0
    for t in th:
        circ += math.sqrt(metric_factor(s, p + r * cmath.exp(1j * t))) * r
    circ *= 2.0 * math.pi / 256
    def edge_len(zz):
        try:
            return math.sqrt(metric_factor(s, zz))
        except SingularPoint:
            return 0.0      # metric vanishes at the branch point itself

    rs = np.linspace(0.0, r, nr)
    dist = 0.0
    for k in range(nrays):
        ray = cmath.exp(2j * math.pi * k / nrays)
        vals = np.array([edge_len(p + x * ray) for x in rs])
        dist += float(np.trapezoid(vals, rs))
    dist /= nrays
    return circ / dist
