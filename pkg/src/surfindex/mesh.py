"""Conformal-chart meshing of truncated surfaces.

Each end of order m is truncated at |z| = R^(1/(1-m)) (e^-R for m = 1) and
meshed in logarithmic coordinates between the truncation circle and a fixed
gluing circle; compact cores are meshed in chart coordinates (Delaunay over
graded point clouds, a second chart covering infinity when it is a regular
point); flat tori become periodic structured grids.  Vertices carry the
chart densities the assembler needs: the Jacobi potential 2 K e^{2 lambda},
the conformal factor and the end weight u, all in piece coordinates.
"""
from __future__ import annotations

import math

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from .expr import INFTY, SingularPoint, ZVAR, eval_jet, invert_chart, ipow, is_infinity, laurent
from .surface import SurfaceSpec, branch_divisor, end_order, end_weight


class MeshQuality(Exception):
    pass


class DisjointnessViolation(Exception):
    pass


@dataclass
class ConformalMesh:
    vertices: np.ndarray          # (n, 2) piece-local coordinates
    triangles: np.ndarray         # (m, 3) indices, positively oriented in tri_xy
    tri_xy: np.ndarray            # (m, 3, 2) per-triangle corner coordinates
    tri_pot: np.ndarray           # (m,) element Jacobi-potential density (own chart)
    tri_wdens: np.ndarray         # (m,) element u^2 e^{2 lambda} density (own chart)
    pot: np.ndarray               # per-vertex 2 K e^{2 lambda} (chart density)
    e2lam: np.ndarray             # per-vertex conformal-factor chart density
    weight: np.ndarray            # per-vertex end weight u
    dirichlet: np.ndarray         # bool mask of constrained vertices
    base_point: np.ndarray        # per-vertex base-chart point (inf at the cap center)
    pieces: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    @property
    def n_vertices(self) -> int:
        return len(self.pot)

    def euler_characteristic(self) -> int:
        edges = set()
        for t in self.triangles:
            for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
                edges.add((min(a, b), max(a, b)))
        return self.n_vertices - len(edges) + len(self.triangles)

    def min_angle_deg(self) -> float:
        xy = self.tri_xy
        angs = []
        for i in range(3):
            a = xy[:, (i + 1) % 3] - xy[:, i]
            b = xy[:, (i + 2) % 3] - xy[:, i]
            na = np.linalg.norm(a, axis=1)
            nb = np.linalg.norm(b, axis=1)
            cosang = np.clip((a * b).sum(axis=1) / (na * nb), -1.0, 1.0)
            angs.append(np.degrees(np.arccos(cosang)))
        return float(np.min(np.stack(angs)))


def truncation_radius(m: int, R: float) -> float:
    """|z| <= R^(1/(1-m)) for ends of order m >= 2; e^-R for m = 1."""
    if m == 1:
        return math.exp(-R)
    return R ** (1.0 / (1.0 - m))


# ---------------------------------------------------------------------------
# Chart densities
# ---------------------------------------------------------------------------

class ChartDensities:
    """Jacobi potential (2 K e^{2l}) and conformal factor as chart densities
    on the base chart and on w = 1/z; w = 0 is handled by series limits."""

    def __init__(self, s: SurfaceSpec):
        self.kind = s.data.kind
        if self.kind == "intrinsic":
            self.const = float(s.data.conformal_factor)
            return
        self.g = s.data.g
        self.eta = s.eta_expr()
        self.g_w = invert_chart(self.g)
        self.eta_w = ipow(ZVAR, -2) * invert_chart(self.eta)  # |dz/dw| in | |

    def pot_z(self, z: complex) -> float:
        if self.kind == "intrinsic":
            return 0.0
        j = eval_jet(self.g, z, 1)
        return -8.0 * abs(j.coeffs[1]) ** 2 / (1.0 + abs(j.value) ** 2) ** 2

    def e2lam_z(self, z: complex) -> float:
        if self.kind == "intrinsic":
            return self.const
        j = eval_jet(self.g, z, 0)
        e = eval_jet(self.eta, z, 0)
        return 0.25 * (1 + abs(j.value) ** 2) ** 2 * abs(e.value) ** 2

    def pot_w(self, w: complex) -> float:
        if self.kind == "intrinsic":
            return 0.0
        try:
            j = eval_jet(self.g_w, w, 1)
            return -8.0 * abs(j.coeffs[1]) ** 2 / (1.0 + abs(j.value) ** 2) ** 2
        except SingularPoint:
            # pole of g at this point: use G = 1/g, same spherical density
            G = laurent(self.g_w, complex(w), 3).inverse()
            g0, g1 = G.coefficient(0), G.coefficient(1)
            return -8.0 * abs(g1) ** 2 / (1.0 + abs(g0) ** 2) ** 2

    def e2lam_w(self, w: complex) -> float:
        if self.kind == "intrinsic":
            return self.const
        try:
            j = eval_jet(self.g_w, w, 0)
            e = eval_jet(self.eta_w, w, 0)
            return 0.25 * (1 + abs(j.value) ** 2) ** 2 * abs(e.value) ** 2
        except SingularPoint:
            G = laurent(self.g_w, complex(w), 3).inverse()
            L = laurent(self.g_w * self.g_w * self.eta_w, complex(w), 3)
            if L.is_zero or L.order > 0:
                lead = 0j
            elif L.order < 0:
                raise
            else:
                lead = L.coefficient(0)
            g0 = G.coefficient(0)
            return 0.25 * (1 + abs(g0) ** 2) ** 2 * abs(lead) ** 2


def _collar_weight(m: int, t: np.ndarray, t_glue: float) -> np.ndarray:
    """End weight u in collar coordinates, continuous (=1) at the glue ring.

    The formula needs log|z|^-1 > 1 (and its log positive for m = 1), so the
    raw formula applies below t_ref = min(t_glue, -1.1) and is frozen above."""
    t_ref = min(t_glue, -1.1)
    r = np.exp(np.minimum(np.asarray(t, dtype=float), t_ref))
    u = end_weight(m, r)
    u_ref = end_weight(m, math.exp(t_ref))
    return u / u_ref


# ---------------------------------------------------------------------------
# Piece helpers
# ---------------------------------------------------------------------------

def _cylinder_grid(ts: np.ndarray, thetas: np.ndarray):
    """Periodic (in theta) structured grid: vertices, triangles and
    coordinate triples with theta unwrapped across the seam."""
    nt = len(ts) - 1
    ntheta = len(thetas)
    step = thetas[1] - thetas[0] if ntheta > 1 else 2 * math.pi
    T, TH = np.meshgrid(ts, thetas, indexing="ij")
    verts = np.stack([T.ravel(), TH.ravel()], axis=1)
    tris = []
    tri_xy = []
    for i in range(nt):
        for j in range(ntheta):
            j2 = (j + 1) % ntheta
            a = i * ntheta + j
            b = i * ntheta + j2
            c = (i + 1) * ntheta + j
            d = (i + 1) * ntheta + j2
            th_j = thetas[j]
            th_j2 = th_j + step
            tris.append((a, b, d))
            tri_xy.append(((ts[i], th_j), (ts[i], th_j2), (ts[i + 1], th_j2)))
            tris.append((a, d, c))
            tri_xy.append(((ts[i], th_j), (ts[i + 1], th_j2), (ts[i + 1], th_j)))
    return verts, np.array(tris, dtype=int), np.array(tri_xy, dtype=float)


def _orient(tris: np.ndarray, tri_xy: np.ndarray):
    """Flip triangles to positive signed area in their own coordinates."""
    e1 = tri_xy[:, 1] - tri_xy[:, 0]
    e2 = tri_xy[:, 2] - tri_xy[:, 0]
    area2 = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    flip = area2 < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    tri_xy[flip] = tri_xy[flip][:, [0, 2, 1]]
    return tris, tri_xy


class _Builder:
    def __init__(self):
        self.xy = []
        self.tris = []
        self.tri_xy = []
        self.tri_pot = []
        self.tri_wdens = []
        self.pot = []
        self.e2l = []
        self.u = []
        self.diri = []
        self.base = []
        self.pieces = []

    def add(self, name, verts_xy, tris, pot, e2l, u, diri, base, tri_xy=None):
        off = sum(len(p) for p in self.pot)
        verts_xy = np.asarray(verts_xy, dtype=float)
        tris = np.asarray(tris, dtype=int)
        pot = np.asarray(pot, dtype=float)
        e2l = np.asarray(e2l, dtype=float)
        u = np.asarray(u, dtype=float)
        self.xy.append(verts_xy)
        self.tris.append(tris + off)
        self.tri_xy.append(verts_xy[tris] if tri_xy is None else
                           np.asarray(tri_xy, dtype=float))
        # element densities in the piece's own chart (one-point barycentric
        # quadrature uses the mean of the corner values)
        self.tri_pot.append(pot[tris].mean(axis=1))
        wdens = u * u * e2l
        self.tri_wdens.append(wdens[tris].mean(axis=1))
        self.pot.append(pot)
        self.e2l.append(e2l)
        self.u.append(u)
        self.diri.append(np.asarray(diri, dtype=bool))
        self.base.append(np.asarray(base, dtype=complex))
        self.pieces.append(name)
        return off

    def finalize(self, remap=None, notes=None) -> ConformalMesh:
        pot = np.concatenate(self.pot)
        n = len(pot)
        if remap is None:
            remap = np.arange(n)
        used = np.unique(remap)
        new_id = -np.ones(n, dtype=int)
        new_id[used] = np.arange(len(used))
        vid = new_id[remap]
        tris = vid[np.concatenate(self.tris)]
        tri_xy = np.concatenate(self.tri_xy)
        tris, tri_xy = _orient(tris, tri_xy)
        xy = np.concatenate(self.xy)
        return ConformalMesh(
            vertices=xy[used], triangles=tris, tri_xy=tri_xy,
            tri_pot=np.concatenate(self.tri_pot),
            tri_wdens=np.concatenate(self.tri_wdens),
            pot=pot[used], e2lam=np.concatenate(self.e2l)[used],
            weight=np.concatenate(self.u)[used],
            dirichlet=np.concatenate(self.diri)[used],
            base_point=np.concatenate(self.base)[used],
            pieces=self.pieces, notes=notes or {})


# ---------------------------------------------------------------------------
# Scene builders
# ---------------------------------------------------------------------------

def build_cylinder_mesh(s: SurfaceSpec, R: float, h: float) -> ConformalMesh:
    """Scenes punctured exactly at 0 and infinity (annuli): one log cylinder
    t + i theta with z = e^(t + i theta)."""
    m0 = end_order(s, 0j)
    mi = end_order(s, INFTY)
    t_lo = math.log(truncation_radius(m0, R))
    t_hi = -math.log(truncation_radius(mi, R))
    if t_hi - t_lo < 2.0 * h:
        raise DisjointnessViolation(
            f"truncation disks leave a band of width {t_hi - t_lo:g} < 2h")
    ntheta = max(8, int(math.ceil(2 * math.pi / h)))
    nt = max(4, int(math.ceil((t_hi - t_lo) / h)))
    ts = np.linspace(t_lo, t_hi, nt + 1)
    ths = np.arange(ntheta) * (2 * math.pi / ntheta)
    verts, tris, tri_xy = _cylinder_grid(ts, ths)

    dens = ChartDensities(s)
    zs = np.exp(verts[:, 0] + 1j * verts[:, 1])
    jac2 = np.exp(2.0 * verts[:, 0])
    pot = np.array([dens.pot_z(z) for z in zs]) * jac2
    e2l = np.array([dens.e2lam_z(z) for z in zs]) * jac2

    t = verts[:, 0]
    u = np.ones(len(t))
    u[t < 0] = _collar_weight(m0, t[t < 0], 0.0)
    u[t > 0] = _collar_weight(mi, -t[t > 0], 0.0)

    dirichlet = np.isclose(t, t_lo) | np.isclose(t, t_hi)

    b = _Builder()
    b.add("cylinder", verts, tris, pot, e2l, u, dirichlet, zs, tri_xy=tri_xy)
    return b.finalize(notes={"t_range": (t_lo, t_hi), "ntheta": ntheta,
                             "end_orders": {"0": m0, "inf": mi}})


def build_torus_mesh(s: SurfaceSpec, h: float) -> ConformalMesh:
    """Structured periodic grid over the lattice parallelogram."""
    w1, w2 = complex(s.lattice[0]), complex(s.lattice[1])
    n1 = max(4, int(math.ceil(abs(w1) / h)))
    n2 = max(4, int(math.ceil(abs(w2) / h)))
    ss, tt = np.meshgrid(np.arange(n1) / n1, np.arange(n2) / n2, indexing="ij")
    zs = ss.ravel() * w1 + tt.ravel() * w2
    verts = np.stack([zs.real, zs.imag], axis=1)

    tris = []
    tri_st = []
    for i in range(n1):
        for j in range(n2):
            a = i * n2 + j
            bb = ((i + 1) % n1) * n2 + j
            c = i * n2 + (j + 1) % n2
            d = ((i + 1) % n1) * n2 + (j + 1) % n2
            tris.append((a, bb, d))
            tri_st.append(((i, j), (i + 1, j), (i + 1, j + 1)))
            tris.append((a, d, c))
            tri_st.append(((i, j), (i + 1, j + 1), (i, j + 1)))
    tris = np.array(tris, dtype=int)
    tri_xy = np.empty((len(tris), 3, 2))
    for k, cs in enumerate(tri_st):
        for c3, (i, j) in enumerate(cs):
            zz = (i / n1) * w1 + (j / n2) * w2
            tri_xy[k, c3] = (zz.real, zz.imag)
    tris, tri_xy = _orient(tris, tri_xy)

    n = len(verts)
    c = float(getattr(s.data, "conformal_factor", 1.0))
    mesh = ConformalMesh(vertices=verts, triangles=tris, tri_xy=tri_xy,
                         tri_pot=np.zeros(len(tris)),
                         tri_wdens=np.full(len(tris), c),
                         pot=np.zeros(n), e2lam=np.full(n, c),
                         weight=np.ones(n),
                         dirichlet=np.zeros(n, dtype=bool),
                         base_point=zs, pieces=["torus"],
                         notes={"n1": n1, "n2": n2})
    return mesh


def _hex_cloud(radius: float, h: float) -> np.ndarray:
    pts = []
    ny = int(math.ceil(2 * radius / (h * math.sqrt(3) / 2))) + 2
    nx = int(math.ceil(2 * radius / h)) + 2
    for iy in range(-ny, ny + 1):
        y = iy * h * math.sqrt(3) / 2
        off = 0.5 * h if iy % 2 else 0.0
        for ix in range(-nx, nx + 1):
            x = ix * h + off
            if x * x + y * y < radius * radius:
                pts.append(complex(x, y))
    return np.array(pts, dtype=complex)


def _graded_rings(center: complex, r0: float, s0: float, h: float, r_max: float):
    """Rings of points around center starting at radius r0 with spacing s0,
    growing geometrically until the spacing reaches h or radius r_max."""
    pts = []
    rho, spacing = r0, s0
    while spacing < 0.95 * h:
        rho *= 1.30
        spacing *= 1.30
        if rho > r_max:
            break
        nk = max(12, int(math.ceil(2 * math.pi * rho / spacing)))
        ang = np.arange(nk) * (2 * math.pi / nk) + 0.13
        pts.append(center + rho * np.exp(1j * ang))
    if pts:
        return np.concatenate(pts)
    return np.zeros(0, dtype=complex)


def build_sphere_mesh(s: SurfaceSpec, R: float, h: float,
                      r_glue: float | None = None) -> ConformalMesh:
    """General sphere scene: Delaunay core (plus a w-chart cap when infinity
    is a regular point), log collars at punctures, branch points excised by
    Dirichlet disks of radius h/2."""
    fin_punct = [p for p in s.punctures if not is_infinity(p)]
    has_inf_punct = any(is_infinity(p) for p in s.punctures)
    branch_pts = [p for p, m in branch_divisor(s).entries if not is_infinity(p)]

    special = fin_punct + branch_pts
    min_gap = min((abs(a - b) for i, a in enumerate(special)
                   for b in special[i + 1:]), default=2.0)
    if r_glue is None:
        r_glue = min(0.3, 0.35 * min_gap) if fin_punct else 0.3
    orders = {p: end_order(s, p) for p in s.punctures}

    R_core = max([2.0] + [abs(p) + 1.0 for p in special])
    if has_inf_punct:
        # keep the infinity collar nonempty: glue radius 1/R_core must stay
        # above the truncation radius of the end at infinity
        m_inf = orders[[p for p in s.punctures if is_infinity(p)][0]]
        r_tr_inf = truncation_radius(m_inf, R)
        R_core_max = 0.65 / r_tr_inf
        R_core_min = max([0.4] + [abs(p) + 2.2 * r_glue for p in fin_punct]
                         + [abs(q) + max(0.15, 3.0 * h) for q in branch_pts])
        if R_core_max < R_core_min:
            raise DisjointnessViolation(
                f"truncation at infinity (radius {r_tr_inf:g}) collides with "
                f"the finite-point cores; increase R")
        R_core = min(max(R_core, R_core_min), R_core_max)
    ntheta = max(8, int(math.ceil(2 * math.pi / h)))
    n_out = max(16, int(math.ceil(2 * math.pi * R_core / h)))
    outer_angles = np.arange(n_out) * (2 * math.pi / n_out)
    glue_angles = np.arange(ntheta) * (2 * math.pi / ntheta)

    dens = ChartDensities(s)
    b = _Builder()

    # ---- core point cloud (z chart) -------------------------------------
    pts = []
    ring_records = {}
    for p in fin_punct:
        ring_records[p] = (len(pts), ntheta)
        pts.extend(p + r_glue * np.exp(1j * glue_angles))
        extra = _graded_rings(p, r_glue, 2 * math.pi * r_glue / ntheta, h,
                              min(0.45 * min_gap if len(special) > 1 else 0.9,
                                  R_core - 0.3))
        pts.extend(extra)
    eps_b = 0.5 * h
    branch_rings = {}
    for q in branch_pts:
        nb = max(10, int(math.ceil(2 * math.pi * eps_b / h)) * 3)
        branch_rings[q] = (len(pts), nb)
        pts.extend(q + eps_b * np.exp(1j * (np.arange(nb) * 2 * math.pi / nb)))
        extra = _graded_rings(q, eps_b, 2 * math.pi * eps_b / nb, h,
                              min(0.45 * min_gap if len(special) > 1 else 0.9,
                                  R_core - 0.3))
        pts.extend(extra)
    outer_start = len(pts)
    pts.extend(R_core * np.exp(1j * outer_angles))
    structured = np.array(pts, dtype=complex)

    cloud = _hex_cloud(R_core * 0.995, h)
    keep = np.abs(cloud) < R_core - 0.55 * h
    for p in fin_punct:
        keep &= np.abs(cloud - p) > r_glue + 0.5 * h
    for q in branch_pts:
        keep &= np.abs(cloud - q) > eps_b + 0.5 * h
    cand = cloud[keep]
    if len(cand):
        tree = cKDTree(np.stack([structured.real, structured.imag], axis=1))
        d, _ = tree.query(np.stack([cand.real, cand.imag], axis=1))
        cand = cand[d > 0.6 * h]
        core_pts = np.concatenate([structured, cand])
    else:
        core_pts = structured

    xy = np.stack([core_pts.real, core_pts.imag], axis=1)
    tri = Delaunay(xy)
    cents = core_pts[tri.simplices].mean(axis=1)
    good = np.abs(cents) < R_core
    for p in fin_punct:
        good &= np.abs(cents - p) > r_glue
    for q in branch_pts:
        good &= np.abs(cents - q) > eps_b
    tris = tri.simplices[good]

    pot = np.array([dens.pot_z(z) for z in core_pts])
    e2l = np.array([dens.e2lam_z(z) for z in core_pts])
    diri = np.zeros(len(core_pts), dtype=bool)
    for q, (start, nb) in branch_rings.items():
        diri[start:start + nb] = True
    b.add("core", xy, tris, pot, e2l, np.ones(len(core_pts)), diri, core_pts)

    # ---- cap over infinity when it is a regular point --------------------
    cap_off = None
    if not has_inf_punct:
        w_r = 1.0 / R_core
        w_ring = (1.0 / (R_core * np.exp(1j * outer_angles)))
        wpts = [w_ring]
        spacing = 2 * math.pi * w_r / n_out
        rho = w_r
        k = 0
        while rho > 1.5 * spacing:
            rho -= spacing
            k += 1
            nk = max(8, int(math.ceil(2 * math.pi * rho / spacing)))
            off = (0.5 * (k % 2)) * 2 * math.pi / nk
            wpts.append(rho * np.exp(1j * (np.arange(nk) * 2 * math.pi / nk + off)))
        wpts.append(np.array([0j]))
        wp = np.concatenate(wpts)
        wxy = np.stack([wp.real, wp.imag], axis=1)
        wtri = Delaunay(wxy)
        wc = wp[wtri.simplices].mean(axis=1)
        wtris = wtri.simplices[np.abs(wc) < w_r]
        wpot = np.array([dens.pot_w(w) for w in wp])
        we2l = np.array([dens.e2lam_w(w) for w in wp])
        wbase = np.where(wp == 0, complex(np.inf, 0.0), 1.0 / np.where(wp == 0, 1, wp))
        cap_off = b.add("cap", wxy, wtris, wpot, we2l, np.ones(len(wp)),
                        np.zeros(len(wp), dtype=bool), wbase)

    # ---- collars ----------------------------------------------------------
    collar_offsets = {}
    for p in s.punctures:
        m = orders[p]
        r_tr = truncation_radius(m, R)
        r_g = (1.0 / R_core) if is_infinity(p) else r_glue
        if r_tr >= 0.7 * r_g:
            raise DisjointnessViolation(
                f"truncation radius {r_tr:g} reaches the glue circle at {p}; "
                f"increase R")
        t_lo, t_hi = math.log(r_tr), math.log(r_g)
        nth = n_out if is_infinity(p) else ntheta
        nt = max(2, int(math.ceil((t_hi - t_lo) / h)))
        ts = np.linspace(t_lo, t_hi, nt + 1)
        thetas = -outer_angles if is_infinity(p) else glue_angles
        verts_xy, ctris, ctri_xy = _cylinder_grid(ts, thetas)
        tvals = verts_xy[:, 0]
        zeta = np.exp(tvals + 1j * verts_xy[:, 1])
        jac2 = np.exp(2.0 * tvals)
        if is_infinity(p):
            cpot = np.array([dens.pot_w(w) for w in zeta]) * jac2
            ce2l = np.array([dens.e2lam_w(w) for w in zeta]) * jac2
            cbase = 1.0 / zeta
        else:
            zz = p + zeta
            cpot = np.array([dens.pot_z(z) for z in zz]) * jac2
            ce2l = np.array([dens.e2lam_z(z) for z in zz]) * jac2
            cbase = zz
        cu = _collar_weight(m, tvals, t_hi)
        cdir = np.isclose(tvals, t_lo)
        off = b.add(f"collar:{p}", verts_xy, ctris, cpot, ce2l, cu, cdir, cbase,
                    tri_xy=ctri_xy)
        collar_offsets[p] = (off, nt, nth)

    # ---- identify glue rings ----------------------------------------------
    n_total = sum(len(q) for q in b.pot)
    remap = np.arange(n_total)
    for p in s.punctures:
        off, nt, nth = collar_offsets[p]
        glue_local = off + nt * nth + np.arange(nth)
        if is_infinity(p):
            target = outer_start + np.arange(n_out)
        else:
            start, n_ring = ring_records[p]
            target = start + np.arange(n_ring)
        remap[glue_local] = target
    if cap_off is not None:
        remap[cap_off + np.arange(n_out)] = outer_start + np.arange(n_out)

    return b.finalize(remap=remap,
                      notes={"R_core": R_core, "r_glue": r_glue,
                             "ntheta": ntheta,
                             "branch_excised": {str(q): eps_b for q in branch_pts},
                             "end_orders": {str(p): orders[p] for p in s.punctures}})


def build_mesh(s: SurfaceSpec, R: float, h: float,
               min_angle: float = 10.0) -> ConformalMesh:
    """Entry point: dispatch on topology and puncture layout, then check
    triangle quality and potential finiteness."""
    if s.topology == "torus":
        mesh = build_torus_mesh(s, h)
    else:
        fin = [p for p in s.punctures if not is_infinity(p)]
        has_inf = any(is_infinity(p) for p in s.punctures)
        if len(s.punctures) == 2 and has_inf and fin == [0j] and not s.marked_points:
            mesh = build_cylinder_mesh(s, R, h)
        else:
            mesh = build_sphere_mesh(s, R, h)
    ang = mesh.min_angle_deg()
    if ang < min_angle:
        raise MeshQuality(f"min triangle angle {ang:.2f} deg < {min_angle} deg")
    if not (np.all(np.isfinite(mesh.pot)) and np.all(np.isfinite(mesh.e2lam))
            and np.all(np.isfinite(mesh.weight))):
        raise MeshQuality("non-finite vertex data (branch point not excised?)")
    return mesh
