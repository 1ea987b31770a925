"""Assembly of the Jacobi quadratic form, negative-inertia counting and the
truncated-domain index estimate.

The count uses Sylvester's law: with B positive definite, the number of
negative eigenvalues of the pencil (A, B) equals the negative inertia of A,
so one symmetric-indefinite factorization replaces an eigensolver.  Dirichlet
conditions at the truncation circles make the counts nondecreasing in R and
convergent (from below) to the Morse index.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import ConformalMesh, build_mesh
from .surface import SurfaceSpec, fundamental_divisor, index_bound


class AssemblyError(Exception):
    pass


class FactorizationBreakdown(Exception):
    pass


class NotConverged(Exception):
    pass


def assemble(mesh: ConformalMesh):
    """(A, B) in interior (non-Dirichlet) degrees of freedom.

    A = P1 stiffness (flat in each conformal chart piece) + lumped potential
    mass with density 2 K e^{2 lambda}; B = lumped mass with density
    u^2 e^{2 lambda}.  One-point barycentric quadrature for both masses.
    """
    xy = mesh.tri_xy
    tris = mesh.triangles
    n = mesh.n_vertices

    e1 = xy[:, 1] - xy[:, 0]
    e2 = xy[:, 2] - xy[:, 0]
    area2 = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    if np.any(area2 <= 0):
        raise AssemblyError("degenerate or negatively oriented triangle")
    area = 0.5 * area2

    if not (np.all(np.isfinite(mesh.tri_pot)) and np.all(np.isfinite(mesh.tri_wdens))):
        raise AssemblyError("non-finite element density")

    # P1 gradients: with edge vectors opposite each vertex,
    # K_ij = (b_i b_j + c_i c_j) / (4 area)
    b = np.stack([xy[:, 1, 1] - xy[:, 2, 1],
                  xy[:, 2, 1] - xy[:, 0, 1],
                  xy[:, 0, 1] - xy[:, 1, 1]], axis=1)
    c = np.stack([xy[:, 2, 0] - xy[:, 1, 0],
                  xy[:, 0, 0] - xy[:, 2, 0],
                  xy[:, 1, 0] - xy[:, 0, 0]], axis=1)

    rows, cols, vals = [], [], []
    for i in range(3):
        for j in range(3):
            rows.append(tris[:, i])
            cols.append(tris[:, j])
            vals.append((b[:, i] * b[:, j] + c[:, i] * c[:, j]) / (4.0 * area))
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    A = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()

    lump_pot = np.zeros(n)
    lump_w = np.zeros(n)
    for i in range(3):
        np.add.at(lump_pot, tris[:, i], area * mesh.tri_pot / 3.0)
        np.add.at(lump_w, tris[:, i], area * mesh.tri_wdens / 3.0)
    A = A + sp.diags(lump_pot)
    B = sp.diags(lump_w).tocsr()

    interior = ~mesh.dirichlet
    idx = np.where(interior)[0]
    A = A[idx][:, idx].tocsr()
    B = B[idx][:, idx].tocsr()
    A = 0.5 * (A + A.T)
    return A, B, idx


@dataclass
class InertiaResult:
    negative: int
    zero: int
    method: str
    shift: float = 0.0


def _inertia_dense(Ad: np.ndarray, band: float) -> tuple[int, int]:
    # Bunch-Kaufman LDL^T; inertia read off the block-diagonal factor
    lu, d, perm = sla.ldl(Ad, lower=True)
    neg = zero = 0
    i = 0
    nn = d.shape[0]
    while i < nn:
        if i + 1 < nn and (d[i + 1, i] != 0.0 or d[i, i + 1] != 0.0):
            ev = np.linalg.eigvalsh(d[i: i + 2, i: i + 2])
            for e in ev:
                if e < -band:
                    neg += 1
                elif abs(e) <= band:
                    zero += 1
            i += 2
        else:
            e = d[i, i]
            if e < -band:
                neg += 1
            elif abs(e) <= band:
                zero += 1
            i += 1
    return neg, zero


def negative_inertia(A, eps_zero: float = 1e-9, dense_cutoff: int = 1200) -> InertiaResult:
    """Number of negative eigenvalues of a symmetric matrix.

    Dense Bunch-Kaufman below the cutoff; above it, a sparse triangular
    factorization with diagonal pivoting (SuperLU with zero pivot threshold,
    symmetric mode), whose pivot signs give the inertia.  Eigenvalues within
    eps_zero * ||A|| of zero are counted separately as zero.
    """
    if sp.issparse(A):
        n = A.shape[0]
        scale = float(abs(A).max()) if n else 0.0
    else:
        A = np.asarray(A, dtype=float)
        n = A.shape[0]
        scale = float(np.max(np.abs(A))) if n else 0.0
    if n == 0:
        return InertiaResult(0, 0, "empty")
    band = eps_zero * max(scale, 1e-300)

    if n <= dense_cutoff:
        Ad = A.toarray() if sp.issparse(A) else A
        try:
            neg, zero = _inertia_dense(Ad, band)
            return InertiaResult(neg, zero, "dense-ldl")
        except Exception as exc:  # pragma: no cover - LAPACK breakdown
            shift = band if band > 0 else 1e-12
            try:
                neg, zero = _inertia_dense(Ad + shift * np.eye(n), band)
            except Exception as exc2:
                raise FactorizationBreakdown(str(exc2)) from exc
            return InertiaResult(neg, zero, "dense-ldl", shift=shift)

    Acsc = sp.csc_matrix(A)
    shift_used = 0.0
    for attempt in range(3):
        try:
            lu = spla.splu(Acsc if shift_used == 0.0 else
                           (Acsc + shift_used * sp.identity(n, format="csc")),
                           diag_pivot_thresh=0.0,
                           permc_spec="MMD_AT_PLUS_A",
                           options=dict(SymmetricMode=True))
        except RuntimeError:
            shift_used = band * (10.0 ** attempt) if band > 0 else 1e-12
            continue
        # with zero pivot threshold no row interchanges should occur; the
        # pivot signs then carry the inertia by Sylvester's law
        if not np.array_equal(lu.perm_r[np.argsort(lu.perm_c)],
                              np.arange(n)):
            shift_used = band * (10.0 ** attempt) if band > 0 else 1e-12
            continue
        du = lu.U.diagonal()
        neg = int(np.sum(du < -band))
        zero = int(np.sum(np.abs(du) <= band))
        return InertiaResult(neg, zero, "sparse-lu", shift=shift_used)
    raise FactorizationBreakdown("sparse factorization kept pivoting/breaking")


@dataclass
class SpectralRow:
    R: float
    h: float
    n_vertices: int
    inertia_minus: int
    inertia_zero: int


@dataclass
class SpectralReport:
    rows: list
    converged: bool
    estimate: int | None
    monotone_ok: bool
    bound: Fraction | None = None
    bound_ceiling: int | None = None
    notes: dict = field(default_factory=dict)

    def table(self):
        return [(r.R, r.h, r.n_vertices, r.inertia_minus, r.inertia_zero)
                for r in self.rows]


def estimate_index(s: SurfaceSpec, R_list=(5.0, 10.0, 20.0),
                   h_list=(0.25, 0.125, 0.0625),
                   eps_zero: float = 1e-9) -> SpectralReport:
    """Negative-inertia counts over the (R, h) schedule.

    Converged when the count is constant across the last two R values at the
    finest h and across the last two h refinements at the largest R; the
    converged count is the index estimate (a lower bound by Dirichlet
    truncation).
    """
    if s.sidedness != "two":
        raise NotConverged("spectral estimation is for two-sided scenes")
    R_list = sorted(R_list)
    h_list = sorted(h_list, reverse=True)
    counts = {}
    rows = []
    for h in h_list:
        for R in R_list:
            if s.topology == "torus" and (R != R_list[-1]):
                continue  # torus has no truncation; one R suffices
            mesh = build_mesh(s, R, h)
            A, B, _ = assemble(mesh)
            res = negative_inertia(A, eps_zero=eps_zero)
            counts[(R, h)] = res
            rows.append(SpectralRow(R=R, h=h, n_vertices=A.shape[0],
                                    inertia_minus=res.negative,
                                    inertia_zero=res.zero))

    monotone_ok = True
    for h in h_list:
        seq = [counts[(R, h)].negative for R in R_list if (R, h) in counts]
        if any(b < a for a, b in zip(seq, seq[1:])):
            monotone_ok = False

    if s.topology == "torus":
        fin = [counts[(R_list[-1], h)].negative for h in h_list]
        converged = len(set(fin[-2:])) == 1
        est = fin[-1] if converged else None
    else:
        h_fine = h_list[-1]
        r_tail = [counts[(R, h_fine)].negative for R in R_list[-2:]]
        R_big = R_list[-1]
        h_tail = [counts[(R_big, h)].negative for h in h_list[-2:]]
        borderline = any(counts[(R_big, h)].zero > _expected_zero(s)
                         for h in h_list[-1:])
        converged = (len(set(r_tail)) == 1 and len(set(h_tail)) == 1
                     and not borderline)
        est = r_tail[-1] if converged else None
    return SpectralReport(rows=rows, converged=converged, estimate=est,
                          monotone_ok=monotone_ok,
                          notes={"eps_zero": eps_zero})


def _expected_zero(s: SurfaceSpec) -> int:
    # a boundaryless flat torus keeps its constant zero mode
    return 1 if s.topology == "torus" else 0


@dataclass
class BoundVerdict:
    passed: bool
    estimate: int
    bound: Fraction
    ceiling: int
    margin: int


def compare_bound(report: SpectralReport, bound) -> BoundVerdict:
    """PASS iff the converged estimate is at least the bound's ceiling."""
    if not report.converged or report.estimate is None:
        raise NotConverged("cannot compare an unconverged estimate")
    est = report.estimate
    return BoundVerdict(passed=est >= bound.ceiling, estimate=est,
                        bound=bound.value, ceiling=bound.ceiling,
                        margin=est - bound.ceiling)


def estimate_with_bound(s: SurfaceSpec, **kw) -> tuple[SpectralReport, BoundVerdict]:
    rep = estimate_index(s, **kw)
    D = fundamental_divisor(s)
    b = index_bound(s.genus, D, s.sidedness)
    rep.bound = b.value
    rep.bound_ceiling = b.ceiling
    return rep, compare_bound(rep, b)


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

def weighted_eigenvalues(A, B, k: int = 6):
    """Smallest k eigenvalues of (A, B) by a dense solve (diagnostic only;
    the count itself always comes from the inertia of A)."""
    Ad = A.toarray() if sp.issparse(A) else np.asarray(A)
    Bd = B.toarray() if sp.issparse(B) else np.asarray(B)
    vals = sla.eigh(Ad, Bd, eigvals_only=True)
    return vals[:k]


def log_cutoff_rayleigh(s: SurfaceSpec, T1: float, T2: float,
                        n_quad: int = 4000) -> float:
    """Rayleigh quotient numerator Q(psi, psi) of the radial log-cutoff test
    function on a rotationally symmetric scene (catenoid/Enneper style:
    |g| and |g'| radial).

    psi = 1 on the core, falling linearly in the cylinder coordinate of each
    end between T1 and T2.  Q < 0 certifies index >= 1 on the truncated
    domain containing supp(psi).
    """
    from .represent import jacobi_potential

    two_sided_cyl = len(s.punctures) == 2
    ts = np.linspace(-T2 if two_sided_cyl else -10.0, T2, n_quad)
    dt = ts[1] - ts[0]
    grad_term = 0.0
    pot_term = 0.0
    for t in ts:
        # cutoff decays toward both ends on an annulus, only outward on a
        # one-ended scene
        a = abs(t) if two_sided_cyl else t
        psi = 1.0 if a <= T1 else max(0.0, (T2 - a) / (T2 - T1))
        dpsi = 1.0 / (T2 - T1) if T1 < a < T2 else 0.0
        # chart: z = e^{t} on a cylinder scene; z = r = e^{t} radial otherwise
        z = math.exp(t)
        pot_t = jacobi_potential(s, complex(z, 0.0)) * z * z
        grad_term += dpsi * dpsi * dt
        pot_term += pot_t * psi * psi * dt
    return 2.0 * math.pi * (grad_term + pot_term)
