"""surfindex: framed minimal / CMC-1 surface toolkit.

Holomorphic Weierstrass and Bryant representations, the Schwarzian engine
connecting them (Lawson correspondence), divisor-based Morse index lower
bounds with an exact genus-0 h^1 oracle, and a finite-element verification of
the bound by negative-inertia counting on truncated domains.
"""

from .expr import (
    INFTY,
    BranchUnset,
    EssentialOrBranch,
    ExprError,
    Jet,
    LaurentSeries,
    MeroExpr,
    ParseError,
    SingularPoint,
    ZVAR,
    differentiate,
    eval_at,
    eval_jet,
    laurent,
    parse_expr,
    to_string,
)
from .moebius import Mat2, MoebiusMap, SingularMatrix, mobius_from_three_points
from .schwarzian import (
    BadPole,
    DegenerateData,
    QuadDifferential,
    ResonanceError,
    SchwarzianSolution,
    classify_end,
    schwarzian,
    schwarzian_jet_at,
    schwarzian_shift,
    solve_schwarzian_series,
)
from .surface import (
    BryantData,
    Divisor,
    IntrinsicData,
    IrregularEnd,
    MonodromyReport,
    NotAnEnd,
    SurfaceSpec,
    Unsupported,
    WeierstrassData,
    branch_divisor,
    end_order,
    fundamental_divisor,
    h1_exact_genus0,
    index_bound,
    l2star_membership,
    monodromy_report,
)
from .represent import (
    associated_family,
    bryant_position,
    gauss_curvature,
    harmonic_form_coeffs,
    lawson_bryant_to_min,
    lawson_min_to_bryant,
    metric_factor,
    minimal_immersion,
    null_check,
    omega_matrix,
    ros_identity_residual,
    total_curvature,
)
from .mesh import ConformalMesh, MeshQuality, build_mesh
from .spectral import (
    NotConverged,
    SpectralReport,
    assemble,
    compare_bound,
    estimate_index,
    negative_inertia,
)
from .scenes import Scene, catalog_names, catalog_scene, load_scene

__version__ = "0.1.0"
