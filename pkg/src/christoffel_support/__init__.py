"""Support estimation with the empirical Christoffel function."""

from .christoffel import (
    AffineMap,
    ChristoffelModel,
    MomentMatrix,
    build_moment_matrix,
    cd_kernel_diag,
    christoffel,
    factorize,
    fit,
    load_model,
    orthonormal_transform,
    save_model,
    standardize,
)
from .errors import *  # noqa: F401,F403
from .geometry import (
    Annulus,
    Ball,
    BallUnion,
    Difference,
    GeometryReport,
    Raster,
    boundary_cells,
    compare_rasters,
    contour_polylines,
    hausdorff_distance,
    rasterize,
    rasterize_level_set,
    sample_shape,
    symdiff_measure,
)
from .oracles import (
    BallJacobiMeasure,
    BoundReport,
    analytic_moment_matrix,
    ball_jacobi_moment,
    christoffel_analytic,
    concentration_bound,
    gegenbauer_boundary_kernel,
    inequality_suite,
    inside_lower_bound,
    outside_upper_bound,
    sup_kernel_bound,
    technical_gap,
)
from .polybasis import (
    MonomialBasis,
    MultiIndex,
    basis_size,
    enumerate_basis,
    eval_monomials,
    generalized_binomial,
)
from .thresholding import (
    C_pra,
    SchemeOutputs,
    SchemeParams,
    SupportEstimate,
    c_r_constant,
    estimate_support,
    min_score_threshold,
    omega_p,
    practical_degree,
    select_scheme,
    sphere_area,
)

__version__ = "0.1.0"
