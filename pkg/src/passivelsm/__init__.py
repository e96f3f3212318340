"""passivelsm: sound-soft obstacle reconstruction from passive
cross-correlation measurements by the linear sampling method, with the
full 2D Helmholtz forward simulation needed to generate synthetic data.
"""

from .specfun import (
    DomainError,
    SingularityError,
    WaveContext,
    bessel_j,
    bessel_y,
    green2d,
    hankel1,
)
from .geometry import (
    BoundaryCurve,
    DiscretizedBoundary,
    PointSet,
    canonical_kite,
    circle_points,
    circle_points_uniform,
    discretize,
    place_scatterer,
)
from .forward import (
    GeometryError,
    PointScattererConfig,
    ResonanceWarning,
    ScatterSolution,
    SingleLayerSystem,
    assemble_single_layer,
    evaluate_scattered,
    mie_scattered_circle,
    point_scatterer_scattered,
    solve_point_source,
    total_field,
)
from .acquisition import (
    FieldMatrix,
    add_noise,
    covariance_matrix,
    cross_correlation_matrix,
    imaginary_near_field_matrix,
    near_field_matrix,
)
from .inversion import (
    GridSpec,
    IndicatorMap,
    MorozovNoRootError,
    ProbeResult,
    SvdFactors,
    indicator_map,
    morozov_alpha,
    probe_point,
    rhs_vector,
    svd,
    tikhonov_gnorm,
    tikhonov_solve,
)
from .pipeline import ExperimentConfig, RunManifest, preset, run

__version__ = "0.1.0"
