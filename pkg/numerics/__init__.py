# Numerics Package
from .gridcore import (
    # Domains and fields
    ShapeSpec,
    GridDomain,
    ScalarField,
    build_grid_domain,

    # Measures and level sets
    volume,
    perimeter_estimate,
    superlevel_set,
    distance_transform,
    convexity_score,
)

from .mixedop import (
    FractionalKernel,
    MixedOperator,
    EnergyForms,
    build_kernel,
    build_operator,
    apply_local,
    apply_nonlocal,
    apply_nonlocal_fast,
    apply_mixed,
    energy_forms,
    rayleigh_quotient,
)

from .eigsolve import (
    EigenPair,
    BoundaryTrace,
    principal_eigenpair,
    rayleigh_upper_bound,
    normal_derivative_trace,
)

from .rearrange import (
    RearrangedField,
    PolyaSzegoReport,
    schwarz_rearrange,
    polya_szego_report,
)

from .convexgeom import (
    ConvexPolygon,
    Ball,
    SandwichCertificate,
    RadialBody,
    area,
    perimeter,
    chebyshev_inball,
    min_enclosing_ball,
    ball_sandwich,
    bonnesen_deficit,
    hull_counterexample,
    bump_counterexample,
    curvature,
)
