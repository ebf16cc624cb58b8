"""desing: singularity detection and metric desingularization for
embedding point clouds.

The pipeline in one breath: estimate each point's local intrinsic
dimension from ball-count growth across a radius grid; flag points
whose dimension is unstable across scales; cluster the directions
around a flagged point to estimate its tangent cone; blow the point
up into base x P^{n-1}, one exceptional point per direction cluster;
and verify that local dimension is stable again at every exceptional
point of the lifted space.
"""

__version__ = "0.1.0"

from .errors import (
    DegenerateCenter,
    DesingError,
    DimensionMismatch,
    EmptyContext,
    EmptyNeighborhood,
    InfeasibleSpec,
    InsufficientNeighbors,
    InvalidGrid,
    MalformedHeader,
    MissingContext,
    NoDefinedSamples,
    NonFiniteValue,
    NonPositiveScale,
    OffManifold,
    UndefinedAtRadius,
    UnknownSingularPoint,
    ZeroAggregate,
    ZeroVector,
)
from .geometry import (
    BlowupPoint,
    PointCloud,
    ProjectivePoint,
    RadiusGrid,
    blowup_distance,
    projective_distance,
    projective_from_vector,
    range_count,
)
from .dimension import (
    DimensionProfile,
    RegressionWindow,
    TwoPoint,
    default_grid,
    dimension_at,
    dimension_profile,
    dimensional_variation,
    local_volume,
    max_variation,
)
from .singularity import (
    REGULAR,
    SINGULAR,
    UNDETERMINED,
    PointVerdict,
    SingularityParams,
    SingularityWitness,
    SingularLocusReport,
    is_singular,
    point_profile,
    singular_locus,
)
from .cone import (
    DirectionCluster,
    TangentConeEstimate,
    cluster_directions,
    estimate_cluster_dimension,
    local_directions,
    with_cluster_dimensions,
)
from .blowup import (
    BlownUpCloud,
    ExceptionalVerdict,
    blow_up,
    project,
    regularization_check,
    verify_isomorphism_away_from_center,
)
from .contextmap import (
    AggregatorSpec,
    ContextEntry,
    ContextWindow,
    HybridRepresentation,
    aggregate,
    context_map,
    hybrid_embed,
    nearest_divisor_component,
)
from .synth import (
    GroundTruth,
    SynthSpec,
    generate,
    oracle_dimension,
    oracle_tangent_cone,
)
from .pipeline import (
    BlowupConfig,
    ConeConfig,
    analyze_center,
    auto_r_loc,
    auto_r_max,
    detect,
    resolve_params,
    verify_theorem,
)
