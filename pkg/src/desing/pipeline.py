"""End-to-end analyses built from the core modules.

The CLI and the acceptance suite drive everything through these
functions so that "detect", "blow up", and "verify" mean exactly one
thing each. All policies that fill unspecified knobs from the data
(window radius, locality radius, angular scale) live here, named and
documented, rather than being buried in command parsing.
"""

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .blowup import (
    blow_up,
    regularization_check,
    verify_isomorphism_away_from_center,
    with_dense_divisor,
)
from .cone import (
    DEFAULT_MERGE_RAD,
    cluster_directions,
    local_directions,
    with_cluster_dimensions,
)
from .dimension import max_variation
from .errors import DesingError, EmptyNeighborhood
from .geometry import RadiusGrid
from .singularity import SingularityParams, point_profile, singular_locus


def auto_r_max(cloud):
    """Data-driven analysis window: 0.3 times the 90th percentile of
    distances to the cloud centroid. Big enough to cross component
    scale on the synthetic benchmarks, small enough to stay inside the
    data's radius."""
    centroid = cloud.points.mean(axis=0)
    d = cloud.distances_to(centroid)
    return 0.3 * float(np.quantile(d, 0.9))


def auto_r_loc(profile, witness):
    """Locality radius for direction harvesting: the largest radius
    before the witness scale r2 where the center's dimension sample is
    still defined. Anchors "sufficiently small" to the detected
    instability instead of a magic constant."""
    candidates = [
        s.r for s in profile.defined_samples() if s.r < witness.r2 - 1e-15
    ]
    if candidates:
        return float(max(candidates))
    return float(witness.r1)


def lambda_median(cloud, s, cone):
    """Angular scale: median base distance from the center to the
    cone's member points. Makes one radian of direction cost about one
    typical neighbor spacing."""
    ids = sorted(i for c in cone.clusters for i in c.member_ids)
    d = np.sqrt(
        np.add.reduce((cloud.points[ids] - np.asarray(s)) ** 2, axis=1)
    )
    return float(np.median(d))


def lambda_separation(cloud, s, cone, r_max, safety=1.05):
    """Angular scale sized so no foreign branch can enter any
    exceptional ball inside the analysis window.

    For each cluster, measure the smallest angle from its centroid to
    any *member direction* of another cluster (member directions, not
    centroids: the nearest foreign point is what actually floods in).
    Setting lambda = safety * r_max / min_gap puts the closest foreign
    lift at blown-up distance >= safety * r_max from every exceptional
    point, so the window sees one branch only.
    """
    from .geometry import projective_distance_rows, projective_from_vector

    s = np.asarray(s, dtype=np.float64)
    reps_by_cluster = []
    for c in cone.clusters:
        reps = np.vstack(
            [
                projective_from_vector(cloud.points[i] - s).rep
                for i in c.member_ids
            ]
        )
        reps_by_cluster.append(reps)
    min_gap = np.pi / 2.0
    for j, c in enumerate(cone.clusters):
        for o, reps in enumerate(reps_by_cluster):
            if o == j:
                continue
            gaps = projective_distance_rows(c.centroid.rep, reps)
            min_gap = min(min_gap, float(np.min(gaps)))
    if min_gap <= 1e-9:
        # branches share directions: no lambda separates them
        return float("inf")
    return safety * float(r_max) / min_gap


@dataclass(frozen=True)
class ConeConfig:
    k: Optional[int] = None  # None: choose automatically via merging
    merge_threshold: float = DEFAULT_MERGE_RAD
    r_loc: Optional[float] = None  # None: auto from the witness scale


@dataclass(frozen=True)
class BlowupConfig:
    lam: Union[str, float] = "median"  # "median" | "separation" | value
    dense_divisor: int = 0


@dataclass(frozen=True)
class CenterAnalysis:
    index: Optional[int]
    profile: object
    witness: object  # SingularityWitness-shaped or None
    is_singular: bool
    variation: Optional[float]


@dataclass(frozen=True)
class TheoremRecord:
    """Everything one blow-up-and-verify run produced."""

    center: CenterAnalysis
    cone: object
    lam: float
    lam_policy: str
    blownup: object
    iso_ok: bool
    iso_report: dict
    verdicts: list
    passed: bool  # every cluster-backed exceptional point regular


def detect(cloud, params, workers=1):
    return singular_locus(cloud, params, workers=workers)


def analyze_center(cloud, index, params):
    """Profile one point and read off its max-variation witness.

    The witness is reported even when it does not clear epsilon, so a
    blow-up can be driven at any point; is_singular records whether
    the threshold was actually exceeded.
    """
    profile = point_profile(cloud, index, params)
    found = max_variation(profile, params.r_max)
    if found is None:
        return CenterAnalysis(
            index=index,
            profile=profile,
            witness=None,
            is_singular=False,
            variation=None,
        )
    variation, lo, hi = found
    from .singularity import SingularityWitness

    witness = SingularityWitness(
        r1=lo.r, r2=hi.r, dim_r1=lo.dim, dim_r2=hi.dim, variation=variation
    )
    return CenterAnalysis(
        index=index,
        profile=profile,
        witness=witness,
        is_singular=variation > params.epsilon,
        variation=variation,
    )


def resolve_lambda(cloud, s, cone, params, cfg):
    if isinstance(cfg.lam, str):
        if cfg.lam == "median":
            return lambda_median(cloud, s, cone), "median"
        if cfg.lam == "separation":
            return (
                lambda_separation(cloud, s, cone, params.r_max),
                "separation",
            )
        raise DesingError(f"unknown lambda policy {cfg.lam!r}")
    lam = float(cfg.lam)
    return lam, "explicit"


def verify_theorem(cloud, index, params, cone_cfg=None, blow_cfg=None):
    """Blow up cloud point `index` and check regularization.

    Runs the whole chain: center profile and witness, direction
    harvest, clustering, per-cluster dimension estimates, blow-up,
    projection sanity, and the per-exceptional-point regularization
    verdicts. `passed` requires every cluster-backed exceptional point
    to come back regular; dense exploration points never affect it.
    """
    cone_cfg = cone_cfg or ConeConfig()
    blow_cfg = blow_cfg or BlowupConfig()
    center = analyze_center(cloud, index, params)
    s = cloud.points[index]

    if cone_cfg.r_loc is not None:
        r_loc = float(cone_cfg.r_loc)
    elif center.witness is not None:
        r_loc = auto_r_loc(center.profile, center.witness)
    else:
        raise EmptyNeighborhood(
            "no defined samples at the center: pass an explicit r_loc"
        )

    pairs, skipped = local_directions(cloud, s, r_loc)
    cone = cluster_directions(
        pairs,
        k=cone_cfg.k,
        merge_threshold=cone_cfg.merge_threshold,
        center=s,
        r_loc=r_loc,
        skipped_coincident=skipped,
    )
    try:
        grid = RadiusGrid.geometric(
            max(r_loc / 64.0, 1e-9), params.r_max, params.grid_count
        )
        cone = with_cluster_dimensions(cone, cloud, grid, params.v_min)
    except DesingError:
        pass  # cluster dims stay None; the verdicts do not need them

    lam, lam_policy = resolve_lambda(cloud, s, cone, params, blow_cfg)
    blownup = blow_up(cloud, s, cone, lam)
    if blow_cfg.dense_divisor > 0:
        blownup = with_dense_divisor(blownup, blow_cfg.dense_divisor)
    iso_ok, iso_report = verify_isomorphism_away_from_center(cloud, blownup)
    verdicts = regularization_check(blownup, params)
    cluster_backed = [v for v in verdicts if v.cluster_index is not None]
    passed = bool(cluster_backed) and all(v.passed for v in cluster_backed)
    return TheoremRecord(
        center=center,
        cone=cone,
        lam=lam,
        lam_policy=lam_policy,
        blownup=blownup,
        iso_ok=iso_ok,
        iso_report=iso_report,
        verdicts=verdicts,
        passed=passed and iso_ok,
    )


def resolve_params(
    cloud,
    epsilon=1.0,
    r_max=None,
    v_min=None,
    estimator=None,
    grid_count=None,
):
    """SingularityParams with the documented data-driven default for
    r_max when none is given."""
    kwargs = {}
    if v_min is not None:
        kwargs["v_min"] = v_min
    if estimator is not None:
        kwargs["estimator"] = estimator
    if grid_count is not None:
        kwargs["grid_count"] = grid_count
    if r_max is None:
        r_max = auto_r_max(cloud)
    return SingularityParams(epsilon=epsilon, r_max=float(r_max), **kwargs)
