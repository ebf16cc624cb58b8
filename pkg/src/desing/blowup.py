"""The point blow-up on a cloud and the regularization verifier.

Blowing up at a center s lifts every other point x to the pair
(x, [x - s]) in base x P^{n-1} (the strict transform) and adds one
exceptional point (s, c_j) per tangent-cone cluster centroid c_j.
The projection back to the base forgets the direction; it is a
bijection away from s by construction, and the verifier checks that
plus the metric side of the story.

The regularization check is the executable form of the central claim:
at each exceptional point, the blown-up space should show a stable
local dimension (variation under epsilon across the window), because
the product metric separates the branches that were superimposed at s.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dimension import (
    DimensionProfile,
    ProfileSample,
    _dims_from_volumes,
    max_variation,
)
from .errors import DegenerateCenter, DimensionMismatch, NonPositiveScale
from .geometry import (
    BlowupPoint,
    RadiusGrid,
    blowup_distance,
    projective_distance_rows,
    projective_from_vector,
)
from .singularity import REGULAR, SINGULAR, UNDETERMINED

_COINCIDENT_TOL = 1e-12


@dataclass(frozen=True)
class BlownUpCloud:
    """Strict transform plus exceptional points, with the metric scale.

    lifted and exceptional are tuples of BlowupPoint. origin_ids[i] is
    the source-cloud index of lifted[i]. cluster_of_lifted[i] is the
    tangent-cone cluster owning that source point, or -1 when the
    point lies outside the cone's locality radius. Cached coordinate
    matrices make whole-space distance rows cheap.
    """

    center: np.ndarray
    lam: float
    lifted: tuple
    exceptional: tuple
    origin_ids: tuple
    cone: object
    cluster_of_lifted: np.ndarray
    _bases: np.ndarray
    _dir_reps: np.ndarray
    _exc_reps: np.ndarray

    def __len__(self):
        return len(self.lifted) + len(self.exceptional)

    def point_at(self, i):
        """Blown-up point by flat index: lifted first, then exceptional."""
        if i < len(self.lifted):
            return self.lifted[i]
        return self.exceptional[i - len(self.lifted)]

    def distance_row(self, p):
        """Distances from BlowupPoint p to every point of the blown-up
        space (lifted order, then exceptional order). Same arithmetic
        as blowup_distance, vectorized."""
        base_d = np.sqrt(
            np.add.reduce((self._bases - p.base) ** 2, axis=1)
        )
        ang = projective_distance_rows(p.dir.rep, self._dir_reps)
        lifted_d = np.hypot(base_d, self.lam * ang)
        exc_base = np.sqrt(
            np.add.reduce((self.center - p.base) ** 2)
        )
        exc_ang = projective_distance_rows(p.dir.rep, self._exc_reps)
        exc_d = np.hypot(exc_base, self.lam * exc_ang)
        return np.concatenate([lifted_d, exc_d])


def blow_up(cloud, s, cone, lam):
    """Blow the cloud up at s using the given tangent-cone estimate.

    Every point farther than 1e-12 from s is lifted; copies of s have
    no direction and stay behind (the exceptional points stand in for
    them). One exceptional point is created per cone cluster. Raises
    DegenerateCenter when nothing can be lifted.
    """
    s = np.asarray(s, dtype=np.float64)
    if s.shape != (cloud.n,):
        raise DimensionMismatch(
            f"center has shape {s.shape}, cloud lives in R^{cloud.n}"
        )
    lam = float(lam)
    if not lam > 0.0:
        raise NonPositiveScale(f"lambda must be positive, got {lam}")

    diffs = cloud.points - s
    norms = np.sqrt(np.add.reduce(diffs * diffs, axis=1))
    keep = np.flatnonzero(norms >= _COINCIDENT_TOL)
    if keep.size == 0:
        raise DegenerateCenter("every cloud point coincides with the center")

    lifted = []
    dir_reps = np.empty((keep.size, cloud.n))
    for pos, i in enumerate(keep):
        d = projective_from_vector(diffs[i])
        dir_reps[pos] = d.rep
        lifted.append(
            BlowupPoint(base=cloud.points[i].copy(), dir=d, is_exceptional=False)
        )

    exceptional = []
    exc_reps = np.empty((len(cone.clusters), cloud.n))
    for j, cluster in enumerate(cone.clusters):
        exc_reps[j] = cluster.centroid.rep
        exceptional.append(
            BlowupPoint(base=s.copy(), dir=cluster.centroid, is_exceptional=True)
        )

    source_to_cluster = {}
    for j, cluster in enumerate(cone.clusters):
        for i in cluster.member_ids:
            source_to_cluster[i] = j
    cluster_of_lifted = np.array(
        [source_to_cluster.get(int(i), -1) for i in keep], dtype=np.int64
    )

    bases = cloud.points[keep].copy()
    for arr in (bases, dir_reps, exc_reps, cluster_of_lifted):
        arr.setflags(write=False)
    return BlownUpCloud(
        center=s,
        lam=lam,
        lifted=tuple(lifted),
        exceptional=tuple(exceptional),
        origin_ids=tuple(int(i) for i in keep),
        cone=cone,
        cluster_of_lifted=cluster_of_lifted,
        _bases=bases,
        _dir_reps=dir_reps,
        _exc_reps=exc_reps,
    )


def project(p):
    """The projection back to the base space: forget the direction.

    Exceptional points map to the center; lifted points map to their
    source coordinates, making project after lift the identity away
    from the center.
    """
    return p.base


def verify_isomorphism_away_from_center(cloud, blownup, pairs=200, seed=3):
    """Check that the blow-up is invertible away from its center.

    Structural side: origin_ids must be a bijection onto the cloud
    points distinct from s, with bitwise base equality. Metric side,
    on `pairs` deterministic random pairs of lifted points: the
    blown-up distance may exceed the base distance by at most
    lam * pi/2 (the angular term's ceiling), and rebuilding with
    lam/10 must shrink the worst discrepancy at least 5-fold, which is
    the finite form of "the metrics agree as lam -> 0".

    Returns (ok, report) where report lists any failing ids and the
    measured discrepancies.
    """
    s = blownup.center
    diffs = cloud.points - s
    norms = np.sqrt(np.add.reduce(diffs * diffs, axis=1))
    expected = {int(i) for i in np.flatnonzero(norms >= _COINCIDENT_TOL)}
    got = list(blownup.origin_ids)
    report = {
        "missing_ids": sorted(expected - set(got)),
        "unexpected_ids": sorted(set(got) - expected),
        "duplicate_ids": sorted({i for i in got if got.count(i) > 1}),
        "base_mismatch_ids": [],
        "max_discrepancy": 0.0,
        "max_discrepancy_small_lambda": 0.0,
        "bound_violations": 0,
    }
    for pos, i in enumerate(got):
        if i in expected and not np.array_equal(
            blownup.lifted[pos].base, cloud.points[i]
        ):
            report["base_mismatch_ids"].append(i)

    ok_structure = not (
        report["missing_ids"]
        or report["unexpected_ids"]
        or report["duplicate_ids"]
        or report["base_mismatch_ids"]
    )

    m = len(blownup.lifted)
    if m >= 2:
        rng = np.random.Generator(np.random.Philox(seed))
        ii = rng.integers(0, m, size=pairs)
        jj = rng.integers(0, m, size=pairs)
        bound = blownup.lam * np.pi / 2.0 + 1e-12
        worst = 0.0
        worst_small = 0.0
        for a, b in zip(ii, jj):
            if a == b:
                continue
            pa, pb = blownup.lifted[int(a)], blownup.lifted[int(b)]
            base_d = float(
                np.sqrt(np.add.reduce((pa.base - pb.base) ** 2))
            )
            gap = blowup_distance(pa, pb, blownup.lam) - base_d
            gap_small = blowup_distance(pa, pb, blownup.lam / 10.0) - base_d
            if gap > bound:
                report["bound_violations"] += 1
            worst = max(worst, gap)
            worst_small = max(worst_small, gap_small)
        report["max_discrepancy"] = worst
        report["max_discrepancy_small_lambda"] = worst_small
        shrink_ok = worst < 1e-15 or worst_small <= worst / 5.0
    else:
        shrink_ok = True
    ok = ok_structure and report["bound_violations"] == 0 and shrink_ok
    return ok, report


@dataclass(frozen=True)
class ExceptionalVerdict:
    """Outcome of the regularization check at one exceptional point."""

    cluster_index: Optional[int]  # None for extra (dense-sampled) points
    status: str  # regular / singular / undetermined, vs epsilon
    max_variation: Optional[float]
    witness_r: Optional[tuple]  # (r1, r2) realizing the max variation
    median_dim: Optional[float]
    profile: DimensionProfile
    purity: tuple  # per grid radius: own/assigned among lifted, or None
    unassigned_fraction: tuple  # per grid radius, or None when ball empty

    @property
    def passed(self):
        return self.status == REGULAR


def _blown_profile(blownup, p, params, grid, point_id):
    row = blownup.distance_row(p)
    order = np.sort(row)
    if grid is None:
        positive = order[order > _COINCIDENT_TOL]
        if positive.shape[0] < 5 or not positive[4] < params.r_max:
            return None, row
        grid = RadiusGrid.geometric(
            float(positive[4]), params.r_max, params.grid_count
        )
    vols = np.searchsorted(order, grid.radii, side="right")
    dims = _dims_from_volumes(grid.radii, vols, params.estimator, params.v_min)
    samples = tuple(
        ProfileSample(float(r), int(v), d)
        for r, v, d in zip(grid.radii, vols, dims)
    )
    profile = DimensionProfile(
        point_id=point_id, samples=samples, grid=grid, estimator=params.estimator
    )
    return profile, row


def regularization_check(blownup, params, grid=None):
    """Profile every exceptional point of the blown-up space.

    The metric space is the full blown-up cloud (strict transform plus
    all exceptional points) under blowup_distance with the cloud's
    lam. Unless a grid is supplied, each exceptional point gets its
    own log grid rebuilt from blown-up distances (the base-space grid
    has no meaning here) running out to params.r_max.

    Verdict per point: regular when the max dimensional variation over
    defined samples stays below params.epsilon, singular when it does
    not, undetermined when fewer than two samples are defined.

    Purity at radius r counts, among the lifted points inside the
    ball that belong to some cone cluster, the fraction owned by this
    exceptional point's cluster. Points outside the cone's locality
    radius have no cluster; they are tracked separately as the
    unassigned fraction rather than polluting purity, so the exact
    small-radius purity-1.0 guarantee stays testable.
    """
    n_lifted = len(blownup.lifted)
    verdicts = []
    for j, e in enumerate(blownup.exceptional):
        cluster_index = j if j < blownup.cone.k else None
        profile, row = _blown_profile(
            blownup, e, params, grid, point_id=("exceptional", j)
        )
        if profile is None:
            verdicts.append(
                ExceptionalVerdict(
                    cluster_index=cluster_index,
                    status=UNDETERMINED,
                    max_variation=None,
                    witness_r=None,
                    median_dim=None,
                    profile=DimensionProfile(
                        point_id=("exceptional", j),
                        samples=(),
                        grid=None,
                        estimator=params.estimator,
                    ),
                    purity=(),
                    unassigned_fraction=(),
                )
            )
            continue

        lifted_row = row[:n_lifted]
        assigned = blownup.cluster_of_lifted >= 0
        own = blownup.cluster_of_lifted == (
            cluster_index if cluster_index is not None else -2
        )
        purity = []
        unassigned = []
        for r in profile.grid.radii:
            inside = lifted_row <= r
            total = int(np.count_nonzero(inside))
            if total == 0:
                purity.append(None)
                unassigned.append(None)
                continue
            n_assigned = int(np.count_nonzero(inside & assigned))
            unassigned.append((total - n_assigned) / total)
            if n_assigned == 0:
                purity.append(None)
            else:
                purity.append(
                    int(np.count_nonzero(inside & own)) / n_assigned
                )

        found = max_variation(profile, params.r_max)
        if found is None:
            status, var, witness_r, med = UNDETERMINED, None, None, None
        else:
            var, lo, hi = found
            witness_r = (lo.r, hi.r)
            status = REGULAR if var < params.epsilon else SINGULAR
            dims = [s.dim for s in profile.defined_samples(params.r_max)]
            med = float(np.median(dims))
        verdicts.append(
            ExceptionalVerdict(
                cluster_index=cluster_index,
                status=status,
                max_variation=var,
                witness_r=witness_r,
                median_dim=med,
                profile=profile,
                purity=tuple(purity),
                unassigned_fraction=tuple(unassigned),
            )
        )
    return verdicts


def dense_divisor_points(center, n, count, seed=0xD15C0):
    """Extra exceptional points spread over the divisor, for exploring
    the profile away from the tangent-cone clusters.

    For n = 3 this is a golden-angle spiral on the sphere folded
    through the antipodal identification; other ambient dimensions use
    a deterministic isotropic sample (Philox, fixed seed), folded the
    same way. These points have no cluster, so the regularization
    check reports them but excludes them from pass/fail decisions.
    """
    center = np.asarray(center, dtype=np.float64)
    pts = []
    if n == 3:
        golden = (1.0 + np.sqrt(5.0)) / 2.0
        for i in range(count):
            z = 1.0 - (2.0 * i + 1.0) / (2.0 * count)
            rho = np.sqrt(max(0.0, 1.0 - z * z))
            phi = 2.0 * np.pi * i / golden
            v = np.array([rho * np.cos(phi), rho * np.sin(phi), z])
            pts.append(v)
    else:
        rng = np.random.Generator(np.random.Philox(seed))
        for _ in range(count):
            pts.append(rng.standard_normal(n))
    out = []
    for v in pts:
        out.append(
            BlowupPoint(
                base=center.copy(),
                dir=projective_from_vector(v),
                is_exceptional=True,
            )
        )
    return out


def with_dense_divisor(blownup, count, seed=0xD15C0):
    """A copy of the blown-up cloud with `count` extra divisor points
    appended after the cluster-backed exceptional points."""
    extra = dense_divisor_points(blownup.center, blownup.center.shape[0], count, seed)
    exceptional = tuple(blownup.exceptional) + tuple(extra)
    exc_reps = np.vstack([e.dir.rep for e in exceptional])
    exc_reps.setflags(write=False)
    return BlownUpCloud(
        center=blownup.center,
        lam=blownup.lam,
        lifted=blownup.lifted,
        exceptional=exceptional,
        origin_ids=blownup.origin_ids,
        cone=blownup.cone,
        cluster_of_lifted=blownup.cluster_of_lifted,
        _bases=blownup._bases,
        _dir_reps=blownup._dir_reps,
        _exc_reps=exc_reps,
    )
