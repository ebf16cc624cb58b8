"""Tangent-cone estimation: clustering local directions on P^{n-1}.

Near a singular point the cloud looks like a union of branches; the
directions from the center to its neighbors concentrate along the
branches' projectivized tangent sets. Clustering those directions
with a projective k-means recovers one cluster per branch, and each
cluster centroid becomes an exceptional-divisor point of the blow-up.

Everything here is deterministic: initialization is farthest-point
seeding from the lowest-index direction, assignment ties break toward
the lowest centroid index, and the centroid update is the principal
eigenvector of the members' outer-product sum, which is sign-blind
and therefore safe under the antipodal identification.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dimension import DEFAULT_V_MIN, dimension_profile
from .errors import EmptyNeighborhood, InsufficientNeighbors
from .geometry import (
    PointCloud,
    ProjectivePoint,
    projective_distance_rows,
    projective_from_vector,
)

DEFAULT_MERGE_RAD = float(np.deg2rad(20.0))
KMEANS_CAP = 200
AUTO_K_MAX = 8


@dataclass(frozen=True)
class DirectionCluster:
    centroid: ProjectivePoint
    member_ids: tuple  # source-cloud indices, ascending
    spread: float  # mean angular deviation to the centroid
    dim: Optional[float] = None  # filled by estimate_cluster_dimension


@dataclass(frozen=True)
class TangentConeEstimate:
    center: Optional[np.ndarray]
    r_loc: float
    clusters: tuple
    skipped_coincident: int = 0
    iterations: int = 0

    @property
    def k(self):
        return len(self.clusters)

    def centroid_reps(self):
        return np.vstack([c.centroid.rep for c in self.clusters])


def local_directions(cloud, s, r_loc):
    """Directions from s to every cloud point within r_loc.

    Returns (pairs, skipped) where pairs is a list of (index,
    ProjectivePoint) in ascending index order and skipped counts the
    points coincident with s (norm below 1e-12), which have no
    direction. Raises EmptyNeighborhood when nothing qualifies.
    """
    s = np.asarray(s, dtype=np.float64)
    r_loc = float(r_loc)
    if not r_loc > 0.0:
        raise ValueError(f"r_loc must be > 0, got {r_loc}")
    idx = sorted(cloud._tree.query_ball_point(s, r_loc))
    pairs = []
    skipped = 0
    for i in idx:
        v = cloud.points[i] - s
        if float(np.sqrt(np.add.reduce(v * v))) < 1e-12:
            skipped += 1
            continue
        pairs.append((int(i), projective_from_vector(v)))
    if not pairs:
        raise EmptyNeighborhood(
            f"no points with positive distance inside r_loc = {r_loc:g}"
        )
    return pairs, skipped


def _principal_direction(reps):
    """Principal eigenvector of the outer-product sum of the rows.

    The Karcher mean surrogate on P^{n-1}: maximizes sum of cos^2 to
    the members, invariant to any sign flips of the inputs, and
    deterministic (eigh).
    """
    scatter = reps.T @ reps
    _, vecs = np.linalg.eigh(scatter)
    return projective_from_vector(vecs[:, -1])


def _assign(reps, centroid_reps):
    k = centroid_reps.shape[0]
    dists = np.empty((reps.shape[0], k))
    for j in range(k):
        dists[:, j] = projective_distance_rows(centroid_reps[j], reps)
    # argmin takes the first minimum: ties go to the lowest index
    return np.argmin(dists, axis=1), dists


def _farthest_point_seeds(reps, k_target):
    """Seed centroids: lowest-index direction first, then repeatedly
    the direction farthest from all chosen seeds. Stops early when
    every direction already coincides with a seed (duplicate-heavy
    inputs need fewer seeds than requested)."""
    seeds = [0]
    mind = projective_distance_rows(reps[0], reps)
    while len(seeds) < k_target:
        j = int(np.argmax(mind))
        if mind[j] <= 1e-12:
            break
        seeds.append(j)
        mind = np.minimum(mind, projective_distance_rows(reps[j], reps))
    return reps[seeds].copy()


def _lloyd(reps, centroid_reps, iterations):
    """Projective k-means to an assignment fixed point.

    Returns (labels, centroid_reps, iterations). Empty clusters are
    dropped. The iteration budget (KMEANS_CAP total across the whole
    clustering call) is a safety net; tests assert it never binds.
    """
    labels = None
    while iterations < KMEANS_CAP:
        iterations += 1
        new_labels, _ = _assign(reps, centroid_reps)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        kept = []
        for j in range(centroid_reps.shape[0]):
            members = np.flatnonzero(labels == j)
            if members.size == 0:
                continue
            kept.append(_principal_direction(reps[members]).rep)
        new_reps = np.vstack(kept)
        if new_reps.shape[0] != centroid_reps.shape[0]:
            # renumber after a drop and keep iterating
            centroid_reps = new_reps
            labels = None
            continue
        centroid_reps = new_reps
    labels, _ = _assign(reps, centroid_reps)
    return labels, centroid_reps, iterations


def cluster_directions(
    pairs,
    k=None,
    merge_threshold=DEFAULT_MERGE_RAD,
    center=None,
    r_loc=None,
    skipped_coincident=0,
):
    """Cluster directions into a tangent-cone estimate.

    pairs: (index, ProjectivePoint) list as produced by
    local_directions. With k given, exactly k seeds are planted (the
    result can still end below k when directions coincide or centroids
    fall inside the merge threshold). With k=None the count is chosen
    automatically: start from min(8, #distinct) seeds and greedily
    merge the closest centroid pair while it sits under the merge
    threshold, re-running the assignment loop after every merge.
    """
    if not pairs:
        raise EmptyNeighborhood("no directions to cluster")
    pairs = sorted(pairs, key=lambda p: p[0])
    ids = np.array([p[0] for p in pairs], dtype=np.int64)
    reps = np.vstack([p[1].rep for p in pairs])
    k_target = int(k) if k is not None else min(AUTO_K_MAX, reps.shape[0])
    if k_target < 1:
        raise ValueError(f"k must be >= 1, got {k_target}")

    centroid_reps = _farthest_point_seeds(reps, k_target)
    iterations = 0
    labels, centroid_reps, iterations = _lloyd(reps, centroid_reps, iterations)

    # Greedy merge: collapse the closest centroid pair while it is
    # closer than the threshold, then let the assignment re-settle.
    while centroid_reps.shape[0] > 1:
        k_now = centroid_reps.shape[0]
        best = None
        for a in range(k_now):
            d = projective_distance_rows(
                centroid_reps[a], centroid_reps[a + 1 :]
            )
            if d.size == 0:
                continue
            b = int(np.argmin(d))
            if best is None or d[b] < best[0]:
                best = (float(d[b]), a, a + 1 + b)
        if best is None or best[0] >= merge_threshold:
            break
        _, a, b = best
        merged = np.flatnonzero((labels == a) | (labels == b))
        new_rep = _principal_direction(reps[merged]).rep
        keep = [j for j in range(k_now) if j not in (a, b)]
        centroid_reps = np.vstack([new_rep] + [centroid_reps[j] for j in keep])
        labels, centroid_reps, iterations = _lloyd(
            reps, centroid_reps, iterations
        )

    # Package clusters ordered by their lowest member index so the
    # numbering is stable run to run.
    groups = []
    for j in range(centroid_reps.shape[0]):
        members = np.flatnonzero(labels == j)
        groups.append((int(ids[members[0]]), j, members))
    groups.sort()
    clusters = []
    for _, j, members in groups:
        centroid = projective_from_vector(centroid_reps[j])
        angles = projective_distance_rows(centroid.rep, reps[members])
        clusters.append(
            DirectionCluster(
                centroid=centroid,
                member_ids=tuple(int(i) for i in ids[members]),
                spread=float(angles.mean()),
            )
        )
    center_arr = None if center is None else np.asarray(center, dtype=np.float64)
    return TangentConeEstimate(
        center=center_arr,
        r_loc=float(r_loc) if r_loc is not None else float("nan"),
        clusters=tuple(clusters),
        skipped_coincident=int(skipped_coincident),
        iterations=iterations,
    )


def estimate_cluster_dimension(cloud, member_ids, grid, v_min=DEFAULT_V_MIN):
    """Intrinsic dimension of one cluster: the median defined dimension
    sample at the cluster's medoid, measured inside the member
    sub-cloud only (other branches must not leak into the estimate).
    """
    member_ids = sorted(int(i) for i in member_ids)
    if len(member_ids) < v_min:
        raise InsufficientNeighbors(
            f"{len(member_ids)} members < v_min = {v_min}"
        )
    sub = PointCloud(cloud.points[member_ids])
    # medoid: minimal summed distance, first index on ties
    total = np.zeros(len(sub))
    for i in range(len(sub)):
        total[i] = np.add.reduce(sub.distances_to(sub.points[i]))
    medoid = int(np.argmin(total))
    profile = dimension_profile(
        sub, sub.points[medoid], grid, v_min=v_min, point_id=("medoid", medoid)
    )
    dims = [s.dim for s in profile.defined_samples()]
    if not dims:
        raise InsufficientNeighbors(
            "no defined dimension samples at the cluster medoid"
        )
    return float(np.median(dims))


def with_cluster_dimensions(cone, cloud, grid, v_min=DEFAULT_V_MIN):
    """Return a copy of the estimate with dim filled per cluster where
    the member count allows it (None where it does not)."""
    enriched = []
    for c in cone.clusters:
        try:
            d = estimate_cluster_dimension(cloud, c.member_ids, grid, v_min)
        except InsufficientNeighbors:
            d = None
        enriched.append(
            DirectionCluster(
                centroid=c.centroid,
                member_ids=c.member_ids,
                spread=c.spread,
                dim=d,
            )
        )
    return TangentConeEstimate(
        center=cone.center,
        r_loc=cone.r_loc,
        clusters=tuple(enriched),
        skipped_coincident=cone.skipped_coincident,
        iterations=cone.iterations,
    )
