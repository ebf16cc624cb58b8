"""Direction harvesting and projective k-means."""

import math

import numpy as np
import pytest
from scipy.stats import special_ortho_group

import desing as ds
from desing import (
    EmptyNeighborhood,
    InsufficientNeighbors,
    PointCloud,
    RadiusGrid,
    cluster_directions,
    estimate_cluster_dimension,
    local_directions,
    projective_distance,
    projective_from_vector,
)

KMEANS_ITER_CAP = 200


def angle_to(rep, axis):
    return projective_distance(projective_from_vector(rep), projective_from_vector(axis))


class TestLocalDirections:
    def test_directions_are_normalized_differences(self):
        pts = np.array([[1.0, 0.0], [2.0, 0.0], [0.0, 3.0], [9.0, 9.0]])
        cloud = PointCloud(pts)
        pairs, skipped = local_directions(cloud, np.zeros(2), r_loc=5.0)
        assert skipped == 0
        assert [i for i, _ in pairs] == [0, 1, 2]
        assert pairs[0][1] == pairs[1][1]  # same ray, same class
        assert pairs[0][1] == projective_from_vector(np.array([1.0, 0.0]))
        assert pairs[2][1] == projective_from_vector(np.array([0.0, 1.0]))

    def test_center_duplicate_is_skipped_and_counted(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]])
        cloud = PointCloud(pts)
        pairs, skipped = local_directions(cloud, np.zeros(2), r_loc=5.0)
        assert skipped == 1
        assert [i for i, _ in pairs] == [1, 2]

    def test_empty_ball_raises(self):
        cloud = PointCloud(np.array([[5.0, 5.0], [6.0, 6.0]]))
        with pytest.raises(EmptyNeighborhood):
            local_directions(cloud, np.zeros(2), r_loc=1.0)


def two_cone_pairs(per_side=50, wobble_deg=5.0, seed=2, n=4):
    """Directions within wobble of e1 and e2, half of them negated."""
    rng = np.random.default_rng(seed)
    wobble = math.radians(wobble_deg)
    pairs = []
    for axis in (0, 1):
        for _ in range(per_side):
            v = np.zeros(n)
            v[axis] = 1.0
            perp = rng.standard_normal(n)
            perp[axis] = 0.0
            perp /= np.linalg.norm(perp)
            theta = rng.uniform(0.0, wobble)
            u = math.cos(theta) * v + math.sin(theta) * perp
            if rng.random() < 0.5:
                u = -u
            pairs.append((len(pairs), projective_from_vector(u)))
    return pairs


class TestClusterDirections:
    def test_two_tight_cones_recovered(self):
        pairs = two_cone_pairs()
        cone = cluster_directions(pairs, k=2)
        assert cone.k == 2
        e1 = np.array([1.0, 0.0, 0.0, 0.0])
        e2 = np.array([0.0, 1.0, 0.0, 0.0])
        angles = sorted(
            min(angle_to(c.centroid.rep, e1), angle_to(c.centroid.rep, e2))
            for c in cone.clusters
        )
        assert all(a <= math.radians(2.0) for a in angles)

    def test_identical_directions_collapse_to_one(self):
        rep = projective_from_vector(np.array([1.0, 1.0, 0.0]))
        pairs = [(i, rep) for i in range(30)]
        cone = cluster_directions(pairs, k=4)
        assert cone.k == 1
        assert cone.clusters[0].spread == 0.0

    def test_partition_covers_every_direction(self):
        pairs = two_cone_pairs(per_side=40, seed=8)
        cone = cluster_directions(pairs, k=3)
        seen = sorted(i for c in cone.clusters for i in c.member_ids)
        assert seen == [i for i, _ in pairs]

    def test_auto_k_stops_at_merge_threshold(self):
        pairs = two_cone_pairs(per_side=60, wobble_deg=4.0, seed=3)
        cone = cluster_directions(pairs)  # auto
        assert cone.k == 2

    def test_rotation_equivariance(self):
        pairs = two_cone_pairs(per_side=30, seed=4)
        Q = special_ortho_group.rvs(4, random_state=23)
        rotated = [
            (i, projective_from_vector(Q @ p.rep)) for i, p in pairs
        ]
        a = cluster_directions(pairs, k=2)
        b = cluster_directions(rotated, k=2)
        members_a = sorted(tuple(sorted(c.member_ids)) for c in a.clusters)
        members_b = sorted(tuple(sorted(c.member_ids)) for c in b.clusters)
        assert members_a == members_b
        for ca in a.clusters:
            image = projective_from_vector(Q @ ca.centroid.rep)
            best = min(
                projective_distance(image, cb.centroid) for cb in b.clusters
            )
            assert best <= 1e-6

    def test_antipodal_relabeling_changes_nothing(self):
        pairs = two_cone_pairs(per_side=30, seed=5)
        flipped = [
            (i, projective_from_vector(-p.rep if i % 3 == 0 else p.rep))
            for i, p in pairs
        ]
        a = cluster_directions(pairs, k=2)
        b = cluster_directions(flipped, k=2)
        for ca, cb in zip(a.clusters, b.clusters):
            assert ca.centroid.rep.tobytes() == cb.centroid.rep.tobytes()
            assert ca.member_ids == cb.member_ids
            assert ca.spread == cb.spread

    def test_iteration_cap_never_binds(self):
        for seed in (2, 3, 4, 5):
            cone = cluster_directions(two_cone_pairs(seed=seed))
            assert cone.iterations < KMEANS_ITER_CAP

    def test_empty_input_raises(self):
        with pytest.raises(EmptyNeighborhood):
            cluster_directions([])


@pytest.fixture(scope="module")
def union_small():
    spec = ds.SynthSpec(
        kind="union", n=5, dims=(1, 2), samples=(500, 500), sigma=0.0, seed=21
    )
    return ds.generate(spec)


class TestClusterDimension:
    def test_line_cluster_dimension_near_one(self, union_small):
        cloud, truth = union_small
        ids = [int(i) for i in np.flatnonzero(truth.membership == 0)]
        grid = RadiusGrid.geometric(0.02, 0.5, count=16)
        d = estimate_cluster_dimension(cloud, ids, grid, v_min=30)
        assert d == pytest.approx(1.0, abs=0.3)

    def test_plane_cluster_dimension_near_two(self, union_small):
        cloud, truth = union_small
        ids = [int(i) for i in np.flatnonzero(truth.membership == 1)]
        grid = RadiusGrid.geometric(0.05, 0.5, count=16)
        d = estimate_cluster_dimension(cloud, ids, grid, v_min=30)
        assert d == pytest.approx(2.0, abs=0.3)

    def test_too_few_members_raise(self, union_small):
        cloud, _ = union_small
        grid = RadiusGrid.geometric(0.05, 0.5, count=16)
        with pytest.raises(InsufficientNeighbors):
            estimate_cluster_dimension(cloud, [0, 1, 2], grid, v_min=30)
