"""Blow-up construction, projection identity, regularization verdicts."""

import dataclasses
import math

import numpy as np
import pytest

import desing as ds
from desing import (
    BlowupConfig,
    ConeConfig,
    DegenerateCenter,
    NonPositiveScale,
    PointCloud,
    RadiusGrid,
    RegressionWindow,
    SingularityParams,
    blow_up,
    blowup_distance,
    cluster_directions,
    local_directions,
    project,
    projective_distance,
    projective_from_vector,
    regularization_check,
    verify_isomorphism_away_from_center,
    verify_theorem,
)
from desing.blowup import dense_divisor_points, with_dense_divisor

E1 = np.array([1.0, 0.0])
E2 = np.array([0.0, 1.0])


def cone_at(cloud, s, r_loc, k=None):
    pairs, skipped = local_directions(cloud, s, r_loc)
    return cluster_directions(
        pairs, k=k, center=s, r_loc=r_loc, skipped_coincident=skipped
    )


@pytest.fixture(scope="module")
def crossing_blowup(crossing_cloud):
    cloud, truth = crossing_cloud
    s = cloud.points[truth.center_index]
    cone = cone_at(cloud, s, r_loc=2.5)
    return cloud, truth, blow_up(cloud, s, cone, lam=1.0)


class TestConstruction:
    def test_three_point_cloud(self):
        cloud = PointCloud(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]]))
        s = np.zeros(2)
        cone = cone_at(cloud, s, r_loc=5.0, k=2)
        b = blow_up(cloud, s, cone, lam=1.0)
        assert len(b.lifted) == 2
        assert len(b.exceptional) == 2
        assert len(b) == 4
        assert b.origin_ids == (1, 2)
        # flat indexing walks lifted first, then exceptional
        assert b.point_at(0) is b.lifted[0]
        assert b.point_at(3) is b.exceptional[1]
        # each lifted point is owned by the cluster of its direction
        for pos, i in enumerate(b.origin_ids):
            j = int(b.cluster_of_lifted[pos])
            assert i in b.cone.clusters[j].member_ids

    def test_every_point_lifts_when_center_is_not_a_sample(self):
        cloud = PointCloud(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]]))
        s = np.array([5.0, 5.0])
        cone = cone_at(cloud, s, r_loc=20.0)
        b = blow_up(cloud, s, cone, lam=0.5)
        assert b.origin_ids == (0, 1, 2)

    def test_projection_undoes_the_lift(self, crossing_blowup):
        cloud, _, b = crossing_blowup
        for pos, i in enumerate(b.origin_ids):
            assert project(b.lifted[pos]).tobytes() == cloud.points[i].tobytes()
        for e in b.exceptional:
            assert project(e).tobytes() == b.center.tobytes()

    def test_one_exceptional_point_per_cluster(self, crossing_blowup):
        _, _, b = crossing_blowup
        assert len(b.exceptional) == b.cone.k
        for j, e in enumerate(b.exceptional):
            assert e.is_exceptional
            assert e.dir == b.cone.clusters[j].centroid

    def test_nonpositive_lambda_rejected(self, crossing_blowup):
        cloud, truth, b = crossing_blowup
        with pytest.raises(NonPositiveScale):
            blow_up(cloud, b.center, b.cone, lam=0.0)

    def test_all_points_coincident_with_center(self, crossing_blowup):
        _, _, b = crossing_blowup
        stack = PointCloud(np.full((4, 2), 3.0))
        with pytest.raises(DegenerateCenter):
            blow_up(stack, np.array([3.0, 3.0]), b.cone, lam=1.0)

    def test_distance_row_matches_scalar_metric(self, crossing_blowup):
        _, _, b = crossing_blowup
        p = b.point_at(7)
        row = b.distance_row(p)
        rng = np.random.default_rng(11)
        for i in rng.integers(0, len(b), size=60):
            q = b.point_at(int(i))
            assert blowup_distance(p, q, b.lam) == row[int(i)]


class TestIsomorphismCheck:
    def test_honest_blowup_verifies(self, crossing_blowup):
        cloud, _, b = crossing_blowup
        ok, report = verify_isomorphism_away_from_center(cloud, b)
        assert ok
        assert report["missing_ids"] == []
        assert report["unexpected_ids"] == []
        assert report["duplicate_ids"] == []
        assert report["base_mismatch_ids"] == []
        assert report["bound_violations"] == 0

    def test_dropped_and_duplicated_ids_detected(self, crossing_blowup):
        cloud, _, b = crossing_blowup
        got = list(b.origin_ids)
        tampered = dataclasses.replace(b, origin_ids=tuple([got[1]] + got[1:]))
        ok, report = verify_isomorphism_away_from_center(cloud, tampered)
        assert not ok
        assert report["missing_ids"] == [got[0]]
        assert report["duplicate_ids"] == [got[1]]

    def test_shifted_ids_fail_bitwise_base_comparison(self, crossing_blowup):
        cloud, _, b = crossing_blowup
        got = list(b.origin_ids)
        shifted = tuple(got[1:] + got[:1])  # same set, every base wrong
        tampered = dataclasses.replace(b, origin_ids=shifted)
        ok, report = verify_isomorphism_away_from_center(cloud, tampered)
        assert not ok
        assert report["missing_ids"] == []
        assert len(report["base_mismatch_ids"]) > 0

    def test_metric_discrepancy_vanishes_with_lambda(self, crossing_blowup):
        cloud, _, b = crossing_blowup
        ok, report = verify_isomorphism_away_from_center(cloud, b)
        assert ok
        assert report["max_discrepancy"] > 0.0
        assert (
            report["max_discrepancy_small_lambda"]
            <= report["max_discrepancy"] / 5.0
        )
        assert report["max_discrepancy"] <= b.lam * math.pi / 2.0 + 1e-12


class TestRegularization:
    def test_crossing_lines_exceptional_directions_hit_the_axes(
        self, crossing_blowup
    ):
        _, _, b = crossing_blowup
        assert b.cone.k == 2
        tol = math.radians(5.0)
        for axis in (E1, E2):
            target = projective_from_vector(axis)
            best = min(
                projective_distance(e.dir, target) for e in b.exceptional
            )
            assert best <= tol

    def test_purity_is_exact_below_the_separation_scale(self, crossing_blowup):
        _, _, b = crossing_blowup
        gap = projective_distance(
            b.exceptional[0].dir, b.exceptional[1].dir
        )
        r_hi = 0.9 * b.lam * gap / 2.0
        grid = RadiusGrid.geometric(0.02, r_hi, count=10)
        params = SingularityParams(epsilon=1.0, r_max=r_hi, v_min=5)
        verdicts = regularization_check(b, params, grid=grid)
        seen = 0
        for v in verdicts:
            for p, u in zip(v.purity, v.unassigned_fraction):
                if p is not None:
                    assert p == 1.0
                    seen += 1
                if u is not None:
                    assert u == 0.0
        assert seen > 0

    def test_single_cluster_line_wedge(self):
        t = np.arange(-50, 51) * 0.02
        t = t[t != 0.0]
        pts = np.column_stack([t, np.zeros_like(t)])
        cloud = PointCloud(pts)
        s = np.zeros(2)
        cone = cone_at(cloud, s, r_loc=1.5)
        assert cone.k == 1
        b = blow_up(cloud, s, cone, lam=1.0)
        params = SingularityParams(epsilon=1.0, r_max=0.9, v_min=10)
        (verdict,) = regularization_check(b, params)
        assert all(p in (None, 1.0) for p in verdict.purity)
        assert verdict.median_dim == pytest.approx(1.0, abs=0.3)

    def test_flat_patch_wedge_dimension(self):
        # at an interior point of an exact D-plane every exceptional
        # point should report dimension near 2D - 1 (base and angular
        # displacements contribute independently)
        cloud, truth = ds.generate(
            ds.SynthSpec(
                kind="flatpatch",
                n=10,
                dims=(2,),
                samples=(3000,),
                sigma=0.0,
                seed=7,
            )
        )
        idx = int(np.argmin(np.sqrt(np.add.reduce(cloud.points**2, axis=1))))
        params = SingularityParams(
            epsilon=1.0,
            r_max=0.9,
            v_min=30,
            estimator=RegressionWindow(5),
            grid_count=12,
        )
        rec = verify_theorem(
            cloud, idx, params, ConeConfig(r_loc=0.9), BlowupConfig(lam=1.0)
        )
        assert rec.iso_ok
        assert rec.passed
        meds = [v.median_dim for v in rec.verdicts if v.cluster_index is not None]
        assert meds and all(m == pytest.approx(3.0, abs=0.4) for m in meds)


class TestDenseDivisor:
    def test_extra_points_are_deterministic(self):
        c = np.zeros(4)
        a = dense_divisor_points(c, 4, count=12)
        b = dense_divisor_points(c, 4, count=12)
        for pa, pb in zip(a, b):
            assert pa.dir.rep.tobytes() == pb.dir.rep.tobytes()
            assert pa.base.tobytes() == c.tobytes()
            assert pa.is_exceptional

    def test_sphere_spiral_in_three_dimensions(self):
        c = np.zeros(3)
        pts = dense_divisor_points(c, 3, count=64)
        reps = np.vstack([p.dir.rep for p in pts])
        assert np.allclose(np.sqrt(np.add.reduce(reps**2, axis=1)), 1.0)
        # folded spiral stays spread out: no two classes nearly equal
        worst = min(
            projective_distance(pts[i].dir, pts[j].dir)
            for i in range(24)
            for j in range(i + 1, 24)
        )
        assert worst > 1e-3

    def test_dense_points_get_verdicts_but_no_cluster(self, crossing_blowup):
        _, _, b = crossing_blowup
        wide = with_dense_divisor(b, count=6)
        assert len(wide.exceptional) == b.cone.k + 6
        params = SingularityParams(epsilon=1.0, r_max=0.9, v_min=10)
        verdicts = regularization_check(wide, params)
        assert len(verdicts) == b.cone.k + 6
        assert [v.cluster_index for v in verdicts[: b.cone.k]] == [0, 1]
        assert all(v.cluster_index is None for v in verdicts[b.cone.k :])
