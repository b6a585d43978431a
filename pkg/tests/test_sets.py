# -*- coding: UTF-8 -*-
import itertools

import numpy as np
import pytest

from splitfeas.exceptions import DimensionError, SetSpecError
from splitfeas.sets import (
    AffineSubspace,
    Ball,
    Box,
    FiniteSet,
    Halfspace,
    Hyperplane,
    L1Ball,
    Simplex,
    SparsityBall,
    Sphere,
    UnionOfConvex,
    build_set,
    distance,
    half_sq_distance_gradient,
    is_member,
    project,
    project_simplex,
)


def convex_sets(d):
    rng = np.random.default_rng(11)
    return [
        Ball(rng.standard_normal(d), 1.5),
        Box(-np.ones(d), 2.0 * np.ones(d)),
        L1Ball(rng.standard_normal(d), 2.0),
        Halfspace(rng.standard_normal(d), 0.5),
        Hyperplane(rng.standard_normal(d), -0.3),
        Simplex(d, 2.0),
    ]


def half_sq_distance(s, u):
    dist = s.distance(u)
    return 0.5 * dist * dist


class TestProjections:
    def test_box(self):
        box = Box([0.0, -1.0], [1.0, 1.0])
        np.testing.assert_array_equal(box.project([2.0, -3.0]), [1.0, -1.0])

    def test_free_box(self):
        free = Box.free(3)
        u = np.array([1e300, -4.0, 0.0])
        np.testing.assert_array_equal(free.project(u), u)
        assert free.distance(u) == 0.0

    def test_ball(self):
        ball = Ball([0.0, 0.0], 1.0)
        np.testing.assert_allclose(ball.project([3.0, 4.0]), [0.6, 0.8])
        assert ball.distance([3.0, 4.0]) == pytest.approx(4.0)

    def test_ball_inside_is_identity(self):
        ball = Ball([0.0, 0.0], 1.0)
        np.testing.assert_array_equal(ball.project([0.1, 0.2]), [0.1, 0.2])

    def test_l1ball(self):
        ball = L1Ball([0.0, 0.0], 1.0)
        np.testing.assert_allclose(ball.project([2.0, 0.0]), [1.0, 0.0])
        np.testing.assert_allclose(ball.project([1.0, 1.0]), [0.5, 0.5])
        np.testing.assert_allclose(ball.project([-1.0, -1.0]), [-0.5, -0.5])

    def test_halfspace(self):
        h = Halfspace([1.0, 0.0], 1.0)
        np.testing.assert_allclose(h.project([3.0, 5.0]), [1.0, 5.0])
        np.testing.assert_array_equal(h.project([-3.0, 5.0]), [-3.0, 5.0])

    def test_hyperplane(self):
        h = Hyperplane([1.0, 0.0], 1.0)
        np.testing.assert_allclose(h.project([0.0, 5.0]), [1.0, 5.0])

    def test_affine_subspace(self):
        s = AffineSubspace([[1.0], [0.0]], [0.0, 1.0])
        np.testing.assert_allclose(s.project([3.0, 4.0]), [3.0, 1.0])

    def test_simplex(self):
        np.testing.assert_allclose(Simplex(2).project([2.0, 0.0]), [1.0, 0.0])
        np.testing.assert_allclose(
            project_simplex([0.2, 0.2, 0.2]), [1.0 / 3, 1.0 / 3, 1.0 / 3]
        )
        np.testing.assert_allclose(
            project_simplex([3.0, 1.0], scale=2.0), [2.0, 0.0]
        )

    def test_sparsity_keeps_largest(self):
        s = SparsityBall(4, 2)
        np.testing.assert_array_equal(
            s.project([3.0, -1.0, -3.5, 2.0]), [3.0, 0.0, -3.5, 0.0]
        )

    def test_sparsity_ties_go_to_lowest_index(self):
        s = SparsityBall(4, 1)
        np.testing.assert_array_equal(s.project([1.0, -1.0, 0.5, 0.0]), [1, 0, 0, 0])
        s = SparsityBall(4, 2)
        np.testing.assert_array_equal(s.project([2.0, 2.0, 2.0, 2.0]), [2, 2, 0, 0])

    def test_sphere(self):
        sphere = Sphere([1.0, 1.0], 2.0)
        np.testing.assert_allclose(sphere.project([1.0, 4.0]), [1.0, 3.0])
        np.testing.assert_allclose(sphere.project([1.0, 1.5]), [1.0, 3.0])

    def test_sphere_center_maps_to_first_axis(self):
        sphere = Sphere([0.0, 0.0], 2.0)
        np.testing.assert_array_equal(sphere.project([0.0, 0.0]), [2.0, 0.0])

    def test_finite_set_ties_go_to_lowest_index(self):
        f = FiniteSet([[0.0, 0.0], [2.0, 0.0]])
        np.testing.assert_array_equal(f.project([1.0, 0.0]), [0.0, 0.0])
        np.testing.assert_array_equal(f.project([1.5, 0.0]), [2.0, 0.0])

    def test_union_ties_go_to_lowest_member(self):
        union = UnionOfConvex([Ball([0.0, 0.0], 1.0), Ball([4.0, 0.0], 1.0)])
        np.testing.assert_allclose(union.project([2.0, 0.0]), [1.0, 0.0])
        np.testing.assert_allclose(union.project([2.5, 0.0]), [3.0, 0.0])

    def test_projection_is_member(self):
        rng = np.random.default_rng(0)
        sets = convex_sets(5) + [
            SparsityBall(5, 2),
            Sphere(np.zeros(5), 1.0),
            FiniteSet(rng.standard_normal((3, 5))),
        ]
        for s in sets:
            for _ in range(20):
                p = project(s, 3.0 * rng.standard_normal(5))
                assert is_member(s, p), s.kind

    def test_projection_is_idempotent(self):
        # given
        rng = np.random.default_rng(6)
        basis, _ = np.linalg.qr(rng.standard_normal((5, 2)))
        sets = convex_sets(5) + [
            Box.free(5),
            AffineSubspace(basis, rng.standard_normal(5)),
            SparsityBall(5, 2),
            Sphere(np.zeros(5), 1.0),
            FiniteSet(rng.standard_normal((3, 5))),
            UnionOfConvex(
                [Ball(np.zeros(5), 1.0), Box(np.full(5, 2.0), np.full(5, 3.0))]
            ),
        ]

        for s in sets:
            for _ in range(20):
                # when
                p = project(s, 3.0 * rng.standard_normal(5))

                # then
                np.testing.assert_allclose(
                    project(s, p), p, rtol=0, atol=1e-12, err_msg=s.kind
                )

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            Ball([0.0, 0.0], 1.0).project([1.0, 2.0, 3.0])
        with pytest.raises(DimensionError):
            Ball([0.0, 0.0], 1.0).project([[1.0, 2.0]])


class TestBruteForce:
    def test_sparsity_distance(self):
        rng = np.random.default_rng(1)
        d, s = 6, 2
        sparse = SparsityBall(d, s)
        for _ in range(200):
            u = rng.standard_normal(d)
            brute = min(
                np.linalg.norm(np.delete(u, list(support)))
                for support in itertools.combinations(range(d), s)
            )
            assert abs(distance(sparse, u) - brute) <= 1e-12

    def test_finite_set_distance(self):
        rng = np.random.default_rng(2)
        points = rng.standard_normal((7, 4))
        f = FiniteSet(points)
        for _ in range(200):
            u = 2.0 * rng.standard_normal(4)
            brute = min(np.linalg.norm(u - p) for p in points)
            assert abs(f.distance(u) - brute) <= 1e-12

    def test_union_distance(self):
        rng = np.random.default_rng(3)
        members = [Ball(rng.standard_normal(3), 0.5), Box(-np.ones(3), np.zeros(3))]
        union = UnionOfConvex(members)
        for _ in range(200):
            u = 3.0 * rng.standard_normal(3)
            brute = min(m.distance(u) for m in members)
            assert abs(union.distance(u) - brute) <= 1e-12


class TestHalfSqDistanceGradient:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(4)
        d, h = 4, 1e-6
        for s in convex_sets(d):
            for _ in range(50):
                u = 5.0 * rng.standard_normal(d)
                fd = np.array(
                    [
                        (
                            half_sq_distance(s, u + h * e)
                            - half_sq_distance(s, u - h * e)
                        )
                        / (2 * h)
                        for e in np.eye(d)
                    ]
                )
                np.testing.assert_allclose(
                    half_sq_distance_gradient(s, u), fd, rtol=1e-5, atol=1e-6
                )

    def test_firmly_nonexpansive(self):
        rng = np.random.default_rng(5)
        d = 4
        for s in convex_sets(d):
            for _ in range(200):
                u, v = 4.0 * rng.standard_normal((2, d))
                du = s.project(u) - s.project(v)
                slack = 1e-12 * (1.0 + np.linalg.norm(u) + np.linalg.norm(v)) ** 2
                assert du.dot(du) <= du.dot(u - v) + slack
                gu = s.half_sq_distance_gradient(u) - s.half_sq_distance_gradient(v)
                assert np.linalg.norm(gu) <= np.linalg.norm(u - v) + 1e-12

    def test_non_convex_set(self):
        with pytest.raises(SetSpecError) as e:
            SparsityBall(3, 1).half_sq_distance_gradient([1.0, 2.0, 3.0])
        assert str(e.value) == "gradient undefined for non-convex set (sparsity)"


class TestBuildSet:
    def test_build_round_trip(self):
        for s in convex_sets(3) + [SparsityBall(3, 1), Sphere([0.0, 1.0, 2.0], 1.0)]:
            assert build_set(s.build()) == s

    def test_infinite_bounds(self):
        free = Box.free(2)
        assert free.build() == {
            "kind": "box",
            "lower": ["-inf", "-inf"],
            "upper": ["inf", "inf"],
        }
        assert build_set(free.build()) == free

    def test_union(self):
        actual = build_set(
            {
                "kind": "union",
                "members": [
                    {"kind": "ball", "center": [0.0], "radius": 1.0},
                    {"kind": "box", "lower": [2.0], "upper": [3.0]},
                ],
            }
        )
        assert isinstance(actual, UnionOfConvex)
        assert len(actual.members) == 2

    def test_unknown_kind(self):
        with pytest.raises(SetSpecError) as e:
            build_set({"kind": "torus"})
        assert "Set kind: torus does not exist" in str(e.value)

    def test_missing_field(self):
        with pytest.raises(SetSpecError) as e:
            build_set({"kind": "ball", "center": [0.0]})
        assert "missing field(s): radius" in str(e.value)

    def test_extra_field(self):
        with pytest.raises(SetSpecError):
            build_set({"kind": "ball", "center": [0.0], "radius": 1.0, "color": 3})

    def test_nested_union(self):
        simplex = {"kind": "simplex", "dimension": 2, "scale": 1}
        inner = {"kind": "union", "members": [simplex]}
        with pytest.raises(SetSpecError):
            build_set({"kind": "union", "members": [inner]})

    def test_invariants(self):
        with pytest.raises(SetSpecError):
            Box([1.0], [0.0])
        with pytest.raises(SetSpecError):
            Ball([0.0], -1.0)
        with pytest.raises(SetSpecError):
            SparsityBall(2, 3)
        with pytest.raises(SetSpecError):
            UnionOfConvex([Sphere([0.0], 1.0)])
        with pytest.raises(SetSpecError):
            AffineSubspace([[1.0], [1.0]], [0.0, 0.0])

    def test_convexity_flags(self):
        assert all(s.is_convex for s in convex_sets(2))
        assert not SparsityBall(2, 1).is_convex
        assert not FiniteSet([[0.0]]).is_convex
        assert not Sphere([0.0], 1.0).is_convex
