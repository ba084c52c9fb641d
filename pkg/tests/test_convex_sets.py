import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from conftest import coord, point_sets, polytope_pairs, polytopes
from gaugelab import convex_sets as cs
from gaugelab.convex_sets import ConvexSetError, Polytope

TRIANGLE = cs.canonicalize([(0, 0), (1, 0), (0, 1)])
SQUARE = cs.box([-1, -1], [1, 1])

# 100 seeded points in the unit square; hull from the all-subsets extremality oracle
HULL_100 = np.array([
    [0.00640888, 0.7726492], [0.00995456, 0.36504616], [0.02831967, 0.12428328],
    [0.04097352, 0.01652764], [0.81585355, 0.0027385], [0.92910422, 0.0660825],
    [0.94380143, 0.1268171], [0.98194269, 0.5713956], [0.99720994, 0.98083534],
    [0.62021345, 0.99509651], [0.34429573, 0.99491735], [0.14876401, 0.97262881],
    [0.0147063, 0.86364009],
])


# --- construction -----------------------------------------------------------


def test_canonicalize_drops_interior_and_collinear():
    P = cs.canonicalize([(0, 0), (1, 0), (0.5, 0), (0, 1)])
    assert P.tolist() == [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]


def test_canonicalize_1d():
    assert cs.canonicalize([[3], [1], [2]]).tolist() == [[1.0], [3.0]]
    assert cs.canonicalize([2.0, 2.0]).tolist() == [[2.0]]


def test_canonicalize_100_points_matches_frozen_hull():
    P = np.random.default_rng(0).uniform(0, 1, (100, 2))
    H = cs.canonicalize(P)
    assert len(H) == 13
    assert np.allclose(H.vertices, HULL_100, atol=1e-8)


@given(point_sets(dim=2, max_size=12))
def test_canonicalize_matches_brute_force_hull(P):
    H = cs.canonicalize(P)
    ref = oracles.brute_extreme_points(P, atol=1e-9)
    assert oracles.sampled_hausdorff(H.vertices, ref, 2000) < 1e-9
    # every oracle vertex is a canonical vertex up to the collinearity tolerance
    for v in H.vertices:
        assert cs.contains(cs.canonicalize(ref), v)


@given(polytopes())
def test_canonicalize_idempotent(A):
    B = cs.canonicalize(A.vertices)
    assert np.array_equal(A.vertices, B.vertices)


def test_canonical_order_is_ccw_from_lexmin():
    P = cs.canonicalize([(1, 1), (0, 0), (1, 0), (0, 1)])
    assert P.tolist() == [[0, 0], [1, 0], [1, 1], [0, 1]]


def test_bad_inputs_rejected():
    with pytest.raises(ConvexSetError):
        cs.canonicalize([])
    with pytest.raises(ConvexSetError):
        cs.canonicalize([[0, 0, 0, 0]])
    with pytest.raises(ConvexSetError):
        cs.canonicalize([[np.nan, 0]])
    with pytest.raises(ConvexSetError):
        cs.minkowski_sum(cs.point(0.0), cs.point(0.0, 0.0))


def test_polytope_is_immutable():
    with pytest.raises(ValueError):
        TRIANGLE.vertices[0, 0] = 5.0


# --- arithmetic ---------------------------------------------------------------


def test_minkowski_small_cases():
    assert cs.minkowski_sum(cs.box([0], [1]), cs.box([2], [5])).tolist() == [[2.0], [6.0]]
    unit = cs.box([0, 0], [1, 1])
    assert cs.minkowski_sum(unit, unit) == cs.box([0, 0], [2, 2])


def test_minkowski_triangle_plus_segment():
    seg = cs.canonicalize([(0, 0), (1, 1)])
    S = cs.minkowski_sum(TRIANGLE, seg)
    ref = oracles.gift_wrap(oracles.pairwise_sum(TRIANGLE.vertices, seg.vertices))
    assert S.tolist() == [[0, 0], [1, 0], [2, 1], [1, 2], [0, 1]]
    assert oracles.sampled_hausdorff(S.vertices, ref) == 0.0


@given(polytope_pairs(dim=2))
def test_minkowski_matches_pairwise_hull(pair):
    A, B = pair
    ref = oracles.gift_wrap(oracles.pairwise_sum(A.vertices, B.vertices))
    assert oracles.sampled_hausdorff(cs.minkowski_sum(A, B).vertices, ref, 2000) < 1e-9


def test_large_minkowski_uses_same_set():
    # 100 x 100 vertices goes through the edge-merge kernel
    A = cs.canonicalize(oracles.circle(100))
    B = cs.canonicalize(oracles.circle(100) @ np.diag([2.0, 0.5]) + 0.3)
    assert len(A) * len(B) > 4096
    ref = oracles.gift_wrap(oracles.pairwise_sum(A.vertices, B.vertices))
    assert oracles.sampled_hausdorff(cs.minkowski_sum(A, B).vertices, ref) < 1e-12


def test_scale_examples():
    assert cs.scale(cs.box([1], [3]), 2).tolist() == [[2.0], [6.0]]
    assert cs.scale(TRIANGLE, 0).tolist() == [[0.0, 0.0]]
    assert np.allclose(cs.scale(TRIANGLE, 0.5).vertices, TRIANGLE.vertices / 2)
    with pytest.raises(ConvexSetError):
        cs.scale(TRIANGLE, -1)


def test_translate_examples():
    assert cs.translate(cs.box([0], [1]), [-0.5]).tolist() == [[-0.5], [0.5]]
    assert cs.translate(cs.point(0.0, 0.0), [2, 3]).tolist() == [[2.0, 3.0]]


@given(polytopes(dim=2), st.tuples(coord, coord))
def test_translate_round_trip(A, x):
    back = cs.translate(cs.translate(A, x), -np.asarray(x))
    assert cs.hausdorff_distance(A, back) <= 1e-12


def test_reflect():
    assert cs.reflect(TRIANGLE) == cs.canonicalize([(0, 0), (-1, 0), (0, -1)])


# --- support, norm, distance ----------------------------------------------------


def test_support_examples():
    assert cs.support(SQUARE, [1, 0]) == 1.0
    assert cs.support(cs.point(2.0, -1.0), cs.direction(1, 1)) == pytest.approx(1 / math.sqrt(2))
    assert cs.support(TRIANGLE, [0.6, 0.8]) == pytest.approx(0.8)


def test_set_norm_examples():
    assert cs.set_norm(cs.box([-2], [1])) == 2.0
    assert cs.set_norm(cs.point(0.0, 0.0)) == 0.0
    assert cs.set_norm(cs.canonicalize([(0, 0), (3, 4), (1, 0)])) == 5.0


def test_hausdorff_examples():
    assert cs.hausdorff_distance(cs.box([0], [1]), cs.box([0], [3])) == 2.0
    assert cs.hausdorff_distance(TRIANGLE, TRIANGLE) == 0.0


def test_hausdorff_rotated_square_against_sampling():
    unit = cs.box([0, 0], [1, 1])
    c = np.array([0.5, 0.5])
    R = np.array([[1, -1], [1, 1]]) / math.sqrt(2)
    rot = cs.canonicalize((unit.vertices - c) @ R.T * 1.5 + c)
    d = cs.hausdorff_distance(unit, rot)
    # closed form: 1.5 / sqrt(2) - 1/2, reproduced by the sampling oracle
    assert d == pytest.approx(0.5606601717798212, abs=1e-12)
    assert abs(d - oracles.sampled_hausdorff(unit.vertices, rot.vertices)) < 1e-6


def test_hausdorff_fan_path_matches_vertex_path():
    rng = np.random.default_rng(5)
    A = cs.canonicalize(rng.normal(size=(2000, 2)))
    B = cs.canonicalize(rng.normal(size=(2000, 2)) + 0.1)
    exact = max(cs.point_polygon_distance(A.vertices, B).max(),
                cs.point_polygon_distance(B.vertices, A).max())
    assert cs._hausdorff_fan(A, B) == pytest.approx(exact, abs=1e-12)


@given(polytope_pairs())
def test_hausdorff_support_identity(pair):
    A, B = pair
    ref = oracles.sampled_hausdorff(A.vertices, B.vertices)
    assert abs(cs.hausdorff_distance(A, B) - ref) <= 1e-6


@given(polytope_pairs(), st.tuples(coord, coord))
def test_hausdorff_translation_invariant(pair, x):
    A, B = pair
    x = np.asarray(x[: A.dim])
    d0 = cs.hausdorff_distance(A, B)
    d1 = cs.hausdorff_distance(cs.translate(A, x), cs.translate(B, x))
    assert abs(d0 - d1) <= 1e-12


@given(st.sampled_from([1, 2]).flatmap(lambda d: st.tuples(polytopes(d), polytopes(d),
                                                           polytopes(d))))
def test_hausdorff_triangle_inequality(triple):
    A, B, C = triple
    d = cs.hausdorff_distance
    assert d(A, C) <= d(A, B) + d(B, C) + 1e-10


@given(polytope_pairs())
def test_support_additive(pair):
    A, B = pair
    U = cs.direction_grid(A.dim, 64)
    lhs = cs.support_many(cs.minkowski_sum(A, B), U)
    assert np.allclose(lhs, cs.support_many(A, U) + cs.support_many(B, U), atol=1e-10, rtol=0)


@given(polytopes(), st.floats(0, 10))
def test_support_positively_homogeneous(A, lam):
    U = cs.direction_grid(A.dim, 64)
    lhs = cs.support_many(cs.scale(A, lam), U)
    assert np.allclose(lhs, lam * cs.support_many(A, U), atol=1e-10, rtol=0)


def test_d3_is_sampled_but_consistent():
    cube = cs.canonicalize([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)])
    big = cs.scale(cube, 2)
    assert cs.hausdorff_distance(cube, big) == pytest.approx(math.sqrt(3), rel=1e-2)
    assert cs.contains(cube, [0.5, 0.5, 0.5])
    assert np.allclose(cs.steiner_point(cube), [0.5, 0.5, 0.5], atol=2e-2)


# --- Steiner point, embedding, membership --------------------------------------


def test_steiner_examples():
    assert cs.steiner_point(cs.box([1], [4])).tolist() == [2.5]
    assert np.allclose(cs.steiner_point(cs.point(2.0, 3.0)), [2, 3])
    assert np.allclose(cs.steiner_point(SQUARE), [0, 0], atol=1e-15)
    assert np.allclose(cs.steiner_point(TRIANGLE), [0.375, 0.375], atol=1e-15)


@given(polytopes(dim=2))
def test_steiner_matches_spherical_average(A):
    ref = oracles.spherical_steiner(A.vertices)
    assert np.allclose(cs.steiner_point(A), ref, atol=1e-6 * (1 + np.abs(A.vertices).max()))


@given(polytopes())
def test_steiner_point_is_member(A):
    assert cs.contains(A, cs.steiner_point(A))


@given(polytope_pairs())
def test_steiner_additive(pair):
    A, B = pair
    s = cs.steiner_point(cs.minkowski_sum(A, B))
    assert np.allclose(s, cs.steiner_point(A) + cs.steiner_point(B), atol=1e-9, rtol=0)


def test_radstrom_embed():
    sv = cs.radstrom_embed(cs.box([0], [1]), [[1.0], [-1.0]])
    assert sv.values.tolist() == [1.0, 0.0]
    with pytest.raises(ConvexSetError):
        cs.radstrom_embed(TRIANGLE, [[2.0, 0.0]])


@given(polytope_pairs(dim=2))
def test_radstrom_embedding_is_additive_and_contracting(pair):
    A, B = pair
    U = cs.direction_grid(2, 64)
    eA, eB = cs.radstrom_embed(A, U), cs.radstrom_embed(B, U)
    assert np.allclose((eA + eB).values, cs.radstrom_embed(cs.minkowski_sum(A, B), U).values,
                       atol=1e-10)
    assert eA.sup_distance(eB) <= cs.hausdorff_distance(A, B) + 1e-12


def test_contains_examples():
    assert cs.contains(cs.box([-1], [1]), [0.0])
    assert not cs.contains(SQUARE, [2, 0])


@given(polytopes())
def test_vertices_and_centroid_are_members(A):
    for v in A.vertices:
        assert cs.contains(A, v)
    assert cs.contains(A, A.vertices.mean(axis=0))


# --- batched kernels -------------------------------------------------------------


@given(st.lists(polytopes(dim=2, max_size=6), min_size=1, max_size=8),
       st.lists(st.one_of(st.just(0.0), st.floats(1e-6, 3)), min_size=8, max_size=8))
def test_weighted_minkowski_sum_matches_direct_sum(polys, w):
    w = np.asarray(w[: len(polys)])
    V = cs.stack_polytopes(polys)
    ref = oracles.direct_set_sum([p.vertices for p in polys], w)
    assert oracles.sampled_hausdorff(cs.weighted_minkowski_sum(V, w).vertices, ref, 2000) < 1e-9


def test_grouped_sums_match_single_sums():
    rng = np.random.default_rng(1)
    polys = [cs.canonicalize(rng.normal(size=(5, 2))) for _ in range(30)]
    V = cs.stack_polytopes(polys)
    w = rng.uniform(size=30)
    starts = [0, 1, 7, 20, 29]
    ends = starts[1:] + [30]
    got = cs.grouped_minkowski_sums(V, w, starts)
    for g, a, b in zip(got, starts, ends):
        assert cs.hausdorff_distance(g, cs.weighted_minkowski_sum(V[a:b], w[a:b])) < 1e-12


def test_batch_steiner_matches_single():
    rng = np.random.default_rng(2)
    polys = [cs.canonicalize(rng.normal(size=(6, 2))) for _ in range(20)]
    got = cs.batch_steiner(cs.stack_polytopes(polys))
    ref = np.array([oracles.spherical_steiner(p.vertices) for p in polys])
    assert np.allclose(got, ref, atol=1e-6)


def test_polytope_equality_and_hash():
    A = cs.canonicalize([(0, 0), (1, 0), (0, 1)])
    assert A == TRIANGLE and hash(A) == hash(TRIANGLE)
    assert A != SQUARE
    assert isinstance(A + A, Polytope) and A * 2 == cs.scale(A, 2)
