from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.cluster.hierarchy import fcluster, linkage

from curvespn.clustering import (
    ClusterBounds,
    KMeansResult,
    MiddlePoint,
    best_of_restarts,
    build_segments,
    cluster_middle_points,
    cut_count,
    elbow_index,
    elbow_kmeans,
    filter_noise,
    hierarchical_bounds,
)
from curvespn.errors import DegenerateCurveError


def blobs(centres, per=4, spread=1.0, seed=0):
    rng = np.random.default_rng(seed)
    return np.concatenate([np.asarray(c) + rng.uniform(-spread / 2, spread / 2, (per, 2)) for c in centres])


# -- bounds -------------------------------------------------------------------------

def test_two_separated_groups():
    pts = blobs([(0, 0), (10, 0)], per=5)
    b = hierarchical_bounds(pts)
    assert (b.k_lower, b.k_upper) == (2, 2)


def test_single_point():
    b = hierarchical_bounds([(4, 4)])
    assert (b.k_lower, b.k_upper) == (1, 1)


def test_chain_between_the_cuts():
    pts = np.array([(3.5 * i, 0.0) for i in range(12)])
    b = hierarchical_bounds(pts)
    assert (b.k_lower, b.k_upper) == (1, 12)


def test_bounds_need_points():
    with pytest.raises(ValueError):
        hierarchical_bounds(np.zeros((0, 2)))


def test_invalid_bounds():
    with pytest.raises(ValueError):
        ClusterBounds(3, 2)
    with pytest.raises(ValueError):
        ClusterBounds(0, 2)


point_sets = st.lists(st.tuples(st.integers(0, 60), st.integers(0, 60)), min_size=1, max_size=30).map(
    lambda ps: np.array(ps, dtype=float))


@given(point_sets, st.floats(0.1, 20), st.floats(0.1, 20))
def test_cut_count_monotone(pts, a, b):
    lo, hi = sorted((a, b))
    assert cut_count(pts, hi) <= cut_count(pts, lo)


@given(point_sets, st.floats(0.5, 10))
def test_cut_count_matches_scipy(pts, d):
    if len(pts) > 1:
        assert cut_count(pts, d) == fcluster(linkage(pts, "single"), d, "distance").max()


@given(point_sets)
def test_bounds_ordered(pts):
    b = hierarchical_bounds(pts)
    assert 1 <= b.k_lower <= b.k_upper <= len(pts)


# -- elbow ------------------------------------------------------------------------------

def test_three_blobs_give_three():
    pts = blobs([(0, 0), (30, 5), (60, -10)], per=5)
    r = elbow_kmeans(pts, ClusterBounds(2, 6))
    assert r.k == 3
    assert sorted(np.bincount(r.labels)) == [5, 5, 5]


def test_single_candidate_skips_elbow():
    pts = blobs([(0, 0), (30, 5), (60, -10)], per=5)
    r = elbow_kmeans(pts, ClusterBounds(4, 4))
    assert r.k == 4 and list(r.curve) == [4]


def test_flat_curve_falls_back_to_lower_bound():
    # four evenly spaced collinear points: distortion 1, 0.5, 0 is linear in k
    pts = np.array([(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0)])
    r = elbow_kmeans(pts, ClusterBounds(2, 5))
    assert [round(r.curve[k], 9) for k in sorted(r.curve)] == [1.0, 0.5, 0.0]
    assert r.k == 2


def test_elbow_index_rules():
    assert elbow_index([1, 2], [5.0, 1.0]) is None
    assert elbow_index([1, 2, 3], [3.0, 2.0, 1.0]) is None
    assert elbow_index([1, 2, 3, 4], [100.0, 10.0, 8.0, 7.0]) == 1


def test_too_few_points():
    with pytest.raises(ValueError):
        elbow_kmeans(np.zeros((2, 2)), ClusterBounds(3, 4))


def test_elbow_deterministic():
    pts = blobs([(0, 0), (9, 2), (20, 1), (40, 8)], per=3, spread=3, seed=4)
    a = elbow_kmeans(pts, ClusterBounds(1, 8), seed=7)
    b = elbow_kmeans(pts, ClusterBounds(1, 8), seed=7)
    assert a.k == b.k and np.array_equal(a.labels, b.labels) and a.curve == b.curve


@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_restart_selection_is_minimum(seed, k):
    pts = np.random.default_rng(seed).uniform(0, 50, (12, 2))
    (cent, labels, sse), dists = best_of_restarts(pts, k, 5, seed)
    assert len(dists) == 5
    assert sse == min(dists)
    assert set(labels) <= set(range(k))


def test_reported_distortion_is_restart_minimum():
    pts = blobs([(0, 0), (12, 3), (25, -4)], per=4, spread=4, seed=2)
    r = elbow_kmeans(pts, ClusterBounds(1, 6))
    for k, sse in r.curve.items():
        assert sse == min(r.restarts[k])
    assert r.distortion == r.curve[r.k]


# -- middle points -------------------------------------------------------------------------

def mids_of(clusters):
    pts = [p for c in clusters for p in c]
    labels = np.array([i for i, c in enumerate(clusters) for _ in c])
    return cluster_middle_points(labels, np.array(pts))


def test_middle_point_examples():
    assert [m.position for m in mids_of([[(1, 5), (2, 9), (3, 5)]])] == [(2, 9)]
    assert [m.position for m in mids_of([[(4, 4)]])] == [(4, 4)]
    assert [m.position for m in mids_of([[(1, 0), (2, 0), (3, 0), (4, 0)]])] == [(2, 0)]


def test_middle_points_sorted_by_x_and_not_centroids():
    mps = mids_of([[(50, 1), (52, 1), (51, 30)], [(1, 5), (2, 9), (3, 5)]])
    assert [m.position for m in mps] == [(2, 9), (51, 30)]
    assert [m.cluster_size for m in mps] == [3, 3]


def test_pinned_points_represent_their_cluster():
    pts = np.array([(0, 0), (1, 3), (2, 1), (20, 0), (21, 0)])
    labels = np.array([0, 0, 0, 1, 1])
    mps = cluster_middle_points(KMeansResult(2, labels, np.zeros((2, 2)), 0.0), pts, 5, pinned=(0, 4))
    assert [m.position for m in mps] == [(0, 0), (21, 0)]
    assert all(m.curve_id == 5 for m in mps)


@given(point_sets, st.integers(1, 5), st.integers(0, 1000))
def test_middle_point_is_cluster_member(pts, k, seed):
    labels = np.random.default_rng(seed).integers(0, k, len(pts))
    for m in cluster_middle_points(labels, pts):
        members = {(int(x), int(y)) for x, y in pts}
        assert m.position in members


# -- noise --------------------------------------------------------------------------------

TRAIL = np.array([(x, 20) for x in range(100)])


def test_filter_noise_examples():
    on = MiddlePoint((40, 20), 3)
    speck = MiddlePoint((40, 70), 1)
    near = MiddlePoint((60, 22), 2)
    assert filter_noise([on, speck, near], TRAIL, 3) == [on, near]


def test_filter_noise_rejects_zero_width():
    with pytest.raises(ValueError):
        filter_noise([], TRAIL, 0)


@given(st.lists(st.integers(0, 99), min_size=1, max_size=20), st.integers(1, 8))
def test_filter_noise_keeps_trail_points(xs, w):
    mps = [MiddlePoint((x, 20), 1) for x in xs]
    assert filter_noise(mps, TRAIL, w) == mps


# -- segments -----------------------------------------------------------------------------------

def test_build_segments_chain():
    segs = build_segments([MiddlePoint(p, 1, 2) for p in [(10, 0), (0, 0), (5, 5)]])
    assert [(s.start, s.end) for s in segs] == [((0, 0), (5, 5)), ((5, 5), (10, 0))]
    assert [s.slope for s in segs] == [1.0, -1.0]
    assert [s.id for s in segs] == ["L2S0", "L2S1"]


def test_build_segments_minimal_and_degenerate():
    assert len(build_segments([MiddlePoint((0, 0), 1), MiddlePoint((3, 1), 1)])) == 1
    with pytest.raises(DegenerateCurveError, match="degenerate"):
        build_segments([MiddlePoint((0, 0), 1)])


@given(st.lists(st.tuples(st.integers(0, 500), st.integers(0, 500)), min_size=2, max_size=30, unique=True))
def test_chaining_is_exact(pts):
    segs = build_segments([MiddlePoint(p, 1) for p in pts])
    assert len(segs) == len(pts) - 1
    for a, b in zip(segs, segs[1:]):
        assert a.end == b.start
