from __future__ import annotations

import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from curvespn.errors import AmbiguousMatchWarning
from curvespn.segments import (
    LineSegment,
    Relation,
    associate_midpoints,
    classify_growth,
    classify_slopes,
    collinear_overlap,
    compute_connection_angles,
    connection_angle,
    cross_relations,
    extract_templates,
    find_intersections,
    find_parallelisms,
    merge_rule_1,
    merge_rule_2,
    merge_rule_3,
    parse_segment_id,
    rule1_matches,
    slope_threshold,
    solve_intersection,
)


def chain(points, curve=1):
    return [LineSegment(curve, i, points[i], points[i + 1]) for i in range(len(points) - 1)]


def ends(segs):
    return [(s.start, s.end) for s in segs]


# -- segments ---------------------------------------------------------------------------

def test_segment_normalises_direction_and_id():
    s = LineSegment(3, 7, (10, 5), (2, 1))
    assert s.start == (2, 1) and s.end == (10, 5)
    assert s.id == "L3S7" and parse_segment_id("L3S7") == (3, 7)
    assert s.slope == 0.5
    assert s.length_px == pytest.approx(math.hypot(8, 4))
    assert math.isinf(LineSegment(1, 0, (4, 0), (4, 9)).slope)


# -- rule 1 ---------------------------------------------------------------------------------

def test_rule1_example():
    segs = [LineSegment(1, 0, (0, 0), (10, 10)), LineSegment(1, 1, (11, 11), (20, 11))]
    assert ends(merge_rule_1(segs, 3)) == [((0, 0), (20, 11))]


def test_rule1_large_jump_unchanged():
    segs = [LineSegment(1, 0, (0, 0), (10, 10)), LineSegment(1, 1, (11, 15), (20, 15))]
    assert ends(merge_rule_1(segs, 3)) == ends(segs)


def test_rule1_width_one_only_vertical_jogs():
    # exhaustive over small three-point chains: at width 1 a pair merges only
    # when one of its segments is a single-pixel vertical jog
    rng = range(0, 4)
    for x1 in rng:
        for y1 in rng:
            for x2 in rng:
                for y2 in rng:
                    a = LineSegment(1, 0, (0, 0), (x1, y1))
                    b = LineSegment(1, 1, (x1, y1), (x1 + x2, y2))
                    if a.start == a.end or b.start == b.end or a.end != b.start:
                        continue
                    jog = any(s.end[0] == s.start[0] and abs(s.end[1] - s.start[1]) == 1 for s in (a, b))
                    assert rule1_matches(a, b, 1) == jog


# -- rule 2 ---------------------------------------------------------------------------------

def test_rule2_examples():
    a = chain([(0, 0), (100, 50), (200, 95)])
    assert len(merge_rule_2(a, 5)) == 1
    b = chain([(0, 0), (10, 10), (20, 0)])
    assert len(merge_rule_2(b, 5)) == 2


def test_rule2_nearly_collinear_chain():
    segs = chain([(0, 0), (100, 30), (200, 62), (300, 91)])
    assert [round(s.slope, 2) for s in segs] == [0.30, 0.32, 0.29]
    assert ends(merge_rule_2(segs, 5)) == [((0, 0), (300, 91))]


def test_rule2_threshold_values():
    assert slope_threshold(5) == 0.25
    assert slope_threshold(1) == 0.0
    segs = chain([(0, 0), (10, 0), (20, 0)])
    assert len(merge_rule_2(segs, 1)) == 2


@pytest.mark.parametrize("w", [2, 3, 5, 6, 9])
def test_rule2_boundary(w):
    thr = 1.0 / (w - 1)
    inside = chain([(0.0, 0.0), (1.0, 0.0), (2.0, thr - 1e-9)])
    outside = chain([(0.0, 0.0), (1.0, 0.0), (2.0, thr + 1e-9)])
    assert len(merge_rule_2(inside, w)) == 1
    assert len(merge_rule_2(outside, w)) == 2


def test_rule2_vertical_by_angle():
    # a vertical and a near-vertical segment have an undefined slope difference
    segs = chain([(0, 0), (0, 50), (1, 100)])
    assert len(merge_rule_2(segs, 5)) == 1
    segs = chain([(0, 0), (0, 50), (30, 100)])
    assert len(merge_rule_2(segs, 5)) == 2


chains = st.lists(st.tuples(st.integers(0, 40), st.integers(-30, 30)), min_size=2, max_size=14).map(
    lambda steps: [tuple(map(int, p)) for p in np.cumsum([(0, 0)] + [(dx, dy) for dx, dy in steps], axis=0)])


def valid_chain(pts):
    return chain([p for i, p in enumerate(pts) if i == 0 or p != pts[i - 1]])


@given(chains, st.integers(1, 8))
def test_rules_idempotent_and_keep_ends(pts, w):
    segs = valid_chain(pts)
    if not segs:
        return
    for rule in (merge_rule_1, merge_rule_2):
        once = rule(segs, w)
        assert ends(rule(once, w)) == ends(once)
        assert once[0].start == segs[0].start and once[-1].end == segs[-1].end
        for a, b in zip(once, once[1:]):
            assert a.end == b.start
        assert [s.seg_index for s in once] == list(range(len(once)))


# -- intersections -----------------------------------------------------------------------------

def test_intersection_x():
    a = LineSegment(1, 0, (0, 0), (2, 2))
    b = LineSegment(2, 0, (0, 2), (2, 0))
    sol = solve_intersection(a, b)
    assert (sol.T, sol.U) == (0.5, 0.5)
    rels = find_intersections([a], [b])
    assert rels == [Relation("intersection", "L1S0", "L2S0", (1.0, 1.0))]


def test_parallel_pair_has_no_intersection():
    a = LineSegment(1, 0, (0, 0), (2, 2))
    b = LineSegment(2, 0, (0, 1), (2, 3))
    assert solve_intersection(a, b) is None
    assert find_intersections([a], [b]) == []


def test_touching_endpoints_excluded():
    a = LineSegment(1, 0, (0, 0), (2, 2))
    b = LineSegment(2, 0, (2, 2), (4, 0))
    assert find_intersections([a], [b]) == []
    c = LineSegment(2, 0, (1, 1), (3, 0))  # T = 0.5 but U = 0
    assert find_intersections([a], [c]) == []


seg_st = st.tuples(*[st.floats(-100, 100, allow_nan=False)] * 4).filter(lambda t: (t[0], t[1]) != (t[2], t[3]))


@given(seg_st, seg_st)
def test_intersection_symmetric_and_on_both(p, q):
    a = LineSegment(1, 0, p[:2], p[2:])
    b = LineSegment(2, 0, q[:2], q[2:])
    ab = find_intersections([a], [b])
    ba = find_intersections([b], [a])
    assert len(ab) == len(ba)
    for r, s in zip(ab, ba):
        assert np.allclose(r.value, s.value, atol=1e-6)
    if ab:
        sol = solve_intersection(a, b)
        pa = np.add(a.start, sol.T * np.subtract(a.end, a.start))
        pb = np.add(b.start, sol.U * np.subtract(b.end, b.start))
        assert np.abs(pa - pb).max() <= 1e-6 * max(1.0, np.abs(pa).max())


@given(seg_st, seg_st, st.integers(1, 8))
def test_parallel_and_intersection_exclusive(p, q, w):
    a = LineSegment(1, 0, p[:2], p[2:])
    b = LineSegment(2, 0, q[:2], q[2:])
    assert not (find_intersections([a], [b]) and find_parallelisms([a], [b], w))


# -- parallelism ------------------------------------------------------------------------------------

def test_parallel_equal_slopes():
    a = LineSegment(1, 0, (0, 0), (10, 10))
    b = LineSegment(2, 0, (0, 20), (10, 30))
    assert find_parallelisms([a], [b], 3) == [Relation("parallelism", "L1S0", "L2S0", 1.0)]


def test_parallel_margin_boundary():
    a = LineSegment(1, 0, (0, 0), (10, 10))
    b = LineSegment(2, 0, (0, 20), (10, 32))
    rels = find_parallelisms([a], [b], 6)
    assert len(rels) == 1 and rels[0].value == pytest.approx(1.1)
    assert find_parallelisms([a], [b], 3, 6) == rels  # the wider curve sets the margin
    assert find_parallelisms([a], [LineSegment(2, 0, (0, 20), (10, 33))], 6) == []


def test_collinear_overlap_is_not_parallel():
    a = LineSegment(1, 0, (0, 0), (10, 10))
    b = LineSegment(2, 0, (5, 5), (15, 15))
    assert collinear_overlap(a, b)
    assert find_parallelisms([a], [b], 3) == []
    far = LineSegment(2, 0, (20, 20), (30, 30))
    assert not collinear_overlap(a, far)
    assert len(find_parallelisms([a], [far], 3)) == 1


# -- rule 3 --------------------------------------------------------------------------------------------

PARTNER = chain([(0, 100), (10, 90), (20, 80), (30, 70), (40, 85), (100, 115)], 2)
W6 = {1: 6, 2: 6}  # slope margin 0.2


def test_rule3_two_parallel_segments_merge():
    # L1S1 (slope 0.5) and L1S2 (0.35) are both parallel to L2S4 (0.5)
    c1 = chain([(0, 0), (20, 2), (40, 12), (60, 19), (80, 10)])
    assert PARTNER[-1].id == "L2S4"
    curves = merge_rule_3({1: c1, 2: PARTNER}, W6)
    assert ends(curves[1]) == [((0, 0), (20, 2)), ((20, 2), (60, 19)), ((60, 19), (80, 10))]
    assert ends(curves[2]) == ends(PARTNER)


def test_rule3_single_parallel_unchanged():
    # L1S1 pairs with L2S4 and L1S2 with L2S3: no common partner
    c1 = chain([(0, 0), (20, 2), (40, 12), (60, 40)])
    curves = merge_rule_3({1: c1, 2: PARTNER}, W6)
    assert ends(curves[1]) == ends(c1)


def test_rule3_chain_of_three():
    c1 = chain([(0, 0), (20, 9), (40, 20), (60, 30), (80, 0)])
    curves = merge_rule_3({1: c1, 2: PARTNER}, W6)
    assert ends(curves[1]) == [((0, 0), (60, 30)), ((60, 30), (80, 0))]
    again = merge_rule_3(curves, W6)
    assert {c: ends(s) for c, s in again.items()} == {c: ends(s) for c, s in curves.items()}


@given(chains, chains, st.integers(2, 6))
def test_rule3_idempotent_and_keeps_ends(p, q, w):
    a, b = valid_chain(p), valid_chain([(x, y + 60) for x, y in q])
    if not a or not b:
        return
    curves = {1: a, 2: [LineSegment(2, s.seg_index, s.start, s.end) for s in b]}
    once = merge_rule_3(curves, {1: w, 2: w})
    twice = merge_rule_3(once, {1: w, 2: w})
    assert {c: ends(s) for c, s in once.items()} == {c: ends(s) for c, s in twice.items()}
    for c, segs in curves.items():
        assert once[c][0].start == segs[0].start and once[c][-1].end == segs[-1].end


# -- connections ---------------------------------------------------------------------------------------

def test_connection_angles():
    assert connection_angle(*chain([(0, 0), (5, 5), (10, 0)])) == pytest.approx(90.0)
    assert connection_angle(*chain([(0, 0), (5, 5), (10, 10)])) == 0.0
    segs = chain([(0, 0), (10, 0), (20, 7)])
    rel = compute_connection_angles(segs)[0]
    assert rel.kind == "connection" and (rel.a, rel.b) == ("L1S0", "L1S1")
    assert rel.value == pytest.approx(math.degrees(math.atan(0.7)))
    assert round(rel.value, 3) == 34.992


def test_cross_relations_sorted():
    c1 = chain([(0, 0), (10, 10), (20, 0)])
    c2 = chain([(0, 10), (10, 0), (20, 10)], 2)
    rels = cross_relations({1: c1, 2: c2}, {1: 2, 2: 2})
    assert [r.sort_key for r in rels] == sorted(r.sort_key for r in rels)
    # L1S0 and L2S1 both have slope 1 and never meet
    assert {(r.kind, r.a, r.b) for r in rels} == {
        ("intersection", "L1S0", "L2S0"), ("intersection", "L1S1", "L2S1"),
        ("parallelism", "L1S0", "L2S1"), ("parallelism", "L1S1", "L2S0")}


# -- growth ------------------------------------------------------------------------------------------------

def test_growth_exponential():
    assert classify_slopes([0.5, 0.9, 1.6]) == [(0, 2, "exponential growth")]


def test_growth_linear_and_steady():
    assert classify_slopes([0.50, 0.52, 0.49]) == [(0, 2, "linear growth")]
    assert classify_slopes([0.0, 0.0]) == [(0, 1, "steady")]
    assert classify_slopes([-0.5, -1.0, -2.5]) == [(0, 2, "exponential decay")]
    assert classify_slopes([-0.5, -0.5]) == [(0, 1, "linear decay")]


def test_growth_from_image_segments():
    # image y points down, so rising curves have negative image slopes
    segs = chain([(0, 100), (10, 95), (20, 86), (30, 70)])
    anns = classify_growth(segs)
    assert [(a.segment_range, a.cls) for a in anns] == [((0, 2), "exponential growth")]
    assert anns[0].magnitude == 30.0 and anns[0].duration == 30.0
    assert anns[0].agent == "L1S0"


@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=20))
def test_growth_partitions_chain(slopes):
    runs = classify_slopes(slopes)
    covered = [k for a, b, _ in runs for k in range(a, b + 1)]
    assert covered == list(range(len(slopes)))
    for (a0, b0, c0), (a1, b1, c1) in zip(runs, runs[1:]):
        assert c0 != c1


# -- templates ----------------------------------------------------------------------------------------------

def noise_image(h=200, w=240, seed=0):
    return np.random.default_rng(seed).integers(0, 256, (h, w, 3), dtype=np.uint8)


def test_template_self_match():
    img = noise_image()
    t = extract_templates(img, [(100, 100)])
    assert t[0].patch.shape == (81, 81, 3) and t[0].offset == (40, 40)
    m = associate_midpoints(img, t)[0]
    assert m.matched_position == (100, 100) and m.ssd == 0 and not m.ambiguous


def test_template_region_offset():
    img = noise_image()
    region = img[30:, 20:]
    t = extract_templates(region, [(80, 90)])
    m = associate_midpoints(img, t, region_origin=(20, 30))[0]
    assert m.matched_position == (100, 120)


def test_template_clipped_at_corner():
    img = noise_image()
    t = extract_templates(img, [(5, 3)])[0]
    assert t.patch.shape == (44, 46, 3) and t.offset == (5, 3)
    m = associate_midpoints(img, [t])[0]
    assert m.matched_position == (5, 3)


def test_template_shifted_image():
    img = noise_image()
    shifted = np.roll(img, (4, -6), axis=(0, 1))
    t = extract_templates(img, [(120, 100)])
    m = associate_midpoints(shifted, t)[0]
    assert m.matched_position == (114, 104)


def test_repeating_grid_is_ambiguous():
    img = np.full((200, 240, 3), 255, dtype=np.uint8)
    img[::10, :] = 0
    img[:, ::10] = 0
    t = extract_templates(img, [(100, 100)])
    with pytest.warns(AmbiguousMatchWarning):
        m = associate_midpoints(img, t)[0]
    assert m.ambiguous and m.matched_position == (100, 100)


def test_full_image_search():
    img = noise_image()
    t = extract_templates(img, [(60, 50)])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        m = associate_midpoints(img, t, window=None)[0]
    assert m.matched_position == (60, 50)
