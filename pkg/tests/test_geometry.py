import math

import numpy as np
import pytest

from lanegrid.errors import InvalidSceneError
from lanegrid.geometry import (Point2, Polygon, Polyline, RegionSet,
                               buffer_centerline, contains_point, fov_polygon,
                               intersect, subtract, union, union_all,
                               visibility_region)
from lanegrid.sampling import (min_distance_to_polyline, points_in_ring,
                               segments_hit_convex_interior)


def rect(x0, y0, x1, y1):
    return Polygon([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])


def region(*polys):
    return RegionSet(polys)


def random_rect(rng, span=20.0, size_lo=2.0, size_hi=8.0):
    x0 = rng.uniform(0, span)
    y0 = rng.uniform(0, span)
    w = rng.uniform(size_lo, size_hi)
    h = rng.uniform(size_lo, size_hi)
    return rect(x0, y0, x0 + w, y0 + h)


def mc_area(rng, bounds, n, predicate):
    """Monte-Carlo area estimate of a membership predicate inside a box."""
    minx, miny, maxx, maxy = bounds
    pts = rng.random((n, 2)) * (maxx - minx, maxy - miny) + (minx, miny)
    box_area = (maxx - minx) * (maxy - miny)
    return predicate(pts).mean() * box_area


# ---------------------------------------------------------------------------
# area


def test_area_unit_square():
    assert rect(0, 0, 1, 1).area == pytest.approx(1.0)


def test_area_triangle():
    assert Polygon([(0, 0), (2, 0), (0, 2)]).area == pytest.approx(2.0)


def test_area_orientation_normalized():
    cw = Polygon([(0, 0), (0, 1), (1, 1), (1, 0)])  # given clockwise
    assert cw.area > 0


def test_area_random_convex_12gon_matches_monte_carlo():
    rng = np.random.default_rng(7)
    angles = np.sort(rng.uniform(0.0, 2.0 * math.pi, 12))
    ring = [(1.0 + 5.0 * math.cos(a), 2.0 + 5.0 * math.sin(a)) for a in angles]
    poly = Polygon(ring)
    est = mc_area(rng, poly.bounds, 1_000_000,
                  lambda pts: points_in_ring(pts, poly.ring_array()))
    assert abs(est - poly.area) / poly.area < 0.005


def test_degenerate_polygon_rejected():
    with pytest.raises(ValueError):
        Polygon([(0, 0), (1, 0), (2, 0)])
    with pytest.raises(ValueError):
        Polygon([(0, 0), (1, 0)])


# ---------------------------------------------------------------------------
# boolean operations


def test_intersect_overlapping_rectangles():
    r = intersect(region(rect(0, 0, 1, 1)), region(rect(0.5, 0, 1.5, 1)))
    assert r.area == pytest.approx(0.5)


def test_intersect_disjoint_is_empty():
    r = intersect(region(rect(0, 0, 1, 1)), region(rect(2, 2, 3, 3)))
    assert r.is_empty


def test_intersect_rotated_square_matches_sampling_oracle():
    a = rect(-0.5, -0.5, 0.5, 0.5)
    h = 0.5 * math.sqrt(2.0)
    b = Polygon([(h, 0), (0, h), (-h, 0), (0, -h)])  # same square rotated 45 deg
    got = intersect(region(a), region(b)).area
    rng = np.random.default_rng(11)
    est = mc_area(rng, (-0.5, -0.5, 0.5, 0.5), 2_000_000,
                  lambda pts: points_in_ring(pts, a.ring_array())
                  & points_in_ring(pts, b.ring_array()))
    assert abs(got - est) < 1e-3


def test_subtract_l_shape():
    r = subtract(region(rect(0, 0, 2, 2)), region(rect(0, 0, 1, 1)))
    assert r.area == pytest.approx(3.0)


def test_subtract_identity_and_annihilation():
    a = region(rect(0, 0, 2, 1))
    assert subtract(a, RegionSet.empty()).area == pytest.approx(a.area)
    assert subtract(a, a).is_empty


def test_subtract_producing_hole_decomposes_into_simple_pieces():
    outer = region(rect(0, 0, 10, 10))
    inner = region(rect(4, 4, 6, 6))
    r = subtract(outer, inner)
    assert r.area == pytest.approx(96.0)
    assert len(r.polygons) >= 2  # no holes allowed, so the ring is split
    assert not r.contains((5, 5))
    assert r.contains((1, 1))


def test_union_disjoint_and_overlapping():
    assert union(region(rect(0, 0, 1, 1)), region(rect(2, 0, 3, 1))).area == pytest.approx(2.0)
    assert union(region(rect(0, 0, 1, 1)), region(rect(0.5, 0, 1.5, 1))).area == pytest.approx(1.5)


def test_union_ten_random_rectangles_matches_sampling_oracle():
    rng = np.random.default_rng(3)
    rects = [random_rect(rng, span=9.0, size_lo=2.0, size_hi=5.0) for _ in range(10)]
    merged = RegionSet.empty()
    for r in rects:
        merged = union(merged, region(r))
    rings = [r.ring_array() for r in rects]

    def predicate(pts):
        hit = np.zeros(len(pts), dtype=bool)
        for ring in rings:
            hit |= points_in_ring(pts, ring)
        return hit

    est = mc_area(rng, (0.0, 0.0, 14.0, 14.0), 4_000_000, predicate)
    assert abs(est - merged.area) / merged.area < 1e-3


def test_boolean_partition_and_inclusion_exclusion():
    rng = np.random.default_rng(21)
    for _ in range(25):
        a, b = region(random_rect(rng)), region(random_rect(rng))
        inter = intersect(a, b)
        diff = subtract(a, b)
        assert diff.area + inter.area == pytest.approx(a.area, rel=1e-9)
        uni = union(a, b)
        assert uni.area == pytest.approx(a.area + b.area - inter.area, rel=1e-9)
        # commutativity in area
        assert intersect(b, a).area == pytest.approx(inter.area, rel=1e-9, abs=1e-12)
        assert union(b, a).area == pytest.approx(uni.area, rel=1e-9)


def test_membership_agrees_with_set_expression():
    rng = np.random.default_rng(5)
    for _ in range(5):
        a, b, c = (random_rect(rng) for _ in range(3))
        composed = subtract(union(region(a), region(b)), intersect(region(b), region(c)))
        pts = rng.random((10_000, 2)) * 28.0
        direct = (points_in_ring(pts, a.ring_array()) | points_in_ring(pts, b.ring_array())) \
            & ~(points_in_ring(pts, b.ring_array()) & points_in_ring(pts, c.ring_array()))
        got = np.array([composed.contains((x, y)) for x, y in pts])
        assert (got == direct).mean() >= 0.999


# ---------------------------------------------------------------------------
# contains_point


def test_contains_point_basics():
    sq = region(rect(0, 0, 1, 1))
    assert contains_point(sq, (0.5, 0.5))
    assert not contains_point(sq, (2, 2))
    assert contains_point(sq, (1.0, 0.5))  # boundary is inside (closed set)
    assert contains_point(sq, (0.0, 0.0))


# ---------------------------------------------------------------------------
# buffering


def test_buffer_straight_line_is_exact_rectangle():
    poly = buffer_centerline(Polyline([(0, 0), (10, 0)]), 4.0)
    assert poly.area == pytest.approx(40.0)
    assert {(round(p.x, 9), round(p.y, 9)) for p in poly.vertices} == {
        (0.0, -2.0), (10.0, -2.0), (10.0, 2.0), (0.0, 2.0)}


def test_buffer_diagonal_area_is_length_times_width():
    line = Polyline([(0, 0), (12.0, 5.0)])  # length 13
    poly = buffer_centerline(line, 3.0)
    assert poly.area == pytest.approx(13.0 * 3.0, rel=1e-9)


def test_buffer_rejects_bad_inputs():
    line = Polyline([(0, 0), (10, 0)])
    with pytest.raises(ValueError):
        buffer_centerline(line, 0.0)
    with pytest.raises(ValueError):
        buffer_centerline(line, -1.0)
    tiny = Polyline([(0, 0), (5e-7, 0), (10, 0)])
    with pytest.raises(ValueError):
        buffer_centerline(tiny, 2.0)


def test_buffer_right_angle_matches_distance_oracle():
    # The miter join fills the outer corner that the pure distance predicate
    # rounds off; the difference is exactly (1 - pi/4) * (w/2)^2.
    line = Polyline([(0, 0), (10, 0), (10, 10)])
    poly = buffer_centerline(line, 4.0)
    rng = np.random.default_rng(13)
    arr = line.as_array()
    est = mc_area(rng, poly.bounds, 2_000_000,
                  lambda pts: min_distance_to_polyline(pts, arr) <= 2.0)
    miter_excess = (1.0 - math.pi / 4.0) * 4.0
    assert abs((poly.area - est) - miter_excess) < 0.25  # 5 sigma of the estimate
    assert abs(poly.area - est) / poly.area < 0.015


# ---------------------------------------------------------------------------
# station / slice


def test_station_offset_straight_line():
    line = Polyline([(0, 0), (10, 0)])
    assert line.station_offset((3, 1)) == pytest.approx((3.0, 1.0))
    assert line.station_offset((3, -1)) == pytest.approx((3.0, -1.0))


def test_station_offset_clamps_before_start():
    line = Polyline([(0, 0), (10, 0)])
    assert line.station_offset((-5, 0)) == pytest.approx((0.0, 0.0))


def test_station_offset_vertex_tie_prefers_smaller_station():
    line = Polyline([(0, 0), (5, 5), (10, 0)])
    station, offset = line.station_offset((5, 4))
    assert station == pytest.approx(0.9 * math.hypot(5, 5))
    assert offset == pytest.approx(-math.sqrt(0.5))


def test_station_offset_matches_dense_sampling_near_joint():
    line = Polyline([(0, 0), (7, 3), (12, -2)])
    for pt in [(6.8, 3.4), (7.3, 2.6), (7.0, 1.0), (6.0, 2.0)]:
        station, _ = line.station_offset(pt)
        samples = np.linspace(0.0, line.length, 100_001)
        pts = np.array([line.point_at(s).as_tuple() for s in samples])
        d2 = ((pts - np.array(pt)) ** 2).sum(axis=1)
        brute = samples[int(np.argmin(d2))]
        assert abs(station - brute) < 1e-3


def test_slice_straight_segment():
    line = Polyline([(0, 0), (10, 0)])
    piece = line.slice_between(2.0, 3.0)
    assert piece.length == pytest.approx(1.0, abs=1e-9)
    assert piece.vertices[0].as_tuple() == pytest.approx((2.0, 0.0))
    assert piece.vertices[-1].as_tuple() == pytest.approx((3.0, 0.0))


def test_slice_identity():
    line = Polyline([(0, 0), (5, 1), (9, -2)])
    piece = line.slice_between(0.0, line.length)
    assert piece.length == pytest.approx(line.length, abs=1e-9)
    assert len(piece.vertices) == len(line.vertices)


def test_slice_across_vertex_preserves_length():
    line = Polyline([(0, 0), (5, 0), (5, 5)])
    piece = line.slice_between(3.0, 7.0)
    assert piece.length == pytest.approx(4.0, abs=1e-9)


def test_slice_rejects_bad_intervals():
    line = Polyline([(0, 0), (10, 0)])
    with pytest.raises(ValueError):
        line.slice_between(3.0, 2.0)
    with pytest.raises(ValueError):
        line.slice_between(-1.0, 2.0)
    with pytest.raises(ValueError):
        line.slice_between(2.0, 11.0)


def test_station_of_slice_endpoints():
    rng = np.random.default_rng(17)
    for _ in range(10):
        xs = np.cumsum(rng.uniform(1.0, 4.0, 6))
        ys = rng.uniform(-3.0, 3.0, 6)
        line = Polyline(list(zip(xs.tolist(), ys.tolist())))
        s0 = rng.uniform(0.0, line.length * 0.5)
        s1 = rng.uniform(s0 + 0.5, line.length)
        piece = line.slice_between(s0, s1)
        assert piece.station_offset(piece.vertices[0])[0] == pytest.approx(0.0, abs=1e-9)
        assert piece.station_offset(piece.vertices[-1])[0] == pytest.approx(s1 - s0, abs=1e-9)


# ---------------------------------------------------------------------------
# visibility


def test_visibility_no_occluders_is_regular_polygon():
    r = visibility_region((0, 0), 10.0, 64, [])
    expected = 0.5 * 64 * 100.0 * math.sin(2.0 * math.pi / 64)
    assert r.area == pytest.approx(expected, rel=1e-9)


def test_visibility_square_occluder_membership():
    occ = rect(4.5, -0.5, 5.5, 0.5)
    r = visibility_region((0, 0), 10.0, 64, [occ])
    assert contains_point(r, (8, 3))
    assert not contains_point(r, (8, 0))
    # agreement with a direct ray-cast oracle on random points
    rng = np.random.default_rng(19)
    pts = rng.uniform(-9.0, 9.0, (10_000, 2))
    fov_ring = fov_polygon((0, 0), 10.0, 64).ring_array()
    oracle = points_in_ring(pts, fov_ring) \
        & ~points_in_ring(pts, occ.ring_array()) \
        & ~segments_hit_convex_interior((0.0, 0.0), pts, occ.ring_array())
    got = np.array([r.contains((x, y)) for x, y in pts])
    assert (got == oracle).mean() >= 0.999


def test_visibility_occluder_beyond_range_is_no_op():
    base = visibility_region((0, 0), 10.0, 64, [])
    far = visibility_region((0, 0), 10.0, 64, [rect(50, 50, 52, 52)])
    assert far.area == pytest.approx(base.area, abs=1e-9)


def test_visibility_rejects_origin_inside_occluder():
    with pytest.raises(InvalidSceneError):
        visibility_region((5, 0), 10.0, 64, [rect(4.5, -0.5, 5.5, 0.5)])


def test_visibility_monotone_in_occluders_and_range():
    rng = np.random.default_rng(23)
    for _ in range(10):
        occs = [random_rect(rng, span=30.0, size_lo=1.0, size_hi=4.0) for _ in range(3)]
        occs = [o for o in occs if not o.contains((15, 15))]
        full = visibility_region((15, 15), 20.0, 32, occs)
        fewer = visibility_region((15, 15), 20.0, 32, occs[:-1])
        assert fewer.area >= full.area - 1e-9
        larger = visibility_region((15, 15), 25.0, 32, occs)
        assert larger.area >= full.area - 1e-9


def test_visibility_parameter_validation():
    with pytest.raises(ValueError):
        visibility_region((0, 0), -1.0, 64, [])
    with pytest.raises(ValueError):
        visibility_region((0, 0), 10.0, 4, [])


# ---------------------------------------------------------------------------
# misc type behavior


def test_point_rejects_non_finite():
    with pytest.raises(ValueError):
        Point2(float("nan"), 0.0)
    with pytest.raises(ValueError):
        Point2(0.0, float("inf"))


def test_polyline_rejects_duplicate_vertices():
    with pytest.raises(ValueError):
        Polyline([(0, 0), (0, 0), (1, 0)])


def test_union_all_mixed_inputs():
    r = union_all([rect(0, 0, 1, 1), region(rect(5, 5, 6, 6))])
    assert r.area == pytest.approx(2.0)
    assert union_all([]).is_empty
