import math
from dataclasses import replace

import numpy as np
import pytest

import lanegrid as lg
from lanegrid.errors import InvalidSceneError
from lanegrid.perception import decompose, detected_objects, footprint
from lanegrid.sampling import points_in_ring, segments_hit_convex_interior
from scenegen import make_random_scene


def make_object(center, heading=0.0, length=4.0, width=2.0, speed=0.0, oid="x"):
    return lg.ObjectState(id=oid, center=lg.Point2(*center), heading=heading,
                          length=length, width=width, speed=speed)


@pytest.fixture(scope="module")
def simple_ego():
    scene = make_random_scene(0)
    return scene.ego


# ---------------------------------------------------------------------------
# footprint


def test_footprint_axis_aligned():
    fp = footprint(make_object((0, 0), heading=0.0, length=4.0, width=2.0))
    assert {(round(p.x, 12), round(p.y, 12)) for p in fp.vertices} == {
        (-2.0, -1.0), (2.0, -1.0), (2.0, 1.0), (-2.0, 1.0)}


def test_footprint_quarter_turn():
    fp = footprint(make_object((0, 0), heading=math.pi / 2, length=4.0, width=2.0))
    xs = sorted(round(p.x, 9) for p in fp.vertices)
    ys = sorted(round(p.y, 9) for p in fp.vertices)
    assert xs == [-1.0, -1.0, 1.0, 1.0]
    assert ys == [-2.0, -2.0, 2.0, 2.0]


def test_footprint_rotation_matches_rotation_matrix():
    obj = make_object((3, -2), heading=math.pi / 4, length=5.0, width=2.2)
    c, s = math.cos(obj.heading), math.sin(obj.heading)
    expected = []
    for dx, dy in ((-2.5, -1.1), (2.5, -1.1), (2.5, 1.1), (-2.5, 1.1)):
        expected.append((3 + dx * c - dy * s, -2 + dx * s + dy * c))
    got = [p.as_tuple() for p in footprint(obj).vertices]
    for e in expected:
        assert any(abs(e[0] - g[0]) < 1e-12 and abs(e[1] - g[1]) < 1e-12 for g in got)


def test_object_validation():
    with pytest.raises(ValueError):
        make_object((0, 0), length=0.0)
    with pytest.raises(ValueError):
        make_object((0, 0), speed=-1.0)


# ---------------------------------------------------------------------------
# decompose


def test_decompose_no_objects_everything_visible(simple_ego):
    world = decompose(simple_ego, lg.SensorSpec(range_m=50.0, arc_segments=64), [])
    assert world.free.area == pytest.approx(world.fov.area)
    assert world.occupied.is_empty
    assert world.hidden.is_empty


def test_decompose_partition_identity(simple_ego):
    obj = make_object((simple_ego.position.x + 20.0, simple_ego.position.y))
    world = decompose(simple_ego, lg.SensorSpec(range_m=100.0, arc_segments=64), [obj])
    total = world.free.area + world.occupied.area + world.hidden.area
    assert total == pytest.approx(world.fov.area, rel=1e-6)
    assert world.occupied.area == pytest.approx(8.0, rel=1e-6)
    assert not world.hidden.is_empty


def test_decompose_object_beyond_range_is_invisible(simple_ego):
    spec = lg.SensorSpec(range_m=30.0, arc_segments=64)
    clean = decompose(simple_ego, spec, [])
    far = decompose(simple_ego, spec,
                    [make_object((simple_ego.position.x + 200.0, simple_ego.position.y))])
    assert far.free.area == pytest.approx(clean.free.area, abs=1e-9)
    assert far.occupied.is_empty
    assert far.hidden.is_empty


def test_decompose_rejects_ego_inside_footprint(simple_ego):
    blocker = make_object(simple_ego.position.as_tuple())
    with pytest.raises(InvalidSceneError):
        decompose(simple_ego, lg.SensorSpec(), [blocker])


def test_detected_objects_filters_to_fov(simple_ego):
    spec = lg.SensorSpec(range_m=40.0, arc_segments=64)
    near = make_object((simple_ego.position.x + 15.0, simple_ego.position.y), oid="near")
    far = make_object((simple_ego.position.x + 300.0, simple_ego.position.y), oid="far")
    world = decompose(simple_ego, spec, [near, far])
    assert [o.id for o in detected_objects(world, [near, far])] == ["near"]


# ---------------------------------------------------------------------------
# randomized properties


def test_partition_holds_across_random_scenes():
    for seed in range(20):
        scene = make_random_scene(seed)
        world = decompose(scene.ego, scene.sensor, list(scene.objects))
        total = world.free.area + world.occupied.area + world.hidden.area
        assert total == pytest.approx(world.fov.area, rel=1e-6), f"seed {seed}"


def test_adding_an_object_never_gains_free_space():
    for seed in range(10):
        scene = make_random_scene(seed)
        if not scene.objects:
            continue
        world_all = decompose(scene.ego, scene.sensor, list(scene.objects))
        world_less = decompose(scene.ego, scene.sensor, list(scene.objects[:-1]))
        assert world_all.free.area <= world_less.free.area + 1e-9, f"seed {seed}"


def test_hidden_empty_iff_no_footprint_reaches_fov(simple_ego):
    spec = lg.SensorSpec(range_m=40.0, arc_segments=64)
    inside = make_object((simple_ego.position.x + 20.0, simple_ego.position.y + 2.0))
    outside = make_object((simple_ego.position.x + 90.0, simple_ego.position.y))
    assert not decompose(simple_ego, spec, [inside]).hidden.is_empty
    assert decompose(simple_ego, spec, [outside]).hidden.is_empty
    assert decompose(simple_ego, spec, []).hidden.is_empty


def test_membership_matches_ray_cast_oracle():
    scene = make_random_scene(4)
    assert scene.objects, "seed 4 must produce at least one object"
    world = decompose(scene.ego, scene.sensor, list(scene.objects))
    rng = np.random.default_rng(99)
    fov_poly = world.fov.polygons[0]
    minx, miny, maxx, maxy = fov_poly.bounds
    pts = rng.random((10_000, 2)) * (maxx - minx, maxy - miny) + (minx, miny)
    pts = pts[points_in_ring(pts, fov_poly.ring_array())]
    rings = [footprint(o).ring_array() for o in scene.objects]
    ego_xy = np.array(scene.ego.position.as_tuple())
    in_fp = np.zeros(len(pts), dtype=bool)
    blocked = np.zeros(len(pts), dtype=bool)
    for ring in rings:
        in_fp |= points_in_ring(pts, ring)
        blocked |= segments_hit_convex_interior(ego_xy, pts, ring)
    oracle_free = ~in_fp & ~blocked
    oracle_occ = in_fp
    oracle_hid = ~oracle_free & ~oracle_occ
    agree = 0
    for i, (x, y) in enumerate(pts):
        got = (world.free.contains((x, y)), world.occupied.contains((x, y)),
               world.hidden.contains((x, y)))
        want = (bool(oracle_free[i]), bool(oracle_occ[i]), bool(oracle_hid[i]))
        agree += got == want
    assert agree / len(pts) >= 0.999
