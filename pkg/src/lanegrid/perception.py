"""Synthesis of the perceived space decomposition: field of view, free,
occupied and hidden regions from the ego pose, a sensor envelope, and object
footprints. Objects are the only occluders; the unknown region (everything
outside the FOV) stays implicit."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidSceneError
from .geometry import (Point2, Polygon, RegionSet, fov_polygon, intersect,
                       subtract, union, union_all, visibility_region,
                       _strictly_inside)
from .roadmap import Route


@dataclass(frozen=True)
class SensorSpec:
    """Omnidirectional sensing envelope: a range disk approximated by an
    inscribed regular polygon."""

    range_m: float = 100.0
    arc_segments: int = 64

    def __post_init__(self):
        if self.range_m <= 0:
            raise ValueError("sensor range must be positive")
        if self.arc_segments < 8:
            raise ValueError("arc_segments must be at least 8")


@dataclass(frozen=True)
class ObjectState:
    """A detected road entity: oriented box with speed along its heading."""

    id: str
    center: Point2
    heading: float
    length: float
    width: float
    speed: float

    def __post_init__(self):
        if self.length <= 0 or self.width <= 0:
            raise ValueError(f"object '{self.id}': non-positive size")
        if not (math.isfinite(self.heading) and math.isfinite(self.speed)):
            raise ValueError(f"object '{self.id}': non-finite pose")
        if self.speed < 0:
            raise ValueError(f"object '{self.id}': negative speed")


@dataclass(frozen=True)
class EgoState:
    position: Point2
    heading: float
    speed: float
    route: Route
    route_station: float = 0.0


@dataclass(frozen=True)
class WorldDecomposition:
    """Partition of the field of view into free / occupied / hidden; the
    unknown region is the implicit complement of the FOV and is never
    materialized."""

    fov: RegionSet
    free: RegionSet
    occupied: RegionSet
    hidden: RegionSet
    unknown_is_complement: bool = True


def footprint(obj: ObjectState) -> Polygon:
    """Oriented rectangle of the object, long axis along its heading."""
    c, s = math.cos(obj.heading), math.sin(obj.heading)
    hl, hw = obj.length / 2.0, obj.width / 2.0
    corners = []
    for dx, dy in ((-hl, -hw), (hl, -hw), (hl, hw), (-hl, hw)):
        corners.append(Point2(obj.center.x + dx * c - dy * s,
                              obj.center.y + dx * s + dy * c))
    return Polygon(corners)


def decompose(ego: EgoState, spec: SensorSpec,
              objects: list[ObjectState]) -> WorldDecomposition:
    """Build the free / occupied / hidden partition of the field of view.

    Occupied is the union of object footprints clipped to the FOV; free is the
    space visible from the ego position; hidden is the remaining FOV (space
    shadowed by objects).
    """
    prints = [footprint(o) for o in objects]
    for fp in prints:
        if _strictly_inside(ego.position, fp.vertices):
            raise InvalidSceneError("ego position lies inside an object footprint")
    fov = RegionSet((fov_polygon(ego.position, spec.range_m, spec.arc_segments),))
    if not prints:
        return WorldDecomposition(fov=fov, free=fov, occupied=RegionSet.empty(),
                                  hidden=RegionSet.empty())
    occupied = intersect(union_all(prints), fov)
    visible = visibility_region(ego.position, spec.range_m, spec.arc_segments, prints)
    free = subtract(visible, occupied)
    hidden = subtract(fov, union(free, occupied))
    return WorldDecomposition(fov=fov, free=free, occupied=occupied, hidden=hidden)


def detected_objects(world: WorldDecomposition,
                     objects: list[ObjectState]) -> list[ObjectState]:
    """Objects whose footprint intersects the FOV; everything else is invisible
    to perception (though it may still exist as scenario ground truth)."""
    fov_shp = world.fov.shapely()
    out = []
    for obj in objects:
        if footprint(obj).shapely().intersection(fov_shp).area > 1e-9:
            out.append(obj)
    return out
