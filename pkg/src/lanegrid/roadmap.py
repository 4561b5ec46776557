"""HD-map data model: lanes with centerline/width/topology, a strict JSON
loader with validation, lane polygon construction, and successor-graph
routing."""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from typing import Optional

from .errors import ProjectionError, RouteNotFoundError, ValidationError
from .geometry import Point2, Polygon, Polyline, buffer_centerline

SUCCESSOR_GAP_TOL = 0.1  # max endpoint gap between a lane and its successor

_LANE_KEYS = {"id", "width", "centerline", "successors", "left_neighbor", "right_neighbor"}


@dataclass(frozen=True)
class Lane:
    """One driving lane: centerline oriented in travel direction, constant
    width, and topology links."""

    id: str
    centerline: Polyline
    width: float
    successors: tuple[str, ...] = ()
    left_neighbor: Optional[str] = None
    right_neighbor: Optional[str] = None

    @property
    def length(self) -> float:
        return self.centerline.length


class RoadMap:
    """Immutable collection of lanes indexed by id, with cached derived
    geometry. All queries are pure and thread-safe."""

    def __init__(self, lanes: list[Lane]):
        self.lanes: dict[str, Lane] = {}
        for lane in lanes:
            if lane.id in self.lanes:
                raise ValidationError(f"lane '{lane.id}': duplicate id")
            self.lanes[lane.id] = lane
        self._validate()
        self._polygons: dict[str, Polygon] = {}
        self._closures: dict[str, frozenset[str]] = {}

    def lane(self, lane_id: str) -> Lane:
        try:
            return self.lanes[lane_id]
        except KeyError:
            raise KeyError(f"unknown lane '{lane_id}'") from None

    def lane_polygon(self, lane_id: str) -> Polygon:
        if lane_id not in self._polygons:
            lane = self.lane(lane_id)
            self._polygons[lane_id] = buffer_centerline(lane.centerline, lane.width)
        return self._polygons[lane_id]

    def successor_closure(self, lane_id: str) -> frozenset[str]:
        """All lanes reachable from ``lane_id`` by following successors."""
        if lane_id not in self._closures:
            seen: set[str] = set()
            stack = list(self.lane(lane_id).successors)
            while stack:
                cur = stack.pop()
                if cur in seen:
                    continue
                seen.add(cur)
                stack.extend(self.lanes[cur].successors)
            self._closures[lane_id] = frozenset(seen)
        return self._closures[lane_id]

    def _validate(self):
        for lane in self.lanes.values():
            if lane.width <= 0:
                raise ValidationError(f"lane '{lane.id}': width must be positive")
            if lane.length < 1.0:
                raise ValidationError(f"lane '{lane.id}': centerline shorter than 1 m")
            seg_min = min(b - a for a, b in
                          zip(lane.centerline.stations, lane.centerline.stations[1:]))
            if seg_min < 1e-6:
                raise ValidationError(f"lane '{lane.id}': zero-length centerline segment")
            end = lane.centerline.vertices[-1]
            for suc in lane.successors:
                if suc not in self.lanes:
                    raise ValidationError(f"lane '{lane.id}': dangling successor '{suc}'")
                start = self.lanes[suc].centerline.vertices[0]
                gap = math.hypot(start.x - end.x, start.y - end.y)
                if gap > SUCCESSOR_GAP_TOL:
                    raise ValidationError(
                        f"lane '{lane.id}': successor '{suc}' starts {gap:.3f} m away")
            for attr, inverse in (("left_neighbor", "right_neighbor"),
                                  ("right_neighbor", "left_neighbor")):
                nb = getattr(lane, attr)
                if nb is None:
                    continue
                if nb not in self.lanes:
                    raise ValidationError(f"lane '{lane.id}': unknown neighbor '{nb}'")
                if getattr(self.lanes[nb], inverse) != lane.id:
                    raise ValidationError(
                        f"lane '{lane.id}': neighbor relation with '{nb}' is not symmetric")


@dataclass(frozen=True)
class Route:
    """An intended path: consecutive successor-connected lanes with start and
    end stations on the first and last lane."""

    lane_sequence: tuple[str, ...]
    start_station: float
    end_station: float

    def lane_base_stations(self, road_map: RoadMap) -> list[float]:
        """Route station of station 0 of each route lane (may be negative for
        the first lane)."""
        bases = [-self.start_station]
        for lid in self.lane_sequence[:-1]:
            bases.append(bases[-1] + road_map.lane(lid).length)
        return bases

    def length(self, road_map: RoadMap) -> float:
        if len(self.lane_sequence) == 1:
            return self.end_station - self.start_station
        bases = self.lane_base_stations(road_map)
        return bases[-1] + self.end_station


def load_map(document: str | dict) -> RoadMap:
    """Parse and validate a map document (JSON text or already-parsed dict).

    The format is strict: unknown keys are rejected so that typos in hand-built
    maps fail loudly instead of silently changing topology.
    """
    if isinstance(document, str):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as e:
            raise ValidationError(f"malformed map document: {e}") from None
    else:
        doc = document
    if not isinstance(doc, dict) or set(doc) != {"lanes"}:
        raise ValidationError("map document must be an object with a single 'lanes' key")
    lanes = []
    for raw in doc["lanes"]:
        extra = set(raw) - _LANE_KEYS
        if extra:
            raise ValidationError(f"lane '{raw.get('id', '?')}': unknown keys {sorted(extra)}")
        missing = _LANE_KEYS - set(raw)
        if missing:
            raise ValidationError(f"lane '{raw.get('id', '?')}': missing keys {sorted(missing)}")
        if not isinstance(raw["id"], str) or not raw["id"]:
            raise ValidationError("lane with empty or non-string id")
        try:
            centerline = Polyline([Point2(float(x), float(y)) for x, y in raw["centerline"]])
        except (TypeError, ValueError) as e:
            raise ValidationError(f"lane '{raw['id']}': bad centerline ({e})") from None
        lanes.append(Lane(
            id=raw["id"],
            centerline=centerline,
            width=float(raw["width"]),
            successors=tuple(raw["successors"]),
            left_neighbor=raw["left_neighbor"],
            right_neighbor=raw["right_neighbor"],
        ))
    return RoadMap(lanes)


def serialize_map(road_map: RoadMap) -> str:
    """Inverse of :func:`load_map`; coordinates round-trip bit-exact."""
    doc = {"lanes": [
        {
            "id": lane.id,
            "width": lane.width,
            "centerline": [[p.x, p.y] for p in lane.centerline.vertices],
            "successors": list(lane.successors),
            "left_neighbor": lane.left_neighbor,
            "right_neighbor": lane.right_neighbor,
        }
        for lane in road_map.lanes.values()
    ]}
    return json.dumps(doc, indent=2)


def route(road_map: RoadMap, start: tuple[str, float], goal: tuple[str, float]) -> Route:
    """Minimal-arc-length path over the successor graph.

    Lane-change edges are never used; ties between equal-length paths resolve
    to the lexicographically smallest lane-id sequence.
    """
    start_lane, s_a = start
    goal_lane, s_b = goal
    la = road_map.lane(start_lane)
    lb = road_map.lane(goal_lane)
    if not (0.0 <= s_a <= la.length and 0.0 <= s_b <= lb.length):
        raise ValidationError("route endpoint station outside lane length")
    if start_lane == goal_lane and s_a <= s_b:
        return Route((start_lane,), s_a, s_b)
    # heap entries compare as (cost, lane-id path): lexicographic tie-break
    heap: list[tuple[float, tuple[str, ...]]] = [(la.length - s_a, (start_lane,))]
    done: set[str] = set()
    while heap:
        cost, path = heapq.heappop(heap)
        last = path[-1]
        if last == goal_lane and len(path) > 1:
            return Route(path, s_a, s_b)
        if last in done:
            continue
        done.add(last)
        for suc in road_map.lanes[last].successors:
            if suc == goal_lane:
                heapq.heappush(heap, (cost + s_b, path + (suc,)))
            elif suc not in done:
                heapq.heappush(heap, (cost + road_map.lanes[suc].length, path + (suc,)))
    raise RouteNotFoundError(f"no successor path from '{start_lane}' to '{goal_lane}'")


def station_on_route(rt: Route, road_map: RoadMap, pt) -> float:
    """Cumulative arc length from the route start to the projection of ``pt``
    onto the nearest route lane's centerline."""
    bases = rt.lane_base_stations(road_map)
    best = None
    for lid, base in zip(rt.lane_sequence, bases):
        lane = road_map.lane(lid)
        station, _ = lane.centerline.station_offset(pt)
        close = lane.centerline.point_at(station)
        p = pt if isinstance(pt, Point2) else Point2(float(pt[0]), float(pt[1]))
        dist = math.hypot(p.x - close.x, p.y - close.y)
        if best is None or dist < best[0]:
            best = (dist, base + station, lane.width)
    dist, route_station, width = best
    if dist > 2.0 * width:
        raise ProjectionError(
            f"point projects {dist:.2f} m from the route (limit {2.0 * width:.2f} m)")
    return route_station
