"""Interacting-lane derivation and lane-grid construction.

From the ego route, every lane of the map is classified against the route
(keeping / changing / merging / crossing). Lanes in direct interaction with
the route form the primary order; lanes in direct interaction with a primary
lane form the secondary order. The kept portions of all interacting lanes are
discretized longitudinally into cells, which together form the area of
interest (AOI).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

from .geometry import Polygon, RegionSet, _buffer_unchecked, intersect, union_all
from .roadmap import RoadMap, Route, station_on_route

MIN_OVERLAP_AREA = 0.5  # m^2; smaller lane-polygon overlaps are map noise


class InteractionType(enum.Enum):
    KEEPING = "Keeping"
    CHANGING = "Changing"
    MERGING = "Merging"
    CROSSING = "Crossing"


@dataclass(frozen=True)
class InteractingLane:
    """A lane the ego may interact with.

    Order 1 means direct interaction with the route; order 2 means direct
    interaction with an order-1 lane, reached through ``via``. Conflict
    stations locate the entry of the conflict zone: on the route (as a route
    station, chained through ``via`` for order 2) and on the lane itself.
    ``conflict_length`` is the extent of the conflict zone along the lane.
    Keeping and Changing entries carry zeros (whole-lane adjacency).
    """

    lane_id: str
    order: int
    interaction: InteractionType
    via: Optional[str] = None
    conflict_station_on_route: float = 0.0
    conflict_station_on_lane: float = 0.0
    conflict_length: float = 0.0


@dataclass(frozen=True)
class Cell:
    """One longitudinal slice of a lane polygon."""

    lane_id: str
    index: int
    s0: float
    s1: float
    polygon: Polygon
    distance_to_ego: float
    order: int
    interaction: InteractionType


@dataclass(frozen=True)
class LaneGrid:
    """All cells of the area of interest, ordered by (lane_id, index)."""

    cells: tuple[Cell, ...]
    aoi1_region: RegionSet
    aoi2_region: RegionSet

    def lane_window(self, lane_id: str) -> tuple[float, float]:
        spans = [(c.s0, c.s1) for c in self.cells if c.lane_id == lane_id]
        return (min(s for s, _ in spans), max(s for _, s in spans))

    def lane_ids(self) -> list[str]:
        return sorted({c.lane_id for c in self.cells})


def classify_pair(road_map: RoadMap, base_lane: str, other: str) -> Optional[InteractionType]:
    """Interaction of ``other`` with ``base_lane``, or None when unrelated.

    Priority: keeping (same lane or successor chain) > changing (adjacent
    neighbor) > merging (shared successor, or overlap containing both end
    vertices) > crossing (interior overlap with no joining topology).
    """
    base = road_map.lane(base_lane)
    road_map.lane(other)  # raise on unknown id
    if other == base_lane or other in road_map.successor_closure(base_lane):
        return InteractionType.KEEPING
    if other in (base.left_neighbor, base.right_neighbor):
        return InteractionType.CHANGING
    other_lane = road_map.lanes[other]
    if set(base.successors) & set(other_lane.successors):
        return InteractionType.MERGING
    overlap = intersect(road_map.lane_polygon(base_lane), road_map.lane_polygon(other))
    if overlap.area < MIN_OVERLAP_AREA:
        return None
    base_end = base.centerline.vertices[-1]
    other_end = other_lane.centerline.vertices[-1]
    if overlap.contains(base_end) and overlap.contains(other_end):
        return InteractionType.MERGING
    return InteractionType.CROSSING


def _overlap_region(road_map: RoadMap, lane_id: str, against: list[str]) -> RegionSet:
    lane_poly = road_map.lane_polygon(lane_id)
    other = union_all([road_map.lane_polygon(lid) for lid in against])
    return intersect(lane_poly, other)


def _station_span_on_lane(road_map: RoadMap, lane_id: str, region: RegionSet) -> tuple[float, float]:
    line = road_map.lane(lane_id).centerline
    stations = [line.station_offset(v)[0]
                for poly in region.polygons for v in poly.vertices]
    return (min(stations), max(stations))


def _min_route_station(rt: Route, road_map: RoadMap, region: RegionSet) -> float:
    return min(station_on_route(rt, road_map, v)
               for poly in region.polygons for v in poly.vertices)


def interacting_lanes(road_map: RoadMap, rt: Route) -> list[InteractingLane]:
    """Primary- and secondary-order interacting lanes for a route.

    Order 1 is the route itself plus every lane merging with or crossing it;
    order 2 collects, for each order-1 lane, the lanes changing into, merging
    with or crossing that lane. A lane interacting with several order-1 lanes
    keeps the entry with the smallest conflict distance.
    """
    route_set = set(rt.lane_sequence)
    entries: list[InteractingLane] = [
        InteractingLane(lid, 1, InteractionType.KEEPING) for lid in rt.lane_sequence
    ]
    route_bases = dict(zip(rt.lane_sequence, rt.lane_base_stations(road_map)))

    order1_extra: list[InteractingLane] = []
    for other in sorted(road_map.lanes):
        if other in route_set:
            continue
        for rl in rt.lane_sequence:
            kind = classify_pair(road_map, rl, other)
            if kind not in (InteractionType.MERGING, InteractionType.CROSSING):
                continue
            overlap = _overlap_region(road_map, other, list(rt.lane_sequence))
            if overlap.is_empty:
                # pure topology merge: conflict sits at the shared junction
                c_route = route_bases[rl] + road_map.lane(rl).length
                c_lane = road_map.lane(other).length
                length = 0.0
            else:
                c_route = _min_route_station(rt, road_map, overlap)
                c_lane, hi = _station_span_on_lane(road_map, other, overlap)
                length = hi - c_lane
            order1_extra.append(InteractingLane(
                other, 1, kind, None, c_route, c_lane, length))
            break
    entries.extend(order1_extra)

    order1_ids = {e.lane_id for e in entries}
    second: dict[str, InteractingLane] = {}
    for parent in entries:
        for other in sorted(road_map.lanes):
            if other in order1_ids:
                continue
            kind = classify_pair(road_map, parent.lane_id, other)
            if kind in (None, InteractionType.KEEPING):
                continue
            if kind == InteractionType.CHANGING:
                entry = InteractingLane(other, 2, kind, parent.lane_id)
            else:
                overlap = _overlap_region(road_map, other, [parent.lane_id])
                if overlap.is_empty:
                    entry_on_parent = road_map.lane(parent.lane_id).length
                    c_lane = road_map.lane(other).length
                    length = 0.0
                else:
                    entry_on_parent, _ = _station_span_on_lane(
                        road_map, parent.lane_id, overlap)
                    c_lane, hi = _station_span_on_lane(road_map, other, overlap)
                    length = hi - c_lane
                if parent.lane_id in route_set:
                    # only Changing reaches here via route lanes; guard anyway
                    c_route = route_bases[parent.lane_id] + entry_on_parent
                else:
                    # chain the distance through the parent's conflict point,
                    # walking backward along the parent lane
                    c_route = parent.conflict_station_on_route + (
                        parent.conflict_station_on_lane - entry_on_parent)
                entry = InteractingLane(
                    other, 2, kind, parent.lane_id, c_route, c_lane, length)
            held = second.get(other)
            if held is None or (entry.conflict_station_on_route, entry.via or "") < (
                    held.conflict_station_on_route, held.via or ""):
                second[other] = entry
    entries.extend(second[k] for k in sorted(second))
    return entries


@dataclass(frozen=True)
class GridParams:
    d_interest: float = 100.0
    cell_step: float = 1.0

    def __post_init__(self):
        if self.d_interest <= 0 or self.cell_step <= 0:
            raise ValueError("d_interest and cell_step must be positive")


def _cut_cells(lo: float, hi: float, step: float, anchor_hi: bool) -> list[tuple[float, float]]:
    """Cut [lo, hi] into step-sized intervals anchored at one end; the far end
    keeps the remainder. Anchoring keeps cell boundaries stable when the
    window grows with the interest distance."""
    spans: list[tuple[float, float]] = []
    if anchor_hi:
        b = hi
        while b - step > lo + 1e-6:
            spans.append((b - step, b))
            b -= step
        if b - lo > 1e-6:
            spans.append((lo, b))
        spans.reverse()
    else:
        a = lo
        while a + step < hi - 1e-6:
            spans.append((a, a + step))
            a += step
        if hi - a > 1e-6:
            spans.append((a, hi))
    return spans


def build_lane_grid(road_map: RoadMap, rt: Route, ego_station: float,
                    interacting: list[InteractingLane], params: GridParams) -> LaneGrid:
    """Prune interacting lanes to the interest distance and discretize them.

    Route lanes keep the stations covering [ego_station, ego_station +
    d_interest] along the route. A merging/crossing lane with conflict
    distance d_c is kept only while 0 <= d_c <= d_interest, for the stations
    reaching (d_interest - d_c) upstream of its conflict entry plus the
    conflict zone itself. Changing lanes mirror the station window of the
    lane they change into.
    """
    d_i = params.d_interest
    route_bases = dict(zip(rt.lane_sequence, rt.lane_base_stations(road_map)))

    # window per lane: (lo, hi, anchor_hi, distance_fn)
    windows: dict[str, tuple[float, float, bool]] = {}
    entry_by_lane: dict[str, InteractingLane] = {}

    def route_window(lid: str) -> tuple[float, float] | None:
        lane = road_map.lane(lid)
        base = route_bases[lid]
        lane_lo = rt.start_station if lid == rt.lane_sequence[0] else 0.0
        lane_hi = rt.end_station if lid == rt.lane_sequence[-1] else lane.length
        lo = max(lane_lo, ego_station - base)
        hi = min(lane_hi, ego_station + d_i - base)
        return (lo, hi) if hi - lo > 1e-6 else None

    for entry in interacting:
        lid = entry.lane_id
        if entry.interaction == InteractionType.KEEPING and lid in route_bases:
            win = route_window(lid)
            if win:
                windows[lid] = (win[0], win[1], False)
                entry_by_lane[lid] = entry
        elif entry.interaction in (InteractionType.MERGING, InteractionType.CROSSING):
            d_c = entry.conflict_station_on_route - ego_station
            if not (0.0 <= d_c <= d_i):
                continue
            lane = road_map.lane(lid)
            hi = min(entry.conflict_station_on_lane + entry.conflict_length, lane.length)
            lo = max(0.0, entry.conflict_station_on_lane - (d_i - d_c))
            if hi - lo > 1e-6:
                windows[lid] = (lo, hi, True)
                entry_by_lane[lid] = entry

    for entry in interacting:
        if entry.interaction != InteractionType.CHANGING:
            continue
        via = entry.via
        if via not in windows:
            continue
        lo, hi, anchor_hi = windows[via]
        lane = road_map.lane(entry.lane_id)
        lo, hi = max(0.0, lo), min(lane.length, hi)
        if hi - lo > 1e-6:
            windows[entry.lane_id] = (lo, hi, anchor_hi)
            entry_by_lane[entry.lane_id] = entry

    def cell_distance(entry: InteractingLane, mid: float) -> float:
        if entry.interaction == InteractionType.KEEPING:
            return max(0.0, route_bases[entry.lane_id] + mid - ego_station)
        if entry.interaction == InteractionType.CHANGING:
            return cell_distance(entry_by_lane[entry.via], mid)
        d_c = entry.conflict_station_on_route - ego_station
        return max(0.0, d_c + (entry.conflict_station_on_lane - mid))

    cells: list[Cell] = []
    for lid in sorted(windows):
        lo, hi, anchor_hi = windows[lid]
        entry = entry_by_lane[lid]
        lane = road_map.lane(lid)
        # _buffer_unchecked: cell cuts may land arbitrarily close to vertices
        for idx, (a, b) in enumerate(_cut_cells(lo, hi, params.cell_step, anchor_hi)):
            piece = lane.centerline.slice_between(a, b)
            poly = _buffer_unchecked(piece, lane.width)
            cells.append(Cell(
                lane_id=lid, index=idx, s0=a, s1=b, polygon=poly,
                distance_to_ego=cell_distance(entry, (a + b) / 2.0),
                order=entry.order, interaction=entry.interaction))

    cells.sort(key=lambda c: (c.lane_id, c.index))
    aoi1 = union_all([c.polygon for c in cells if c.order == 1])
    aoi2 = union_all([c.polygon for c in cells if c.order == 2])
    return LaneGrid(tuple(cells), aoi1, aoi2)
