"""Cell characterization: restriction of the perceived regions to the area of
interest, safety and protected overlay regions inferred from dynamic objects,
and the final per-cell labeling.

Label priority runs from most to least informative: occupied, free, protected,
safety, hidden, unknown. The two overlays only ever upgrade cells that would
otherwise be hidden or unknown; protected outranks safety because a physical
obstruction is a stronger guarantee than a behavioral assumption.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import shapely

from .geometry import RegionSet, intersect, subtract, union, union_all, _buffer_unchecked
from .interaction import Cell, InteractingLane, InteractionType, LaneGrid
from .perception import ObjectState, WorldDecomposition, footprint
from .roadmap import RoadMap

ASSIGN_MARGIN = 0.5  # m beyond the half-width for object-to-lane assignment


class SpaceClass(enum.Enum):
    FREE = "Free"
    OCCUPIED = "Occupied"
    HIDDEN = "Hidden"
    UNKNOWN = "Unknown"
    SAFETY = "Safety"
    PROTECTED = "Protected"


@dataclass(frozen=True)
class SafetyParams:
    """Emergency-braking model: d_safe = -v^2 / (2 * a_brake)."""

    a_brake: float = -6.0
    min_block_gap: float = 1.0

    def __post_init__(self):
        if self.a_brake >= 0:
            raise ValueError("a_brake must be negative (deceleration)")
        if self.min_block_gap < 0:
            raise ValueError("min_block_gap must be non-negative")


@dataclass(frozen=True)
class ClassifyThresholds:
    eps_occ: float = 1e-3    # area fraction above which contact counts
    tau_free: float = 0.99   # min free fraction to declare a cell free
    tau_overlay: float = 0.5 # min overlay fraction for safety/protected


@dataclass(frozen=True)
class AoiSets:
    """The perceived regions restricted to the area of interest."""

    free: RegionSet
    occupied: RegionSet
    hidden: RegionSet
    unknown: RegionSet


@dataclass(frozen=True)
class CellReport:
    cell: Cell
    label: SpaceClass
    free_frac: float
    occ_frac: float
    hid_frac: float
    saf_frac: float
    prot_frac: float


def restrict_to_aoi(world: WorldDecomposition, aoi: RegionSet) -> AoiSets:
    """Clip the free/occupied/hidden regions to the AOI; the unknown part is
    whatever remains of the AOI."""
    free = intersect(world.free, aoi)
    occupied = intersect(world.occupied, aoi)
    hidden = intersect(world.hidden, aoi)
    unknown = subtract(aoi, union(free, union(occupied, hidden)))
    return AoiSets(free=free, occupied=occupied, hidden=hidden, unknown=unknown)


def safety_distance(speed: float, params: SafetyParams) -> float:
    """Braking distance kept free in front of a vehicle moving at ``speed``."""
    if speed < 0:
        raise ValueError("speed must be non-negative")
    return -(speed * speed) / (2.0 * params.a_brake)


def _assigned_lanes(obj: ObjectState, grid: LaneGrid, road_map: RoadMap) -> list[str]:
    out = []
    for lid in grid.lane_ids():
        lane = road_map.lane(lid)
        _, offset = lane.centerline.station_offset(obj.center)
        if abs(offset) <= lane.width / 2.0 + ASSIGN_MARGIN:
            out.append(lid)
    return out


def safety_region(obj: ObjectState, grid: LaneGrid, road_map: RoadMap,
                  params: SafetyParams) -> RegionSet:
    """Lane slice ahead of a moving vehicle that drivers keep clear for
    braking; empty for stopped vehicles or vehicles off every grid lane."""
    if obj.speed <= 0:
        return RegionSet.empty()
    d_safe = safety_distance(obj.speed, params)
    fp = footprint(obj)
    parts = []
    for lid in _assigned_lanes(obj, grid, road_map):
        lane = road_map.lane(lid)
        front = max(lane.centerline.station_offset(v)[0] for v in fp.vertices)
        lo = min(front, lane.length)
        hi = min(front + d_safe, lane.length)
        if hi - lo > 1e-6:
            parts.append(_buffer_unchecked(lane.centerline.slice_between(lo, hi), lane.width))
    return union_all(parts)


def protected_region(objects: list[ObjectState], interacting: list[InteractingLane],
                     grid: LaneGrid, road_map: RoadMap,
                     params: SafetyParams) -> RegionSet:
    """Space upstream of a physical blockage on a primary-order lane.

    A vehicle sitting on a secondary-order lane that crosses or merges with a
    primary lane, and covering that lane's width up to less than
    ``min_block_gap`` of slack, makes everything upstream of it unreachable
    for other road users.
    """
    gridded = set(grid.lane_ids())
    cross_pairs = [(e.lane_id, e.via) for e in interacting
                   if e.order == 2 and e.via is not None
                   and e.interaction in (InteractionType.MERGING, InteractionType.CROSSING)]
    parts = []
    for obj in objects:
        fp = footprint(obj)
        fp_region = RegionSet((fp,))
        for second_id, primary_id in cross_pairs:
            if primary_id not in gridded:
                continue
            on_second = second_id in _assigned_lanes(obj, grid, road_map) \
                or not intersect(fp_region, road_map.lane_polygon(second_id)).is_empty
            if not on_second:
                continue
            lane = road_map.lane(primary_id)
            overlap = intersect(fp_region, road_map.lane_polygon(primary_id))
            if overlap.is_empty:
                continue
            projections = [lane.centerline.station_offset(v)
                           for poly in overlap.polygons for v in poly.vertices]
            offsets = [o for _, o in projections]
            half = lane.width / 2.0
            covered = min(max(offsets), half) - max(min(offsets), -half)
            if covered < lane.width - params.min_block_gap:
                continue  # a passable gap remains
            blockage = min(s for s, _ in projections)
            lo = grid.lane_window(primary_id)[0]
            hi = min(blockage, lane.length)
            if hi - lo > 1e-6:
                parts.append(_buffer_unchecked(
                    lane.centerline.slice_between(lo, hi), lane.width))
    return union_all(parts)


def _label(occ: float, free: float, prot: float, saf: float, hid: float,
           touched: bool, th: ClassifyThresholds) -> SpaceClass:
    if occ > th.eps_occ or touched:
        return SpaceClass.OCCUPIED
    if free >= th.tau_free:
        return SpaceClass.FREE
    if prot >= th.tau_overlay:
        return SpaceClass.PROTECTED
    if saf >= th.tau_overlay:
        return SpaceClass.SAFETY
    if hid > th.eps_occ:
        return SpaceClass.HIDDEN
    return SpaceClass.UNKNOWN


def _fractions(cell_shps: np.ndarray, cell_areas: np.ndarray, region: RegionSet) -> np.ndarray:
    if region.is_empty:
        return np.zeros(len(cell_shps))
    return shapely.area(shapely.intersection(cell_shps, region.shapely())) / cell_areas


def classify_cells(grid: LaneGrid, aoi_sets: AoiSets, safety: RegionSet,
                   protected: RegionSet, objects: list[ObjectState],
                   thresholds: ClassifyThresholds = ClassifyThresholds(),
                   workers: int = 1) -> list[CellReport]:
    """Label every grid cell from its area fractions against the regions.

    Any footprint contact marks a cell occupied regardless of the overlap
    size, so a cell is never reported more optimistic than its contents.
    Output order is fixed by (lane_id, index) regardless of ``workers``.
    """
    cells = grid.cells

    def run_chunk(chunk: tuple[Cell, ...]) -> list[CellReport]:
        shps = np.array([c.polygon.shapely() for c in chunk], dtype=object)
        areas = np.array([c.polygon.area for c in chunk])
        free = _fractions(shps, areas, aoi_sets.free)
        occ = _fractions(shps, areas, aoi_sets.occupied)
        hid = _fractions(shps, areas, aoi_sets.hidden)
        saf = _fractions(shps, areas, safety)
        prot = _fractions(shps, areas, protected)
        touched = np.zeros(len(chunk), dtype=bool)
        for obj in objects:
            touched |= shapely.area(shapely.intersection(
                shps, footprint(obj).shapely())) > 1e-9
        out = []
        for i, cell in enumerate(chunk):
            label = _label(occ[i], free[i], prot[i], saf[i], hid[i],
                           bool(touched[i]), thresholds)
            out.append(CellReport(cell, label, float(free[i]), float(occ[i]),
                                  float(hid[i]), float(saf[i]), float(prot[i])))
        return out

    if workers <= 1 or len(cells) < 2 * workers:
        return run_chunk(cells)
    chunks = [cells[i::workers] for i in range(workers)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(run_chunk, chunks))
    merged = [r for part in results for r in part]
    merged.sort(key=lambda r: (r.cell.lane_id, r.cell.index))
    return merged
