"""End-to-end orchestration: scenario files, the staged run (route ->
interacting lanes -> grid -> decomposition -> restriction -> overlays ->
labels), an independent sampling oracle, and a timing harness.

Runs are deterministic: identical scenario files produce identical reports,
byte for byte, at any worker count.
"""

from __future__ import annotations

import json
import math
import statistics
import time
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classify import (AoiSets, CellReport, ClassifyThresholds, SafetyParams,
                       SpaceClass, classify_cells, protected_region,
                       restrict_to_aoi, safety_region)
from .errors import ValidationError
from .geometry import Point2, RegionSet, union, union_all
from .interaction import (GridParams, InteractingLane, InteractionType,
                          LaneGrid, build_lane_grid, interacting_lanes)
from .perception import (EgoState, ObjectState, SensorSpec, WorldDecomposition,
                         decompose, detected_objects, footprint)
from .roadmap import RoadMap, load_map, route
from . import sampling

_STAGES = ("route", "interacting_lanes", "build_lane_grid", "decompose",
           "restrict_to_aoi", "safety_region", "protected_region", "classify_cells")

_SCENARIO_KEYS = {"map", "ego", "objects", "sensor", "params"}
_EGO_KEYS = {"lane", "station", "speed", "goal"}
_OBJECT_KEYS = {"id", "center", "heading_rad", "length", "width", "speed"}
_SENSOR_KEYS = {"range", "arc_segments"}
_PARAM_KEYS = {"d_interest", "cell_step", "a_brake", "min_block_gap"}


@dataclass(frozen=True)
class ScenarioParams:
    grid: GridParams = GridParams()
    safety: SafetyParams = SafetyParams()
    thresholds: ClassifyThresholds = ClassifyThresholds()


@dataclass(frozen=True)
class Scenario:
    road_map: RoadMap
    ego: EgoState
    objects: tuple[ObjectState, ...]
    sensor: SensorSpec
    params: ScenarioParams


@dataclass(frozen=True)
class Report:
    cells: tuple[CellReport, ...]
    summary: dict[SpaceClass, int]
    timings: dict[str, float]  # per-stage microseconds


@dataclass(frozen=True)
class RunArtifacts:
    """Every intermediate product of a run, kept for verification."""

    grid: LaneGrid
    world: WorldDecomposition
    aoi: RegionSet
    aoi_sets: AoiSets
    safety: RegionSet
    protected: RegionSet
    detected: tuple[ObjectState, ...]
    interacting: tuple[InteractingLane, ...]
    report: Report


def _require_keys(obj: dict, allowed: set[str], what: str):
    extra = set(obj) - allowed
    if extra:
        raise ValidationError(f"{what}: unknown keys {sorted(extra)}")


def load_scenario(path: str | Path) -> Scenario:
    """Load a scenario file; the map path is resolved relative to it."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ValidationError(f"malformed scenario document: {e}") from None
    _require_keys(doc, _SCENARIO_KEYS, "scenario")
    for key in ("map", "ego"):
        if key not in doc:
            raise ValidationError(f"scenario: missing '{key}'")
    road_map = load_map((path.parent / doc["map"]).read_text())

    ego_raw = doc["ego"]
    _require_keys(ego_raw, _EGO_KEYS, "ego")
    goal = ego_raw["goal"]
    _require_keys(goal, {"lane", "station"}, "ego.goal")
    rt = route(road_map, (ego_raw["lane"], float(ego_raw["station"])),
               (goal["lane"], float(goal["station"])))
    start_lane = road_map.lane(rt.lane_sequence[0])
    position = start_lane.centerline.point_at(rt.start_station)
    dx, dy = start_lane.centerline.direction_at(rt.start_station)
    ego = EgoState(position=position, heading=math.atan2(dy, dx),
                   speed=float(ego_raw["speed"]), route=rt, route_station=0.0)

    objects = []
    for raw in doc.get("objects", []):
        _require_keys(raw, _OBJECT_KEYS, f"object '{raw.get('id', '?')}'")
        objects.append(ObjectState(
            id=raw["id"], center=Point2(float(raw["center"][0]), float(raw["center"][1])),
            heading=float(raw["heading_rad"]), length=float(raw["length"]),
            width=float(raw["width"]), speed=float(raw["speed"])))

    sensor_raw = doc.get("sensor", {})
    _require_keys(sensor_raw, _SENSOR_KEYS, "sensor")
    sensor = SensorSpec(range_m=float(sensor_raw.get("range", 100.0)),
                        arc_segments=int(sensor_raw.get("arc_segments", 64)))

    params_raw = doc.get("params", {})
    _require_keys(params_raw, _PARAM_KEYS, "params")
    params = ScenarioParams(
        grid=GridParams(d_interest=float(params_raw.get("d_interest", 100.0)),
                        cell_step=float(params_raw.get("cell_step", 1.0))),
        safety=SafetyParams(a_brake=float(params_raw.get("a_brake", -6.0)),
                            min_block_gap=float(params_raw.get("min_block_gap", 1.0))))
    return Scenario(road_map=road_map, ego=ego, objects=tuple(objects),
                    sensor=sensor, params=params)


def execute(scenario: Scenario, workers: int = 1) -> RunArtifacts:
    """Run all stages and keep every intermediate product."""
    timings: dict[str, float] = {}

    def staged(name, fn):
        t0 = time.perf_counter_ns()
        result = fn()
        timings[name] = (time.perf_counter_ns() - t0) / 1000.0
        return result

    ego = scenario.ego
    road_map = scenario.road_map
    rt = staged("route", lambda: route(
        road_map, (ego.route.lane_sequence[0], ego.route.start_station),
        (ego.route.lane_sequence[-1], ego.route.end_station)))
    interacting = staged("interacting_lanes", lambda: interacting_lanes(road_map, rt))
    grid = staged("build_lane_grid", lambda: build_lane_grid(
        road_map, rt, ego.route_station, interacting, scenario.params.grid))
    world = staged("decompose", lambda: decompose(ego, scenario.sensor, list(scenario.objects)))
    detected = detected_objects(world, list(scenario.objects))
    aoi = union(grid.aoi1_region, grid.aoi2_region)
    aoi_sets = staged("restrict_to_aoi", lambda: restrict_to_aoi(world, aoi))
    safety = staged("safety_region", lambda: union_all(
        [safety_region(o, grid, road_map, scenario.params.safety) for o in detected]))
    protected = staged("protected_region", lambda: protected_region(
        detected, interacting, grid, road_map, scenario.params.safety))
    reports = staged("classify_cells", lambda: classify_cells(
        grid, aoi_sets, safety, protected, detected,
        scenario.params.thresholds, workers=workers))
    summary = Counter(r.label for r in reports)
    report = Report(cells=tuple(reports),
                    summary={cls: summary.get(cls, 0) for cls in SpaceClass},
                    timings=timings)
    return RunArtifacts(grid=grid, world=world, aoi=aoi, aoi_sets=aoi_sets,
                        safety=safety, protected=protected, detected=tuple(detected),
                        interacting=tuple(interacting), report=report)


def run(scenario: Scenario, workers: int = 1) -> Report:
    return execute(scenario, workers=workers).report


# ---------------------------------------------------------------------------
# report serialization

_REPORT_COLUMNS = ("lane_id order interaction index s0 s1 label distance_to_ego "
                   "free_frac occ_frac hid_frac saf_frac prot_frac")


def format_report(report: Report) -> str:
    """Line-delimited cell records sorted by (lane_id, index)."""
    lines = []
    for r in report.cells:
        c = r.cell
        lines.append(
            f"{c.lane_id} {c.order} {c.interaction.value} {c.index} "
            f"{c.s0:.6f} {c.s1:.6f} {r.label.value} {c.distance_to_ego:.6f} "
            f"{r.free_frac:.6f} {r.occ_frac:.6f} {r.hid_frac:.6f} "
            f"{r.saf_frac:.6f} {r.prot_frac:.6f}")
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> list[dict]:
    records = []
    for line in text.splitlines():
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 13:
            raise ValidationError(f"bad report line: {line!r}")
        records.append({
            "lane_id": parts[0], "order": int(parts[1]), "interaction": parts[2],
            "index": int(parts[3]), "s0": float(parts[4]), "s1": float(parts[5]),
            "label": SpaceClass(parts[6]), "distance_to_ego": float(parts[7]),
            "fracs": tuple(float(x) for x in parts[8:13]),
        })
    return records


# ---------------------------------------------------------------------------
# sampling oracle


@dataclass(frozen=True)
class CellDivergence:
    lane_id: str
    index: int
    report_label: SpaceClass
    oracle_label: SpaceClass
    near_threshold: bool


@dataclass(frozen=True)
class OracleReport:
    cells_checked: int
    max_fraction_deviation: float
    mismatches: tuple[CellDivergence, ...]
    agreement: float  # over all cells
    agreement_excluding_margin: float

    def summary_line(self) -> str:
        return (f"cells={self.cells_checked} max_dev={self.max_fraction_deviation:.4f} "
                f"agreement={self.agreement:.4f} "
                f"agreement_excl_margin={self.agreement_excluding_margin:.4f} "
                f"mismatches={len(self.mismatches)}")


def _near(value: float, threshold: float, margin: float) -> bool:
    return abs(value - threshold) <= margin


def _decisive_margin(fracs: tuple[float, float, float, float, float],
                     th: ClassifyThresholds, margin: float) -> bool:
    free, occ, hid, saf, prot = fracs
    return (_near(occ, th.eps_occ, margin) or _near(free, th.tau_free, margin)
            or _near(prot, th.tau_overlay, margin) or _near(saf, th.tau_overlay, margin)
            or _near(hid, th.eps_occ, margin))


def oracle_check(scenario: Scenario, samples_per_cell: int = 2000,
                 seed: int = 0, threshold_margin: float = 0.05) -> OracleReport:
    """Re-derive every cell's fractions by classifying uniformly sampled
    points with direct predicates (ray casts against footprints, crossing-
    number membership), apply the same labeling rules, and compare.

    Cells whose decisive fraction sits within ``threshold_margin`` of its
    threshold are reported but excluded from the strict agreement figure.
    """
    if samples_per_cell < 100:
        raise ValueError("samples_per_cell must be at least 100")
    art = execute(scenario)
    th = scenario.params.thresholds
    rng = np.random.default_rng(seed)
    fov_ring = art.world.fov.polygons[0].ring_array()
    ego_xy = np.array([scenario.ego.position.x, scenario.ego.position.y])
    prints = [footprint(o).ring_array() for o in art.detected]

    from .classify import _label

    max_dev = 0.0
    mismatches = []
    marginal = 0
    agree = 0
    agree_strict = 0
    strict_total = 0
    for r in art.report.cells:
        pts = sampling.sample_points_in_polygon(rng, r.cell.polygon, samples_per_cell)
        in_fov = sampling.points_in_ring(pts, fov_ring)
        in_fp = np.zeros(len(pts), dtype=bool)
        blocked = np.zeros(len(pts), dtype=bool)
        for ring in prints:
            in_fp |= sampling.points_in_ring(pts, ring)
            blocked |= sampling.segments_hit_convex_interior(ego_xy, pts, ring)
        occ_pt = in_fov & in_fp
        free_pt = in_fov & ~in_fp & ~blocked
        hid_pt = in_fov & ~occ_pt & ~free_pt
        saf_pt = sampling.points_in_region(pts, art.safety)
        prot_pt = sampling.points_in_region(pts, art.protected)
        n = float(len(pts))
        fracs = (free_pt.sum() / n, occ_pt.sum() / n, hid_pt.sum() / n,
                 saf_pt.sum() / n, prot_pt.sum() / n)
        touched = any(sampling.convex_overlaps_ring(ring, r.cell.polygon.ring_array())
                      for ring in prints)
        oracle_label = _label(fracs[1], fracs[0], fracs[4], fracs[3], fracs[2],
                              touched, th)
        reported = (r.free_frac, r.occ_frac, r.hid_frac, r.saf_frac, r.prot_frac)
        max_dev = max(max_dev, max(abs(a - b) for a, b in zip(fracs, reported)))
        near = (_decisive_margin(fracs, th, threshold_margin)
                or _decisive_margin(reported, th, threshold_margin))
        if near:
            marginal += 1
        if oracle_label == r.label:
            agree += 1
            if not near:
                agree_strict += 1
        else:
            mismatches.append(CellDivergence(r.cell.lane_id, r.cell.index,
                                             r.label, oracle_label, near))
        if not near:
            strict_total += 1
    total = len(art.report.cells)
    return OracleReport(
        cells_checked=total,
        max_fraction_deviation=max_dev,
        mismatches=tuple(mismatches),
        agreement=agree / total if total else 1.0,
        agreement_excluding_margin=agree_strict / strict_total if strict_total else 1.0)


# ---------------------------------------------------------------------------
# timing harness


def bench(scenario: Scenario, iterations: int = 100, workers: int = 1) -> dict:
    """Median and p95 wall time per stage and end to end, after 3 warm-ups.
    File I/O is excluded: the scenario is already loaded."""
    if iterations < 10:
        raise ValueError("iterations must be at least 10")
    for _ in range(3):
        run(scenario, workers=workers)
    per_stage: dict[str, list[float]] = {name: [] for name in _STAGES}
    end_to_end: list[float] = []
    for _ in range(iterations):
        t0 = time.perf_counter_ns()
        report = run(scenario, workers=workers)
        end_to_end.append((time.perf_counter_ns() - t0) / 1000.0)
        for name in _STAGES:
            per_stage[name].append(report.timings[name])

    def stats(xs: list[float]) -> dict:
        xs = sorted(xs)
        return {"median_us": statistics.median(xs),
                "p95_us": xs[min(len(xs) - 1, int(math.ceil(0.95 * len(xs))) - 1)]}

    out = {name: stats(vals) for name, vals in per_stage.items()}
    out["end_to_end"] = stats(end_to_end)
    out["iterations"] = iterations
    return out
