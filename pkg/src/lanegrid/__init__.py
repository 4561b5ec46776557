"""Lane-level occupancy context engine.

Given an HD map, an ego route, and a perceived scene, derives the interacting
lanes, discretizes them into a lane grid, and classifies every cell as free,
occupied, hidden, unknown, safety or protected.
"""

from .classify import (AoiSets, CellReport, ClassifyThresholds, SafetyParams,
                       SpaceClass, classify_cells, protected_region,
                       restrict_to_aoi, safety_distance, safety_region)
from .errors import (InvalidSceneError, LaneGridError, ProjectionError,
                     RouteNotFoundError, ValidationError)
from .geometry import (Point2, Polygon, Polyline, RegionSet, buffer_centerline,
                       contains_point, fov_polygon, intersect, subtract, union,
                       union_all, visibility_region)
from .interaction import (Cell, GridParams, InteractingLane, InteractionType,
                          LaneGrid, build_lane_grid, classify_pair,
                          interacting_lanes)
from .perception import (EgoState, ObjectState, SensorSpec, WorldDecomposition,
                         decompose, detected_objects, footprint)
from .pipeline import (OracleReport, Report, RunArtifacts, Scenario,
                       ScenarioParams, bench, execute, format_report,
                       load_scenario, oracle_check, parse_report, run)
from .render import render_svg
from .roadmap import (Lane, RoadMap, Route, load_map, route, serialize_map,
                      station_on_route)

__version__ = "0.1.0"
