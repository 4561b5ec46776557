"""2-D geometry kernel: points, stationed polylines, simple polygons, region
sets with boolean operations, centerline buffering, and visibility regions.

All types are immutable values and all operations are pure functions, so the
kernel is safe to use from any number of threads. Boolean results are snapped
to a fixed coordinate grid (``SNAP_GRID``) which keeps repeated compositions
free of sliver artifacts without exact arithmetic. Polygons carry no holes;
set differences that would punch holes are decomposed into simple pieces
inside a :class:`RegionSet`.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import shapely

from .errors import InvalidSceneError

SNAP_GRID = 1e-9           # coordinate grid applied to boolean outputs
BOUNDARY_TOL = 1e-9        # closed-set membership tolerance
MIN_BUFFER_SEGMENT = 1e-6  # shortest polyline segment accepted for buffering
MITER_LIMIT = 4.0          # miter join limit, as a multiple of the half-width
_MIN_PIECE_AREA = 1e-12    # boolean output pieces below this are dropped
_SHADOW_MAX_ANGLE = math.pi / 4  # max angle one shadow quad may subtend


@dataclass(frozen=True)
class Point2:
    """A point in the local planar frame, in meters."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite coordinates ({self.x}, {self.y})")

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


def _as_point(p) -> Point2:
    if isinstance(p, Point2):
        return p
    x, y = p
    return Point2(float(x), float(y))


class Polyline:
    """An ordered sequence of line segments with cumulative arc-length
    stations starting at 0."""

    __slots__ = ("vertices", "stations", "_np")

    def __init__(self, vertices: Iterable):
        pts = tuple(_as_point(v) for v in vertices)
        if len(pts) < 2:
            raise ValueError("polyline needs at least 2 vertices")
        stations = [0.0]
        for a, b in zip(pts, pts[1:]):
            seg = math.hypot(b.x - a.x, b.y - a.y)
            if seg <= 1e-12:
                raise ValueError("consecutive polyline vertices must be distinct")
            stations.append(stations[-1] + seg)
        self.vertices = pts
        self.stations = tuple(stations)
        self._np = None

    @property
    def length(self) -> float:
        return self.stations[-1]

    def as_array(self) -> np.ndarray:
        if self._np is None:
            self._np = np.array([(p.x, p.y) for p in self.vertices], dtype=float)
        return self._np

    def point_at(self, s: float) -> Point2:
        """Point at station ``s``, clamped to [0, length]."""
        s = min(max(s, 0.0), self.length)
        i = min(bisect_right(self.stations, s), len(self.stations) - 1) - 1
        i = max(i, 0)
        a, b = self.vertices[i], self.vertices[i + 1]
        seg = self.stations[i + 1] - self.stations[i]
        t = (s - self.stations[i]) / seg
        return Point2(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))

    def direction_at(self, s: float) -> tuple[float, float]:
        """Unit travel direction of the segment containing station ``s``."""
        s = min(max(s, 0.0), self.length)
        i = min(bisect_right(self.stations, s), len(self.stations) - 1) - 1
        i = max(i, 0)
        a, b = self.vertices[i], self.vertices[i + 1]
        seg = self.stations[i + 1] - self.stations[i]
        return ((b.x - a.x) / seg, (b.y - a.y) / seg)

    def station_offset(self, pt) -> tuple[float, float]:
        """Project ``pt`` onto the polyline.

        Returns ``(station, offset)`` where station is the arc-length position
        of the closest point (clamped to [0, length]) and offset is the signed
        lateral distance, positive to the left of the travel direction. Ties
        between segments resolve toward the smaller station.
        """
        p = _as_point(pt)
        v = self.as_array()
        d = v[1:] - v[:-1]
        seg_len2 = (d * d).sum(axis=1)
        rel = np.array([p.x, p.y]) - v[:-1]
        t = np.clip((rel * d).sum(axis=1) / seg_len2, 0.0, 1.0)
        closest = v[:-1] + t[:, None] * d
        dist2 = ((closest - np.array([p.x, p.y])) ** 2).sum(axis=1)
        i = int(np.argmin(dist2))  # first minimum -> smaller station wins ties
        seg = math.sqrt(seg_len2[i])
        station = self.stations[i] + t[i] * seg
        ux, uy = d[i][0] / seg, d[i][1] / seg
        cx, cy = closest[i]
        offset = ux * (p.y - cy) - uy * (p.x - cx)
        return (float(station), float(offset))

    def slice_between(self, s0: float, s1: float) -> "Polyline":
        """Sub-polyline covering stations [s0, s1]."""
        if not (0.0 <= s0 < s1 <= self.length + 1e-9):
            raise ValueError(f"invalid station interval [{s0}, {s1}] on length {self.length}")
        s1 = min(s1, self.length)
        pts = [self.point_at(s0)]
        for st, v in zip(self.stations, self.vertices):
            if s0 + 1e-12 < st < s1 - 1e-12:
                pts.append(v)
        pts.append(self.point_at(s1))
        return Polyline(pts)


class Polygon:
    """A simple polygon given by its outer ring, normalized counter-clockwise.

    Holes are not supported; operations producing holes return a
    :class:`RegionSet` decomposed into simple pieces.
    """

    __slots__ = ("vertices", "_shp", "_np")

    def __init__(self, ring: Iterable):
        pts = [_as_point(v) for v in ring]
        if len(pts) >= 2 and _close(pts[0], pts[-1]):
            pts = pts[:-1]
        cleaned: list[Point2] = []
        for p in pts:
            if not cleaned or not _close(cleaned[-1], p):
                cleaned.append(p)
        if len(cleaned) < 3:
            raise ValueError("polygon needs at least 3 distinct vertices")
        signed = _signed_area(cleaned)
        if abs(signed) <= _MIN_PIECE_AREA:
            raise ValueError("degenerate polygon (zero area)")
        if signed < 0:
            cleaned.reverse()
        self.vertices = tuple(cleaned)
        self._shp = None
        self._np = None

    @property
    def area(self) -> float:
        return _signed_area(self.vertices)

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        xs = [p.x for p in self.vertices]
        ys = [p.y for p in self.vertices]
        return (min(xs), min(ys), max(xs), max(ys))

    def ring_array(self) -> np.ndarray:
        if self._np is None:
            self._np = np.array([(p.x, p.y) for p in self.vertices], dtype=float)
        return self._np

    def contains(self, pt) -> bool:
        """Closed-set membership: boundary points count as inside."""
        p = _as_point(pt)
        if _on_ring_boundary(p, self.vertices):
            return True
        return _crossing_number_inside(p, self.vertices)

    def shapely(self) -> shapely.Polygon:
        if self._shp is None:
            self._shp = shapely.Polygon([(p.x, p.y) for p in self.vertices])
        return self._shp

    def __eq__(self, other):
        return isinstance(other, Polygon) and self.vertices == other.vertices

    def __repr__(self):
        return f"Polygon({len(self.vertices)} vertices, area={self.area:.3f})"


class RegionSet:
    """A set of pairwise interior-disjoint simple polygons; may be empty."""

    __slots__ = ("polygons", "_shp")

    def __init__(self, polygons: Iterable[Polygon] = ()):
        self.polygons = tuple(polygons)
        self._shp = None

    @staticmethod
    def empty() -> "RegionSet":
        return RegionSet(())

    @property
    def is_empty(self) -> bool:
        return not self.polygons

    @property
    def area(self) -> float:
        return sum(p.area for p in self.polygons)

    def contains(self, pt) -> bool:
        return any(p.contains(pt) for p in self.polygons)

    def shapely(self):
        if self._shp is None:
            if not self.polygons:
                self._shp = shapely.Polygon()
            else:
                # Members may share boundary edges (e.g. hole-splitting cuts),
                # which a raw MultiPolygon would make invalid for GEOS.
                self._shp = shapely.union_all([p.shapely() for p in self.polygons])
        return self._shp

    def __repr__(self):
        return f"RegionSet({len(self.polygons)} polygons, area={self.area:.3f})"


def _close(a: Point2, b: Point2) -> bool:
    return abs(a.x - b.x) <= 1e-12 and abs(a.y - b.y) <= 1e-12


def _signed_area(ring: Sequence[Point2]) -> float:
    acc = 0.0
    n = len(ring)
    for i in range(n):
        a, b = ring[i], ring[(i + 1) % n]
        acc += a.x * b.y - b.x * a.y
    return 0.5 * acc


def _on_ring_boundary(p: Point2, ring: Sequence[Point2], tol: float = BOUNDARY_TOL) -> bool:
    n = len(ring)
    for i in range(n):
        a, b = ring[i], ring[(i + 1) % n]
        dx, dy = b.x - a.x, b.y - a.y
        seg2 = dx * dx + dy * dy
        t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / seg2
        t = min(max(t, 0.0), 1.0)
        cx, cy = a.x + t * dx, a.y + t * dy
        if (p.x - cx) ** 2 + (p.y - cy) ** 2 <= tol * tol:
            return True
    return False


def _crossing_number_inside(p: Point2, ring: Sequence[Point2]) -> bool:
    inside = False
    n = len(ring)
    j = n - 1
    for i in range(n):
        yi, yj = ring[i].y, ring[j].y
        if (yi > p.y) != (yj > p.y):
            x_cross = ring[j].x + (p.y - yj) * (ring[i].x - ring[j].x) / (yi - yj)
            if p.x < x_cross:
                inside = not inside
        j = i
    return inside


def _strictly_inside(p: Point2, ring: Sequence[Point2]) -> bool:
    if _on_ring_boundary(p, ring):
        return False
    return _crossing_number_inside(p, ring)


# ---------------------------------------------------------------------------
# shapely conversion


def _as_region(x) -> RegionSet:
    if isinstance(x, RegionSet):
        return x
    if isinstance(x, Polygon):
        return RegionSet((x,))
    raise TypeError(f"expected Polygon or RegionSet, got {type(x).__name__}")


def _snap(geom):
    return shapely.set_precision(geom, SNAP_GRID)


def _polygon_parts(geom) -> list[shapely.Polygon]:
    if geom.is_empty:
        return []
    if isinstance(geom, shapely.Polygon):
        return [geom]
    if isinstance(geom, (shapely.MultiPolygon, shapely.GeometryCollection)):
        out = []
        for part in shapely.get_parts(geom):
            out.extend(_polygon_parts(part))
        return out
    return []  # points / lines from degenerate boolean contacts


def _split_holes(poly: shapely.Polygon) -> list[shapely.Polygon]:
    """Cut a polygon with holes into simple hole-free pieces with vertical
    lines through each hole; each cut opens the pierced hole in both halves."""
    if not poly.interiors:
        return [poly]
    hole = shapely.Polygon(poly.interiors[0])
    x_cut = hole.representative_point().x
    minx, miny, maxx, maxy = poly.bounds
    left = shapely.box(minx - 1.0, miny - 1.0, x_cut, maxy + 1.0)
    right = shapely.box(x_cut, miny - 1.0, maxx + 1.0, maxy + 1.0)
    out: list[shapely.Polygon] = []
    for half in (poly.intersection(left), poly.intersection(right)):
        for part in _polygon_parts(half):
            if part.area > _MIN_PIECE_AREA:
                out.extend(_split_holes(part))
    return out


def region_from_shapely(geom) -> RegionSet:
    """Snap a GEOS geometry to the coordinate grid and decompose it into a
    RegionSet of simple hole-free polygons."""
    geom = _snap(geom)
    pieces: list[Polygon] = []
    for part in _polygon_parts(geom):
        for simple in _split_holes(part):
            if simple.area > _MIN_PIECE_AREA:
                pieces.append(Polygon(simple.exterior.coords))
    return RegionSet(pieces)


# ---------------------------------------------------------------------------
# boolean operations


def intersect(a, b) -> RegionSet:
    """Region of points belonging to both operands."""
    ra, rb = _as_region(a), _as_region(b)
    if ra.is_empty or rb.is_empty:
        return RegionSet.empty()
    return region_from_shapely(ra.shapely().intersection(rb.shapely()))


def subtract(a, b) -> RegionSet:
    """Region of points in ``a`` and not in ``b``."""
    ra, rb = _as_region(a), _as_region(b)
    if ra.is_empty:
        return RegionSet.empty()
    if rb.is_empty:
        return ra
    return region_from_shapely(ra.shapely().difference(rb.shapely()))


def union(a, b) -> RegionSet:
    """Region of points in either operand."""
    ra, rb = _as_region(a), _as_region(b)
    if ra.is_empty:
        return rb
    if rb.is_empty:
        return ra
    return region_from_shapely(ra.shapely().union(rb.shapely()))


def union_all(parts: Iterable) -> RegionSet:
    regions = [_as_region(p) for p in parts]
    regions = [r for r in regions if not r.is_empty]
    if not regions:
        return RegionSet.empty()
    if len(regions) == 1:
        return regions[0]
    return region_from_shapely(shapely.union_all([r.shapely() for r in regions]))


def contains_point(r, pt) -> bool:
    """Closed-set membership test against a Polygon or RegionSet."""
    return _as_region(r).contains(pt)


# ---------------------------------------------------------------------------
# buffering


def buffer_centerline(line: Polyline, width: float) -> Polygon:
    """Sweep a centerline into a lane polygon of the given total width.

    Joins are mitered up to ``MITER_LIMIT`` times the half-width and beveled
    beyond it; end caps are flat.
    """
    if width <= 0:
        raise ValueError(f"width must be positive, got {width}")
    min_seg = min(b - a for a, b in zip(line.stations, line.stations[1:]))
    if min_seg < MIN_BUFFER_SEGMENT:
        raise ValueError(f"polyline segment shorter than {MIN_BUFFER_SEGMENT} m")
    return _buffer_unchecked(line, width)


def _buffer_unchecked(line: Polyline, width: float) -> Polygon:
    shp = shapely.LineString([(p.x, p.y) for p in line.vertices])
    buf = shp.buffer(width / 2.0, cap_style="flat", join_style="mitre",
                     mitre_limit=MITER_LIMIT)
    buf = _snap(buf)
    parts = _polygon_parts(buf)
    if len(parts) != 1 or parts[0].interiors:
        raise ValueError("buffering produced a non-simple polygon")
    return Polygon(parts[0].exterior.coords)


# ---------------------------------------------------------------------------
# visibility


def fov_polygon(origin, max_range: float, arc_segments: int) -> Polygon:
    """Regular ``arc_segments``-gon inscribed in the range circle."""
    if max_range <= 0:
        raise ValueError("range must be positive")
    if arc_segments < 8:
        raise ValueError("arc_segments must be at least 8")
    o = _as_point(origin)
    ring = []
    for k in range(arc_segments):
        ang = 2.0 * math.pi * k / arc_segments
        ring.append(Point2(o.x + max_range * math.cos(ang),
                           o.y + max_range * math.sin(ang)))
    return Polygon(ring)


def _shadow_quads(origin: Point2, max_range: float, occluder: Polygon) -> list[shapely.Polygon]:
    """Quads covering every point whose sight line from ``origin`` crosses an
    edge of the occluder; edges are split so each quad subtends a small angle
    and its far side stays well outside the range circle."""
    quads = []
    ring = occluder.vertices
    n = len(ring)
    for i in range(n):
        a, b = ring[i], ring[(i + 1) % n]
        stack = [(a, b)]
        while stack:
            pa, pb = stack.pop()
            ax, ay = pa.x - origin.x, pa.y - origin.y
            bx, by = pb.x - origin.x, pb.y - origin.y
            cross = ax * by - ay * bx
            da = math.hypot(ax, ay)
            db = math.hypot(bx, by)
            if da < 1e-12 or db < 1e-12 or abs(cross) < 1e-12:
                continue  # radial or degenerate edge casts no area shadow
            ang = abs(math.atan2(cross, ax * bx + ay * by))
            if ang > _SHADOW_MAX_ANGLE:
                mid = Point2((pa.x + pb.x) / 2.0, (pa.y + pb.y) / 2.0)
                stack.append((pa, mid))
                stack.append((mid, pb))
                continue
            ta = max(2.2 * max_range / da, 1.5)
            tb = max(2.2 * max_range / db, 1.5)
            ea = (origin.x + ax * ta, origin.y + ay * ta)
            eb = (origin.x + bx * tb, origin.y + by * tb)
            quad = shapely.Polygon([(pa.x, pa.y), (pb.x, pb.y), eb, ea])
            if quad.area > _MIN_PIECE_AREA:
                quads.append(quad)
    return quads


def visibility_region(origin, max_range: float, arc_segments: int,
                      occluders: Sequence[Polygon]) -> RegionSet:
    """Points within range whose sight line from ``origin`` crosses no
    occluder interior. Occluder interiors are excluded from the result; the
    range disk is approximated by the inscribed regular polygon."""
    o = _as_point(origin)
    fov = fov_polygon(o, max_range, arc_segments)
    for occ in occluders:
        if _strictly_inside(o, occ.vertices):
            raise InvalidSceneError("viewpoint lies inside an occluder")
    # occluders entirely beyond the range circle cannot shadow anything inside
    origin_pt = shapely.Point(o.x, o.y)
    active = [occ for occ in occluders
              if occ.shapely().distance(origin_pt) <= max_range]
    if not active:
        return RegionSet((fov,))
    blockers: list[shapely.Polygon] = []
    for occ in active:
        blockers.append(occ.shapely())
        blockers.extend(_shadow_quads(o, max_range, occ))
    blocked = shapely.union_all(blockers)
    return region_from_shapely(fov.shapely().difference(blocked))
