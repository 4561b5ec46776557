"""Vectorized point-sampling predicates used by the verification oracle.

Everything here is plain numpy, deliberately independent of the polygon
clipping backend, so that sampled-membership checks exercise a second route
through the geometry.
"""

from __future__ import annotations

import numpy as np

from .geometry import Polygon, RegionSet


def points_in_ring(points: np.ndarray, ring: np.ndarray) -> np.ndarray:
    """Crossing-number membership of ``points`` (N,2) in a simple ring (M,2).

    Boundary points are not treated specially; inputs are assumed to be
    generic samples where the boundary has measure zero.
    """
    x, y = points[:, 0], points[:, 1]
    inside = np.zeros(len(points), dtype=bool)
    xi, yi = ring[:, 0], ring[:, 1]
    xj, yj = np.roll(xi, 1), np.roll(yi, 1)
    for k in range(len(ring)):
        crosses = (yi[k] > y) != (yj[k] > y)
        if not crosses.any():
            continue
        x_cross = xj[k] + (y - yj[k]) * (xi[k] - xj[k]) / (yi[k] - yj[k])
        inside ^= crosses & (x < x_cross)
    return inside


def points_in_region(points: np.ndarray, region: RegionSet | Polygon) -> np.ndarray:
    if isinstance(region, Polygon):
        return points_in_ring(points, region.ring_array())
    out = np.zeros(len(points), dtype=bool)
    for poly in region.polygons:
        out |= points_in_ring(points, poly.ring_array())
    return out


def segments_hit_convex_interior(origin, points: np.ndarray, ring: np.ndarray) -> np.ndarray:
    """For each point p, whether the segment origin->p crosses the interior of
    a convex CCW ring. Grazing contact along the boundary does not count."""
    o = np.asarray(origin, dtype=float)
    d = points - o
    edges = np.roll(ring, -1, axis=0) - ring
    # outward normals of a CCW ring
    nx, ny = edges[:, 1], -edges[:, 0]
    t_enter = np.zeros(len(points))
    t_exit = np.ones(len(points))
    feasible = np.ones(len(points), dtype=bool)
    for k in range(len(ring)):
        num = nx[k] * (ring[k, 0] - o[0]) + ny[k] * (ring[k, 1] - o[1])
        den = nx[k] * d[:, 0] + ny[k] * d[:, 1]
        parallel = np.abs(den) < 1e-15
        # interior requires n.(x - v) < 0; parallel rays outside never enter
        feasible &= ~(parallel & (num <= 0))
        with np.errstate(divide="ignore", invalid="ignore"):
            t = num / den
        t_enter = np.where(~parallel & (den < 0), np.maximum(t_enter, t), t_enter)
        t_exit = np.where(~parallel & (den > 0), np.minimum(t_exit, t), t_exit)
    return feasible & (t_enter + 1e-12 < t_exit)


def min_distance_to_polyline(points: np.ndarray, polyline: np.ndarray) -> np.ndarray:
    """Distance from each point (N,2) to the closest point of a polyline (M,2)."""
    a = polyline[:-1]
    d = polyline[1:] - a
    seg2 = (d * d).sum(axis=1)
    rel = points[:, None, :] - a[None, :, :]
    t = np.clip((rel * d[None, :, :]).sum(axis=2) / seg2[None, :], 0.0, 1.0)
    closest = a[None, :, :] + t[:, :, None] * d[None, :, :]
    dist2 = ((points[:, None, :] - closest) ** 2).sum(axis=2)
    return np.sqrt(dist2.min(axis=1))


def convex_overlaps_ring(quad: np.ndarray, ring: np.ndarray) -> bool:
    """Exact area-overlap test between a convex CCW quad and a simple ring."""
    if points_in_ring(quad, ring).any() or points_in_ring(ring, quad).any():
        return True
    return _any_proper_crossing(quad, ring)


def _any_proper_crossing(ring_a: np.ndarray, ring_b: np.ndarray) -> bool:
    ea0, ea1 = ring_a, np.roll(ring_a, -1, axis=0)
    eb0, eb1 = ring_b, np.roll(ring_b, -1, axis=0)
    for i in range(len(ring_a)):
        p, r = ea0[i], ea1[i] - ea0[i]
        q = eb0
        s = eb1 - eb0
        denom = r[0] * s[:, 1] - r[1] * s[:, 0]
        qp = q - p
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (qp[:, 0] * s[:, 1] - qp[:, 1] * s[:, 0]) / denom
            u = (qp[:, 0] * r[1] - qp[:, 1] * r[0]) / denom
        hit = (np.abs(denom) > 1e-15) & (t > 1e-12) & (t < 1 - 1e-12) \
            & (u > 1e-12) & (u < 1 - 1e-12)
        if hit.any():
            return True
    return False


def sample_points_in_polygon(rng: np.random.Generator, poly: Polygon, n: int,
                             max_tries: int = 60) -> np.ndarray:
    """Rejection-sample ``n`` points uniformly inside a polygon's area."""
    minx, miny, maxx, maxy = poly.bounds
    ring = poly.ring_array()
    out = np.empty((0, 2))
    for _ in range(max_tries):
        need = n - len(out)
        if need <= 0:
            break
        batch = max(2 * need, 64)
        pts = rng.random((batch, 2)) * (maxx - minx, maxy - miny) + (minx, miny)
        keep = pts[points_in_ring(pts, ring)]
        out = np.vstack([out, keep[:need]])
    if len(out) < n:
        raise RuntimeError("rejection sampling failed to fill the polygon")
    return out
