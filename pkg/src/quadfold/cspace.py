"""Configuration-space clearance checks against planar rectangular obstacles.

The vehicle footprint is reduced to its width: a segment of length w(alpha)
centered on the position and spanning the body y (lateral) axis, so yaw
naturally projects the width across a gap. Clearance to an obstacle is the
signed distance from that segment to the rectangle; inflating the obstacle
by w/2 and checking the center point is the equivalent C-space transform.
"""

import math
from dataclasses import dataclass

import numpy as np

from quadfold import morphology
from quadfold.params import ParamSet


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned obstacle in the world x-y plane, meters."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if self.x_min >= self.x_max or self.y_min >= self.y_max:
            raise ValueError("rectangle must have positive extent")


@dataclass(frozen=True)
class ObstacleMap:
    rectangles: tuple

    @classmethod
    def from_list(cls, rects) -> "ObstacleMap":
        return cls(rectangles=tuple(rects))

    def __len__(self):
        return len(self.rectangles)


@dataclass
class ClearanceReport:
    min_clearance: float            # m, negative means collision
    min_clearance_time: float       # s
    violations: list                # list of (t_start, t_end) collision windows
    samples: np.ndarray             # (n, 2): time, clearance

    @property
    def blocked(self) -> bool:
        return self.min_clearance < 0.0


def _point_rect_distance(px, py, rect: Rectangle) -> float:
    dx = max(rect.x_min - px, 0.0, px - rect.x_max)
    dy = max(rect.y_min - py, 0.0, py - rect.y_max)
    return math.hypot(dx, dy)


def _inside(px, py, rect: Rectangle) -> bool:
    return rect.x_min <= px <= rect.x_max and rect.y_min <= py <= rect.y_max


def segment_rect_distance(p0, p1, rect: Rectangle) -> float:
    """Distance between segment p0-p1 and a rectangle; 0 when they touch."""
    if _inside(*p0, rect) or _inside(*p1, rect):
        return 0.0
    corners = [
        (rect.x_min, rect.y_min), (rect.x_max, rect.y_min),
        (rect.x_max, rect.y_max), (rect.x_min, rect.y_max),
    ]
    edges = [(corners[i], corners[(i + 1) % 4]) for i in range(4)]
    if any(_segments_intersect(p0, p1, a, b) for a, b in edges):
        return 0.0
    best = min(_segment_segment_distance(p0, p1, a, b) for a, b in edges)
    return best


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _segments_intersect(p0, p1, q0, q1) -> bool:
    d1 = _cross(q0, q1, p0)
    d2 = _cross(q0, q1, p1)
    d3 = _cross(p0, p1, q0)
    d4 = _cross(p0, p1, q1)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
        return True
    return False


def _point_segment_distance(p, a, b) -> float:
    ab = (b[0] - a[0], b[1] - a[1])
    ap = (p[0] - a[0], p[1] - a[1])
    denom = ab[0] ** 2 + ab[1] ** 2
    t = 0.0 if denom == 0.0 else max(0.0, min(1.0, (ap[0] * ab[0] + ap[1] * ab[1]) / denom))
    cx, cy = a[0] + t * ab[0], a[1] + t * ab[1]
    return math.hypot(p[0] - cx, p[1] - cy)


def _segment_segment_distance(p0, p1, q0, q1) -> float:
    if _segments_intersect(p0, p1, q0, q1):
        return 0.0
    return min(
        _point_segment_distance(p0, q0, q1),
        _point_segment_distance(p1, q0, q1),
        _point_segment_distance(q0, p0, p1),
        _point_segment_distance(q1, p0, p1),
    )


def footprint_segment(x, y, yaw, width):
    """Endpoints of the width segment along the body y axis at the given yaw."""
    half = 0.5 * width
    # body y axis in the world x-y plane
    ey = (-math.sin(yaw), math.cos(yaw))
    return (x - half * ey[0], y - half * ey[1]), (x + half * ey[0], y + half * ey[1])


def clearance_at(params: ParamSet, obstacle_map: ObstacleMap,
                 x: float, y: float, yaw: float, alpha: float) -> float:
    """Smallest clearance (m) to any obstacle for one vehicle pose."""
    width = morphology.body_width(params, alpha)
    p0, p1 = footprint_segment(x, y, yaw, width)
    best = math.inf
    for rect in obstacle_map.rectangles:
        d = segment_rect_distance(p0, p1, rect)
        if d == 0.0:
            # Penetration depth as negative clearance: center point depth
            # minus the footprint half-width along the dominant axis.
            depth = -_penetration(x, y, p0, p1, rect)
            best = min(best, depth)
        else:
            best = min(best, d)
    return best


def _penetration(x, y, p0, p1, rect: Rectangle) -> float:
    """Positive overlap measure for a colliding pose (coarse, for reporting)."""
    inside_depth = 0.0
    if _inside(x, y, rect):
        inside_depth = min(
            x - rect.x_min, rect.x_max - x, y - rect.y_min, rect.y_max - y
        )
    # Endpoint penetration toward the nearest face
    for px, py in (p0, p1):
        if _inside(px, py, rect):
            inside_depth = max(
                inside_depth,
                min(px - rect.x_min, rect.x_max - px, py - rect.y_min, rect.y_max - py),
            )
    return max(inside_depth, 1e-3)


def check_trace_clearance(params: ParamSet, obstacle_map: ObstacleMap, trace,
                          alpha_override: float | None = None) -> ClearanceReport:
    """Clearance along a whole trace; yaw from the logged quaternion."""
    t = trace.col("t_s")
    xs, ys = trace.col("px_m"), trace.col("py_m")
    qw, qx, qy, qz = (trace.col(c) for c in ("qw", "qx", "qy", "qz"))
    yaws = np.arctan2(2.0 * (qw * qz + qx * qy), 1.0 - 2.0 * (qy * qy + qz * qz))
    alphas = trace.col("alpha_rad")

    samples = np.empty((len(t), 2))
    for i in range(len(t)):
        alpha = alpha_override if alpha_override is not None else float(alphas[i])
        samples[i, 0] = t[i]
        samples[i, 1] = clearance_at(
            params, obstacle_map, float(xs[i]), float(ys[i]), float(yaws[i]), alpha
        )
    return _report_from_samples(samples)


def check_path_clearance(params: ParamSet, obstacle_map: ObstacleMap,
                         points: np.ndarray, yaws: np.ndarray,
                         alpha: float) -> ClearanceReport:
    """Clearance along a synthetic path of (x, y) points at fixed alpha."""
    n = len(points)
    samples = np.empty((n, 2))
    for i in range(n):
        samples[i, 0] = i
        samples[i, 1] = clearance_at(
            params, obstacle_map, float(points[i][0]), float(points[i][1]),
            float(yaws[i]), alpha,
        )
    return _report_from_samples(samples)


def _report_from_samples(samples: np.ndarray) -> ClearanceReport:
    clear = samples[:, 1]
    idx = int(np.argmin(clear))
    violations = []
    in_violation = False
    v_start = 0.0
    for i in range(len(clear)):
        if clear[i] < 0.0 and not in_violation:
            in_violation, v_start = True, samples[i, 0]
        elif clear[i] >= 0.0 and in_violation:
            in_violation = False
            violations.append((v_start, samples[i, 0]))
    if in_violation:
        violations.append((v_start, samples[-1, 0]))
    return ClearanceReport(
        min_clearance=float(clear[idx]),
        min_clearance_time=float(samples[idx, 0]),
        violations=violations,
        samples=samples,
    )
