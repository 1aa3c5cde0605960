"""Waypoint trajectories: per-segment quintics plus a joint-angle schedule.

Each segment is the unique 5th-order polynomial matching position, velocity
and acceleration at both ends. Velocity/acceleration pins default to zero
(rest at the whole-plan endpoints, stop-and-go at interior waypoints) unless
a waypoint provides them; providing analytic pins yields smooth fly-through
paths. Yaw gets its own quintic through shortest-rotation targets. The
joint-angle command ramps toward each waypoint's target at the fold-rate
limit, starting when that waypoint's time arrives.
"""

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

HALF_PI = math.pi / 2


@dataclass(frozen=True)
class Waypoint:
    t: float
    position: np.ndarray            # m, world NED
    yaw: float = 0.0                # rad
    alpha: float = 0.0              # rad, joint-angle command from this time on
    velocity: np.ndarray = None     # m/s, optional pin
    acceleration: np.ndarray = None  # m/s^2, optional pin

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        if self.position.shape != (3,):
            raise ValueError("waypoint position must be a 3-vector")
        if not 0.0 <= self.alpha <= HALF_PI:
            raise ValueError(f"waypoint alpha {self.alpha} outside [0, pi/2]")
        for name in ("velocity", "acceleration"):
            value = getattr(self, name)
            if value is not None:
                value = np.asarray(value, dtype=float)
                if value.shape != (3,):
                    raise ValueError(f"waypoint {name} must be a 3-vector")
                object.__setattr__(self, name, value)


@dataclass(frozen=True)
class PolySegment:
    """Quintic coefficients, ascending powers of (t - t0), rows x/y/z/yaw."""

    t0: float
    t1: float
    coeffs: np.ndarray  # (4, 6)

    def eval(self, t: float):
        """Value, first and second derivative of all four channels at t."""
        s = t - self.t0
        powers = np.array([1.0, s, s**2, s**3, s**4, s**5])
        d1 = np.array([0.0, 1.0, 2 * s, 3 * s**2, 4 * s**3, 5 * s**4])
        d2 = np.array([0.0, 0.0, 2.0, 6 * s, 12 * s**2, 20 * s**3])
        return self.coeffs @ powers, self.coeffs @ d1, self.coeffs @ d2


@dataclass(frozen=True)
class TrajectorySample:
    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    yaw: float
    yaw_rate: float
    alpha_cmd: float


@dataclass(frozen=True)
class TrajectoryPlan:
    segments: list
    alpha_knots: np.ndarray   # (k, 2): time, commanded joint angle
    t_start: float
    t_end: float
    _starts: list = field(default_factory=list)

    def sample(self, t: float) -> TrajectorySample:
        return sample(self, t)


def _quintic(p0, v0, a0, p1, v1, a1, tau):
    """Coefficients (ascending) of the quintic meeting the six constraints.

    Closed form on normalized time s = (t - t0)/tau, then rescaled; keeps the
    boundary conditions satisfied to round-off for any segment duration.
    """
    dv0, dv1 = v0 * tau, v1 * tau
    da0, da1 = a0 * tau * tau, a1 * tau * tau
    dp = p1 - p0
    c = np.array(
        [
            p0,
            dv0,
            0.5 * da0,
            10.0 * dp - 6.0 * dv0 - 4.0 * dv1 - 1.5 * da0 + 0.5 * da1,
            -15.0 * dp + 8.0 * dv0 + 7.0 * dv1 + 1.5 * da0 - da1,
            6.0 * dp - 3.0 * (dv0 + dv1) - 0.5 * da0 + 0.5 * da1,
        ]
    )
    return c / tau ** np.arange(6)


def plan(waypoints, alpha_rate_limit: float = 0.5) -> TrajectoryPlan:
    """Build the full plan through the given waypoints."""
    if len(waypoints) < 2:
        raise ValueError("a plan needs at least two waypoints")
    times = [wp.t for wp in waypoints]
    if any(t1 - t0 <= 0.0 for t0, t1 in zip(times, times[1:])):
        raise ValueError("waypoint times must be strictly increasing")
    if alpha_rate_limit <= 0.0:
        raise ValueError("alpha rate limit must be positive")

    yaw_targets = _unwrap_yaws([wp.yaw for wp in waypoints])

    segments = []
    for i in range(len(waypoints) - 1):
        w0, w1 = waypoints[i], waypoints[i + 1]
        tau = w1.t - w0.t
        v0 = w0.velocity if w0.velocity is not None else np.zeros(3)
        a0 = w0.acceleration if w0.acceleration is not None else np.zeros(3)
        v1 = w1.velocity if w1.velocity is not None else np.zeros(3)
        a1 = w1.acceleration if w1.acceleration is not None else np.zeros(3)
        coeffs = np.empty((4, 6))
        for axis in range(3):
            coeffs[axis] = _quintic(
                w0.position[axis], v0[axis], a0[axis],
                w1.position[axis], v1[axis], a1[axis], tau,
            )
        coeffs[3] = _quintic(yaw_targets[i], 0.0, 0.0, yaw_targets[i + 1], 0.0, 0.0, tau)
        segments.append(PolySegment(t0=w0.t, t1=w1.t, coeffs=coeffs))

    knots = _alpha_schedule(waypoints, alpha_rate_limit)
    return TrajectoryPlan(
        segments=segments,
        alpha_knots=knots,
        t_start=times[0],
        t_end=times[-1],
        _starts=[seg.t0 for seg in segments],
    )


def _unwrap_yaws(yaws):
    """Accumulate shortest-rotation yaw targets to avoid 2*pi jumps."""
    out = [yaws[0]]
    for y in yaws[1:]:
        step = math.atan2(math.sin(y - out[-1]), math.cos(y - out[-1]))
        out.append(out[-1] + step)
    return out


def _alpha_schedule(waypoints, rate: float) -> np.ndarray:
    """Piecewise-linear command knots: ramp toward each waypoint's target
    starting at that waypoint's time, at the fold-rate limit."""
    knots = [(waypoints[0].t, waypoints[0].alpha)]
    value = waypoints[0].alpha
    for i in range(1, len(waypoints)):
        t_i, target = waypoints[i].t, waypoints[i].alpha
        if t_i > knots[-1][0]:
            knots.append((t_i, value))
        if target == value:
            continue
        t_next = waypoints[i + 1].t if i + 1 < len(waypoints) else math.inf
        reach = t_i + abs(target - value) / rate
        if reach <= t_next:
            knots.append((reach, target))
            value = target
        else:
            # Still ramping when the next waypoint arrives; a knot at t_next
            # gets appended by the next loop turn at the partial value.
            value += math.copysign(rate * (t_next - t_i), target - value)
    return np.array(knots)


def sample(plan_: TrajectoryPlan, t: float) -> TrajectorySample:
    """Evaluate the plan at time t; clamps outside the domain (terminal hold)."""
    t_eval = min(max(t, plan_.t_start), plan_.t_end)
    idx = bisect.bisect_right(plan_._starts, t_eval) - 1
    idx = min(max(idx, 0), len(plan_.segments) - 1)
    value, d1, d2 = plan_.segments[idx].eval(t_eval)
    if t < plan_.t_start or t > plan_.t_end:
        d1 = np.zeros(4)
        d2 = np.zeros(4)
    alpha_cmd = float(
        np.interp(t, plan_.alpha_knots[:, 0], plan_.alpha_knots[:, 1])
    )
    return TrajectorySample(
        position=value[:3],
        velocity=d1[:3],
        acceleration=d2[:3],
        yaw=float(value[3]),
        yaw_rate=float(d1[3]),
        alpha_cmd=alpha_cmd,
    )
