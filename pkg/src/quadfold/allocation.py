"""Control allocation: motor thrusts <-> collective thrust and body torques.

Motor geometry at joint angle alpha: the upper arm carries motors at
azimuths +A and A+pi, the lower arm at -A and pi-A (A = pi/4 - alpha/2), so
alpha = 0 is the standard X at +/-45 deg and alpha = pi/2 stacks the pairs
on the body x axis. Every thrust axis leans inward (toward the pivot) by
the fixed tilt delta, staying in the vertical plane of its own arm, which
gives the reaction moments a roll component that survives A -> 0.

Spins are assigned so each motor's reaction moment reinforces its thrust
lever about roll; the same choice makes the upper pair share one spin
direction and the lower pair the other.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from quadfold.morphology import arm_angle
from quadfold.params import ParamSet

_AXIS_NAMES = ("collective thrust", "roll", "pitch", "yaw")

# Azimuth signs per motor: [+A, A+pi, -A, pi-A]; spins chosen per the
# roll-reinforcement rule sign(tan azimuth).
_ARMS = ("upper", "upper", "lower", "lower")
_SPINS = np.array([1.0, 1.0, -1.0, -1.0])


class AllocationError(RuntimeError):
    """The allocation matrix lost rank; carries the uncontrollable axis."""

    def __init__(self, axis: str, rank: int):
        super().__init__(f"allocation matrix has rank {rank}: lost {axis} authority")
        self.axis = axis
        self.rank = rank


@dataclass(frozen=True)
class Motor:
    index: int
    arm: str
    azimuth: float          # rad, in the body x-y plane
    position: np.ndarray    # m, body FRD
    spin: str               # "CW" or "CCW"
    thrust_axis: np.ndarray  # unit vector, body FRD (points mostly -z)


def motor_azimuths(alpha: float) -> np.ndarray:
    a = arm_angle(alpha)
    return np.array([a, a + math.pi, -a, math.pi - a])


def motor_layout(params: ParamSet, alpha: float) -> list[Motor]:
    """Geometry of all four motors at the given joint angle."""
    az = motor_azimuths(alpha)
    positions = _positions(params, az)
    axes = _thrust_axes(params, az)
    return [
        Motor(
            index=i,
            arm=_ARMS[i],
            azimuth=float(az[i]),
            position=positions[i],
            spin="CCW" if _SPINS[i] > 0 else "CW",
            thrust_axis=axes[i],
        )
        for i in range(4)
    ]


def _positions(params: ParamSet, az: np.ndarray) -> np.ndarray:
    half_h = 0.5 * params.vertical_arm_offset
    # Upper motors sit above the center plane (body z points down).
    z = np.array([-half_h, -half_h, half_h, half_h])
    return np.column_stack(
        (params.arm_length * np.cos(az), params.arm_length * np.sin(az), z)
    )


def _thrust_axes(params: ParamSet, az: np.ndarray) -> np.ndarray:
    sd, cd = math.sin(params.tilt_delta), math.cos(params.tilt_delta)
    return np.column_stack((-sd * np.cos(az), -sd * np.sin(az), -cd * np.ones(4)))


@dataclass(frozen=True)
class AllocationMatrix:
    """Rows map motor thrusts to [upward thrust, tau_x, tau_y, tau_z]."""

    B: np.ndarray
    alpha: float
    condition_number: float
    max_motor_thrust: float


def _cross_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise cross product of (n,3) arrays (np.cross minus its overhead)."""
    out = np.empty_like(a)
    out[:, 0] = a[:, 1] * b[:, 2] - a[:, 2] * b[:, 1]
    out[:, 1] = a[:, 2] * b[:, 0] - a[:, 0] * b[:, 2]
    out[:, 2] = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    return out


@lru_cache(maxsize=4096)
def _motor_wrench_cached(params: ParamSet, alpha: float):
    az = motor_azimuths(alpha)
    axes = _thrust_axes(params, az)
    positions = _positions(params, az)
    torques = _cross_rows(positions, axes) + _SPINS[:, None] * params.K_m * axes
    axes.setflags(write=False)
    torques.setflags(write=False)
    return axes, torques


def motor_wrench(params: ParamSet, alpha: float):
    """Per-unit-thrust force vectors (4,3) and torque vectors (4,3), body frame."""
    return _motor_wrench_cached(params, float(alpha))


@lru_cache(maxsize=4096)
def _build_allocation_cached(params: ParamSet, alpha: float) -> AllocationMatrix:
    axes, torques = motor_wrench(params, alpha)
    B = np.empty((4, 4))
    B[0, :] = -axes[:, 2]       # upward force per unit thrust (z is down)
    B[1:4, :] = torques.T
    B.setflags(write=False)
    return AllocationMatrix(
        B=B,
        alpha=alpha,
        condition_number=float(np.linalg.cond(B)),
        max_motor_thrust=params.max_motor_thrust,
    )


def build_allocation(params: ParamSet, alpha: float) -> AllocationMatrix:
    """Allocation matrix at joint angle alpha (thrusts in N, torques in N m)."""
    return _build_allocation_cached(params, float(alpha))


def allocate(alloc: AllocationMatrix, thrust: float, tau: np.ndarray) -> np.ndarray:
    """Motor thrusts (N, shape (4,)) realizing the requested wrench.

    Exact solve when it fits the actuator range [0, max_motor_thrust].
    Otherwise priority desaturation: keep roll/pitch, give up collective
    first (shift along the thrust direction), then scale yaw into whatever
    margin remains.
    """
    B = alloc.B
    # Cheap singularity gate; the SVD runs only to name the lost axis.
    if abs(np.linalg.det(B)) < 1e-12:
        rank = int(np.linalg.matrix_rank(B, tol=1e-9))
        if rank < 4:
            raise AllocationError(_lost_axis(B), rank)

    hi = alloc.max_motor_thrust
    request = np.array([thrust, tau[0], tau[1], tau[2]], dtype=float)
    t = np.linalg.solve(B, request)
    if np.all(t >= -1e-12) and np.all(t <= hi + 1e-12):
        return np.clip(t, 0.0, hi)

    B_inv = np.linalg.inv(B)
    t_rp = B_inv @ np.array([thrust, tau[0], tau[1], 0.0])
    thrust_dir = B_inv[:, 0]
    k = _desat_gain(t_rp, thrust_dir, 0.0, hi)
    t_rp = t_rp + k * thrust_dir
    k = _desat_gain(t_rp, thrust_dir, 0.0, hi)
    t_rp = np.clip(t_rp + 0.5 * k * thrust_dir, 0.0, hi)

    yaw_step = B_inv[:, 3] * tau[2]
    scale = _max_feasible_scale(t_rp, yaw_step, 0.0, hi)
    return np.clip(t_rp + scale * yaw_step, 0.0, hi)


def _desat_gain(t: np.ndarray, d: np.ndarray, lo: float, hi: float) -> float:
    """Shift along d that best recenters out-of-range entries (PX4-style)."""
    ks = np.zeros(2 * t.size)
    for i in range(t.size):
        if abs(d[i]) < 1e-9:
            continue
        if t[i] < lo:
            ks[2 * i] = (lo - t[i]) / d[i]
        if t[i] > hi:
            ks[2 * i + 1] = (hi - t[i]) / d[i]
    return float(ks.min() + ks.max())


def _max_feasible_scale(t: np.ndarray, step: np.ndarray, lo: float, hi: float) -> float:
    """Largest gamma in [0, 1] keeping t + gamma*step inside [lo, hi]."""
    gamma = 1.0
    for i in range(t.size):
        if abs(step[i]) < 1e-12:
            continue
        room = (hi - t[i]) / step[i] if step[i] > 0 else (lo - t[i]) / step[i]
        gamma = min(gamma, max(room, 0.0))
    return gamma


def _lost_axis(B: np.ndarray) -> str:
    _, s, _ = np.linalg.svd(B)
    u, _, _ = np.linalg.svd(B)
    null_dir = np.abs(u[:, np.argmin(s)])
    return _AXIS_NAMES[int(np.argmax(null_dir))]
