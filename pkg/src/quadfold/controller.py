"""Cascaded position/attitude controller with fold-aware gain adaptation.

Outer loop: position PID produces a desired force vector in world NED and
from it the desired attitude (z axis along minus-force, x axis from the yaw
command). Inner loop: rotation-matrix attitude PID on the vee-map error,
with the desired torque rescaled per joint angle by the ratio of inertia
change to control-action change, so the closed roll/pitch response stays
the one tuned at alpha = 0.

Frames: world NED (gravity +z), body FRD, thrust along -z_body. The IMU
sits in the lower arm, yawed +alpha/2 from the body frame about body z.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from quadfold import morphology
from quadfold.params import ParamSet


class SingularSetpointError(ValueError):
    """The requested force vector vanished (free-fall attitude undefined)."""


class GimbalSingularityError(ValueError):
    """Desired thrust direction is parallel to the yaw reference axis."""


@dataclass
class GainSet:
    """Controller gains. Outer gains act on meters (accel-form PID),
    inner gains on radians (torque output, tuned for the alpha = 0 inertia)."""

    pos_kp: np.ndarray = field(default_factory=lambda: np.array([6.0, 6.0, 8.0]))
    pos_kv: np.ndarray = field(default_factory=lambda: np.array([4.7, 4.7, 5.4]))
    pos_ki: np.ndarray = field(default_factory=lambda: np.array([1.2, 1.2, 1.6]))
    att_kp: np.ndarray = field(default_factory=lambda: np.array([2.2, 2.2, 0.8]))
    att_kv: np.ndarray = field(default_factory=lambda: np.array([0.42, 0.42, 0.34]))
    att_ki: np.ndarray = field(default_factory=lambda: np.array([0.60, 0.60, 0.25]))
    pos_int_limit: float = 2.0   # m s, per-axis anti-windup clamp
    att_int_limit: float = 0.5   # rad s

    def __post_init__(self):
        for name in ("pos_kp", "pos_kv", "pos_ki", "att_kp", "att_kv", "att_ki"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (3,) or np.any(arr < 0.0):
                raise ValueError(f"{name} must be three nonnegative gains")
            setattr(self, name, arr)
        if self.pos_int_limit <= 0.0 or self.att_int_limit <= 0.0:
            raise ValueError("integrator clamps must be positive")


@dataclass
class ControlState:
    """Integrator memory carried between control steps."""

    pos_integral: np.ndarray = field(default_factory=lambda: np.zeros(3))
    att_integral: np.ndarray = field(default_factory=lambda: np.zeros(3))


@dataclass
class AttitudeSetpoint:
    R_des: np.ndarray
    thrust: float      # N, magnitude of the desired force vector
    yaw_des: float


def hat(v: np.ndarray) -> np.ndarray:
    return np.array(
        [[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]]
    )


def vee(S: np.ndarray) -> np.ndarray:
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


def position_control(
    params: ParamSet,
    gains: GainSet,
    state: ControlState,
    p_des: np.ndarray,
    v_des: np.ndarray,
    a_des: np.ndarray,
    yaw_des: float,
    p_est: np.ndarray,
    v_est: np.ndarray,
    dt: float,
):
    """One outer-loop step: returns (AttitudeSetpoint, f_des in world NED, N)."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    e_p = np.asarray(p_des, dtype=float) - np.asarray(p_est, dtype=float)
    e_v = np.asarray(v_des, dtype=float) - np.asarray(v_est, dtype=float)
    state.pos_integral = np.clip(
        state.pos_integral + e_p * dt, -gains.pos_int_limit, gains.pos_int_limit
    )

    accel = (
        np.asarray(a_des, dtype=float)
        + np.array([0.0, 0.0, -params.gravity])
        + gains.pos_kp * e_p
        + gains.pos_kv * e_v
        + gains.pos_ki * state.pos_integral
    )
    f_des = params.mass * accel

    norm_f = np.linalg.norm(f_des)
    if norm_f < 1e-6:
        raise SingularSetpointError("desired force vanished; attitude undefined")
    z_b_des = -f_des / norm_f

    x_c_des = np.array([math.cos(yaw_des), math.sin(yaw_des), 0.0])
    y_raw = np.cross(z_b_des, x_c_des)
    norm_y = np.linalg.norm(y_raw)
    if norm_y < 1e-6:
        raise GimbalSingularityError(
            "desired thrust axis parallel to the yaw reference"
        )
    y_b_des = y_raw / norm_y
    x_b_des = np.cross(y_b_des, z_b_des)
    R_des = np.column_stack((x_b_des, y_b_des, z_b_des))

    return AttitudeSetpoint(R_des=R_des, thrust=float(norm_f), yaw_des=yaw_des), f_des


def _rz_half(alpha: float) -> np.ndarray:
    """Rz(alpha/2): the IMU frame axes expressed in the body frame."""
    c, s = math.cos(alpha / 2.0), math.sin(alpha / 2.0)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def imu_to_body(R_imu: np.ndarray, omega_imu: np.ndarray, alpha: float):
    """Map IMU-frame attitude and angular rate into the body (bisector) frame.

    The IMU rides the lower arm at +alpha/2 about body z, so the attitude
    composes with Rz(alpha/2) transposed on the frame side and the rate
    rotates by Rz(alpha/2).
    """
    rz = _rz_half(alpha)
    return R_imu @ rz.T, rz @ np.asarray(omega_imu, dtype=float)


def body_to_imu(R_body: np.ndarray, omega_body: np.ndarray, alpha: float):
    """Inverse of imu_to_body; what an ideal lower-arm IMU would report."""
    rz = _rz_half(alpha)
    return R_body @ rz, rz.T @ np.asarray(omega_body, dtype=float)


def gain_adaptation(params: ParamSet, alpha: float):
    """(g_roll, g_pitch): torque multipliers keeping the alpha=0 tuning valid.

    Each ratio is (inertia now / inertia at alpha=0) times (control action at
    alpha=0 / control action now), evaluated at hover thrust; the thrust
    factor cancels. Pitch uses the net (signed) per-motor capacity.
    """
    a = morphology.arm_angle(alpha)
    a0 = morphology.QUARTER_PI
    t_ref = params.hover_thrust
    g_roll = (
        morphology.inertia_roll(params, a) / morphology.inertia_roll(params, a0)
    ) * (
        morphology.roll_torque_capacity(params, a0, t_ref)
        / morphology.roll_torque_capacity(params, a, t_ref)
    )
    g_pitch = (
        morphology.inertia_pitch(params, a) / morphology.inertia_pitch(params, a0)
    ) * (
        morphology.pitch_torque_net(params, a0, t_ref)
        / morphology.pitch_torque_net(params, a, t_ref)
    )
    return g_roll, g_pitch


def attitude_control(
    params: ParamSet,
    gains: GainSet,
    state: ControlState,
    R_des: np.ndarray,
    R: np.ndarray,
    omega: np.ndarray,
    alpha: float,
    dt: float,
    adapt: bool = True,
) -> np.ndarray:
    """One inner-loop step: desired body torque (N m, shape (3,)).

    Attitude error points from the current toward the desired rotation so
    positive error commands positive torque; desired angular velocity is
    zero (pure damping on omega).
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    e_r = 0.5 * vee(R.T @ R_des - R_des.T @ R)
    state.att_integral = np.clip(
        state.att_integral + e_r * dt, -gains.att_int_limit, gains.att_int_limit
    )
    e_w = -np.asarray(omega, dtype=float)
    tau = gains.att_kp * e_r + gains.att_kv * e_w + gains.att_ki * state.att_integral
    if adapt:
        g_roll, g_pitch = gain_adaptation(params, alpha)
        tau = np.array([g_roll, g_pitch, 1.0]) * tau
    return tau


def collective_thrust(f_des: np.ndarray, z_b: np.ndarray) -> float:
    """Projection of the desired force on the body thrust axis (-z_b), N.

    Nonnegative: motors cannot pull. Level hover returns the full weight.
    """
    return max(0.0, float(-np.dot(f_des, z_b)))


def gain_ratio_curves(params: ParamSet, alpha_grid) -> np.ndarray:
    """(n, 3) table of alpha, g_roll, g_pitch over the given joint angles."""
    rows = np.empty((len(alpha_grid), 3))
    for i, alpha in enumerate(alpha_grid):
        g_roll, g_pitch = gain_adaptation(params, float(alpha))
        rows[i] = (alpha, g_roll, g_pitch)
    return rows
