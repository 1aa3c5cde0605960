"""Deterministic 6-DOF closed-loop simulation of the folding quadrotor.

Fixed-step RK4 on the rigid body at the physics rate (default 1 kHz), the
attitude loop and allocation at the inner rate, the position loop and
trajectory sampling at the outer rate. Rotation advances by the exponential
map of the step's mean angular velocity and is re-orthonormalized every
step. First-order thrust lag per motor, rate-limited joint angle, optional
world-frame force and body-frame torque disturbances, optional seeded
measurement noise. Identical scenario and seed give byte-identical traces.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from quadfold import controller, trajectory
from quadfold.allocation import allocate, build_allocation, motor_wrench
from quadfold.morphology import MorphState, inertia_pitch, inertia_roll, arm_angle, step_morph
from quadfold.params import ParamSet
from quadfold.trace import Trace, rotation_to_quaternion

_POSITION_DIVERGENCE_BOUND = 100.0  # m


class SimulationDivergedError(RuntimeError):
    """State became non-finite; carries the partial trace for post-mortem."""

    def __init__(self, message: str, trace: Trace | None = None):
        super().__init__(message)
        self.trace = trace


@dataclass
class RigidState:
    """World-NED position/velocity, body-FRD attitude and angular velocity."""

    p: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    R: np.ndarray = field(default_factory=lambda: np.eye(3))
    omega: np.ndarray = field(default_factory=lambda: np.zeros(3))


@dataclass
class MotorBank:
    """Commanded vs lag-filtered actual thrust per motor, N."""

    commanded: np.ndarray
    actual: np.ndarray

    def step(self, dt: float, time_constant: float, limit: float) -> None:
        blend = 1.0 - math.exp(-dt / time_constant)
        self.actual = self.actual + (self.commanded - self.actual) * blend
        np.clip(self.actual, 0.0, limit, out=self.actual)


@dataclass
class Disturbance:
    """External force (world frame) and torque (body frame) over a window."""

    kind: str = "constant"              # constant | sinusoidal | impulse
    force: np.ndarray = field(default_factory=lambda: np.zeros(3))      # N
    torque: np.ndarray = field(default_factory=lambda: np.zeros(3))     # N m
    amplitude: np.ndarray = field(default_factory=lambda: np.zeros(3))  # N
    frequency: float = 0.0              # Hz, sinusoidal only
    start: float = 0.0                  # s
    end: float = math.inf               # s
    ramp: float = 0.0                   # s, linear onset after start

    def __post_init__(self):
        if self.kind not in ("constant", "sinusoidal", "impulse"):
            raise ValueError(f"unknown disturbance kind {self.kind!r}")
        for name in ("force", "torque", "amplitude"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (3,):
                raise ValueError(f"disturbance {name} must be a 3-vector")
            setattr(self, name, arr)

    def evaluate(self, t: float):
        if not self.start <= t < self.end:
            return np.zeros(3), np.zeros(3)
        envelope = 1.0
        if self.ramp > 0.0:
            envelope = min(1.0, (t - self.start) / self.ramp)
        force = self.force.copy()
        if self.kind == "sinusoidal":
            force = force + self.amplitude * math.sin(
                2.0 * math.pi * self.frequency * (t - self.start)
            )
        return envelope * force, envelope * self.torque


@dataclass
class NoiseConfig:
    """Standard deviations of the measurement noise (zero disables a channel)."""

    position_std: float = 0.0   # m
    velocity_std: float = 0.0   # m/s
    attitude_std: float = 0.0   # rad, small-angle per axis
    gyro_std: float = 0.0       # rad/s

    @property
    def any_active(self) -> bool:
        return any(
            s > 0.0
            for s in (self.position_std, self.velocity_std, self.attitude_std, self.gyro_std)
        )


def inertia_matrix(params: ParamSet, alpha: float) -> np.ndarray:
    a = arm_angle(alpha)
    return np.diag(
        [inertia_roll(params, a), inertia_pitch(params, a), params.inertia_yaw]
    )


def expm_so3(phi: np.ndarray) -> np.ndarray:
    """Rodrigues rotation for the axis-angle vector phi."""
    angle = float(np.linalg.norm(phi))
    if angle < 1e-12:
        return np.eye(3) + controller.hat(phi)
    axis = phi / angle
    k = controller.hat(axis)
    return np.eye(3) + math.sin(angle) * k + (1.0 - math.cos(angle)) * (k @ k)


def orthonormalize(R: np.ndarray) -> np.ndarray:
    """One polar-decomposition Newton step; enough at 1 kHz drift rates."""
    return R @ (1.5 * np.eye(3) - 0.5 * (R.T @ R))


def dynamics_derivative(
    params: ParamSet,
    state: RigidState,
    alpha: float,
    motor_thrusts: np.ndarray,
    force_ext: np.ndarray,
    torque_ext: np.ndarray,
):
    """(dp, dv, domega) of the rigid body; attitude rate is omega itself."""
    if not (
        np.all(np.isfinite(state.p))
        and np.all(np.isfinite(state.v))
        and np.all(np.isfinite(state.omega))
    ):
        raise SimulationDivergedError("non-finite rigid state")
    axes, torque_arms = motor_wrench(params, alpha)
    f_body = axes.T @ motor_thrusts
    tau_body = torque_arms.T @ motor_thrusts + torque_ext
    j = inertia_matrix(params, alpha)
    dv = (
        np.array([0.0, 0.0, params.gravity])
        + (state.R @ f_body + force_ext - params.drag_coeff * state.v) / params.mass
    )
    domega = np.linalg.solve(j, tau_body - np.cross(state.omega, j @ state.omega))
    return state.v.copy(), dv, domega


def step_rigid(
    params: ParamSet,
    state: RigidState,
    alpha: float,
    motor_thrusts: np.ndarray,
    force_ext: np.ndarray,
    torque_ext: np.ndarray,
    dt: float,
) -> RigidState:
    """One RK4 step. The attitude is held for force projection within the
    step (motor wrench is constant over it) and advanced afterwards by the
    exponential of the mean angular velocity."""
    if dt == 0.0:
        return RigidState(state.p.copy(), state.v.copy(), state.R.copy(), state.omega.copy())
    if dt < 0.0:
        raise ValueError("dt must be nonnegative")

    axes, torque_arms = motor_wrench(params, alpha)
    f_body = axes.T @ motor_thrusts
    tau_motors = torque_arms.T @ motor_thrusts
    j = inertia_matrix(params, alpha)
    j_diag = np.diag(j)
    gravity = np.array([0.0, 0.0, params.gravity])
    thrust_world = state.R @ f_body

    def accel(v):
        return gravity + (thrust_world + force_ext - params.drag_coeff * v) / params.mass

    def omega_dot(w):
        return (tau_motors + torque_ext - np.cross(w, j_diag * w)) / j_diag

    p0, v0, w0 = state.p, state.v, state.omega
    # RK4 stages for (p, v, omega)
    k1v, k1w = accel(v0), omega_dot(w0)
    k1p = v0
    k2p = v0 + 0.5 * dt * k1v
    k2v, k2w = accel(k2p), omega_dot(w0 + 0.5 * dt * k1w)
    k3p = v0 + 0.5 * dt * k2v
    k3v, k3w = accel(k3p), omega_dot(w0 + 0.5 * dt * k2w)
    k4p = v0 + dt * k3v
    k4v, k4w = accel(k4p), omega_dot(w0 + dt * k3w)

    p_new = p0 + dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
    v_new = v0 + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    w_new = w0 + dt / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)

    R_new = orthonormalize(state.R @ expm_so3(0.5 * dt * (w0 + w_new)))
    if not np.all(np.isfinite(p_new)):
        raise SimulationDivergedError("position became non-finite")
    return RigidState(p=p_new, v=v_new, R=R_new, omega=w_new)


def _yaw_rotation(yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def run_scenario(scenario) -> Trace:
    """Closed-loop run of a Scenario; returns the trace (flagged if diverged)."""
    params: ParamSet = scenario.params
    gains = scenario.gains
    dt = scenario.physics_dt
    inner_every = max(1, round(1.0 / (scenario.inner_rate * dt)))
    outer_every = max(1, round(1.0 / (scenario.outer_rate * dt)))
    n_steps = int(round(scenario.duration / dt))

    plan = trajectory.plan(scenario.waypoints, params.alpha_rate_limit)
    rng = np.random.default_rng(scenario.seed)
    noise: NoiseConfig = scenario.noise

    state = RigidState(
        p=np.asarray(scenario.initial_position, dtype=float).copy(),
        v=np.zeros(3),
        R=_yaw_rotation(scenario.initial_yaw),
        omega=np.zeros(3),
    )
    morph = MorphState(
        alpha=scenario.initial_alpha, commanded_alpha=scenario.initial_alpha
    )
    trim = params.hover_thrust / (4.0 * math.cos(params.tilt_delta))
    motors = MotorBank(
        commanded=np.full(4, trim), actual=np.full(4, min(trim, params.max_motor_thrust))
    )
    ctrl = controller.ControlState()

    setpoint = None
    f_des = np.array([0.0, 0.0, -params.hover_thrust])
    alpha_cmd = scenario.initial_alpha
    samp = None
    command = np.array([params.hover_thrust, 0.0, 0.0, 0.0])

    rows = np.empty((n_steps, 31))
    diverged = False
    filled = 0

    for k in range(n_steps):
        t = k * dt

        if k % outer_every == 0:
            samp = trajectory.sample(plan, t)
            p_meas, v_meas = state.p, state.v
            if noise.position_std > 0.0:
                p_meas = p_meas + rng.normal(0.0, noise.position_std, 3)
            if noise.velocity_std > 0.0:
                v_meas = v_meas + rng.normal(0.0, noise.velocity_std, 3)
            setpoint, f_des = controller.position_control(
                params, gains, ctrl,
                samp.position, samp.velocity, samp.acceleration, samp.yaw,
                p_meas, v_meas, outer_every * dt,
            )
            alpha_cmd = samp.alpha_cmd

        if k % inner_every == 0:
            R_meas, w_meas = state.R, state.omega
            if noise.attitude_std > 0.0:
                R_meas = R_meas @ expm_so3(rng.normal(0.0, noise.attitude_std, 3))
            if noise.gyro_std > 0.0:
                w_meas = w_meas + rng.normal(0.0, noise.gyro_std, 3)
            r_imu, w_imu = controller.body_to_imu(R_meas, w_meas, morph.alpha)
            r_body, w_body = controller.imu_to_body(r_imu, w_imu, morph.alpha)
            tau = controller.attitude_control(
                params, gains, ctrl, setpoint.R_des, r_body, w_body,
                morph.alpha, inner_every * dt, adapt=scenario.adaptation,
            )
            thrust = controller.collective_thrust(f_des, r_body[:, 2])
            alloc = build_allocation(params, morph.alpha)
            motors.commanded = allocate(alloc, thrust, tau)
            command = np.array([thrust, tau[0], tau[1], tau[2]])

        force_ext = np.zeros(3)
        torque_ext = np.zeros(3)
        for dist in scenario.disturbances:
            f_d, tau_d = dist.evaluate(t)
            force_ext += f_d
            torque_ext += tau_d

        q = rotation_to_quaternion(state.R)
        rows[k, :] = (
            t,
            *state.p, *state.v, *q, *state.omega,
            morph.alpha, alpha_cmd,
            *motors.actual,
            *samp.position, samp.yaw,
            *command,
            *(samp.position - state.p),
        )
        filled = k + 1

        motors.step(dt, params.motor_time_constant, params.max_motor_thrust)
        morph = step_morph(morph, alpha_cmd, dt, params.alpha_rate_limit)
        try:
            state = step_rigid(
                params, state, morph.alpha, motors.actual, force_ext, torque_ext, dt
            )
        except SimulationDivergedError:
            diverged = True
            break
        if np.linalg.norm(state.p) > _POSITION_DIVERGENCE_BOUND:
            diverged = True
            break

    return Trace(rows[:filled], diverged=diverged)
