"""Joint-angle dependent vehicle geometry and authority models.

The joint angle alpha runs from 0 (standard X quadrotor) to pi/2 (both arms
folded onto the body x axis). Each arm then sits at angle A = pi/4 - alpha/2
from the body x axis, and the roll/pitch inertias and per-propeller torque
capacities become functions of A.
"""

import math
from dataclasses import dataclass

from quadfold.params import ParamSet

HALF_PI = math.pi / 2
QUARTER_PI = math.pi / 4


class InfeasibleDesignError(ValueError):
    """No motor tilt angle satisfies the requested roll-agility target."""


def _check_alpha(alpha: float) -> None:
    if not 0.0 <= alpha <= HALF_PI:
        raise ValueError(f"joint angle must lie in [0, pi/2], got {alpha}")


def _check_arm_angle(A: float) -> None:
    if not 0.0 <= A <= QUARTER_PI:
        raise ValueError(f"arm angle must lie in [0, pi/4], got {A}")


def arm_angle(alpha: float) -> float:
    """Angle between either arm and the body x axis: A = pi/4 - alpha/2."""
    _check_alpha(alpha)
    return QUARTER_PI - alpha / 2.0


def inertia_roll(params: ParamSet, A: float) -> float:
    """Moment of inertia about the body x axis at arm angle A, kg m^2."""
    _check_arm_angle(A)
    s, c = math.sin(A), math.cos(A)
    return (params.I_uy + params.I_ly) * s * s + (params.I_ux + params.I_lx) * c * c


def inertia_pitch(params: ParamSet, A: float) -> float:
    """Moment of inertia about the body y axis at arm angle A, kg m^2."""
    _check_arm_angle(A)
    s, c = math.sin(A), math.cos(A)
    return (params.I_uy + params.I_ly) * c * c + (params.I_ux + params.I_lx) * s * s


def roll_torque_capacity(params: ParamSet, A: float, total_thrust: float) -> float:
    """Roll moment one propeller can contribute at arm angle A, N m.

    Sum of the thrust-lever term (vertical thrust component times the lateral
    motor offset l*sinA) and the reaction-moment term projected on the roll
    axis by the inward tilt. Both reinforce for roll under the stock spin
    layout, so the capacity is their plain sum.
    """
    _check_arm_angle(A)
    if total_thrust < 0.0:
        raise ValueError(f"total thrust cannot be negative, got {total_thrust}")
    t4 = total_thrust / 4.0
    lever = t4 * math.cos(params.tilt_delta) * params.arm_length * math.sin(A)
    reaction = params.K_m * t4 * math.sin(params.tilt_delta) * math.cos(A)
    return lever + reaction


def pitch_torque_capacity(params: ParamSet, A: float, total_thrust: float) -> float:
    """Pitch moment one propeller can contribute at arm angle A, N m.

    Mirror of roll_torque_capacity with sinA and cosA swapped; terms added
    as independent magnitudes.
    """
    _check_arm_angle(A)
    if total_thrust < 0.0:
        raise ValueError(f"total thrust cannot be negative, got {total_thrust}")
    t4 = total_thrust / 4.0
    lever = t4 * math.cos(params.tilt_delta) * params.arm_length * math.cos(A)
    reaction = params.K_m * t4 * math.sin(params.tilt_delta) * math.sin(A)
    return lever + reaction


def pitch_torque_net(params: ParamSet, A: float, total_thrust: float) -> float:
    """Net per-propeller pitch authority with signed reaction moments, N m.

    With spins assigned so the reaction moments reinforce roll, each motor's
    reaction component opposes its pitch lever, so the usable pitch authority
    is the lever term minus the reaction term. This is the quantity the
    gain-adaptation curves need; it stays positive for every reachable A.
    """
    _check_arm_angle(A)
    if total_thrust < 0.0:
        raise ValueError(f"total thrust cannot be negative, got {total_thrust}")
    t4 = total_thrust / 4.0
    lever = t4 * math.cos(params.tilt_delta) * params.arm_length * math.cos(A)
    reaction = params.K_m * t4 * math.sin(params.tilt_delta) * math.sin(A)
    return lever - reaction


def solve_tilt_angle(params: ParamSet, roll_agility_divisor: float = 2.0) -> float:
    """Inward tilt (rad) giving 1/divisor of the unfolded roll agility when folded.

    Solves, for delta in (0, pi/2),

        K_m sin(d) / (I_ux + I_lx)
            = sqrt(2) (l cos(d) + K_m sin(d)) / (divisor * inertia_sum)

    i.e. equal (scaled) roll angular-acceleration authority at alpha = pi/2
    and alpha = 0. Bisection on the bracketing sign change; the residual at
    the returned root is below 1e-10.
    """
    if roll_agility_divisor < 1.0:
        raise ValueError("roll agility divisor must be >= 1")

    ix_folded = params.I_ux + params.I_lx
    trace = params.inertia_sum

    def residual(delta: float) -> float:
        folded = params.K_m * math.sin(delta) / ix_folded
        unfolded = (
            math.sqrt(2.0)
            * (params.arm_length * math.cos(delta) + params.K_m * math.sin(delta))
            / (roll_agility_divisor * trace)
        )
        return folded - unfolded

    lo, hi = 0.0, HALF_PI - 1e-12
    f_lo, f_hi = residual(lo), residual(hi)
    if f_lo == 0.0:
        return lo
    if f_lo * f_hi > 0.0:
        raise InfeasibleDesignError(
            "no tilt angle in (0, pi/2) meets the requested roll agility"
        )
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        f_mid = residual(mid)
        if f_mid == 0.0:
            return mid
        if f_lo * f_mid < 0.0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)


def thrust_efficiency(delta: float) -> float:
    """Fraction of motor thrust pointing upward for inward tilt delta."""
    return math.cos(delta)


def body_width(params: ParamSet, alpha: float) -> float:
    """Body width (m) at joint angle alpha.

    Affine interpolation in sin(A) between the two measured endpoint widths:
    w = w_folded + 2 l cos(delta) sin(A) * s, with s calibrated so the model
    passes exactly through the unfolded and folded widths.
    """
    _check_alpha(alpha)
    a = arm_angle(alpha)
    span = 2.0 * params.arm_length * math.cos(params.tilt_delta) * math.sin(QUARTER_PI)
    scale = (params.width_alpha0 - params.width_alpha90) / span
    return params.width_alpha90 + 2.0 * params.arm_length * math.cos(
        params.tilt_delta
    ) * math.sin(a) * scale


@dataclass
class MorphState:
    """Joint angle state: actual angle, its rate, and the tracked command."""

    alpha: float = 0.0
    alpha_rate: float = 0.0
    commanded_alpha: float = 0.0

    def __post_init__(self):
        _check_alpha(self.alpha)


def step_morph(
    state: MorphState, commanded_alpha: float, dt: float, rate_limit: float
) -> MorphState:
    """Advance the joint angle toward a command under the fold-rate limit.

    The command is clamped to the mechanical range [0, pi/2] before tracking;
    the angle moves at most rate_limit*dt per step.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    cmd = min(max(commanded_alpha, 0.0), HALF_PI)
    max_step = rate_limit * dt
    delta = cmd - state.alpha
    step = min(max(delta, -max_step), max_step)
    new_alpha = min(max(state.alpha + step, 0.0), HALF_PI)
    return MorphState(
        alpha=new_alpha,
        alpha_rate=step / dt,
        commanded_alpha=cmd,
    )
