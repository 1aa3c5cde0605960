"""Physical parameters of the folding quadrotor.

Defaults describe the desk-scale prototype: 1.8 kg, 218.21 mm motor-to-pivot
distance, 25 deg inward motor tilt. Arm inertias are taken about the pivot,
split into the component parallel to the arm's long axis (x) and the
component perpendicular to it (y), for the upper (u) and lower (l) arm.
"""

import math
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class ParamSet:
    """Immutable set of physical constants. SI units throughout."""

    mass: float = 1.8                    # kg
    arm_length: float = 0.21821          # m, propeller to center of mass
    tilt_delta: float = math.radians(25.0)  # rad, fixed inward motor tilt
    I_ux: float = 1.80e-3                # kg m^2, upper arm, parallel axis
    I_uy: float = 11.72e-3               # kg m^2, upper arm, perpendicular axis
    I_lx: float = 2.42e-3                # kg m^2, lower arm, parallel axis
    I_ly: float = 14.29e-3               # kg m^2, lower arm, perpendicular axis
    K_m: float = 0.055                   # N m / N, reaction moment per unit thrust
    gravity: float = 9.81                # m/s^2
    width_alpha0: float = 0.447          # m, body width fully unfolded
    width_alpha90: float = 0.138         # m, body width fully folded
    max_motor_thrust: float = 12.0       # N per motor
    motor_time_constant: float = 0.02    # s, first-order thrust lag
    alpha_rate_limit: float = 0.5        # rad/s, joint fold rate
    vertical_arm_offset: float = 0.0     # m, upper/lower motor plane separation
    yaw_inertia_factor: float = 1.0      # I_z = factor * (I_ux+I_lx+I_uy+I_ly)
    drag_coeff: float = 0.0              # N s/m, optional linear drag

    def __post_init__(self):
        positives = {
            "mass": self.mass,
            "arm_length": self.arm_length,
            "I_ux": self.I_ux,
            "I_uy": self.I_uy,
            "I_lx": self.I_lx,
            "I_ly": self.I_ly,
            "K_m": self.K_m,
            "gravity": self.gravity,
            "width_alpha0": self.width_alpha0,
            "width_alpha90": self.width_alpha90,
            "max_motor_thrust": self.max_motor_thrust,
            "motor_time_constant": self.motor_time_constant,
            "alpha_rate_limit": self.alpha_rate_limit,
            "yaw_inertia_factor": self.yaw_inertia_factor,
        }
        for name, value in positives.items():
            if not value > 0.0:
                raise ValueError(f"{name} must be strictly positive, got {value}")
        if not 0.0 <= self.tilt_delta < math.pi / 2:
            raise ValueError(f"tilt_delta must lie in [0, pi/2), got {self.tilt_delta}")
        if not self.width_alpha90 < self.width_alpha0:
            raise ValueError("folded width must be smaller than unfolded width")
        if self.vertical_arm_offset < 0.0:
            raise ValueError("vertical_arm_offset cannot be negative")
        if self.drag_coeff < 0.0:
            raise ValueError("drag_coeff cannot be negative")

    @property
    def hover_thrust(self) -> float:
        """Total thrust balancing weight, in N."""
        return self.mass * self.gravity

    @property
    def inertia_sum(self) -> float:
        """I_ux + I_lx + I_uy + I_ly, the planar inertia trace in kg m^2."""
        return self.I_ux + self.I_lx + self.I_uy + self.I_ly

    @property
    def inertia_yaw(self) -> float:
        """Constant yaw inertia model, kg m^2."""
        return self.yaw_inertia_factor * self.inertia_sum

    def with_overrides(self, **kwargs) -> "ParamSet":
        """Return a copy with the given fields replaced (revalidates)."""
        return replace(self, **kwargs)
