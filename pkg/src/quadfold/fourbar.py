"""Four-bar linkage synthesis and position analysis for the fold actuator.

A servo horn (crank, length a) drives the upper arm (output link, length c)
through a coupler (length b) across a ground link (length d, servo axis to
arm pivot). The two sweep extremes have horn and coupler collinear, giving
chords b - a and a + b; sine-rule identities on those two triangles yield
four equations for (b, d, epsilon, gamma), where epsilon and gamma are the
triangle angles at the servo axis and at the pivot in the first extreme.

Lengths in this module are millimeters, angles radians.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize


class SynthesisError(RuntimeError):
    """Linkage synthesis failed to converge; carries the best residual norm."""

    def __init__(self, message: str, residual_norm: float):
        super().__init__(f"{message} (best residual norm {residual_norm:.3e})")
        self.residual_norm = residual_norm


class MechanismLockError(ValueError):
    """The requested servo angle cannot be assembled with the given links."""


@dataclass(frozen=True)
class FourBarDesign:
    """Link lengths (mm) and the sweep ranges (rad) they were designed for."""

    a: float
    b: float
    c: float
    d: float
    input_sweep: float
    output_sweep: float

    def __post_init__(self):
        for name in ("a", "b", "c", "d"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"link length {name} must be positive")
        if not 0.0 < self.input_sweep < math.pi:
            raise ValueError("input sweep must lie in (0, pi)")
        if not 0.0 < self.output_sweep < math.pi:
            raise ValueError("output sweep must lie in (0, pi)")
        if self.b <= self.a:
            raise ValueError("coupler must be longer than the horn (b > a)")


@dataclass(frozen=True)
class SynthesisSolution:
    design: FourBarDesign
    epsilon: float
    gamma: float
    residual_norm: float


def _residuals(x, a, c, out_sweep, chord_offset):
    """The four sine-rule equations; zero at a valid synthesis."""
    b, d, eps, gam = x
    return np.array(
        [
            c * math.sin(gam) - (b - a) * math.sin(eps),
            c * math.sin(eps + gam) - d * math.sin(eps),
            c * math.sin(gam + out_sweep) - (a + b) * math.sin(eps + chord_offset),
            c * math.sin(eps + chord_offset + gam + out_sweep)
            - d * math.sin(eps + chord_offset),
        ]
    )


def synthesize(
    a: float,
    c: float,
    input_sweep: float,
    output_sweep: float,
    initial_guess=None,
) -> SynthesisSolution:
    """Solve for coupler and ground lengths giving the requested sweeps.

    The chord direction at the servo axis turns by pi - input_sweep between
    the two collinear extremes, and the output link turns by output_sweep;
    those two offsets enter the second triangle's angles. Solved with a
    Powell hybrid (dogleg) root finder from a geometric initial guess.
    """
    if a <= 0.0 or c <= 0.0:
        raise ValueError("horn length a and output radius c must be positive")
    if not 0.0 < input_sweep < math.pi:
        raise ValueError("input sweep must lie in (0, pi)")
    if not 0.0 < output_sweep < math.pi:
        raise ValueError("output sweep must lie in (0, pi)")

    chord_offset = math.pi - input_sweep
    if initial_guess is None:
        initial_guess = (a + 10.0, 1.5 * a, math.radians(60.0), math.radians(20.0))
    x0 = np.asarray(initial_guess, dtype=float)

    sol = optimize.root(
        _residuals,
        x0,
        args=(a, c, output_sweep, chord_offset),
        method="hybr",
    )
    residual_norm = float(np.linalg.norm(sol.fun))
    b, d, eps, gam = (float(v) for v in sol.x)
    # hybr can report an xtol failure while the residual is at round-off;
    # judge convergence by the residual itself.
    if residual_norm >= 1e-8:
        raise SynthesisError("four-bar synthesis did not converge", residual_norm)
    if b <= a or d <= 0.0:
        raise SynthesisError(
            "converged to a non-assemblable linkage", residual_norm
        )

    design = FourBarDesign(
        a=a, b=b, c=c, d=d, input_sweep=input_sweep, output_sweep=output_sweep
    )
    _validate_rocker(design)
    return SynthesisSolution(
        design=design, epsilon=eps, gamma=gam, residual_norm=residual_norm
    )


def _extreme_angles(design: FourBarDesign):
    """Recover (epsilon, gamma) of the first-extreme triangle from lengths."""
    chord = design.b - design.a
    cos_eps = (chord**2 + design.d**2 - design.c**2) / (2.0 * chord * design.d)
    cos_gam = (design.c**2 + design.d**2 - chord**2) / (2.0 * design.c * design.d)
    if abs(cos_eps) > 1.0 or abs(cos_gam) > 1.0:
        raise MechanismLockError("links cannot assemble at the folded extreme")
    return math.acos(cos_eps), math.acos(cos_gam)


def forward_alpha(design: FourBarDesign, servo_angle: float) -> float:
    """Output joint angle (rad) for a servo rotation from the alpha=0 extreme.

    servo_angle runs over [0, input_sweep]. Solves the loop-closure equation
    for the output link angle and converts it to the joint angle, following
    the assembly branch that is continuous with the alpha = 0 extreme.
    """
    if not -1e-9 <= servo_angle <= design.input_sweep + 1e-9:
        raise ValueError(
            f"servo angle {servo_angle} outside the design sweep "
            f"[0, {design.input_sweep}]"
        )
    eps, gam = _extreme_angles(design)
    theta_start = eps + math.pi
    phi_start = math.pi - gam

    branch = _select_branch(design, theta_start, phi_start)
    phi = _output_angle(design, theta_start - servo_angle, branch)
    alpha = _wrap_pi(phi_start - phi)
    # Guard against round-off just outside the mechanical range.
    return min(max(alpha, 0.0), math.pi / 2)


def _output_angle(design: FourBarDesign, theta: float, branch: float) -> float:
    a, b, c, d = design.a, design.b, design.c, design.d
    e = 2.0 * c * (d - a * math.cos(theta))
    f = -2.0 * a * c * math.sin(theta)
    g = b * b - a * a - c * c - d * d + 2.0 * a * d * math.cos(theta)
    r = math.hypot(e, f)
    if r == 0.0 or abs(g) > r * (1.0 + 1e-12):
        raise MechanismLockError(
            f"loop closure has no solution at servo position theta={theta:.4f}"
        )
    ratio = min(max(g / r, -1.0), 1.0)
    return math.atan2(f, e) + branch * math.acos(ratio)


def _select_branch(design: FourBarDesign, theta_start: float, phi_start: float) -> float:
    """Pick the +/- closure branch matching the alpha = 0 assembly."""
    best_branch, best_err = 1.0, math.inf
    for branch in (1.0, -1.0):
        phi = _output_angle(design, theta_start, branch)
        err = abs(_wrap_pi(phi - phi_start))
        if err < best_err:
            best_branch, best_err = branch, err
    return best_branch


def _wrap_pi(angle: float) -> float:
    return math.atan2(math.sin(angle), math.cos(angle))


def servo_alpha_table(design: FourBarDesign, samples: int = 181) -> np.ndarray:
    """(samples, 2) array of servo angle vs joint angle across the sweep."""
    out = np.empty((samples, 2))
    for i, s in enumerate(np.linspace(0.0, design.input_sweep, samples)):
        out[i, 0] = s
        out[i, 1] = forward_alpha(design, float(s))
    return out


def _validate_rocker(design: FourBarDesign) -> None:
    """The output must sweep [0, pi/2] monotonically, never beyond."""
    table = servo_alpha_table(design, samples=181)
    alphas = table[:, 1]
    if abs(alphas[0]) > 1e-6 or abs(alphas[-1] - math.pi / 2) > 1e-6:
        raise SynthesisError(
            "output link does not span the requested sweep", float(abs(alphas[0]))
        )
    if np.any(np.diff(alphas) < -1e-9):
        raise SynthesisError("output link is not a monotone rocker", 0.0)
