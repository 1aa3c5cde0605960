"""Scenario files: strict YAML schema with unit-suffixed keys.

A scenario fully describes one run: parameter and gain overrides, initial
state, waypoints, disturbances, obstacles, noise, rates and metric windows.
Unknown keys are rejected with the offending key path and line number.
Built-in scenarios ship with the package and are addressable by name.
"""

import importlib.resources
import math
from dataclasses import dataclass, field

import numpy as np
import yaml

from quadfold.controller import GainSet
from quadfold.cspace import ObstacleMap, Rectangle
from quadfold.params import ParamSet
from quadfold.simulator import Disturbance, NoiseConfig
from quadfold.trajectory import Waypoint


class ScenarioError(ValueError):
    """Schema violation; message carries the key path and source line."""

    def __init__(self, path: str, message: str, line: int | None = None):
        at = f" (line {line})" if line is not None else ""
        super().__init__(f"{path}: {message}{at}")
        self.key_path = path
        self.line = line


_PARAM_KEYS = {
    "mass_kg": "mass",
    "arm_length_m": "arm_length",
    "tilt_delta_rad": "tilt_delta",
    "inertia_upper_parallel_kgm2": "I_ux",
    "inertia_upper_perp_kgm2": "I_uy",
    "inertia_lower_parallel_kgm2": "I_lx",
    "inertia_lower_perp_kgm2": "I_ly",
    "reaction_coeff_nm_per_n": "K_m",
    "gravity_mps2": "gravity",
    "width_alpha0_m": "width_alpha0",
    "width_alpha90_m": "width_alpha90",
    "max_motor_thrust_n": "max_motor_thrust",
    "motor_time_constant_s": "motor_time_constant",
    "alpha_rate_limit_radps": "alpha_rate_limit",
    "vertical_arm_offset_m": "vertical_arm_offset",
    "yaw_inertia_factor": "yaw_inertia_factor",
    "drag_coeff_nspm": "drag_coeff",
}

_GAIN_VEC_KEYS = {
    "pos_kp_per_s2": "pos_kp",
    "pos_kv_per_s": "pos_kv",
    "pos_ki_per_s3": "pos_ki",
    "att_kp_nm_per_rad": "att_kp",
    "att_kv_nms_per_rad": "att_kv",
    "att_ki_nm_per_rad_s": "att_ki",
}
_GAIN_SCALAR_KEYS = {
    "pos_integral_limit_m_s": "pos_int_limit",
    "att_integral_limit_rad_s": "att_int_limit",
}

_NOISE_KEYS = {
    "position_std_m": "position_std",
    "velocity_std_mps": "velocity_std",
    "attitude_std_rad": "attitude_std",
    "gyro_std_radps": "gyro_std",
}

_WAYPOINT_KEYS = {
    "t_s", "position_m", "yaw_rad", "alpha_rad", "velocity_mps", "acceleration_mps2",
}
_DISTURBANCE_KEYS = {
    "kind", "force_n", "torque_nm", "amplitude_n", "frequency_hz",
    "start_s", "end_s", "ramp_s",
}
_OBSTACLE_KEYS = {"x_min_m", "x_max_m", "y_min_m", "y_max_m"}
_CONTROLLER_KEYS = {"adaptation", "outer_rate_hz", "inner_rate_hz"}
_PHYSICS_KEYS = {"dt_s"}
_INITIAL_KEYS = {"position_m", "yaw_rad", "alpha_rad"}
_METRICS_KEYS = {"window_s", "stride_s", "settle_s"}
_OUTPUT_KEYS = {"trace", "metrics"}
_TOP_KEYS = {
    "name", "duration_s", "seed", "params", "gains", "controller", "physics",
    "initial", "noise", "waypoints", "disturbances", "obstacles", "metrics",
    "output",
}


@dataclass
class Scenario:
    name: str
    duration: float
    waypoints: list
    seed: int = 0
    params: ParamSet = field(default_factory=ParamSet)
    gains: GainSet = field(default_factory=GainSet)
    disturbances: list = field(default_factory=list)
    obstacles: ObstacleMap = field(default_factory=lambda: ObstacleMap(rectangles=()))
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    initial_position: np.ndarray = None
    initial_yaw: float = 0.0
    initial_alpha: float = 0.0
    physics_dt: float = 1e-3
    outer_rate: float = 100.0
    inner_rate: float = 500.0
    adaptation: bool = True
    metrics_window: float = 1.0
    metrics_stride: float = 0.1
    metrics_settle: float = 2.0
    trace_name: str = ""
    metrics_name: str = ""

    def __post_init__(self):
        if self.initial_position is None:
            self.initial_position = np.asarray(self.waypoints[0].position, float).copy()
        else:
            self.initial_position = np.asarray(self.initial_position, dtype=float)
        if not self.trace_name:
            self.trace_name = f"{self.name}_trace.csv"
        if not self.metrics_name:
            self.metrics_name = f"{self.name}_metrics.json"


def _line_index(path) -> dict:
    """Map dotted key paths to 1-based source lines, via the YAML node tree."""
    with open(path) as fh:
        try:
            root = yaml.compose(fh, Loader=yaml.SafeLoader)
        except yaml.YAMLError as exc:
            raise ScenarioError("<file>", f"not valid YAML: {exc}") from exc
    lines = {}

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for key_node, value_node in node.value:
                key_path = f"{prefix}.{key_node.value}" if prefix else str(key_node.value)
                lines[key_path] = key_node.start_mark.line + 1
                walk(value_node, key_path)
        elif isinstance(node, yaml.SequenceNode):
            for i, item in enumerate(node.value):
                walk(item, f"{prefix}[{i}]")
    if root is not None:
        walk(root, "")
    return lines


class _Validator:
    def __init__(self, lines: dict):
        self.lines = lines

    def fail(self, path, message):
        raise ScenarioError(path, message, self.lines.get(path))

    def require_map(self, value, path):
        if not isinstance(value, dict):
            self.fail(path, f"expected a mapping, got {type(value).__name__}")
        return value

    def reject_unknown(self, mapping, allowed, path):
        for key in mapping:
            if key not in allowed:
                self.fail(f"{path}.{key}" if path else str(key), "unknown key")

    def number(self, value, path):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(path, f"expected a number, got {type(value).__name__}")
        return float(value)

    def integer(self, value, path):
        if isinstance(value, bool) or not isinstance(value, int):
            self.fail(path, f"expected an integer, got {type(value).__name__}")
        return int(value)

    def boolean(self, value, path):
        if not isinstance(value, bool):
            self.fail(path, f"expected a boolean, got {type(value).__name__}")
        return value

    def string(self, value, path):
        if not isinstance(value, str):
            self.fail(path, f"expected a string, got {type(value).__name__}")
        return value

    def vec3(self, value, path):
        if not isinstance(value, (list, tuple)) or len(value) != 3:
            self.fail(path, "expected a list of three numbers")
        return np.array([self.number(v, f"{path}[{i}]") for i, v in enumerate(value)])


def parse_scenario(path) -> Scenario:
    """Load and validate a scenario file."""
    lines = _line_index(path)
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if raw is None:
        raise ScenarioError("<file>", "scenario file is empty")
    v = _Validator(lines)
    v.require_map(raw, "<file>")
    v.reject_unknown(raw, _TOP_KEYS, "")

    if "name" not in raw:
        v.fail("name", "required key missing")
    if "duration_s" not in raw:
        v.fail("duration_s", "required key missing")
    name = v.string(raw["name"], "name")
    duration = v.number(raw["duration_s"], "duration_s")
    if duration <= 0.0:
        v.fail("duration_s", "must be positive")
    seed = v.integer(raw.get("seed", 0), "seed")

    params = _parse_params(v, raw.get("params", {}))
    gains = _parse_gains(v, raw.get("gains", {}))
    noise = _parse_noise(v, raw.get("noise", {}))
    waypoints = _parse_waypoints(v, raw.get("waypoints"))
    disturbances = _parse_disturbances(v, raw.get("disturbances", []))
    obstacles = _parse_obstacles(v, raw.get("obstacles", []))

    ctrl = v.require_map(raw.get("controller", {}), "controller")
    v.reject_unknown(ctrl, _CONTROLLER_KEYS, "controller")
    phys = v.require_map(raw.get("physics", {}), "physics")
    v.reject_unknown(phys, _PHYSICS_KEYS, "physics")
    metrics = v.require_map(raw.get("metrics", {}), "metrics")
    v.reject_unknown(metrics, _METRICS_KEYS, "metrics")
    output = v.require_map(raw.get("output", {}), "output")
    v.reject_unknown(output, _OUTPUT_KEYS, "output")

    initial = v.require_map(raw.get("initial", {}), "initial")
    v.reject_unknown(initial, _INITIAL_KEYS, "initial")
    initial_position = (
        v.vec3(initial["position_m"], "initial.position_m")
        if "position_m" in initial else None
    )
    initial_yaw = v.number(initial.get("yaw_rad", 0.0), "initial.yaw_rad")
    initial_alpha = v.number(initial.get("alpha_rad", 0.0), "initial.alpha_rad")
    if not 0.0 <= initial_alpha <= math.pi / 2:
        v.fail("initial.alpha_rad", "outside [0, pi/2]")

    return Scenario(
        name=name,
        duration=duration,
        seed=seed,
        params=params,
        gains=gains,
        waypoints=waypoints,
        disturbances=disturbances,
        obstacles=obstacles,
        noise=noise,
        initial_position=initial_position,
        initial_yaw=initial_yaw,
        initial_alpha=initial_alpha,
        physics_dt=v.number(phys.get("dt_s", 1e-3), "physics.dt_s"),
        outer_rate=v.number(ctrl.get("outer_rate_hz", 100.0), "controller.outer_rate_hz"),
        inner_rate=v.number(ctrl.get("inner_rate_hz", 500.0), "controller.inner_rate_hz"),
        adaptation=v.boolean(ctrl.get("adaptation", True), "controller.adaptation"),
        metrics_window=v.number(metrics.get("window_s", 1.0), "metrics.window_s"),
        metrics_stride=v.number(metrics.get("stride_s", 0.1), "metrics.stride_s"),
        metrics_settle=v.number(metrics.get("settle_s", 2.0), "metrics.settle_s"),
        trace_name=v.string(output.get("trace", ""), "output.trace"),
        metrics_name=v.string(output.get("metrics", ""), "output.metrics"),
    )


def _parse_params(v: _Validator, raw) -> ParamSet:
    raw = v.require_map(raw, "params")
    v.reject_unknown(raw, set(_PARAM_KEYS), "params")
    overrides = {}
    for key, value in raw.items():
        overrides[_PARAM_KEYS[key]] = v.number(value, f"params.{key}")
    try:
        return ParamSet(**overrides)
    except ValueError as exc:
        v.fail("params", str(exc))


def _parse_gains(v: _Validator, raw) -> GainSet:
    raw = v.require_map(raw, "gains")
    v.reject_unknown(raw, set(_GAIN_VEC_KEYS) | set(_GAIN_SCALAR_KEYS), "gains")
    overrides = {}
    for key, value in raw.items():
        if key in _GAIN_VEC_KEYS:
            overrides[_GAIN_VEC_KEYS[key]] = v.vec3(value, f"gains.{key}")
        else:
            overrides[_GAIN_SCALAR_KEYS[key]] = v.number(value, f"gains.{key}")
    try:
        return GainSet(**overrides)
    except ValueError as exc:
        v.fail("gains", str(exc))


def _parse_noise(v: _Validator, raw) -> NoiseConfig:
    raw = v.require_map(raw, "noise")
    v.reject_unknown(raw, set(_NOISE_KEYS), "noise")
    overrides = {}
    for key, value in raw.items():
        num = v.number(value, f"noise.{key}")
        if num < 0.0:
            v.fail(f"noise.{key}", "must be nonnegative")
        overrides[_NOISE_KEYS[key]] = num
    return NoiseConfig(**overrides)


def _parse_waypoints(v: _Validator, raw) -> list:
    if raw is None:
        v.fail("waypoints", "required key missing")
    if not isinstance(raw, list) or len(raw) < 2:
        v.fail("waypoints", "need a list of at least two waypoints")
    waypoints = []
    last_t = -math.inf
    for i, item in enumerate(raw):
        path = f"waypoints[{i}]"
        item = v.require_map(item, path)
        v.reject_unknown(item, _WAYPOINT_KEYS, path)
        if "t_s" not in item or "position_m" not in item:
            v.fail(path, "waypoint needs t_s and position_m")
        t = v.number(item["t_s"], f"{path}.t_s")
        if t <= last_t:
            v.fail(f"{path}.t_s", "waypoint times must be strictly increasing")
        last_t = t
        alpha = v.number(item.get("alpha_rad", 0.0), f"{path}.alpha_rad")
        if not 0.0 <= alpha <= math.pi / 2:
            v.fail(f"{path}.alpha_rad", "outside [0, pi/2]")
        waypoints.append(
            Waypoint(
                t=t,
                position=v.vec3(item["position_m"], f"{path}.position_m"),
                yaw=v.number(item.get("yaw_rad", 0.0), f"{path}.yaw_rad"),
                alpha=alpha,
                velocity=(
                    v.vec3(item["velocity_mps"], f"{path}.velocity_mps")
                    if "velocity_mps" in item else None
                ),
                acceleration=(
                    v.vec3(item["acceleration_mps2"], f"{path}.acceleration_mps2")
                    if "acceleration_mps2" in item else None
                ),
            )
        )
    return waypoints


def _parse_disturbances(v: _Validator, raw) -> list:
    if not isinstance(raw, list):
        v.fail("disturbances", "expected a list")
    out = []
    for i, item in enumerate(raw):
        path = f"disturbances[{i}]"
        item = v.require_map(item, path)
        v.reject_unknown(item, _DISTURBANCE_KEYS, path)
        kind = v.string(item.get("kind", "constant"), f"{path}.kind")
        if kind not in ("constant", "sinusoidal", "impulse"):
            v.fail(f"{path}.kind", f"unknown disturbance kind {kind!r}")
        out.append(
            Disturbance(
                kind=kind,
                force=(
                    v.vec3(item["force_n"], f"{path}.force_n")
                    if "force_n" in item else np.zeros(3)
                ),
                torque=(
                    v.vec3(item["torque_nm"], f"{path}.torque_nm")
                    if "torque_nm" in item else np.zeros(3)
                ),
                amplitude=(
                    v.vec3(item["amplitude_n"], f"{path}.amplitude_n")
                    if "amplitude_n" in item else np.zeros(3)
                ),
                frequency=v.number(item.get("frequency_hz", 0.0), f"{path}.frequency_hz"),
                start=v.number(item.get("start_s", 0.0), f"{path}.start_s"),
                end=v.number(item.get("end_s", math.inf), f"{path}.end_s"),
                ramp=v.number(item.get("ramp_s", 0.0), f"{path}.ramp_s"),
            )
        )
    return out


def _parse_obstacles(v: _Validator, raw) -> ObstacleMap:
    if not isinstance(raw, list):
        v.fail("obstacles", "expected a list")
    rects = []
    for i, item in enumerate(raw):
        path = f"obstacles[{i}]"
        item = v.require_map(item, path)
        v.reject_unknown(item, _OBSTACLE_KEYS, path)
        missing = _OBSTACLE_KEYS - set(item)
        if missing:
            v.fail(path, f"missing keys: {sorted(missing)}")
        try:
            rects.append(
                Rectangle(
                    x_min=v.number(item["x_min_m"], f"{path}.x_min_m"),
                    x_max=v.number(item["x_max_m"], f"{path}.x_max_m"),
                    y_min=v.number(item["y_min_m"], f"{path}.y_min_m"),
                    y_max=v.number(item["y_max_m"], f"{path}.y_max_m"),
                )
            )
        except ValueError as exc:
            v.fail(path, str(exc))
    return ObstacleMap.from_list(rects)


def canonical_dump(scenario: Scenario) -> str:
    """Emit YAML that parses back to an identical scenario."""
    p, g, n = scenario.params, scenario.gains, scenario.noise
    doc = {
        "name": scenario.name,
        "duration_s": scenario.duration,
        "seed": scenario.seed,
        "params": {key: float(getattr(p, attr)) for key, attr in _PARAM_KEYS.items()},
        "gains": {
            **{key: [float(x) for x in getattr(g, attr)] for key, attr in _GAIN_VEC_KEYS.items()},
            **{key: float(getattr(g, attr)) for key, attr in _GAIN_SCALAR_KEYS.items()},
        },
        "controller": {
            "adaptation": scenario.adaptation,
            "outer_rate_hz": scenario.outer_rate,
            "inner_rate_hz": scenario.inner_rate,
        },
        "physics": {"dt_s": scenario.physics_dt},
        "initial": {
            "position_m": [float(x) for x in scenario.initial_position],
            "yaw_rad": scenario.initial_yaw,
            "alpha_rad": scenario.initial_alpha,
        },
        "noise": {key: float(getattr(n, attr)) for key, attr in _NOISE_KEYS.items()},
        "waypoints": [_waypoint_doc(w) for w in scenario.waypoints],
        "disturbances": [_disturbance_doc(d) for d in scenario.disturbances],
        "obstacles": [
            {
                "x_min_m": r.x_min, "x_max_m": r.x_max,
                "y_min_m": r.y_min, "y_max_m": r.y_max,
            }
            for r in scenario.obstacles.rectangles
        ],
        "metrics": {
            "window_s": scenario.metrics_window,
            "stride_s": scenario.metrics_stride,
            "settle_s": scenario.metrics_settle,
        },
        "output": {"trace": scenario.trace_name, "metrics": scenario.metrics_name},
    }
    return yaml.safe_dump(doc, sort_keys=False)


def _waypoint_doc(w: Waypoint) -> dict:
    doc = {
        "t_s": float(w.t),
        "position_m": [float(x) for x in w.position],
        "yaw_rad": float(w.yaw),
        "alpha_rad": float(w.alpha),
    }
    if w.velocity is not None:
        doc["velocity_mps"] = [float(x) for x in w.velocity]
    if w.acceleration is not None:
        doc["acceleration_mps2"] = [float(x) for x in w.acceleration]
    return doc


def _disturbance_doc(d: Disturbance) -> dict:
    doc = {
        "kind": d.kind,
        "force_n": [float(x) for x in d.force],
        "torque_nm": [float(x) for x in d.torque],
        "amplitude_n": [float(x) for x in d.amplitude],
        "frequency_hz": float(d.frequency),
        "start_s": float(d.start),
        "ramp_s": float(d.ramp),
    }
    if math.isfinite(d.end):
        doc["end_s"] = float(d.end)
    return doc


def builtin_names() -> list:
    """Names of the scenarios shipped with the package."""
    base = importlib.resources.files("quadfold") / "scenarios"
    return sorted(
        entry.name[: -len(".yaml")]
        for entry in base.iterdir()
        if entry.name.endswith(".yaml")
    )


def resolve_scenario(name_or_path) -> Scenario:
    """Parse a scenario from a path, or from the built-in library by name."""
    import os

    if os.path.exists(name_or_path):
        return parse_scenario(name_or_path)
    base = importlib.resources.files("quadfold") / "scenarios"
    candidate = base / f"{name_or_path}.yaml"
    if candidate.is_file():
        with importlib.resources.as_file(candidate) as real:
            return parse_scenario(real)
    raise ScenarioError(
        "<file>",
        f"no scenario file {name_or_path!r} and no built-in of that name "
        f"(built-ins: {', '.join(builtin_names())})",
    )
