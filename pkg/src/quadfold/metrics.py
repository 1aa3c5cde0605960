"""Tracking metrics computed from a trace: hover RMSE statistics in sliding
windows, the cumulative probability curve over RMSE thresholds, the altitude
error histogram, per-axis tracking RMSE and (with obstacles) gap clearance."""

import json
import math
from dataclasses import dataclass

import numpy as np

from quadfold import cspace


@dataclass
class MetricsReport:
    xy_rmse: float                 # m, post-settle overall
    per_axis_rmse: np.ndarray      # m, (3,), full run vs desired
    windowed_xy_rmse: np.ndarray   # m, one sample per sliding window
    cumulative_r: np.ndarray       # m, threshold grid
    cumulative_p: np.ndarray       # P(windowed RMSE <= r), ends at 1
    z_hist_edges: np.ndarray       # m
    z_hist_counts: np.ndarray
    min_gap_clearance: float | None = None  # m, None without obstacles
    diverged: bool = False

    def to_dict(self) -> dict:
        doc = {
            "xy_rmse_m": self.xy_rmse,
            "per_axis_rmse_m": [float(v) for v in self.per_axis_rmse],
            "windowed_xy_rmse_m": [float(v) for v in self.windowed_xy_rmse],
            "cumulative_r_m": [float(v) for v in self.cumulative_r],
            "cumulative_p": [float(v) for v in self.cumulative_p],
            "z_hist_edges_m": [float(v) for v in self.z_hist_edges],
            "z_hist_counts": [int(v) for v in self.z_hist_counts],
            "diverged": self.diverged,
        }
        if self.min_gap_clearance is not None:
            doc["min_gap_clearance_m"] = self.min_gap_clearance
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, doc: dict) -> "MetricsReport":
        return cls(
            xy_rmse=doc["xy_rmse_m"],
            per_axis_rmse=np.array(doc["per_axis_rmse_m"]),
            windowed_xy_rmse=np.array(doc["windowed_xy_rmse_m"]),
            cumulative_r=np.array(doc["cumulative_r_m"]),
            cumulative_p=np.array(doc["cumulative_p"]),
            z_hist_edges=np.array(doc["z_hist_edges_m"]),
            z_hist_counts=np.array(doc["z_hist_counts"]),
            min_gap_clearance=doc.get("min_gap_clearance_m"),
            diverged=doc["diverged"],
        )


def windowed_xy_rmse(trace, window: float, stride: float, settle: float) -> np.ndarray:
    """XY tracking RMSE per sliding window after the settle time."""
    t = trace.col("t_s")
    e2 = trace.col("err_px_m") ** 2 + trace.col("err_py_m") ** 2
    samples = []
    start = settle
    while start + window <= t[-1] + 1e-9:
        mask = (t >= start) & (t < start + window)
        if np.any(mask):
            samples.append(math.sqrt(float(np.mean(e2[mask]))))
        start += stride
    return np.array(samples)


def compute_metrics(trace, scenario=None, window: float = 1.0, stride: float = 0.1,
                    settle: float = 2.0) -> MetricsReport:
    """Pure function of the trace (plus the scenario's obstacle map, if any)."""
    if scenario is not None:
        window = scenario.metrics_window
        stride = scenario.metrics_stride
        settle = scenario.metrics_settle

    t = trace.col("t_s")
    ex, ey, ez = (trace.col(c) for c in ("err_px_m", "err_py_m", "err_pz_m"))
    post = t >= min(settle, max(t[-1] - 1e-9, 0.0))
    xy_rmse = float(np.sqrt(np.mean(ex[post] ** 2 + ey[post] ** 2)))
    per_axis = np.sqrt(np.mean(np.stack([ex, ey, ez]) ** 2, axis=1))

    windows = windowed_xy_rmse(trace, window, stride, settle)
    if windows.size == 0:
        windows = np.array([xy_rmse])

    r_max = max(0.3, float(np.ceil(windows.max() * 20.0) / 20.0))
    grid = np.round(np.arange(0.0, r_max + 0.0025, 0.005), 6)
    cumulative = np.array([float(np.mean(windows <= r + 1e-12)) for r in grid])

    span = max(0.2, float(np.max(np.abs(ez))) if len(ez) else 0.2)
    edges = np.linspace(-span, span, 42)
    counts, _ = np.histogram(np.clip(ez, -span, span), bins=edges)

    min_clear = None
    if scenario is not None and len(scenario.obstacles) > 0:
        report = cspace.check_trace_clearance(scenario.params, scenario.obstacles, trace)
        min_clear = report.min_clearance

    return MetricsReport(
        xy_rmse=xy_rmse,
        per_axis_rmse=per_axis,
        windowed_xy_rmse=windows,
        cumulative_r=grid,
        cumulative_p=cumulative,
        z_hist_edges=edges,
        z_hist_counts=counts,
        min_gap_clearance=min_clear,
        diverged=trace.diverged,
    )


def cumulative_curve_csv(report: MetricsReport) -> str:
    lines = ["rmse_threshold_m,probability"]
    for r, p in zip(report.cumulative_r, report.cumulative_p):
        lines.append(f"{r:.9g},{p:.9g}")
    return "\n".join(lines) + "\n"
