"""Simulation trace: fixed column layout, CSV round-trip, 9 significant digits."""

import numpy as np

COLUMNS = (
    "t_s",
    "px_m", "py_m", "pz_m",
    "vx_mps", "vy_mps", "vz_mps",
    "qw", "qx", "qy", "qz",
    "wx_radps", "wy_radps", "wz_radps",
    "alpha_rad", "alpha_cmd_rad",
    "thrust1_n", "thrust2_n", "thrust3_n", "thrust4_n",
    "des_px_m", "des_py_m", "des_pz_m", "des_yaw_rad",
    "cmd_thrust_n", "cmd_taux_nm", "cmd_tauy_nm", "cmd_tauz_nm",
    "err_px_m", "err_py_m", "err_pz_m",
)

_INDEX = {name: i for i, name in enumerate(COLUMNS)}


class Trace:
    """Row-per-physics-step log of a simulation run."""

    def __init__(self, data: np.ndarray, diverged: bool = False):
        data = np.asarray(data, dtype=float)
        if data.ndim != 2 or data.shape[1] != len(COLUMNS):
            raise ValueError(f"trace data must have {len(COLUMNS)} columns")
        self.data = data
        self.diverged = diverged

    def __len__(self):
        return self.data.shape[0]

    def col(self, name: str) -> np.ndarray:
        return self.data[:, _INDEX[name]]

    def cols(self, *names) -> np.ndarray:
        return self.data[:, [_INDEX[n] for n in names]]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(",".join(COLUMNS) + "\n")
            if self.diverged:
                fh.write("# diverged\n")
            for row in self.data:
                fh.write(",".join(f"{v:.9g}" for v in row) + "\n")

    @classmethod
    def read_csv(cls, path) -> "Trace":
        diverged = False
        rows = []
        with open(path) as fh:
            header = fh.readline().strip()
            if header.split(",") != list(COLUMNS):
                raise ValueError(f"unexpected trace header in {path}")
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    diverged = diverged or "diverged" in line
                    continue
                rows.append([float(v) for v in line.split(",")])
        return cls(np.array(rows).reshape(-1, len(COLUMNS)), diverged=diverged)


def rotation_to_quaternion(R: np.ndarray) -> np.ndarray:
    """Unit quaternion (w, x, y, z) of a rotation matrix, stable branches."""
    t = np.trace(R)
    if t > 0.0:
        s = np.sqrt(t + 1.0) * 2.0
        return np.array(
            [0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s,
             (R[1, 0] - R[0, 1]) / s]
        )
    i = int(np.argmax(np.diag(R)))
    j, k = (i + 1) % 3, (i + 2) % 3
    s = np.sqrt(max(R[i, i] - R[j, j] - R[k, k] + 1.0, 0.0)) * 2.0
    q = np.empty(4)
    q[0] = (R[k, j] - R[j, k]) / s
    q[1 + i] = 0.25 * s
    q[1 + j] = (R[j, i] + R[i, j]) / s
    q[1 + k] = (R[k, i] + R[i, k]) / s
    return q
