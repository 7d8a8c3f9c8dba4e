"""CSV/JSON artifact formats shared by the CLI, tests and plot scripts.

All floats are written with 17 significant digits in scientific notation,
so identical runs produce byte-identical files and round-trips are exact.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from vshmm.multirate import VshmmSchedule
from vshmm.steppers import Trajectory

__all__ = [
    "fmt",
    "write_trajectory_csv",
    "read_trajectory_csv",
    "write_schedule_csv",
    "write_snapshot_csv",
    "write_coeffs_csv",
    "write_points_csv",
    "write_summary",
    "read_summary",
]


def fmt(v: float) -> str:
    return f"{float(v):.17e}"


def write_trajectory_csv(path, times: np.ndarray, values: np.ndarray,
                         columns: Sequence[str]) -> None:
    """Rows of (t, values...) with a header line."""
    values = np.asarray(values)
    if values.shape[1] != len(columns):
        raise ValueError("one column name per value column required")
    with open(path, "w") as fh:
        fh.write("t," + ",".join(columns) + "\n")
        for t, row in zip(times, values):
            fh.write(fmt(t) + "," + ",".join(fmt(v) for v in row) + "\n")


def read_trajectory_csv(path) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Returns (times, value matrix, value column names)."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if header[0] != "t":
            raise ValueError(f"{path}: expected a 't' leading column")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return data[:, 0], data[:, 1:], header[1:]


def write_schedule_csv(path, sched: VshmmSchedule) -> None:
    with open(path, "w") as fh:
        fh.write("cycle,level,step,cumulative_time\n")
        acc = 0.0
        width = sched.steps_per_cycle
        for i, (lv, h) in enumerate(zip(sched.levels, sched.steps)):
            acc += float(h)
            fh.write(f"{i // width},{int(lv)},{fmt(h)},{fmt(acc)}\n")


def write_snapshot_csv(path, x: np.ndarray, u: np.ndarray) -> None:
    with open(path, "w") as fh:
        fh.write("x,u\n")
        for xi, ui in zip(x, u):
            fh.write(fmt(xi) + "," + fmt(ui) + "\n")


def write_coeffs_csv(path, wavenumbers: np.ndarray, coeffs: np.ndarray,
                     threshold: Optional[float] = None) -> None:
    """Sorted (k, |coeff|, phase) rows, optionally with the threshold level."""
    order = np.argsort(wavenumbers)
    with open(path, "w") as fh:
        fh.write("k,magnitude,phase")
        fh.write(",threshold\n" if threshold is not None else "\n")
        for i in order:
            c = coeffs[i]
            row = f"{int(wavenumbers[i])},{fmt(abs(c))},{fmt(np.angle(c))}"
            if threshold is not None:
                row += "," + fmt(threshold)
            fh.write(row + "\n")


def write_points_csv(path, points: np.ndarray) -> None:
    with open(path, "w") as fh:
        fh.write("u,v\n")
        for u, v in points:
            fh.write(fmt(u) + "," + fmt(v) + "\n")


def write_summary(path, summary: dict) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_summary(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def trajectory_cost(traj: Trajectory) -> dict:
    return {str(k): int(v) for k, v in sorted(traj.rhs_evals.items())}


def find_summary(trajectory_path) -> Optional[dict]:
    """summary.json next to a trajectory file, if present."""
    p = Path(trajectory_path)
    cand = (p if p.is_dir() else p.parent) / "summary.json"
    if cand.exists():
        return read_summary(cand)
    return None
