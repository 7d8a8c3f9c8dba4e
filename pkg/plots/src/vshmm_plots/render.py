"""Render experiment artifacts into figures.

Usage: ``vshmm-render <figure-id> --in <files-or-run-dirs...> --out <path>``

Figure ids
----------
exp1-overlay        slow-variable traces of up to three runs (reference
                    first), mirroring the dissipative benchmark overlay.
oscillator-overlay  I1/I2 traces of two runs side by side.
coeff-spectrum      log10 coefficient magnitudes from one coeffs_*.csv,
                    with the threshold line when the file carries one.
torus               constant/variable phase-sampling point sets.
pde-snapshots       field overlays of two runs at the snapshot times both
                    run directories share.
schedule            step size vs cumulative time per level from a
                    schedule.csv.

Inputs are trajectory/snapshot/schedule CSV files as written by the
``vshmm`` runner; run directories may be given wherever a specific file is
implied.  Legend labels come from each run's summary.json when present.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FIGURES = {}
FIGSIZE = (9.6, 4.8)
DPI = 110


def figure(name):
    def register(fn):
        FIGURES[name] = fn
        return fn
    return register


class RenderError(RuntimeError):
    pass


def _dir_of(path: Path) -> Path:
    return path if path.is_dir() else path.parent


def _trajectory_file(path: Path) -> Path:
    f = path / "trajectory.csv" if path.is_dir() else path
    if not f.exists():
        raise RenderError(f"missing input {f}")
    return f


def _read_trajectory(path: Path):
    f = _trajectory_file(path)
    with open(f) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return data[:, 0], data[:, 1:], header[1:]


def _read_csv(path: Path, expect: str):
    if not path.exists():
        raise RenderError(f"missing input {path}")
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if header[: len(expect.split(","))] != expect.split(","):
        raise RenderError(f"{path}: expected columns {expect}, got {header}")
    return header, data


def _label(path: Path, fallback: str) -> str:
    summary = _dir_of(path) / "summary.json"
    if summary.exists():
        with open(summary) as fh:
            return json.load(fh).get("method", fallback)
    return fallback


@figure("exp1-overlay")
def exp1_overlay(inputs: list[Path], out: Path) -> None:
    """Reference trajectory plus up to two method runs, first column."""
    if len(inputs) < 2:
        raise RenderError("exp1-overlay needs at least two runs")
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    styles = [dict(color="C0", lw=2.0), dict(color="C2", lw=1.4),
              dict(color="C3", lw=1.4, ls="--")]
    for path, style in zip(inputs, styles):
        t, vals, names = _read_trajectory(path)
        ax.plot(t, vals[:, 0], label=_label(path, path.name), **style)
    ax.set_xlabel("t")
    ax.set_ylabel("slow component")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out)


@figure("oscillator-overlay")
def oscillator_overlay(inputs: list[Path], out: Path) -> None:
    """I1 and I2 traces of two runs."""
    if len(inputs) != 2:
        raise RenderError("oscillator-overlay needs exactly two runs")
    fig, axs = plt.subplots(1, 2, figsize=FIGSIZE, dpi=DPI)
    for path, style in zip(inputs, (dict(color="C0", lw=2.0, marker=""),
                                    dict(color="C3", lw=1.2, marker="o",
                                         ms=3))):
        t, vals, names = _read_trajectory(path)
        for ax, col in zip(axs, ("I1", "I2")):
            if col not in names:
                raise RenderError(f"{path}: no {col} column")
            ax.plot(t, vals[:, names.index(col)],
                    label=_label(path, path.name), **style)
            ax.set_xlabel("t")
            ax.set_ylabel(col)
    axs[0].legend()
    fig.tight_layout()
    fig.savefig(out)


@figure("coeff-spectrum")
def coeff_spectrum(inputs: list[Path], out: Path) -> None:
    """log10 |coeff| vs wavenumber, with the shrinkage level if present."""
    if len(inputs) != 1:
        raise RenderError("coeff-spectrum needs exactly one coefficients file")
    header, data = _read_csv(inputs[0], "k,magnitude,phase")
    k, mag = data[:, 0], data[:, 1]
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    with np.errstate(divide="ignore"):
        ax.plot(k, np.log10(np.maximum(mag, 1e-300)), lw=0.8, color="C0")
    if "threshold" in header:
        lam = data[0, header.index("threshold")]
        ax.axhline(np.log10(lam), color="C3", lw=1.0, ls="--",
                   label=f"threshold {lam:.2e}")
        above = mag > lam
        ax.plot(k[above], np.log10(mag[above]), "rs", ms=4, mfc="none",
                label="retained")
        ax.legend()
    ax.set_xlabel("wavenumber")
    ax.set_ylabel("log10 |coeff|")
    ax.set_ylim(-18, 1)
    fig.tight_layout()
    fig.savefig(out)


@figure("torus")
def torus(inputs: list[Path], out: Path) -> None:
    """Constant- and variable-step sampling points on the unit torus."""
    if len(inputs) != 2:
        raise RenderError("torus needs the constant and variable point files")
    fig, axs = plt.subplots(1, 2, figsize=FIGSIZE, dpi=DPI)
    for ax, path, title in zip(axs, inputs, ("constant steps",
                                             "variable steps")):
        _, data = _read_csv(path, "u,v")
        ax.plot(data[:, 0], data[:, 1], "o", ms=4, color="C0")
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1)
        ax.set_aspect("equal")
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out)


_SNAPSHOT_RE = re.compile(r"u_t(\d+\.\d+)\.csv$")


def _snapshot_times(run: Path) -> dict[float, Path]:
    out = {}
    for f in run.glob("u_t*.csv"):
        m = _SNAPSHOT_RE.search(f.name)
        if m:
            out[float(m.group(1))] = f
    return out


@figure("pde-snapshots")
def pde_snapshots(inputs: list[Path], out: Path) -> None:
    """Field overlays of two runs at their shared snapshot times."""
    if len(inputs) != 2:
        raise RenderError("pde-snapshots needs two run directories")
    ref_dir, other_dir = (_dir_of(p) for p in inputs)
    ref_snaps = _snapshot_times(ref_dir)
    other_snaps = _snapshot_times(other_dir)
    shared = sorted(set(ref_snaps) & set(other_snaps))
    shared = [t for t in shared if t > 0.0] or shared
    if not shared:
        raise RenderError("runs share no snapshot times")
    shared = shared[:4]
    fig, axs = plt.subplots(1, len(shared), figsize=(3.2 * len(shared), 3.6),
                            dpi=DPI, squeeze=False)
    for ax, t in zip(axs[0], shared):
        _, ref = _read_csv(ref_snaps[t], "x,u")
        _, oth = _read_csv(other_snaps[t], "x,u")
        ax.plot(ref[:, 0], ref[:, 1], color="C0", lw=1.6,
                label=_label(ref_snaps[t], "reference"))
        ax.plot(oth[:, 0], oth[:, 1], color="C3", lw=1.0, ls="--",
                label=_label(other_snaps[t], "candidate"))
        ax.set_title(f"t = {t:g}")
        ax.set_xlabel("x")
    axs[0][0].set_ylabel("u")
    axs[0][0].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out)


@figure("schedule")
def schedule(inputs: list[Path], out: Path) -> None:
    """Step sizes over one macro interval, one series per level."""
    if len(inputs) != 1:
        raise RenderError("schedule needs one run directory or schedule.csv")
    path = inputs[0]
    f = path / "schedule.csv" if path.is_dir() else path
    _, data = _read_csv(f, "cycle,level,step,cumulative_time")
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    for lv in sorted(set(data[:, 1].astype(int))):
        rows = data[data[:, 1] == lv]
        ax.semilogy(rows[:, 3], rows[:, 2], ".-", ms=3, lw=0.7,
                    label=f"level {lv}")
    ax.set_xlabel("time within the macro interval")
    ax.set_ylabel("step size")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="vshmm-render",
        description="render vshmm experiment artifacts into figures",
    )
    parser.add_argument("figure", choices=sorted(FIGURES))
    parser.add_argument("--in", dest="inputs", nargs="+", required=True,
                        type=Path, help="input files or run directories")
    parser.add_argument("--out", type=Path, required=True)
    args = parser.parse_args(argv)
    try:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        FIGURES[args.figure](args.inputs, args.out)
    except (RenderError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
