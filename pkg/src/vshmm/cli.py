"""Experiment runner: configure a problem and method, write artifacts.

Subcommands
-----------
run      integrate one problem with one method, writing trajectory.csv,
         summary.json and method-specific extras (schedule.csv, per-snapshot
         field and coefficient dumps, clusters.json) into the output
         directory.  The VSHMM_OUT environment variable overrides --out.
compare  error and cost metrics between two trajectory files sharing
         sampling times (the finer run is subsampled; no interpolation).
torus    write the phase-sampling diagnostic point sets.
sweep    run several config files concurrently, one output directory each.

Flags override values from an INI config file passed with --config
(section [run], same keys as the long flags).
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np

from vshmm.averaging import averaged_integrate
from vshmm.io import (
    fmt,
    find_summary,
    read_summary,
    read_trajectory_csv,
    write_coeffs_csv,
    write_points_csv,
    write_schedule_csv,
    write_snapshot_csv,
    write_summary,
    write_trajectory_csv,
)
from vshmm.kernels import kernel_by_name
from vshmm.multirate import (
    VshmmConfig,
    build_schedule,
    torus_sampling_diagnostic,
    vshmm_integrate,
)
from vshmm.problems import ode_problem_by_name, pde_problem_by_name
from vshmm.spectral import (
    EmptyClusterError,
    ModeClusters,
    SpectralState,
    cluster_modes,
    pde_dns_integrate,
    pde_vshmm_integrate,
    transform,
)
from vshmm.steppers import BlowUpError, dns_integrate

ODE_METHODS = ("dns", "vshmm", "const-split", "averaged")
PDE_METHODS = ("pde-dns", "pde-vshmm")


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v)


def _parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v)


def _add_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="INI file with a [run] section")
    p.add_argument("--problem",
                   choices=("exp1", "oscillators", "diffusion", "advection"))
    p.add_argument("--method", choices=ODE_METHODS + PDE_METHODS)
    p.add_argument("--eps", type=float, default=1e-2)
    p.add_argument("--dt", type=float)
    p.add_argument("--DT", type=float)
    p.add_argument("--alpha", type=str, help="comma-separated savings factors")
    p.add_argument("--m", type=str, help="comma-separated subperiod divisors")
    p.add_argument("--kernel", default="cosine",
                   choices=("cosine", "polynomial", "constant"))
    p.add_argument("--q", type=int, default=1, help="polynomial kernel order")
    p.add_argument("--phase-mode", default="time", choices=("time", "index"),
                   dest="phase_mode")
    p.add_argument("--t-end", type=float, dest="t_end")
    p.add_argument("--sample-every", type=float, dest="sample_every")
    p.add_argument("--base", default="rk4", choices=("rk4", "euler"))
    p.add_argument("--n-modes", type=int, dest="n_modes")
    p.add_argument("--lam", type=float, help="soft-threshold shrinkage value")
    p.add_argument("--gap", type=int)
    p.add_argument("--buffer", type=int)
    p.add_argument("--clusters", default="builtin",
                   help="'builtin', 'derive', or a clusters.json path")
    p.add_argument("--reference", type=Path,
                   help="reference run (directory or trajectory.csv) for "
                        "error metrics in the summary")
    p.add_argument("--out", type=Path, default=Path("out"))


_CONFIG_TYPES = {
    "eps": float, "dt": float, "DT": float, "t_end": float,
    "sample_every": float, "lam": float,
    "q": int, "gap": int, "buffer": int, "n_modes": int,
    "out": Path, "reference": Path,
}


def _merge_config(args: argparse.Namespace, parser: argparse.ArgumentParser
                  ) -> argparse.Namespace:
    """Fill unset args from the INI file; explicit flags win."""
    if not args.config:
        return args
    ini = configparser.ConfigParser()
    if not ini.read(args.config):
        parser.error(f"cannot read config file {args.config}")
    if "run" not in ini:
        parser.error(f"{args.config}: missing [run] section")
    section = ini["run"]
    defaults = parser.parse_args(["run"])  # baseline defaults
    for key, raw in section.items():
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            parser.error(f"{args.config}: unknown key {key!r}")
        if getattr(args, dest) != getattr(defaults, dest, None):
            continue  # flag was given explicitly
        setattr(args, dest, _CONFIG_TYPES.get(dest, str)(raw))
    return args


def _require(args, parser, *names) -> None:
    for name in names:
        if getattr(args, name) is None:
            parser.error(f"--{name.replace('_', '-')} is required for "
                         f"method {args.method}")


def _vshmm_config(args, variable: bool) -> VshmmConfig:
    kernel = kernel_by_name(args.kernel, args.q)
    return VshmmConfig(
        dt=args.dt,
        DT=args.DT,
        alphas=_parse_floats(args.alpha),
        m=_parse_ints(args.m) if args.m else None,
        kernel=kernel,
        variable_steps=variable,
        phase_mode=args.phase_mode,
    )


def _load_clusters(args, problem) -> ModeClusters:
    if args.clusters == "builtin":
        return ModeClusters.from_nonnegative(problem.recommended_clusters,
                                             buffer=problem.buffer)
    if args.clusters == "derive":
        lam = args.lam if args.lam is not None else problem.threshold
        gap = args.gap if args.gap is not None else problem.gap
        buf = args.buffer if args.buffer is not None else problem.buffer
        return cluster_modes(transform(problem.u0), lam, gap, buf)
    with open(args.clusters) as fh:
        groups = json.load(fh)
    return ModeClusters(clusters=tuple(tuple(g) for g in groups))


def _grid_of(problem) -> np.ndarray:
    n = problem.n_modes
    return 2.0 * np.pi * np.arange(n) / n


def _write_pde_artifacts(out: Path, problem, traj, threshold) -> list[str]:
    x = _grid_of(problem)
    extra = []
    for t, coeffs in zip(traj.times, traj.states):
        state = SpectralState(coeffs)
        tag = f"t{t:.6f}"
        u = np.fft.ifft(coeffs * problem.n_modes).real
        write_snapshot_csv(out / f"u_{tag}.csv", x, u)
        write_coeffs_csv(out / f"coeffs_{tag}.csv", state.wavenumbers(),
                         state.coeffs, threshold)
        extra += [f"u_{tag}.csv", f"coeffs_{tag}.csv"]
    return extra


def _compare_metrics(path_a, path_b, components: str = "all") -> dict:
    """Shared-time error metrics; the finer grid is subsampled to match."""
    file_a = Path(path_a) / "trajectory.csv" if Path(path_a).is_dir() else Path(path_a)
    file_b = Path(path_b) / "trajectory.csv" if Path(path_b).is_dir() else Path(path_b)
    ta, va, ha = read_trajectory_csv(file_a)
    tb, vb, hb = read_trajectory_csv(file_b)

    if components == "all":
        names = [h for h in ha if h in hb]
        if not names:
            raise ValueError("no shared columns to compare")
    else:
        names = [c.strip() for c in components.split(",") if c.strip()]
        for c in names:
            if c not in ha or c not in hb:
                raise ValueError(f"column {c!r} missing from one of the runs")
    ia = [ha.index(c) for c in names]
    ib = [hb.index(c) for c in names]

    # match the coarser grid against the finer one, no interpolation
    if len(ta) > len(tb):
        ta, va, ia, tb, vb, ib = tb, vb, ib, ta, va, ia
    pos = np.searchsorted(tb, ta)
    pos = np.clip(pos, 0, len(tb) - 1)
    left = np.clip(pos - 1, 0, len(tb) - 1)
    choose = np.where(np.abs(tb[left] - ta) < np.abs(tb[pos] - ta), left, pos)
    tol = 1e-9 * np.maximum(1.0, np.abs(ta))
    if np.any(np.abs(tb[choose] - ta) > tol):
        raise ValueError("sampling time grids do not match")

    da = va[:, ia]
    db = vb[choose][:, ib]
    diff = da - db
    row_norm = np.linalg.norm(diff, axis=1)
    ref_norm = float(np.linalg.norm(db))
    metrics = {
        "components": names if components != "all" else "all",
        "n_matched": int(len(ta)),
        "sup_error": float(np.max(row_norm)),
        "l2_error": float(np.sqrt(np.mean(row_norm**2))),
        "l2_rel_error": float(np.linalg.norm(diff) / ref_norm) if ref_norm else None,
    }
    sa, sb = find_summary(file_a), find_summary(file_b)
    if sa and sb and sa.get("total_rhs_evals") and sb.get("total_rhs_evals"):
        metrics["cost_ratio"] = sb["total_rhs_evals"] / sa["total_rhs_evals"]
    else:
        metrics["cost_ratio"] = None
    return metrics


def _execute_run(args, out: Path) -> tuple[dict, list[str]]:
    """Integrate per the config; returns (summary fields, artifact list)."""
    outputs = ["trajectory.csv"]
    params = {
        "problem": args.problem, "method": args.method, "base": args.base,
        "dt": args.dt, "DT": args.DT, "t_end": args.t_end,
        "sample_every": args.sample_every, "kernel": args.kernel, "q": args.q,
        "alpha": args.alpha, "m": args.m, "phase_mode": args.phase_mode,
    }

    if args.method in ODE_METHODS:
        params["eps"] = args.eps
        problem = ode_problem_by_name(args.problem, args.eps)
        names = list(problem.state_names)
        if args.method == "dns":
            _req = [args.dt, args.sample_every, args.t_end]
            if any(v is None for v in _req):
                raise ValueError("dns needs --dt, --sample-every, --t-end")
            traj = dns_integrate(problem.system, args.dt, args.t_end,
                                 args.sample_every, scheme=args.base)
        elif args.method == "averaged":
            if problem.averaged is None:
                raise ValueError(f"problem {args.problem} has no averaged "
                                 "companion equation")
            if args.dt is None or args.t_end is None:
                raise ValueError("averaged needs --dt and --t-end")
            traj = averaged_integrate(problem.averaged, args.dt, args.t_end)
            names = ["Xi"]
        else:
            if any(v is None for v in (args.dt, args.DT, args.alpha, args.t_end)):
                raise ValueError(f"{args.method} needs --dt, --DT, --alpha, "
                                 "--t-end")
            cfg = _vshmm_config(args, variable=args.method == "vshmm")
            sched = build_schedule(cfg)
            write_schedule_csv(out / "schedule.csv", sched)
            outputs.append("schedule.csv")
            params["m_effective"] = list(sched.m)
            params["n_cycles"] = sched.n_cycles
            params["schedule_scale"] = sched.scale_factor
            traj = vshmm_integrate(problem.system, cfg, args.t_end,
                                   base=args.base, sched=sched)
        values = traj.states
        if problem.observables is not None and args.method != "averaged":
            obs = np.array([problem.observables(s) for s in traj.states])
            values = np.hstack([traj.states, obs])
            names = names + list(problem.observable_names)
        write_trajectory_csv(out / "trajectory.csv", traj.times, values, names)

    else:
        problem = pde_problem_by_name(args.problem, args.n_modes)
        params["n_modes"] = problem.n_modes
        lam = args.lam if args.lam is not None else problem.threshold
        params["lambda"] = lam
        if args.method == "pde-dns":
            if any(v is None for v in (args.dt, args.sample_every, args.t_end)):
                raise ValueError("pde-dns needs --dt, --sample-every, --t-end")
            traj = pde_dns_integrate(problem, args.dt, args.t_end,
                                     args.sample_every, scheme=args.base)
        else:
            if any(v is None for v in (args.dt, args.DT, args.alpha, args.t_end)):
                raise ValueError("pde-vshmm needs --dt, --DT, --alpha, --t-end")
            clusters = _load_clusters(args, problem)
            with open(out / "clusters.json", "w") as fh:
                json.dump([list(c) for c in clusters.clusters], fh)
                fh.write("\n")
            outputs.append("clusters.json")
            params["clusters"] = [list(c) for c in clusters.clusters]
            cfg = _vshmm_config(args, variable=True)
            sched = build_schedule(cfg)
            write_schedule_csv(out / "schedule.csv", sched)
            outputs.append("schedule.csv")
            params["m_effective"] = list(sched.m)
            params["n_cycles"] = sched.n_cycles
            params["schedule_scale"] = sched.scale_factor
            traj = pde_vshmm_integrate(problem, clusters, cfg, args.t_end,
                                       scheme=args.base, sched=sched)
        grid_vals = np.real(np.fft.ifft(traj.states * problem.n_modes, axis=1))
        cols = [f"u_{i:04d}" for i in range(problem.n_modes)]
        write_trajectory_csv(out / "trajectory.csv", traj.times, grid_vals, cols)
        outputs += _write_pde_artifacts(out, problem, traj, lam)

    summary = {
        "method": args.method,
        "problem": args.problem,
        "params": params,
        "rhs_evals": {str(k): int(v) for k, v in sorted(traj.rhs_evals.items())},
        "total_rhs_evals": traj.total_rhs_evals,
        "n_samples": int(len(traj.times)),
    }
    return summary, outputs


def _cmd_run(args, parser) -> int:
    args = _merge_config(args, parser)
    if args.problem is None or args.method is None:
        parser.error("--problem and --method are required")
    out = Path(os.environ.get("VSHMM_OUT", args.out))
    out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    try:
        summary, outputs = _execute_run(args, out)
    except (ValueError, EmptyClusterError) as err:
        record = {"method": args.method, "problem": args.problem,
                  "error": {"kind": "config", "message": str(err)}}
        write_summary(out / "summary.json", record)
        print(json.dumps(record["error"]), file=sys.stderr)
        return 2
    except BlowUpError as err:
        record = {"method": args.method, "problem": args.problem,
                  "error": {"kind": "blow-up", "message": str(err),
                            "time": err.time, "level": err.level,
                            "cycle": err.cycle}}
        write_summary(out / "summary.json", record)
        print(json.dumps(record["error"]), file=sys.stderr)
        return 3
    summary["wall_time_s"] = time.perf_counter() - started
    summary["outputs"] = outputs
    summary["error"] = None
    if args.reference is not None:
        metrics = _compare_metrics(out / "trajectory.csv", args.reference)
        ref_summary = find_summary(args.reference)
        if ref_summary and ref_summary.get("total_rhs_evals"):
            metrics["cost_ratio"] = (ref_summary["total_rhs_evals"]
                                     / summary["total_rhs_evals"])
        summary["reference_metrics"] = metrics
    write_summary(out / "summary.json", summary)
    print(f"wrote {out / 'summary.json'}")
    return 0


def _cmd_compare(args, parser) -> int:
    try:
        metrics = _compare_metrics(args.run_a, args.run_b, args.components)
    except (OSError, ValueError) as err:
        print(json.dumps({"error": str(err)}), file=sys.stderr)
        return 2
    print(json.dumps(metrics, indent=2, sort_keys=True))
    return 0


def _cmd_torus(args, parser) -> int:
    out = Path(os.environ.get("VSHMM_OUT", args.out))
    out.mkdir(parents=True, exist_ok=True)
    kernel = kernel_by_name(args.kernel, args.q)
    for variable, name in ((False, "torus_constant.csv"),
                           (True, "torus_variable.csv")):
        pts = torus_sampling_diagnostic(args.beta, args.count, kernel,
                                        variable, args.increment,
                                        args.subperiods)
        write_points_csv(out / name, pts)
    write_summary(out / "summary.json", {
        "method": "torus", "error": None,
        "params": {"beta": args.beta, "count": args.count,
                   "kernel": args.kernel, "q": args.q,
                   "increment": args.increment, "subperiods": args.subperiods},
        "outputs": ["torus_constant.csv", "torus_variable.csv"],
    })
    print(f"wrote {out}")
    return 0


def _cmd_sweep(args, parser) -> int:
    base = Path(os.environ.get("VSHMM_OUT", args.out))

    def one(cfg_path: Path) -> int:
        sub = argparse.Namespace(**vars(parser.parse_args(["run"])))
        sub.config = cfg_path
        sub.out = base / cfg_path.stem
        return _cmd_run(sub, parser)

    with ThreadPoolExecutor(max_workers=args.jobs) as pool:
        codes = list(pool.map(one, [Path(c) for c in args.configs]))
    bad = [str(c) for c, rc in zip(args.configs, codes) if rc != 0]
    if bad:
        print(f"failed runs: {', '.join(bad)}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vshmm",
        description="multirate multiscale integration experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate one problem configuration")
    _add_run_args(p_run)

    p_cmp = sub.add_parser("compare", help="error/cost metrics of two runs")
    p_cmp.add_argument("run_a", help="candidate run directory or trajectory.csv")
    p_cmp.add_argument("run_b", help="reference run directory or trajectory.csv")
    p_cmp.add_argument("--components", default="all",
                       help="comma-separated column names, or 'all'")

    p_tor = sub.add_parser("torus", help="phase-sampling diagnostic points")
    p_tor.add_argument("--beta", type=float, required=True)
    p_tor.add_argument("--count", type=int, default=60)
    p_tor.add_argument("--kernel", default="cosine",
                       choices=("cosine", "polynomial", "constant"))
    p_tor.add_argument("--q", type=int, default=1)
    p_tor.add_argument("--increment", type=float, default=0.15)
    p_tor.add_argument("--subperiods", type=int, default=4)
    p_tor.add_argument("--out", type=Path, default=Path("out"))

    p_sw = sub.add_parser("sweep", help="run several config files")
    p_sw.add_argument("configs", nargs="+")
    p_sw.add_argument("--jobs", type=int, default=2)
    p_sw.add_argument("--out", type=Path, default=Path("sweep"))
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "run":
        return _cmd_run(args, parser)
    if args.command == "compare":
        return _cmd_compare(args, parser)
    if args.command == "torus":
        return _cmd_torus(args, parser)
    return _cmd_sweep(args, parser)


if __name__ == "__main__":
    sys.exit(main())
