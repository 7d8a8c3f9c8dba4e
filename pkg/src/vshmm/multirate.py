"""Kernel-modulated multirate splitting: schedules and the macro stepper.

One macro interval of length DT is covered by cycles that advance the full
system by the micro step dt, then each truncated sub-system (levels K-1
down to 0) by its own mesoscopic step

    h_j = c * alpha_j * dt * K(phi_j),

where K is the step kernel, phi_j the kernel phase of level j's subperiod,
and c a single normalization making the flattened steps sum to DT exactly.
Every level is stepped once per cycle, so the per-level evaluation counts
are equal and the cost per unit time drops by a factor of order
1 + sum(alpha) relative to micro-stepping everything.

Two phase conventions are provided:

* ``"time"`` (default): phi_j = frac(m_j * t / DT) with t the elapsed time
  in the interval.  Cycles cluster wherever the kernel is small, so each
  macro interval opens and closes with a burst of near-micro cycles; this
  is what resolves fast transients and re-converges the fast variables
  before every sample.
* ``"index"``: phi_{j,i} = frac(m_j * (i+1/2) / N) over a fixed cycle
  count N = round(DT / (dt*(1+sum(alpha)))).  Cycles are spread uniformly
  by index, the per-level mean step is exactly c*alpha_j*dt, and the cost
  matches the nominal 1+sum(alpha) saving; transients inside an interval
  are not resolved, so this mode suits statistically stationary regimes
  and cost studies.

Accuracy is guaranteed only at the macro sampling times n*DT; intermediate
states are by-products of the averaging and should not be consumed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from vshmm._jit import njit, is_jitted
from vshmm.kernels import StepKernel, eval_kernel
from vshmm.steppers import (
    BlowUpError,
    STEPPER_STAGES,
    Trajectory,
    euler_step,
    rk4_step,
)
from vshmm.systems import MultiscaleSystem

__all__ = [
    "VshmmConfig",
    "VshmmSchedule",
    "build_schedule",
    "macro_step",
    "vshmm_integrate",
    "torus_sampling_diagnostic",
]


@dataclass(frozen=True)
class VshmmConfig:
    """Parameters of the multirate integrator.

    Attributes
    ----------
    dt : float
        Micro step for the full system.
    DT : float
        Macro sampling interval; must hold at least one full cycle.
    alphas : tuple of float
        Savings factors (alpha_1, ..., alpha_K), strictly decreasing and
        all > 1.  alpha_j scales the mesoscopic step of level j-1, so the
        largest saving applies to the slowest truncation.
    m : tuple of int or None
        Kernel subperiods per macro interval for each mesoscopic step;
        m_1 = 1 and non-decreasing.  None picks a mode-specific default:
        the smallest integer >= alpha_1/alpha_j in time mode, or the
        divisor of the cycle count closest to that ratio in index mode
        (divisors keep the cycle count, hence the normalization, intact).
    kernel : StepKernel
    variable_steps : bool
        False freezes every mesoscopic step at its mean value
        (constant-step splitting baseline, identical in both phase modes).
    phase_mode : str
        "time" or "index"; see the module docstring.
    """

    dt: float
    DT: float
    alphas: tuple[float, ...]
    kernel: StepKernel
    m: Optional[tuple[int, ...]] = None
    variable_steps: bool = True
    phase_mode: str = "time"

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        if self.dt <= 0 or self.DT <= 0:
            raise ValueError("dt and DT must be positive")
        if not self.alphas:
            raise ValueError("need at least one savings factor")
        if any(a <= 1.0 for a in self.alphas):
            raise ValueError("savings factors must exceed 1")
        if any(b >= a for a, b in zip(self.alphas, self.alphas[1:])):
            raise ValueError("savings factors must be strictly decreasing")
        if self.DT < self.dt * (1.0 + sum(self.alphas)):
            raise ValueError(
                "DT must hold at least one full cycle: "
                f"DT={self.DT} < dt*(1+sum(alphas))={self.dt * (1 + sum(self.alphas))}"
            )
        if self.phase_mode not in ("time", "index"):
            raise ValueError("phase_mode must be 'time' or 'index'")
        if self.m is not None:
            m = tuple(int(v) for v in self.m)
            if len(m) != len(self.alphas):
                raise ValueError("need one subperiod divisor per savings factor")
            if m[0] != 1:
                raise ValueError("m_1 must be 1")
            if any(v < 1 for v in m) or any(b < a for a, b in zip(m, m[1:])):
                raise ValueError("m must be positive and non-decreasing")
            object.__setattr__(self, "m", m)

    @property
    def n_meso(self) -> int:
        return len(self.alphas)


@dataclass(frozen=True)
class VshmmSchedule:
    """Flattened (level, step) sequence covering one macro interval."""

    levels: np.ndarray
    steps: np.ndarray
    n_cycles: int
    m: tuple[int, ...]
    scale_factor: float
    DT: float

    @property
    def total(self) -> float:
        return float(np.sum(self.steps))

    @property
    def steps_per_cycle(self) -> int:
        return len(self.levels) // self.n_cycles

    def cycle(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """(levels, steps) of the i-th cycle."""
        w = self.steps_per_cycle
        sl = slice(i * w, (i + 1) * w)
        return self.levels[sl], self.steps[sl]

    def mean_step(self, level: int) -> float:
        """Mean step size applied at a given level."""
        mask = self.levels == level
        if not np.any(mask):
            raise ValueError(f"no steps at level {level}")
        return float(np.mean(self.steps[mask]))


def _divisor_subperiods(alphas: Sequence[float], n_cycles: int
                        ) -> tuple[int, ...]:
    """Divisors of the cycle count nearest alpha_1/alpha_j.

    Restricting to divisors with quotient >= 3 keeps at least three phase
    samples per subperiod, which avoids degenerate (constant-phase)
    mesoscopic steps; divisors of N leave the cycle count, and hence the
    normalization factor, untouched.
    """
    divisors = [d for d in range(1, n_cycles + 1)
                if n_cycles % d == 0 and n_cycles // d >= 3]
    if not divisors:
        divisors = [1]
    m = [1]
    for a in alphas[1:]:
        target = alphas[0] / a
        best = min(divisors, key=lambda d: (abs(d - target), d))
        m.append(max(best, m[-1]))
    return tuple(m)


def _ratio_subperiods(alphas: Sequence[float]) -> tuple[int, ...]:
    """Smallest integers >= alpha_{j-1}/alpha_j, forced non-decreasing."""
    m = [1]
    for prev, a in zip(alphas, alphas[1:]):
        m.append(max(math.ceil(prev / a), m[-1]))
    return tuple(m)


def _finish_schedule(cfg: VshmmConfig, levels: np.ndarray, steps: np.ndarray,
                     n_cycles: int, m: tuple[int, ...]) -> VshmmSchedule:
    """Rescale the mesoscopic steps so the flattened total is exactly DT."""
    K = cfg.n_meso
    meso = np.ones(len(steps), dtype=bool)
    meso[:: K + 1] = False
    budget = cfg.DT - n_cycles * cfg.dt
    c = budget / float(np.sum(steps[meso]))
    if not 0.5 <= c <= 2.0:
        warnings.warn(
            f"schedule normalization {c:.3f} far from 1: DT and savings "
            "factors are badly matched",
            stacklevel=3,
        )
    steps[meso] *= c
    return VshmmSchedule(levels=levels, steps=steps, n_cycles=n_cycles,
                         m=m, scale_factor=c, DT=cfg.DT)


def _cycle_levels(K: int) -> list[int]:
    # full level K at dt, then levels K-1 .. 0 at their mesoscopic steps
    return [K] + list(range(K - 1, -1, -1))


def build_schedule(cfg: VshmmConfig) -> VshmmSchedule:
    """Construct the per-macro-interval step schedule.

    Time mode walks the interval evaluating each kernel at the elapsed
    fraction of its subperiod, so the cycle count adapts to the kernel
    shape; index mode uses the fixed cycle count
    N = round(DT / (dt*(1+sum(alphas)))) with subperiod-midpoint phases
    (explicit subperiod divisors push N up to the next common multiple).
    In both modes a single factor rescales the mesoscopic steps so the
    flattened total equals DT exactly; with ``variable_steps=False`` the
    modes coincide in a uniform constant-step schedule.
    """
    K = cfg.n_meso
    cycle_mean = cfg.dt * (1.0 + sum(cfg.alphas))
    # the constant family makes variable stepping uniform by definition
    variable = cfg.variable_steps and cfg.kernel.family != "constant"
    if cfg.phase_mode == "time" and variable:
        m = cfg.m if cfg.m is not None else _ratio_subperiods(cfg.alphas)
        return _build_schedule_time(cfg, m)

    n_cycles = round(cfg.DT / cycle_mean)
    if n_cycles < 1:
        raise ValueError("DT too short: zero cycles per macro interval")
    if cfg.m is not None:
        lcm = math.lcm(*cfg.m)
        n_cycles = ((n_cycles + lcm - 1) // lcm) * lcm
        m = cfg.m
    else:
        m = _divisor_subperiods(cfg.alphas, n_cycles)

    levels = np.tile(np.array(_cycle_levels(K), dtype=np.int64), n_cycles)
    steps = np.empty(n_cycles * (K + 1))
    steps[:: K + 1] = cfg.dt
    for j in range(1, K + 1):
        alpha = cfg.alphas[j - 1]
        if variable:
            psi = np.mod(m[j - 1] * (np.arange(n_cycles) + 0.5) / n_cycles, 1.0)
            raw = alpha * cfg.dt * np.array(
                [eval_kernel(cfg.kernel, p) for p in psi]
            )
        else:
            raw = np.full(n_cycles, alpha * cfg.dt)
        # h_j is the (K + 1 - j)-th entry of each cycle
        steps[K + 1 - j :: K + 1] = raw
    return _finish_schedule(cfg, levels, steps, n_cycles, m)


def _build_schedule_time(cfg: VshmmConfig, m: tuple[int, ...]) -> VshmmSchedule:
    """Walk the macro interval with kernels evaluated at elapsed time.

    The kernels vanish at subperiod boundaries, so cycles shrink to near
    the micro step at the start and end of the interval (and of every
    subperiod), which is what captures fast transients.  The walk lands
    softly near DT because the steps collapse there; the closing
    rescale in ``_finish_schedule`` is a sub-percent correction.
    """
    K = cfg.n_meso
    levels: list[int] = []
    steps: list[float] = []
    tau = 0.0
    n_cycles = 0
    floor = 1e-6 * cfg.dt  # keeps counts equal if a phase lands on a zero
    while tau < cfg.DT - 0.5 * cfg.dt:
        levels.append(K)
        steps.append(cfg.dt)
        tau += cfg.dt
        for j in range(K, 0, -1):
            phi = math.fmod(tau * m[j - 1] / cfg.DT, 1.0)
            h = max(cfg.alphas[j - 1] * cfg.dt * eval_kernel(cfg.kernel, phi),
                    floor)
            levels.append(j - 1)
            steps.append(h)
            tau += h
        n_cycles += 1
    return _finish_schedule(cfg, np.array(levels, dtype=np.int64),
                            np.array(steps), n_cycles, m)


@njit
def _sched_loop_jit(ev, x0, inv_eps, levels, steps, use_rk4):
    """Run one flattened schedule; returns (state, first bad index or -1)."""
    x = x0.copy()
    for i in range(len(steps)):
        h = steps[i]
        lv = levels[i]
        if use_rk4:
            k1 = ev(x, inv_eps, lv)
            k2 = ev(x + (0.5 * h) * k1, inv_eps, lv)
            k3 = ev(x + (0.5 * h) * k2, inv_eps, lv)
            k4 = ev(x + h * k3, inv_eps, lv)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        else:
            x = x + h * ev(x, inv_eps, lv)
        ok = True
        for v in x:
            if not np.isfinite(v):
                ok = False
        if not ok:
            return x, i
    return x, -1


def _charge_schedule(sched: VshmmSchedule, counts: dict, stages: int) -> None:
    for lv in np.unique(sched.levels):
        n = int(np.sum(sched.levels == lv))
        counts[int(lv)] = counts.get(int(lv), 0) + n * stages


def macro_step(sys: MultiscaleSystem, x: np.ndarray, t_n: float,
               sched: VshmmSchedule, base: str = "rk4",
               counts: Optional[dict] = None) -> np.ndarray:
    """Advance the state by one macro interval along the schedule."""
    if base not in STEPPER_STAGES:
        raise ValueError(f"unknown base scheme {base!r}")
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise BlowUpError(t_n)

    if sys.fused_eval is not None and is_jitted(sys.fused_eval):
        out, bad = _sched_loop_jit(sys.fused_eval, x, sys.inv_scales,
                                   sched.levels, sched.steps, base == "rk4")
        if bad >= 0:
            t_bad = t_n + float(np.sum(sched.steps[: bad + 1]))
            raise BlowUpError(t_bad, level=int(sched.levels[bad]),
                              cycle=bad // sched.steps_per_cycle)
    else:
        step = rk4_step if base == "rk4" else euler_step
        rhs = [sys.level_rhs(lv) for lv in range(sys.n_levels + 1)]
        out = x
        t = t_n
        for i in range(len(sched.steps)):
            lv = int(sched.levels[i])
            h = float(sched.steps[i])
            try:
                out = step(rhs[lv], out, t, h)
            except BlowUpError as err:
                raise BlowUpError(err.time, level=lv,
                                  cycle=i // sched.steps_per_cycle) from None
            t += h
    if counts is not None:
        _charge_schedule(sched, counts, STEPPER_STAGES[base])
    return out


def vshmm_integrate(sys: MultiscaleSystem, cfg: VshmmConfig, t_end: float,
                    base: str = "rk4",
                    sched: Optional[VshmmSchedule] = None) -> Trajectory:
    """Repeat macro steps up to ``t_end`` and sample at every macro time.

    ``t_end`` must be an integer multiple of the macro interval (1e-9
    relative); the accuracy guarantee holds only at those samples.
    """
    n_macro = round(t_end / cfg.DT)
    if n_macro < 0 or abs(n_macro * cfg.DT - t_end) > 1e-9 * max(t_end, cfg.DT):
        raise ValueError("t_end must be an integer multiple of DT")
    if sched is None:
        sched = build_schedule(cfg)
    counts: dict[int, int] = {}
    x = sys.initial_state
    states = np.empty((n_macro + 1, x.size))
    states[0] = x
    for n in range(n_macro):
        x = macro_step(sys, x, sys.initial_time + n * cfg.DT, sched,
                       base=base, counts=counts)
        states[n + 1] = x
    times = sys.initial_time + cfg.DT * np.arange(n_macro + 1)
    return Trajectory(times=times, states=states, rhs_evals=counts)


def torus_sampling_diagnostic(beta: float, count: int, kernel: StepKernel,
                              variable: bool, increment: float = 0.15,
                              subperiods: int = 4) -> np.ndarray:
    """Phase pairs visited by paired fast/meso stepping, on the unit torus.

    The fast phase advances by a fixed increment per sample; the meso phase
    advances by ``beta`` times that increment, kernel-modulated in variable
    mode.  With constant steps the points fall on the wrapped line of slope
    ``beta`` through the origin; kernel modulation spreads them off the
    line, improving how densely the invariant torus is sampled.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if beta <= 0:
        raise ValueError("beta must be positive")
    pts = np.empty((count, 2))
    u = 0.0
    v = 0.0
    for i in range(count):
        pts[i, 0] = u % 1.0
        pts[i, 1] = v % 1.0
        if variable:
            psi = ((i + 0.5) * subperiods / count) % 1.0
            w = eval_kernel(kernel, psi)
        else:
            w = 1.0
        u += increment
        v += increment * beta * w
    return pts
