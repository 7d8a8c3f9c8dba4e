"""Single-step base integrators and the direct-numerical-simulation driver.

Direct simulation of the full stiff right-hand side with a micro step is the
ground-truth oracle for every benchmark; it also carries the cost counters
against which the multirate savings are measured.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from vshmm._jit import njit, is_jitted
from vshmm.systems import MultiscaleSystem

__all__ = [
    "Trajectory",
    "BlowUpError",
    "euler_step",
    "rk4_step",
    "dns_integrate",
    "STEPPER_STAGES",
]

Rhs = Callable[[np.ndarray], np.ndarray]

#: right-hand-side evaluations per step for each base scheme
STEPPER_STAGES = {"euler": 1, "rk4": 4}


class BlowUpError(RuntimeError):
    """Raised when an integration step produces a non-finite state."""

    def __init__(self, time: float, level: Optional[int] = None,
                 cycle: Optional[int] = None):
        self.time = time
        self.level = level
        self.cycle = cycle
        where = f"t={time:.6g}"
        if level is not None:
            where += f", level={level}"
        if cycle is not None:
            where += f", cycle={cycle}"
        super().__init__(f"numerical blow-up at {where}")


@dataclass
class Trajectory:
    """Sampled states of one integration run plus per-level cost counters.

    ``rhs_evals`` maps the scale level that was evaluated to the number of
    right-hand-side evaluations spent on it (all levels for the multirate
    integrator, only the deepest level for direct simulation).
    """

    times: np.ndarray
    states: np.ndarray
    rhs_evals: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if len(self.times) != len(self.states):
            raise ValueError("one state per sample time required")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("sample times must be strictly increasing")

    @property
    def total_rhs_evals(self) -> int:
        return int(sum(self.rhs_evals.values()))

    def component(self, i: int) -> np.ndarray:
        return self.states[:, i]


def euler_step(f: Rhs, x: np.ndarray, t: float, h: float) -> np.ndarray:
    """One explicit Euler step x + h*f(x) (autonomous f; t is bookkeeping)."""
    if h <= 0:
        raise ValueError("step size must be positive")
    out = x + h * f(x)
    if not np.all(np.isfinite(out)):
        raise BlowUpError(t + h)
    return out


def rk4_step(f: Rhs, x: np.ndarray, t: float, h: float) -> np.ndarray:
    """One classical 4-stage Runge-Kutta step."""
    if h <= 0:
        raise ValueError("step size must be positive")
    k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    out = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise BlowUpError(t + h)
    return out


_STEP_FUNCS = {"euler": euler_step, "rk4": rk4_step}


@njit
def _dns_loop_jit(ev, x0, inv_eps, level, dt, n_steps, stride, use_rk4, out):
    """Fixed-step loop recording every ``stride``-th state; returns the index
    of the first recorded non-finite step, or -1."""
    x = x0.copy()
    n_rec = 0
    for i in range(n_steps):
        if use_rk4:
            k1 = ev(x, inv_eps, level)
            k2 = ev(x + (0.5 * dt) * k1, inv_eps, level)
            k3 = ev(x + (0.5 * dt) * k2, inv_eps, level)
            k4 = ev(x + dt * k3, inv_eps, level)
            x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        else:
            x = x + dt * ev(x, inv_eps, level)
        if (i + 1) % stride == 0:
            ok = True
            for v in x:
                if not np.isfinite(v):
                    ok = False
            if not ok:
                return i + 1
            out[n_rec] = x
            n_rec += 1
    return -1


def _dns_loop_py(rhs, x0, dt, n_steps, stride, scheme, out):
    step = _STEP_FUNCS[scheme]
    x = x0.copy()
    n_rec = 0
    for i in range(n_steps):
        x = step(rhs, x, i * dt, dt)
        if (i + 1) % stride == 0:
            out[n_rec] = x
            n_rec += 1
    return -1


def dns_integrate(sys: MultiscaleSystem, dt: float, t_end: float,
                  sample_every: float, scheme: str = "rk4") -> Trajectory:
    """Integrate the full right-hand side with a fixed micro step.

    States are recorded at multiples of ``sample_every``, which ``dt`` must
    divide (to 1e-9 relative) so samples land on completed steps and no
    interpolation is needed.  The cost counter charges ``steps * stages``
    evaluations to the deepest level.
    """
    if scheme not in STEPPER_STAGES:
        raise ValueError(f"unknown scheme {scheme!r}")
    if not dt <= sample_every <= t_end:
        raise ValueError("need dt <= sample_every <= t_end")
    stride = round(sample_every / dt)
    if abs(stride * dt - sample_every) > 1e-9 * sample_every:
        raise ValueError("dt must divide sample_every")
    n_samples = round(t_end / sample_every)
    if abs(n_samples * sample_every - t_end) > 1e-9 * t_end:
        raise ValueError("sample_every must divide t_end")
    n_steps = n_samples * stride
    level = sys.n_levels
    x0 = sys.initial_state
    out = np.empty((n_samples, x0.size))

    if sys.fused_eval is not None and is_jitted(sys.fused_eval):
        bad = _dns_loop_jit(sys.fused_eval, x0, sys.inv_scales, level, dt,
                            n_steps, stride, scheme == "rk4", out)
        if bad >= 0:
            raise BlowUpError(sys.initial_time + bad * dt, level=level)
    else:
        _dns_loop_py(sys.level_rhs(level), x0, dt, n_steps, stride, scheme, out)

    times = sys.initial_time + sample_every * np.arange(n_samples + 1)
    states = np.vstack([x0[None, :], out])
    cost = {level: n_steps * STEPPER_STAGES[scheme]}
    return Trajectory(times=times, states=states, rhs_evals=cost)
