"""Built-in benchmark problems with their analytic companions.

Each factory returns a fully wired problem: the split-force system, the
averaged equation or slow observables where known, the recommended
integrator settings, and the reference settings for the direct-simulation
oracle.  The set is fixed; systems are defined programmatically only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from vshmm._jit import njit
from vshmm.averaging import AveragedEquation, FrozenFastSystem
from vshmm.kernels import cosine_kernel
from vshmm.multirate import VshmmConfig
from vshmm.spectral import SpectralOperator
from vshmm.systems import MultiscaleSystem

__all__ = [
    "BenchmarkProblem",
    "PdeProblem",
    "exp1_dissipative",
    "coupled_oscillators",
    "slow_observables",
    "diffusion_problem",
    "advection_problem",
    "ode_problem_by_name",
    "pde_problem_by_name",
]


@dataclass(frozen=True)
class BenchmarkProblem:
    """An ODE benchmark: system, companions, and recommended settings."""

    name: str
    system: MultiscaleSystem
    averaged: Optional[AveragedEquation]
    observables: Optional[Callable[[np.ndarray], np.ndarray]]
    observable_names: tuple[str, ...]
    state_names: tuple[str, ...]
    recommended: VshmmConfig
    dns_dt: float
    frozen_fast: Optional[Callable[[float], FrozenFastSystem]] = None


@dataclass(frozen=True)
class PdeProblem:
    """A periodic PDE benchmark on [0, 2*pi) with a multiscale coefficient."""

    name: str
    operator: SpectralOperator
    u0: np.ndarray
    recommended: VshmmConfig
    dns_dt: float
    threshold: float
    gap: int
    buffer: int
    recommended_clusters: tuple[tuple[int, ...], ...]

    @property
    def n_modes(self) -> int:
        return self.operator.n


# ---------------------------------------------------------------------------
# dissipative three-scale system
# ---------------------------------------------------------------------------

def _exp1_f0(x):
    s = x[0] + x[1] + x[2]
    return np.array([math.sin(s) - s * s / 20.0, 0.0, 0.0])


def _exp1_f1(x):
    return np.array([0.0, 3.0 * x[0] * x[0] - x[1] * x[1] + x[2] * x[2], 0.0])


def _exp1_f2(x):
    return np.array([0.0, 0.0, x[0] - x[1] - x[2]])


@njit
def _exp1_eval(x, inv_eps, level):
    out = np.empty(3)
    s = x[0] + x[1] + x[2]
    out[0] = np.sin(s) - s * s / 20.0
    out[1] = 0.0
    out[2] = 0.0
    if level >= 1:
        out[1] = inv_eps[0] * (3.0 * x[0] * x[0] - x[1] * x[1] + x[2] * x[2])
    if level >= 2:
        out[2] = inv_eps[1] * (x[0] - x[1] - x[2])
    return out


def exp1_dissipative(eps: float) -> BenchmarkProblem:
    """Dissipative benchmark: slow xi driven by two relaxing fast variables.

    Scales are (eps, eps**2).  With xi frozen, zeta relaxes to xi - eta and
    then eta to 2*xi, so the slow dynamics approach
    d(Xi)/dt = sin(2*Xi) - Xi**2 / 5 from Xi(0) = 5.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    system = MultiscaleSystem(
        components=(_exp1_f0, _exp1_f1, _exp1_f2),
        scales=(eps, eps * eps),
        initial_state=np.array([5.0, -10.0, 5.0]),
        fused_eval=_exp1_eval,
    )
    averaged = AveragedEquation(
        F=lambda z: np.array([math.sin(2.0 * z[0]) - z[0] * z[0] / 5.0]),
        xi0=np.array([5.0]),
    )

    def frozen(xi: float) -> FrozenFastSystem:
        return FrozenFastSystem(
            xi=np.array([float(xi)]),
            g=lambda s, e, c: np.array([3.0 * s[0] * s[0] - e[0] * e[0] + c[0] * c[0]]),
            h=lambda s, e, c: np.array([s[0] - e[0] - c[0]]),
            eps1=eps,
            eps2=eps * eps,
        )

    return BenchmarkProblem(
        name="exp1",
        system=system,
        averaged=averaged,
        observables=None,
        observable_names=(),
        state_names=("xi", "eta", "zeta"),
        recommended=VshmmConfig(dt=1e-4, DT=0.1, alphas=(100.0, 10.0),
                                kernel=cosine_kernel()),
        dns_dt=1e-6,
        frozen_fast=frozen,
    )


# ---------------------------------------------------------------------------
# resonant coupled oscillators
# ---------------------------------------------------------------------------

def _osc_f0(x):
    x1, x2, y1, y2 = x
    return np.array([
        -3.0 * x1 * x2 * x2,
        -x2,
        0.5 * y1,
        -y2 + 2.0 * x1 * x1 * y2,
    ])


def _osc_f1(x):
    x1, x2, y1, y2 = x
    return np.array([y2 * y2, -y2, 0.0, x2])


def _osc_f2(x):
    x1, x2, y1, y2 = x
    return np.array([-y1, -y2, x1, x2])


@njit
def _osc_eval(x, inv_eps, level):
    x1, x2, y1, y2 = x[0], x[1], x[2], x[3]
    out = np.empty(4)
    out[0] = -3.0 * x1 * x2 * x2
    out[1] = -x2
    out[2] = 0.5 * y1
    out[3] = -y2 + 2.0 * x1 * x1 * y2
    if level >= 1:
        ie = inv_eps[0]
        out[0] += ie * (y2 * y2)
        out[1] += ie * (-y2)
        out[3] += ie * x2
    if level >= 2:
        ie = inv_eps[1]
        out[0] += ie * (-y1)
        out[1] += ie * (-y2)
        out[2] += ie * x1
        out[3] += ie * x2
    return out


def slow_observables(state: np.ndarray) -> np.ndarray:
    """(I1, I2, theta, cos_phi1) for an oscillator state (x1, x2, y1, y2).

    I1 and I2 are the squared radii of the two oscillators, theta their
    resonance combination x1*x2 + y1*y2, and cos_phi1 = x1/sqrt(I1) the
    first oscillator's phase cosine (undefined at I1 = 0).
    """
    x1, x2, y1, y2 = state
    i1 = x1 * x1 + y1 * y1
    i2 = x2 * x2 + y2 * y2
    th = x1 * x2 + y1 * y2
    if i1 == 0.0:
        raise ValueError("cos(phi_1) undefined at I1 = 0")
    return np.array([i1, i2, th, x1 / math.sqrt(i1)])


def coupled_oscillators(eps: float) -> BenchmarkProblem:
    """Two resonantly coupled harmonic oscillators with three scales.

    Every additive force term is assigned to the scale of its explicit
    eps power, so mixed coefficients like (1/eps**2 + 1/eps) split across
    two levels.  Scales are (eps, eps**2).
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    system = MultiscaleSystem(
        components=(_osc_f0, _osc_f1, _osc_f2),
        scales=(eps, eps * eps),
        initial_state=np.array([1.0, 1.0, 0.0, 0.0]),
        fused_eval=_osc_eval,
    )
    # desk-scaled defaults: alpha_2 ~ (1-eps)/eps puts the constant-step
    # baseline near the 2:1 phase-lattice resonance of the oscillators'
    # slow combination, which the kernel modulation washes out; index mode
    # keeps the stationary sampling uniform
    return BenchmarkProblem(
        name="oscillators",
        system=system,
        averaged=None,
        observables=slow_observables,
        observable_names=("I1", "I2", "theta", "cos_phi1"),
        state_names=("x1", "x2", "y1", "y2"),
        recommended=VshmmConfig(dt=1e-5, DT=0.8, alphas=(180.0, 90.0),
                                m=(1, 1), kernel=cosine_kernel(),
                                phase_mode="index"),
        dns_dt=1e-5,
    )


# ---------------------------------------------------------------------------
# periodic PDE benchmarks
# ---------------------------------------------------------------------------

def _grid(n_modes: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(n_modes) / n_modes


def _gaussian_bump(x: np.ndarray) -> np.ndarray:
    # periodized tails ~ exp(-pi**2) < 1e-4 at the boundary, accepted as-is
    return np.exp(-((x - np.pi) ** 2))


def diffusion_problem(n_modes: int = 2048) -> PdeProblem:
    """Diffusion with a two-scale coefficient and a Gaussian initial bump.

    d(x) = (exp(sin(64x)) + exp(sin(256x))) / 4; the solution relaxes to
    the mean of the initial value, about 0.2821, while a handful of mode
    clusters tied to the coefficient's harmonics decay slowly.
    """
    if n_modes < 1024 or n_modes & (n_modes - 1):
        raise ValueError("n_modes must be a power of two >= 1024")
    x = _grid(n_modes)
    d = 0.25 * (np.exp(np.sin(64.0 * x)) + np.exp(np.sin(256.0 * x)))
    return PdeProblem(
        name="diffusion",
        operator=SpectralOperator("diffusion", d),
        u0=_gaussian_bump(x),
        recommended=VshmmConfig(dt=1e-5, DT=0.25, alphas=(150.0, 18.0, 1.5),
                                kernel=cosine_kernel()),
        dns_dt=1e-6,
        threshold=10.0 ** -2.5,
        gap=3,
        buffer=0,
        recommended_clusters=(
            (0, 1, 2, 3),
            (62, 63, 65, 66),
            (192, 193),
            (255, 257),
        ),
    )


def advection_problem(n_modes: int = 1024) -> PdeProblem:
    """Advection by a positive multiscale velocity field.

    a(x) = exp((0.6 + 0.2*cos(3x)) / (1 + 0.35*sin(64x) + 0.35*sin(256x))) / 4.
    The initial value is the same Gaussian bump as the diffusion problem.
    """
    if n_modes < 512 or n_modes & (n_modes - 1):
        raise ValueError("n_modes must be a power of two >= 512")
    x = _grid(n_modes)
    a = 0.25 * np.exp(
        (0.6 + 0.2 * np.cos(3.0 * x))
        / (1.0 + 0.35 * np.sin(64.0 * x) + 0.35 * np.sin(256.0 * x))
    )
    return PdeProblem(
        name="advection",
        operator=SpectralOperator("advection", a),
        u0=_gaussian_bump(x),
        recommended=VshmmConfig(dt=1e-3, DT=0.9, alphas=(26.0, 9.0, 2.0),
                                kernel=cosine_kernel(), phase_mode="index"),
        dns_dt=1.6e-4,
        threshold=10.0 ** -2.5,
        gap=3,
        buffer=24,
        recommended_clusters=(
            tuple(range(0, 25)),
            tuple(range(40, 89)),
            tuple(range(114, 163)),
            tuple(range(246, 267)),
        ),
    )


def ode_problem_by_name(name: str, eps: float) -> BenchmarkProblem:
    if name == "exp1":
        return exp1_dissipative(eps)
    if name == "oscillators":
        return coupled_oscillators(eps)
    raise ValueError(f"unknown ODE problem {name!r}")


def pde_problem_by_name(name: str, n_modes: Optional[int] = None) -> PdeProblem:
    if name == "diffusion":
        return diffusion_problem(n_modes or 2048)
    if name == "advection":
        return advection_problem(n_modes or 1024)
    raise ValueError(f"unknown PDE problem {name!r}")
