"""Reference machinery for slow-fast averaging.

For a three-scale system written in slow/fast coordinates

    d(xi)/dt   = f(xi, eta, zeta)
    d(eta)/dt  = g(xi, eta, zeta) / eps_1
    d(zeta)/dt = h(xi, eta, zeta) / eps_2

the dissipative benchmarks have a unique attracting fixed point of the
frozen-xi fast subsystem, and the slow variable is approximated by the
averaged equation d(Xi)/dt = F(Xi) with F the slow force evaluated on the
fast variables' invariant measure.  This module finds such fixed points by
relaxation integration, verifies the implicit-function identity for the
fixed-point sensitivity and the stability of the scale-relaxed subsystem
numerically, and provides the brute-force product-measure quadrature of the
effective force used as an oracle for the oscillatory case.

All Jacobians are central finite differences; the problems are treated as
black-box evaluators throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from vshmm.steppers import Trajectory, rk4_step

__all__ = [
    "FrozenFastSystem",
    "AveragedEquation",
    "NonDissipativeError",
    "DegenerateFastDynamicsError",
    "LemmaReport",
    "SpectrumReport",
    "frozen_fixed_point",
    "verify_lemma_inverse",
    "verify_relaxation_spectrum",
    "effective_force_product",
    "averaged_integrate",
    "slow_variable_check",
]


class NonDissipativeError(RuntimeError):
    """Relaxation integration failed to settle within the step budget."""


class DegenerateFastDynamicsError(RuntimeError):
    """The fast-fast Jacobian block is singular at the evaluation point."""


@dataclass(frozen=True)
class FrozenFastSystem:
    """Fast subsystem with the slow variable held fixed.

    ``g`` and ``h`` are the unscaled fast right-hand sides, each called as
    ``g(xi, eta, zeta)``; evaluation never modifies ``xi``.
    """

    xi: np.ndarray
    g: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    h: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    eps1: float
    eps2: float

    def __post_init__(self):
        object.__setattr__(self, "xi", np.atleast_1d(np.asarray(self.xi, float)))
        if self.eps1 <= 0 or self.eps2 <= 0:
            raise ValueError("scales must be positive")


@dataclass(frozen=True)
class AveragedEquation:
    """Effective slow dynamics d(Xi)/dt = F(Xi)."""

    F: Callable[[np.ndarray], np.ndarray]
    xi0: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "xi0", np.atleast_1d(np.asarray(self.xi0, float)))


@dataclass(frozen=True)
class LemmaReport:
    """Fixed-point sensitivity d(zeta*)/d(eta) computed two ways."""

    fd_jacobian: np.ndarray
    formula_jacobian: np.ndarray

    @property
    def max_abs_diff(self) -> float:
        return float(np.max(np.abs(self.fd_jacobian - self.formula_jacobian)))


@dataclass(frozen=True)
class SpectrumReport:
    """Real parts of the relaxed fast subsystem's Jacobian eigenvalues."""

    eigen_real_parts: np.ndarray

    @property
    def all_negative(self) -> bool:
        return bool(np.all(self.eigen_real_parts < 0.0))


def _fd_jacobian(fun: Callable[[np.ndarray], np.ndarray], z: np.ndarray,
                 rel_step: float = 1e-5) -> np.ndarray:
    """Central-difference Jacobian with step 1e-5 * (1 + |z|)."""
    z = np.asarray(z, dtype=float)
    f0 = np.atleast_1d(fun(z))
    step = rel_step * (1.0 + float(np.linalg.norm(z)))
    jac = np.empty((f0.size, z.size))
    for i in range(z.size):
        zp = z.copy()
        zm = z.copy()
        zp[i] += step
        zm[i] -= step
        jac[:, i] = (np.atleast_1d(fun(zp)) - np.atleast_1d(fun(zm))) / (2 * step)
    return jac


def _fast_rhs(sys: FrozenFastSystem, eps2: float):
    """Scaled fast right-hand side on the stacked (eta, zeta) state."""
    xi = sys.xi

    def rhs(z: np.ndarray, n_eta: int) -> np.ndarray:
        eta, zeta = z[:n_eta], z[n_eta:]
        return np.concatenate([
            np.atleast_1d(sys.g(xi, eta, zeta)) / sys.eps1,
            np.atleast_1d(sys.h(xi, eta, zeta)) / eps2,
        ])

    return rhs


def _residual(sys: FrozenFastSystem, eta: np.ndarray, zeta: np.ndarray) -> float:
    return float(
        np.linalg.norm(np.atleast_1d(sys.g(sys.xi, eta, zeta)))
        + np.linalg.norm(np.atleast_1d(sys.h(sys.xi, eta, zeta)))
    )


def frozen_fixed_point(sys: FrozenFastSystem, eta0, zeta0,
                       relax_to: Optional[float] = None,
                       deriv_tol: float = 1e-10,
                       residual_tol: float = 1e-8,
                       max_steps: int = 5_000_000
                       ) -> tuple[np.ndarray, np.ndarray]:
    """Relax the frozen-xi fast subsystem to its attracting fixed point.

    Integrates d(eta)/dt = g/eps1, d(zeta)/dt = h/eps2 (with eps2 optionally
    relaxed to ``relax_to``) until the scaled derivative norm drops below
    ``deriv_tol``, then polishes with Newton iterations when the local
    Jacobian allows it.  The result is declared a fixed point only if the
    unscaled residual |g| + |h| is below ``residual_tol``.
    """
    eta = np.atleast_1d(np.asarray(eta0, dtype=float))
    zeta = np.atleast_1d(np.asarray(zeta0, dtype=float))
    n_eta = eta.size
    eps2 = float(relax_to) if relax_to is not None else sys.eps2
    rhs = _fast_rhs(sys, eps2)
    fun = lambda z: rhs(z, n_eta)

    z = np.concatenate([eta, zeta])
    steps = 0
    check_every = 25
    while steps < max_steps:
        # stability bound from the local Jacobian, plus a cap on the
        # relative state change so strong nonlinear excursions stay resolved
        jac_norm = float(np.max(np.sum(np.abs(_fd_jacobian(fun, z)), axis=1)))
        speed = float(np.linalg.norm(fun(z)))
        h_step = min(1.0 / max(jac_norm, 1e-12),
                     0.1 * (1.0 + float(np.linalg.norm(z))) / max(speed, 1e-12))
        for _ in range(check_every):
            z = rk4_step(fun, z, 0.0, h_step)
        steps += check_every
        if float(np.linalg.norm(fun(z))) < deriv_tol:
            break
    else:
        raise NonDissipativeError(
            f"no convergence to a fixed point within {max_steps} steps "
            f"(derivative norm {np.linalg.norm(fun(z)):.3g})"
        )

    # Newton polish on the unscaled residual where the Jacobian cooperates
    def unscaled(zz):
        e, c = zz[:n_eta], zz[n_eta:]
        return np.concatenate([
            np.atleast_1d(sys.g(sys.xi, e, c)),
            np.atleast_1d(sys.h(sys.xi, e, c)),
        ])

    for _ in range(10):
        res = unscaled(z)
        if np.linalg.norm(res) < 1e-12:
            break
        jac = _fd_jacobian(unscaled, z)
        try:
            dz = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(dz)):
            break
        z = z + dz

    eta, zeta = z[:n_eta], z[n_eta:]
    if _residual(sys, eta, zeta) >= residual_tol:
        raise NonDissipativeError(
            f"relaxation settled but residual {_residual(sys, eta, zeta):.3g} "
            f"exceeds {residual_tol}"
        )
    return eta, zeta


def _solve_zeta(sys: FrozenFastSystem, eta: np.ndarray, zeta_guess: np.ndarray
                ) -> np.ndarray:
    """Newton-solve h(xi, eta, zeta) = 0 for zeta at fixed eta."""
    zeta = zeta_guess.copy()
    fun = lambda c: np.atleast_1d(sys.h(sys.xi, eta, c))
    for _ in range(50):
        res = fun(zeta)
        if np.linalg.norm(res) < 1e-13:
            return zeta
        jac = _fd_jacobian(fun, zeta)
        try:
            zeta = zeta + np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError as err:
            raise DegenerateFastDynamicsError(
                "singular d(h)/d(zeta) while re-solving the fixed point"
            ) from err
    raise DegenerateFastDynamicsError("zeta re-solve did not converge")


def verify_lemma_inverse(sys: FrozenFastSystem,
                         at: tuple[np.ndarray, np.ndarray],
                         perturbation: float = 1e-5) -> LemmaReport:
    """Check d(zeta*)/d(eta) = -inv(d_zeta h) @ d_eta h at a fixed point.

    The left side is measured by re-solving h = 0 under centrally perturbed
    eta; the right side is assembled from finite-difference Jacobian blocks
    of h.  Exact for h linear in (eta, zeta), so the difference isolates
    finite-difference truncation.
    """
    eta, zeta = (np.atleast_1d(np.asarray(v, float)) for v in at)
    if float(np.linalg.norm(np.atleast_1d(sys.h(sys.xi, eta, zeta)))) >= 1e-8:
        raise ValueError("not a fixed point of the zeta dynamics (|h| >= 1e-8)")

    fd = np.empty((zeta.size, eta.size))
    for i in range(eta.size):
        ep = eta.copy()
        em = eta.copy()
        ep[i] += perturbation
        em[i] -= perturbation
        zp = _solve_zeta(sys, ep, zeta)
        zm = _solve_zeta(sys, em, zeta)
        fd[:, i] = (zp - zm) / (2 * perturbation)

    d_zeta = _fd_jacobian(lambda c: np.atleast_1d(sys.h(sys.xi, eta, c)), zeta)
    d_eta = _fd_jacobian(lambda e: np.atleast_1d(sys.h(sys.xi, e, zeta)), eta)
    try:
        formula = -np.linalg.solve(d_zeta, d_eta)
    except np.linalg.LinAlgError as err:
        raise DegenerateFastDynamicsError(
            "singular d(h)/d(zeta): fast dynamics degenerate at this point"
        ) from err
    return LemmaReport(fd_jacobian=fd, formula_jacobian=formula)


def verify_relaxation_spectrum(sys: FrozenFastSystem,
                               at: tuple[np.ndarray, np.ndarray]
                               ) -> SpectrumReport:
    """Eigenvalue real parts of the equal-scale fast Jacobian at a point.

    The relaxed subsystem runs both fast blocks at 1/eps1; asymptotic
    stability of the shared fixed point shows as strictly negative real
    parts.
    """
    eta, zeta = (np.atleast_1d(np.asarray(v, float)) for v in at)
    n_eta = eta.size
    rhs = _fast_rhs(sys, sys.eps1)
    jac = _fd_jacobian(lambda z: rhs(z, n_eta), np.concatenate([eta, zeta]))
    eig = np.linalg.eigvals(jac)
    return SpectrumReport(eigen_real_parts=np.sort(eig.real))


def effective_force_product(f: Callable, eta_samples: Sequence,
                            zeta_samples: Sequence, Xi) -> np.ndarray:
    """Average f(Xi, eta_n, zeta_m) over all sample pairs.

    Product-measure quadrature of the effective force: the fast variables
    are assumed mutually independent given the slow state, so the invariant
    measure factorizes and the double sum over the two sample lists (with
    1/NM normalization) approximates the double integral.
    """
    if len(eta_samples) == 0 or len(zeta_samples) == 0:
        raise ValueError("sample lists must be nonempty")
    acc = None
    for eta in eta_samples:
        for zeta in zeta_samples:
            val = np.atleast_1d(np.asarray(f(Xi, eta, zeta), dtype=float))
            acc = val if acc is None else acc + val
    return acc / (len(eta_samples) * len(zeta_samples))


def averaged_integrate(eq: AveragedEquation, dt: float, t_end: float
                       ) -> Trajectory:
    """Fixed-step RK4 trajectory of the averaged equation, one sample per step."""
    if not 0 < dt <= t_end:
        raise ValueError("need 0 < dt <= t_end")
    n_steps = round(t_end / dt)
    if abs(n_steps * dt - t_end) > 1e-9 * t_end:
        raise ValueError("dt must divide t_end")
    x = eq.xi0
    states = np.empty((n_steps + 1, x.size))
    states[0] = x
    for i in range(n_steps):
        x = rk4_step(eq.F, x, i * dt, dt)
        states[i + 1] = x
    times = dt * np.arange(n_steps + 1)
    return Trajectory(times=times, states=states, rhs_evals={0: 4 * n_steps})


def slow_variable_check(traj: Trajectory, observable: Callable[[np.ndarray], float],
                        eps1: float) -> float:
    """Max finite-difference derivative of an observable along a trajectory.

    Comparing the bound across runs at different eps classifies observables
    empirically: slow ones stay bounded as eps shrinks, fast ones grow.
    ``eps1`` is carried for report context only.
    """
    if len(traj.times) < 3:
        raise ValueError("need at least 3 samples")
    vals = np.array([observable(s) for s in traj.states])
    rates = np.abs(np.diff(vals) / np.diff(traj.times))
    return float(np.max(rates))
