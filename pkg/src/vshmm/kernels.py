"""Step-size kernels for variable-step multirate integration.

A step kernel is a nonnegative function K on [0, 1], compactly supported in
(0, 1), with unit integral and derivatives vanishing at both endpoints up to
a smoothness order q.  The kernel shapes the mesoscopic step sizes: a step at
kernel phase ``psi`` has size ``alpha * dt * K(psi)``, so the mean step over a
full kernel period is ``alpha * dt``.

Three families are provided:

* ``cosine``: K(t) = 1 + cos(2*pi*(t - 1/2)), smoothness order q = 1.
* ``polynomial``: C^q bump c * t**(q+1) * (1-t)**(q+1), any q >= 0.
* ``constant``: K = 1 on [0, 1].  Degenerate: it fails the endpoint
  condition at order 0 by construction and reproduces constant stepping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import betainc

__all__ = [
    "StepKernel",
    "KernelReport",
    "cosine_kernel",
    "polynomial_kernel",
    "constant_kernel",
    "kernel_by_name",
    "eval_kernel",
    "theta",
    "theta_inverse",
    "verify_kernel",
]

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class StepKernel:
    """Immutable description of a step-size kernel.

    Attributes
    ----------
    family : str
        One of ``"cosine"``, ``"polynomial"``, ``"constant"``.
    q : int
        Smoothness order: endpoint derivatives vanish for r = 0..q.
        The constant family reports q = 0 and violates the condition.
    evaluate : callable
        K as a map [0, 1] -> [0, inf).
    antiderivative : callable
        Theta(t) = integral of K from 0 to t, mapping [0, 1] -> [0, 1].
    """

    family: str
    q: int
    evaluate: Callable[[float], float] = field(repr=False)
    antiderivative: Callable[[float], float] = field(repr=False)


@dataclass(frozen=True)
class KernelReport:
    """Numerical check of the moment and endpoint-regularity conditions."""

    moment_error: float
    regularity_errors: tuple[float, ...]

    def passed(self, moment_tol: float = 1e-12, reg_tol: float = 1e-6) -> bool:
        return self.moment_error < moment_tol and all(
            e < reg_tol for e in self.regularity_errors
        )


def _check_phase(t: float) -> float:
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"kernel phase must lie in [0, 1], got {t}")
    return t


def cosine_kernel() -> StepKernel:
    """K(t) = 1 + cos(2*pi*(t - 1/2)); unit mass, q = 1."""

    def k(t: float) -> float:
        return 1.0 + math.cos(_TWO_PI * (t - 0.5))

    def th(t: float) -> float:
        # antiderivative of 1 - cos(2*pi*t)
        return t - math.sin(_TWO_PI * t) / _TWO_PI

    return StepKernel(family="cosine", q=1, evaluate=k, antiderivative=th)


def polynomial_kernel(q: int) -> StepKernel:
    """C^q bump kernel c * t**(q+1) * (1-t)**(q+1) with unit integral."""
    if q < 0:
        raise ValueError("smoothness order q must be >= 0")
    p = q + 1
    # 1 / Beta(q+2, q+2) normalizes the integral to one
    c = math.gamma(2 * p + 2) / math.gamma(p + 1) ** 2

    def k(t: float) -> float:
        return c * t**p * (1.0 - t) ** p

    def th(t: float) -> float:
        # regularized incomplete beta I_t(q+2, q+2)
        return float(betainc(p + 1, p + 1, t))

    return StepKernel(family="polynomial", q=q, evaluate=k, antiderivative=th)


def constant_kernel() -> StepKernel:
    """Degenerate K = 1: uniform steps, endpoint condition violated at r=0."""
    return StepKernel(
        family="constant",
        q=0,
        evaluate=lambda t: 1.0,
        antiderivative=lambda t: t,
    )


def kernel_by_name(name: str, q: int = 1) -> StepKernel:
    """Build a kernel from its configuration name."""
    if name == "cosine":
        return cosine_kernel()
    if name == "polynomial":
        return polynomial_kernel(q)
    if name == "constant":
        return constant_kernel()
    raise ValueError(f"unknown kernel family {name!r}")


def eval_kernel(kernel: StepKernel, phase: float) -> float:
    """Evaluate K at a phase in [0, 1]."""
    return kernel.evaluate(_check_phase(phase))


def theta(kernel: StepKernel, phase: float) -> float:
    """Antiderivative Theta(phase) = integral of K over [0, phase]."""
    return kernel.antiderivative(_check_phase(phase))


def theta_inverse(kernel: StepKernel, u: float, tol: float = 1e-13) -> float:
    """Invert the antiderivative: return t with Theta(t) = u.

    Theta is monotone (K >= 0), so plain bisection converges
    unconditionally; the bracket is shrunk below ``tol``.
    """
    u = float(u)
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"theta_inverse argument must lie in [0, 1], got {u}")
    if u == 0.0:
        return 0.0
    if u == 1.0:
        return 1.0
    th = kernel.antiderivative
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if th(mid) < u:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _endpoint_derivative(kernel: StepKernel, r: int, order: int, h: float,
                         at_one: bool) -> float:
    """One-sided finite-difference estimate of the r-th derivative at 0 or 1.

    Solves the Vandermonde system for the weights of an (order+1)-point
    stencil on integer nodes, evaluated in the scaled coordinate s = x/h,
    which keeps the system well conditioned for the orders used here.
    """
    nodes = np.arange(order + 1, dtype=float)
    rhs = np.zeros(order + 1)
    rhs[r] = math.factorial(r)
    # V[i, j] = nodes[j]**i, so sum_j w_j p(nodes_j) = p^(r)(0) for deg<=order
    vand = np.vander(nodes, increasing=True).T
    w = np.linalg.solve(vand, rhs)
    sign = -1.0 if at_one else 1.0
    x0 = 1.0 if at_one else 0.0
    vals = np.array([kernel.evaluate(x0 + sign * j * h) for j in range(order + 1)])
    return float((sign**r) * np.dot(w, vals) / h**r)


def verify_kernel(kernel: StepKernel, n_quad: int = 128,
                  fd_step: float = 5e-3) -> KernelReport:
    """Check the moment and regularity conditions numerically.

    The moment error is |integral(K) - 1| from Gauss-Legendre quadrature;
    each regularity error is the larger endpoint magnitude of a
    finite-difference estimate of the r-th derivative, r = 0..q.  Rounding
    noise in the stencils grows like h**-r, so orders beyond r ~ 3 lose
    headroom against the 1e-6 check.
    """
    nodes, weights = np.polynomial.legendre.leggauss(n_quad)
    x = 0.5 * (nodes + 1.0)
    vals = np.array([kernel.evaluate(t) for t in x])
    moment_error = abs(0.5 * float(np.dot(weights, vals)) - 1.0)

    stencil_order = max(8, 2 * kernel.q + 2)
    reg = []
    for r in range(kernel.q + 1):
        if r == 0:
            err = max(abs(kernel.evaluate(0.0)), abs(kernel.evaluate(1.0)))
        else:
            d0 = _endpoint_derivative(kernel, r, stencil_order, fd_step, False)
            d1 = _endpoint_derivative(kernel, r, stencil_order, fd_step, True)
            err = max(abs(d0), abs(d1))
        reg.append(err)
    return KernelReport(moment_error=moment_error, regularity_errors=tuple(reg))
