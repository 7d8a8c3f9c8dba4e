"""Dynamical systems with a right-hand side split into scale components.

A system stores the unscaled components f_0 .. f_K together with the scale
parameters eps_1 .. eps_K, so the full right-hand side is

    dx/dt = f_0(x) + sum_k f_k(x) / eps_k .

Keeping the scales separate from the components lets the same problem
definition serve direct simulation, scale-relaxation studies and the
multirate integrator without re-deriving forces.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = ["MultiscaleSystem", "rhs_at_level", "relax_scales"]

RhsComponent = Callable[[np.ndarray], np.ndarray]

# signature of a fused jit evaluator: (x, inv_eps, level) -> dx
FusedEval = Callable[[np.ndarray, np.ndarray, int], np.ndarray]


@dataclass(frozen=True)
class MultiscaleSystem:
    """A split-force system dx/dt = f_0(x) + sum_k f_k(x)/eps_k.

    Attributes
    ----------
    components : tuple of callables
        (f_0, f_1, ..., f_K), each mapping a state vector to an unscaled
        derivative contribution.
    scales : tuple of float
        (eps_1, ..., eps_K), positive and non-increasing.
    initial_state : ndarray
    initial_time : float
    fused_eval : optional callable
        Compiled evaluator ``(x, inv_eps, level) -> dx`` implementing the
        same sum with left-to-right accumulation; used by the integration
        drivers when present.  Must agree with ``components``.
    """

    components: tuple[RhsComponent, ...]
    scales: tuple[float, ...]
    initial_state: np.ndarray
    initial_time: float = 0.0
    fused_eval: Optional[FusedEval] = field(default=None, repr=False)

    def __post_init__(self):
        if len(self.components) != len(self.scales) + 1:
            raise ValueError(
                f"need one scale per fast component: got {len(self.components)} "
                f"components and {len(self.scales)} scales"
            )
        if any(e <= 0.0 for e in self.scales):
            raise ValueError("scales must be positive")
        for a, b in zip(self.scales, self.scales[1:]):
            if b > a:
                raise ValueError("scales must be non-increasing")
        object.__setattr__(
            self, "initial_state",
            np.asarray(self.initial_state, dtype=float),
        )
        object.__setattr__(
            self, "scales", tuple(float(e) for e in self.scales),
        )

    @property
    def n_levels(self) -> int:
        """Index of the deepest level (K): level K is the full system."""
        return len(self.scales)

    @property
    def dimension(self) -> int:
        return self.initial_state.size

    @property
    def inv_scales(self) -> np.ndarray:
        return np.array([1.0 / e for e in self.scales])

    def level_rhs(self, level: int) -> Callable[[np.ndarray], np.ndarray]:
        """Right-hand side truncated at ``level`` as a single callable."""
        self._check_level(level)
        if self.fused_eval is not None:
            fused = self.fused_eval
            inv_eps = self.inv_scales
            return lambda x: fused(x, inv_eps, level)
        comps = self.components[: level + 1]
        inv = [1.0 / e for e in self.scales[:level]]

        def rhs(x: np.ndarray) -> np.ndarray:
            acc = comps[0](x)
            for f, w in zip(comps[1:], inv):
                acc = acc + w * f(x)
            return acc

        return rhs

    def _check_level(self, level: int) -> None:
        if not 0 <= level <= self.n_levels:
            raise ValueError(
                f"level must lie in [0, {self.n_levels}], got {level}"
            )


def rhs_at_level(sys: MultiscaleSystem, level: int, x: np.ndarray) -> np.ndarray:
    """Evaluate f_0(x) + sum_{k<=level} f_k(x)/eps_k."""
    return sys.level_rhs(level)(np.asarray(x, dtype=float))


def relax_scales(sys: MultiscaleSystem, target_scale: float) -> MultiscaleSystem:
    """Replace every scale faster than ``target_scale`` by ``target_scale``.

    The component functions are unchanged; only the eps values move.
    Idempotent at a fixed target; a target below the fastest scale is a
    no-op.
    """
    new = tuple(e if e >= target_scale else float(target_scale)
                for e in sys.scales)
    return replace(sys, scales=new)
