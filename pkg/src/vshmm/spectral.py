"""Sparse Fourier spectral machinery for periodic PDE benchmarks.

Fields live on uniform grids over [0, 2*pi) and are represented by complex
Fourier coefficients with the mean-value normalization: coeff(0) is the
spatial mean, and a real cosine of unit amplitude has coefficients 1/2 at
+-k.  Solutions of the benchmark PDEs concentrate on a few clusters of
wavenumbers; thresholding identifies the clusters and the force splits into
per-cluster components that act as the scale components of the multirate
integrator.

Products are dealiased with the 2/3 rule; this is a discretization choice
of this implementation, fixed so outputs are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from vshmm.multirate import VshmmConfig, VshmmSchedule, build_schedule
from vshmm.steppers import BlowUpError, STEPPER_STAGES, Trajectory

__all__ = [
    "SpectralState",
    "ModeClusters",
    "SpectralOperator",
    "EmptyClusterError",
    "transform",
    "inverse_transform",
    "soft_threshold",
    "cluster_modes",
    "decompose_force",
    "diffusion_rhs",
    "advection_rhs",
    "pde_dns_integrate",
    "pde_vshmm_integrate",
]


class EmptyClusterError(ValueError):
    """Thresholding retained no coefficients."""


@dataclass(frozen=True)
class SpectralState:
    """Fourier coefficients of a real periodic field, in FFT index order.

    ``coeffs[i]`` holds wavenumber i for i <= n/2 and i - n above, the
    layout of ``numpy.fft``.  Real fields make the vector Hermitian:
    coeff(-k) = conj(coeff(k)).
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 1 or c.size < 2 or c.size % 2:
            raise ValueError("coefficient vector must be 1-D of even length")
        object.__setattr__(self, "coeffs", c)

    @property
    def n_modes(self) -> int:
        return self.coeffs.size

    def wavenumbers(self) -> np.ndarray:
        n = self.n_modes
        return (np.fft.fftfreq(n) * n).astype(int)

    def coeff(self, k: int) -> complex:
        return complex(self.coeffs[k % self.n_modes])

    def magnitudes(self) -> np.ndarray:
        return np.abs(self.coeffs)

    def hermitian_defect(self) -> float:
        c = self.coeffs
        return float(np.max(np.abs(c[1:] - np.conj(c[1:][::-1]))))


def transform(field: np.ndarray) -> SpectralState:
    """Forward transform with coeff(0) = spatial mean."""
    u = np.asarray(field, dtype=float)
    return SpectralState(np.fft.fft(u) / u.size)


def inverse_transform(state: SpectralState) -> np.ndarray:
    """Back to grid values; the imaginary residue of a valid state is ~0."""
    return np.fft.ifft(state.coeffs * state.n_modes).real


def _half_from_full(coeffs: np.ndarray) -> np.ndarray:
    n = coeffs.size
    return coeffs[: n // 2 + 1].copy()


def _full_from_half(half: np.ndarray) -> np.ndarray:
    n = 2 * (half.size - 1)
    full = np.empty(n, dtype=complex)
    full[: n // 2 + 1] = half
    full[n // 2 + 1 :] = np.conj(half[1 : n // 2][::-1])
    return full


def soft_threshold(state: SpectralState, lam: float) -> SpectralState:
    """Shrink each coefficient magnitude by lam, preserving phase.

    Modes at or below the shrinkage value vanish; the map is a mode-wise
    contraction and the zero coefficient stays zero.
    """
    if lam < 0:
        raise ValueError("shrinkage value must be >= 0")
    c = state.coeffs
    mag = np.abs(c)
    safe = np.where(mag > 0, mag, 1.0)
    return SpectralState(np.where(mag > lam, c * (1.0 - lam / safe), 0.0))


@dataclass(frozen=True)
class ModeClusters:
    """Disjoint symmetric wavenumber sets ordered by increasing max |k|."""

    clusters: tuple[tuple[int, ...], ...]
    buffer: int = 0

    def __post_init__(self):
        cl = tuple(tuple(sorted(set(int(k) for k in c))) for c in self.clusters)
        if not cl or any(len(c) == 0 for c in cl):
            raise EmptyClusterError("clusters must be nonempty")
        seen: set[int] = set()
        for c in cl:
            if seen.intersection(c):
                raise ValueError("clusters must be pairwise disjoint")
            seen.update(c)
        order = [max(abs(k) for k in c) for c in cl]
        if order != sorted(order):
            raise ValueError("clusters must be ordered by increasing max |k|")
        object.__setattr__(self, "clusters", cl)

    @classmethod
    def from_nonnegative(cls, groups: Sequence[Sequence[int]],
                         buffer: int = 0) -> "ModeClusters":
        """Expand nonnegative wavenumber groups into symmetric +-k sets."""
        sym = []
        for g in groups:
            ks = set()
            for k in g:
                ks.add(int(k))
                ks.add(-int(k))
            sym.append(tuple(sorted(ks)))
        return cls(clusters=tuple(sym), buffer=buffer)

    def __len__(self) -> int:
        return len(self.clusters)

    def union(self) -> tuple[int, ...]:
        out: set[int] = set()
        for c in self.clusters:
            out.update(c)
        return tuple(sorted(out))

    def _half_mask_for(self, ks: Sequence[int], n: int) -> np.ndarray:
        mask = np.zeros(n // 2 + 1, dtype=bool)
        for k in ks:
            if abs(k) > n // 2:
                raise ValueError(f"wavenumber {k} outside grid of {n} modes")
            mask[abs(k)] = True
        return mask

    def half_masks(self, n: int) -> list[np.ndarray]:
        """Per-cluster masks over the nonnegative wavenumbers 0..n/2."""
        return [self._half_mask_for(c, n) for c in self.clusters]

    def cumulative_half_masks(self, n: int) -> list[np.ndarray]:
        """Masks of the union of clusters 0..l, one per truncation level."""
        masks = self.half_masks(n)
        out = []
        acc = np.zeros(n // 2 + 1, dtype=bool)
        for m in masks:
            acc = acc | m
            out.append(acc)
        return out

    def full_mask(self, i: int, n: int) -> np.ndarray:
        """Boolean mask of cluster i over the full FFT layout."""
        mask = np.zeros(n, dtype=bool)
        for k in self.clusters[i]:
            mask[k % n] = True
        return mask


def cluster_modes(state: SpectralState, lam: float, gap: int = 1,
                  buffer: int = 0) -> ModeClusters:
    """Group wavenumbers retained by thresholding into buffered clusters.

    Retains |coeff(k)| > lam, merges retained absolute wavenumbers whose
    difference is at most ``gap``, widens each group by ``buffer`` on both
    sides, and returns the symmetric sets ordered by scale.
    """
    if gap < 1:
        raise ValueError("gap must be >= 1")
    if buffer < 0:
        raise ValueError("buffer must be >= 0")
    n = state.n_modes
    mags = state.magnitudes()
    retained = sorted(
        {abs(int(k)) for k in state.wavenumbers() if mags[int(k) % n] > lam}
    )
    if not retained:
        raise EmptyClusterError(f"no coefficients above threshold {lam}")
    groups: list[list[int]] = [[retained[0]]]
    for k in retained[1:]:
        if k - groups[-1][-1] <= gap:
            groups[-1].append(k)
        else:
            groups.append([k])
    widened = []
    for g in groups:
        lo = max(g[0] - buffer, 0)
        hi = min(g[-1] + buffer, n // 2)
        members = set(g) if buffer == 0 else set(range(lo, hi + 1))
        widened.append(members)
    # buffering may bridge neighbouring groups; merge to keep them disjoint
    merged: list[set[int]] = []
    for g in widened:
        if merged and (min(g) <= max(merged[-1])):
            merged[-1] |= g
        else:
            merged.append(g)
    return ModeClusters.from_nonnegative([sorted(g) for g in merged],
                                         buffer=buffer)


def decompose_force(fhat: SpectralState, clusters: ModeClusters
                    ) -> list[SpectralState]:
    """Split a force spectrum into per-cluster components.

    Component j keeps exactly the coefficients with wavenumber in cluster
    j and is zero elsewhere; coefficients outside every cluster are
    discarded (the sparsity truncation).
    """
    n = fhat.n_modes
    return [
        SpectralState(np.where(clusters.full_mask(i, n), fhat.coeffs, 0.0))
        for i in range(len(clusters))
    ]


class SpectralOperator:
    """Pseudo-spectral right-hand side of a benchmark PDE.

    ``kind`` selects d/dt u = d_x(coef * d_x u) (diffusion) or
    -coef * d_x u (advection); ``coef`` is the coefficient on the grid.
    Derivatives are diagonal in Fourier space, products are formed on the
    grid, and the 2/3-rule mask is fused into the derivative factors.
    """

    def __init__(self, kind: str, coef: np.ndarray):
        if kind not in ("diffusion", "advection"):
            raise ValueError(f"unknown operator kind {kind!r}")
        self.kind = kind
        self.coef = np.asarray(coef, dtype=float)
        self.n = self.coef.size
        if self.n < 4 or self.n % 2:
            raise ValueError("grid size must be even and >= 4")
        n = self.n
        k = np.arange(n // 2 + 1)
        dealias = (k <= n // 3).astype(float)
        self._ik = 1j * k * dealias
        self._ik_n = self._ik * n  # fused with the inverse-transform scaling
        self._dealias = dealias

    def rhs_half(self, uh: np.ndarray) -> np.ndarray:
        """Evaluate on a half spectrum (mean-value normalization)."""
        v = np.fft.irfft(self._ik_n * uh)
        w = np.fft.rfft(self.coef * v) / self.n
        if self.kind == "diffusion":
            return self._ik * w
        return -(self._dealias * w)

    def rhs(self, state: SpectralState) -> SpectralState:
        if state.n_modes != self.n:
            raise ValueError("grid size mismatch")
        half = self.rhs_half(_half_from_full(state.coeffs))
        return SpectralState(_full_from_half(half))


def diffusion_rhs(u_state: SpectralState, d_state: SpectralState
                  ) -> SpectralState:
    """Pseudo-spectral d_x(d(x) * d_x u) with 2/3-rule dealiasing."""
    if u_state.n_modes != d_state.n_modes:
        raise ValueError("grid size mismatch")
    op = SpectralOperator("diffusion", inverse_transform(d_state))
    return op.rhs(u_state)


def advection_rhs(u_state: SpectralState, a_state: SpectralState
                  ) -> SpectralState:
    """Pseudo-spectral -a(x) * d_x u with 2/3-rule dealiasing."""
    if u_state.n_modes != a_state.n_modes:
        raise ValueError("grid size mismatch")
    op = SpectralOperator("advection", inverse_transform(a_state))
    return op.rhs(u_state)


def _step_half(rhs, uh: np.ndarray, h: float, use_rk4: bool) -> np.ndarray:
    if use_rk4:
        k1 = rhs(uh)
        k2 = rhs(uh + (0.5 * h) * k1)
        k3 = rhs(uh + (0.5 * h) * k2)
        k4 = rhs(uh + h * k3)
        return uh + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return uh + h * rhs(uh)


def pde_dns_integrate(problem, dt: float, t_end: float, sample_every: float,
                      scheme: str = "rk4") -> Trajectory:
    """Full-spectrum fixed-step reference run of a PDE benchmark.

    Samples the coefficient vector at multiples of ``sample_every``; the
    cost counter charges every evaluation to level 0 (there is only the
    full right-hand side here).
    """
    if scheme not in STEPPER_STAGES:
        raise ValueError(f"unknown scheme {scheme!r}")
    if not dt <= sample_every <= t_end:
        raise ValueError("need dt <= sample_every <= t_end")
    op: SpectralOperator = problem.operator
    stride = round(sample_every / dt)
    if abs(stride * dt - sample_every) > 1e-9 * sample_every:
        raise ValueError("dt must divide sample_every")
    n_samples = round(t_end / sample_every)
    if abs(n_samples * sample_every - t_end) > 1e-9 * t_end:
        raise ValueError("sample_every must divide t_end")

    uh = np.fft.rfft(np.asarray(problem.u0, dtype=float)) / op.n
    states = np.empty((n_samples + 1, op.n), dtype=complex)
    states[0] = _full_from_half(uh)
    use_rk4 = scheme == "rk4"
    for s in range(n_samples):
        for _ in range(stride):
            uh = _step_half(op.rhs_half, uh, dt, use_rk4)
        if not np.all(np.isfinite(uh)):
            raise BlowUpError((s + 1) * sample_every)
        states[s + 1] = _full_from_half(uh)
    times = sample_every * np.arange(n_samples + 1)
    cost = {0: n_samples * stride * STEPPER_STAGES[scheme]}
    return Trajectory(times=times, states=states, rhs_evals=cost)


def pde_vshmm_integrate(problem, clusters: ModeClusters, cfg: VshmmConfig,
                        t_end: float, scheme: str = "rk4",
                        project_initial: bool = True,
                        sched: Optional[VshmmSchedule] = None) -> Trajectory:
    """Multirate integration with cluster components as scale components.

    Cluster 0 plays the slow force and the higher clusters the stiff
    components (their stiffness lives in the operator itself, so all
    scale parameters are one).  The level-l right-hand side is the full
    force masked to the union of clusters 0..l, re-evaluated and
    re-decomposed at every sub-step; the cluster sets themselves stay
    frozen.  States are sampled at macro times only.
    """
    if scheme not in STEPPER_STAGES:
        raise ValueError(f"unknown scheme {scheme!r}")
    op: SpectralOperator = problem.operator
    n_levels = len(clusters) - 1
    if cfg.n_meso != n_levels:
        raise ValueError(
            f"{len(clusters)} clusters need {n_levels} savings factors, "
            f"got {cfg.n_meso}"
        )
    n_macro = round(t_end / cfg.DT)
    if n_macro < 0 or abs(n_macro * cfg.DT - t_end) > 1e-9 * max(t_end, cfg.DT):
        raise ValueError("t_end must be an integer multiple of DT")
    if sched is None:
        sched = build_schedule(cfg)

    cum_masks = clusters.cumulative_half_masks(op.n)
    uh = np.fft.rfft(np.asarray(problem.u0, dtype=float)) / op.n
    if project_initial:
        uh = np.where(cum_masks[-1], uh, 0.0)

    level_rhs = [
        (lambda mask: lambda v: np.where(mask, op.rhs_half(v), 0.0))(m)
        for m in cum_masks
    ]
    use_rk4 = scheme == "rk4"
    stages = STEPPER_STAGES[scheme]
    counts: dict[int, int] = {lv: 0 for lv in range(n_levels + 1)}
    states = np.empty((n_macro + 1, op.n), dtype=complex)
    states[0] = _full_from_half(uh)
    for nmac in range(n_macro):
        for i in range(len(sched.steps)):
            lv = int(sched.levels[i])
            uh = _step_half(level_rhs[lv], uh, float(sched.steps[i]), use_rk4)
            counts[lv] += stages
        if not np.all(np.isfinite(uh)):
            raise BlowUpError((nmac + 1) * cfg.DT)
        states[nmac + 1] = _full_from_half(uh)
    times = cfg.DT * np.arange(n_macro + 1)
    return Trajectory(times=times, states=states, rhs_evals=counts)
