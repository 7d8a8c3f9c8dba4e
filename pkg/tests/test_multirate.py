import numpy as np
import pytest

from vshmm.kernels import constant_kernel, cosine_kernel, polynomial_kernel
from vshmm.multirate import (
    VshmmConfig,
    build_schedule,
    macro_step,
    torus_sampling_diagnostic,
    vshmm_integrate,
)
from vshmm.problems import exp1_dissipative
from vshmm.steppers import rk4_step
from vshmm.systems import MultiscaleSystem


def basic_config(**kw):
    defaults = dict(dt=1e-3, DT=1.0, alphas=(70.0, 29.0), m=(1, 5),
                    kernel=cosine_kernel())
    defaults.update(kw)
    return VshmmConfig(**defaults)


def random_config(rng):
    n_levels = rng.integers(1, 4)
    alphas = np.sort(rng.uniform(1.5, 200.0, n_levels))[::-1]
    alphas = tuple(float(a) for a in alphas)
    dt = 10.0 ** rng.uniform(-5, -2)
    cycles = rng.uniform(3, 60)
    DT = dt * (1.0 + sum(alphas)) * cycles
    kernel = (cosine_kernel(), polynomial_kernel(2))[rng.integers(0, 2)]
    mode = ("time", "index")[rng.integers(0, 2)]
    return VshmmConfig(dt=dt, DT=DT, alphas=alphas, kernel=kernel,
                       variable_steps=bool(rng.integers(0, 2)),
                       phase_mode=mode)


class TestConfigValidation:
    def test_alpha_ordering(self):
        with pytest.raises(ValueError):
            basic_config(alphas=(10.0, 20.0), m=(1, 1))

    def test_alpha_above_one(self):
        with pytest.raises(ValueError):
            basic_config(alphas=(10.0, 0.5), m=(1, 1))

    def test_dt_too_large(self):
        with pytest.raises(ValueError):
            basic_config(DT=0.05)

    def test_m_first_entry(self):
        with pytest.raises(ValueError):
            basic_config(m=(2, 4))

    def test_m_monotone(self):
        with pytest.raises(ValueError):
            basic_config(m=(1, 5), alphas=(70.0, 29.0, 2.0))

    def test_phase_mode(self):
        with pytest.raises(ValueError):
            basic_config(phase_mode="spooky")


class TestBuildSchedule:
    def test_exactness_spec_example(self):
        sched = build_schedule(basic_config(phase_mode="index"))
        assert sched.n_cycles == 10
        assert sched.total == pytest.approx(1.0, rel=1e-14)
        assert np.all(sched.steps > 0)

    def test_index_mode_means(self):
        # exp1 settings reproduce the reported mean step sizes within 2%
        cfg = VshmmConfig(dt=1e-4, DT=0.1, alphas=(100.0, 10.0),
                          kernel=cosine_kernel(), phase_mode="index")
        sched = build_schedule(cfg)
        assert sched.mean_step(0) == pytest.approx(1e-2, rel=0.02)
        assert sched.mean_step(1) == pytest.approx(1e-3, rel=0.02)

    def test_randomized_exactness(self):
        rng = np.random.default_rng(2024)
        for _ in range(100):
            cfg = random_config(rng)
            sched = build_schedule(cfg)
            assert abs(sched.total - cfg.DT) <= 1e-12 * cfg.DT
            assert np.all(sched.steps > 0)
            counts = [int(np.sum(sched.levels == lv))
                      for lv in range(cfg.n_meso + 1)]
            assert len(set(counts)) == 1

    def test_cycle_level_order(self):
        sched = build_schedule(basic_config())
        K = 2
        for i in range(sched.n_cycles):
            levels, steps = sched.cycle(i)
            assert list(levels) == [2, 1, 0]
            assert steps[0] == pytest.approx(1e-3)

    def test_constant_kernel_matches_uniform(self):
        for mode in ("time", "index"):
            cv = basic_config(kernel=constant_kernel(), variable_steps=True,
                              phase_mode=mode)
            cu = basic_config(kernel=constant_kernel(), variable_steps=False,
                              phase_mode=mode)
            assert np.array_equal(build_schedule(cv).steps,
                                  build_schedule(cu).steps)

    def test_determinism(self):
        a = build_schedule(basic_config(m=None))
        b = build_schedule(basic_config(m=None))
        assert np.array_equal(a.steps, b.steps)
        assert np.array_equal(a.levels, b.levels)

    def test_time_mode_default_subperiods(self):
        cfg = VshmmConfig(dt=1e-4, DT=0.1, alphas=(100.0, 10.0),
                          kernel=cosine_kernel())
        assert build_schedule(cfg).m == (1, 10)

    def test_index_mode_explicit_m_divides(self):
        cfg = basic_config(phase_mode="index", m=(1, 3))
        sched = build_schedule(cfg)
        assert sched.n_cycles % 3 == 0

    def test_normalization_warning(self):
        # explicit subperiods force the cycle count far above the natural one
        cfg = VshmmConfig(dt=1e-3, DT=1.49e-1, alphas=(70.0, 29.0), m=(1, 5),
                          kernel=cosine_kernel(), phase_mode="index")
        with pytest.warns(UserWarning, match="normalization"):
            build_schedule(cfg)


class TestMacroStep:
    def test_zero_field_state_unchanged(self):
        sys = MultiscaleSystem(
            components=tuple(lambda x: np.zeros(2) for _ in range(3)),
            scales=(1e-1, 1e-2), initial_state=np.array([1.0, -2.0]))
        sched = build_schedule(basic_config())
        out = macro_step(sys, sys.initial_state, 0.0, sched)
        assert np.array_equal(out, [1.0, -2.0])
        assert sched.total == pytest.approx(1.0, rel=1e-13)

    def test_reduces_to_plain_composition_when_fast_vanishes(self):
        # K=1 with f_1 = 0: macro_step equals hand-rolled base stepping of
        # f_0 over the h_1 sequence
        f0 = lambda x: np.array([np.sin(x[0]) - 0.3 * x[0]])
        sys = MultiscaleSystem(components=(f0, lambda x: np.zeros(1)),
                               scales=(1e-2,),
                               initial_state=np.array([0.7]))
        cfg = VshmmConfig(dt=1e-3, DT=0.5, alphas=(40.0,),
                          kernel=cosine_kernel())
        sched = build_schedule(cfg)
        out = macro_step(sys, sys.initial_state, 0.0, sched)
        x = sys.initial_state.copy()
        t = 0.0
        for lv, h in zip(sched.levels, sched.steps):
            rhs = f0 if lv == 0 else (lambda v: f0(v) + 0.0)
            x = rk4_step(rhs, x, t, float(h))
            t += h
        assert abs(out[0] - x[0]) < 1e-14

    def test_constant_baseline_matches_hand_rolled_splitting(self):
        # variable_steps=False with alpha barely above 1 is plain sequential
        # splitting with equal steps
        prob = exp1_dissipative(1e-1)
        cfg = VshmmConfig(dt=1e-3, DT=0.1, alphas=(1.0 + 1e-9,),
                          kernel=cosine_kernel(), variable_steps=False)
        sys2 = MultiscaleSystem(
            components=(prob.system.components[0],
                        lambda x: prob.system.components[1](x)
                        + prob.system.components[2](x) / prob.system.scales[1]
                        * prob.system.scales[0]),
            scales=(prob.system.scales[0],),
            initial_state=prob.system.initial_state)
        sched = build_schedule(cfg)
        out = macro_step(sys2, sys2.initial_state, 0.0, sched)
        rhs_full = sys2.level_rhs(1)
        rhs_slow = sys2.level_rhs(0)
        x = sys2.initial_state.copy()
        for lv, h in zip(sched.levels, sched.steps):
            x = rk4_step(rhs_full if lv == 1 else rhs_slow, x, 0.0, float(h))
        np.testing.assert_allclose(out, x, rtol=1e-14, atol=1e-14)

    def test_jit_matches_python(self):
        prob = exp1_dissipative(1e-2)
        sched = build_schedule(prob.recommended)
        out_jit = macro_step(prob.system, prob.system.initial_state, 0.0, sched)
        plain = MultiscaleSystem(components=prob.system.components,
                                 scales=prob.system.scales,
                                 initial_state=prob.system.initial_state)
        out_py = macro_step(plain, plain.initial_state, 0.0, sched)
        np.testing.assert_allclose(out_jit, out_py, rtol=1e-12, atol=1e-12)


class TestVshmmIntegrate:
    def test_zero_macro_steps(self):
        prob = exp1_dissipative(1e-2)
        traj = vshmm_integrate(prob.system, prob.recommended, 0.0)
        assert len(traj.times) == 1
        assert np.array_equal(traj.states[0], prob.system.initial_state)

    def test_t_end_must_be_multiple(self):
        prob = exp1_dissipative(1e-2)
        with pytest.raises(ValueError):
            vshmm_integrate(prob.system, prob.recommended, 0.25)

    def test_sampling_times_no_drift(self):
        prob = exp1_dissipative(1e-2)
        traj = vshmm_integrate(prob.system, prob.recommended, 2.0)
        np.testing.assert_array_equal(traj.times, 0.1 * np.arange(21))

    def test_per_level_counts_equal(self):
        prob = exp1_dissipative(1e-2)
        traj = vshmm_integrate(prob.system, prob.recommended, 0.5)
        counts = set(traj.rhs_evals.values())
        assert len(counts) == 1

    def test_trajectory_determinism(self):
        prob = exp1_dissipative(1e-2)
        a = vshmm_integrate(prob.system, prob.recommended, 0.3)
        b = vshmm_integrate(prob.system, prob.recommended, 0.3)
        assert np.array_equal(a.states, b.states)


class TestTorusDiagnostic:
    BETA = float(np.sqrt(1.01))

    @staticmethod
    def wrapped_line_distance(pts, beta, max_wraps):
        """Distance from each point to the wrapped line v = beta*u (mod 1)."""
        out = []
        scale = np.sqrt(1.0 + beta * beta)
        for u, v in pts:
            best = np.inf
            for k in range(max_wraps + 1):
                r = (v - beta * (u + k)) % 1.0
                r = min(r, 1.0 - r)
                best = min(best, r / scale)
            out.append(best)
        return np.array(out)

    @staticmethod
    def covering_radius(pts, n=64):
        g = (np.arange(n) + 0.5) / n
        gx, gy = np.meshgrid(g, g)
        grid = np.stack([gx.ravel(), gy.ravel()], axis=1)
        d = np.abs(grid[:, None, :] - pts[None, :, :])
        d = np.minimum(d, 1.0 - d)
        return float(np.sqrt((d ** 2).sum(-1)).min(axis=1).max())

    def test_constant_mode_collinear(self):
        pts = torus_sampling_diagnostic(self.BETA, 60, cosine_kernel(), False)
        dist = self.wrapped_line_distance(pts, self.BETA, max_wraps=12)
        assert dist.max() < 1e-10

    def test_variable_covers_better(self):
        const = torus_sampling_diagnostic(self.BETA, 60, cosine_kernel(), False)
        var = torus_sampling_diagnostic(self.BETA, 60, cosine_kernel(), True)
        assert self.covering_radius(var) < self.covering_radius(const)

    def test_single_point(self):
        for variable in (False, True):
            pts = torus_sampling_diagnostic(self.BETA, 1, cosine_kernel(),
                                            variable)
            assert np.array_equal(pts, [[0.0, 0.0]])

    def test_validation(self):
        with pytest.raises(ValueError):
            torus_sampling_diagnostic(self.BETA, 0, cosine_kernel(), True)
        with pytest.raises(ValueError):
            torus_sampling_diagnostic(-1.0, 5, cosine_kernel(), True)
