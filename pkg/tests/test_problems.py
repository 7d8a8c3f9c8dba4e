import math

import numpy as np
import pytest

from vshmm.averaging import frozen_fixed_point
from vshmm.problems import (
    advection_problem,
    coupled_oscillators,
    diffusion_problem,
    exp1_dissipative,
    ode_problem_by_name,
    pde_problem_by_name,
    slow_observables,
)
from vshmm.systems import rhs_at_level


class TestExp1:
    def test_rhs_at_initial_state(self):
        sys = exp1_dissipative(1e-2).system
        out = rhs_at_level(sys, 2, sys.initial_state)
        # slow: sin(0) - 0; eta: (75-100+25)/eps = 0; zeta: 10/eps^2
        assert out[0] == pytest.approx(0.0, abs=1e-14)
        assert out[1] == pytest.approx(0.0, abs=1e-10)
        assert out[2] == pytest.approx(1e5, rel=1e-12)

    def test_fixed_point_map(self):
        prob = exp1_dissipative(1e-2)
        eta, zeta = frozen_fixed_point(prob.frozen_fast(5.0), [-10.0], [5.0])
        assert eta[0] == pytest.approx(10.0, abs=1e-8)
        assert zeta[0] == pytest.approx(-5.0, abs=1e-8)

    def test_averaged_rhs_value(self):
        prob = exp1_dissipative(1e-2)
        assert prob.averaged.F(np.array([5.0]))[0] == pytest.approx(
            math.sin(10.0) - 5.0, abs=1e-14)

    def test_eps_domain(self):
        with pytest.raises(ValueError):
            exp1_dissipative(1.5)

    def test_relaxation_identity(self):
        # original (eps, eps^2) and relaxed (eps, eps) frozen systems reach
        # the same fixed point
        prob = exp1_dissipative(1e-2)
        frozen = prob.frozen_fast(5.0)
        orig = frozen_fixed_point(frozen, [-10.0], [5.0])
        relaxed = frozen_fixed_point(frozen, [-10.0], [5.0], relax_to=1e-2)
        assert abs(orig[0][0] - relaxed[0][0]) < 1e-6
        assert abs(orig[1][0] - relaxed[1][0]) < 1e-6


class TestOscillators:
    def test_rhs_terms_at_unit_state(self):
        sys = coupled_oscillators(0.1).system
        out = rhs_at_level(sys, 2, np.array([1.0, 0.0, 0.0, 0.0]))
        # dy1/dt = x1/eps^2 + y1/2 = 100; dx1/dt has no contribution (y1=y2=0)
        assert out[2] == pytest.approx(100.0, rel=1e-12)
        assert out[0] == pytest.approx(0.0, abs=1e-12)

    def test_zero_state(self):
        sys = coupled_oscillators(0.1).system
        out = rhs_at_level(sys, 2, np.zeros(4))
        assert np.array_equal(out, np.zeros(4))

    def test_observables_unit_state(self):
        np.testing.assert_allclose(
            slow_observables(np.array([1.0, 0.0, 0.0, 0.0])),
            [1.0, 0.0, 0.0, 1.0])

    def test_observables_mixed_state(self):
        np.testing.assert_allclose(
            slow_observables(np.array([0.0, 0.0, 1.0, 1.0])),
            [1.0, 1.0, 1.0, 0.0])

    def test_radial_invariance(self):
        rng = np.random.default_rng(1)
        x1, y1 = 0.6, -0.8
        for _ in range(5):
            a = rng.uniform(0, 2 * np.pi)
            xr = x1 * math.cos(a) - y1 * math.sin(a)
            yr = x1 * math.sin(a) + y1 * math.cos(a)
            i1 = slow_observables(np.array([xr, 0.3, yr, 0.1]))[0]
            assert i1 == pytest.approx(x1 * x1 + y1 * y1, abs=1e-12)

    def test_zero_radius_signalled(self):
        with pytest.raises(ValueError):
            slow_observables(np.array([0.0, 1.0, 0.0, 1.0]))


class TestDiffusionProblem:
    def test_coefficient_at_origin(self):
        prob = diffusion_problem(1024)
        assert prob.operator.coef[0] == pytest.approx(0.5)

    def test_initial_peak(self):
        prob = diffusion_problem(1024)
        x = 2 * np.pi * np.arange(1024) / 1024
        assert prob.u0[np.argmin(np.abs(x - np.pi))] == pytest.approx(1.0)

    def test_initial_mean(self):
        # quadrature value sqrt(pi)/(2*pi) for the periodized Gaussian
        prob = diffusion_problem(2048)
        assert prob.u0.mean() == pytest.approx(math.sqrt(math.pi) / (2 * math.pi),
                                               abs=1e-5)

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            diffusion_problem(512)
        with pytest.raises(ValueError):
            diffusion_problem(1500)


class TestAdvectionProblem:
    def test_velocity_at_origin(self):
        prob = advection_problem(1024)
        assert prob.operator.coef[0] == pytest.approx(0.25 * math.exp(0.8),
                                                      rel=1e-12)

    def test_velocity_positive(self):
        prob = advection_problem(1024)
        assert prob.operator.coef.min() > 0.0

    def test_recommended_clusters_shape(self):
        prob = advection_problem(1024)
        k0, k1, k2, k3 = prob.recommended_clusters
        assert k0 == tuple(range(0, 25))
        assert k1 == tuple(range(40, 89))
        assert k2 == tuple(range(114, 163))
        assert k3 == tuple(range(246, 267))

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            advection_problem(256)


def test_problem_lookup():
    assert ode_problem_by_name("exp1", 1e-2).name == "exp1"
    assert ode_problem_by_name("oscillators", 1e-2).name == "oscillators"
    assert pde_problem_by_name("diffusion").n_modes == 2048
    assert pde_problem_by_name("advection", 512).n_modes == 512
    with pytest.raises(ValueError):
        ode_problem_by_name("lorenz", 1e-2)
    with pytest.raises(ValueError):
        pde_problem_by_name("burgers")
