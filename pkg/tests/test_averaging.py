import math

import numpy as np
import pytest

from vshmm.averaging import (
    AveragedEquation,
    DegenerateFastDynamicsError,
    FrozenFastSystem,
    averaged_integrate,
    effective_force_product,
    frozen_fixed_point,
    slow_variable_check,
    verify_lemma_inverse,
    verify_relaxation_spectrum,
)
from vshmm.problems import exp1_dissipative
from vshmm.steppers import Trajectory, dns_integrate


@pytest.fixture(scope="module")
def exp1():
    return exp1_dissipative(1e-2)


@pytest.fixture(scope="module")
def frozen5(exp1):
    return exp1.frozen_fast(5.0)


class TestFrozenFixedPoint:
    def test_exp1_xi5(self, frozen5):
        eta, zeta = frozen_fixed_point(frozen5, [-10.0], [5.0])
        assert eta[0] == pytest.approx(10.0, abs=1e-8)
        assert zeta[0] == pytest.approx(-5.0, abs=1e-8)

    def test_exp1_origin(self, exp1):
        sys = exp1.frozen_fast(0.0)
        eta, zeta = frozen_fixed_point(sys, [0.0], [0.0])
        assert abs(eta[0]) < 1e-10 and abs(zeta[0]) < 1e-10

    def test_relaxed_scale_same_point(self, frozen5):
        # equal-scale relaxation reaches the same fixed point
        eta_r, zeta_r = frozen_fixed_point(frozen5, [-10.0], [5.0],
                                           relax_to=frozen5.eps1)
        assert eta_r[0] == pytest.approx(10.0, abs=1e-6)
        assert zeta_r[0] == pytest.approx(-5.0, abs=1e-6)

    def test_residual_recheckable(self, frozen5):
        eta, zeta = frozen_fixed_point(frozen5, [-10.0], [5.0])
        res = (np.linalg.norm(frozen5.g(frozen5.xi, eta, zeta))
               + np.linalg.norm(frozen5.h(frozen5.xi, eta, zeta)))
        assert res < 1e-8

    @pytest.mark.parametrize("xi", [1.0, 2.0, 5.0])
    def test_relaxation_equivalence_across_xi(self, exp1, xi):
        sys = exp1.frozen_fast(xi)
        orig = frozen_fixed_point(sys, [-1.0], [1.0])
        relaxed = frozen_fixed_point(sys, [-1.0], [1.0], relax_to=sys.eps1)
        assert abs(orig[0][0] - relaxed[0][0]) < 1e-6
        assert abs(orig[1][0] - relaxed[1][0]) < 1e-6


class TestLemmaInverse:
    def test_exp1_linear_h(self, frozen5):
        rep = verify_lemma_inverse(frozen5, (np.array([10.0]), np.array([-5.0])))
        assert rep.formula_jacobian[0, 0] == pytest.approx(-1.0, abs=1e-10)
        assert rep.fd_jacobian[0, 0] == pytest.approx(-1.0, abs=1e-10)
        assert rep.max_abs_diff < 1e-10

    def test_generic_linear_h(self):
        sys = FrozenFastSystem(
            xi=np.zeros(1),
            g=lambda s, e, c: np.zeros(1),
            h=lambda s, e, c: np.array([2.0 * e[0] - 3.0 * c[0] + 1.0]),
            eps1=1e-1, eps2=1e-2)
        # zeta*(eta) = (2 eta + 1)/3
        rep = verify_lemma_inverse(sys, (np.array([1.0]), np.array([1.0])))
        assert rep.max_abs_diff < 1e-8

    def test_quadratic_h(self):
        # h = -zeta + eta^2 so zeta*(eta) = eta^2, slope 2 at eta = 1
        sys = FrozenFastSystem(
            xi=np.zeros(1),
            g=lambda s, e, c: np.zeros(1),
            h=lambda s, e, c: np.array([-c[0] + e[0] ** 2]),
            eps1=1e-1, eps2=1e-2)
        rep = verify_lemma_inverse(sys, (np.array([1.0]), np.array([1.0])))
        assert rep.formula_jacobian[0, 0] == pytest.approx(2.0, abs=1e-6)
        assert rep.fd_jacobian[0, 0] == pytest.approx(2.0, abs=1e-6)
        assert rep.max_abs_diff < 1e-6

    def test_not_a_fixed_point(self, frozen5):
        with pytest.raises(ValueError):
            verify_lemma_inverse(frozen5, (np.array([3.0]), np.array([3.0])))

    def test_degenerate_jacobian(self):
        sys = FrozenFastSystem(
            xi=np.zeros(1),
            g=lambda s, e, c: np.zeros(1),
            h=lambda s, e, c: np.array([e[0] ** 2]),  # no zeta dependence
            eps1=1e-1, eps2=1e-2)
        with pytest.raises(DegenerateFastDynamicsError):
            verify_lemma_inverse(sys, (np.zeros(1), np.zeros(1)))


class TestRelaxationSpectrum:
    def test_exp1_stable(self, frozen5):
        rep = verify_relaxation_spectrum(frozen5,
                                         (np.array([10.0]), np.array([-5.0])))
        assert rep.all_negative

    def test_linear_diagonal(self):
        sys = FrozenFastSystem(
            xi=np.zeros(1),
            g=lambda s, e, c: -e,
            h=lambda s, e, c: -2.0 * c,
            eps1=1.0, eps2=1.0)
        rep = verify_relaxation_spectrum(sys, (np.zeros(1), np.zeros(1)))
        np.testing.assert_allclose(rep.eigen_real_parts, [-2.0, -1.0],
                                   atol=1e-6)
        assert rep.all_negative

    def test_unstable_detected(self):
        sys = FrozenFastSystem(
            xi=np.zeros(1),
            g=lambda s, e, c: +e,
            h=lambda s, e, c: -c,
            eps1=1.0, eps2=1.0)
        rep = verify_relaxation_spectrum(sys, (np.zeros(1), np.zeros(1)))
        assert not rep.all_negative
        assert rep.eigen_real_parts.max() == pytest.approx(1.0, abs=1e-6)


class TestEffectiveForceProduct:
    def test_constant_integrand(self):
        f = lambda Xi, e, c: np.array([Xi])
        out = effective_force_product(f, [1.0, 2.0], [3.0, 4.0], 7.0)
        assert out[0] == pytest.approx(7.0)

    def test_product_of_zero_mean_samples(self):
        f = lambda Xi, e, c: np.array([e * c])
        etas = [-2.0, -1.0, 1.0, 2.0]
        zetas = [-0.5, 0.5]
        out = effective_force_product(f, etas, zetas, 0.0)
        assert abs(out[0]) < 1e-12

    def test_matches_dense_trapezoid_quadrature(self):
        # f = sin(Xi + eta + zeta) over two independent uniform circle phases
        Xi = 0.7
        f = lambda s, e, c: np.array([math.sin(s + e + c)])
        n = 256
        phases = 2.0 * np.pi * np.arange(n) / n
        prod = effective_force_product(f, list(phases), list(phases), Xi)

        m = 1024
        g = 2.0 * np.pi * np.arange(m + 1) / m
        vals = np.sin(Xi + g[None, :] + g[:, None])
        w = np.ones(m + 1)
        w[0] = w[-1] = 0.5
        quad = (w[None, :] * w[:, None] * vals).sum() / m**2
        assert prod[0] == pytest.approx(quad, abs=1e-6)

    def test_symmetric_under_list_order(self):
        rng = np.random.default_rng(5)
        etas = list(rng.uniform(-1, 1, 17))
        zetas = list(rng.uniform(-1, 1, 13))
        f = lambda s, e, c: np.array([math.sin(s + 2 * e - c) + e * c])
        a = effective_force_product(f, etas, zetas, 0.3)
        b = effective_force_product(f, etas[::-1], zetas[::-1], 0.3)
        assert abs(a[0] - b[0]) < 1e-13

    def test_empty_samples(self):
        with pytest.raises(ValueError):
            effective_force_product(lambda s, e, c: 0.0, [], [1.0], 0.0)


class TestAveragedIntegrate:
    def test_zero_force_constant(self):
        eq = AveragedEquation(F=lambda x: np.zeros(1), xi0=np.array([3.0]))
        traj = averaged_integrate(eq, 0.1, 1.0)
        assert np.array_equal(traj.states[:, 0], np.full(11, 3.0))

    def test_exponential_decay(self):
        eq = AveragedEquation(F=lambda x: -x, xi0=np.array([1.0]))
        traj = averaged_integrate(eq, 1e-2, 2.0)
        assert traj.states[-1, 0] == pytest.approx(math.exp(-2.0), abs=1e-8)

    def test_exp1_averaged_rhs_value(self, exp1):
        # F(5) = sin(10) - 5
        val = exp1.averaged.F(np.array([5.0]))[0]
        assert val == pytest.approx(math.sin(10.0) - 5.0, abs=1e-14)
        assert val == pytest.approx(-5.5440, abs=1e-4)

    def test_row_count(self, exp1):
        traj = averaged_integrate(exp1.averaged, 1e-2, 5.0)
        assert len(traj.times) == 501


class TestSlowVariableCheck:
    def test_constant_observable(self):
        traj = Trajectory(times=np.linspace(0, 1, 11),
                          states=np.random.default_rng(0).normal(size=(11, 2)))
        assert slow_variable_check(traj, lambda s: 4.2, 1e-2) == 0.0

    def test_exp1_classification(self):
        # xi's derivative bound is eps-independent; zeta's grows like 1/eps
        bounds = {}
        for eps in (1e-1, 1e-2):
            sys = exp1_dissipative(eps).system
            traj = dns_integrate(sys, 1e-6, 0.05, 1e-5)
            bounds[eps] = (
                slow_variable_check(traj, lambda s: s[0], eps),
                slow_variable_check(traj, lambda s: s[2], eps),
            )
        xi_ratio = bounds[1e-2][0] / bounds[1e-1][0]
        zeta_ratio = bounds[1e-2][1] / bounds[1e-1][1]
        assert xi_ratio < 3.0
        assert zeta_ratio > 30.0

    def test_needs_three_samples(self):
        traj = Trajectory(times=np.array([0.0, 1.0]), states=np.zeros((2, 1)))
        with pytest.raises(ValueError):
            slow_variable_check(traj, lambda s: s[0], 1e-2)
