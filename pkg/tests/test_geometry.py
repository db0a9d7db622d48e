"""Potentials, dual coordinates, curvature, and divergence identities."""

import math

import numpy as np
import pytest

from mixfam.components import Cauchy, ComponentBasis, Gaussian
from mixfam import geometry as geo
from mixfam.divergence import mc_kl_extended
from mixfam.errors import (
    AlphaOutOfRange,
    BasisMismatch,
    DivergentIntegralWarning,
    SimplexViolation,
    UnsupportedPair,
)
from mixfam.mixture import Mixture, convex_combine

from conftest import random_open_simplex, random_pmf_pair


def direct_kl(m1: Mixture, m2: Mixture) -> float:
    """Independent oracle: KL between counting mixtures from raw atom sums."""
    a, b = m1.atom_pmf(), m2.atom_pmf()
    mask = a > 0
    return float(np.sum(a[mask] * np.log(a[mask] / b[mask])))


class TestExactPotentials:
    def test_shannon_information_values(self, delta_basis):
        oracle = geo.ExactCategoricalOracle(delta_basis)
        m_half = Mixture(delta_basis, [0.5, 0.5])
        m_quarter = Mixture(delta_basis, [0.25, 0.75])
        assert geo.shannon_information(m_half, oracle).value == pytest.approx(
            -math.log(2), abs=1e-15
        )
        expected = 0.25 * math.log(0.25) + 0.75 * math.log(0.75)
        assert geo.shannon_information(m_quarter, oracle).value == pytest.approx(
            expected, abs=1e-15
        )

    def test_cross_entropy_single_atom(self, delta_basis):
        oracle = geo.ExactCategoricalOracle(delta_basis)
        m = Mixture(delta_basis, [0.25, 0.75])
        got = geo.cross_entropy(delta_basis.components[0], m, oracle)
        assert got.value == pytest.approx(-math.log(0.25), abs=1e-15)
        # and the dual potential is exactly that same cross-entropy
        assert geo.dual_potential(m, oracle).value == pytest.approx(got.value, abs=1e-15)

    def test_self_cross_entropy_is_entropy(self, pmf_basis):
        oracle = geo.ExactCategoricalOracle(pmf_basis)
        m = Mixture(pmf_basis, [0.6, 0.3, 0.1])
        h = -geo.shannon_information(m, oracle).value
        assert geo.cross_entropy(m, m, oracle).value == pytest.approx(h, abs=1e-14)

    def test_natural_parameters_closed_form(self, delta_basis):
        oracle = geo.ExactCategoricalOracle(delta_basis)
        m = Mixture(delta_basis, [0.25, 0.75])
        dc = geo.natural_parameters(m, oracle)
        assert dc.theta[0] == pytest.approx(math.log(3.0), abs=1e-14)
        sym = Mixture(delta_basis, [0.5, 0.5])
        assert geo.natural_parameters(sym, oracle).theta[0] == pytest.approx(0.0, abs=1e-15)

    def test_theta_matches_finite_difference_of_fstar(self, pmf_basis):
        oracle = geo.ExactCategoricalOracle(pmf_basis)
        m = Mixture(pmf_basis, [0.5, 0.2, 0.3])
        theta, _ = oracle.theta(m.eta)
        h = 1e-6
        for i in range(m.eta.size):
            e = np.zeros(m.eta.size)
            e[i] = h
            fd = (oracle.fstar(m.eta + e)[0] - oracle.fstar(m.eta - e)[0]) / (2 * h)
            assert fd == pytest.approx(theta[i], abs=1e-8)

    def test_young_gap_zero(self, pmf_basis):
        oracle = geo.ExactCategoricalOracle(pmf_basis)
        rng = np.random.default_rng(1)
        for _ in range(25):
            m = Mixture(pmf_basis, random_open_simplex(rng, 3))
            assert abs(geo.young_gap(m, oracle).value) < 1e-12

    def test_young_gap_worked_example(self, delta_basis):
        # F + F* - <theta, eta> with the closed-form pieces
        oracle = geo.ExactCategoricalOracle(delta_basis)
        m = Mixture(delta_basis, [0.25, 0.75])
        f_val = -math.log(0.25)
        fstar = 0.25 * math.log(0.25) + 0.75 * math.log(0.75)
        inner = 0.75 * math.log(3.0)
        assert f_val + fstar - inner == pytest.approx(0.0, abs=1e-12)
        assert geo.young_gap(m, oracle).value == pytest.approx(0.0, abs=1e-12)


class TestExactCurvature:
    def test_fisher_closed_form_binary(self, delta_basis):
        oracle = geo.ExactCategoricalOracle(delta_basis)
        g_half = geo.fisher_information(Mixture(delta_basis, [0.5, 0.5]), oracle)
        assert g_half.value[0, 0] == pytest.approx(4.0, abs=1e-12)
        g_quart = geo.fisher_information(Mixture(delta_basis, [0.75, 0.25]), oracle)
        assert g_quart.value[0, 0] == pytest.approx(1 / 0.25 + 1 / 0.75, abs=1e-12)

    def test_fisher_positive_definite(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            m1, _ = random_pmf_pair(rng)
            oracle = geo.ExactCategoricalOracle(m1.basis)
            assert geo.fisher_information(m1, oracle).min_eigenvalue > 0

    def test_christoffel_closed_form_binary(self, delta_basis):
        oracle = geo.ExactCategoricalOracle(delta_basis)
        at_mid = geo.christoffel_symbols(Mixture(delta_basis, [0.5, 0.5]), oracle)
        assert at_mid.value[0, 0, 0] == pytest.approx(0.0, abs=1e-12)
        # eta = 0.25: -(1/2)(1/eta^2 - 1/(1-eta)^2)
        at_quarter = geo.christoffel_symbols(Mixture(delta_basis, [0.75, 0.25]), oracle)
        expected = -0.5 * (1 / 0.25**2 - 1 / 0.75**2)
        assert at_quarter.value[0, 0, 0] == pytest.approx(expected, abs=1e-10)
        assert expected == pytest.approx(-7.111111, abs=1e-6)

    def test_christoffel_fully_symmetric(self, pmf_basis):
        oracle = geo.ExactCategoricalOracle(pmf_basis)
        t = geo.christoffel_symbols(Mixture(pmf_basis, [0.5, 0.3, 0.2]), oracle).value
        for perm in ((0, 2, 1), (1, 0, 2), (2, 1, 0)):
            np.testing.assert_allclose(t, np.transpose(t, perm), atol=1e-12)


class TestExactDivergenceIdentities:
    def test_bregman_equals_direct_kl(self, delta_basis):
        oracle = geo.ExactCategoricalOracle(delta_basis)
        m1 = Mixture(delta_basis, [0.5, 0.5])
        m2 = Mixture(delta_basis, [0.25, 0.75])
        expected = 0.5 * math.log(2.0) + 0.5 * math.log(2.0 / 3.0)
        assert geo.bregman_kl(m1, m2, oracle).value == pytest.approx(expected, abs=1e-12)
        assert geo.bregman_kl(m1, m1, oracle).value == pytest.approx(0.0, abs=1e-14)

    def test_three_way_consistency_random(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            m1, m2 = random_pmf_pair(rng)
            oracle = geo.ExactCategoricalOracle(m1.basis)
            kl = direct_kl(m1, m2)
            assert geo.bregman_kl(m1, m2, oracle).value == pytest.approx(kl, abs=1e-12)
            assert geo.canonical_divergence(m1, m2, oracle).value == pytest.approx(kl, abs=1e-12)

    def test_jeffreys_mixed_identity(self, delta_basis):
        oracle = geo.ExactCategoricalOracle(delta_basis)
        m1 = Mixture(delta_basis, [0.5, 0.5])
        m2 = Mixture(delta_basis, [0.25, 0.75])
        got = geo.jeffreys_divergence(m1, m2, oracle).value
        assert got == pytest.approx(0.25 * math.log(3.0), abs=1e-13)
        assert got == pytest.approx(direct_kl(m1, m2) + direct_kl(m2, m1), abs=1e-13)
        assert geo.jeffreys_divergence(m1, m1, oracle).value == pytest.approx(0.0, abs=1e-14)

    def test_skew_jensen_closed_form(self, delta_basis):
        oracle = geo.ExactCategoricalOracle(delta_basis)
        m1 = Mixture(delta_basis, [0.9, 0.1])
        m2 = Mixture(delta_basis, [0.1, 0.9])
        h9 = -(0.9 * math.log(0.9) + 0.1 * math.log(0.1))
        expected = math.log(2.0) - h9
        assert geo.skew_jensen(m1, m2, 0.5, oracle).value == pytest.approx(expected, abs=1e-13)
        assert geo.skew_jensen(m1, m1, 0.5, oracle).value == pytest.approx(0.0, abs=1e-14)

    def test_jensen_equals_jensen_shannon_exact(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            m1, m2 = random_pmf_pair(rng)
            for alpha in (0.1, 0.25, 0.5, 0.75, 0.9):
                mid = convex_combine(m1, m2, alpha)
                js = (1 - alpha) * direct_kl(m1, mid) + alpha * direct_kl(m2, mid)
                oracle = geo.ExactCategoricalOracle(m1.basis)
                jen = geo.skew_jensen(m1, m2, alpha, oracle).value
                assert jen == pytest.approx(js, abs=1e-12)

    def test_skew_limits_recover_kl(self, pmf_basis):
        oracle = geo.ExactCategoricalOracle(pmf_basis)
        m1 = Mixture(pmf_basis, [0.8, 0.1, 0.1])
        m2 = Mixture(pmf_basis, [0.2, 0.3, 0.5])
        b12 = geo.bregman_kl(m1, m2, oracle).value
        b21 = geo.bregman_kl(m2, m1, oracle).value
        alpha = 0.999
        scaled = geo.skew_jensen(m1, m2, alpha, oracle).value / (alpha * (1 - alpha))
        assert abs(scaled - b12) / b12 < 0.02
        alpha = 1e-3
        scaled = geo.skew_jensen(m1, m2, alpha, oracle).value / (alpha * (1 - alpha))
        assert abs(scaled - b21) / b21 < 0.01

    def test_alpha_out_of_range(self, delta_basis):
        oracle = geo.ExactCategoricalOracle(delta_basis)
        m = Mixture(delta_basis, [0.5, 0.5])
        with pytest.raises(AlphaOutOfRange):
            geo.skew_jensen(m, m, 0.0, oracle)
        with pytest.raises(AlphaOutOfRange):
            geo.skew_jensen(m, m, 1.0, oracle)

    def test_fstar_convexity_random_triples(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            m1, m2 = random_pmf_pair(rng)
            oracle = geo.ExactCategoricalOracle(m1.basis)
            alpha = float(rng.uniform(0.05, 0.95))
            mid = convex_combine(m1, m2, alpha)
            lhs = oracle.fstar(mid.eta)[0]
            rhs = (1 - alpha) * oracle.fstar(m1.eta)[0] + alpha * oracle.fstar(m2.eta)[0]
            assert lhs <= rhs + 1e-12


class TestChernoffAlpha:
    def test_exact_value(self, delta_basis):
        m1 = Mixture(delta_basis, [0.5, 0.5])
        m2 = Mixture(delta_basis, [0.25, 0.75])
        out = geo.chernoff_alpha_categorical(m1, m2, 0.5)
        coeff = math.sqrt(0.5 * 0.25) + math.sqrt(0.5 * 0.75)
        assert out.coefficient.value == pytest.approx(coeff, abs=1e-14)
        assert out.divergence.value == pytest.approx((1 - coeff) / 0.25, abs=1e-12)

    def test_identical_inputs(self, delta_basis):
        m = Mixture(delta_basis, [0.4, 0.6])
        out = geo.chernoff_alpha_categorical(m, m, 0.3)
        assert out.coefficient.value == pytest.approx(1.0, abs=1e-14)
        assert out.divergence.value == pytest.approx(0.0, abs=1e-12)

    def test_alpha_symmetry(self):
        # c_alpha(p:q) = c_{1-alpha}(q:p), hence I_alpha(p:q) = I_{1-alpha}(q:p)
        rng = np.random.default_rng(6)
        for _ in range(20):
            m1, m2 = random_pmf_pair(rng)
            alpha = float(rng.uniform(0.05, 0.95))
            a = geo.chernoff_alpha_categorical(m1, m2, alpha)
            b = geo.chernoff_alpha_categorical(m2, m1, 1.0 - alpha)
            assert a.divergence.value == pytest.approx(b.divergence.value, rel=1e-12)

    def test_mc_matches_exact(self, delta_basis):
        m1 = Mixture(delta_basis, [0.5, 0.5])
        m2 = Mixture(delta_basis, [0.25, 0.75])
        exact = geo.chernoff_alpha_categorical(m1, m2, 0.5)
        est = geo.chernoff_alpha_mc(m1, m2, 0.5, 400_000, seed=3)
        assert abs(est.coefficient.value - exact.coefficient.value) < 4 * est.coefficient.stderr

    def test_weight_extrema_bounds(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            m1, m2 = random_pmf_pair(rng)
            w1, w2 = m1.weights, m2.weights
            alpha = float(rng.uniform(0.05, 0.95))
            c = geo.chernoff_alpha_categorical(m1, m2, alpha).coefficient.value
            assert (w1.min() / w2.max()) ** alpha <= c + 1e-12
            assert c <= (w1.max() / w2.min()) ** alpha + 1e-12

    def test_degenerate_alpha_rejected(self, delta_basis):
        m = Mixture(delta_basis, [0.5, 0.5])
        with pytest.raises(AlphaOutOfRange):
            geo.chernoff_alpha_categorical(m, m, 1.0)
        with pytest.raises(AlphaOutOfRange):
            geo.chernoff_alpha_mc(m, m, 0.0, 100, seed=0)


class TestEntropyBounds:
    def test_separated_gmm_brackets_known_entropy(self):
        basis = ComponentBasis((Gaussian(0, 1), Gaussian(20, 1)))
        m = Mixture(basis, [0.5, 0.5])
        eb = geo.entropy_bounds(m)
        target = 0.5 * math.log(2 * math.pi * math.e) + math.log(2.0)
        assert eb.lower <= target + 1e-9
        assert target <= eb.upper + 1e-9
        assert eb.lower == pytest.approx(target, abs=1e-6)

    def test_collapsed_mixture(self):
        basis = ComponentBasis((Gaussian(0, 1), Gaussian(5, 2)))
        m = Mixture(basis, [1.0 - 1e-9, 1e-9])
        eb = geo.entropy_bounds(m)
        h0 = basis.components[0].entropy()
        assert eb.lower == pytest.approx(h0, abs=1e-6)
        assert eb.upper == pytest.approx(h0, abs=1e-6)

    def test_counting_basis_brackets_exact_entropy(self, pmf_basis):
        m = Mixture(pmf_basis, [0.6, 0.3, 0.1])
        atoms = m.atom_pmf()
        exact = float(-np.sum(atoms[atoms > 0] * np.log(atoms[atoms > 0])))
        eb = geo.entropy_bounds(m)
        assert eb.lower <= exact + 1e-12 <= eb.upper + 2e-12

    def test_mc_entropy_inside_bounds(self):
        basis = ComponentBasis((Gaussian(-1, 1), Gaussian(2, 1.5)))
        m = Mixture(basis, [0.4, 0.6])
        eb = geo.entropy_bounds(m)
        oracle = geo.MonteCarloOracle(basis, samples=200_000, seed=8)
        est = geo.shannon_information(m, oracle)
        h = -est.value
        assert eb.lower - 4 * est.stderr <= h <= eb.upper + 4 * est.stderr

    def test_unsupported_components_propagate(self):
        basis = ComponentBasis((Cauchy(0, 1), Cauchy(1, 1)))
        with pytest.raises(UnsupportedPair):
            geo.entropy_bounds(Mixture(basis, [0.5, 0.5]))


class TestMonteCarloOracle:
    SAMPLES = 200_000

    def test_bregman_matches_extended_kl(self, gmm_basis):
        oracle = geo.MonteCarloOracle(gmm_basis, samples=self.SAMPLES, seed=100)
        m1 = Mixture(gmm_basis, [0.85, 0.15])
        m2 = Mixture(gmm_basis, [0.2, 0.8])
        breg = geo.bregman_kl(m1, m2, oracle)
        ext = mc_kl_extended(m1, m2, self.SAMPLES, seed=101)
        assert abs(breg.value - ext.value) < 4 * math.hypot(breg.stderr, ext.stderr)

    def test_canonical_matches_bregman(self, gmm_basis):
        oracle = geo.MonteCarloOracle(gmm_basis, samples=self.SAMPLES, seed=102)
        m1 = Mixture(gmm_basis, [0.85, 0.15])
        m2 = Mixture(gmm_basis, [0.2, 0.8])
        canon = geo.canonical_divergence(m1, m2, oracle)
        breg = geo.bregman_kl(m1, m2, oracle)
        assert abs(canon.value - breg.value) < 4 * math.hypot(canon.stderr, breg.stderr)

    def test_young_gap_within_noise(self, gmm_basis):
        oracle = geo.MonteCarloOracle(gmm_basis, samples=self.SAMPLES, seed=103)
        gap = geo.young_gap(Mixture(gmm_basis, [0.7, 0.3]), oracle)
        assert abs(gap.value) < 4 * gap.stderr

    def test_jeffreys_identity_within_noise(self, gmm_basis):
        oracle = geo.MonteCarloOracle(gmm_basis, samples=self.SAMPLES, seed=104)
        m1 = Mixture(gmm_basis, [0.85, 0.15])
        m2 = Mixture(gmm_basis, [0.2, 0.8])
        jeff = geo.jeffreys_divergence(m1, m2, oracle)
        k12 = mc_kl_extended(m1, m2, self.SAMPLES, seed=105)
        k21 = mc_kl_extended(m2, m1, self.SAMPLES, seed=106)
        combined = math.hypot(jeff.stderr, math.hypot(k12.stderr, k21.stderr))
        assert abs(jeff.value - (k12.value + k21.value)) < 4 * combined

    def test_js_equals_jensen_within_noise(self, gmm_basis):
        oracle = geo.MonteCarloOracle(gmm_basis, samples=self.SAMPLES, seed=107)
        m1 = Mixture(gmm_basis, [0.9, 0.1])
        m2 = Mixture(gmm_basis, [0.25, 0.75])
        for alpha in (0.25, 0.5, 0.75):
            jen = geo.skew_jensen(m1, m2, alpha, oracle)
            js = geo.skew_jensen_shannon(m1, m2, alpha, self.SAMPLES, seed=108)
            assert abs(jen.value - js.value) < 4 * math.hypot(jen.stderr, js.stderr)

    def test_evaluations_cached_and_deterministic(self, gmm_basis):
        oracle = geo.MonteCarloOracle(gmm_basis, samples=10_000, seed=5)
        eta = np.array([0.4])
        a = oracle.fstar(eta)
        b = oracle.fstar(eta.copy())
        assert a == b
        fresh = geo.MonteCarloOracle(gmm_basis, samples=10_000, seed=5)
        assert fresh.fstar(eta) == a

    def test_boundary_guard(self, gmm_basis):
        oracle = geo.MonteCarloOracle(gmm_basis, samples=1000, seed=0)
        with pytest.raises(SimplexViolation):
            oracle.fstar(np.array([1e-12]))

    def test_basis_mismatch(self, gmm_basis, delta_basis):
        oracle = geo.MonteCarloOracle(gmm_basis, samples=1000, seed=0)
        with pytest.raises(BasisMismatch):
            geo.shannon_information(Mixture(delta_basis, [0.5, 0.5]), oracle)

    def test_heavy_tail_cross_entropy_warns(self, gmm_basis):
        # Cauchy draws against a Gaussian-tailed mixture: -log m(x) ~ x^2/2,
        # whose expectation under a Cauchy diverges
        oracle = geo.MonteCarloOracle(gmm_basis, samples=200_000, seed=11)
        m = Mixture(gmm_basis, [0.5, 0.5])
        with pytest.warns(DivergentIntegralWarning):
            oracle.ce_density(Cauchy(0.0, 1.0), m.eta)


class TestFiniteDifferenceChecks:
    def test_gradient_matches_theta(self, gmm_basis):
        oracle = geo.MonteCarloOracle(gmm_basis, samples=300_000, seed=200)
        m = Mixture(gmm_basis, [0.65, 0.35])
        probe = geo.PotentialProbe(gmm_basis, m.eta, samples=300_000, seed=201)
        fd, fd_se = geo.fd_gradient(probe, 0)
        dc = geo.natural_parameters(m, oracle)
        assert abs(fd - dc.theta[0]) < 4 * math.hypot(fd_se, dc.stderr_theta[0])

    def test_hessian_matches_fisher(self, gmm_basis):
        oracle = geo.MonteCarloOracle(gmm_basis, samples=300_000, seed=202)
        m = Mixture(gmm_basis, [0.65, 0.35])
        probe = geo.PotentialProbe(gmm_basis, m.eta, samples=300_000, seed=203)
        fd, fd_se = geo.fd_hessian_entry(probe, 0, 0)
        fi = geo.fisher_information(m, oracle)
        assert abs(fd - fi.value[0, 0]) < 4 * math.hypot(fd_se, fi.stderr[0, 0])

    def test_third_difference_matches_christoffel(self, gmm_basis):
        oracle = geo.MonteCarloOracle(gmm_basis, samples=300_000, seed=204)
        m = Mixture(gmm_basis, [0.65, 0.35])
        probe = geo.PotentialProbe(gmm_basis, m.eta, samples=300_000, seed=205)
        fd, fd_se = geo.fd_third_entry(probe, 0, 0, 0)
        ch = geo.christoffel_symbols(m, oracle)
        # the connection coefficient is -(1/2) of the third derivative
        target = 2.0 * ch.value[0, 0, 0]
        assert abs(fd - target) < 5 * math.hypot(fd_se, 2.0 * ch.stderr[0, 0, 0])

    def test_three_component_off_diagonal_hessian(self):
        basis = ComponentBasis((Gaussian(-2, 1), Gaussian(0, 1), Gaussian(2, 1)))
        oracle = geo.MonteCarloOracle(basis, samples=300_000, seed=206)
        m = Mixture(basis, [0.5, 0.3, 0.2])
        probe = geo.PotentialProbe(basis, m.eta, samples=300_000, seed=207)
        fi = geo.fisher_information(m, oracle)
        for i in range(2):
            for j in range(2):
                fd, fd_se = geo.fd_hessian_entry(probe, i, j)
                assert abs(fd - fi.value[i, j]) < 4 * math.hypot(fd_se, fi.stderr[i, j])

    def test_fisher_pd_on_gmm(self, gmm_basis):
        oracle = geo.MonteCarloOracle(gmm_basis, samples=100_000, seed=208)
        fi = geo.fisher_information(Mixture(gmm_basis, [0.6, 0.4]), oracle)
        assert fi.min_eigenvalue > 0


class TestPotentialCurve:
    def test_fstar_curve_convex_within_noise(self, gmm_basis):
        oracle = geo.MonteCarloOracle(gmm_basis, samples=50_000, seed=300)
        grid = np.linspace(0.05, 0.95, 31)
        vals, errs = [], []
        for eta in grid:
            v, se = oracle.fstar(np.array([eta]))
            vals.append(v)
            errs.append(se)
        vals = np.array(vals)
        errs = np.array(errs)
        second = vals[:-2] - 2 * vals[1:-1] + vals[2:]
        prop = np.sqrt(errs[:-2] ** 2 + 4 * errs[1:-1] ** 2 + errs[2:] ** 2)
        assert np.all(second > -4 * prop)
