"""Generator catalog and algebra, exact discrete divergences, MC estimators."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from mixfam.components import ComponentBasis, Gaussian
from mixfam.divergence import (
    GENERATOR_NAMES,
    McEstimate,
    discrete_fdiv,
    discrete_fdiv_extended,
    dual_generator,
    extend_generator,
    generator,
    mc_fdivergence,
    mc_kl_extended,
    reflexivity_break,
    shift_generator,
    symmetrize_generator,
    vajda_bound,
)
from mixfam.errors import (
    ConfigError,
    NonDifferentiableAt1,
    UnknownGenerator,
    ZeroDenominator,
)
from mixfam.mixture import Mixture

from conftest import random_open_simplex

ALL_NAMES = [n for n in GENERATOR_NAMES if n != "alpha"] + ["alpha(0.5)", "alpha(-0.3)"]


class TestCatalog:
    @pytest.mark.parametrize("name", ALL_NAMES)
    def test_f1_zero_and_convexity(self, name):
        generator(name).validate()

    def test_spot_values(self):
        assert generator("kl")(2.0) == pytest.approx(-math.log(2.0), abs=1e-15)
        assert generator("total_variation")(2.0) == pytest.approx(0.5, abs=1e-15)
        assert generator("pearson_chi2")(3.0) == pytest.approx(4.0, abs=1e-15)
        assert generator("neyman_chi2")(2.0) == pytest.approx(0.5, abs=1e-15)
        assert generator("reverse_kl")(2.0) == pytest.approx(2 * math.log(2.0), abs=1e-15)
        assert generator("squared_hellinger")(4.0) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("name", ALL_NAMES)
    def test_limit_fields_match_numeric_limits(self, name):
        # finite limits: near-convergence at extreme arguments; infinite
        # limits: strict divergence across decades
        g = generator(name)
        if np.isfinite(g.limit_at_0):
            assert float(g(1e-20)) == pytest.approx(g.limit_at_0, rel=1e-4, abs=1e-2)
        else:
            vals = [float(g(u)) for u in (1e-2, 1e-6, 1e-12)]
            assert vals[0] < vals[1] < vals[2]
        if np.isfinite(g.limit_slope_at_inf):
            assert float(g(1e20)) / 1e20 == pytest.approx(
                g.limit_slope_at_inf, rel=1e-4, abs=1e-2
            )
        else:
            slopes = [float(g(u)) / u for u in (1e2, 1e6, 1e12)]
            assert slopes[0] < slopes[1] < slopes[2]

    @pytest.mark.parametrize("name", [n for n in ALL_NAMES if n != "total_variation"])
    def test_deriv_at_1_matches_finite_difference(self, name):
        g = generator(name)
        h = 1e-7
        fd = (g(1.0 + h) - g(1.0 - h)) / (2 * h)
        assert fd == pytest.approx(g.deriv_at_1, abs=1e-6)

    def test_unknown_name_rejected(self):
        with pytest.raises(UnknownGenerator):
            generator("hellinger_cubed")
        with pytest.raises(UnknownGenerator):
            generator("alpha")  # needs a parameter

    def test_alpha_parameter_range(self):
        with pytest.raises(ConfigError):
            generator("alpha", alpha=1.0)
        with pytest.raises(ConfigError):
            generator("alpha(-1.0)")


class TestGeneratorAlgebra:
    def test_dual_of_kl_is_reverse_kl(self):
        d = dual_generator(generator("kl"))
        u = np.array([0.5, 1.0, 2.0, 7.5])
        np.testing.assert_allclose(d(u), u * np.log(u), atol=1e-14)

    def test_dual_swaps_limits(self):
        g = generator("reverse_kl")
        d = dual_generator(g)
        assert d.limit_at_0 == g.limit_slope_at_inf
        assert d.limit_slope_at_inf == g.limit_at_0
        assert d.deriv_at_1 == -g.deriv_at_1

    def test_symmetrize_preserves_f1(self):
        s = symmetrize_generator(generator("kl"))
        assert s(1.0) == pytest.approx(0.0, abs=1e-15)
        assert s(2.0) == pytest.approx(0.5 * (2 * math.log(2) - math.log(2)), abs=1e-14)

    def test_extend_kl(self):
        # f'(1) = -1 for -log u, so the extension is -log u + (u - 1)
        e = extend_generator(generator("kl"))
        assert e(2.0) == pytest.approx(-math.log(2.0) + 1.0, abs=1e-14)
        assert e(1.0) == pytest.approx(0.0, abs=1e-15)
        h = 1e-7
        assert (e(1 + h) - e(1 - h)) / (2 * h) == pytest.approx(0.0, abs=1e-6)

    def test_extend_total_variation_rejected(self):
        with pytest.raises(NonDifferentiableAt1):
            extend_generator(generator("total_variation"))

    @pytest.mark.parametrize("name", ALL_NAMES)
    def test_derived_generators_stay_valid(self, name):
        g = generator(name)
        dual_generator(g).validate()
        symmetrize_generator(g).validate()
        shift_generator(g, 0.7).validate()
        if g.deriv_at_1 is not None:
            extend_generator(g).validate()

    def test_shift_invariance_of_discrete_divergence(self):
        rng = np.random.default_rng(8)
        for _ in range(25):
            w = random_open_simplex(rng, 4)
            w2 = random_open_simplex(rng, 4)
            for lam in (-3.0, 0.4, 11.0):
                for name in ("kl", "pearson_chi2", "jensen_shannon"):
                    g = generator(name)
                    base = discrete_fdiv(w, w2, g)
                    shifted = discrete_fdiv(w, w2, shift_generator(g, lam))
                    assert shifted == pytest.approx(base, abs=1e-12)


class TestDiscreteFdiv:
    def test_kl_value(self):
        expected = 0.5 * math.log(2.0) + 0.5 * math.log(2.0 / 3.0)
        assert discrete_fdiv([0.5, 0.5], [0.25, 0.75], generator("kl")) == pytest.approx(
            expected, abs=1e-15
        )

    def test_tv_value(self):
        assert discrete_fdiv([0.5, 0.5], [0.25, 0.75], generator("total_variation")) == (
            pytest.approx(0.25, abs=1e-15)
        )

    @pytest.mark.parametrize("name", ALL_NAMES)
    def test_zero_on_equal_and_nonnegative(self, name):
        g = generator(name)
        rng = np.random.default_rng(10)
        for _ in range(20):
            w = random_open_simplex(rng, 5)
            w2 = random_open_simplex(rng, 5)
            assert discrete_fdiv(w, w, g) == pytest.approx(0.0, abs=1e-12)
            assert discrete_fdiv(w, w2, g) >= -1e-12

    @pytest.mark.parametrize("name", ALL_NAMES)
    def test_permutation_invariance(self, name):
        g = generator(name)
        rng = np.random.default_rng(4)
        w = random_open_simplex(rng, 5)
        w2 = random_open_simplex(rng, 5)
        base = discrete_fdiv(w, w2, g)
        for _ in range(10):
            sigma = rng.permutation(5)
            assert discrete_fdiv(w[sigma], w2[sigma], g) == pytest.approx(base, abs=1e-14)

    def test_extended_handles_zero_cells(self):
        g = generator("total_variation")
        # p-only cell contributes p*f(0) = p/2; q-only cell q*(slope) = q/2
        val = discrete_fdiv_extended([0.5, 0.5, 0.0], [0.5, 0.0, 0.5], g)
        assert val == pytest.approx(0.5, abs=1e-15)
        assert discrete_fdiv_extended([0.6, 0.4, 0.0], [0.6, 0.4, 0.0], g) == 0.0

    def test_extended_kl_infinite_when_q_misses_mass(self):
        assert discrete_fdiv_extended([0.5, 0.5], [1.0, 0.0], generator("kl")) == np.inf


class TestAppendixInequalities:
    """Exact-arithmetic distance inequalities on random pmf pairs.

    K is the divergence to the midpoint; JS its symmetrization; J the
    symmetrized KL.  All recomputed here from raw formulas.
    """

    @staticmethod
    def _distances(p, q):
        mid = (p + q) / 2.0
        kl_pq = float(np.sum(p * np.log(p / q)))
        kl_qp = float(np.sum(q * np.log(q / p)))
        k_pq = float(np.sum(p * np.log(p / mid)))
        k_qp = float(np.sum(q * np.log(q / mid)))
        tv = 0.5 * float(np.abs(p - q).sum())
        return {
            "kl": kl_pq,
            "j": kl_pq + kl_qp,
            "k": k_pq,
            "js": 0.5 * (k_pq + k_qp),
            "tv": tv,
        }

    def test_inequality_chain(self):
        rng = np.random.default_rng(21)
        for _ in range(300):
            n = int(rng.integers(2, 8))
            p = random_open_simplex(rng, n)
            q = random_open_simplex(rng, n)
            d = self._distances(p, q)
            assert d["k"] <= 0.5 * d["kl"] + 1e-12
            assert d["k"] <= 1.0 + 1e-12
            assert d["js"] <= 0.25 * d["j"] + 1e-12
            assert d["js"] <= 2.0 * d["tv"] + 1e-12
            assert d["tv"] <= 1.0 + 1e-12

    def test_catalog_matches_raw_formulas(self):
        # the catalog generators must reproduce the raw-formula values
        rng = np.random.default_rng(22)
        p = random_open_simplex(rng, 6)
        q = random_open_simplex(rng, 6)
        d = self._distances(p, q)
        assert discrete_fdiv(p, q, generator("kl")) == pytest.approx(d["kl"], abs=1e-13)
        assert discrete_fdiv(p, q, generator("total_variation")) == pytest.approx(
            d["tv"], abs=1e-13
        )
        # the catalog jensen_shannon generator sums BOTH sides: K(p:q)+K(q:p)
        assert discrete_fdiv(p, q, generator("jensen_shannon")) == pytest.approx(
            2.0 * d["js"], abs=1e-13
        )


class TestVajdaBound:
    def test_values(self):
        assert vajda_bound(generator("total_variation")) == pytest.approx(1.0)
        assert vajda_bound(generator("jensen_shannon")) == pytest.approx(2 * math.log(2.0))
        assert vajda_bound(generator("kl")) == np.inf
        assert vajda_bound(generator("squared_hellinger")) == pytest.approx(2.0)

    def test_bound_dominates_exact_divergences(self):
        rng = np.random.default_rng(30)
        for name in ALL_NAMES:
            g = generator(name)
            cap = vajda_bound(g)
            for _ in range(50):
                w = random_open_simplex(rng, 4)
                w2 = random_open_simplex(rng, 4)
                assert discrete_fdiv(w, w2, g) <= cap + 1e-12


class TestMcEstimate:
    def test_ci_halfwidth(self):
        est = McEstimate(1.0, 0.1, 100, 0)
        lo, hi = est.ci(0.95)
        assert hi - 1.0 == pytest.approx(1.959964 * 0.1, abs=1e-6)
        assert 1.0 - lo == pytest.approx(1.959964 * 0.1, abs=1e-6)

    def test_serialization_fields(self):
        d = McEstimate(0.5, 0.01, 1000, 7).to_dict()
        assert set(d) == {"value", "stderr", "s", "seed", "ci95", "rejected", "divergence_risk"}


class TestMcEstimators:
    def test_matches_discrete_oracle(self, delta_basis):
        m1 = Mixture(delta_basis, [0.5, 0.5])
        m2 = Mixture(delta_basis, [0.25, 0.75])
        target = 0.5 * math.log(2.0) + 0.5 * math.log(2.0 / 3.0)
        est = mc_fdivergence(m1, m2, generator("kl"), 1_000_000, seed=2024)
        assert abs(est.value - target) < 4 * est.stderr

    def test_matches_quadrature_oracle_on_gmm(self, gmm_basis):
        m1 = Mixture(gmm_basis, [0.9, 0.1])
        m2 = Mixture(gmm_basis, [0.1, 0.9])

        def integrand(x):
            x = np.array([x])
            l1 = m1.log_density(x)[0]
            l2 = m2.log_density(x)[0]
            return math.exp(l1) * (l1 - l2)

        target, err = quad(integrand, -np.inf, np.inf, limit=200)
        assert err < 1e-6
        est = mc_fdivergence(m1, m2, generator("kl"), 1_000_000, seed=31)
        assert abs(est.value - target) < 4 * est.stderr

    def test_self_divergence_within_noise(self, gmm_basis):
        m = Mixture(gmm_basis, [0.6, 0.4])
        est = mc_fdivergence(m, m, generator("pearson_chi2"), 10_000, seed=5)
        assert est.value == pytest.approx(0.0, abs=1e-12)

    def test_bit_identical_given_seed(self, gmm_basis):
        m1 = Mixture(gmm_basis, [0.7, 0.3])
        m2 = Mixture(gmm_basis, [0.2, 0.8])
        a = mc_fdivergence(m1, m2, generator("kl"), 150_000, seed=12)
        b = mc_fdivergence(m1, m2, generator("kl"), 150_000, seed=12)
        assert a == b

    def test_threads_do_not_change_bits(self, gmm_basis):
        m1 = Mixture(gmm_basis, [0.7, 0.3])
        m2 = Mixture(gmm_basis, [0.2, 0.8])
        a = mc_fdivergence(m1, m2, generator("kl"), 200_000, seed=12, threads=1)
        b = mc_fdivergence(m1, m2, generator("kl"), 200_000, seed=12, threads=4)
        assert a == b
        c = mc_kl_extended(m1, m2, 200_000, seed=12, threads=1)
        d = mc_kl_extended(m1, m2, 200_000, seed=12, threads=3)
        assert c == d

    @pytest.mark.parametrize("name", ["kl", "squared_hellinger", "jensen_shannon", "alpha(0.5)"])
    def test_duality_swap(self, gmm_basis, name):
        # I_{dual f}(p:q) agrees with I_f(q:p)
        m1 = Mixture(gmm_basis, [0.8, 0.2])
        m2 = Mixture(gmm_basis, [0.35, 0.65])
        g = generator(name)
        a = mc_fdivergence(m1, m2, dual_generator(g), 100_000, seed=44)
        b = mc_fdivergence(m2, m1, g, 100_000, seed=45)
        assert abs(a.value - b.value) < 4 * math.hypot(a.stderr, b.stderr)

    def test_sample_count_validated(self, gmm_basis):
        m = Mixture(gmm_basis, [0.5, 0.5])
        with pytest.raises(ConfigError):
            mc_fdivergence(m, m, generator("kl"), 1, seed=0)

    @pytest.mark.parametrize("name", ["kl", "jensen_shannon", "squared_hellinger"])
    def test_invariance_under_affine_maps(self, gmm_basis, name):
        # x -> a x + b maps the Gaussian basis onto another Gaussian basis;
        # density ratios are untouched, and coupled seeds draw the mapped
        # points exactly, so the estimates agree to rounding
        a, b = 2.5, -3.0
        mapped = ComponentBasis(
            tuple(Gaussian(a * c.mean + b, a * c.stddev) for c in gmm_basis.components)
        )
        g = generator(name)
        e1 = mc_fdivergence(
            Mixture(gmm_basis, [0.8, 0.2]), Mixture(gmm_basis, [0.3, 0.7]), g, 100_000, seed=4
        )
        e2 = mc_fdivergence(
            Mixture(mapped, [0.8, 0.2]), Mixture(mapped, [0.3, 0.7]), g, 100_000, seed=4
        )
        assert e2.value == pytest.approx(e1.value, abs=1e-12)


class TestExtendedKl:
    def test_zero_iff_same(self, gmm_basis):
        m = Mixture(gmm_basis, [0.5, 0.5])
        est = mc_kl_extended(m, m, 50_000, seed=9)
        assert est.value == 0.0

    def test_always_nonnegative(self, gmm_basis, delta_basis):
        rng = np.random.default_rng(50)
        for basis in (gmm_basis, delta_basis):
            for _ in range(10):
                m1 = Mixture(basis, random_open_simplex(rng, 2))
                m2 = Mixture(basis, random_open_simplex(rng, 2))
                est = mc_kl_extended(m1, m2, 20_000, seed=int(rng.integers(1 << 30)))
                assert est.value >= 0.0

    def test_matches_discrete_target(self, delta_basis):
        m1 = Mixture(delta_basis, [0.5, 0.5])
        m2 = Mixture(delta_basis, [0.25, 0.75])
        target = 0.5 * math.log(2.0) + 0.5 * math.log(2.0 / 3.0)
        est = mc_kl_extended(m1, m2, 1_000_000, seed=77)
        assert abs(est.value - target) < 4 * est.stderr

    def test_per_draw_terms_nonnegative(self, gmm_basis):
        # recompute the summands directly on a fresh sample
        m1 = Mixture(gmm_basis, [0.9, 0.1])
        m2 = Mixture(gmm_basis, [0.15, 0.85])
        x = m1.sample(np.random.default_rng(3), 100_000)
        lr = m1.log_density(x) - m2.log_density(x)
        terms = np.expm1(-lr) + lr
        assert terms.min() >= -1e-15


class TestReflexivityBreak:
    def test_shifted_estimate_is_zero(self, delta_basis):
        m1 = Mixture(delta_basis, [0.5, 0.5])
        m2 = Mixture(delta_basis, [0.25, 0.75])
        out = reflexivity_break(m1, m2, generator("kl"), 100_000, seed=6)
        assert abs(out.shifted_estimate) < 1e-10
        # while the true divergence is untouched by any shift, and positive
        g_shift = shift_generator(generator("kl"), out.lambda0)
        exact = discrete_fdiv(m1.weights, m2.weights, generator("kl"))
        assert discrete_fdiv(m1.weights, m2.weights, g_shift) == pytest.approx(exact, abs=1e-9)
        assert exact > 0

    def test_same_samples_as_plain_estimator(self, delta_basis):
        m1 = Mixture(delta_basis, [0.6, 0.4])
        m2 = Mixture(delta_basis, [0.3, 0.7])
        plain = mc_fdivergence(m1, m2, generator("kl"), 65_536 * 2 + 5, seed=8)
        out = reflexivity_break(m1, m2, generator("kl"), 65_536 * 2 + 5, seed=8)
        assert out.base_estimate == pytest.approx(plain.value, rel=1e-12)

    def test_equal_inputs_raise(self, gmm_basis):
        m = Mixture(gmm_basis, [0.5, 0.5])
        with pytest.raises(ZeroDenominator):
            reflexivity_break(m, m, generator("kl"), 10_000, seed=1)


class TestDivergenceRisk:
    def test_heavy_tail_flagged(self):
        from mixfam.components import Cauchy

        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            est = mc_fdivergence(Cauchy(0, 1), Gaussian(0, 1), generator("kl"), 50_000, seed=13)
        assert est.divergence_risk

    def test_benign_case_not_flagged(self, gmm_basis):
        m1 = Mixture(gmm_basis, [0.7, 0.3])
        m2 = Mixture(gmm_basis, [0.4, 0.6])
        est = mc_fdivergence(m1, m2, generator("kl"), 50_000, seed=14)
        assert not est.divergence_risk
        assert est.rejected == 0
