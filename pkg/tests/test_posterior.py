import math

import numpy as np
import pytest
from scipy import integrate

from postcon import PreconditionError, ScaleSpec, SpectralField
from postcon.forward import GridFunction
from postcon.norms import GridNorm, HilbertNorm
from postcon.posterior import (
    LogDensity,
    ball_masses,
    batch_means_se,
    conjugate_mc_ball_masses,
    conjugate_posterior_diagonal,
    conjugate_sample,
    importance_ball_mass,
    importance_ball_masses,
    log_density_pointwise,
    log_density_small_noise,
    log_normalizer,
    pcn_ball_masses,
    pcn_sample,
    pointwise_likelihood,
    small_noise_likelihood,
)
from postcon.priors import GaussianPrior, PointMassPrior, UniformPrior

POWER1 = ScaleSpec(r=1.0, trunc=64)


def rng(seed=0):
    return np.random.default_rng(seed)


def conjugate_problem(n_modes, n, seed=0, t=3.0, r=1.0):
    g = rng(seed)
    prior = GaussianPrior(t, n_modes)
    scale = ScaleSpec(r=r, trunc=n_modes)
    truth = prior.sample_states(g, 1)[0]
    y = truth + g.standard_normal(n_modes) * scale.values(n_modes) / math.sqrt(n)
    return prior, scale, truth, y


def exact_log_normalizer(t, r, y, n):
    """log E exp(-(n/2)||a||_1**2 + n<a, y>_1) for a ~ N(0, diag(k**-2t)), mode by mode."""
    k = np.arange(1, y.size + 1, dtype=float)
    w = k ** (2.0 * r)
    mu2 = k ** (-2.0 * t)
    c = 1.0 + n * w * mu2
    return float(np.sum(-0.5 * np.log(c) + (n * w * y) ** 2 * mu2 / (2.0 * c)))


class TestLogDensities:
    def test_zero(self):
        assert log_density_small_noise(np.zeros(5), np.ones(5), 3, POWER1) == 0.0

    def test_a_equals_y(self):
        y = rng().normal(size=8)
        val = log_density_small_noise(y, y, 1, POWER1)
        k = np.arange(1, 9)
        assert val == pytest.approx(0.5 * np.sum(k**2 * y**2), rel=1e-13)

    def test_brute_force(self):
        g = rng(1)
        a, y = g.normal(size=20), g.normal(size=20)
        brute = sum(k**2 * (-3.5 * a[k - 1] ** 2 + 7 * a[k - 1] * y[k - 1]) for k in range(1, 21))
        assert log_density_small_noise(SpectralField(a), SpectralField(y), 7, POWER1) == pytest.approx(
            brute, rel=1e-12, abs=1e-12)

    def test_shift_identity(self):
        g = rng(2)
        n, truth, xi = 50, g.normal(size=16), g.normal(size=16)
        y = truth + xi / math.sqrt(n)
        k2 = np.arange(1, 17) ** 2.0
        diffs = []
        for _ in range(100):
            a = g.normal(size=16)
            shifted = -0.5 * n * np.sum(k2 * (a - truth) ** 2) + math.sqrt(n) * np.sum(k2 * (a - truth) * xi)
            diffs.append(log_density_small_noise(a, y, n, POWER1) - shifted)
        assert np.ptp(diffs) < 1e-10 * max(1.0, np.max(np.abs(diffs)))

    def test_mismatched(self):
        with pytest.raises(ValueError):
            log_density_small_noise(np.ones(3), np.ones(4), 1, POWER1)

    def test_batch_likelihood_matches(self):
        g = rng(3)
        y = g.normal(size=10)
        states = g.normal(size=(6, 10))
        ld = small_noise_likelihood(y, 9, ScaleSpec(r=1.0, trunc=10))
        expect = [log_density_small_noise(s, y, 9, ScaleSpec(r=1.0, trunc=10)) for s in states]
        np.testing.assert_allclose(ld(states), expect, rtol=1e-12)
        assert isinstance(ld(states[0]), float)

    def test_pointwise_empty(self):
        assert log_density_pointwise(GridFunction.constant(1.0, 8), ([], []), 0.1) == 0.0

    def test_pointwise_exact_fit(self):
        a = GridFunction.from_callable(lambda x: x, 8)
        assert log_density_pointwise(a, ([0.25], [0.25]), 0.3) == 0.0

    def test_pointwise_known_residuals(self):
        a = GridFunction.constant(0.0, 8)
        val = log_density_pointwise(a, ([0.1, 0.5, 0.9], [-1.0, 2.0, -0.5]), 1.0)
        assert val == pytest.approx(-2.625)

    def test_pointwise_forward(self):
        a = GridFunction.constant(1.0, 16)
        from postcon.forward import solve_elliptic_1d
        fwd = lambda g: solve_elliptic_1d(g, 1.0)  # noqa: E731
        assert log_density_pointwise(a, ([0.5], [0.125]), 1.0, forward=fwd) == pytest.approx(0.0, abs=1e-20)

    def test_pointwise_sigma(self):
        with pytest.raises(PreconditionError):
            log_density_pointwise(GridFunction.constant(0.0, 8), ([0.5], [0.0]), 0.0)

    def test_pointwise_likelihood_batch(self):
        prior = UniformPrior.power_law(2.0, 4, mean=2.0, m=32)
        x, y = np.array([0.2, 0.7]), np.array([2.1, 1.9])
        ld = pointwise_likelihood(prior, (x, y), 0.2)
        z = rng().uniform(-1, 1, size=(3, 4))
        for zi, val in zip(z, ld(z)):
            assert val == pytest.approx(log_density_pointwise(prior.field(zi), (x, y), 0.2), rel=1e-12)

    def test_zero_density(self):
        assert np.all(LogDensity.zero()(np.ones((4, 2))) == 0)


class TestConjugate:
    def test_one_mode_numeric_oracle(self):
        mean, var = conjugate_posterior_diagonal(2, 1, np.array([1.0]), 4)
        # prior N(0, 1), likelihood N(y | a, 1/4)
        dens = lambda a: math.exp(-0.5 * a * a - 2.0 * (a - 1.0) ** 2)  # noqa: E731
        z = integrate.quad(dens, -20, 20)[0]
        m1 = integrate.quad(lambda a: a * dens(a), -20, 20)[0] / z
        m2 = integrate.quad(lambda a: a * a * dens(a), -20, 20)[0] / z
        assert mean[0] == pytest.approx(0.8) and m1 == pytest.approx(0.8, rel=1e-9)
        assert var[0] == pytest.approx(0.2) and m2 - m1**2 == pytest.approx(0.2, rel=1e-9)

    def test_large_n(self):
        y = np.array([1.0, -2.0, 0.5])
        mean, var = conjugate_posterior_diagonal(3, 1, y, 10**12)
        np.testing.assert_allclose(mean, y, rtol=1e-6)
        assert np.all(var < 1e-12)

    def test_degenerate_prior(self):
        mean, _ = conjugate_posterior_diagonal(200, 1, np.ones(5), 1)
        assert np.all(np.abs(mean[1:]) < 1e-50)

    def test_n_precondition(self):
        with pytest.raises(PreconditionError):
            conjugate_posterior_diagonal(3, 1, np.ones(2), 0)

    def test_log_normalizer_closed_form(self):
        for n in (10, 100):
            prior, _, _, y = conjugate_problem(5, n, seed=4)
            ld = small_noise_likelihood(y, n, ScaleSpec(r=1.0, trunc=5))
            val, se = log_normalizer(prior, ld, 200_000, rng(5))
            assert abs(val - exact_log_normalizer(3, 1, y, n)) < 4 * se + 1e-3

    def test_log_normalizer_bounded(self):
        # Jensen below, pointwise supremum above, for every n in the grid
        for n in (10, 100, 1000, 10_000):
            prior, scale, _, y = conjugate_problem(20, n, seed=6)
            exact = exact_log_normalizer(3, 1, y, n)
            k = np.arange(1, 21)
            lower = -0.5 * n * np.sum(k**2.0 * k**-6.0)
            upper = 0.5 * n * np.sum(k**2.0 * y**2)
            assert math.isfinite(exact) and lower <= exact <= upper


class TestImportance:
    def test_zero_density_is_prior(self):
        prior = GaussianPrior(2.0, 8)
        norm = HilbertNorm(0.0, ScaleSpec(trunc=8))
        est = importance_ball_mass(prior, LogDensity.zero(), np.zeros(8), 0.8, norm, 20_000, rng(0))
        d = norm(prior.sample_states(rng(1), 200_000))
        exact = np.mean(d <= 0.8)
        assert abs(est.mass - exact) < 3 * est.stderr + 3 * math.sqrt(exact * (1 - exact) / d.size)

    def test_huge_radius(self):
        prior, scale, truth, y = conjugate_problem(5, 10)
        ld = small_noise_likelihood(y, 10, scale)
        est = importance_ball_mass(prior, ld, truth, 1e6, HilbertNorm(1.0, scale), 1000, rng())
        assert est.mass == 1.0 and est.reliable

    def test_matches_conjugate_mc(self):
        n = 100
        prior, scale, truth, y = conjugate_problem(5, n, seed=2)
        norm = HilbertNorm(1.0, scale)
        radii = [0.05, 0.1, 0.2]
        ld = small_noise_likelihood(y, n, scale)
        imp = importance_ball_masses(prior, ld, truth, radii, norm, 100_000, rng(3))
        mean, var = conjugate_posterior_diagonal(3, 1, y, n)
        ref = conjugate_mc_ball_masses(mean, var, truth, radii, norm, 100_000, rng(4))
        for a, b in zip(imp, ref):
            assert abs(a.mass - b.mass) < 3 * math.hypot(a.stderr, b.stderr)

    def test_degenerate_weights_flagged(self):
        prior, scale, truth, y = conjugate_problem(20, 10**6)
        ld = small_noise_likelihood(y, 10**6, scale)
        est = importance_ball_mass(prior, ld, truth, 0.1, HilbertNorm(1.0, scale), 1000, rng())
        assert not est.reliable and est.ess < 50

    def test_min_samples(self):
        prior = GaussianPrior(2.0, 2)
        with pytest.raises(PreconditionError):
            importance_ball_mass(prior, LogDensity.zero(), np.zeros(2), 1.0,
                                 HilbertNorm(0.0, ScaleSpec(trunc=2)), 10, rng())

    def test_auto_fallback(self):
        prior, scale, truth, y = conjugate_problem(5, 10**5)
        ld = small_noise_likelihood(y, 10**5, scale)
        est = ball_masses(prior, ld, truth, [0.05], HilbertNorm(1.0, scale), 4000, rng(), method="auto")
        assert est[0].method == "mcmc"
        with pytest.raises(ValueError):
            ball_masses(prior, ld, truth, [0.05], HilbertNorm(1.0, scale), 4000, rng(), method="x")


class TestPCN:
    def test_prior_invariance(self):
        prior = GaussianPrior(1.0, 4)
        res = pcn_sample(LogDensity.zero(), prior, 0.5, 40_000, 1000, rng())
        assert res.acceptance_rate == 1.0
        var = res.states.var(axis=0)
        se = batch_means_se((res.states - res.states.mean(axis=0)) ** 2)
        assert np.all(np.abs(var - prior.std**2) < 4 * se)

    def test_conjugate_means(self):
        n = 100
        prior, scale, truth, y = conjugate_problem(20, n, seed=1)
        ld = small_noise_likelihood(y, n, scale)
        res = pcn_sample(ld, prior, 0.5, 100_000, 10_000, rng(2))
        mean, _ = conjugate_posterior_diagonal(3, 1, y, n)
        se = batch_means_se(res.states)
        hits = np.sum(np.abs(res.states.mean(axis=0) - mean) <= 3 * se)
        assert hits >= 19

    def test_independence_sampler(self):
        prior, scale, truth, y = conjugate_problem(3, 2, seed=3)
        ld = small_noise_likelihood(y, 2, scale)
        res = pcn_sample(ld, prior, 1.0, 50_000, 0, rng(4), tune=False)
        # acceptance of an independence sampler: E_{x ~ post, x' ~ prior} min(1, L(x')/L(x))
        s = prior.sample_states(rng(5), 4000)
        ll = ld(s)
        w = np.exp(ll - ll.max())
        w /= w.sum()
        pair = np.minimum(1.0, np.exp(ll[None, :] - ll[:, None])).mean(axis=1)
        expected = float(np.dot(w, pair))
        assert abs(res.acceptance_rate - expected) < 0.03

    @pytest.mark.parametrize("seed", [6, 7])
    def test_tuning_reaches_target_band(self, seed):
        prior, scale, _, y = conjugate_problem(20, 1000, seed=seed)
        res = pcn_sample(small_noise_likelihood(y, 1000, scale), prior, 1.0, 20_000, 10_000, rng(seed))
        assert 0.2 <= res.acceptance_rate <= 0.4 and res.beta < 1.0

    def test_uniform_prior_states_in_support(self):
        prior = UniformPrior.power_law(2.0, 4, mean=2.0, m=16)
        res = pcn_sample(LogDensity.zero(), prior, 0.3, 2000, 100, rng())
        assert np.all(np.abs(res.states) <= 1.0)

    def test_point_mass(self):
        res = pcn_sample(LogDensity.zero(), PointMassPrior((1.0, 2.0)), 0.5, 100, 0, rng())
        assert np.all(res.states == [1.0, 2.0])

    @pytest.mark.parametrize("beta", [0.0, 1.5])
    def test_beta_range(self, beta):
        with pytest.raises(PreconditionError):
            pcn_sample(LogDensity.zero(), GaussianPrior(1.0, 2), beta, 10, 0, rng())

    def test_low_acceptance_warns(self):
        prior, scale, _, y = conjugate_problem(20, 10**7)
        with pytest.warns(RuntimeWarning, match="below 1%"):
            pcn_sample(small_noise_likelihood(y, 10**7, scale), prior, 1.0, 500, 0, rng(), tune=False)

    def test_csv(self, tmp_path):
        res = pcn_sample(LogDensity.zero(), GaussianPrior(1.0, 2), 0.5, 5, 0, rng())
        res.to_csv(tmp_path / "chain.csv")
        lines = (tmp_path / "chain.csv").read_text().splitlines()
        assert lines[0] == "step,c_1,c_2,log_density,accepted" and len(lines) == 6

    def test_ball_masses_agree_with_importance(self):
        n = 100
        prior, scale, truth, y = conjugate_problem(20, n, seed=8)
        norm = HilbertNorm(1.0, scale)
        ld = small_noise_likelihood(y, n, scale)
        radii = [0.15, 0.3]
        mc = pcn_ball_masses(prior, ld, truth, radii, norm, 100_000, rng(9))
        imp = importance_ball_masses(prior, ld, truth, radii, norm, 100_000, rng(10))
        for a, b in zip(mc, imp):
            assert abs(a.mass - b.mass) < 3 * math.hypot(a.stderr, b.stderr)

    def test_batch_means(self):
        x = rng().standard_normal(10_000)
        assert batch_means_se(x) == pytest.approx(0.01, rel=0.4)
        with pytest.raises(ValueError):
            batch_means_se(np.ones(10))


def test_conjugate_sample_moments():
    mean, var = np.array([1.0, -1.0]), np.array([0.25, 4.0])
    draws = conjugate_sample(mean, var, rng(), 100_000)
    np.testing.assert_allclose(draws.mean(axis=0), mean, atol=0.02)
    np.testing.assert_allclose(draws.var(axis=0), var, rtol=0.02)


def test_grid_ball_masses_uniform():
    prior = UniformPrior.power_law(2.0, 4, mean=2.0, m=32)
    est = importance_ball_masses(prior, LogDensity.zero(), prior.field(np.zeros(4)), [10.0],
                                 GridNorm("sup"), 1000, rng())
    assert est[0].mass == 1.0
