import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from tarbayes import ContractError, InputDomainError, NoiseModel
from tarbayes.noise import divergence_integral_J, hellinger, log_density, log_jump


def gaussian_J(z, sigma=1.0):
    # E|Y z/s^2 + z^2/(2 s^2)| with Y ~ N(0, s^2): folded normal mean
    mu = z * z / (2 * sigma**2)
    s = abs(z) / sigma
    return s * math.sqrt(2 / math.pi) * math.exp(-mu * mu / (2 * s * s)) + mu * math.erf(mu / (s * math.sqrt(2)))


class TestDensity:
    def test_gaussian_at_zero(self, gaussian):
        assert log_density(gaussian, 0.0) == pytest.approx(-0.9189385332, abs=1e-10)

    def test_laplace_at_one(self, laplace):
        assert log_density(laplace, 1.0) == pytest.approx(-math.log(2) - 1, abs=1e-12)

    def test_laplace_at_zero(self, laplace):
        assert log_density(laplace, 0.0) == pytest.approx(-0.6931472, abs=1e-7)

    def test_gaussian_scaled(self):
        expected = -math.log(2 * math.sqrt(2 * math.pi)) - 0.5
        assert NoiseModel("gaussian", 2.0).log_density(2.0) == pytest.approx(expected, abs=1e-14)

    def test_vectorised(self, gaussian):
        x = np.linspace(-3, 3, 7)
        np.testing.assert_allclose(gaussian.log_density(x), stats.norm.logpdf(x), atol=1e-14)

    @pytest.mark.parametrize("family", ["gaussian", "laplace"])
    @pytest.mark.parametrize("sigma", [0.3, 1.0, 2.5])
    def test_normalised(self, family, sigma):
        assert abs(NoiseModel(family, sigma).total_mass() - 1) <= 1e-8

    def test_non_finite_rejected(self, gaussian):
        with pytest.raises(InputDomainError):
            gaussian.log_density(np.array([0.0, np.nan]))
        with pytest.raises(InputDomainError):
            gaussian.log_density(np.inf)

    def test_bad_parameters(self):
        with pytest.raises(ContractError):
            NoiseModel("cauchy", 1.0)
        with pytest.raises(ContractError):
            NoiseModel("gaussian", 0.0)
        with pytest.raises(ContractError):
            NoiseModel("gaussian", -1.0)

    def test_config_round_trip(self, laplace):
        assert NoiseModel.from_config(laplace.to_config()) == laplace


class TestSample:
    @pytest.mark.parametrize("family,var", [("gaussian", 4.0), ("laplace", 8.0)])
    def test_moments(self, family, var):
        noise = NoiseModel(family, 2.0)
        x = noise.sample(np.random.default_rng(3), 10**6)
        se_mean = math.sqrt(var / x.size)
        assert abs(x.mean()) < 4 * se_mean
        assert abs(x.var() / var - 1) < (0.01 if family == "gaussian" else 0.02)
        assert noise.variance == var

    def test_count_zero(self, gaussian):
        assert gaussian.sample(np.random.default_rng(0), 0).shape == (0,)

    def test_same_stream_same_draws(self, gaussian):
        a = gaussian.sample(np.random.default_rng(9), 5)
        b = gaussian.sample(np.random.default_rng(9), 5)
        assert np.array_equal(a, b)


class TestLogJump:
    def test_gaussian_example(self, gaussian):
        assert log_jump(gaussian, 0.0, 1.0) == pytest.approx(-0.5, abs=1e-14)

    def test_laplace_example(self, laplace):
        assert log_jump(laplace, 0.3, -1.0) == pytest.approx(-0.4, abs=1e-12)
        assert log_jump(laplace, 0.2, 0.5) == pytest.approx(-0.5, abs=1e-12)
        assert log_jump(laplace, -0.3, 0.5) == pytest.approx(0.1, abs=1e-12)

    def test_laplace_scale(self):
        noise = NoiseModel("laplace", 2.0)
        # (|e| - |e + d|) / sigma
        assert noise.log_jump(1.0, 1.0) == pytest.approx(-0.5, abs=1e-12)

    def test_gaussian_closed_form(self):
        noise = NoiseModel("gaussian", 1.5)
        e, d = 0.7, -1.1
        expected = -(2 * e * d + d * d) / (2 * 1.5**2)
        assert noise.log_jump(e, d) == pytest.approx(expected, abs=1e-13)

    def test_zero_delta(self, gaussian):
        assert np.all(gaussian.log_jump(np.linspace(-2, 2, 9), 0.0) == 0)

    @pytest.mark.parametrize("family", ["gaussian", "laplace"])
    def test_antisymmetry(self, family):
        noise = NoiseModel(family, 1.0)
        e = np.arange(-64, 65) / 16.0
        for d in (0.25, 1.5, -2.0):
            assert np.all(noise.log_jump(e, d) == -noise.log_jump(e + d, -d))

    @pytest.mark.parametrize("family", ["gaussian", "laplace"])
    def test_half_exponential_moment_is_hellinger(self, family):
        noise = NoiseModel(family, 1.0)
        eps = noise.sample(np.random.default_rng(11), 10**6)
        w = np.exp(0.5 * noise.log_jump(eps, 0.8))
        assert abs(w.mean() - noise.hellinger(0.8).H) < 4 * w.std() / math.sqrt(w.size)


class TestDivergence:
    def test_zero(self, gaussian, laplace):
        assert divergence_integral_J(gaussian, 0.0) == 0.0
        assert divergence_integral_J(laplace, 0.0) == 0.0

    def test_gaussian_one(self, gaussian):
        j = gaussian.divergence_integral(1.0)
        assert j == pytest.approx(gaussian_J(1.0), abs=1e-9)
        assert j == pytest.approx(0.8955927, abs=1e-6)
        assert j <= 1.5

    @pytest.mark.parametrize("z,sigma", [(0.3, 1.0), (2.0, 0.5), (-1.3, 2.0)])
    def test_gaussian_folded_normal(self, z, sigma):
        assert NoiseModel("gaussian", sigma).divergence_integral(z) == pytest.approx(gaussian_J(z, sigma), abs=1e-9)

    def test_laplace_against_monte_carlo(self, laplace):
        eps = laplace.sample(np.random.default_rng(5), 10**7)
        vals = np.abs(laplace.log_jump(eps, 0.5))
        se = vals.std() / math.sqrt(vals.size)
        assert abs(laplace.divergence_integral(0.5) - vals.mean()) < 4 * se

    def test_symmetric_in_sign(self, laplace):
        assert laplace.divergence_integral(0.7) == pytest.approx(laplace.divergence_integral(-0.7), abs=1e-10)

    def test_non_finite(self, gaussian):
        with pytest.raises(InputDomainError):
            gaussian.divergence_integral(math.inf)


class TestHellinger:
    @pytest.mark.parametrize("delta", [0.1, 0.5, 1.0, 2.0, 5.0])
    @pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
    def test_gaussian_closed_form(self, delta, sigma):
        res = hellinger(NoiseModel("gaussian", sigma), delta)
        assert abs(res.H - math.exp(-delta**2 / (8 * sigma**2))) <= 1e-8
        assert res.G == pytest.approx(delta**2 / (8 * sigma**2), rel=1e-7)

    @pytest.mark.parametrize("delta,sigma", [(1.0, 1.0), (0.3, 2.0), (4.0, 0.5)])
    def test_laplace_closed_form(self, delta, sigma):
        r = delta / (2 * sigma)
        assert NoiseModel("laplace", sigma).hellinger(delta).H == pytest.approx((1 + r) * math.exp(-r), abs=1e-10)

    def test_laplace_against_monte_carlo(self, laplace):
        eps = laplace.sample(np.random.default_rng(6), 10**6)
        w = np.exp(0.5 * laplace.log_jump(eps, 1.0))
        assert abs(laplace.hellinger(1.0).H - w.mean()) < 4 * w.std() / math.sqrt(w.size)

    def test_zero(self, gaussian):
        assert gaussian.hellinger(0.0) == (1.0, 0.0)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(-8, 8).filter(lambda d: abs(d) > 1e-3), st.sampled_from(["gaussian", "laplace"]))
    def test_range(self, delta, family):
        h = NoiseModel(family, 1.0).hellinger(delta).H
        assert 0 < h < 1

    @pytest.mark.parametrize("family", ["gaussian", "laplace"])
    def test_lecam_bound(self, family):
        # |H(d) - H(d + e)|^2 <= int |f(y) - f(y + e)| dy
        noise = NoiseModel(family, 1.0)
        for d, e in [(0.5, 0.1), (1.0, 0.5), (2.0, -0.7)]:
            l1, _ = integrate.quad(lambda y: abs(noise.density(y) - noise.density(y + e)), -40, 40,
                                   points=[0.0, -e], limit=200)
            assert (noise.hellinger(d).H - noise.hellinger(d + e).H) ** 2 <= l1
