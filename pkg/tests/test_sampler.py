import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from semistable import (
    AccuracyError,
    OrderError,
    RangeError,
    build_truncation,
    cf,
    default_grid,
    ecf_values,
    levy_density,
    levy_exponent_closed,
    modulated_moment,
    modulated_tail,
    sample_increment,
    sample_innovation,
    sample_jumps,
    sample_path,
    sample_paths,
    truncated_exponent,
    truncation_bias,
    validate_params,
)

DEFAULT = validate_params(1.0, 0.5, 0.5)


def quad_log(f, lo, hi):
    # integrate f(x) dx over [lo, hi] in log space, one piece per modulation period
    edges = np.linspace(math.log(lo), math.log(hi), 400)
    total = 0.0
    for s0, s1 in zip(edges[:-1], edges[1:]):
        total += integrate.quad(lambda s: f(math.exp(s)) * math.exp(s), s0, s1, epsabs=0, epsrel=1e-13)[0]
    return total


class TestTruncation:
    @pytest.mark.parametrize("alpha, b, eps, delta", [(1.0, 0.5, 0.5, 0.01), (0.6, 0.8, 0.9, 0.05), (1.7, 0.3, 0.2, 0.001)])
    def test_against_quadrature(self, alpha, b, eps, delta):
        p = validate_params(alpha, b, eps, 1.7)
        s = build_truncation(p, delta, quality_floor=0.0)
        lam = 2 * quad_log(lambda x: float(levy_density(x, p)), delta, delta * 1e12)
        lam += 2 * 1.7 * modulated_tail(alpha, delta * 1e12, p)
        sig2 = 2 * quad_log(lambda x: x * x * float(levy_density(x, p)), delta * 1e-60, delta)
        assert s.lambda_delta == pytest.approx(lam, rel=1e-9)
        assert s.sigma2_delta == pytest.approx(sig2, rel=1e-9)

    def test_moment_tail_scaling(self):
        # int over a b-scaled range equals b**p times the original
        p = validate_params(1.2, 0.4, 0.7)
        x = 0.3
        assert modulated_moment(0.8, p.b * x, p) == pytest.approx(p.b**0.8 * modulated_moment(0.8, x, p), rel=1e-13)
        assert modulated_tail(1.2, p.b * x, p) == pytest.approx(p.b**-1.2 * modulated_tail(1.2, x, p), rel=1e-13)

    def test_quality_floor(self):
        with pytest.raises(AccuracyError):
            build_truncation(DEFAULT, 1.0)
        s = build_truncation(DEFAULT, 1.0, quality_floor=0.0)
        assert s.quality < 3.0

    @pytest.mark.parametrize("delta", [0.0, -1.0, float("nan"), "x"])
    def test_bad_delta(self, delta):
        with pytest.raises(RangeError):
            build_truncation(DEFAULT, delta)

    def test_bias_monotone(self):
        grid = default_grid()
        biases = [truncation_bias(build_truncation(DEFAULT, d), DEFAULT, grid) for d in (0.1, 0.03, 0.01, 0.003, 0.001)]
        assert all(x > y for x, y in zip(biases, biases[1:]))
        assert biases[2] < 1e-8

    def test_truncated_exponent_direct(self):
        # psi_delta - psi = 2c int_0^delta (1 - cos ux - (ux)^2/2) nu(x) dx
        p = validate_params(0.8, 0.6, 0.5)
        s = build_truncation(p, 0.05)
        u = 7.0

        def excess(y):
            # 1 - cos y - y^2/2 without cancellation at small y
            if y < 0.1:
                return sum((-1) ** (k + 1) * y ** (2 * k) / math.factorial(2 * k) for k in range(2, 12))
            return 1 - math.cos(y) - y * y / 2

        direct = 2 * quad_log(lambda x: excess(u * x) * float(levy_density(x, p)), 0.05 * 1e-60, 0.05)
        assert truncated_exponent(u, s, p) - levy_exponent_closed(u, p) == pytest.approx(direct, rel=1e-8)

    def test_truncated_exponent_range(self):
        s = build_truncation(DEFAULT, 0.01)
        with pytest.raises(RangeError):
            truncated_exponent(1e4, s, DEFAULT)


class TestJumps:
    @pytest.mark.parametrize("eps", [0.0, 0.5, 0.9])
    def test_magnitude_law(self, eps):
        p = validate_params(1.0, 0.5, eps)
        s = build_truncation(p, 0.01)
        jumps = sample_jumps(s, p, np.random.default_rng(5), 50_000)
        mags = np.abs(jumps)
        assert mags.min() > s.delta
        tail0 = modulated_tail(p.alpha, s.delta, p)

        def cdf(x):
            return 1.0 - modulated_tail(p.alpha, np.maximum(x, s.delta), p) / tail0

        assert stats.kstest(mags, cdf).pvalue > 1e-3
        # symmetric signs
        assert abs(np.mean(jumps > 0) - 0.5) < 0.01

    def test_size_zero(self):
        s = build_truncation(DEFAULT)
        assert sample_jumps(s, DEFAULT, 0, 0).shape == (0,)


class TestIncrements:
    def test_reproducible(self):
        s = build_truncation(DEFAULT)
        a = sample_increment(1.0, s, DEFAULT, 42, size=100)
        b = sample_increment(1.0, s, DEFAULT, np.random.default_rng(42), size=100)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, sample_increment(1.0, s, DEFAULT, 43, size=100))

    def test_shapes_and_zero(self):
        s = build_truncation(DEFAULT)
        assert isinstance(sample_increment(0.5, s, DEFAULT, 0), float)
        assert sample_increment(0.5, s, DEFAULT, 0, size=(3, 4)).shape == (3, 4)
        assert sample_increment(0.0, s, DEFAULT, 0) == 0.0
        with pytest.raises(RangeError):
            sample_increment(-1.0, s, DEFAULT, 0)
        with pytest.raises(ValueError):
            sample_increment(1.0, s, DEFAULT, None)

    def test_marginal_cf(self):
        s = build_truncation(DEFAULT)
        n = 20_000
        grid = default_grid()
        x = sample_increment(1.0, s, DEFAULT, 11, size=n)
        err = np.max(np.abs(ecf_values(x, grid) - cf(grid, 1.0, DEFAULT)))
        assert err < 4 / math.sqrt(n) + truncation_bias(s, DEFAULT, grid)

    def test_innovation_cf(self):
        s = build_truncation(DEFAULT)
        n = 20_000
        grid = default_grid()
        x = sample_innovation(DEFAULT, s, 12, size=n)
        target = cf(DEFAULT.b * grid, DEFAULT.a - 1.0, DEFAULT)
        bias = truncation_bias(s, DEFAULT, grid, t=DEFAULT.a - 1.0, scale=DEFAULT.b)
        assert np.max(np.abs(ecf_values(x, grid) - target)) < 4 / math.sqrt(n) + bias

    @settings(max_examples=10, deadline=None)
    @given(st.floats(0.3, 1.9), st.floats(0.2, 0.8), st.floats(0.0, 0.9), st.integers(0, 2**32))
    def test_finite(self, alpha, b, eps, seed):
        p = validate_params(alpha, b, eps)
        s = build_truncation(p, 0.001)
        x = sample_increment(0.3, s, p, seed, size=200)
        assert np.all(np.isfinite(x))


class TestPaths:
    def test_times_checked(self):
        s = build_truncation(DEFAULT)
        for times in ([0.5, 1.0], [0.0, 1.0, 1.0], [0.0, 2.0, 1.0], [], [0.0, float("nan")]):
            with pytest.raises(OrderError):
                sample_path(DEFAULT, s, times, 0)

    def test_path(self):
        s = build_truncation(DEFAULT)
        times = np.linspace(0, 10, 101)
        path = sample_path(DEFAULT, s, times, 7)
        assert path.values.shape == (101,)
        assert path.values[0] == 0.0
        assert path.seed == 7
        again = sample_path(DEFAULT, s, times, 7)
        assert np.array_equal(path.values, again.values)

    def test_independent_increments(self):
        # Z(2) built from two unit steps matches the Z(2) marginal
        s = build_truncation(DEFAULT)
        n = 20_000
        grid = default_grid()
        paths = sample_paths(DEFAULT, s, [0.0, 1.0, 2.0], 3, n)
        err = np.max(np.abs(ecf_values(paths[:, 2], grid) - cf(grid, 2.0, DEFAULT)))
        assert err < 4 / math.sqrt(n) + truncation_bias(s, DEFAULT, grid, t=2.0)


def test_cauchy_oracle():
    # alpha = 1, eps = 0, c = 1 is the standard Cauchy law: CF exp(-pi |u|)
    p = validate_params(1.0, 0.5, 0.0, 1.0)
    s = build_truncation(p)
    n = 100_000
    grid = default_grid()
    x = sample_increment(1.0, s, p, 99, size=n)
    err = np.max(np.abs(ecf_values(x, grid) - np.exp(-math.pi * grid)))
    assert err <= 4 / math.sqrt(n) + truncation_bias(s, p, grid)
