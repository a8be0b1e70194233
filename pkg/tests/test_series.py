import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gnft.series import (
    partition_weight,
    partitions,
    quotient_derivative,
    series_derivative,
    series_from_derivs,
    series_mul,
    series_pow,
    series_shift,
)

# number of partitions of 0..10
PARTITION_COUNTS = [1, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42]


class TestPartitions:
    def test_counts(self):
        for m, count in enumerate(PARTITION_COUNTS):
            assert len(partitions(m)) == count

    def test_explicit_m4(self):
        # multiplicity form: p[i-1] = number of parts equal to i
        got = set(partitions(4))
        assert got == {(0, 0, 0, 1), (1, 0, 1, 0), (0, 2, 0, 0), (2, 1, 0, 0), (4, 0, 0, 0)}

    @given(st.integers(0, 12))
    def test_weights_sum(self, m):
        # sum over partitions of m!/prod(p_i! i!^p_i) counts set partitions by
        # block sizes; against direct Bell-style recursion via exp series:
        # sum of weights equals the coefficient identity sum = B(m)-like
        # quantity; here check each partition satisfies sum(i*p_i) = m instead.
        for p in partitions(m):
            assert sum(i * pi for i, pi in enumerate(p, start=1)) == m
            assert partition_weight(p) > 0


class TestQuotientDerivative:
    @pytest.mark.parametrize("n", range(6))
    def test_against_high_precision_oracle(self, n):
        # c = exp(2x) cos(x), a = 1 + x/2 + x^3 at x0 = 0.3
        x0 = 0.3

        def c(x):
            return mpmath.exp(2 * x) * mpmath.cos(x)

        def a(x):
            return 1 + x / 2 + x**3

        c_derivs = [complex(mpmath.diff(c, x0, k)) for k in range(n + 1)]
        a_derivs = [complex(mpmath.diff(a, x0, k)) for k in range(n + 1)]
        expect = complex(mpmath.diff(lambda x: c(x) / a(x), x0, n))
        got = quotient_derivative(np.array(c_derivs), np.array(a_derivs), n)
        assert got == pytest.approx(expect, rel=1e-9)

    def test_batched_matches_scalar(self):
        rng = np.random.default_rng(7)
        c = rng.standard_normal((4, 5)) + 1j * rng.standard_normal((4, 5))
        a = rng.standard_normal((4, 5)) + 1j * rng.standard_normal((4, 5))
        a[0] += 3.0
        batched = quotient_derivative(c, a, 3)
        for k in range(5):
            assert batched[k] == pytest.approx(quotient_derivative(c[:, k], a[:, k], 3))

    def test_zero_denominator(self):
        with pytest.raises(ZeroDivisionError):
            quotient_derivative(np.ones(2), np.array([0.0, 1.0]), 1)


class TestSeries:
    def test_mul_matches_polynomial_product(self):
        x = np.array([1.0, 2.0, 3.0])
        y = np.array([0.5, -1.0, 4.0])
        got = series_mul(x, y, 4)
        expect = np.polynomial.polynomial.polymul(x, y)[:5]
        assert np.allclose(got[: expect.size], expect)

    def test_pow(self):
        x = np.array([1.0, 1.0])
        assert np.allclose(series_pow(x, 3, 3), [1, 3, 3, 1])

    def test_shift(self):
        assert np.allclose(series_shift(np.array([1.0, 2.0]), 2, 4), [0, 0, 1, 2, 0])

    def test_derivative_series(self):
        # f = sum x^k/k!: every derivative has the same series
        coeffs = series_from_derivs(np.ones(8), 7)
        d2 = series_derivative(coeffs, 2, 5)
        assert np.allclose(d2, coeffs[:6])

    def test_from_derivs_zero_extends(self):
        s = series_from_derivs(np.array([1.0, 2.0]), 4)
        assert np.allclose(s, [1.0, 2.0, 0.0, 0.0, 0.0])
