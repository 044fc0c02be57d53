import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from adenoise.errors import InvalidArgument
from adenoise.signals import (
    ComplexSignal,
    complex_norm,
    convolve_oracle,
    dft,
    idft,
    restrict,
    scaled_lp_seminorm,
    vec,
    vec_adjoint,
    zero_pad,
)


def crandn(rng, size):
    return rng.standard_normal(size) + 1j * rng.standard_normal(size)


def brute_dft(x):
    L = x.size
    k = np.arange(L)
    return np.exp(2j * np.pi * np.outer(k, k) / L) @ x / np.sqrt(L)


finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
complex_arrays = st.integers(1, 40).flatmap(
    lambda L: st.tuples(arrays(np.float64, L, elements=finite), arrays(np.float64, L, elements=finite))
).map(lambda p: p[0] + 1j * p[1])


class TestComplexSignal:
    def test_support(self):
        s = ComplexSignal.two_sided([1, 2, 3, 4, 5])
        assert (s.support_start, s.support_end, s.length) == (-2, 2, 5)
        assert s[-2] == 1 and s[2] == 5 and s[3] == 0 and s[-7] == 0

    def test_window_outside_support_is_zero(self):
        s = ComplexSignal.one_sided([1, 2])
        np.testing.assert_array_equal(s.window(-1, 2), [0, 1, 2, 0])

    def test_two_sided_needs_odd_length(self):
        with pytest.raises(InvalidArgument):
            ComplexSignal.two_sided([1, 2])

    def test_empty_rejected(self):
        with pytest.raises(InvalidArgument):
            ComplexSignal([])

    def test_values_read_only(self):
        s = ComplexSignal.one_sided([1, 2])
        with pytest.raises(ValueError):
            s.values[0] = 3


class TestDFT:
    def test_impulse(self):
        np.testing.assert_allclose(dft([1, 0, 0, 0]), [0.5] * 4, atol=1e-15)

    def test_ones(self):
        np.testing.assert_allclose(dft([1, 1, 1, 1]), [2, 0, 0, 0], atol=1e-15)

    def test_matches_brute_force(self):
        x = crandn(np.random.default_rng(0), 8)
        ref = brute_dft(x)
        assert np.linalg.norm(dft(x) - ref) <= 1e-12 * np.linalg.norm(ref)

    def test_sign_convention_is_positive_exponent(self):
        # frequency-1 complex exponential lands in coordinate 1
        L = 5
        x = np.exp(-2j * np.pi * np.arange(L) / L)
        out = dft(x)
        assert abs(out[1] - np.sqrt(L)) < 1e-12

    def test_odd_lengths_exact(self):
        rng = np.random.default_rng(1)
        for L in (3, 9, 33, 201):
            x = crandn(rng, L)
            assert dft(x).size == L
            np.testing.assert_allclose(dft(x), brute_dft(x), rtol=0, atol=1e-11)

    def test_idft_examples(self):
        np.testing.assert_allclose(idft([2, 0, 0, 0]), [1, 1, 1, 1], atol=1e-15)
        np.testing.assert_allclose(idft([0.5] * 4), [1, 0, 0, 0], atol=1e-15)

    def test_roundtrip_length16(self):
        x = crandn(np.random.default_rng(2), 16)
        np.testing.assert_allclose(idft(dft(x)), x, rtol=0, atol=1e-12 * np.linalg.norm(x))

    def test_accepts_signal(self):
        s = ComplexSignal.two_sided([0, 1, 0])
        np.testing.assert_allclose(dft(s), dft([0, 1, 0]))

    @pytest.mark.parametrize("f", [dft, idft])
    def test_empty(self, f):
        with pytest.raises(InvalidArgument):
            f([])

    @given(complex_arrays)
    def test_parseval(self, x):
        nx = np.linalg.norm(x)
        assert abs(np.linalg.norm(dft(x)) - nx) <= 1e-12 * max(nx, 1e-300) + 1e-300

    @given(complex_arrays)
    def test_inverse_both_ways(self, x):
        tol = 1e-12 * max(np.linalg.norm(x), 1.0)
        assert np.linalg.norm(idft(dft(x)) - x) <= tol
        assert np.linalg.norm(dft(idft(x)) - x) <= tol


class TestVec:
    def test_examples(self):
        np.testing.assert_array_equal(vec([1 + 2j]), [1, 2])
        np.testing.assert_array_equal(vec([1j, -1]), [0, 1, -1, 0])

    def test_odd_dimension(self):
        with pytest.raises(InvalidArgument):
            vec_adjoint(np.zeros(3))

    def test_inner_product_length5(self):
        rng = np.random.default_rng(3)
        z, w = crandn(rng, 5), crandn(rng, 5)
        assert abs(vec(z) @ vec(w) - np.vdot(w, z).real) < 1e-14 * np.linalg.norm(z) * np.linalg.norm(w)

    @given(complex_arrays)
    def test_roundtrip_exact(self, z):
        np.testing.assert_array_equal(vec_adjoint(vec(z)), z)
        u = vec(z)
        np.testing.assert_array_equal(vec(vec_adjoint(u)), u)

    @given(complex_arrays, st.integers(0, 2**32 - 1))
    def test_isometry(self, z, seed):
        w = crandn(np.random.default_rng(seed), z.size)
        lhs = vec(z) @ vec(w)
        rhs = np.vdot(w, z).real
        assert abs(lhs - rhs) <= 1e-12 * (np.linalg.norm(z) * np.linalg.norm(w) + 1)

    def test_complex_norm(self):
        u = vec([3 + 4j, 1j])
        assert complex_norm(u, 1) == 6.0
        assert complex_norm(u, np.inf) == 5.0
        assert abs(complex_norm(u, 2) - np.sqrt(26)) < 1e-15


class TestRestrictPad:
    def test_examples(self):
        np.testing.assert_array_equal(restrict(np.array([1, 2, 3])), [1, 2])
        np.testing.assert_array_equal(restrict(np.array([1, 2, 3]), 1), [1])
        np.testing.assert_array_equal(zero_pad(np.array([5]), 3), [5, 0, 0])
        np.testing.assert_array_equal(zero_pad(np.array([5, 6])), [5, 6, 0])

    def test_size_errors(self):
        with pytest.raises(InvalidArgument):
            restrict(np.zeros(4))
        with pytest.raises(InvalidArgument):
            restrict(np.zeros(3), 4)
        with pytest.raises(InvalidArgument):
            zero_pad(np.zeros(3), 2)

    def test_adjoint_n7(self):
        rng = np.random.default_rng(4)
        v, w = crandn(rng, 15), crandn(rng, 8)
        assert abs(np.vdot(w, restrict(v)) - np.vdot(zero_pad(w, 15), v)) < 1e-14 * 20

    @given(st.integers(0, 30), st.integers(0, 2**32 - 1))
    def test_adjoint_property(self, n, seed):
        rng = np.random.default_rng(seed)
        v, w = crandn(rng, 2 * n + 1), crandn(rng, n + 1)
        lhs = np.vdot(w, restrict(v))
        rhs = np.vdot(zero_pad(w, 2 * n + 1), v)
        assert abs(lhs - rhs) <= 1e-14 * (1 + np.linalg.norm(v) * np.linalg.norm(w))


class TestSeminorm:
    def test_constant(self):
        assert scaled_lp_seminorm(ComplexSignal.one_sided([2, 2, 2, 2]), 3, 2) == pytest.approx(2, abs=1e-15)

    def test_impulse_p1(self):
        assert scaled_lp_seminorm(ComplexSignal.one_sided([1]), 3, 1) == 0.25

    def test_random_p2(self):
        rng = np.random.default_rng(5)
        s = ComplexSignal.two_sided(crandn(rng, 21))
        ref = np.linalg.norm(s.window(0, 10)) / np.sqrt(11)
        assert scaled_lp_seminorm(s, 10, 2) == pytest.approx(ref, rel=1e-14)

    def test_inf(self):
        s = ComplexSignal(np.array([9, 1, -3j, 2]), -1)
        assert scaled_lp_seminorm(s, 2, np.inf) == 3.0

    def test_errors(self):
        s = ComplexSignal.one_sided([1])
        with pytest.raises(InvalidArgument):
            scaled_lp_seminorm(s, 0, 0.5)
        with pytest.raises(InvalidArgument):
            scaled_lp_seminorm(s, -1, 2)


class TestConvolveOracle:
    def test_identity_filter(self):
        y = crandn(np.random.default_rng(6), 9)
        out = convolve_oracle(ComplexSignal.one_sided([1]), ComplexSignal.two_sided(y), 4)
        np.testing.assert_array_equal(out, y[4:])

    def test_unit_lag(self):
        y = crandn(np.random.default_rng(7), 9)
        out = convolve_oracle(ComplexSignal.one_sided([0, 1]), ComplexSignal.two_sided(y), 4)
        np.testing.assert_array_equal(out, y[3:8])

    def test_against_numpy_convolve(self):
        rng = np.random.default_rng(8)
        n = 16
        phi, y = crandn(rng, n + 1), crandn(rng, 2 * n + 1)
        full = np.convolve(phi, y)  # index k <-> time k - n
        np.testing.assert_allclose(convolve_oracle(phi, y, n), full[n:2 * n + 1], atol=1e-12)

    def test_support_violations(self):
        with pytest.raises(InvalidArgument):
            convolve_oracle(ComplexSignal(np.ones(2), -1), np.ones(5), 2)
        with pytest.raises(InvalidArgument):
            convolve_oracle(np.ones(3), np.ones(7), 2)

    @settings(max_examples=30)
    @given(st.integers(0, 12), st.integers(0, 2**32 - 1))
    def test_impulse_reproduces_y(self, n, seed):
        y = crandn(np.random.default_rng(seed), 2 * n + 1)
        np.testing.assert_array_equal(convolve_oracle([1.0], y, n), y[n:])
