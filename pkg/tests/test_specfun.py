import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from rwaphase.errors import DomainError, UsageError
from rwaphase.specfun import bessel_j, bessel_j_prime, cos_half_pi, elliptic_e, elliptic_k, jn_over_pow

mpmath.mp.dps = 30


def series_j(n, x, terms=60):
    """Ascending power series in exact-ish arithmetic."""
    x = mpmath.mpf(x)
    return float(sum((-1) ** m * (x / 2) ** (2 * m + n) / (mpmath.factorial(m) * mpmath.factorial(m + n))
                     for m in range(terms)))


def k_quad(k):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(lambda t: 1.0 / math.sqrt(1.0 - (k * math.sin(t)) ** 2), 0.0, math.pi / 2,
                                epsabs=1e-15, epsrel=1e-15, limit=200)
    return val


def test_bessel_origin_values():
    assert bessel_j(0, 0.0) == 1.0
    for n in range(1, 8):
        assert bessel_j(n, 0.0) == 0.0


def test_bessel_known_value():
    assert bessel_j(2, 1.0) == pytest.approx(0.114903484932, abs=1e-12)
    assert abs(bessel_j(2, 1.0) - series_j(2, 1.0)) <= 1e-14


@given(st.integers(0, 10), st.floats(0.0, 20.0))
def test_bessel_vs_series(n, x):
    assert abs(bessel_j(n, x) - series_j(n, x, terms=80)) <= 1e-12


@given(st.integers(0, 60), st.floats(0.0, 1000.0))
def test_bessel_vs_mpmath_full_range(n, x):
    assert abs(bessel_j(n, x) - float(mpmath.besselj(n, x))) <= 1e-12


@given(st.integers(1, 30), st.floats(0.05, 200.0))
def test_bessel_recurrence(n, x):
    lhs = bessel_j(n - 1, x) + bessel_j(n + 1, x)
    assert abs(lhs - 2 * n / x * bessel_j(n, x)) <= 1e-10 * max(1.0, 2 * n / x)


def test_bessel_prime_origin():
    assert bessel_j_prime(0, 0.0) == 0.0
    assert bessel_j_prime(1, 0.0) == 0.5


@given(st.integers(0, 12), st.floats(0.1, 50.0))
def test_bessel_prime_finite_difference(n, x):
    h = 1e-5
    fd = (bessel_j(n, x + h) - bessel_j(n, x - h)) / (2 * h)
    assert abs(bessel_j_prime(n, x) - fd) <= 1e-8


@given(st.integers(0, 8), st.floats(1e-6, 30.0))
def test_jn_over_pow(n, x):
    assert jn_over_pow(n, x) == pytest.approx(bessel_j(n, x) / x**n, rel=1e-11, abs=1e-300)


@pytest.mark.parametrize("args", [(-1, 1.0), (61, 1.0), (2, -0.1), (2, 1001.0), (2, float("nan")), (1.5, 1.0)])
def test_bessel_out_of_range(args):
    with pytest.raises(UsageError):
        bessel_j(*args)
    with pytest.raises(UsageError):
        bessel_j_prime(*args)


def test_elliptic_examples():
    assert elliptic_k(0.0) == pytest.approx(math.pi / 2, abs=1e-15)
    assert elliptic_k(0.5) == pytest.approx(1.6857503548, abs=1e-10)


@given(st.floats(0.0, 0.999))
def test_elliptic_k_vs_quadrature(k):
    assert abs(elliptic_k(k) - k_quad(k)) <= 1e-12 * max(1.0, k_quad(k))


@given(st.floats(0.0, 0.999999))
def test_elliptic_vs_mpmath(k):
    assert elliptic_k(k) == pytest.approx(float(mpmath.ellipk(mpmath.mpf(k) ** 2)), rel=1e-13)
    assert elliptic_e(k) == pytest.approx(float(mpmath.ellipe(mpmath.mpf(k) ** 2)), rel=1e-13)


def test_elliptic_monotone():
    vals = [elliptic_k(k) for k in np.linspace(0.0, 0.999, 100)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("k", [1.0, 1.5, -0.1])
def test_elliptic_domain(k):
    with pytest.raises(DomainError):
        elliptic_k(k)


@pytest.mark.parametrize("x,tol", [(50.0, 0.01), (200.0, 0.002)])
def test_imaginary_argument_asymptote(x, tol):
    s = math.sqrt(1 + x * x)
    exact = elliptic_k(x / s) / s
    assert abs(exact - math.log(4 * x) / x) / exact <= tol


def test_cos_half_pi_exact():
    assert [cos_half_pi(k) for k in range(8)] == [1, 0, -1, 0, 1, 0, -1, 0]
    assert all(isinstance(cos_half_pi(k), int) for k in range(8))
