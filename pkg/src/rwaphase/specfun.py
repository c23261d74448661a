"""Bessel functions of the first kind and complete elliptic integrals.

The kernels are plain loops compiled with numba so the lab and RWA
integrators can call them from jitted code; the public wrappers validate
their arguments and return Python floats.
"""
from __future__ import annotations

import math

from numba import njit

from .errors import DomainError, UsageError

MAX_ORDER = 60
MAX_ARG = 1.0e3

# ascending series is used only where its terms stay below ~1e2 in size
SERIES_SWITCH = 2.0


@njit(cache=True)
def _jn_series(n, x):
    half = 0.5 * x
    term = 1.0
    for i in range(1, n + 1):
        term *= half / i
    total = term
    q = half * half
    m = 0
    while True:
        m += 1
        term *= -q / (m * (m + n))
        total += term
        if abs(term) < 1e-17 * abs(total) or m > 200:
            break
    return total


@njit(cache=True)
def _jn_miller(n, x):
    # downward recurrence normalised by J0 + 2*sum(J_2k) = 1
    top = max(n, int(x)) + 20 + int(math.sqrt(40.0 * max(n, x)))
    if top % 2 == 1:
        top += 1
    j_next = 0.0
    j_cur = 1e-30
    norm = 0.0
    result = 0.0
    for k in range(top, 0, -1):
        j_prev = (2.0 * k / x) * j_cur - j_next
        j_next = j_cur
        j_cur = j_prev
        if abs(j_cur) > 1e250:
            j_cur *= 1e-250
            j_next *= 1e-250
            norm *= 1e-250
            result *= 1e-250
        if k - 1 == n:
            result = j_cur
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j_cur
    norm += j_cur
    return result / norm


@njit(cache=True)
def jn(n, x):
    """J_n(x) for integer n >= 0 and x >= 0 (no argument checks)."""
    if x == 0.0:
        return 1.0 if n == 0 else 0.0
    if x <= SERIES_SWITCH:
        return _jn_series(n, x)
    return _jn_miller(n, x)


@njit(cache=True)
def jn_prime(n, x):
    if n == 0:
        return -jn(1, x)
    return 0.5 * (jn(n - 1, x) - jn(n + 1, x))


@njit(cache=True)
def jn_over_pow(n, x):
    """J_n(x) / x**n, finite at the origin."""
    if x == 0.0:
        val = 1.0
        for i in range(1, n + 1):
            val /= 2.0 * i
        return val
    if x <= SERIES_SWITCH:
        # the series with the x**n factor removed
        half = 0.5 * x
        term = 1.0
        for i in range(1, n + 1):
            term /= 2.0 * i
        total = term
        q = half * half
        m = 0
        while True:
            m += 1
            term *= -q / (m * (m + n))
            total += term
            if abs(term) < 1e-17 * abs(total) or m > 200:
                break
        return total
    return _jn_miller(n, x) / x**n


def _check_bessel_args(n, x):
    if int(n) != n or n < 0 or n > MAX_ORDER:
        raise UsageError(f"Bessel order must be an integer in [0, {MAX_ORDER}], got {n}")
    if not (0.0 <= x <= MAX_ARG):
        raise UsageError(f"Bessel argument must lie in [0, {MAX_ARG}], got {x}")


def bessel_j(n: int, x: float) -> float:
    """Bessel function of the first kind J_n(x).

    Uses the ascending power series for small arguments and Miller's
    normalised downward recurrence elsewhere.
    """
    _check_bessel_args(n, x)
    return float(jn(int(n), float(x)))


def bessel_j_prime(n: int, x: float) -> float:
    """dJ_n/dx via (J_{n-1} - J_{n+1})/2, with J_0' = -J_1."""
    _check_bessel_args(n, x)
    return float(jn_prime(int(n), float(x)))


def cos_half_pi(k: int) -> int:
    """cos(k*pi/2) for integer k, exactly."""
    return (1, 0, -1, 0)[k % 4]


# quadratic convergence; the cap guards against a last-ulp flip-flop
_AGM_MAX_ITER = 64


def _agm_check(modulus):
    if not (0.0 <= modulus < 1.0):
        raise DomainError(f"elliptic modulus must lie in [0, 1), got {modulus}")


def elliptic_k(modulus: float) -> float:
    """Complete elliptic integral of the first kind, K(k) = int_0^{pi/2} dt / sqrt(1 - k^2 sin^2 t).

    The argument is the modulus k (not the parameter m = k^2).
    Computed from the arithmetic-geometric mean K = pi / (2 AGM(1, sqrt(1 - k^2))).
    """
    _agm_check(modulus)
    a, b = 1.0, math.sqrt((1.0 - modulus) * (1.0 + modulus))
    for _ in range(_AGM_MAX_ITER):
        if abs(a - b) <= 4e-16 * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return math.pi / (a + b)


def elliptic_e(modulus: float) -> float:
    """Complete elliptic integral of the second kind E(k), modulus convention."""
    _agm_check(modulus)
    a, b = 1.0, math.sqrt((1.0 - modulus) * (1.0 + modulus))
    c2_sum = 0.5 * modulus * modulus
    power = 0.5
    for _ in range(_AGM_MAX_ITER):
        if abs(a - b) <= 4e-16 * a:
            break
        c = 0.5 * (a - b)
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        power *= 2.0
        c2_sum += power * c * c
    k_val = math.pi / (a + b)
    return k_val * (1.0 - c2_sum)
