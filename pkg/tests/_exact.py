"""Exact rational oracles: Laguerre coefficients and Gamma-weighted moments.

Half-integer moments are returned as rationals q with the integral equal to
q * sqrt(pi).
"""
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial


@lru_cache(maxsize=None)
def laguerre_coeffs(n, alpha):
    """Coefficients of L_n^(alpha), alpha a non-negative integer."""
    return tuple(Fraction((-1) ** k * comb(n + alpha, n - k), factorial(k)) for k in range(n + 1))


def poly_mul(p, q):
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return out


def gamma_half(m):
    """Gamma(m + 1/2) / sqrt(pi) for integer m >= 0."""
    num = Fraction(1)
    for j in range(m):
        num *= Fraction(2 * j + 1, 2)
    return num


def half_moment(poly, shift):
    """int x^{shift + 1/2} e^{-x} poly(x) dx / sqrt(pi), shift an integer >= 0."""
    return sum(c * gamma_half(k + shift + 1) for k, c in enumerate(poly))


def i1_exact(d):
    p = laguerre_coeffs(d, 0)
    return half_moment(poly_mul(p, p), 0)


def i2_exact(d):
    return half_moment(poly_mul(laguerre_coeffs(d, 1), laguerre_coeffs(d - 1, 1)), 1)


def alpha_exact_sum(d):
    """sum_{n<d} I1(n) / sqrt(pi); alpha_C(d) = this * sqrt(pi) * d^{-3/2}."""
    return sum(i1_exact(n) for n in range(d))
