"""Laguerre polynomials, Gamma machinery and terminating hypergeometric sums.

Everything here returns doubles. Large Gamma ratios are formed in log space
with an explicit sign so that nothing overflows for the degrees used in this
package (up to a few hundred); finite polynomial and hypergeometric sums are
accumulated exactly in rationals and rounded once.
"""
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DegreeOutOfRange, DomainError, PoleError

__all__ = [
    "LaguerreFamily",
    "HypergeometricSpec",
    "laguerre_eval",
    "laguerre_explicit",
    "laguerre_derivative",
    "laguerre_damped_table",
    "log_gamma",
    "log_gamma_signed",
    "pochhammer",
    "generalized_binomial",
    "hypergeometric_terminating",
    "gauss_2f1",
    "laguerre_moment_integral",
    "compensated_sum",
]

_LOG_DBL_MAX = math.log(np.finfo(float).max)


def compensated_sum(values) -> float:
    """Sum of an iterable of floats with exact rounding (Shewchuk via ``math.fsum``)."""
    return math.fsum(float(v) for v in np.ravel(values))


def _is_nonpositive_integer(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


@dataclass(frozen=True)
class LaguerreFamily:
    """Generalized Laguerre polynomials L_n^(alpha) up to ``max_degree``."""

    alpha: float = 0.0
    max_degree: int = 512

    def __post_init__(self):
        if self.alpha < 0:
            raise DomainError(f"Laguerre parameter must be >= 0, got {self.alpha}")
        if self.max_degree < 0:
            raise DomainError("max_degree must be non-negative")

    def __call__(self, n, x):
        return laguerre_eval(self, n, x)


def _check_args(family: LaguerreFamily, n: int, x):
    if n < 0 or n > family.max_degree:
        raise DegreeOutOfRange(f"degree {n} outside [0, {family.max_degree}]")
    xa = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xa)):
        raise DomainError("x must be finite")
    if np.any(xa < 0):
        raise DomainError("Laguerre evaluation requires x >= 0")
    return xa


def laguerre_eval(family: LaguerreFamily, n: int, x):
    """L_n^(alpha)(x) by the forward three-term recurrence.

    ``x`` may be a scalar or an array; the return type follows the input.
    """
    xa = _check_args(family, n, x)
    a = family.alpha
    prev = np.zeros_like(xa)
    cur = np.ones_like(xa)
    for k in range(n):
        prev, cur = cur, ((2 * k + 1 + a - xa) * cur - (k + a) * prev) / (k + 1)
    return float(cur) if cur.ndim == 0 else cur


def laguerre_explicit(n: int, alpha: float, x: float) -> float:
    """L_n^(alpha)(x) from the explicit binomial sum; used as an independent oracle.

    sum_k (-1)^k C(n + alpha, n - k) x^k / k!, summed exactly in rationals.
    """
    if n < 0:
        raise DegreeOutOfRange("degree must be non-negative")
    a, xq = Fraction(alpha), Fraction(x)
    total = Fraction(0)
    for k in range(n + 1):
        binom = Fraction(1)
        for j in range(n - k):  # C(n + a, n - k) as a falling product
            binom = binom * (n + a - j) / (j + 1)
        total += (-1) ** k * binom * xq**k / math.factorial(k)
    return float(total)


def laguerre_derivative(n: int, x):
    """d/dx L_n(x) = -L_{n-1}^(1)(x)."""
    if n < 0:
        raise DegreeOutOfRange("degree must be non-negative")
    if n == 0:
        xa = np.asarray(x, dtype=float)
        return 0.0 if xa.ndim == 0 else np.zeros_like(xa)
    val = laguerre_eval(LaguerreFamily(1.0, n - 1), n - 1, x)
    return -val


def laguerre_damped_table(n_max: int, alpha: float, x) -> np.ndarray:
    """Rows k = 0..n_max of exp(-x/2) * L_k^(alpha)(x) on the grid ``x``.

    The damping keeps the values bounded (|e^{-x/2} L_k| <= 1 for alpha = 0)
    so squares never overflow, even far out in the exponential region where
    L_k itself exceeds the double range. The recurrence runs on a rescaled
    mantissa with a running log-scale; entries that truly underflow come
    back as zero.
    """
    if n_max < 0:
        raise DegreeOutOfRange("n_max must be non-negative")
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xa < 0) or not np.all(np.isfinite(xa)):
        raise DomainError("grid must be finite and non-negative")
    out = np.empty((n_max + 1, xa.size))
    log_scale = -0.5 * xa
    prev = np.zeros_like(xa)
    cur = np.ones_like(xa)
    big = 1e150
    log_big = math.log(big)
    for k in range(n_max + 1):
        out[k] = cur * np.exp(log_scale)
        if k == n_max:
            break
        prev, cur = cur, ((2 * k + 1 + alpha - xa) * cur - (k + alpha) * prev) / (k + 1)
        hot = np.abs(cur) > big
        if np.any(hot):
            cur = np.where(hot, cur / big, cur)
            prev = np.where(hot, prev / big, prev)
            log_scale = np.where(hot, log_scale + log_big, log_scale)
    return out


def log_gamma(x: float) -> float:
    """ln Gamma(x) for x > 0."""
    if _is_nonpositive_integer(x):
        raise PoleError(f"Gamma has a pole at {x}")
    if x < 0:
        raise DomainError("log_gamma needs x > 0; use log_gamma_signed for negative x")
    return math.lgamma(x)


def log_gamma_signed(x: float) -> tuple[float, int]:
    """(ln|Gamma(x)|, sign Gamma(x)) for any x that is not a non-positive integer."""
    if _is_nonpositive_integer(x):
        raise PoleError(f"Gamma has a pole at {x}")
    if x > 0:
        return math.lgamma(x), 1
    # Gamma alternates sign between consecutive negative integers.
    sign = -1 if math.floor(-x) % 2 == 0 else 1
    return math.lgamma(x), sign


def _gamma_ratio_signed(num: Sequence[float], den: Sequence[float]) -> float:
    """prod Gamma(num) / prod Gamma(den); a pole in ``den`` gives 0."""
    if any(_is_nonpositive_integer(v) for v in den):
        if any(_is_nonpositive_integer(v) for v in num):
            raise PoleError("indeterminate Gamma ratio (poles in numerator and denominator)")
        return 0.0
    log_val, sign = 0.0, 1
    for v in num:
        lg, s = log_gamma_signed(v)
        log_val += lg
        sign *= s
    for v in den:
        lg, s = log_gamma_signed(v)
        log_val -= lg
        sign *= s
    if log_val > _LOG_DBL_MAX:
        return sign * math.inf
    return sign * math.exp(log_val)


def pochhammer(x: float, n: int) -> float:
    """Rising factorial (x)_n = x (x+1) ... (x+n-1)."""
    if n < 0 or int(n) != n:
        raise DomainError("Pochhammer index must be a non-negative integer")
    n = int(n)
    if n == 0:
        return 1.0
    if _is_nonpositive_integer(x) and n > -x:
        return 0.0
    prod = 1.0
    for k in range(n):
        prod *= x + k
    if (math.isfinite(prod) and prod != 0.0) or _is_nonpositive_integer(x):
        return prod
    # overflow or underflow of the product: go through log-Gamma
    return _gamma_ratio_signed([x + n], [x])


def generalized_binomial(a: float, b: float) -> float:
    """Gamma(a+1) / (Gamma(b+1) Gamma(a-b+1)).

    Integer ``b >= 0`` uses the falling-factorial form, which stays finite when
    ``a`` is a negative integer or ``a - b + 1`` is a pole.
    """
    if float(b).is_integer() and b >= 0:
        k = int(b)
        if k <= 20:
            return pochhammer(a - k + 1, k) / math.factorial(k)
        return _binom_logspace(a, k)
    if _is_nonpositive_integer(a - b + 1) or _is_nonpositive_integer(a + 1):
        raise PoleError(f"binomial({a}, {b}) hits a Gamma pole")
    return _gamma_ratio_signed([a + 1], [b + 1, a - b + 1])


def _binom_logspace(a: float, k: int) -> float:
    # product (a - i)/(i + 1), accumulated in logs
    log_val, sign = 0.0, 1
    for i in range(k):
        f = (a - i) / (i + 1)
        if f == 0:
            return 0.0
        if f < 0:
            sign = -sign
        log_val += math.log(abs(f))
    return sign * math.exp(log_val)


@dataclass(frozen=True)
class HypergeometricSpec:
    """A terminating pFq(numerator; denominator; argument) series."""

    numerator_params: tuple
    denominator_params: tuple
    argument: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "numerator_params", tuple(float(a) for a in self.numerator_params))
        object.__setattr__(self, "denominator_params", tuple(float(b) for b in self.denominator_params))

    @property
    def termination_index(self) -> int:
        stops = [int(-a) for a in self.numerator_params if _is_nonpositive_integer(a)]
        if not stops:
            raise DomainError("series does not terminate: no non-positive integer numerator parameter")
        return min(stops)


def hypergeometric_terminating(spec: HypergeometricSpec, max_terms: int = 10_000) -> float:
    """sum_{n=0}^{m} prod (a_i)_n / (prod (b_j)_n n!) z^n for a terminating series."""
    m = spec.termination_index
    if m > max_terms:
        raise DomainError(f"termination index {m} exceeds {max_terms}")
    for b in spec.denominator_params:
        # (b)_n vanishes once n > -b
        if _is_nonpositive_integer(b) and -b < m:
            raise PoleError(f"denominator parameter {b} vanishes before termination at n={m}")
    # Float parameters are exact dyadic rationals, so the terms can be summed
    # exactly and rounded once; alternating series cancel badly in doubles.
    z = Fraction(spec.argument)
    nums = [Fraction(a) for a in spec.numerator_params]
    dens = [Fraction(b) for b in spec.denominator_params]
    t = Fraction(1)
    total = Fraction(1)
    for n in range(m):
        num = z
        for a in nums:
            num *= a + n
        den = Fraction(n + 1)
        for b in dens:
            den *= b + n
        t *= num / den
        total += t
    return float(total)


def gauss_2f1(a: float, b: float, c: float) -> float:
    """Gauss summation 2F1(a, b; c; 1) = Gamma(c)Gamma(c-a-b) / (Gamma(c-a)Gamma(c-b))."""
    return _gamma_ratio_signed([c, c - a - b], [c - a, c - b])


def laguerre_moment_integral(p: float, alpha: float, beta: float, m: int, n: int) -> float:
    """Closed form of int_0^inf x^p e^{-x} L_m^(alpha)(x) L_n^(beta)(x) dx, p > -1.

    Gamma(p+1) sum_{i=0}^{min(m,n)} (-1)^{m+n} C(p-alpha, m-i) C(p-beta, n-i) C(p+i, i).
    """
    if p <= -1:
        raise DomainError("moment integral needs p > -1")
    if m < 0 or n < 0:
        raise DegreeOutOfRange("degrees must be non-negative")
    sign = -1.0 if (m + n) % 2 else 1.0
    terms = [
        sign
        * generalized_binomial(p - alpha, m - i)
        * generalized_binomial(p - beta, n - i)
        * generalized_binomial(p + i, i)
        for i in range(min(m, n) + 1)
    ]
    return math.exp(log_gamma(p + 1)) * math.fsum(terms)
