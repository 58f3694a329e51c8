"""Average singular value of a normalized complex Gaussian matrix.

alpha(d) = int_0^inf x^{1/2} e^{-x} Delta_d(x) dx,  Delta_d = d^{-3/2} sum_{n<d} L_n^2,

evaluated by Gauss-Laguerre quadrature or by closed-form Laguerre moment
sums, together with the dimension recurrence

    alpha(d+1) - alpha(d) = delta_d I1(d) + delta~_d I2(d),
    I1(d) = int x^{1/2} e^{-x} L_d^2,   I2(d) = int x^{3/2} e^{-x} L_d^(1) L_{d-1}^(1),

and numerical checkers for the polynomial identities and bounds around it.
"""
import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import integrate as sp_integrate
from scipy import optimize

from .errors import BoundViolation, CrossCheckError, DomainError, InvariantFailure
from .quadrature import build_rule, integrate_damped, nodes_for_degree
from .specialfn import (
    HypergeometricSpec,
    LaguerreFamily,
    generalized_binomial,
    hypergeometric_terminating,
    laguerre_damped_table,
    laguerre_eval,
    laguerre_moment_integral,
    log_gamma,
)

LIMIT = 8 / (3 * math.pi)
ALPHA_ONE = math.sqrt(math.pi / 4)
RATIO_BOUND = 3 * math.pi**1.5 / 16
REAL_GAP = 4.02
D_MAX = 200

_ROUTE_RTOL = 1e-6
_DIFF_ATOL = 1e-7
_ROUNDOFF = 1e-12


class Route(str, enum.Enum):
    QUADRATURE = "quadrature"
    CLOSED_FORM = "closed_form"
    MONTE_CARLO = "monte_carlo"


def _check_d(d, lo=1):
    if int(d) != d or d < lo:
        raise DomainError(f"dimension must be an integer >= {lo}, got {d}")
    if d > D_MAX + 1:
        raise DomainError(f"dimension {d} above the supported cap {D_MAX}")
    return int(d)


_L0 = LaguerreFamily(0.0, 1024)
_L1 = LaguerreFamily(1.0, 1024)


@dataclass(frozen=True)
class DensityContext:
    """Bundles the dimension with the two Laguerre families the density needs."""

    d: int
    laguerre: tuple = (_L0, _L1)

    def __post_init__(self):
        _check_d(self.d)

    def delta(self, x):
        return delta_d_evaluate(self.d, x)

    def density(self, x):
        return density_p(self.d, x)


@dataclass(frozen=True)
class DimensionConstants:
    d: int
    delta: float
    delta_tilde: float

    def __post_init__(self):
        if not (self.delta < 0 and self.delta_tilde < 0):
            raise InvariantFailure(f"dimension constants not negative at d={self.d}")

    @property
    def gap(self) -> float:
        """delta - delta~; positive for d = 1, 2 and non-positive from d = 3 on."""
        return self.delta - self.delta_tilde


def dimension_constants(d: int) -> DimensionConstants:
    d = _check_d(d)
    return DimensionConstants(
        d=d,
        delta=(d + 1) ** -0.5 - d**-0.5,
        delta_tilde=(d + 1) ** -1.5 - d**-1.5,
    )


# ---------------------------------------------------------------- densities


def delta_d_evaluate(d: int, x):
    """Delta_d(x) = d^{-3/2} sum_{n=0}^{d-1} L_n(x)^2."""
    d = _check_d(d)
    xa = np.asarray(x, dtype=float)
    flat = np.atleast_1d(xa)
    prev = np.zeros_like(flat)
    cur = np.ones_like(flat)
    squares = [cur**2]
    for k in range(d - 1):
        prev, cur = cur, ((2 * k + 1 - flat) * cur - k * prev) / (k + 1)
        squares.append(cur**2)
    sq = np.array(squares)
    out = np.array([math.fsum(col) for col in sq.T]) * d**-1.5
    return float(out[0]) if xa.ndim == 0 else out.reshape(xa.shape)


def density_p(d: int, x):
    """Squared-singular-value density p(x) = (1/d) sum_{n<d} e^{-x} L_n(x)^2."""
    d = _check_d(d)
    xa = np.asarray(x, dtype=float)
    tab = laguerre_damped_table(d - 1, 0.0, np.atleast_1d(xa))
    out = np.sum(tab**2, axis=0) / d
    return float(out[0]) if xa.ndim == 0 else out.reshape(xa.shape)


def density_normalization(d: int) -> float:
    """int_0^inf p(x) dx by a plain Gauss-Laguerre rule (a = 0)."""
    d = _check_d(d)
    rule = build_rule(0.0, nodes_for_degree(2 * d - 2))
    return integrate_damped(rule, lambda x: density_p(d, x))


def density_cdf(d: int, t: float) -> float:
    """P(lambda <= t) for the squared-singular-value density."""
    if t <= 0:
        return 0.0
    val, _ = sp_integrate.quad(lambda x: density_p(d, x), 0.0, t, limit=200, epsabs=1e-13, epsrel=1e-12)
    return min(1.0, val)


def density_quantiles(d: int, probs) -> np.ndarray:
    """Inverse CDF of p at the given probabilities (all strictly inside (0, 1))."""
    hi = 4.0 * d + 50.0
    return np.array([optimize.brentq(lambda t: density_cdf(d, t) - q, 0.0, hi, xtol=1e-12) for q in probs])


def mp_density(x):
    """Marchenko-Pastur density (1/(2 pi x)) sqrt(x(4 - x)) on (0, 4]."""
    xa = np.asarray(x, dtype=float)
    inside = (xa > 0) & (xa <= 4)
    safe = np.where(inside, xa, 1.0)
    out = np.where(inside, np.sqrt(np.clip(safe * (4 - safe), 0, None)) / (2 * np.pi * safe), 0.0)
    return float(out) if xa.ndim == 0 else out


def mp_moment(power: float, n_points: int = 64) -> float:
    """int_0^4 x^power mp(x) dx via x = 4 sin^2(theta) and Gauss-Legendre in theta.

    The substitution turns mp(x) dx into (4/pi) cos^2(theta) d theta, which is smooth.
    """
    t, w = np.polynomial.legendre.leggauss(n_points)
    theta = (t + 1) * math.pi / 4
    x = 4 * np.sin(theta) ** 2
    vals = x**power * (4 / math.pi) * np.cos(theta) ** 2
    return math.fsum(w * vals) * math.pi / 4


# ---------------------------------------------------------------- integrals


@lru_cache(maxsize=None)
def _i1_quadrature(d: int) -> float:
    rule = build_rule(0.5, nodes_for_degree(2 * d))
    tab = laguerre_damped_table(d, 0.0, rule.nodes)
    return math.fsum(rule.damped_weights * tab[d] ** 2)


@lru_cache(maxsize=None)
def _i1_closed(d: int) -> float:
    return laguerre_moment_integral(0.5, 0.0, 0.0, d, d)


@lru_cache(maxsize=None)
def _i2_quadrature(d: int) -> float:
    rule = build_rule(1.5, nodes_for_degree(2 * d - 1))
    tab = laguerre_damped_table(d, 1.0, rule.nodes)
    return math.fsum(rule.damped_weights * tab[d] * tab[d - 1])


@lru_cache(maxsize=None)
def _i2_closed(d: int) -> float:
    """Terminating 3F2 form of I2(d).

    I2(d) = C(d, d-1) C(d-3/2, d) Gamma(5/2) 3F2(1-d, 5/2, 3/2; 2, 3/2-d; 1),
    where the prefactor equals -Gamma(5/2) Gamma(d-1/2) / (2 Gamma(1/2) Gamma(d)).
    """
    spec = HypergeometricSpec((1 - d, 2.5, 1.5), (2.0, 1.5 - d), 1.0)
    prefactor = generalized_binomial(d, d - 1) * generalized_binomial(d - 1.5, d) * math.exp(log_gamma(2.5))
    return prefactor * hypergeometric_terminating(spec)


def i2_moment_sum(d: int) -> float:
    """I2(d) straight from the general Laguerre moment formula (third route)."""
    d = _check_d(d)
    return laguerre_moment_integral(1.5, 1.0, 1.0, d - 1, d)


def _cross_check(name, d, a, b, rtol=_ROUTE_RTOL):
    if abs(a - b) > rtol * max(abs(a), abs(b)):
        raise CrossCheckError(f"{name}({d}): quadrature {a!r} vs closed form {b!r}")


def i1(d: int, route: Route = Route.CLOSED_FORM, cross_check: bool = False) -> float:
    """I1(d) = int_0^inf x^{1/2} e^{-x} L_d(x)^2 dx (d = 0 allowed)."""
    d = _check_d(d, lo=0)
    route = Route(route)
    if route is Route.MONTE_CARLO:
        raise DomainError("I1 has no Monte Carlo route")
    val = _i1_closed(d) if route is Route.CLOSED_FORM else _i1_quadrature(d)
    if cross_check:
        _cross_check("i1", d, _i1_quadrature(d), _i1_closed(d))
    return val


def i2(d: int, route: Route = Route.CLOSED_FORM, cross_check: bool = False) -> float:
    """I2(d) = int_0^inf x^{3/2} e^{-x} L_d^(1)(x) L_{d-1}^(1)(x) dx."""
    d = _check_d(d)
    route = Route(route)
    if route is Route.MONTE_CARLO:
        raise DomainError("I2 has no Monte Carlo route")
    val = _i2_closed(d) if route is Route.CLOSED_FORM else _i2_quadrature(d)
    if cross_check:
        _cross_check("i2", d, _i2_quadrature(d), _i2_closed(d))
    return val


# ---------------------------------------------------------------- alpha


@lru_cache(maxsize=None)
def _alpha_quadrature(d: int) -> float:
    rule = build_rule(0.5, nodes_for_degree(2 * d - 2))
    tab = laguerre_damped_table(d - 1, 0.0, rule.nodes)
    return math.fsum(rule.damped_weights * np.sum(tab**2, axis=0)) * d**-1.5


@lru_cache(maxsize=None)
def _alpha_closed(d: int) -> float:
    return math.fsum(_i1_closed(n) for n in range(d)) * d**-1.5


def alpha_complex(d: int, route: Route = Route.QUADRATURE) -> float:
    """Average singular value alpha_C(d) of X / sqrt(d), X complex Ginibre.

    Raises InvariantFailure if the value leaves (8/(3 pi), sqrt(pi/4)], which
    would signal numerical breakdown.
    """
    d = _check_d(d)
    route = Route(route)
    if route is Route.MONTE_CARLO:
        raise DomainError("use monte_carlo.estimate for the Monte Carlo route")
    val = _alpha_quadrature(d) if route is Route.QUADRATURE else _alpha_closed(d)
    if not (LIMIT < val <= ALPHA_ONE + _ROUNDOFF):
        raise InvariantFailure(f"alpha_C({d}) = {val!r} outside ({LIMIT}, {ALPHA_ONE}]")
    return val


def alpha_difference(d: int, cross_check: bool = True) -> float:
    """alpha_C(d+1) - alpha_C(d) through the dimension recurrence (closed-form integrals)."""
    d = _check_d(d)
    c = dimension_constants(d)
    val = c.delta * i1(d) + c.delta_tilde * i2(d)
    if cross_check:
        direct = alpha_complex(d + 1) - alpha_complex(d)
        if abs(val - direct) > _DIFF_ATOL:
            raise CrossCheckError(f"recurrence {val!r} vs direct difference {direct!r} at d={d}")
    return val


# ---------------------------------------------------------------- identities


def _scale(*terms) -> float:
    return max([1.0] + [float(np.max(np.abs(t))) for t in terms])


def christoffel_darboux_residual(d: int, x, y, relative: bool = False):
    """|(1/d) sum L_n(x) L_n(y) - [L_{d-1}(x) L_d(y) - L_d(x) L_{d-1}(y)] / (x - y)|.

    ``x`` and ``y`` broadcast against each other; pairs closer than 1e-3 are
    rejected (the confluent case is covered by the Turan residual).
    """
    d = _check_d(d)
    xa, ya = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    if np.any(np.abs(xa - ya) < 1e-3):
        raise DomainError("x and y must differ by at least 1e-3")
    tx = np.array([laguerre_eval(_L0, n, xa) for n in range(d + 1)])
    ty = np.array([laguerre_eval(_L0, n, ya) for n in range(d + 1)])
    prods = tx[:d] * ty[:d]
    lhs = np.sum(prods, axis=0) / d
    rhs = (tx[d - 1] * ty[d] - tx[d] * ty[d - 1]) / (xa - ya)
    res = np.abs(lhs - rhs)
    if relative:
        res = res / np.maximum(1.0, np.maximum(np.max(np.abs(prods), axis=0), np.abs(rhs)))
    return float(res) if res.ndim == 0 else res


def turan_identity_residual(d: int, x, relative: bool = False):
    """|d^{1/2} Delta_d(x) - [L_{d-1}^(1)(x)^2 - L_{d-2}^(1)(x) L_d^(1)(x)]|."""
    d = _check_d(d, lo=2)
    xa = np.asarray(x, dtype=float)
    lhs = d**0.5 * delta_d_evaluate(d, xa)
    a, b, c = (laguerre_eval(_L1, n, xa) for n in (d - 2, d - 1, d))
    rhs = b**2 - a * c
    res = np.abs(lhs - rhs)
    if relative:
        res = res / np.maximum(1.0, np.maximum(np.abs(lhs), np.maximum(b**2, np.abs(a * c))))
    return float(res) if xa.ndim == 0 else res


def l1l2_residual(d: int, x, relative: bool = False):
    """Pointwise |L_d(x) - (L_d^(1)(x) - L_{d-1}^(1)(x))| (d >= 1)."""
    d = _check_d(d)
    xa = np.asarray(x, dtype=float)
    l0 = laguerre_eval(_L0, d, xa)
    la, lb = laguerre_eval(_L1, d, xa), laguerre_eval(_L1, d - 1, xa)
    res = np.abs(l0 - (la - lb))
    if relative:
        res = res / np.maximum(1.0, np.maximum(np.abs(l0), np.maximum(np.abs(la), np.abs(lb))))
    return float(res) if xa.ndim == 0 else res


def derivative_residual(d: int, x, relative: bool = False):
    """Confluent Christoffel-Darboux: (1/d) sum L_n^2 = L_d L_{d-1}' - L_{d-1} L_d'.

    This is the y -> x limit of the two-point kernel formula; note the order
    of the products (at d = 1 the left side is 1 and L_1' = -1).
    """
    d = _check_d(d)
    xa = np.asarray(x, dtype=float)
    lhs = d**0.5 * delta_d_evaluate(d, xa)
    ld, ldm1 = laguerre_eval(_L0, d, xa), laguerre_eval(_L0, d - 1, xa)
    dld = -laguerre_eval(_L1, d - 1, xa)
    dldm1 = -laguerre_eval(_L1, d - 2, xa) if d >= 2 else np.zeros_like(xa)
    rhs = ld * dldm1 - ldm1 * dld
    res = np.abs(lhs - rhs)
    if relative:
        res = res / np.maximum(1.0, np.maximum(np.abs(ldm1 * dld), np.abs(ld * dldm1)))
    return float(res) if xa.ndim == 0 else res


def recurrence_increment(d: int, x):
    """delta_d L_d(x)^2 + delta~_d x L_d^(1)(x) L_{d-1}^(1)(x)."""
    c = dimension_constants(d)
    xa = np.asarray(x, dtype=float)
    return c.delta * laguerre_eval(_L0, d, xa) ** 2 + c.delta_tilde * xa * laguerre_eval(
        _L1, d, xa
    ) * laguerre_eval(_L1, d - 1, xa)


def recurrence_residual(d: int, x, relative: bool = False):
    """|Delta_{d+1}(x) - Delta_d(x) - (delta_d L_d^2 + delta~_d x L_d^(1) L_{d-1}^(1))|."""
    d = _check_d(d)
    xa = np.asarray(x, dtype=float)
    lo, hi = delta_d_evaluate(d, xa), delta_d_evaluate(d + 1, xa)
    inc = recurrence_increment(d, xa)
    res = np.abs(hi - lo - inc)
    if relative:
        res = res / np.maximum(1.0, np.maximum(np.maximum(lo, hi), np.abs(inc)))
    return float(res) if xa.ndim == 0 else res


def increment_sign_change(d: int, n_grid: int = 2001) -> Optional[tuple[float, float]]:
    """Grid points on [0, 4(d+1)] where Delta_{d+1} - Delta_d is negative and positive.

    Returns ``None`` when the increment does not change sign on the grid.
    """
    d = _check_d(d)
    x = np.linspace(0.0, 4.0 * (d + 1), n_grid)
    inc = delta_d_evaluate(d + 1, x) - delta_d_evaluate(d, x)
    neg, pos = np.flatnonzero(inc < 0), np.flatnonzero(inc > 0)
    if neg.size == 0 or pos.size == 0:
        return None
    return float(x[neg[0]]), float(x[pos[0]])


# ---------------------------------------------------------------- bounds


def lemma1_bound(d: int) -> float:
    """-3d / (4 pi (d - 3/2)(d - 1/2)^{3/2}); meaningful for d >= 2."""
    d = _check_d(d, lo=2)
    return -3 * d / (4 * math.pi * (d - 1.5) * (d - 0.5) ** 1.5)


def lemma1_bound_check(d: int) -> float:
    """Slack bound - I2(d) (>= 0 when I2 respects the upper bound).

    Raises BoundViolation only if both the closed form and the quadrature value violate it.
    """
    bound = lemma1_bound(d)
    slack = bound - i2(d, Route.CLOSED_FORM)
    if slack < 0 and bound - i2(d, Route.QUADRATURE) < 0:
        raise BoundViolation(f"I2({d}) exceeds {bound!r}", d=d)
    return slack


def i1_lower_bound_check(d: int) -> float:
    """Slack I1(d) - sqrt(d + 1) for d >= 2."""
    d = _check_d(d, lo=2)
    bound = math.sqrt(d + 1)
    slack = i1(d, Route.CLOSED_FORM) - bound
    if slack < 0 and i1(d, Route.QUADRATURE) - bound < 0:
        raise BoundViolation(f"I1({d}) below sqrt({d + 1})", d=d)
    return slack


@dataclass(frozen=True)
class ChainCheck:
    """The three-link chain

        delta I1 + delta~ I2  <=  delta sqrt(d+1) - delta~ B(d)  <=  (delta - delta~) sqrt(d+1)  <=  0

    with B(d) = 3d / (4 pi (d - 3/2)(d - 1/2)^{3/2}). Each value is kept so a
    failing link can be reported with numbers.
    """

    d: int
    lhs: float
    bound_step: float
    gap_step: float

    @property
    def links(self) -> tuple[bool, bool, bool]:
        return (
            self.lhs <= self.bound_step,
            self.bound_step <= self.gap_step,
            self.gap_step <= 0.0,
        )

    @property
    def holds(self) -> bool:
        return all(self.links)


def chained_inequality(d: int) -> ChainCheck:
    d = _check_d(d, lo=2)
    c = dimension_constants(d)
    root = math.sqrt(d + 1)
    return ChainCheck(
        d=d,
        lhs=c.delta * i1(d) + c.delta_tilde * i2(d),
        bound_step=c.delta * root + c.delta_tilde * lemma1_bound(d),
        gap_step=c.gap * root,
    )


# ---------------------------------------------------------------- table


@dataclass
class AsvRecord:
    d: int
    alpha: float
    diff: Optional[float]
    i1: float
    i2: float
    lower_slack: float
    upper_slack: float
    real_lower_bound: float
    route: Route = Route.QUADRATURE

    def as_dict(self) -> dict:
        return {
            "d": self.d,
            "alpha": self.alpha,
            "diff": self.diff,
            "i1": self.i1,
            "i2": self.i2,
            "lower_bound": LIMIT,
            "upper_bound": ALPHA_ONE,
            "real_lower_bound": self.real_lower_bound,
            "lower_slack": self.lower_slack,
            "upper_slack": self.upper_slack,
            "route": self.route.value,
        }


def asv_table(d_max: int, route: Route = Route.QUADRATURE) -> list[AsvRecord]:
    """Records for d = 1..d_max; raises BoundViolation naming the first bad d."""
    if int(d_max) != d_max or not 1 <= d_max <= D_MAX:
        raise DomainError(f"d_max must be an integer in [1, {D_MAX}]")
    route = Route(route)
    alphas = [alpha_complex(d, route) for d in range(1, d_max + 1)]
    records = []
    for d, a in enumerate(alphas, start=1):
        diff = alphas[d] - a if d < d_max else None
        if diff is not None and diff > _ROUNDOFF:
            raise BoundViolation(f"alpha_C increases from d={d} to d={d + 1} by {diff!r}", d=d)
        records.append(
            AsvRecord(
                d=d,
                alpha=a,
                diff=diff,
                i1=i1(d),
                i2=i2(d),
                lower_slack=a - LIMIT,
                upper_slack=ALPHA_ONE - a,
                real_lower_bound=LIMIT - REAL_GAP / d,
                route=route,
            )
        )
    return records
