import math

import numpy as np
import pytest

from asvlab.errors import DomainError, NumericalFailure
from asvlab.quadrature import build_rule, integrate, integrate_damped, nodes_for_degree
from asvlab.specialfn import LaguerreFamily, laguerre_eval

SQRT_PI = math.sqrt(math.pi)


def test_one_point_rule():
    r = build_rule(0.5, 1)
    assert r.nodes[0] == pytest.approx(1.5, rel=1e-15)
    assert r.weights[0] == pytest.approx(SQRT_PI / 2, rel=1e-14)


def test_zeroth_moment():
    assert math.fsum(build_rule(0.5, 8).weights) == pytest.approx(SQRT_PI / 2, rel=1e-12)


def test_cubic_moment_a32():
    r = build_rule(1.5, 16)
    assert integrate(r, lambda x: x**3) == pytest.approx(945 * SQRT_PI / 32, rel=1e-10)


@pytest.mark.parametrize("a", [0.5, 1.5])
@pytest.mark.parametrize("n", [4, 16, 64])
def test_monomial_exactness(a, n):
    r = build_rule(a, n)
    for k in range(2 * n):
        exact = math.exp(math.lgamma(a + k + 1))
        assert integrate(r, lambda x: x**k) == pytest.approx(exact, rel=1e-10)


@pytest.mark.parametrize("a", [0.0, 0.5, 1.5])
def test_structure(a):
    r = build_rule(a, 40)
    assert np.all(r.nodes > 0) and np.all(np.diff(r.nodes) > 0)
    assert np.all(r.weights > 0)
    assert r.exactness_degree == 79


@pytest.mark.parametrize("n", [3, 10, 33])
def test_interlacing(n):
    small, big = build_rule(0.5, n).nodes, build_rule(0.5, n + 1).nodes
    assert np.all(big[:-1] < small) and np.all(small < big[1:])


def test_orthogonality_witness():
    r = build_rule(1.0, 40)
    fam = LaguerreFamily(1.0, 30)
    table = [laguerre_eval(fam, k, r.nodes) for k in range(31)]
    for m in range(31):
        for n in range(m, 31):
            got = math.fsum(r.weights * table[m] * table[n])
            assert got == pytest.approx(n + 1 if m == n else 0.0, abs=1e-9)


def test_integrate_examples():
    assert integrate(build_rule(0.5, 3), lambda x: np.ones_like(x)) == pytest.approx(SQRT_PI / 2, rel=1e-14)
    assert integrate(build_rule(0.5, 2), lambda x: (1 - x) ** 2) == pytest.approx(7 * SQRT_PI / 8, rel=1e-14)
    assert integrate(build_rule(1.5, 2), lambda x: 2 - x) == pytest.approx(-3 * SQRT_PI / 8, rel=1e-14)


def test_integrate_scalar_only_callable():
    assert integrate(build_rule(0.5, 4), lambda x: math.cos(0.0) * x) == pytest.approx(math.gamma(2.5), rel=1e-14)


def test_damped_path_matches_plain():
    r = build_rule(0.5, 20)
    plain = integrate(r, lambda x: x**5)
    damped = integrate_damped(r, lambda x: x**5 * np.exp(-x))
    assert damped == pytest.approx(plain, rel=1e-13)


def test_large_rule_keeps_log_weights():
    r = build_rule(0.5, 300)
    assert np.all(np.isfinite(r.log_weights))
    assert r.weights[-1] == 0.0  # far below the double range; kept in log form
    assert np.all(np.isfinite(r.damped_weights)) and np.all(r.damped_weights > 0)


def test_non_finite_integrand_names_node():
    r = build_rule(0.5, 4)
    with pytest.raises(NumericalFailure, match="node 2"):
        integrate(r, lambda x: np.where(x == x[2], np.inf, 1.0))


@pytest.mark.parametrize("a, n", [(-1.0, 4), (0.5, 0), (0.5, 513)])
def test_bad_arguments(a, n):
    with pytest.raises(DomainError):
        build_rule(a, n)


def test_rules_are_immutable_and_cached():
    r = build_rule(0.5, 10)
    assert build_rule(0.5, 10) is r
    with pytest.raises(ValueError):
        r.nodes[0] = 1.0


def test_node_policy():
    assert nodes_for_degree(0) == 8
    assert nodes_for_degree(9) == 13
