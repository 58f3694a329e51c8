"""Generalized Gauss-Laguerre rules for the weight x^a e^{-x} on [0, inf).

Nodes are eigenvalues of the symmetric Jacobi matrix of the Laguerre family,
polished by Newton steps on L_n^(a). Weights are Christoffel numbers built
from damped orthonormal polynomials, so they are kept in log form: for a few
hundred nodes the outermost weights lie far below the smallest double, while
w_i e^{x_i} (the "damped" weights) stay of moderate size.
"""
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.linalg import LinAlgError, eigvalsh_tridiagonal

from .errors import DomainError, NumericalFailure
from .specialfn import laguerre_damped_table

MAX_NODES = 512
_NEWTON_STEPS = 3


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    a: float
    n_nodes: int
    nodes: np.ndarray
    log_weights: np.ndarray

    @property
    def weights(self) -> np.ndarray:
        """Plain weights; entries below the double range read as 0."""
        return np.exp(self.log_weights)

    @property
    def damped_weights(self) -> np.ndarray:
        """w_i e^{x_i}: weights for integrands that already carry the factor e^{-x}."""
        return np.exp(self.log_weights + self.nodes)

    @property
    def exactness_degree(self) -> int:
        return 2 * self.n_nodes - 1


def nodes_for_degree(degree: int) -> int:
    """Node count for a polynomial integrand of the given degree (exact, with margin)."""
    return math.ceil(degree / 2) + 8


def jacobi_matrix(a: float, n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal and off-diagonal of the Jacobi matrix of L^(a)."""
    k = np.arange(n_nodes, dtype=float)
    diag = 2 * k + a + 1
    off = np.sqrt(k[1:] * (k[1:] + a))
    return diag, off


@lru_cache(maxsize=1024)
def build_rule(a: float, n_nodes: int) -> QuadratureRule:
    """Build the ``n_nodes``-point generalized Gauss-Laguerre rule for x^a e^{-x}."""
    a = float(a)
    if not a > -1:
        raise DomainError(f"weight exponent must exceed -1, got {a}")
    if not 1 <= n_nodes <= MAX_NODES:
        raise DomainError(f"n_nodes must lie in [1, {MAX_NODES}], got {n_nodes}")

    diag, off = jacobi_matrix(a, n_nodes)
    try:
        nodes = eigvalsh_tridiagonal(diag, off, lapack_driver="stebz" if n_nodes > 1 else "stev")
    except LinAlgError as exc:
        raise NumericalFailure(f"tridiagonal eigensolver failed for a={a}, n={n_nodes}") from exc
    nodes = np.sort(nodes)

    # Newton on L_n^(a), using x L_n' = n L_n - (n + a) L_{n-1}
    for _ in range(_NEWTON_STEPS):
        tab = laguerre_damped_table(n_nodes, a, nodes)
        ln, lnm1 = tab[n_nodes], tab[n_nodes - 1]
        deriv = n_nodes * ln - (n_nodes + a) * lnm1
        step = nodes * ln / deriv
        nodes = nodes - np.where(np.isfinite(step), step, 0.0)

    # Christoffel numbers: 1/w_i = sum_k p_k(x_i)^2 with p_k orthonormal
    tab = laguerre_damped_table(n_nodes - 1, a, nodes)
    k = np.arange(n_nodes)
    log_norm = np.array([math.lgamma(j + a + 1) - math.lgamma(j + 1) for j in k])
    christoffel = np.sum(tab**2 * np.exp(-log_norm)[:, None], axis=0)
    log_weights = -nodes - np.log(christoffel)

    rule = QuadratureRule(a=a, n_nodes=n_nodes, nodes=nodes, log_weights=log_weights)
    _validate(rule)
    rule.nodes.flags.writeable = False
    rule.log_weights.flags.writeable = False
    return rule


def _validate(rule: QuadratureRule):
    x, lw = rule.nodes, rule.log_weights
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(lw))):
        raise NumericalFailure("non-finite node or weight")
    if x[0] <= 0 or np.any(np.diff(x) <= 0):
        raise NumericalFailure("nodes are not positive and strictly increasing")
    mu0 = math.lgamma(rule.a + 1)
    total = math.fsum(np.exp(lw - mu0))
    if abs(total - 1.0) > 1e-12:
        raise NumericalFailure(f"zeroth moment off by {total - 1.0:.3e} (relative)")


def _evaluate(rule: QuadratureRule, f: Callable) -> np.ndarray:
    x = rule.nodes
    try:
        vals = np.asarray(f(x), dtype=float)
        if vals.shape != x.shape:
            raise ValueError
    except (TypeError, ValueError):
        vals = np.array([float(f(xi)) for xi in x])
    bad = ~np.isfinite(vals)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise NumericalFailure(f"integrand not finite at node {i} (x = {x[i]!r})")
    return vals


def integrate(rule: QuadratureRule, f: Callable) -> float:
    """sum_i w_i f(x_i), i.e. int_0^inf x^a e^{-x} f(x) dx for polynomial f."""
    return math.fsum(rule.weights * _evaluate(rule, f))


def integrate_damped(rule: QuadratureRule, g: Callable) -> float:
    """int_0^inf x^a g(x) dx where g(x) = e^{-x} f(x) is supplied already damped."""
    return math.fsum(rule.damped_weights * _evaluate(rule, g))
