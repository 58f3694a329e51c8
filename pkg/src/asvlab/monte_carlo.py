"""Monte Carlo estimates of singular-value statistics of Gaussian matrices.

Trial ``i`` of a run draws its matrix from its own Philox stream keyed by the
seed with ``i`` written into the counter, and normals come from a fixed
Box-Muller transform. A trial's matrix therefore depends only on
(seed, i, d, field): chunking and thread count do not change any estimate.
"""
import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

from .asv_core import RATIO_BOUND, density_quantiles
from .errors import DomainError

DEFAULT_SEED = 0x5EED
MAX_DIM = 256
MIN_TRIALS = 100
_CHUNK = 2048


class Field(str, enum.Enum):
    COMPLEX = "complex"
    REAL = "real"


class Statistic(str, enum.Enum):
    AVG_SV = "avg_sv"
    MIN_SV = "min_sv"
    MAX_SV = "max_sv"


@dataclass(frozen=True)
class McConfig:
    d: int
    trials: int
    seed: int = DEFAULT_SEED
    field: Field = Field.COMPLEX

    def __post_init__(self):
        object.__setattr__(self, "field", Field(self.field))
        if int(self.d) != self.d or not 1 <= self.d <= MAX_DIM:
            raise DomainError(f"d must be an integer in [1, {MAX_DIM}]")
        if int(self.trials) != self.trials or self.trials < MIN_TRIALS:
            raise DomainError(f"at least {MIN_TRIALS} trials are required")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class McEstimate:
    statistic: Statistic
    mean: float
    std_error: float
    trials: int
    seed: int

    def z_score(self, exact: float) -> float:
        if self.std_error == 0:
            return 0.0 if self.mean == exact else math.copysign(math.inf, self.mean - exact)
        return (self.mean - exact) / self.std_error

    def as_dict(self) -> dict:
        return {
            "statistic": self.statistic.value,
            "mean": self.mean,
            "std_error": self.std_error,
            "trials": self.trials,
            "seed": self.seed,
        }


def _threads() -> int:
    try:
        n = int(os.environ.get("ASV_THREADS", "0"))
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def _stream(seed: int, trial_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, trial_index, 0]))


def _box_muller(gen: np.random.Generator, count: int) -> np.ndarray:
    pairs = (count + 1) // 2
    u1 = 1.0 - gen.random(pairs)  # (0, 1], keeps the log finite
    u2 = gen.random(pairs)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * pairs)
    z[0::2] = r * np.cos(2 * np.pi * u2)
    z[1::2] = r * np.sin(2 * np.pi * u2)
    return z[:count]


def sample_matrix(config: McConfig, trial_index: int) -> np.ndarray:
    """Un-normalized d x d Gaussian matrix for one trial.

    Complex entries have independent real and imaginary parts of variance 1/2
    (so E|z|^2 = 1); real entries are standard normal.
    """
    if not 0 <= trial_index < config.trials:
        raise DomainError(f"trial index {trial_index} outside [0, {config.trials})")
    return _draw(config.seed, trial_index, config.d, config.field)


def _draw(seed: int, trial_index: int, d: int, field: Field) -> np.ndarray:
    gen = _stream(seed, trial_index)
    if field is Field.COMPLEX:
        z = _box_muller(gen, 2 * d * d) * math.sqrt(0.5)
        return (z[0::2] + 1j * z[1::2]).reshape(d, d)
    return _box_muller(gen, d * d).reshape(d, d)


def singular_values(matrix: np.ndarray, d: Optional[int] = None) -> np.ndarray:
    """Ascending singular values of matrix / sqrt(d).

    Works on a single d x d matrix or a stack of them; computed as square roots
    of the eigenvalues of (1/d) X X^H, with round-off negatives clamped to 0.
    """
    x = np.asarray(matrix)
    d = x.shape[-1] if d is None else d
    if x.shape[-2:] != (d, d):
        raise DomainError(f"expected trailing shape ({d}, {d}), got {x.shape}")
    gram = x @ np.conj(np.swapaxes(x, -1, -2)) / d
    lam = np.linalg.eigvalsh(gram)
    return np.sqrt(np.clip(lam, 0.0, None))


def _chunk_singular_values(config: McConfig, start: int, stop: int) -> np.ndarray:
    mats = np.stack([_draw(config.seed, i, config.d, config.field) for i in range(start, stop)])
    return singular_values(mats, config.d)


def trial_singular_values(config: McConfig) -> np.ndarray:
    """(trials, d) array of sorted singular values, row i from trial i."""
    bounds = [(s, min(s + _CHUNK, config.trials)) for s in range(0, config.trials, _CHUNK)]
    workers = min(_threads(), len(bounds))
    if workers <= 1:
        parts = [_chunk_singular_values(config, s, e) for s, e in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _chunk_singular_values(config, *b), bounds))
    return np.concatenate(parts, axis=0)


def _per_trial(sv: np.ndarray, statistic: Statistic) -> np.ndarray:
    if statistic is Statistic.AVG_SV:
        return sv.mean(axis=1)
    if statistic is Statistic.MIN_SV:
        return sv[:, 0]
    return sv[:, -1]


def _summarize(values: np.ndarray, statistic: Statistic, config: McConfig) -> McEstimate:
    n = values.size
    mean = math.fsum(values) / n
    var = math.fsum((values - mean) ** 2) / (n - 1)
    return McEstimate(statistic, mean, math.sqrt(var / n), n, config.seed)


def estimate(config: McConfig, statistic: Statistic = Statistic.AVG_SV) -> McEstimate:
    statistic = Statistic(statistic)
    sv = trial_singular_values(config)
    return _summarize(_per_trial(sv, statistic), statistic, config)


def estimate_all(config: McConfig) -> dict:
    """All three statistics from one pass over the trials."""
    sv = trial_singular_values(config)
    return {s: _summarize(_per_trial(sv, s), s, config) for s in Statistic}


@dataclass(frozen=True)
class RatioEstimate:
    ratio: float
    std_error: float
    min_sv: McEstimate
    max_sv: McEstimate

    @property
    def within_bound(self) -> bool:
        return self.ratio <= RATIO_BOUND + 3 * self.std_error


def ratio_check(config: McConfig) -> RatioEstimate:
    """E[s_min] / E[s_max] with a delta-method standard error (covariance included)."""
    if config.field is not Field.COMPLEX:
        raise DomainError("ratio check is defined for the complex ensemble")
    sv = trial_singular_values(config)
    lo, hi = sv[:, 0], sv[:, -1]
    e_lo = _summarize(lo, Statistic.MIN_SV, config)
    e_hi = _summarize(hi, Statistic.MAX_SV, config)
    r = e_lo.mean / e_hi.mean
    n = lo.size
    cov = math.fsum((lo - e_lo.mean) * (hi - e_hi.mean)) / (n - 1) / n
    rel_var = (e_lo.std_error / e_lo.mean) ** 2 + (e_hi.std_error / e_hi.mean) ** 2
    rel_var -= 2 * cov / (e_lo.mean * e_hi.mean)
    return RatioEstimate(r, abs(r) * math.sqrt(max(rel_var, 0.0)), e_lo, e_hi)


@dataclass(frozen=True)
class RealBoundCheck:
    d: int
    bound: float
    estimate: McEstimate

    @property
    def slack(self) -> float:
        return self.estimate.mean - self.bound

    @property
    def passed(self) -> bool:
        return self.slack >= -3 * self.estimate.std_error


def real_case_bound_check(d: int, trials: int = 10_000, seed: int = DEFAULT_SEED) -> RealBoundCheck:
    """Compare the real-Ginibre average singular value with 8/(3 pi) - 4.02/d."""
    if d < 2:
        raise DomainError("real-case bound is stated for d >= 2")
    if trials < 10_000:
        raise DomainError("real-case bound check needs at least 10^4 trials")
    cfg = McConfig(d=d, trials=trials, seed=seed, field=Field.REAL)
    bound = 8 / (3 * math.pi) - 4.02 / d
    return RealBoundCheck(d, bound, estimate(cfg, Statistic.AVG_SV))


def eigenvalue_sample(config: McConfig) -> np.ndarray:
    """One eigenvalue of X X^H per trial, picked uniformly at random.

    This is d times a squared singular value of X / sqrt(d). A uniformly chosen
    eigenvalue follows the one-point density p(x) = (1/d) sum e^{-x} L_n(x)^2
    exactly, and distinct trials are independent, so the sample suits a
    goodness-of-fit test.
    """
    sv = trial_singular_values(config)
    # the pick uses a stream disjoint from every matrix stream (counter word 3)
    pick_gen = np.random.Generator(np.random.Philox(key=config.seed, counter=[0, 0, 0, 1]))
    idx = pick_gen.integers(0, config.d, size=config.trials)
    return config.d * sv[np.arange(config.trials), idx] ** 2


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    p_value: float
    bins: int
    counts: tuple


def chi_square_density_test(config: McConfig, bins: int = 20) -> ChiSquareResult:
    """Pearson test of (rescaled) squared singular values against the one-point density."""
    if config.field is not Field.COMPLEX:
        raise DomainError("the Laguerre one-point density describes the complex ensemble")
    sample = eigenvalue_sample(config)
    edges = density_quantiles(config.d, np.arange(1, bins) / bins)
    counts = np.bincount(np.searchsorted(edges, sample), minlength=bins)
    expected = np.full(bins, sample.size / bins)
    stat, p = stats.chisquare(counts, expected)
    return ChiSquareResult(float(stat), float(p), bins, tuple(int(c) for c in counts))
