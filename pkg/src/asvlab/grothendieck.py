"""Little Grothendieck problem over U(d): relax, round, and measure the ratio.

Maximize sum_ij Re tr(C_ij^H U_i U_j^H) over unitaries U_1..U_n for a PSD
C in C^{dn x dn}. The relaxation replaces U_i U_j^H by V_i^H V_j with V_i a
dn x d frame (V_i^H V_i = I) and is solved by block-coordinate ascent on the
frames. Rounding projects a shared complex Gaussian dn x d matrix R onto
each frame and keeps the unitary polar factor of V_i^H R.
"""
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .asv_core import LIMIT, alpha_complex
from .errors import DomainError, GuaranteeViolation, InvariantFailure, NumericalFailure

MAX_BLOCK = 8
MAX_BLOCKS = 12
_ORTHO_TOL = 1e-10
_RANK_TOL = 1e-12
_MAX_RESAMPLES = 8


def _rng(seed: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, stream, 0]))


def _complex_gaussian(gen: np.random.Generator, shape) -> np.ndarray:
    """Standard complex Gaussian entries (E|z|^2 = 1)."""
    z = gen.standard_normal((2,) + tuple(shape))
    return (z[0] + 1j * z[1]) / math.sqrt(2)


@dataclass(frozen=True, eq=False)
class GrothendieckInstance:
    d: int
    n: int
    C: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        if not (1 <= self.d <= MAX_BLOCK and 1 <= self.n <= MAX_BLOCKS):
            raise DomainError(f"need 1 <= d <= {MAX_BLOCK} and 1 <= n <= {MAX_BLOCKS}")
        C = np.asarray(self.C, dtype=complex)
        if C.shape != (self.d * self.n, self.d * self.n):
            raise DomainError(f"C must be {self.d * self.n} x {self.d * self.n}")
        norm = np.linalg.norm(C, 2)
        if np.max(np.abs(C - C.conj().T)) > 1e-12 * max(norm, 1.0):
            raise InvariantFailure("C is not Hermitian")
        if np.linalg.eigvalsh(C)[0] < -1e-10 * norm:
            raise InvariantFailure("C is not positive semidefinite")
        C.flags.writeable = False
        object.__setattr__(self, "C", C)

    def block(self, i: int, j: int) -> np.ndarray:
        d = self.d
        return self.C[i * d : (i + 1) * d, j * d : (j + 1) * d]

    def value(self, W) -> float:
        """sum_ij Re tr(C_ij^H W_i W_j^H) = Re tr(Y^H C Y) with Y the stacked W_i."""
        Y = np.concatenate(list(W), axis=0)
        return float(np.real(np.trace(Y.conj().T @ self.C @ Y)))

    def to_json(self) -> str:
        return json.dumps(
            {
                "d": self.d,
                "n": self.n,
                "seed": self.seed,
                "C_real": self.C.real.tolist(),
                "C_imag": self.C.imag.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "GrothendieckInstance":
        obj = json.loads(text)
        C = np.array(obj["C_real"], dtype=float) + 1j * np.array(obj["C_imag"], dtype=float)
        return cls(d=obj["d"], n=obj["n"], C=C, seed=obj.get("seed"))


def generate_instance(d: int, n: int, seed: int) -> GrothendieckInstance:
    """C = B^H B for complex Gaussian B, scaled to trace dn."""
    dn = d * n
    B = _complex_gaussian(_rng(seed), (dn, dn))
    C = B.conj().T @ B
    C = (C + C.conj().T) / 2
    C *= dn / np.real(np.trace(C))
    return GrothendieckInstance(d=d, n=n, C=C, seed=seed)


def polar_factor(A: np.ndarray) -> np.ndarray:
    """Unitary (or isometric) factor of A = Q P, via eigh of the Gram matrix A^H A.

    Raises NumericalFailure when A is numerically rank deficient, where the
    factor is not unique.
    """
    gram = A.conj().T @ A
    lam, Q = np.linalg.eigh(gram)
    if lam[0] <= _RANK_TOL * max(lam[-1], 1e-300):
        raise NumericalFailure("rank-deficient argument: polar factor is not unique")
    return A @ (Q / np.sqrt(lam)) @ Q.conj().T


def _polar_batch(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Polar factors of a stack of square matrices; also returns a rank-deficiency mask."""
    gram = np.conj(np.swapaxes(A, -1, -2)) @ A
    lam, Q = np.linalg.eigh(gram)
    bad = lam[..., 0] <= _RANK_TOL * np.maximum(lam[..., -1], 1e-300)
    lam = np.where(bad[..., None], 1.0, lam)
    inv_root = (Q / np.sqrt(lam)[..., None, :]) @ np.conj(np.swapaxes(Q, -1, -2))
    return A @ inv_root, bad


@dataclass
class SdpSolution:
    V: list
    objective: float
    sweeps: int
    converged: bool
    history: list = field(default_factory=list)

    def gram_block(self, i: int, j: int) -> np.ndarray:
        return self.V[i].conj().T @ self.V[j]


def sdp_objective(instance: GrothendieckInstance, V) -> float:
    """sum_ij Re tr(C_ij^H V_i^H V_j)."""
    total = 0.0 + 0.0j
    for i in range(instance.n):
        for j in range(instance.n):
            total += np.sum(np.conj(instance.block(i, j)) * (V[i].conj().T @ V[j]))
    return float(total.real)


def solve_sdp(
    instance: GrothendieckInstance,
    max_sweeps: int = 5000,
    tol: float = 1e-10,
    seed: int = 0,
) -> SdpSolution:
    """Block-coordinate ascent on the frames V_i.

    With the other frames fixed the objective is 2 Re tr(V_i^H B_i) + const,
    B_i = sum_{j != i} V_j C_ji, maximized by the polar factor of B_i. A sweep
    updates i = 0..n-1 in order. Stops when a sweep gains less than
    ``tol * max(1, |objective|)``.
    """
    d, n = instance.d, instance.n
    dn = d * n
    gen = _rng(seed, 1)
    V = [np.linalg.qr(_complex_gaussian(gen, (dn, d)))[0] for _ in range(n)]
    obj = sdp_objective(instance, V)
    history = [obj]
    converged = n == 1
    sweeps = 0
    while not converged and sweeps < max_sweeps:
        for i in range(n):
            B = sum(V[j] @ instance.block(j, i) for j in range(n) if j != i)
            try:
                V[i] = polar_factor(B)
            except NumericalFailure:
                # zero or degenerate gradient block: any frame attaining the max is fine
                U, _, Wh = np.linalg.svd(B, full_matrices=False)
                V[i] = U @ Wh
        sweeps += 1
        new = sdp_objective(instance, V)
        if new < obj - 1e-12 * max(1.0, abs(obj)):
            raise NumericalFailure(f"ascent violated: objective fell from {obj!r} to {new!r}")
        history.append(new)
        converged = new - obj < tol * max(1.0, abs(new))
        obj = new
    return SdpSolution(V=V, objective=obj, sweeps=sweeps, converged=converged, history=history)


@dataclass
class RoundedSolution:
    W: list
    value: float


def _round_values(instance, solution, seed, count, first_stream=0):
    """Rounded values for ``count`` draws; draw k uses stream first_stream + k."""
    d, n = instance.d, instance.n
    dn = d * n
    Vs = np.stack(solution.V)  # (n, dn, d)
    values = np.empty(count)
    for k in range(count):
        for attempt in range(_MAX_RESAMPLES):
            gen = _rng(seed, 2 + (first_stream + k) * _MAX_RESAMPLES + attempt)
            R = _complex_gaussian(gen, (dn, d)) / math.sqrt(d)
            M = np.conj(np.swapaxes(Vs, -1, -2)) @ R  # (n, d, d)
            W, bad = _polar_batch(M)
            if not np.any(bad):
                break
        else:
            raise NumericalFailure("rounding kept hitting rank-deficient projections")
        Y = W.reshape(dn, d)
        values[k] = np.real(np.trace(Y.conj().T @ instance.C @ Y))
    return values


def round_solution(instance: GrothendieckInstance, solution: SdpSolution, seed: int, draw: int = 0) -> RoundedSolution:
    """One rounding draw: W_i = polar(V_i^H R), R complex Gaussian / sqrt(d)."""
    d, n = instance.d, instance.n
    dn = d * n
    for attempt in range(_MAX_RESAMPLES):
        gen = _rng(seed, 2 + draw * _MAX_RESAMPLES + attempt)
        R = _complex_gaussian(gen, (dn, d)) / math.sqrt(d)
        try:
            W = [polar_factor(v.conj().T @ R) for v in solution.V]
        except NumericalFailure:
            continue
        return RoundedSolution(W=W, value=instance.value(W))
    raise NumericalFailure("rounding kept hitting rank-deficient projections")


@dataclass(frozen=True)
class GuaranteeResult:
    d: int
    n: int
    seed: int
    roundings: int
    sdp_objective: float
    mean_value: float
    ratio: float
    std_error: float
    threshold: float
    floor: float
    max_value: float

    @property
    def passed(self) -> bool:
        return (
            self.ratio >= self.threshold - 3 * self.std_error
            and self.ratio >= self.floor - 3 * self.std_error
        )

    def as_dict(self) -> dict:
        return {
            "d": self.d,
            "n": self.n,
            "seed": self.seed,
            "roundings": self.roundings,
            "sdp_objective": self.sdp_objective,
            "mean_value": self.mean_value,
            "ratio": self.ratio,
            "std_error": self.std_error,
            "threshold": self.threshold,
            "floor": self.floor,
            "max_value": self.max_value,
            "passed": self.passed,
        }


def guarantee_experiment(
    instance: GrothendieckInstance,
    roundings: int = 1000,
    seed: int = 0,
    solution: Optional[SdpSolution] = None,
    raise_on_failure: bool = False,
) -> GuaranteeResult:
    """Mean rounded value over the relaxation value, against alpha_C(d)^2 and (8/(3 pi))^2."""
    if roundings < 1000:
        raise DomainError("the guarantee experiment needs at least 1000 roundings")
    if solution is None:
        solution = solve_sdp(instance)
    if not solution.converged:
        raise NumericalFailure("relaxation did not converge; ratio would not be meaningful")
    vals = _round_values(instance, solution, seed, roundings)
    sdp = solution.objective
    if np.max(vals) > sdp + 1e-8 * max(1.0, abs(sdp)):
        raise InvariantFailure("a rounded value exceeds the relaxation value")
    mean = math.fsum(vals) / roundings
    se = math.sqrt(math.fsum((vals - mean) ** 2) / (roundings - 1) / roundings)
    result = GuaranteeResult(
        d=instance.d,
        n=instance.n,
        seed=seed,
        roundings=roundings,
        sdp_objective=sdp,
        mean_value=mean,
        ratio=mean / sdp,
        std_error=se / sdp,
        threshold=alpha_complex(instance.d) ** 2,
        floor=LIMIT**2,
        max_value=float(np.max(vals)),
    )
    if raise_on_failure and not result.passed:
        raise GuaranteeViolation(
            f"ratio {result.ratio:.6f} below threshold for instance d={instance.d} n={instance.n} "
            f"instance seed={instance.seed} rounding seed={seed}"
        )
    return result
