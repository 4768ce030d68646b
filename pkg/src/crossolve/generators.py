"""Problem-instance generators for the experiment suites.

Three matrix families are used throughout: a covariance-style family with
polynomially decaying off-diagonals, random matrices whose entries come
from the discrete device level set, and random sparse positive-definite
matrices with an exactly placed smallest eigenvalue.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .devices import LevelSet, measured_level_set
from .errors import ConfigError, DomainError, GenerationError
from .spectral import sym_part_lambda_min

__all__ = [
    "SparsePdSpec",
    "covariance_matrix",
    "random_discrete_pd",
    "sparse_pd",
    "random_vector",
]


def covariance_matrix(n: int, beta: float) -> np.ndarray:
    """Covariance-style matrix: A_ij = 1/|i-j|^beta off the diagonal.

    Indices are 1-based, with diagonal A_ii = 1 + sqrt(i). beta = 1 gives
    slowly decaying correlations, beta = 2 nearly banded ones; both keep
    the smallest eigenvalue asymptotically flat in n.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    idx = np.arange(1, n + 1, dtype=float)
    dist = np.abs(idx[:, None] - idx[None, :])
    with np.errstate(divide="ignore"):
        a = dist**-beta
    a[np.diag_indices(n)] = 1.0 + np.sqrt(idx)
    return a


def random_discrete_pd(
    dim: int = 3,
    level_set: LevelSet | None = None,
    g0: float = 100e-6,
    seed: int = 0,
    max_tries: int = 64,
) -> tuple[np.ndarray, float]:
    """Random matrix with entries drawn from a discrete level set, PD-screened.

    Every entry is an independent uniform draw from level_set / g0, so the
    result is generally not symmetric; draws are retried until the
    symmetric part (A + A^T)/2 is positive definite, which also guarantees
    every eigenvalue of the attenuated loop matrix has positive real part.

    Returns the accepted matrix together with its symmetric-part smallest
    eigenvalue. Raises GenerationError when max_tries draws all fail.
    """
    if dim < 1:
        raise DomainError(f"dim must be >= 1, got {dim}")
    if max_tries < 1:
        raise ConfigError(f"max_tries must be >= 1, got {max_tries}")
    if level_set is None:
        level_set = measured_level_set()
    if not g0 > 0:
        raise DomainError(f"g0 must be positive, got {g0}")
    values = level_set.levels / g0
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        a = values[rng.integers(0, values.size, size=(dim, dim))]
        lam = sym_part_lambda_min(a)
        if lam > 0:
            return a, lam
    raise GenerationError(f"no positive-definite draw within {max_tries} tries")


@dataclass(frozen=True)
class SparsePdSpec:
    """Recipe for a random sparse symmetric PD matrix.

    s counts nonzeros per row including the diagonal; the smallest
    eigenvalue is shifted to exactly lambda_target.
    """

    n: int
    s: int = 10
    lambda_target: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise DomainError(f"n must be >= 1, got {self.n}")
        if self.s < 1:
            raise DomainError(f"s must be >= 1, got {self.s}")
        if self.s > self.n:
            raise DomainError(f"s = {self.s} nonzeros per row is infeasible for n = {self.n}")
        if not self.lambda_target > 0:
            raise DomainError(f"lambda_target must be positive, got {self.lambda_target}")


def sparse_pd(spec: SparsePdSpec) -> np.ndarray:
    """Random sparse symmetric PD matrix with lambda_min placed exactly.

    A symmetric off-diagonal pattern with at most s-1 entries per row is
    filled with uniform (0, 1] values, the diagonal is set to the row sum
    (weak diagonal dominance, so the matrix starts positive semidefinite),
    and a uniform diagonal shift places the smallest eigenvalue at
    lambda_target. All entries stay nonnegative because the shift can
    never exceed the smallest diagonal element.
    """
    n, want = spec.n, spec.s - 1
    rng = np.random.default_rng(spec.seed)
    a = np.zeros((n, n))
    if want > 0 and n > 1:
        degree = np.zeros(n, dtype=int)
        budget = 20 * n * want
        rows = rng.integers(0, n, size=budget)
        cols = rng.integers(0, n, size=budget)
        vals = 1.0 - rng.random(budget)  # uniform on (0, 1]
        placed, capacity = 0, (n * want) // 2
        for i, j, v in zip(rows, cols, vals):
            if i == j or degree[i] >= want or degree[j] >= want or a[i, j] != 0.0:
                continue
            a[i, j] = a[j, i] = v
            degree[i] += 1
            degree[j] += 1
            placed += 1
            if placed == capacity:
                break
    np.fill_diagonal(a, a.sum(axis=1))
    lam0 = float(np.linalg.eigvalsh(a)[0])
    a[np.diag_indices(n)] += spec.lambda_target - lam0
    return a


def random_vector(n: int, seed: int = 0, lo: float = -1.0, hi: float = 1.0) -> np.ndarray:
    """Vector of n independent uniform draws on [lo, hi]."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if lo > hi:
        raise DomainError(f"need lo <= hi, got lo={lo}, hi={hi}")
    rng = np.random.default_rng(seed)
    return lo + (hi - lo) * rng.random(n)
