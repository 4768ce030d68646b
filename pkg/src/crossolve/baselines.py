"""Digital baseline solver used for run-time comparisons.

A plain conjugate-gradient iteration whose iteration count is the
quantity of interest: the experiment suites compare the circuit's
computing time against iterations * n * s as the relative digital cost.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = ["CgResult", "conjugate_gradient"]


@dataclass
class CgResult:
    """Conjugate-gradient outcome with the full residual-norm history."""

    x: np.ndarray
    iterations: int
    residual_history: np.ndarray
    converged: bool


def conjugate_gradient(a, b, tol: float = 1e-8, max_iters: int | None = None) -> CgResult:
    """Solve A x = b for symmetric positive-definite A from x(0) = 0.

    Stops when ||A x - b||_2 <= tol * ||b||_2. residual_history holds the
    initial residual norm followed by one entry per iteration. Raises
    DomainError for a non-symmetric matrix or when an indefinite direction
    (p^T A p <= 0) is encountered.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"matrix must be square, got shape {a.shape}")
    if b.shape != (a.shape[0],):
        raise DomainError(f"rhs shape {b.shape} does not match matrix {a.shape}")
    scale = max(float(np.abs(a).max()), np.finfo(float).tiny)
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * scale):
        raise DomainError("conjugate gradient requires a symmetric matrix")
    if not tol >= 0:
        raise DomainError(f"tol must be nonnegative, got {tol}")

    n = b.size
    if max_iters is None:
        max_iters = 10 * n
    threshold = tol * float(np.linalg.norm(b))

    x = np.zeros(n)
    r = b.copy()
    history = [float(np.linalg.norm(r))]
    if history[0] <= threshold:
        return CgResult(x=x, iterations=0, residual_history=np.array(history), converged=True)

    p = r.copy()
    rs = float(r @ r)
    converged = False
    iterations = 0
    for iterations in range(1, max_iters + 1):
        ap = a @ p
        pap = float(p @ ap)
        if pap <= 0:
            raise DomainError(f"p^T A p = {pap:.3e} is not positive; matrix is not PD")
        gamma = rs / pap
        x += gamma * p
        r -= gamma * ap
        rn = float(np.linalg.norm(r))
        history.append(rn)
        if rn <= threshold:
            converged = True
            break
        rs_next = float(r @ r)
        p = r + (rs_next / rs) * p
        rs = rs_next
    return CgResult(x=x, iterations=iterations, residual_history=np.array(history), converged=converged)
