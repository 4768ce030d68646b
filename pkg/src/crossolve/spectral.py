"""Spectral diagnostics, direct-solve oracle, and scaling-law fitting.

The feedback circuit's speed is governed by the smallest eigenvalue of
M = diag(u) A, where u_i = 1/(1 + sum_j A_ij) is the attenuation each
row's summing node applies. This module computes those quantities,
provides the direct linear-algebra oracle that simulations are checked
against, and fits measured computing times to candidate scaling laws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalError, UsageError

__all__ = [
    "SpectralReport",
    "ScalingFit",
    "direct_solve",
    "a_norm",
    "attenuation",
    "sym_part_lambda_min",
    "spectral_report",
    "complexity_cg_estimate",
    "complexity_quantum_estimate",
    "fit_scaling",
]

_COND_LIMIT = 1e12
_FIT_MARGIN = 0.02
_FIT_ORDER = ("constant", "logarithmic", "linear")


def _as_square(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"matrix must be square, got shape {a.shape}")
    return a


def attenuation(a) -> np.ndarray:
    """Row attenuation u_i = 1/(1 + sum_j a_ij) for a nonnegative matrix."""
    a = _as_square(a)
    if (a < 0).any():
        raise DomainError("attenuation is defined for nonnegative matrices only")
    return 1.0 / (1.0 + a.sum(axis=1))


def sym_part_lambda_min(a) -> float:
    """Smallest eigenvalue of (A + A^T)/2, the positive-definiteness screen."""
    a = _as_square(a)
    return float(np.linalg.eigvalsh((a + a.T) / 2.0)[0])


def direct_solve(a, b) -> np.ndarray:
    """Reference solution of A x = b with residual and conditioning guards.

    Raises NumericalError when the 2-norm condition number exceeds 1e12 or
    the residual fails ||Ax - b|| <= 1e-10 (||A|| ||x|| + ||b||).
    """
    a = _as_square(a)
    b = np.asarray(b, dtype=float)
    if b.shape != (a.shape[0],):
        raise DomainError(f"rhs shape {b.shape} does not match matrix {a.shape}")
    try:
        cond = np.linalg.cond(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - cond rarely raises
        raise NumericalError(f"conditioning estimate failed: {exc}") from exc
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise NumericalError(f"matrix condition {cond:.3e} exceeds {_COND_LIMIT:.0e}")
    try:
        x = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"direct solve failed: {exc}") from exc
    resid = np.linalg.norm(a @ x - b)
    limit = 1e-10 * (np.linalg.norm(a) * np.linalg.norm(x) + np.linalg.norm(b))
    if resid > limit:
        raise NumericalError(f"direct solve residual {resid:.3e} exceeds {limit:.3e}")
    return x


def a_norm(a, x) -> float:
    """Energy norm sqrt(x^T A x); raises DomainError when the form is negative."""
    a = _as_square(a)
    x = np.asarray(x, dtype=float)
    q = float(x @ (a @ x))
    if q < 0:
        raise DomainError(f"x^T A x = {q:.3e} is negative; not a norm for this matrix")
    return math.sqrt(q)


@dataclass
class SpectralReport:
    """Eigenvalue summary of A and of the attenuated matrix M = diag(u) A.

    For non-symmetric A the lambda fields are extreme real parts. u_factor
    is lambda_m_min / lambda_min_a, the fraction of A's smallest eigenvalue
    that survives the row attenuation.
    """

    lambda_min_a: float
    lambda_max_a: float
    lambda_m_min: float
    u_min: float
    u_factor: float
    condition_number: float


def spectral_report(a) -> SpectralReport:
    """Spectral quantities controlling circuit speed and stability.

    Symmetric A uses the symmetric eigensolver; symmetric positive-definite
    A additionally gets lambda_m_min from the symmetric similarity
    diag(sqrt(u)) A diag(sqrt(u)), which shares M's spectrum.
    """
    a = _as_square(a)
    u = attenuation(a)
    scale = max(float(np.abs(a).max()), np.finfo(float).tiny)
    symmetric = bool(np.allclose(a, a.T, rtol=0.0, atol=1e-12 * scale))
    try:
        if symmetric:
            w = np.linalg.eigvalsh(a)
            lam_min, lam_max = float(w[0]), float(w[-1])
            if lam_min > 0:
                root_u = np.sqrt(u)
                sim = root_u[:, None] * a * root_u[None, :]
                lam_m_min = float(np.linalg.eigvalsh(sim)[0])
            else:
                lam_m_min = float(np.linalg.eigvals(u[:, None] * a).real.min())
        else:
            w = np.linalg.eigvals(a)
            lam_min, lam_max = float(w.real.min()), float(w.real.max())
            lam_m_min = float(np.linalg.eigvals(u[:, None] * a).real.min())
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    u_factor = lam_m_min / lam_min if lam_min != 0 else math.nan
    cond = lam_max / lam_min if lam_min != 0 else math.inf
    return SpectralReport(
        lambda_min_a=lam_min,
        lambda_max_a=lam_max,
        lambda_m_min=lam_m_min,
        u_min=float(u.min()),
        u_factor=u_factor,
        condition_number=cond,
    )


def _check_estimate_args(n: int, s: int, lambda_max: float, lambda_min: float, epsilon: float) -> None:
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if not 1 <= s <= n:
        raise DomainError(f"s must satisfy 1 <= s <= n, got s={s}, n={n}")
    if not (lambda_min > 0 and lambda_max >= lambda_min):
        raise DomainError(f"need lambda_max >= lambda_min > 0, got {lambda_max}, {lambda_min}")
    if not 0 < epsilon < 1:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")


def complexity_cg_estimate(n: int, s: int, lambda_max: float, lambda_min: float, epsilon: float) -> float:
    """Relative conjugate-gradient cost n * s * sqrt(kappa) * ln(1/eps).

    Unit-constant estimate (relative time units): iterations scale with
    sqrt(lambda_max/lambda_min) * ln(1/eps) and each costs n*s operations
    at s nonzeros per row.
    """
    _check_estimate_args(n, s, lambda_max, lambda_min, epsilon)
    return n * s * math.sqrt(lambda_max / lambda_min) * math.log(1.0 / epsilon)


def complexity_quantum_estimate(n: int, s: int, lambda_max: float, lambda_min: float, epsilon: float) -> float:
    """Relative quantum-solver cost s^2 * kappa^2 * (1/eps) * ln(n), unit constant."""
    _check_estimate_args(n, s, lambda_max, lambda_min, epsilon)
    kappa = lambda_max / lambda_min
    return s**2 * kappa**2 * (1.0 / epsilon) * math.log(n)


@dataclass
class ScalingFit:
    """Least-squares comparison of constant / logarithmic / linear growth.

    coefficients and r_squared hold one entry per candidate model;
    model_kind is the selected explanation of the data.
    """

    model_kind: str
    coefficients: dict[str, tuple[float, ...]]
    r_squared: dict[str, float]


def fit_scaling(points) -> ScalingFit:
    """Fit tau(n) against constant, a + b*ln(n), and a + b*n candidates.

    R^2 is computed about zero (1 - SS_res / sum(tau^2)) so the three
    candidates share one scale; a mean-centered R^2 would pin the constant
    model at zero by construction and make it unselectable. The chosen
    model is the simplest one whose R^2 is within 0.02 of the best
    (simplicity order: constant, logarithmic, linear). Exact fits of
    constant data therefore report R^2 = 1 and select "constant".

    Parameters
    ----------
    points : sequence of (n, tau)
        At least four distinct n values, all positive.
    """
    pts = [(float(n), float(t)) for n, t in points]
    ns = np.array([p[0] for p in pts])
    taus = np.array([p[1] for p in pts])
    if len(set(ns.tolist())) < 4:
        raise UsageError(f"need at least 4 distinct sizes, got {len(set(ns.tolist()))}")
    if (ns <= 0).any():
        raise DomainError("sizes must be positive")

    total = float((taus**2).sum())

    def r2_of(residual_ss: float) -> float:
        if total == 0.0:
            return 1.0
        return float(np.clip(1.0 - residual_ss / total, 0.0, 1.0))

    coeffs: dict[str, tuple[float, ...]] = {}
    r2: dict[str, float] = {}

    c = float(taus.mean())
    coeffs["constant"] = (c,)
    r2["constant"] = r2_of(float(((taus - c) ** 2).sum()))

    for kind, feature in (("logarithmic", np.log(ns)), ("linear", ns)):
        design = np.column_stack([np.ones_like(ns), feature])
        sol, *_ = np.linalg.lstsq(design, taus, rcond=None)
        resid = taus - design @ sol
        coeffs[kind] = (float(sol[0]), float(sol[1]))
        r2[kind] = r2_of(float((resid**2).sum()))

    best = max(r2.values())
    model_kind = next(kind for kind in _FIT_ORDER if r2[kind] >= best - _FIT_MARGIN)
    return ScalingFit(model_kind=model_kind, coefficients=coeffs, r_squared=r2)
