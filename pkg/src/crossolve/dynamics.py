"""Feedback-circuit dynamics: stability, transient simulation, inversion.

The circuit wires a crosspoint array carrying A into the feedback path of
one op amp per row. Each summing node attenuates its row by
u_i = 1/(1 + sum_j A_ij), so the closed loop relaxes as

    dx/dt = -gbw * (M x - U b),      M = diag(u) A,

whose fixed point is the solution of A x = b. The simulator advances the
explicit forward-difference form of that loop,

    x(t + dt) = alpha U b + (I - alpha M) x(t),      dt = alpha / gbw,

and reports the computing time tau = steps * alpha / gbw at which the
error against the direct-solve oracle first drops below epsilon. Poles
sit at -gbw * eig(M), so the circuit is stable exactly when every
eigenvalue of M has positive real part.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from .errors import (
    ConfigError,
    DomainError,
    InversionError,
    NumericalError,
    StabilityError,
    UsageError,
)
from .spectral import a_norm, direct_solve

__all__ = [
    "OpAmpModel",
    "FeedbackSystem",
    "StabilityReport",
    "SolveConfig",
    "Trace",
    "SolveResult",
    "build_feedback",
    "stability_report",
    "resolve_step",
    "simulate",
    "analytic_trajectory",
    "time_bound",
    "invert_matrix",
    "slew_check",
]


@dataclass(frozen=True)
class OpAmpModel:
    """Single-pole op-amp model: open-loop gain l0, pole omega0 (rad/s).

    The gain-bandwidth product gbw = l0 * omega0 sets the loop's time
    scale. Default slew rate matches a general-purpose JFET amplifier
    (22 V/us).
    """

    l0: float = 1e5
    omega0: float = 1e3
    slew_rate: float = 2.2e7

    def __post_init__(self) -> None:
        if not self.l0 > 1:
            raise ConfigError(f"open-loop gain must exceed 1, got {self.l0}")
        if not self.omega0 > 0:
            raise ConfigError(f"omega0 must be positive, got {self.omega0}")
        if not self.slew_rate > 0:
            raise ConfigError(f"slew_rate must be positive, got {self.slew_rate}")

    @property
    def gbw(self) -> float:
        return self.l0 * self.omega0


@dataclass
class FeedbackSystem:
    """A realized feedback loop: matrix a, row attenuations u, and m = diag(u) a."""

    a: np.ndarray
    u: np.ndarray
    m: np.ndarray

    @cached_property
    def m_eigenvalues(self) -> np.ndarray:
        try:
            return np.linalg.eigvals(self.m)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"eigensolver failed on M: {exc}") from exc


def build_feedback(a) -> FeedbackSystem:
    """Wrap a nonnegative square matrix into its feedback-loop form."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"matrix must be square, got shape {a.shape}")
    if (a < 0).any():
        raise DomainError("feedback conductances cannot be negative")
    u = 1.0 / (1.0 + a.sum(axis=1))
    return FeedbackSystem(a=a, u=u, m=u[:, None] * a)


@dataclass
class StabilityReport:
    """Pole placement of the closed loop for a given op-amp model."""

    eigenvalues: np.ndarray
    lambda_m_min: float
    spectral_radius: float
    poles: np.ndarray
    stable: bool


def stability_report(system: FeedbackSystem, oa: OpAmpModel | None = None) -> StabilityReport:
    """Eigenvalues of M, the poles -gbw * eig(M), and the stability verdict."""
    if oa is None:
        oa = OpAmpModel()
    ev = system.m_eigenvalues
    lam_min = float(ev.real.min())
    return StabilityReport(
        eigenvalues=ev,
        lambda_m_min=lam_min,
        spectral_radius=float(np.abs(ev).max()),
        poles=-oa.gbw * ev,
        stable=lam_min > 0,
    )


@dataclass(frozen=True)
class SolveConfig:
    """Stopping rule and step-size policy for the transient simulation.

    epsilon is an absolute error threshold against the direct-solve
    oracle, measured in norm_kind ("l2" or "a_norm"). alpha is the
    dimensionless step gain; when None it resolves to
    alpha_fraction / rho(M). include_gain_correction adds the finite-gain
    term I/l0 to M, modeling the op amp's finite open-loop gain.
    """

    epsilon: float = 1e-3
    norm_kind: str = "l2"
    alpha: float | None = None
    alpha_fraction: float = 0.1
    max_steps: int = 1_000_000
    include_gain_correction: bool = False
    allow_unstable: bool = False
    record_trace: bool = True
    trace_limit: int = 10_000
    divergence_factor: float = 1e6

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")
        if self.norm_kind not in ("l2", "a_norm"):
            raise ConfigError(f"norm_kind must be 'l2' or 'a_norm', got {self.norm_kind!r}")
        if self.alpha is not None and not self.alpha > 0:
            raise ConfigError(f"alpha must be positive, got {self.alpha}")
        if not self.alpha_fraction > 0:
            raise ConfigError(f"alpha_fraction must be positive, got {self.alpha_fraction}")
        if self.max_steps < 1:
            raise ConfigError(f"max_steps must be >= 1, got {self.max_steps}")
        if self.trace_limit < 2:
            raise ConfigError(f"trace_limit must be >= 2, got {self.trace_limit}")
        if not self.divergence_factor > 0:
            raise ConfigError(f"divergence_factor must be positive, got {self.divergence_factor}")


def _stability_numbers(system: FeedbackSystem) -> tuple[float, float]:
    ev = system.m_eigenvalues
    return float(ev.real.min()), float(np.abs(ev).max())


def resolve_step(system: FeedbackSystem, oa: OpAmpModel, cfg: SolveConfig) -> tuple[float, float]:
    """Resolve the step gain alpha and physical step dt = alpha / gbw.

    Raises StabilityError for an unstable system unless the config allows
    unstable runs, and ConfigError when alpha * rho(M) >= 1 (the update
    would not contract even for the fastest mode).
    """
    lam_min, rho = _stability_numbers(system)
    if lam_min <= 0 and not cfg.allow_unstable:
        raise StabilityError(
            f"system is unstable (min Re eig(M) = {lam_min:.3e}); "
            "set allow_unstable to simulate it anyway"
        )
    if cfg.alpha is not None:
        alpha = float(cfg.alpha)
    else:
        alpha = cfg.alpha_fraction / rho if rho > 0 else cfg.alpha_fraction
    if alpha * rho >= 1.0:
        raise ConfigError(f"alpha * rho(M) = {alpha * rho:.3f} must stay below 1")
    return alpha, alpha / oa.gbw


@dataclass
class Trace:
    """Decimated samples of a transient: times (s), states, error norms."""

    times: np.ndarray
    states: np.ndarray
    errors: np.ndarray


@dataclass
class SolveResult:
    """Outcome of one transient run.

    tau is steps * alpha / gbw exactly. converged and diverged are both
    False when the run hit max_steps (a timeout). trace is None when
    recording was disabled.
    """

    x_final: np.ndarray
    tau: float
    converged: bool
    diverged: bool
    trace: Trace | None
    steps: int


def simulate(
    system: FeedbackSystem,
    b,
    oa: OpAmpModel | None = None,
    cfg: SolveConfig | None = None,
) -> SolveResult:
    """Run the forward-difference transient from x(0) = 0.

    Each step applies x <- alpha U b + (I - alpha M) x and the error
    against the direct-solve oracle is evaluated every step; the run
    converges when it first drops to epsilon or below. Divergence is
    declared when ||x||_2 exceeds divergence_factor * max(1, ||x*||_2).
    The recorded trace is decimated by stride doubling to at most
    trace_limit samples; tau and convergence always use every step.
    """
    if oa is None:
        oa = OpAmpModel()
    if cfg is None:
        cfg = SolveConfig()
    b = np.asarray(b, dtype=float)
    n = system.a.shape[0]
    if b.shape != (n,):
        raise DomainError(f"rhs shape {b.shape} does not match system size {n}")

    x_star = direct_solve(system.a, b)
    alpha, dt = resolve_step(system, oa, cfg)

    m_eff = system.m
    if cfg.include_gain_correction:
        m_eff = system.m + np.eye(n) / oa.l0
    propagate = np.eye(n) - alpha * m_eff
    drive = alpha * (system.u * b)

    if cfg.norm_kind == "a_norm":
        a = system.a

        def error_of(x: np.ndarray) -> float:
            return a_norm(a, x - x_star)

    else:

        def error_of(x: np.ndarray) -> float:
            return float(np.linalg.norm(x - x_star))

    blow_up = cfg.divergence_factor * max(1.0, float(np.linalg.norm(x_star)))

    x = np.zeros(n)
    steps = 0
    converged = diverged = False
    sample_steps: list[int] = []
    sample_states: list[np.ndarray] = []
    sample_errors: list[float] = []
    stride = 1

    while True:
        err = error_of(x)
        if cfg.record_trace and steps % stride == 0:
            sample_steps.append(steps)
            sample_states.append(x.copy())
            sample_errors.append(err)
            if len(sample_steps) > cfg.trace_limit:
                sample_steps = sample_steps[::2]
                sample_states = sample_states[::2]
                sample_errors = sample_errors[::2]
                stride *= 2
        if err <= cfg.epsilon:
            converged = True
            break
        if float(np.linalg.norm(x)) > blow_up:
            diverged = True
            break
        if steps >= cfg.max_steps:
            break
        x = drive + propagate @ x
        steps += 1

    trace = None
    if cfg.record_trace:
        if sample_steps[-1] != steps:
            sample_steps.append(steps)
            sample_states.append(x.copy())
            sample_errors.append(error_of(x))
        trace = Trace(
            times=np.asarray(sample_steps, dtype=float) * dt,
            states=np.vstack(sample_states),
            errors=np.asarray(sample_errors),
        )
    return SolveResult(
        x_final=x,
        tau=steps * alpha / oa.gbw,
        converged=converged,
        diverged=diverged,
        trace=trace,
        steps=steps,
    )


def analytic_trajectory(system: FeedbackSystem, b, x0, oa: OpAmpModel | None = None, t: float = 0.0) -> np.ndarray:
    """Continuous-time state x(t) = x* + expm(-gbw M t) (x0 - x*).

    Evaluates the loop ODE's closed form through the matrix exponential,
    independent of the forward-difference update. Singular systems have
    no fixed point and raise DomainError.
    """
    if oa is None:
        oa = OpAmpModel()
    b = np.asarray(b, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    try:
        x_star = direct_solve(system.a, b)
    except NumericalError as exc:
        raise DomainError(f"no fixed point: {exc}") from exc
    if x0.shape != x_star.shape:
        raise DomainError(f"x0 shape {x0.shape} does not match system size {x_star.shape}")
    decay = scipy.linalg.expm(-oa.gbw * float(t) * system.m)
    return x_star + decay @ (x0 - x_star)


def time_bound(system: FeedbackSystem, b, epsilon: float = 1e-3, oa: OpAmpModel | None = None) -> float:
    """Computing-time bound ln(sqrt(x*^T b) / epsilon) / (lambda_m_min * gbw).

    Valid for symmetric positive-definite A with the error measured in the
    energy norm: the initial error from x(0) = 0 is sqrt(x*^T b) and each
    step contracts it by at least alpha * lambda_m_min.
    """
    if oa is None:
        oa = OpAmpModel()
    if not epsilon > 0:
        raise ConfigError(f"epsilon must be positive, got {epsilon}")
    x_star = direct_solve(system.a, np.asarray(b, dtype=float))
    energy = float(x_star @ np.asarray(b, dtype=float))
    if energy <= 0:
        raise DomainError(f"x*^T b = {energy:.3e} must be positive for the energy bound")
    lam_min = float(system.m_eigenvalues.real.min())
    if lam_min <= 0:
        raise StabilityError(f"bound undefined: min Re eig(M) = {lam_min:.3e} is not positive")
    return math.log(math.sqrt(energy) / epsilon) / (lam_min * oa.gbw)


def invert_matrix(
    a,
    oa: OpAmpModel | None = None,
    cfg: SolveConfig | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Invert a matrix by solving one transient per identity column.

    Returns (a_inv, per_column_tau). Any column whose transient fails to
    converge raises InversionError naming the column; a silent partial
    inverse is never returned.
    """
    if cfg is None:
        cfg = SolveConfig(record_trace=False)
    system = build_feedback(a)
    n = system.a.shape[0]
    inv = np.empty((n, n))
    taus = np.empty(n)
    for j in range(n):
        unit = np.zeros(n)
        unit[j] = 1.0
        result = simulate(system, unit, oa, cfg)
        if not result.converged:
            outcome = "diverged" if result.diverged else "timed out"
            raise InversionError(f"column {j} {outcome} after {result.steps} steps")
        inv[:, j] = result.x_final
        taus[j] = result.tau
    return inv, taus


def slew_check(result: SolveResult, oa: OpAmpModel | None = None) -> bool:
    """True when the recorded trace never exceeds the op amp's slew rate.

    Evaluates max |x_i(t+dt) - x_i(t)| / dt over consecutive trace
    samples. Requires a recorded trace with at least two samples.
    """
    if oa is None:
        oa = OpAmpModel()
    if result.trace is None or result.trace.times.size < 2:
        raise UsageError("slew_check needs a recorded trace with at least two samples")
    dt = np.diff(result.trace.times)
    dx = np.abs(np.diff(result.trace.states, axis=0))
    rate = float((dx / dt[:, None]).max())
    return rate <= oa.slew_rate
