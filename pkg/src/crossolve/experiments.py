"""Experiment scenarios with deterministic seeding and stable outputs.

Each scenario builds a family of linear systems, runs the feedback-circuit
transient on every one, and emits a records.csv (fixed column schema) plus
a human-readable summary.txt into the output directory. Per-system seeds
are derived from (master seed, system index), so results are byte-identical
regardless of thread count or execution order.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .baselines import conjugate_gradient
from .devices import DevicePolicy, measured_level_set, program, read_effective
from .dynamics import (
    OpAmpModel,
    SolveConfig,
    build_feedback,
    invert_matrix,
    resolve_step,
    simulate,
    slew_check,
    stability_report,
    time_bound,
)
from .errors import (
    ConfigError,
    DomainError,
    GenerationError,
    NumericalError,
    OutputError,
    StabilityError,
    UsageError,
)
from .generators import SparsePdSpec, covariance_matrix, random_discrete_pd, random_vector, sparse_pd
from .spectral import (
    complexity_cg_estimate,
    complexity_quantum_estimate,
    fit_scaling,
    sym_part_lambda_min,
)

__all__ = [
    "SCHEMA_VERSION",
    "CSV_COLUMNS",
    "SCENARIOS",
    "DEFAULT_TRANSIENT_A",
    "DEFAULT_TRANSIENT_B",
    "ExperimentSpec",
    "RunRecord",
    "child_seed",
    "scenario_defaults",
    "run_experiment",
    "emit_outputs",
]

SCHEMA_VERSION = 1

CSV_COLUMNS = (
    "schema_version",
    "scenario",
    "system_index",
    "n",
    "beta_or_s",
    "lambda_min",
    "lambda_m_min",
    "u_min",
    "tau_measured_s",
    "tau_bound_s",
    "converged",
    "diverged",
    "steps",
    "cg_iterations",
    "notes",
)

# Bundled three-node demonstration system; entries are conductances in
# units of 100 uS drawn from the eight-level device set.
DEFAULT_TRANSIENT_A = np.array([[1.2, 0.15, 0.8], [0.5, 0.5, 0.6], [0.6, 0.1, 0.8]])
DEFAULT_TRANSIENT_B = np.array([-0.12, 0.36, 0.24])


@dataclass
class RunRecord:
    """One solved system, serialized as a records.csv row.

    final_error and epsilon are bookkeeping (not CSV columns): emission
    re-verifies that every record claiming convergence really has
    final_error <= epsilon.
    """

    scenario: str
    system_index: int
    n: int
    beta_or_s: float | None = None
    lambda_min: float | None = None
    lambda_m_min: float | None = None
    u_min: float | None = None
    tau_measured_s: float | None = None
    tau_bound_s: float | None = None
    converged: bool | None = None
    diverged: bool | None = None
    steps: int | None = None
    cg_iterations: int | None = None
    notes: str = ""
    final_error: float | None = None
    epsilon: float | None = None


@dataclass
class ExperimentSpec:
    """A runnable experiment: scenario id, master seed, outputs, parameters."""

    scenario: str
    seed: int
    output_dir: str | Path
    parameters: dict = field(default_factory=dict)
    threads: int = 1


def child_seed(master: int, *indices: int) -> int:
    """Deterministic per-system seed from the master seed and indices."""
    seq = np.random.SeedSequence((int(master),) + tuple(int(i) for i in indices))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def _digest(*parts) -> str:
    h = hashlib.sha256()
    for part in parts:
        if isinstance(part, np.ndarray):
            h.update(np.ascontiguousarray(part, dtype=float).tobytes())
        else:
            h.update(str(part).encode())
        h.update(b"|")
    return h.hexdigest()[:12]


def _map_tasks(tasks: list[Callable[[], object]], threads: int) -> list:
    if threads <= 1:
        return [task() for task in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda task: task(), tasks))


# ----------------------------------------------------------------------
# Parameter handling


_COMMON = {"epsilon": 1e-3, "gbw": 1e8, "l0": 1e5, "slew_rate": 2.2e7, "norm": "l2"}

_DEFAULTS: dict[str, dict] = {
    "transient": {
        **_COMMON,
        "a": None,  # defaults to DEFAULT_TRANSIENT_A
        "b": None,
        "alpha_fraction": 0.1,
        "include_gain_correction": False,
    },
    "lambda_sweep": {
        **_COMMON,
        "systems": 60,
        "vectors_per_system": 15,
        "dim": 3,
        "g0": 100e-6,
        "lambda_floor": 0.005,
        "floor_tries": 200,
        "max_tries": 64,
        "normalize_b": True,
    },
    "scaling": {
        **_COMMON,
        "beta": 1.0,
        "sizes": (3, 10, 30, 100, 300),
        "vectors_per_size": 100,
        "variants": ("ideal", "rram"),
        "num_levels": 64,
        "ratio": None,  # defaults to 1e3 for beta < 2, else 1e4
        "g_max": 1e-4,
        "noise_fraction": 1.0 / 6.0,
        "normalize_b": False,
    },
    "sparse_suite": {
        **_COMMON,
        "systems": 1000,
        "s": 10,
        "n_range": (20, 200),
        "lambda_range": (0.1, 1.1),
        "normalize_b": True,
        "cg_tol": None,  # defaults to epsilon
    },
    "inversion": {
        **_COMMON,
        "epsilon": 1e-4,  # element accuracy needs a finer threshold
        "n": 10,
        "beta": 1.0,
        "num_levels": 64,
        "ratio": 1e3,
        "g_max": 1e-4,
        "noise_fraction": 1.0 / 6.0,
        "noisy": True,
        "significant_fraction": 0.05,
    },
    "estimate": {
        "epsilon": 1e-3,
        "sizes": (10, 100, 1000, 10000),
        "s": 10,
        "lambda_max": 4.0,
        "lambda_min": 1.0,
    },
}


def scenario_defaults(scenario: str) -> dict:
    """Default parameter set for a scenario id."""
    if scenario not in _DEFAULTS:
        raise ConfigError(f"unknown scenario {scenario!r}; valid: {sorted(_DEFAULTS)}")
    return dict(_DEFAULTS[scenario])


def _merge_params(scenario: str, overrides: dict) -> dict:
    defaults = _DEFAULTS[scenario]
    unknown = set(overrides) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown parameters for scenario {scenario!r}: {sorted(unknown)}")
    params = dict(defaults)
    params.update(overrides)
    return params


def _op_amp(params: dict) -> OpAmpModel:
    gbw = float(params["gbw"])
    l0 = float(params["l0"])
    if not gbw > 0:
        raise ConfigError(f"gbw must be positive, got {gbw}")
    return OpAmpModel(l0=l0, omega0=gbw / l0, slew_rate=float(params["slew_rate"]))


def _unit_vector(n: int, seed: int, normalize: bool) -> np.ndarray:
    b = random_vector(n, seed=seed)
    if normalize:
        norm = float(np.linalg.norm(b))
        if norm == 0.0:  # pragma: no cover - probability zero
            b[0] = 1.0
            norm = 1.0
        b = b / norm
    return b


def _maybe_bound(system, a: np.ndarray, b: np.ndarray, epsilon: float, oa: OpAmpModel) -> float | None:
    scale = max(float(np.abs(a).max()), np.finfo(float).tiny)
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * scale):
        return None
    try:
        return time_bound(system, b, epsilon=epsilon, oa=oa)
    except (DomainError, StabilityError, NumericalError):
        return None


def _final_error(a: np.ndarray, b: np.ndarray, x: np.ndarray, norm_kind: str) -> float:
    delta = x - np.linalg.solve(a, b)
    if norm_kind == "a_norm":
        return math.sqrt(max(float(delta @ (a @ delta)), 0.0))
    return float(np.linalg.norm(delta))


# ----------------------------------------------------------------------
# Scenarios


def _run_transient(spec: ExperimentSpec, p: dict):
    a = DEFAULT_TRANSIENT_A if p["a"] is None else np.asarray(p["a"], dtype=float)
    b = DEFAULT_TRANSIENT_B if p["b"] is None else np.asarray(p["b"], dtype=float)
    oa = _op_amp(p)
    cfg = SolveConfig(
        epsilon=float(p["epsilon"]),
        norm_kind=p["norm"],
        alpha_fraction=float(p["alpha_fraction"]),
        include_gain_correction=bool(p["include_gain_correction"]),
        record_trace=True,
    )
    system = build_feedback(a)
    report = stability_report(system, oa)
    result = simulate(system, b, oa, cfg)
    err = _final_error(a, b, result.x_final, cfg.norm_kind)
    record = RunRecord(
        scenario=spec.scenario,
        system_index=0,
        n=a.shape[0],
        lambda_min=sym_part_lambda_min(a),
        lambda_m_min=report.lambda_m_min,
        u_min=float(system.u.min()),
        tau_measured_s=result.tau,
        tau_bound_s=_maybe_bound(system, a, b, cfg.epsilon, oa),
        converged=result.converged,
        diverged=result.diverged,
        steps=result.steps,
        notes=f"digest={_digest(a, b)}",
        final_error=err,
        epsilon=cfg.epsilon,
    )
    trace_lines = ["t_s," + ",".join(f"x_{i + 1}" for i in range(a.shape[0])) + ",error"]
    for t, state, e in zip(result.trace.times, result.trace.states, result.trace.errors):
        cells = [format(t, ".12g")] + [format(v, ".12g") for v in state] + [format(e, ".12g")]
        trace_lines.append(",".join(cells))
    slew_ok = slew_check(result, oa)
    lines = [
        f"tau_s: {result.tau:.12g}",
        f"tau_gbw: {result.tau * oa.gbw:.12g}",
        f"final_error: {err:.6g}",
        f"slew_ok: {'true' if slew_ok else 'false'}",
    ]
    return [record], lines, {"trace.csv": "\n".join(trace_lines) + "\n"}


def _sweep_matrix(master: int, mi: int, p: dict) -> tuple[np.ndarray, float]:
    floor = float(p["lambda_floor"])
    for attempt in range(int(p["floor_tries"])):
        a, lam = random_discrete_pd(
            dim=int(p["dim"]),
            g0=float(p["g0"]),
            seed=child_seed(master, mi, attempt),
            max_tries=int(p["max_tries"]),
        )
        if lam >= floor:
            return a, lam
    raise GenerationError(f"no draw with lambda_min >= {floor} for system {mi}")


def _run_lambda_sweep(spec: ExperimentSpec, p: dict):
    oa = _op_amp(p)
    cfg = SolveConfig(epsilon=float(p["epsilon"]), norm_kind=p["norm"], record_trace=False)
    systems_count = int(p["systems"])
    vectors = int(p["vectors_per_system"])

    prepared = []
    for mi in range(systems_count):
        a, lam = _sweep_matrix(spec.seed, mi, p)
        prepared.append((a, lam, build_feedback(a)))

    def make_task(mi: int, k: int) -> Callable[[], RunRecord]:
        a, lam, system = prepared[mi]

        def task() -> RunRecord:
            b = _unit_vector(a.shape[0], child_seed(spec.seed, mi, 10_000 + k), p["normalize_b"])
            result = simulate(system, b, oa, cfg)
            report = stability_report(system, oa)
            return RunRecord(
                scenario=spec.scenario,
                system_index=mi * vectors + k,
                n=a.shape[0],
                lambda_min=lam,
                lambda_m_min=report.lambda_m_min,
                u_min=float(system.u.min()),
                tau_measured_s=result.tau,
                tau_bound_s=_maybe_bound(system, a, b, cfg.epsilon, oa),
                converged=result.converged,
                diverged=result.diverged,
                steps=result.steps,
                notes=f"digest={_digest(a, b)};matrix={mi}",
                final_error=_final_error(a, b, result.x_final, cfg.norm_kind),
                epsilon=cfg.epsilon,
            )

        return task

    tasks = [make_task(mi, k) for mi in range(systems_count) for k in range(vectors)]
    records = _map_tasks(tasks, spec.threads)

    by_matrix: dict[int, list[RunRecord]] = {}
    for rec in records:
        by_matrix.setdefault(rec.system_index // vectors, []).append(rec)
    inv_lam = np.array([1.0 / max(recs[0].lambda_m_min, 1e-30) for recs in by_matrix.values()])
    peak_tau = np.array([max(r.tau_measured_s for r in recs) for recs in by_matrix.values()])
    slope, intercept = np.polyfit(inv_lam, peak_tau, 1)
    pred = slope * inv_lam + intercept
    ss_res = float(((peak_tau - pred) ** 2).sum())
    ss_tot = float(((peak_tau - peak_tau.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    lams = [recs[0].lambda_min for recs in by_matrix.values()]
    lines = [
        f"lambda_min_range: {min(lams):.6g} .. {max(lams):.6g}",
        f"envelope_fit: slope={slope:.6g} intercept={intercept:.6g} r2={r2:.6g}",
    ]
    return records, lines, {}


def _run_scaling(spec: ExperimentSpec, p: dict):
    oa = _op_amp(p)
    cfg = SolveConfig(epsilon=float(p["epsilon"]), norm_kind=p["norm"], record_trace=False)
    beta = float(p["beta"])
    sizes = [int(n) for n in p["sizes"]]
    vectors = int(p["vectors_per_size"])
    variants = [str(v) for v in p["variants"]]
    for variant in variants:
        if variant not in ("ideal", "rram"):
            raise ConfigError(f"unknown scaling variant {variant!r}")
    ratio = float(p["ratio"]) if p["ratio"] is not None else (1e4 if beta >= 2 else 1e3)

    prepared = {}
    for si, n in enumerate(sizes):
        ideal = covariance_matrix(n, beta)
        for variant in variants:
            if variant == "ideal":
                a_eff = ideal
            else:
                policy = DevicePolicy(
                    num_levels=int(p["num_levels"]),
                    g_max=float(p["g_max"]),
                    ratio=ratio,
                    noise_fraction=float(p["noise_fraction"]),
                )
                a_eff = read_effective(program(ideal, None, policy, seed=child_seed(spec.seed, si)))
            system = build_feedback(a_eff)
            system.m_eigenvalues  # warm the eigenvalue cache serially
            prepared[(si, variant)] = (a_eff, system)

    def make_task(index: int, si: int, variant: str, k: int) -> Callable[[], RunRecord]:
        a_eff, system = prepared[(si, variant)]

        def task() -> RunRecord:
            n = a_eff.shape[0]
            b = _unit_vector(n, child_seed(spec.seed, si, k), p["normalize_b"])
            result = simulate(system, b, oa, cfg)
            report = stability_report(system, oa)
            return RunRecord(
                scenario=spec.scenario,
                system_index=index,
                n=n,
                beta_or_s=beta,
                lambda_min=sym_part_lambda_min(a_eff),
                lambda_m_min=report.lambda_m_min,
                u_min=float(system.u.min()),
                tau_measured_s=result.tau,
                tau_bound_s=_maybe_bound(system, a_eff, b, cfg.epsilon, oa),
                converged=result.converged,
                diverged=result.diverged,
                steps=result.steps,
                notes=f"digest={_digest(a_eff, b)};variant={variant}",
                final_error=_final_error(a_eff, b, result.x_final, cfg.norm_kind),
                epsilon=cfg.epsilon,
            )

        return task

    tasks = []
    index = 0
    for si in range(len(sizes)):
        for variant in variants:
            for k in range(vectors):
                tasks.append(make_task(index, si, variant, k))
                index += 1
    records = _map_tasks(tasks, spec.threads)

    lines = []
    means: dict[str, list[tuple[int, float]]] = {variant: [] for variant in variants}
    for variant in variants:
        for n in sizes:
            taus = [
                r.tau_measured_s
                for r in records
                if r.n == n and r.notes.endswith(f"variant={variant}") and r.converged
            ]
            if taus:
                means[variant].append((n, float(np.mean(taus))))
    for variant in variants:
        pts = means[variant]
        for n, mean_tau in pts:
            lines.append(f"mean_tau_s[{variant}][n={n}]: {mean_tau:.12g}")
        if len({n for n, _ in pts}) >= 4:
            fit = fit_scaling(pts)
            r2 = fit.r_squared
            lines.append(
                f"fit[{variant}]: kind={fit.model_kind}"
                f" constant_r2={r2['constant']:.6g}"
                f" logarithmic_r2={r2['logarithmic']:.6g}"
                f" linear_r2={r2['linear']:.6g}"
                f" logarithmic_b={fit.coefficients['logarithmic'][1]:.6g}"
            )
    if "ideal" in variants and "rram" in variants:
        pairs = [
            (dict(means["ideal"]).get(n), dict(means["rram"]).get(n))
            for n in sizes
            if dict(means["ideal"]).get(n) and dict(means["rram"]).get(n)
        ]
        if pairs:
            worst = max(max(r / i, i / r) for i, r in pairs)
            lines.append(f"rram_vs_ideal_worst_ratio: {worst:.6g}")
    return records, lines, {}


def _run_sparse_suite(spec: ExperimentSpec, p: dict):
    oa = _op_amp(p)
    cfg = SolveConfig(epsilon=float(p["epsilon"]), norm_kind=p["norm"], record_trace=False)
    systems_count = int(p["systems"])
    s = int(p["s"])
    n_lo, n_hi = (int(v) for v in p["n_range"])
    lam_lo, lam_hi = (float(v) for v in p["lambda_range"])
    if n_lo < 1 or n_hi < n_lo:
        raise ConfigError(f"invalid n_range {p['n_range']}")
    if not 0 < lam_lo <= lam_hi:
        raise ConfigError(f"invalid lambda_range {p['lambda_range']}")
    cg_tol = float(p["cg_tol"]) if p["cg_tol"] is not None else float(p["epsilon"])

    def make_task(i: int) -> Callable[[], RunRecord]:
        def task() -> RunRecord:
            rng = np.random.default_rng(child_seed(spec.seed, i))
            n = int(rng.integers(n_lo, n_hi + 1))
            lam_target = float(rng.uniform(lam_lo, lam_hi))
            a = sparse_pd(SparsePdSpec(n=n, s=min(s, n), lambda_target=lam_target, seed=child_seed(spec.seed, i, 1)))
            b = _unit_vector(n, child_seed(spec.seed, i, 2), p["normalize_b"])
            system = build_feedback(a)
            result = simulate(system, b, oa, cfg)
            report = stability_report(system, oa)
            cg = conjugate_gradient(a, b, tol=cg_tol)
            return RunRecord(
                scenario=spec.scenario,
                system_index=i,
                n=n,
                beta_or_s=float(s),
                lambda_min=float(np.linalg.eigvalsh(a)[0]),
                lambda_m_min=report.lambda_m_min,
                u_min=float(system.u.min()),
                tau_measured_s=result.tau,
                tau_bound_s=_maybe_bound(system, a, b, cfg.epsilon, oa),
                converged=result.converged,
                diverged=result.diverged,
                steps=result.steps,
                cg_iterations=cg.iterations,
                notes=f"digest={_digest(a, b)}",
                final_error=_final_error(a, b, result.x_final, cfg.norm_kind),
                epsilon=cfg.epsilon,
            )

        return task

    records = _map_tasks([make_task(i) for i in range(systems_count)], spec.threads)

    lams = np.array([r.lambda_min for r in records])
    taus = np.array([r.tau_measured_s for r in records])
    ns = np.array([r.n for r in records], dtype=float)
    cg_time = np.array([r.cg_iterations for r in records], dtype=float) * ns * s
    slope = float(np.polyfit(np.log(lams), np.log(taus), 1)[0])
    subset = (lams >= 0.9) & (lams <= 1.0)
    lines = [f"loglog_slope_tau_vs_lambda_min: {slope:.6g}", f"subset_lambda_0.9_1.0: {int(subset.sum())}"]
    if subset.sum() >= 3:
        r_tau_n = float(np.corrcoef(taus[subset], ns[subset])[0, 1])
        cg_slope = float(np.polyfit(ns[subset], cg_time[subset], 1)[0])
        lines.append(f"subset_pearson_tau_n: {r_tau_n:.6g}")
        lines.append(f"subset_cg_time_slope: {cg_slope:.6g}")
    return records, lines, {}


def _run_inversion(spec: ExperimentSpec, p: dict):
    oa = _op_amp(p)
    cfg = SolveConfig(epsilon=float(p["epsilon"]), norm_kind=p["norm"], record_trace=False)
    n = int(p["n"])
    beta = float(p["beta"])
    ideal = covariance_matrix(n, beta)
    if p["noisy"]:
        policy = DevicePolicy(
            num_levels=int(p["num_levels"]),
            g_max=float(p["g_max"]),
            ratio=float(p["ratio"]),
            noise_fraction=float(p["noise_fraction"]),
        )
        a_eff = read_effective(program(ideal, None, policy, seed=child_seed(spec.seed, 0)))
    else:
        a_eff = ideal

    system = build_feedback(a_eff)
    report = stability_report(system, oa)
    alpha, dt = resolve_step(system, oa, cfg)
    computed, taus = invert_matrix(a_eff, oa, cfg)
    reference = np.linalg.inv(ideal)
    x_true = np.linalg.solve(a_eff, np.eye(n))

    lam_min = sym_part_lambda_min(a_eff)
    records = []
    for j in range(n):
        err = float(np.linalg.norm(computed[:, j] - x_true[:, j]))
        records.append(
            RunRecord(
                scenario=spec.scenario,
                system_index=j,
                n=n,
                beta_or_s=beta,
                lambda_min=lam_min,
                lambda_m_min=report.lambda_m_min,
                u_min=float(system.u.min()),
                tau_measured_s=float(taus[j]),
                converged=True,
                diverged=False,
                steps=int(round(taus[j] / dt)),
                notes=f"digest={_digest(a_eff, j)};column={j}",
                final_error=err,
                epsilon=cfg.epsilon,
            )
        )

    threshold = float(p["significant_fraction"]) * float(np.abs(reference).max())
    significant = np.abs(reference) >= threshold
    rel = np.abs(computed - reference)[significant] / np.abs(reference)[significant]
    inv_lines = ["row,col,computed,reference,rel_error"]
    for i in range(n):
        for j in range(n):
            ref = reference[i, j]
            rel_cell = format(abs(computed[i, j] - ref) / abs(ref), ".12g") if ref != 0 else ""
            inv_lines.append(
                f"{i},{j},{format(computed[i, j], '.12g')},{format(ref, '.12g')},{rel_cell}"
            )
    lines = [
        f"significant_entries: {int(significant.sum())}",
        f"max_rel_error_significant: {float(rel.max()):.6g}",
        f"mean_column_tau_s: {float(np.mean(taus)):.12g}",
    ]
    return records, lines, {"inverse.csv": "\n".join(inv_lines) + "\n"}


def _run_estimate(spec: ExperimentSpec, p: dict):
    s = int(p["s"])
    lam_max = float(p["lambda_max"])
    lam_min = float(p["lambda_min"])
    epsilon = float(p["epsilon"])
    records = []
    lines = []
    for i, n in enumerate(int(v) for v in p["sizes"]):
        cg_rel = complexity_cg_estimate(n, s, lam_max, lam_min, epsilon)
        quantum_rel = complexity_quantum_estimate(n, s, lam_max, lam_min, epsilon)
        records.append(
            RunRecord(
                scenario=spec.scenario,
                system_index=i,
                n=n,
                beta_or_s=float(s),
                lambda_min=lam_min,
                notes=(
                    f"digest={_digest(n, s, lam_max, lam_min, epsilon)}"
                    f";cg_rel={cg_rel:.6g};quantum_rel={quantum_rel:.6g}"
                ),
            )
        )
        lines.append(f"estimate[n={n}]: cg_rel={cg_rel:.6g} quantum_rel={quantum_rel:.6g}")
    return records, lines, {}


SCENARIOS: dict[str, Callable] = {
    "transient": _run_transient,
    "lambda_sweep": _run_lambda_sweep,
    "scaling": _run_scaling,
    "sparse_suite": _run_sparse_suite,
    "inversion": _run_inversion,
    "estimate": _run_estimate,
}


# ----------------------------------------------------------------------
# Emission


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".12g")
    return str(value)


def _summary_text(spec: ExperimentSpec, params: dict, records: list[RunRecord], extra: list[str]) -> str:
    solved = [r for r in records if r.converged is not None]
    converged = sum(1 for r in solved if r.converged)
    diverged = sum(1 for r in solved if r.diverged)
    timeouts = sum(1 for r in solved if not r.converged and not r.diverged)
    gbw = float(params.get("gbw", 1e8))
    taus = [r.tau_measured_s for r in records if r.converged and r.tau_measured_s is not None]
    bounded = [r for r in records if r.tau_measured_s is not None and r.tau_bound_s is not None]
    bound_ok = sum(1 for r in bounded if r.tau_measured_s <= r.tau_bound_s)
    ineq = [
        r
        for r in records
        if r.lambda_min is not None
        and r.lambda_min > 0
        and r.lambda_m_min is not None
        and r.u_min is not None
    ]
    ineq_ok = sum(1 for r in ineq if r.lambda_m_min >= r.u_min * r.lambda_min * (1 - 1e-12))
    lines = [
        f"scenario: {spec.scenario}",
        f"seed: {spec.seed}",
        f"records: {len(records)}",
        f"converged: {converged}/{len(solved)}",
        f"diverged: {diverged}/{len(solved)}",
        f"timeouts: {timeouts}/{len(solved)}",
        f"epsilon: {_cell(float(params['epsilon']))}",
        f"gbw: {_cell(gbw)}",
    ]
    if taus:
        lines.append(f"mean_tau_gbw: {float(np.mean(taus)) * gbw:.12g}")
    if bounded:
        lines.append(f"bound_satisfied: {bound_ok}/{len(bounded)}")
    if ineq:
        lines.append(f"attenuation_inequality: {ineq_ok}/{len(ineq)}")
    lines.extend(extra)
    return "\n".join(lines) + "\n"


def emit_outputs(records: list[RunRecord], summary: str, output_dir: str | Path) -> tuple[Path, Path]:
    """Write records.csv and summary.txt; byte-stable for identical inputs.

    Every record claiming convergence is re-verified against its recorded
    final error before anything is written. An empty record list is a
    usage error.
    """
    if not records:
        raise UsageError("no records to emit")
    for rec in records:
        if rec.converged and rec.final_error is not None and rec.epsilon is not None:
            if rec.final_error > rec.epsilon:
                raise NumericalError(
                    f"record {rec.system_index} claims convergence but final error "
                    f"{rec.final_error:.3e} exceeds epsilon {rec.epsilon:.3e}"
                )
        if "," in rec.notes or "\n" in rec.notes:
            raise UsageError(f"record {rec.system_index} notes must not contain commas/newlines")

    rows = [",".join(CSV_COLUMNS)]
    for rec in records:
        rows.append(
            ",".join(
                [
                    str(SCHEMA_VERSION),
                    rec.scenario,
                    str(rec.system_index),
                    str(rec.n),
                    _cell(rec.beta_or_s),
                    _cell(rec.lambda_min),
                    _cell(rec.lambda_m_min),
                    _cell(rec.u_min),
                    _cell(rec.tau_measured_s),
                    _cell(rec.tau_bound_s),
                    _cell(rec.converged),
                    _cell(rec.diverged),
                    _cell(rec.steps),
                    _cell(rec.cg_iterations),
                    rec.notes,
                ]
            )
        )
    out = Path(output_dir)
    records_path = out / "records.csv"
    summary_path = out / "summary.txt"
    try:
        out.mkdir(parents=True, exist_ok=True)
        records_path.write_text("\n".join(rows) + "\n", encoding="utf-8", newline="\n")
        summary_path.write_text(summary, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise OutputError(f"cannot write outputs under {out}: {exc}") from exc
    return records_path, summary_path


def run_experiment(spec: ExperimentSpec) -> tuple[list[RunRecord], str]:
    """Run a scenario end to end and write its outputs.

    Parameters are validated before any system is solved; unknown keys are
    configuration errors. Returns (records, summary text) after writing
    records.csv, summary.txt, and any scenario-specific files.
    """
    if spec.scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {spec.scenario!r}; valid: {sorted(SCENARIOS)}")
    if spec.seed is None or int(spec.seed) < 0:
        raise ConfigError("a nonnegative master seed is required")
    if int(spec.threads) < 1:
        raise ConfigError(f"threads must be >= 1, got {spec.threads}")
    params = _merge_params(spec.scenario, dict(spec.parameters))
    records, extra_lines, aux = SCENARIOS[spec.scenario](spec, params)
    records = sorted(records, key=lambda r: r.system_index)
    summary = _summary_text(spec, params, records, extra_lines)
    emit_outputs(records, summary, spec.output_dir)
    for name, text in aux.items():
        path = Path(spec.output_dir) / name
        try:
            path.write_text(text, encoding="utf-8", newline="\n")
        except OSError as exc:
            raise OutputError(f"cannot write {path}: {exc}") from exc
    return records, summary
