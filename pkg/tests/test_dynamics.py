"""Feedback-loop dynamics tests: stability, transient, bound, inversion."""

import math

import numpy as np
import pytest

from crossolve import (
    ConfigError,
    DomainError,
    InversionError,
    OpAmpModel,
    SolveConfig,
    StabilityError,
    UsageError,
    analytic_trajectory,
    build_feedback,
    covariance_matrix,
    direct_solve,
    invert_matrix,
    resolve_step,
    simulate,
    slew_check,
    stability_report,
    time_bound,
)

SWAP = np.array([[0.0, 1.0], [1.0, 0.0]])


class TestOpAmpModel:
    def test_default_gbw(self, oa):
        assert oa.gbw == pytest.approx(1e8)

    @pytest.mark.parametrize("kwargs", [{"l0": 1.0}, {"omega0": 0.0}, {"slew_rate": 0.0}])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            OpAmpModel(**kwargs)


class TestBuildFeedback:
    def test_demo_attenuations(self, demo_system):
        system, _ = demo_system
        assert np.allclose(system.u, [1 / 3.15, 1 / 2.6, 1 / 2.5])
        assert np.allclose(system.m, system.u[:, None] * system.a)

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            build_feedback(np.array([[1.0, -0.2], [0.0, 1.0]]))

    def test_non_square_rejected(self):
        with pytest.raises(DomainError):
            build_feedback(np.ones((2, 3)))


class TestStabilityReport:
    def test_identity_poles(self, oa):
        rep = stability_report(build_feedback(np.eye(3)), oa)
        assert rep.stable
        assert rep.lambda_m_min == pytest.approx(0.5)
        assert np.allclose(rep.poles.real, -5e7)

    def test_swap_matrix_unstable(self, oa):
        rep = stability_report(build_feedback(SWAP), oa)
        assert not rep.stable
        assert rep.lambda_m_min == pytest.approx(-0.5)
        assert rep.spectral_radius == pytest.approx(0.5)

    def test_demo_stable(self, demo_system, oa):
        system, _ = demo_system
        assert stability_report(system, oa).stable


class TestResolveStep:
    def test_identity_defaults(self, oa):
        alpha, dt = resolve_step(build_feedback(np.eye(2)), oa, SolveConfig())
        assert alpha == pytest.approx(0.2)  # 0.1 / rho, rho = 0.5
        assert dt == pytest.approx(2e-9)

    def test_explicit_alpha(self, oa):
        alpha, dt = resolve_step(build_feedback(np.eye(2)), oa, SolveConfig(alpha=0.5))
        assert alpha == 0.5
        assert dt == pytest.approx(5e-9)

    def test_unstable_needs_opt_in(self, oa):
        with pytest.raises(StabilityError):
            resolve_step(build_feedback(SWAP), oa, SolveConfig())
        alpha, _ = resolve_step(build_feedback(SWAP), oa, SolveConfig(allow_unstable=True))
        assert alpha == pytest.approx(0.2)

    def test_overlarge_alpha_rejected(self, oa):
        with pytest.raises(ConfigError):
            resolve_step(build_feedback(np.eye(2)), oa, SolveConfig(alpha=2.5))

    def test_zero_matrix_falls_back_to_fraction(self, oa):
        cfg = SolveConfig(allow_unstable=True, alpha_fraction=0.07)
        alpha, _ = resolve_step(build_feedback(np.zeros((2, 2))), oa, cfg)
        assert alpha == pytest.approx(0.07)


class TestSolveConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"epsilon": 0.0},
            {"norm_kind": "energy"},
            {"alpha": -0.1},
            {"alpha_fraction": 0.0},
            {"max_steps": 0},
            {"trace_limit": 1},
            {"divergence_factor": 0.0},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            SolveConfig(**kwargs)


class TestSimulate:
    def test_demo_converges_below_microsecond(self, demo_system, oa):
        system, b = demo_system
        res = simulate(system, b, oa, SolveConfig())
        assert res.converged and not res.diverged
        assert res.tau == pytest.approx(res.steps * 0.1 / stability_report(system).spectral_radius / 1e8)
        assert res.tau < 1e-6
        x_star = direct_solve(system.a, b)
        assert np.linalg.norm(res.x_final - x_star) <= 1e-3

    def test_zero_rhs_converges_immediately(self, oa):
        res = simulate(build_feedback(np.eye(2)), np.zeros(2), oa, SolveConfig())
        assert res.converged
        assert res.steps == 0
        assert res.tau == 0.0

    def test_fixed_point_is_exact(self, demo_system, oa):
        # alpha U b + (I - alpha M) x* returns x* up to rounding
        system, b = demo_system
        x_star = direct_solve(system.a, b)
        alpha, _ = resolve_step(system, oa, SolveConfig())
        mapped = alpha * (system.u * b) + (np.eye(3) - alpha * system.m) @ x_star
        assert np.linalg.norm(mapped - x_star) <= 1e-12 * np.linalg.norm(x_star)

    def test_unstable_system_diverges(self, oa):
        cfg = SolveConfig(allow_unstable=True, max_steps=100_000)
        res = simulate(build_feedback(SWAP), np.array([1.0, 2.0]), oa, cfg)
        assert res.diverged and not res.converged

    def test_timeout_reports_neither(self, demo_system, oa):
        system, b = demo_system
        res = simulate(system, b, oa, SolveConfig(max_steps=3))
        assert not res.converged and not res.diverged
        assert res.steps == 3

    def test_a_norm_stopping(self, spd_pair, oa):
        a, b = spd_pair
        system = build_feedback(a)
        res = simulate(system, b, oa, SolveConfig(norm_kind="a_norm"))
        delta = res.x_final - direct_solve(a, b)
        assert math.sqrt(delta @ (a @ delta)) <= 1e-3

    def test_monotone_contraction_in_a_norm(self, spd_pair, oa):
        a, b = spd_pair
        system = build_feedback(a)
        cfg = SolveConfig(norm_kind="a_norm", trace_limit=100_000)
        res = simulate(system, b, oa, cfg)
        rep = stability_report(system, oa)
        alpha, _ = resolve_step(system, oa, cfg)
        factor = 1.0 - alpha * rep.lambda_m_min
        errs = res.trace.errors
        assert (errs[1:] <= factor * errs[:-1] * (1 + 1e-10)).all()

    def test_step_deviation_is_first_order(self, oa):
        # forward-difference vs matrix-exponential deviation halves with alpha
        a = covariance_matrix(4, 1.0)
        system = build_feedback(a)
        b = a @ np.array([0.6, -0.4, 0.3, 0.5])
        rho = stability_report(system, oa).spectral_radius
        devs = []
        for alpha in (0.01 / rho, 0.005 / rho):
            cfg = SolveConfig(alpha=alpha, trace_limit=512)
            res = simulate(system, b, oa, cfg)
            dev = 0.0
            for t, state in zip(res.trace.times, res.trace.states):
                dev = max(dev, float(np.linalg.norm(state - analytic_trajectory(system, b, np.zeros(4), oa, t))))
            devs.append(dev)
        ratio = devs[0] / devs[1]
        assert 1.8 <= ratio <= 2.4

    def test_divergence_guard_scales_with_solution(self, oa):
        cfg = SolveConfig(allow_unstable=True, max_steps=2000, divergence_factor=10.0)
        res = simulate(build_feedback(SWAP), np.array([1.0, 2.0]), oa, cfg)
        assert res.diverged
        assert np.linalg.norm(res.x_final) > 10.0

    def test_trace_decimation_and_final_sample(self, demo_system, oa):
        system, b = demo_system
        cfg = SolveConfig(trace_limit=16)
        res = simulate(system, b, oa, cfg)
        tr = res.trace
        assert len(tr.times) <= 17
        assert (np.diff(tr.times) > 0).all()
        assert tr.times[0] == 0.0
        assert tr.times[-1] == pytest.approx(res.tau)
        assert np.array_equal(tr.states[-1], res.x_final)

    def test_no_trace_when_disabled(self, demo_system, oa):
        system, b = demo_system
        res = simulate(system, b, oa, SolveConfig(record_trace=False))
        assert res.trace is None

    def test_rhs_shape_checked(self, demo_system, oa):
        system, _ = demo_system
        with pytest.raises(DomainError):
            simulate(system, np.ones(4), oa, SolveConfig())

    def test_gain_correction_shifts_fixed_point(self, spd_pair, oa):
        a, b = spd_pair
        system = build_feedback(a)
        cfg = SolveConfig(include_gain_correction=True, epsilon=1e-3)
        res = simulate(system, b, oa, cfg)
        assert res.converged
        # the corrected loop settles on (M + I/l0)^-1 U b, a small shift
        m_eff = system.m + np.eye(2) / oa.l0
        shifted = np.linalg.solve(m_eff, system.u * b)
        plain = simulate(system, b, oa, SolveConfig(epsilon=1e-6)).x_final
        exact = direct_solve(a, b)
        assert np.linalg.norm(shifted - exact) < 1e-3
        assert np.linalg.norm(plain - exact) < np.linalg.norm(shifted - exact)


class TestAnalyticTrajectory:
    def test_identity_closed_form(self, oa):
        # A = I gives M = I/2 and x(t) = (1 - exp(-gbw t / 2)) b
        system = build_feedback(np.eye(2))
        b = np.array([1.0, 0.0])
        for t in (0.0, 1e-8, 5e-8, 2e-7):
            got = analytic_trajectory(system, b, np.zeros(2), oa, t)
            want = (1.0 - math.exp(-1e8 * t / 2.0)) * b
            assert np.allclose(got, want, atol=1e-12)

    def test_starts_at_x0(self, demo_system, oa):
        system, b = demo_system
        x0 = np.array([0.3, -0.2, 0.1])
        assert np.allclose(analytic_trajectory(system, b, x0, oa, 0.0), x0)

    def test_singular_system_rejected(self, oa):
        system = build_feedback(np.ones((2, 2)))
        with pytest.raises(DomainError):
            analytic_trajectory(system, np.array([1.0, 0.0]), np.zeros(2), oa, 1e-8)

    def test_shape_mismatch(self, demo_system, oa):
        system, b = demo_system
        with pytest.raises(DomainError):
            analytic_trajectory(system, b, np.zeros(4), oa, 1e-8)


class TestTimeBound:
    def test_identity_oracle_value(self, oa):
        # ln(sqrt(1)/1e-3) / (0.5 * 1e8) = 2e-8 ln(1000) = 1.381551e-7
        system = build_feedback(np.eye(3))
        b = np.array([1.0, 0.0, 0.0])
        assert time_bound(system, b, 1e-3, oa) == pytest.approx(1.3815511e-7, rel=1e-6)

    def test_covers_measured_tau_on_spd(self, spd_pair, oa):
        a, b = spd_pair
        system = build_feedback(a)
        res = simulate(system, b, oa, SolveConfig(norm_kind="a_norm"))
        assert res.tau <= time_bound(system, b, 1e-3, oa)

    def test_zero_energy_rejected(self, oa):
        system = build_feedback(np.eye(2))
        with pytest.raises(DomainError):
            time_bound(system, np.zeros(2), 1e-3, oa)

    def test_unstable_rejected(self, oa):
        with pytest.raises(StabilityError):
            time_bound(build_feedback(SWAP), np.array([1.0, 2.0]), 1e-3, oa)

    def test_epsilon_validated(self, oa):
        system = build_feedback(np.eye(2))
        with pytest.raises(ConfigError):
            time_bound(system, np.array([1.0, 0.0]), 0.0, oa)


class TestInvertMatrix:
    def test_spd_inverse(self, spd_pair, oa):
        a, _ = spd_pair
        cfg = SolveConfig(epsilon=1e-5, record_trace=False)
        inv, taus = invert_matrix(a, oa, cfg)
        expected = np.array([[2.0, -1.0], [-1.0, 2.0]]) / 3.0
        assert np.allclose(inv, expected, atol=1e-4)
        assert taus.shape == (2,)
        assert (taus > 0).all()

    def test_failure_names_column(self, oa):
        cfg = SolveConfig(allow_unstable=True, max_steps=50_000, record_trace=False)
        with pytest.raises(InversionError, match="column 0"):
            invert_matrix(SWAP, oa, cfg)


class TestSlewCheck:
    def test_demo_within_slew(self, demo_system, oa):
        system, b = demo_system
        res = simulate(system, b, oa, SolveConfig())
        assert slew_check(res, oa)

    def test_slow_amplifier_flags_violation(self, demo_system, oa):
        system, b = demo_system
        res = simulate(system, b, oa, SolveConfig())
        sluggish = OpAmpModel(slew_rate=1.0)
        assert not slew_check(res, sluggish)

    def test_needs_trace(self, demo_system, oa):
        system, b = demo_system
        res = simulate(system, b, oa, SolveConfig(record_trace=False))
        with pytest.raises(UsageError):
            slew_check(res, oa)
