"""Envelopes, propagation, diagnostics, and the lab-frame cross-check."""

import math

import numpy as np
import pytest

from fockgen import (
    ModelParams,
    PulseSchedule,
    SemiclassicalParams,
    ValidationError,
    adiabaticity_metric,
    basis_state,
    default_window,
    envelope,
    flat_index,
    ground_state,
    propagate,
    propagate_semiclassical,
    rwa_ratio,
    truncation_check,
)

PARAMS = ModelParams.symmetric(delta=1.0, n_max=7)


def short_schedule(g_max=0.9, omega_max=1.4, t_int=8.0, tau=6.0):
    return PulseSchedule(g_max=g_max, omega_max=omega_max, t_int=t_int, tau=tau)


class TestPulseSchedule:
    def test_default_window_keeps_tails_below_limit(self):
        s = PulseSchedule(g_max=1.0, omega_max=1.0, t_int=66.0, tau=57.0)
        g0, w0 = envelope(s, s.t_start)
        g1, w1 = envelope(s, s.t_end)
        assert max(g0, w0, g1, w1) < 1e-6

    def test_clipping_window_rejected(self):
        with pytest.raises(ValidationError):
            PulseSchedule(g_max=1.0, omega_max=1.0, t_int=66.0, tau=57.0,
                          t_start=-66.0, t_end=123.0)

    def test_nonpositive_width_rejected(self):
        with pytest.raises(ValidationError):
            PulseSchedule(g_max=1.0, omega_max=1.0, t_int=0.0, tau=5.0)

    def test_sigma_matches_half_maximum_definition(self):
        s = PulseSchedule(g_max=1.0, omega_max=1.0, t_int=66.0, tau=57.0)
        assert s.sigma == pytest.approx(39.6385, abs=1e-4)
        assert math.exp(-((33.0 / s.sigma) ** 2)) == pytest.approx(0.5, abs=1e-14)


class TestEnvelope:
    def setup_method(self):
        self.schedule = PulseSchedule(g_max=0.8, omega_max=1.3, t_int=66.0, tau=57.0)

    def test_cavity_peak_at_time_zero(self):
        g, _ = envelope(self.schedule, 0.0)
        assert g == self.schedule.g_max

    def test_half_maximum_at_half_width(self):
        g, _ = envelope(self.schedule, self.schedule.t_int / 2.0)
        assert g == pytest.approx(self.schedule.g_max / 2.0, rel=1e-12)

    def test_drive_peaks_after_the_delay(self):
        _, w = envelope(self.schedule, self.schedule.tau)
        assert w == self.schedule.omega_max

    def test_vectorized_evaluation(self):
        t = np.linspace(self.schedule.t_start, self.schedule.t_end, 11)
        g, w = envelope(self.schedule, t)
        assert g.shape == w.shape == t.shape
        assert g.max() <= self.schedule.g_max


class TestPropagate:
    def test_zero_amplitudes_leave_populations_untouched(self):
        schedule = short_schedule(g_max=0.0, omega_max=0.0)
        initial = (basis_state(PARAMS.n_max, "-", 0) + basis_state(PARAMS.n_max, "+", 2)) / math.sqrt(2)
        record = propagate(PARAMS, schedule, initial=initial, sampling=50)
        assert np.abs(record.populations - record.populations[0]).max() < 1e-9
        assert record.final_populations[flat_index("+", 2)] == pytest.approx(0.5, abs=1e-9)

    def test_norm_conserved_and_populations_sum_to_one(self):
        record = propagate(PARAMS, short_schedule(), sampling=200)
        assert record.norm_drift.max() < 1e-6
        assert np.abs(record.populations.sum(axis=1) - 1.0).max() < 1e-8

    def test_tolerance_halving_changes_final_populations_below_1e6(self):
        schedule = short_schedule()
        a = propagate(PARAMS, schedule, sampling=2, rtol=1e-9, atol=1e-11)
        b = propagate(PARAMS, schedule, sampling=2, rtol=5e-10, atol=5e-12)
        assert np.abs(a.final_populations - b.final_populations).max() < 1e-6

    def test_sign_flipped_amplitudes_give_identical_populations(self):
        base = propagate(PARAMS, short_schedule(0.9, 1.4), sampling=2)
        flip_g = propagate(PARAMS, short_schedule(-0.9, 1.4), sampling=2)
        flip_w = propagate(PARAMS, short_schedule(0.9, -1.4), sampling=2)
        assert np.abs(base.final_populations - flip_g.final_populations).max() < 1e-10
        assert np.abs(base.final_populations - flip_w.final_populations).max() < 1e-10

    def test_integrator_order_is_nominal(self):
        # fixed steps through max_step with loose tolerances: halving the step
        # should cut the error by about 2^8 for the eighth-order scheme
        schedule = short_schedule()
        reference = propagate(PARAMS, schedule, sampling=2, rtol=1e-12, atol=1e-14)
        errors = []
        for h in (0.2, 0.1):
            from scipy.integrate import solve_ivp

            from fockgen.model import effective_terms

            diag, exchange, atomic = effective_terms(PARAMS)
            sig, tau = schedule.sigma, schedule.tau

            def rhs(t, y):
                g = schedule.g_max * math.exp(-((t / sig) ** 2))
                w = schedule.omega_max * math.exp(-(((t - tau) / sig) ** 2))
                return -1j * (diag * y + g * (exchange @ y) + (0.5 * w) * (atomic @ y))

            sol = solve_ivp(
                rhs,
                (schedule.t_start, schedule.t_end),
                ground_state(PARAMS.n_max),
                method="DOP853",
                rtol=1e-2,
                atol=1e-2,
                max_step=h,
                first_step=h,
            )
            final = np.abs(sol.y[:, -1]) ** 2
            errors.append(np.abs(final - reference.final_populations).max())
        observed_order = math.log2(errors[0] / errors[1])
        assert 6.0 < observed_order < 10.5

    def test_invalid_initial_state_rejected(self):
        with pytest.raises(ValidationError):
            propagate(PARAMS, short_schedule(), initial=np.ones(PARAMS.dim))
        with pytest.raises(ValidationError):
            propagate(PARAMS, short_schedule(), initial=np.zeros(3))

    def test_more_adiabatic_scaling_does_not_hurt(self):
        # stretching width, delay, and window together improves tracking
        base = PulseSchedule(g_max=1.06, omega_max=1.7, t_int=33.0, tau=28.5)
        stretched = PulseSchedule(g_max=1.06, omega_max=1.7, t_int=66.0, tau=57.0)
        p_base = propagate(PARAMS, base, sampling=2).final_populations[flat_index("-", 1)]
        p_stretched = propagate(PARAMS, stretched, sampling=2).final_populations[flat_index("-", 1)]
        assert p_stretched >= p_base - 1e-6


class TestAdiabaticityMetric:
    def test_paper_scale_products(self):
        schedule = PulseSchedule(g_max=1.0, omega_max=1.5, t_int=66.0, tau=57.0)
        report = adiabaticity_metric(PARAMS, schedule)
        assert report.maser_detuning_product == 33.0
        assert report.cavity_detuning_product == 33.0
        assert report.coupling_product == 66.0
        assert report.passed

    def test_vanishing_width_warns(self):
        schedule = PulseSchedule(g_max=1.0, omega_max=1.5, t_int=1e-9, tau=0.0)
        report = adiabaticity_metric(PARAMS, schedule)
        assert report.maser_detuning_product == pytest.approx(0.0, abs=1e-9)
        assert report.coupling_product == pytest.approx(0.0, abs=1e-9)
        assert not report.passed


class TestTruncation:
    def test_zero_amplitudes_give_exactly_zero_difference(self):
        report = truncation_check(PARAMS, short_schedule(0.0, 0.0), sampling=50)
        assert report.max_population_difference == 0.0
        assert report.converged
        assert report.suggested_n_max is None

    def test_overdriven_small_basis_flagged(self):
        params = ModelParams.symmetric(delta=1.0, n_max=2)
        schedule = short_schedule(g_max=5.0, omega_max=1.4)
        report = truncation_check(params, schedule, sampling=50)
        assert not report.converged
        assert report.boundary_population > 1e-8
        assert report.suggested_n_max > params.n_max


class TestSemiclassical:
    def test_zero_amplitudes_leave_populations_constant(self):
        params = ModelParams.symmetric(delta=1.0, n_max=2)
        sc = SemiclassicalParams.from_model(params, omega_m=200.0)
        schedule = short_schedule(0.0, 0.0, t_int=4.0, tau=2.0)
        record = propagate_semiclassical(sc, params, schedule, sampling=20)
        assert np.abs(record.populations - record.populations[0]).max() < 1e-8

    def test_rwa_violation_rejected(self):
        params = ModelParams.symmetric(delta=1.0, n_max=2)
        sc = SemiclassicalParams.from_model(params, omega_m=20.0)
        schedule = short_schedule(g_max=0.5, omega_max=2.0, t_int=4.0, tau=2.0)
        assert rwa_ratio(sc, schedule) > 0.05
        with pytest.warns(UserWarning):
            with pytest.raises(ValidationError):
                propagate_semiclassical(sc, params, schedule, sampling=20)

    def test_matches_reduced_model_on_a_short_pulse_pair(self):
        # cheap version of the full cross-check: small basis, short pulses
        params = ModelParams.symmetric(delta=1.0, n_max=3)
        sc = SemiclassicalParams.from_model(params, omega_m=150.0)
        schedule = short_schedule(g_max=0.9, omega_max=1.3, t_int=10.0, tau=8.0)
        effective = propagate(params, schedule, sampling=2)
        lab = propagate_semiclassical(sc, params, schedule, sampling=2)
        assert np.abs(effective.final_populations - lab.final_populations).max() < 0.02

    def test_inconsistent_frequencies_rejected(self):
        params = ModelParams.symmetric(delta=1.0, n_max=2)
        sc = SemiclassicalParams(omega_m=200.0, omega_c=203.0, omega_0=200.5)
        with pytest.raises(ValidationError):
            propagate_semiclassical(sc, params, short_schedule(0.1, 0.1, 4.0, 2.0))


class TestWindowHelpers:
    def test_default_window_brackets_both_pulses(self):
        t0, t1 = default_window(66.0, 57.0)
        assert t0 < 0 < 57.0 < t1
