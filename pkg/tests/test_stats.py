"""Down-conversion, correlation machinery, phase statistics, calibration."""

import math

import numpy as np
import pytest

from magpo.dynamics import phase_diffusion, saturation_number
from magpo.rngstream import stream
from magpo.stats import (correlation, correlation_report, down_convert,
                         ensemble_correlation, fir_response,
                         fit_coherence_time, phase_stats, rayleigh_test,
                         thermal_calibration, wrap_phase)

FS = 250e6
F0 = 66.6e6


def tone(freq, n=16384, amp=1.0, phase=0.0):
    t = np.arange(n) / FS
    return amp * np.cos(2 * math.pi * freq * t + phase)


class TestDownConvert:
    def test_unit_tone_maps_to_unit_constant(self):
        wf = down_convert(tone(F0), FS, F0, 5e6)
        mid = wf.samples[len(wf.samples) // 4: -len(wf.samples) // 4]
        assert np.max(np.abs(mid - 1.0)) < 1e-3
        assert wf.center_freq == F0

    def test_pair_of_tones_beats(self):
        x = tone(F0 + 0.8e6) + tone(F0 - 0.8e6)
        wf = down_convert(x, FS, F0, 5e6)
        env = np.abs(wf.samples)[40:-40]
        assert env.max() > 1.9 and env.min() < 0.1
        # beat period 1 / 1.6 MHz
        peaks = np.nonzero((env[1:-1] > env[:-2]) & (env[1:-1] > env[2:])
                           & (env[1:-1] > 1.5))[0]
        spacing = np.diff(peaks).mean() / wf.sample_rate
        assert spacing == pytest.approx(1 / 1.6e6, rel=0.05)

    def test_out_of_band_rejection(self):
        resp = fir_response(255, 5e6, FS, [10e6, 15e6])
        assert np.all(20 * np.log10(resp) < -60.0)

    def test_linearity(self):
        a = tone(F0 + 1e6, amp=0.7)
        b = tone(F0 - 2e6, amp=0.4, phase=1.0)
        wa = down_convert(a, FS, F0, 5e6).samples
        wb = down_convert(b, FS, F0, 5e6).samples
        wab = down_convert(a + b, FS, F0, 5e6).samples
        assert np.max(np.abs(wab - wa - wb)) < 1e-10

    def test_alias_preconditions(self):
        with pytest.raises(ValueError, match="Nyquist"):
            down_convert(tone(F0), FS, 0.6 * FS, 5e6)
        with pytest.raises(ValueError, match="bandwidth"):
            down_convert(tone(F0), FS, F0, 2 * F0)


class TestCorrelation:
    def test_self_correlation_unity_and_symmetry(self):
        a = stream(1, 0).standard_normal(4000)
        lags, rho = correlation(a, a, 25)
        assert rho[25] == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(rho, rho[::-1], atol=1e-12)

    def test_anti_correlation(self):
        a = stream(2, 0).standard_normal(4000)
        _, rho = correlation(a, -a, 5)
        assert rho[5] == pytest.approx(-1.0, abs=1e-12)

    def test_cross_symmetry_rho_ab_ba(self):
        gen = stream(3, 0)
        a = gen.standard_normal(3000)
        b = np.roll(a, 3) + 0.1 * gen.standard_normal(3000)
        _, rho_ab = correlation(a, b, 10)
        _, rho_ba = correlation(b, a, 10)
        assert np.allclose(rho_ab, rho_ba[::-1], atol=1e-14)

    def test_zero_variance_rejected(self):
        with pytest.raises(ValueError, match="variance"):
            correlation(np.ones(500), np.ones(500), 5)

    def test_overlap_precondition(self):
        with pytest.raises(ValueError, match="overlap"):
            correlation(np.arange(120.0), np.arange(120.0), 40)

    def test_ensemble_pooling_matches_single(self):
        a = stream(4, 0).standard_normal(5000)
        _, single = correlation(a, a, 10)
        _, pooled = ensemble_correlation([(a, a)], 10)
        assert np.allclose(single, pooled, atol=1e-12)


class TestCoherenceFit:
    def test_exact_exponential_recovery(self):
        tau = 2e-4
        lags = np.linspace(0, 1e-3, 500)
        tau_fit, resid = fit_coherence_time(lags, np.exp(-lags / tau))
        assert tau_fit == pytest.approx(tau, rel=1e-9)
        assert resid < 1e-10

    def test_noisy_recovery_within_ten_percent(self):
        tau = 2e-4
        lags = np.linspace(0, 8e-4, 300)
        gen = stream(5, 0)
        rho = np.exp(-lags / tau) * (1 + 0.05 * gen.standard_normal(300))
        tau_fit, _ = fit_coherence_time(lags, np.abs(rho))
        assert tau_fit == pytest.approx(tau, rel=0.10)

    def test_non_decaying_rejected(self):
        lags = np.linspace(0, 1e-3, 100)
        with pytest.raises(ValueError, match="decay"):
            fit_coherence_time(lags, np.full(100, 0.9))

    def test_simulated_pair_matches_prediction(self, long_run):
        p = long_run.params
        x1 = long_run.vplus.real
        max_lag = int(0.35e-3 * long_run.sample_rate)
        lags, rho = ensemble_correlation([(t, t) for t in x1], max_lag)
        tau_fit, _ = fit_coherence_time(lags / long_run.sample_rate, rho)
        _, tau_pred = phase_diffusion(p, saturation_number(p))
        assert tau_fit == pytest.approx(tau_pred, rel=0.20)

    def test_auto_and_cross_decay_agree(self, long_run):
        """Auto- and cross-correlation coherence times within 25%."""
        x1 = long_run.vplus.real
        x2 = (long_run.vminus
              * np.exp(-1j * long_run.calibration_phase())).real
        max_lag = int(0.35e-3 * long_run.sample_rate)
        lags, auto = ensemble_correlation([(t, t) for t in x1], max_lag)
        _, cross = ensemble_correlation(list(zip(x1, x2)), max_lag)
        tau_auto, _ = fit_coherence_time(lags / long_run.sample_rate, auto)
        tau_cross, _ = fit_coherence_time(lags / long_run.sample_rate,
                                          np.abs(cross))
        assert tau_cross == pytest.approx(tau_auto, rel=0.25)


class TestPhaseStats:
    def test_perfect_anticorrelation_delta_sum(self):
        gen = stream(6, 0)
        phi1 = gen.uniform(0, 2 * math.pi, 20000)
        ps = phase_stats(phi1, -phi1)
        center = len(ps.sum_hist) // 2
        assert ps.sum_hist[center] == 20000 or \
            ps.sum_hist.max() == ps.sum_hist.sum()
        assert ps.sum_circular_std == pytest.approx(0.0, abs=1e-9)
        assert ps.diff_uniform_p > 0.01

    def test_independent_phases_uniform(self):
        gen = stream(7, 0)
        phi1 = gen.uniform(0, 2 * math.pi, 20000)
        phi2 = gen.uniform(0, 2 * math.pi, 20000)
        ps = phase_stats(phi1, phi2)
        assert ps.diff_uniform_p > 0.01
        assert rayleigh_test(wrap_phase(phi1 + phi2)) > 0.01

    def test_simulated_pair_sum_locked_difference_free(self, steady_ensemble):
        phi1, phi2 = steady_ensemble.phases()
        # one sample per trajectory: the Rayleigh test needs independent
        # draws, and the difference decorrelates only across trajectories
        ps = phase_stats(phi1[:, -1], phi2[:, -1])
        assert ps.sum_circular_std < 0.2
        assert ps.diff_uniform_p > 0.01
        # pooled sums still lock tightly and reject uniformity outright
        s = wrap_phase(phi1.ravel() + phi2.ravel())
        assert rayleigh_test(s) < 1e-10
        assert phase_stats(phi1.ravel(), phi2.ravel()).sum_circular_std < 0.2

    def test_rayleigh_needs_enough_samples(self):
        with pytest.raises(ValueError):
            rayleigh_test(np.zeros(5))


class TestThermalCalibration:
    def test_room_temperature_occupation(self):
        gen = stream(8, 0)
        v = 1e-5 * (gen.standard_normal(1000) + 1j * gen.standard_normal(1000))
        _, n_th = thermal_calibration(v, 300.0, 3.354e9)
        assert n_th == pytest.approx(1.86e3, rel=2e-3)

    def test_known_scale_recovery(self):
        s_true = 3.2e-5
        n_th = 1863.7
        gen = stream(9, 0)
        v = s_true * math.sqrt(n_th / 2) * (gen.standard_normal(200000)
                                            + 1j * gen.standard_normal(200000))
        s, _ = thermal_calibration(v, 300.0, 3.3532e9)
        assert s == pytest.approx(s_true, rel=0.01)

    def test_scaling_invariance(self):
        gen = stream(10, 0)
        v = gen.standard_normal(5000) + 1j * gen.standard_normal(5000)
        s1, n1 = thermal_calibration(v, 300.0, 3.354e9)
        s2, n2 = thermal_calibration(3.7 * v, 300.0, 3.354e9)
        assert s2 == pytest.approx(3.7 * s1, rel=1e-12)
        assert n2 == n1

    def test_degenerate_samples_rejected(self):
        with pytest.raises(ValueError):
            thermal_calibration(np.zeros(100, complex), 300.0, 3.354e9)


class TestCorrelationReport:
    def test_simulated_quadrature_matrix(self, steady_ensemble):
        x1, p1, x2, p2 = steady_ensemble.quadratures()
        report = correlation_report(x1, p1, x2, p2,
                                    steady_ensemble.sample_rate, max_lag=10)
        m = report.matrix
        assert np.allclose(m, m.T, atol=1e-12)
        assert np.allclose(np.diag(m), 1.0)
        assert np.all(np.abs(m) <= 1 + 1e-12)
        labels = list(report.labels)
        ix1, ix2 = labels.index("X1"), labels.index("X2")
        ip1, ip2 = labels.index("P1"), labels.index("P2")
        assert m[ix1, ix2] > 0.9
        assert m[ip1, ip2] < -0.9
        assert m[ix1, ix2] == pytest.approx(-m[ip1, ip2], abs=0.05)
        assert abs(m[ix1, ip1]) < 0.15  # phases are free: X1, P1 uncorrelated

    def test_report_serializes(self, steady_ensemble):
        x1, p1, x2, p2 = steady_ensemble.quadratures()
        report = correlation_report(x1, p1, x2, p2,
                                    steady_ensemble.sample_rate, max_lag=5)
        d = report.to_dict()
        assert set(d) == {"labels", "matrix", "lag_seconds", "curves",
                          "coherence_times"}
