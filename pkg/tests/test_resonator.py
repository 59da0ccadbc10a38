"""Resonance condition, loaded transmission, fits, and the pump field."""

import math

import numpy as np
import pytest

from magpo.resonator import (REFERENCE_GEOMETRY, LoadedCavityParams,
                             ResonatorGeometry, _entire_condition,
                             fit_anticrossing, pump_field_strength,
                             pump_field_strength_dbm, quality_factor,
                             resonance_frequencies, resonance_wavenumbers,
                             s21, s21_map)
from magpo.units import TWO_PI

TRUTH = LoadedCavityParams(omega_r=TWO_PI * 3.354e9,
                           kappa_r=TWO_PI * 82.4e6, kappa_e=TWO_PI * 30e6,
                           kappa_m=TWO_PI * 68.8e6, g=TWO_PI * 70.3e6)


class TestResonanceCondition:
    def test_uniform_line_roots_at_multiples_of_pi(self):
        geom = ResonatorGeometry(2e-3, 9e-3, 16.6e-3, impedance_ratio=1.0,
                                 phase_velocity=2e8)
        ks = resonance_wavenumbers(geom, (1.0, 4 * math.pi / geom.total_len))
        for m, k in enumerate(ks, start=1):
            assert k * geom.total_len / math.pi == pytest.approx(m, rel=1e-10)
        freqs = resonance_frequencies(geom, 2)
        assert freqs[1] / freqs[0] == pytest.approx(2.0, rel=1e-9)

    def test_reference_geometry_hits_device_frequencies(self):
        freqs = resonance_frequencies(REFERENCE_GEOMETRY, 2)
        assert abs(freqs[0] - 3.354e9) < 1e6
        assert 1.999 < freqs[1] / freqs[0] < 2.001

    def test_perturbing_left_segment_breaks_doubling(self):
        g0 = REFERENCE_GEOMETRY
        dl = 0.05 * g0.left_len
        geom = g0.perturbed(left_len=g0.left_len + dl,
                            right_len=g0.right_len - dl)
        freqs = resonance_frequencies(geom, 2)
        assert abs(freqs[1] / freqs[0] - 2.0) > 1e-3

    def test_dense_scan_oracle_agrees_with_solver(self):
        geom = REFERENCE_GEOMETRY
        hi = 3 * math.pi / geom.total_len * geom.impedance_ratio
        ks = resonance_wavenumbers(geom, (1.0, hi))
        grid = np.linspace(1.0, hi, 400001)
        vals = _entire_condition(grid, geom)
        brute = grid[:-1][np.sign(vals[:-1]) * np.sign(vals[1:]) < 0]
        assert len(brute) == len(ks)
        for approx, exact in zip(brute, ks):
            assert exact == pytest.approx(approx, abs=hi / 400000 * 1.01)

    def test_empty_bracket_returns_empty(self):
        geom = REFERENCE_GEOMETRY
        assert resonance_wavenumbers(geom, (1.0, 20.0)) == []


class TestS21:
    def test_decoupled_limit_lorentzian_halfwidth(self):
        p = LoadedCavityParams(omega_r=TWO_PI * 3.354e9,
                               kappa_r=TWO_PI * 82.4e6,
                               kappa_e=TWO_PI * 30e6,
                               kappa_m=TWO_PI * 68.8e6, g=0.0)
        peak = abs(s21(p.omega_r, 600.0, p))
        assert peak == pytest.approx(2 * p.kappa_e / p.kappa_r, rel=1e-12)
        half = abs(s21(p.omega_r + p.kappa_r / 2, 600.0, p))
        assert half == pytest.approx(peak / math.sqrt(2.0), rel=1e-12)
        # field independence
        for h in [100.0, 595.0, 1500.0]:
            assert abs(s21(p.omega_r + 1e8, h, p)) \
                == abs(s21(p.omega_r + 1e8, 600.0, p))

    def test_far_detuning_vanishes(self):
        assert abs(s21(TRUTH.omega_r + TWO_PI * 1e12, 595.0, TRUTH)) < 1e-4

    def test_passive_bound(self):
        omegas = TWO_PI * np.linspace(3.0e9, 3.7e9, 301)
        mag = s21_map(TRUTH, omegas, np.linspace(500, 700, 41))
        assert mag.max() <= 1.0 + 1e-9

    def test_anticrossing_minimum_splitting_near_two_g(self):
        omegas = TWO_PI * np.linspace(3.1e9, 3.6e9, 6001)
        splittings = []
        for h in np.linspace(590, 625, 36):
            mag = np.abs(s21(omegas, h, TRUTH))
            peaks = [i for i in range(1, len(mag) - 1)
                     if mag[i] >= mag[i - 1] and mag[i] >= mag[i + 1]
                     and mag[i] > 0.25 * mag.max()]
            if len(peaks) >= 2:
                splittings.append(omegas[peaks[-1]] - omegas[peaks[0]])
        assert splittings
        assert min(splittings) == pytest.approx(2 * TRUTH.g, rel=0.12)


class TestFitAnticrossing:
    omegas = TWO_PI * np.linspace(3.15e9, 3.55e9, 41)
    fields = np.linspace(560, 660, 21)

    def test_noise_free_recovery_exact(self):
        mag = s21_map(TRUTH, self.omegas, self.fields)
        fit, report = fit_anticrossing(self.omegas, self.fields, mag)
        for name in ("omega_r", "kappa_r", "kappa_e", "kappa_m", "g"):
            assert getattr(fit, name) == pytest.approx(
                getattr(TRUTH, name), rel=1e-6)
        assert report["residual_norm"] < 1e-6

    def test_one_percent_noise_recovery_within_3_percent(self):
        gen = np.random.default_rng(42)
        mag = s21_map(TRUTH, self.omegas, self.fields)
        noisy = mag * (1 + 0.01 * gen.standard_normal(mag.shape))
        fit, _ = fit_anticrossing(self.omegas, self.fields, noisy)
        for name in ("g", "kappa_r", "kappa_m"):
            assert getattr(fit, name) == pytest.approx(
                getattr(TRUTH, name), rel=0.03)

    def test_flat_map_gives_zero_g_with_large_uncertainty(self):
        flat_truth = LoadedCavityParams(
            omega_r=TRUTH.omega_r, kappa_r=TRUTH.kappa_r,
            kappa_e=TRUTH.kappa_e, kappa_m=TRUTH.kappa_m, g=0.0)
        mag = s21_map(flat_truth, self.omegas, self.fields)
        fit, report = fit_anticrossing(self.omegas, self.fields, mag)
        assert fit.g < 1e-3 * TRUTH.kappa_r
        assert report["uncertainty"]["g"] > 100 * max(fit.g, 1.0)

    def test_mismatched_map_shape_rejected(self):
        with pytest.raises(ValueError):
            fit_anticrossing(self.omegas, self.fields, np.zeros((3, 3)))


class TestPumpField:
    def test_device_value_near_38_oe(self):
        h = pump_field_strength_dbm(12.0, 46.5, 50.0, 40e-6)
        assert 36.0 < h < 40.0

    def test_square_root_power_scaling(self):
        h1 = pump_field_strength(0.01, 46.5, 50.0, 40e-6)
        h4 = pump_field_strength(0.04, 46.5, 50.0, 40e-6)
        assert h4 == pytest.approx(2 * h1, rel=1e-12)

    def test_zero_q_gives_zero_field(self):
        assert pump_field_strength(0.01, 0.0, 50.0, 40e-6) == 0.0

    def test_rejects_unphysical_inputs(self):
        with pytest.raises(ValueError):
            pump_field_strength(0.01, 46.5, -50.0, 40e-6)
        with pytest.raises(ValueError):
            quality_factor(1e9, 0.0)

    def test_quality_factor(self):
        assert quality_factor(TWO_PI * 6.709e9, TWO_PI * 144.4e6) \
            == pytest.approx(46.46, rel=1e-3)
