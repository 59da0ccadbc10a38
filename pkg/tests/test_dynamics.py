"""Pair-dynamics matrix, eigenvalues, Langevin simulation, and statistics."""

import cmath
import math

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from magpo import presets
from magpo.dynamics import (BelowThresholdError, SystemParams,
                            analytic_eigenvalues, build_matrix_m, fit_fp,
                            fp_mode, fp_steady_distribution,
                            max_stable_step, mode_splitting,
                            pair_correlation_ss, phase_diffusion,
                            saturation_number, simulate_pair)
from magpo.units import TWO_PI


def equal_loss_params(kappa=2e8, coupling=4e8, drive=5e8, nonlin=50.0,
                      n_th=1e3):
    return SystemParams(coupling=coupling, magnon_loss=kappa,
                        cavity_loss=kappa, nonlinearity=nonlin, drive=drive,
                        thermal_occupation=n_th)


def match_eigenvalues(lam_num, lam_ana):
    cost = np.abs(lam_num[:, None] - lam_ana[None, :])
    rows, cols = linear_sum_assignment(cost)
    return cost[rows, cols].max()


class TestMatrix:
    def test_uncoupled_diagonal(self):
        p = SystemParams(coupling=0.0, magnon_loss=3e8, cavity_loss=5e8,
                         nonlinearity=0.0, drive=0.0, thermal_occupation=0.0)
        m = build_matrix_m(p, 0.0)
        assert np.allclose(m, np.diag([-3e8, -3e8, -5e8, -5e8, -3e8, -3e8]))

    def test_bright_and_dark_eigenvalues_without_drive(self):
        kappa = 2e8
        p = equal_loss_params(kappa=kappa, drive=0.0, nonlin=0.0)
        lam = np.linalg.eigvals(build_matrix_m(p, 0.0))
        g = p.single_mode_coupling
        expected = np.array([-kappa, -kappa,
                             -kappa + 1j * math.sqrt(2) * g,
                             -kappa - 1j * math.sqrt(2) * g,
                             -kappa + 1j * math.sqrt(2) * g,
                             -kappa - 1j * math.sqrt(2) * g])
        assert match_eigenvalues(lam, expected) / kappa < 1e-12

    def test_closed_forms_match_eigensolver(self):
        gen = np.random.default_rng(5)
        worst = 0.0
        for _ in range(200):
            kappa = 10 ** gen.uniform(7, 9)
            p = SystemParams(coupling=10 ** gen.uniform(7, 9),
                             magnon_loss=kappa, cavity_loss=kappa,
                             nonlinearity=10 ** gen.uniform(0, 2),
                             drive=10 ** gen.uniform(7, 9),
                             thermal_occupation=1e3)
            n = 10 ** gen.uniform(3, 7)
            lam_num = np.linalg.eigvals(build_matrix_m(p, n))
            lam_ana = analytic_eigenvalues(p, n)
            err = match_eigenvalues(lam_num, lam_ana) / np.abs(lam_ana).max()
            worst = max(worst, err)
        assert worst < 1e-9

    def test_dark_modes_have_no_cavity_weight(self):
        p = equal_loss_params()
        n = 1e5
        w, v = np.linalg.eig(build_matrix_m(p, n))
        dark = analytic_eigenvalues(p, n)[:2]
        for target in dark:
            idx = np.argmin(np.abs(w - target))
            vec = v[:, idx] / np.max(np.abs(v[:, idx]))
            assert abs(vec[2]) < 1e-12 and abs(vec[3]) < 1e-12

    def test_threshold_eigenvalue_touches_zero(self):
        kappa = 2e8
        p = equal_loss_params(kappa=kappa, drive=2 * kappa)
        lam = analytic_eigenvalues(p, 0.0)
        assert max(l.real for l in lam[2:]) == pytest.approx(0.0, abs=1e-6)
        # hybridized (bright) modes decay below their threshold ...
        below = analytic_eigenvalues(p.with_drive(1.9 * kappa), 0.0)
        assert all(l.real < 0 for l in below[2:])
        # ... while every mode, including the unhybridized dark pair with
        # its lower instability point, decays for drive < kappa
        low = analytic_eigenvalues(p.with_drive(0.9 * kappa), 0.0)
        assert all(l.real < 0 for l in low)

    def test_saturated_bright_modes_purely_imaginary(self):
        p = equal_loss_params()
        n_sat = saturation_number(p)
        lam = analytic_eigenvalues(p, n_sat)
        bright = sorted(lam[2:], key=lambda z: -z.real)[:2]
        split = mode_splitting(p.coupling, p.mean_loss)
        for lam_i in bright:
            assert abs(lam_i.real) < 1e-6 * abs(p.mean_loss)
            assert abs(abs(lam_i.imag) - split) / split < 1e-9

    def test_unequal_loss_warning(self):
        p = SystemParams(coupling=4e8, magnon_loss=1e8, cavity_loss=2e8,
                         nonlinearity=1.0, drive=0.0, thermal_occupation=0.0)
        with pytest.warns(UserWarning, match="20%"):
            analytic_eigenvalues(p, 0.0)


class TestSaturation:
    def test_zero_exactly_at_threshold(self):
        p = equal_loss_params(drive=2 * 2e8)
        assert saturation_number(p) == 0.0

    def test_reference_population(self, reference_params):
        assert saturation_number(reference_params) \
            == pytest.approx(3.835e6, rel=2e-3)

    def test_scaling_invariance(self):
        p = equal_loss_params()
        doubled = SystemParams(coupling=p.coupling,
                               magnon_loss=2 * p.magnon_loss,
                               cavity_loss=2 * p.cavity_loss,
                               nonlinearity=2 * p.nonlinearity,
                               drive=2 * p.drive,
                               thermal_occupation=p.thermal_occupation)
        assert saturation_number(doubled) \
            == pytest.approx(saturation_number(p), rel=1e-12)

    def test_below_threshold_raises(self):
        p = equal_loss_params(drive=1e8)
        with pytest.raises(BelowThresholdError):
            saturation_number(p)


class TestModeSplitting:
    def test_degenerate_cases(self):
        assert mode_splitting(1e8, 1e8) == 0.0
        assert mode_splitting(5e7, 1e8) == 0.0

    def test_device_peak_pair(self):
        # coupling back-solved from the 3.3532 / 3.3548 GHz output pair
        delta = TWO_PI * 0.8e6
        kappa = TWO_PI * 70.0e6
        coupling = math.sqrt(delta ** 2 + kappa ** 2)
        assert coupling / TWO_PI == pytest.approx(70.0046e6, rel=1e-5)
        assert mode_splitting(coupling, kappa) == pytest.approx(delta)


class TestPairCorrelation:
    def test_weak_nonlinearity_phase(self):
        p = equal_loss_params(nonlin=1e-6)
        val = pair_correlation_ss(p, 10.0)
        assert cmath.phase(val) == pytest.approx(-math.pi / 2, abs=1e-6)

    def test_drive_sign_flip_shifts_phase_by_pi(self):
        p = equal_loss_params()
        a = pair_correlation_ss(p, 1e5)
        b = pair_correlation_ss(p.with_drive(-p.drive), 1e5)
        shift = abs(cmath.phase(a / b))
        assert shift == pytest.approx(math.pi, abs=1e-12)

    def test_magnitude_at_saturation_equals_population(self):
        p = equal_loss_params()
        n = saturation_number(p)
        mag = abs(pair_correlation_ss(p, n))
        assert mag == pytest.approx(n * (2 * n + 1) / (2 * n), rel=1e-12)
        assert mag >= n

    def test_below_threshold_raises(self):
        with pytest.raises(BelowThresholdError):
            pair_correlation_ss(equal_loss_params(drive=1e8))

    def test_ensemble_average_matches_closed_form(self, reference_params):
        p = reference_params
        dt = max_stable_step(p)
        run = simulate_pair(p, dt, 2.5e-5, seed=500, trajectories=512,
                            store_every=500, initial="steady")
        pair = run.vplus[:, -1] * run.vminus[:, -1]
        n_mean = float(run.occupation("pair")[:, -1].mean())
        pred = pair_correlation_ss(p, n_mean)
        assert abs(pair.mean()) == pytest.approx(abs(pred), rel=0.03)
        assert cmath.phase(complex(pair.mean())) \
            == pytest.approx(cmath.phase(pred), abs=0.05)
        assert abs(pred) >= n_mean  # coherent part dominates


class TestPhaseDiffusion:
    def test_device_linewidth_and_coherence_time(self, reference_params):
        n = saturation_number(reference_params)
        d_hz, tau = phase_diffusion(reference_params, n)
        assert d_hz == pytest.approx(8.36e3, rel=5e-3)
        assert tau == pytest.approx(0.120e-3, rel=5e-3)

    def test_coherence_time_quadruples_with_population(self, reference_params):
        n = saturation_number(reference_params)
        _, tau1 = phase_diffusion(reference_params, n)
        _, tau4 = phase_diffusion(reference_params, 4 * n)
        assert tau4 == pytest.approx(4 * tau1, rel=1e-12)

    def test_requires_positive_population(self, reference_params):
        with pytest.raises(ValueError):
            phase_diffusion(reference_params, 0.0)


class TestFokkerPlanck:
    def test_normalization_and_peak(self):
        scale, excess = presets.RADIUS_SCALE, presets.PUMP_EXCESS
        grid = np.linspace(0.0, 1.2e7, 30000)
        dens = fp_steady_distribution(scale, excess, grid)
        assert np.trapezoid(dens, grid) == pytest.approx(1.0, rel=1e-9)
        peak = grid[np.argmax(dens)]
        assert peak == pytest.approx(3.835e6, rel=2e-3)
        assert peak == pytest.approx(fp_mode(scale, excess), rel=1e-3)

    def test_subthreshold_monotone_decreasing(self):
        grid = np.linspace(0.0, 1e7, 5000)
        dens = fp_steady_distribution(presets.RADIUS_SCALE, -2.0, grid)
        assert np.all(np.diff(dens) <= 0)

    def test_fit_round_trip_on_synthetic_samples(self):
        scale, excess = 8e-4, 5.0
        grid = np.linspace(0.0, 1.5e7, 40000)
        dens = fp_steady_distribution(scale, excess, grid)
        cdf = np.cumsum(dens)
        cdf /= cdf[-1]
        gen = np.random.default_rng(8)
        samples = np.interp(gen.uniform(size=20000), cdf, grid)
        fit_scale, fit_excess = fit_fp(samples)
        assert fit_scale == pytest.approx(scale, rel=0.05)
        assert fit_excess == pytest.approx(excess, rel=0.15)

    def test_rejects_bad_grid(self):
        with pytest.raises(ValueError):
            fp_steady_distribution(1e-3, 1.0, np.array([1.0]))
        with pytest.raises(ValueError):
            fp_steady_distribution(-1.0, 1.0, np.linspace(0, 1, 10))


class TestSimulatePair:
    def test_thermal_equilibrium_without_drive(self, reference_params):
        p = reference_params.with_drive(0.0)
        dt = max_stable_step(p)
        run = simulate_pair(p, dt, 2.5e-6, seed=7, trajectories=128,
                            store_every=25)
        n = run.occupation("pair")
        tail = n[:, n.shape[1] // 2:]
        assert tail.mean() == pytest.approx(p.thermal_occupation, rel=0.05)

    def test_subthreshold_parametric_amplification(self, reference_params):
        # <n> = n_th / (1 - (drive/2 kappa)^2) below threshold
        p = reference_params.with_drive(reference_params.mean_loss)
        dt = max_stable_step(p)
        run = simulate_pair(p, dt, 2.5e-6, seed=8, trajectories=128,
                            store_every=25)
        n = run.occupation("pair")
        tail = n[:, n.shape[1] // 2:]
        expected = p.thermal_occupation / (1 - 0.25)
        assert tail.mean() == pytest.approx(expected, rel=0.05)

    def test_relaxes_to_saturation_above_threshold(self, reference_params):
        p = reference_params.with_drive(2.5 * reference_params.mean_loss)
        dt = max_stable_step(p)
        run = simulate_pair(p, dt, 3e-6, seed=9, trajectories=64,
                            store_every=100)
        n = run.occupation("pair")
        tail = n[:, 2 * n.shape[1] // 3:]
        assert tail.mean() == pytest.approx(saturation_number(p), rel=0.05)

    def test_threshold_separates_decay_from_growth(self, reference_params):
        base = reference_params
        dt = max_stable_step(base.with_drive(2.4 * base.mean_loss))
        lo = simulate_pair(base.with_drive(1.8 * base.mean_loss), dt, 1e-6,
                           seed=10, trajectories=32, store_every=50)
        hi = simulate_pair(base.with_drive(2.4 * base.mean_loss), dt, 1e-6,
                           seed=10, trajectories=32, store_every=50)
        n_lo = lo.occupation("pair")[:, -1].mean()
        n_hi = hi.occupation("pair")[:, -1].mean()
        assert n_lo < 20 * base.thermal_occupation
        assert n_hi > 100 * base.thermal_occupation

    def test_phase_sum_locks_and_difference_uniform(self, steady_ensemble):
        from magpo.stats import rayleigh_test
        phi1, phi2 = steady_ensemble.phases()
        s = np.mod(phi1 + phi2 + math.pi, 2 * math.pi) - math.pi
        z = np.exp(1j * s)
        r = abs(z.mean())
        circ_std = math.sqrt(-2 * math.log(r))
        assert circ_std < 0.2
        assert abs(np.angle(z.mean())) < 0.05  # calibrated lock sits at zero
        diff = phi1[:, -1] - phi2[:, -1]
        assert rayleigh_test(diff) > 0.01

    def test_deterministic_and_extensible(self, reference_params):
        p = reference_params
        dt = max_stable_step(p)
        a = simulate_pair(p, dt, 3e-7, seed=3, trajectories=2, store_every=10)
        b = simulate_pair(p, dt, 3e-7, seed=3, trajectories=4, store_every=10)
        assert np.array_equal(a.vplus, b.vplus[:2])
        assert np.array_equal(a.vminus, b.vminus[:2])
        c = simulate_pair(p, dt, 3e-7, seed=4, trajectories=2, store_every=10)
        assert not np.allclose(a.vplus, c.vplus)

    def test_step_guard_rejects_large_step(self, reference_params):
        dt = max_stable_step(reference_params)
        with pytest.raises(ValueError, match="stability guard"):
            simulate_pair(reference_params, 3 * dt, 1e-6, seed=1)

    def test_non_finite_state_names_step(self, reference_params):
        # an absurd warm start overflows within the first chunk
        p = reference_params
        dt = max_stable_step(p)
        run = simulate_pair(p, dt, 5e-9, seed=1, trajectories=1)
        big = SystemParams(coupling=p.coupling, magnon_loss=p.magnon_loss,
                           cavity_loss=p.cavity_loss,
                           nonlinearity=1e280, drive=p.drive,
                           thermal_occupation=p.thermal_occupation,
                           mean_loss=p.mean_loss)
        with pytest.raises(FloatingPointError, match="step"):
            step = max_stable_step(big, n_expected=1e-270)
            simulate_pair(big, step, 1000 * step, seed=1, initial="steady",
                          n_expected=1e-270)

    def test_waveform_export_round_trip(self, reference_params, tmp_path):
        from magpo.waveio import read_waveform, write_waveform
        p = reference_params
        dt = max_stable_step(p)
        run = simulate_pair(p, dt, 1e-6, seed=12, trajectories=1,
                            store_every=100, initial="steady")
        sig, idl = run.to_waveforms(0)
        delta_hz = p.half_splitting / TWO_PI
        assert sig.center_freq == pytest.approx(3.354e9 - delta_hz, rel=1e-9)
        assert idl.center_freq == pytest.approx(3.354e9 + delta_hz, rel=1e-9)
        write_waveform(tmp_path / "s.magw", sig)
        assert np.array_equal(read_waveform(tmp_path / "s.magw").samples,
                              sig.samples)
