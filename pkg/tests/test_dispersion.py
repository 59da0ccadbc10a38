"""Magnon dispersion against independent high-precision evaluation."""

import math

import numpy as np
import pytest
from mpmath import mp

from magpo.dispersion import (MaterialFilm, ellipticity, find_k_for_frequency,
                              kittel_frequency, magnon_frequency, mode)

FILM = MaterialFilm(thickness=3e-6, field=595.0, angle=math.radians(38.0))


def mp_band(film, k, n=0):
    """Independent arbitrary-precision evaluation of the band formula."""
    mp.dps = 40
    two_pi = 2 * mp.pi
    w_h = two_pi * film.gamma * film.field
    w_m = two_pi * film.gamma * film.four_pi_ms
    lam2 = mp.mpf(film.exchange) * mp.mpf(1e-4) / film.four_pi_ms
    k = mp.mpf(k)
    t = mp.mpf(film.thickness)
    k_n2 = k ** 2 + (n * mp.pi / t) ** 2
    if k == 0:
        p = mp.mpf(0)
    else:
        kt = k * t
        bracket = (1 - (-1) ** n * mp.e ** (-kt)) / kt
        delta = 1 if n == 0 else 0
        p = k ** 2 / k_n2 - (k ** 2 / k_n2) ** 2 * 2 * bracket / (1 + delta)
    exch = w_h + w_m * lam2 * k_n2
    s2t = mp.sin(film.polar) ** 2
    s2p, c2p = mp.sin(film.angle) ** 2, mp.cos(film.angle) ** 2
    f_nn = p + s2t * (1 - p * (1 + c2p) + (w_m / exch) * p * (1 - p) * s2p)
    return float(mp.sqrt(exch * (exch + w_m * f_nn)))


class TestMagnonFrequency:
    def test_kittel_limit_high_accuracy(self):
        for h in np.linspace(100.0, 2000.0, 25):
            film = FILM.with_field(float(h))
            w = magnon_frequency(film, 0.0, 0)
            ref = kittel_frequency(film)
            assert abs(w - ref) / ref < 1e-9

    def test_reference_point_near_3p31_ghz(self):
        f = magnon_frequency(FILM, 0.0, 0) / (2 * math.pi)
        assert f == pytest.approx(3.31e9, rel=2e-3)

    def test_matches_high_precision_oracle_over_band(self):
        film = FILM.with_field(600.0)
        for k in np.linspace(0.0, 1e6, 41):
            w = magnon_frequency(film, float(k), 0)
            assert w == pytest.approx(mp_band(film, float(k)), rel=1e-10)

    def test_band_shape_dip_then_exchange_rise(self):
        # dipolar regime is non-monotonic; exchange dominates at large k
        film = FILM.with_field(600.0)
        ks = np.linspace(0.0, 1e6, 200)
        w = np.array([magnon_frequency(film, float(k)) for k in ks])
        assert w.max() > w[0]          # initial rise at this angle
        assert w.min() < w[0]          # dipolar dip below the uniform mode
        w_exch = magnon_frequency(film, 3e8, 0)
        assert w_exch > 10 * w[0]      # exchange rise

    def test_series_switchover_continuity(self):
        t = FILM.thickness
        k_cut = 1e-6 / t
        below = magnon_frequency(FILM, k_cut * (1 - 1e-9), 0)
        above = magnon_frequency(FILM, k_cut * (1 + 1e-9), 0)
        assert abs(below - above) / above < 1e-9

    def test_higher_thickness_index_evaluates(self):
        # thickness quantization adds a small exchange shift at k = 0
        assert magnon_frequency(FILM, 0.0, 1) > magnon_frequency(FILM, 0.0, 0)

    def test_rejects_negative_inputs(self):
        with pytest.raises(ValueError):
            magnon_frequency(FILM, -1.0, 0)
        with pytest.raises(ValueError):
            magnon_frequency(FILM, 1.0, -1)

    def test_rejects_out_of_plane_polar(self):
        with pytest.raises(ValueError, match="in-plane"):
            MaterialFilm(thickness=3e-6, polar=0.3)


class TestEllipticity:
    def test_hand_value_at_reference(self):
        rho, e = ellipticity(FILM, 0.0)
        expected = 1750.0 * math.cos(math.radians(38.0)) ** 2 / (595.0 + 1750.0)
        assert rho == pytest.approx(expected, rel=1e-12)
        assert rho == pytest.approx(0.463, abs=5e-4)

    def test_circular_at_perpendicular_angle(self):
        film = MaterialFilm(thickness=3e-6, field=595.0, angle=math.pi / 2)
        rho, e = ellipticity(film, 0.0)
        assert rho == pytest.approx(0.0, abs=1e-30)
        assert e == 1.0

    def test_exchange_limit_circular(self):
        rho, _ = ellipticity(FILM, 1e10)
        assert rho < 1e-4

    def test_identity_rho_plus_e_squared(self):
        for k in [0.0, 1e4, 1e6, 1e8]:
            rho, e = ellipticity(FILM, k)
            assert rho + e * e == pytest.approx(1.0, abs=1e-15)

    def test_decreasing_in_k_and_field(self):
        rhos = [ellipticity(FILM, k)[0] for k in np.linspace(0, 1e8, 20)]
        assert all(a >= b for a, b in zip(rhos, rhos[1:]))
        lo = ellipticity(FILM.with_field(400.0), 0.0)[0]
        hi = ellipticity(FILM.with_field(800.0), 0.0)[0]
        assert hi < lo

    def test_mode_bundles_frequency_and_ellipticity(self):
        m = mode(FILM, 2e5)
        assert m.frequency == magnon_frequency(FILM, 2e5)
        assert m.ellipticity == ellipticity(FILM, 2e5)[0]


class TestFindK:
    def test_exact_uniform_mode_target(self):
        target = magnon_frequency(FILM, 0.0, 0)
        roots = find_k_for_frequency(FILM, target, bracket=(0.0, 1e6))
        assert roots and roots[0] == pytest.approx(0.0, abs=1e-4)

    def test_below_band_minimum_empty(self):
        w_min = 0.5 * magnon_frequency(FILM, 0.0, 0)
        assert find_k_for_frequency(FILM, w_min, bracket=(0.0, 1e6)) == []

    def test_round_trip_identity(self):
        film = FILM.with_field(600.0)
        target = magnon_frequency(film, 3.1e5, 0)
        roots = find_k_for_frequency(film, target, bracket=(0.0, 1e6))
        assert any(abs(magnon_frequency(film, k, 0) - target) / target < 1e-8
                   for k in roots)

    def test_crossing_k_decreases_with_field(self):
        target = 2 * math.pi * 3.354e9
        crossings = []
        for h in [575.0, 585.0, 595.0, 605.0]:
            roots = find_k_for_frequency(FILM.with_field(h), target,
                                         bracket=(0.0, 1e8))
            assert roots, f"no crossing at {h} Oe"
            crossings.append(roots[0])
        assert all(a > b for a, b in zip(crossings, crossings[1:]))

    def test_dense_scan_oracle_agrees(self):
        # brute-force band scan locates the same lowest crossing
        film = FILM.with_field(595.0)
        target = 2 * math.pi * 3.354e9
        ks = np.linspace(0.0, 1e6, 2001)
        w = np.array([magnon_frequency(film, float(k)) for k in ks])
        sign = np.sign(w - target)
        idx = np.nonzero(np.diff(sign))[0][0]
        root = find_k_for_frequency(film, target, bracket=(0.0, 1e6))[0]
        assert ks[idx] <= root <= ks[idx + 1]

    def test_rejects_bad_target_and_bracket(self):
        with pytest.raises(ValueError):
            find_k_for_frequency(FILM, -1.0)
        with pytest.raises(ValueError):
            find_k_for_frequency(FILM, 1e9, bracket=(5.0, 1.0))
