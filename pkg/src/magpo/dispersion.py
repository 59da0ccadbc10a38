"""Thin-film magnon dispersion, ellipticity, and inverse lookups.

Implements the dipole-exchange spin-wave spectrum of an extended film with
totally unpinned surface spins,

    w_n^2 = (w_H + w_M lam^2 k_n^2) (w_H + w_M lam^2 k_n^2 + w_M F_nn),

with w_H = 2 pi gamma H, w_M = 2 pi gamma (4 pi M_S), lam^2 = D / (4 pi M_S),
k_n^2 = k^2 + (n pi / t)^2 and the standard F_nn / P_nn form factors.  Only
the n = 0 thickness mode is quantitatively calibrated; higher n evaluate the
same formula but are untested against data.

Units follow the CGS-practical convention of the FMR literature: fields in
oersted, 4 pi M_S in gauss, gamma in Hz/Oe, exchange constant D in Oe cm^2.
Wave numbers are rad/m and returned frequencies rad/s.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

#: Below this value of k*t the film form factor (1 - (-1)^n e^{-kt})/(kt) is
#: evaluated by series expansion; the singularity at kt = 0 is removable.
_SERIES_CUTOFF = 1e-6

#: Standard YIG literature values, used as defaults (overridable).
YIG_4PI_MS_G = 1750.0
YIG_GAMMA_HZ_PER_OE = 2.8e6
YIG_EXCHANGE_OE_CM2 = 5.4e-9

_CM2_TO_M2 = 1e-4


@dataclass(frozen=True)
class MaterialFilm:
    """Magnetic film and static field geometry.

    Attributes
    ----------
    thickness : film thickness t (m)
    four_pi_ms : saturation magnetization expressed as 4 pi M_S (gauss)
    gamma : gyromagnetic ratio (Hz/Oe, ordinary frequency)
    exchange : exchange constant D (Oe cm^2); lam = sqrt(D / 4 pi M_S)
    field : static field magnitude H (Oe)
    angle : in-plane angle phi between wave vector and field (rad)
    polar : polar angle theta (rad); only pi/2 (in-plane) is supported
    """

    thickness: float
    four_pi_ms: float = YIG_4PI_MS_G
    gamma: float = YIG_GAMMA_HZ_PER_OE
    exchange: float = YIG_EXCHANGE_OE_CM2
    field: float = 0.0
    angle: float = 0.0
    polar: float = math.pi / 2

    def __post_init__(self):
        if self.thickness <= 0:
            raise ValueError("film thickness must be positive")
        if self.four_pi_ms <= 0:
            raise ValueError("4 pi M_S must be positive")
        if self.gamma <= 0:
            raise ValueError("gyromagnetic ratio must be positive")
        if self.exchange < 0:
            raise ValueError("exchange constant must be non-negative")
        if abs(self.polar - math.pi / 2) > 1e-12:
            raise ValueError(
                "only in-plane magnetization (polar = pi/2) is supported")

    def with_field(self, field_oe: float) -> "MaterialFilm":
        return MaterialFilm(self.thickness, self.four_pi_ms, self.gamma,
                            self.exchange, field_oe, self.angle, self.polar)

    @property
    def exchange_m2(self) -> float:
        """Exchange constant in Oe m^2."""
        return self.exchange * _CM2_TO_M2


@dataclass(frozen=True)
class MagnonMode:
    """One point of the dispersion with its precession ellipticity."""

    wavenumber: float
    index: int
    frequency: float          # rad/s
    ellipticity: float        # rho_k in [0, 1]
    axis_ratio: float         # e_k, with e_k^2 = 1 - rho_k

    def __post_init__(self):
        if self.frequency < 0:
            raise ValueError("mode frequency must be non-negative")
        if not 0.0 <= self.ellipticity <= 1.0:
            raise ValueError("ellipticity must lie in [0, 1]")


def _film_factor(kt: float, n: int) -> float:
    """(1 - (-1)^n e^{-kt}) / (kt), series-expanded for small kt."""
    if kt < _SERIES_CUTOFF:
        if n % 2 == 0:
            # (1 - e^{-x})/x = 1 - x/2 + x^2/6 - x^3/24 + ...
            return 1.0 - kt / 2.0 + kt * kt / 6.0 - kt ** 3 / 24.0
        if kt == 0.0:
            return math.inf  # cancelled by the k^4/k_n^4 prefactor
        return (1.0 + math.exp(-kt)) / kt
    return (1.0 - (-1.0) ** n * math.exp(-kt)) / kt


def _p_nn(k: float, k_n2: float, t: float, n: int) -> float:
    if k == 0.0:
        return 0.0
    k2 = k * k
    ratio2 = k2 / k_n2
    ratio4 = ratio2 * ratio2
    delta = 1.0 if n == 0 else 0.0
    return ratio2 - ratio4 * 2.0 * _film_factor(k * t, n) / (1.0 + delta)


def magnon_frequency(film: MaterialFilm, k: float, n: int = 0) -> float:
    """Angular frequency of the (k, n) magnon mode in rad/s.

    The k -> 0, n = 0 limit reduces to the uniform-precession (Kittel)
    result 2 pi gamma sqrt(H (H + 4 pi M_S)).
    """
    if k < 0:
        raise ValueError("wave number must be non-negative")
    if n < 0:
        raise ValueError("thickness index must be non-negative")
    two_pi = 2.0 * math.pi
    w_h = two_pi * film.gamma * film.field
    w_m = two_pi * film.gamma * film.four_pi_ms
    lam2 = film.exchange_m2 / film.four_pi_ms
    k_n2 = k * k + (n * math.pi / film.thickness) ** 2
    p = _p_nn(k, k_n2, film.thickness, n) if k_n2 > 0 else 0.0
    exch = w_h + w_m * lam2 * k_n2
    sin2_th = math.sin(film.polar) ** 2
    sin2_phi = math.sin(film.angle) ** 2
    cos2_phi = math.cos(film.angle) ** 2
    f_nn = p + sin2_th * (1.0 - p * (1.0 + cos2_phi)
                          + (w_m / exch) * p * (1.0 - p) * sin2_phi)
    radicand = exch * (exch + w_m * f_nn)
    if radicand < 0:
        raise ValueError(
            f"negative radicand in dispersion: (w_H + w_M lam^2 k_n^2)"
            f"(... + w_M F_nn) = {radicand:g} at k={k:g}, n={n}")
    return math.sqrt(radicand)


def ellipticity(film: MaterialFilm, k: float) -> tuple[float, float]:
    """Precession ellipticity (rho_k, e_k) of the uniform-thickness mode.

    rho_k = 4 pi M_S cos^2(phi) / (H + D k^2 + 4 pi M_S); e_k^2 = 1 - rho_k.
    Circular precession (rho = 0) at phi = pi/2 and in the exchange limit.
    """
    if k < 0:
        raise ValueError("wave number must be non-negative")
    denom = film.field + film.exchange_m2 * k * k + film.four_pi_ms
    rho = film.four_pi_ms * math.cos(film.angle) ** 2 / denom
    rho = min(max(rho, 0.0), 1.0)
    return rho, math.sqrt(1.0 - rho)


def mode(film: MaterialFilm, k: float, n: int = 0) -> MagnonMode:
    rho, e = ellipticity(film, k)
    return MagnonMode(wavenumber=k, index=n,
                      frequency=magnon_frequency(film, k, n),
                      ellipticity=rho, axis_ratio=e)


def kittel_frequency(film: MaterialFilm) -> float:
    """Uniform-mode angular frequency 2 pi gamma sqrt(H (H + 4 pi M_S))."""
    return (2.0 * math.pi * film.gamma
            * math.sqrt(film.field * (film.field + film.four_pi_ms)))


def find_k_for_frequency(film: MaterialFilm, target: float, n: int = 0,
                         bracket: tuple[float, float] = (0.0, 1e8),
                         scan_points: int = 4000) -> list[float]:
    """All wave numbers in `bracket` where the (k, n) branch hits `target`.

    Returns an ascending list, empty when the branch never reaches the
    target inside the bracket.  Roots are located by scanning for sign
    changes of w_n(k) - target and bisecting each to 1e-10 relative.
    """
    if target <= 0:
        raise ValueError("target frequency must be positive")
    lo, hi = bracket
    if not (0 <= lo < hi):
        raise ValueError("bracket must satisfy 0 <= lo < hi")

    def f(k):
        return magnon_frequency(film, k, n) - target

    ks = np.linspace(lo, hi, scan_points)
    vals = np.array([f(k) for k in ks])
    roots = []
    for i in range(len(ks) - 1):
        a, b = vals[i], vals[i + 1]
        if a == 0.0:
            roots.append(ks[i])
        elif a * b < 0:
            roots.append(brentq(f, ks[i], ks[i + 1], rtol=1e-12, xtol=1e-12))
    if vals[-1] == 0.0:
        roots.append(ks[-1])
    # collapse near-duplicates from grid-edge roots
    out = []
    for r in sorted(roots):
        if not out or abs(r - out[-1]) > 1e-10 * max(1.0, abs(out[-1])):
            out.append(r)
    return out
