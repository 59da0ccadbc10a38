"""Width-varying microstrip resonator: standing-wave modes, loaded two-port
transmission, anti-crossing fit, and pump-field estimate.

The resonator is three cascaded line segments (wide l1 | narrow l0 | wide
l2) with open ends.  Its resonance condition

    cot(k l1) + a (cot(k l2) - a tan(k l0)) / (a + tan(k l0) cot(k l2)) = 0,
    a = Z1/Z0,

is solved through the equivalent entire (pole-free) form

    G(k) = a c0 c1 s2 + c1 s0 c2 + a c0 s1 c2 - a^2 s0 s1 s2,

with s_i = sin(k l_i), c_i = cos(k l_i).  G carries the same roots without
the cot/tan poles, so a sign-change scan cannot be fooled by pole crossings
(for a = 1 it reduces exactly to sin(k L), roots k L = m pi).  Resonance
frequencies follow from f = v_eff k / (2 pi).
"""

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq, minimize

from .units import TWO_PI, dbm_to_watts, a_per_m_to_oersted


@dataclass(frozen=True)
class ResonatorGeometry:
    """Three-segment width-varying microstrip with open ends.

    narrow_len (l0), left_len (l1), right_len (l2) in meters; impedance_ratio
    is Z1/Z0 of the narrowed segment; phase_velocity is the effective phase
    velocity (m/s), assumed common to all segments.
    """

    narrow_len: float
    left_len: float
    right_len: float
    impedance_ratio: float
    z0: float = 50.0
    phase_velocity: float = 2.0e8

    def __post_init__(self):
        if min(self.narrow_len, self.left_len, self.right_len) <= 0:
            raise ValueError("all segment lengths must be positive")
        if self.impedance_ratio <= 0:
            raise ValueError("impedance ratio must be positive")
        if self.phase_velocity <= 0:
            raise ValueError("phase velocity must be positive")

    @property
    def total_len(self) -> float:
        return self.narrow_len + self.left_len + self.right_len

    def perturbed(self, **changes) -> "ResonatorGeometry":
        return replace(self, **changes)


#: Geometry tuned so the two lowest modes land at 3.354 and 6.709 GHz
#: (ratio 2 to ~1e-13).  The effective phase velocity 2.013e8 m/s matches
#: an effective permittivity of ~2.2, consistent with a low-loss microwave
#: laminate.
REFERENCE_GEOMETRY = ResonatorGeometry(
    narrow_len=2.0e-3,
    left_len=7.542239270013685e-3,
    right_len=18.057760729986314e-3,
    impedance_ratio=3.0,
    z0=50.0,
    phase_velocity=201302642.09569287,
)


def _entire_condition(k, geom: ResonatorGeometry):
    a = geom.impedance_ratio
    s0, c0 = np.sin(k * geom.narrow_len), np.cos(k * geom.narrow_len)
    s1, c1 = np.sin(k * geom.left_len), np.cos(k * geom.left_len)
    s2, c2 = np.sin(k * geom.right_len), np.cos(k * geom.right_len)
    return a * c0 * c1 * s2 + c1 * s0 * c2 + a * c0 * s1 * c2 - a * a * s0 * s1 * s2


def resonance_wavenumbers(geom: ResonatorGeometry,
                          bracket: tuple[float, float] = (1.0, 400.0),
                          scan_points: int = 20000) -> list[float]:
    """All standing-wave wave numbers in `bracket`, ascending.

    Empty when the scan finds no sign change.  Roots are refined to 1e-10
    relative; k = 0 is never reported (trivial root of the entire form).
    """
    lo, hi = bracket
    if not (0 <= lo < hi):
        raise ValueError("bracket must satisfy 0 <= lo < hi")
    lo = max(lo, 1e-9 / geom.total_len)
    ks = np.linspace(lo, hi, scan_points)
    g = _entire_condition(ks, geom)
    roots = []
    for i in range(len(ks) - 1):
        if g[i] == 0.0:
            roots.append(ks[i])
        elif g[i] * g[i + 1] < 0:
            roots.append(brentq(_entire_condition, ks[i], ks[i + 1],
                                args=(geom,), rtol=1e-14, xtol=1e-14))
    return sorted(roots)


def resonance_frequencies(geom: ResonatorGeometry, n_modes: int = 4) -> list[float]:
    """Frequencies (Hz) of the lowest `n_modes` resonances."""
    hi = (n_modes + 2) * math.pi / geom.total_len * max(1.0, geom.impedance_ratio)
    ks = resonance_wavenumbers(geom, (1e-6, hi))
    return [geom.phase_velocity * k / TWO_PI for k in ks[:n_modes]]


@dataclass(frozen=True)
class LoadedCavityParams:
    """Input-output parameters of a resonator mode loaded with a magnet.

    All rates in rad/s: omega_r resonance, kappa_r total resonator loss,
    kappa_e external (port) coupling, kappa_m magnon loss, g magnon-photon
    coupling.  The magnon frequency follows the Kittel formula
    omega_m(H) = 2 pi gamma sqrt(H (H + 4 pi M_S)).
    """

    omega_r: float
    kappa_r: float
    kappa_e: float
    kappa_m: float
    g: float
    gamma: float = 2.8e6          # Hz/Oe
    four_pi_ms: float = 1750.0    # G

    def __post_init__(self):
        if self.kappa_r < self.kappa_e or self.kappa_e < 0:
            raise ValueError("need kappa_r >= kappa_e >= 0")
        if self.g < 0:
            raise ValueError("coupling must be non-negative")

    def omega_m(self, field_oe: float) -> float:
        return TWO_PI * self.gamma * math.sqrt(field_oe * (field_oe + self.four_pi_ms))


def s21(omega, field_oe, p: LoadedCavityParams):
    """Complex two-port transmission of the loaded cavity.

    s21 = 2 kappa_e / (2i(w - w_r) - kappa_r + 4 g^2 / (2i(w - w_m) - kappa_m)).

    The magnon term is the standard input-output self-energy; the decoupled
    g = 0 limit is a Lorentzian of half-width kappa_r / 2, independent of
    field, and |s21| <= 1 whenever kappa_r >= 2 kappa_e (passive cavity).
    """
    omega = np.asarray(omega, dtype=float)
    wm = p.omega_m(field_oe)
    self_energy = 4.0 * p.g ** 2 / (2j * (omega - wm) - p.kappa_m)
    return 2.0 * p.kappa_e / (2j * (omega - p.omega_r) - p.kappa_r + self_energy)


def s21_map(p: LoadedCavityParams, omegas, fields):
    """|s21| on the (omega, field) grid; rows index omega, columns field."""
    w = np.asarray(omegas, float)[:, None]
    h = np.asarray(fields, float)[None, :]
    wm = TWO_PI * p.gamma * np.sqrt(h * (h + p.four_pi_ms))
    self_energy = 4.0 * p.g ** 2 / (2j * (w - wm) - p.kappa_m)
    return np.abs(2.0 * p.kappa_e / (2j * (w - p.omega_r) - p.kappa_r + self_energy))


class FitError(RuntimeError):
    """Least-squares fit failed to converge; `.best` holds the best-so-far."""

    def __init__(self, message, best):
        super().__init__(message)
        self.best = best


def fit_anticrossing(omegas, fields, mag_map, gamma=2.8e6, four_pi_ms=1750.0,
                     max_iter=20000):
    """Recover LoadedCavityParams from a |s21|(omega, H) map.

    Multi-start Nelder-Mead on (omega_r, kappa_r, kappa_e, kappa_m, g)
    minimizing the summed squared residual of |s21|.  Film constants
    (gamma, 4 pi M_S) are treated as known.  Returns (params, report)
    where report carries the residual norm and a crude curvature-based
    uncertainty per parameter.
    """
    omegas = np.asarray(omegas, float)
    fields = np.asarray(fields, float)
    mag_map = np.asarray(mag_map, float)
    if mag_map.shape != (len(omegas), len(fields)):
        raise ValueError("map shape must be (len(omegas), len(fields))")

    # initial guesses from the map structure
    col_peak = omegas[np.argmax(mag_map, axis=0)]
    w_r0 = float(np.median(col_peak))
    peak_col = mag_map[:, np.argmin(np.abs(col_peak - w_r0))]
    half = peak_col.max() / math.sqrt(2.0)
    above = omegas[peak_col >= half]
    k_r0 = max(float(above[-1] - above[0]), (omegas[1] - omegas[0]))
    k_e0 = 0.5 * k_r0 * min(float(mag_map.max()), 0.99)
    # splitting guess: widest double-peak separation across columns
    g0 = 0.25 * k_r0
    for j in range(len(fields)):
        col = mag_map[:, j]
        pk = [i for i in range(1, len(col) - 1)
              if col[i] >= col[i - 1] and col[i] >= col[i + 1]
              and col[i] > 0.3 * mag_map.max()]
        if len(pk) >= 2:
            g0 = max(g0, float(omegas[pk[-1]] - omegas[pk[0]]) / 2.0)

    span = float(omegas[-1] - omegas[0])

    def unpack(x):
        dw, lkdiff, lke, lkm, lg = x
        k_e = math.exp(lke)
        return LoadedCavityParams(
            omega_r=w_r0 + dw * span, kappa_r=math.exp(lkdiff) + k_e,
            kappa_e=k_e, kappa_m=math.exp(lkm), g=math.exp(lg),
            gamma=gamma, four_pi_ms=four_pi_ms)

    def cost(x):
        try:
            model = s21_map(unpack(x), omegas, fields)
        except (ValueError, OverflowError):
            return 1e30
        return float(np.sum((model - mag_map) ** 2))

    best_x, best_f = None, math.inf
    starts = [
        [0.0, math.log(max(k_r0 - k_e0, 0.1 * k_r0)), math.log(k_e0),
         math.log(k_r0), math.log(max(g_try, 1e-6 * k_r0))]
        for g_try in (g0, 2 * g0, 0.05 * k_r0)
    ]
    n_done = 0
    for x0 in starts:
        res = minimize(cost, x0, method="Nelder-Mead",
                       options={"maxiter": max_iter // (2 * len(starts)),
                                "xatol": 1e-8, "fatol": 1e-16})
        n_done += res.nit
        if res.fun < best_f:
            best_x, best_f = res.x, res.fun
    # polish the winner until improvement stalls
    converged = False
    for _ in range(3):
        res = minimize(cost, best_x, method="Nelder-Mead",
                       options={"maxiter": max_iter // 2,
                                "xatol": 1e-11, "fatol": 1e-22})
        n_done += res.nit
        gain = best_f - res.fun
        if res.fun < best_f:
            best_x, best_f = res.x, res.fun
        if res.success or gain <= 1e-10 * max(best_f, 1e-30):
            converged = True
            break

    params = unpack(best_x)
    uncert = {}
    names = ["omega_r", "kappa_r", "kappa_e", "kappa_m", "g"]
    deriv_scale = [span, 1.0, 1.0, 1.0, 1.0]  # d(param)/dx at the optimum
    for i, name in enumerate(names):
        h = 1e-4
        xp = best_x.copy(); xp[i] += h
        xm = best_x.copy(); xm[i] -= h
        curv = (cost(xp) - 2 * best_f + cost(xm)) / h ** 2
        dx = math.sqrt(2.0 * max(best_f, 1e-30) / max(curv, 1e-300))
        ref = getattr(params, name) if name != "omega_r" else 1.0
        uncert[name] = dx * deriv_scale[i] * (ref if i > 0 else 1.0)
    report = {
        "residual_norm": math.sqrt(best_f),
        "iterations": n_done,
        "uncertainty": uncert,
    }
    if not converged:
        raise FitError(f"anticrossing fit did not converge within "
                       f"{max_iter} iterations (residual {best_f:g})",
                       (params, report))
    return params, report


def quality_factor(omega_r: float, kappa: float) -> float:
    """Loaded quality factor omega_r / kappa (both rad/s)."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    return omega_r / kappa


def pump_field_strength(p_in_watts: float, q: float, z0: float,
                        strip_width: float) -> float:
    """Peak rf field at the strip surface, in oersted.

    h = (1/w) sqrt(Q P_in / Z0) in A/m, converted to Oe.  Scales as the
    square root of power; zero Q gives zero field.
    """
    if p_in_watts < 0 or q < 0:
        raise ValueError("power and Q must be non-negative")
    if z0 <= 0 or strip_width <= 0:
        raise ValueError("impedance and strip width must be positive")
    h_am = math.sqrt(q * p_in_watts / z0) / strip_width
    return a_per_m_to_oersted(h_am)


def pump_field_strength_dbm(p_dbm: float, q: float, z0: float,
                            strip_width: float) -> float:
    return pump_field_strength(dbm_to_watts(p_dbm), q, z0, strip_width)
