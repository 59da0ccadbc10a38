"""Wave-vector dependence of the magnon-photon coupling and the parametric
pumping efficiency, from a quasi-static microstrip field model.

The rf field of the narrowed strip is modeled as a finite-width uniform
surface-current sheet (total current I along the strip axis x) plus its
ground-plane image.  For a sheet of width w centered at y = 0 in the z = 0
plane the field per unit current is

    h_y(y, z) = -[atan((y + w/2)/z) - atan((y - w/2)/z)] / (2 pi w)
    h_z(y, z) =  ln(((y + w/2)^2 + z^2) / ((y - w/2)^2 + z^2)) / (4 pi w)

A uniform sheet violates the conductor boundary condition (the normal rf
field must vanish at the metal), so by default the out-of-plane component
is zeroed over the strip footprint where the film rests on the conductor;
the in-plane component, which carries the coupling, is kept as is.

The overlap of this field with a +-k magnon pair gives the linear coupling
(plane-wave overlap, integrand ~ [h_y' - i e_k h_z] e^{-iky}) and the
parallel-pumping efficiency (standing-wave overlap, integrand
~ rho_k h_x' cos^2(k y + delta)).  The pumped pair grows at the standing
wave offset delta that maximizes the overlap, which turns the cos^2 term
into (|S_0| + |S_2k|)/2 with S_q the q-transform of the parallel field;
the efficiency therefore stays between half and one times its k = 0 value.
Only normalized curves are produced; the absolute scale is anchored to the
measured k = 0 coupling by callers.

Wave vectors are taken along y (perpendicular to the strip); the static
field lies in plane at angle phi from k, so h_x' = h_y cos(phi) and
h_y' = h_y sin(phi).
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .dispersion import MaterialFilm, ellipticity
from .units import TWO_PI, ordinary_rate

#: Device defaults: 40 um strip on a 0.41 mm dielectric, 3 um film.
STRIP_WIDTH = 40e-6
GROUND_DISTANCE = 0.41e-3
FILM_THICKNESS = 3e-6


@dataclass(frozen=True)
class FieldMap:
    """Discretized rf field over a (y, z) cross-section, per unit current.

    y and z are midpoint grids (m); h_y and h_z have shape (nz, ny) and
    units 1/m (A/m per ampere of strip current).
    """

    y: np.ndarray
    z: np.ndarray
    h_y: np.ndarray
    h_z: np.ndarray
    strip_width: float
    ground_distance: float | None = None

    def __post_init__(self):
        if self.h_y.shape != (len(self.z), len(self.y)):
            raise ValueError("field arrays must have shape (nz, ny)")
        if not (np.all(np.isfinite(self.h_y)) and np.all(np.isfinite(self.h_z))):
            raise ValueError("field map contains non-finite values")

    @property
    def dy(self) -> float:
        """Cell width; unit weight for a single-column map."""
        return float(self.y[1] - self.y[0]) if len(self.y) > 1 else 1.0

    @property
    def dz(self) -> float:
        """Cell height; unit weight for a single-row map."""
        return float(self.z[1] - self.z[0]) if len(self.z) > 1 else 1.0


def _sheet_field(y, z, width):
    """Uniform current-sheet field per unit total current (I = 1 A).

    Valid on both sides of the sheet (z of either sign, never exactly 0;
    midpoint grids keep observation points off the sheet plane).
    """
    yp = y + width / 2.0
    ym = y - width / 2.0
    hy = -(np.arctan(yp / z) - np.arctan(ym / z)) / (TWO_PI * width)
    hz = np.log((yp ** 2 + z ** 2) / (ym ** 2 + z ** 2)) / (2.0 * TWO_PI * width)
    return hy, hz


def microstrip_field(strip_width: float, ground_distance: float | None,
                     y_halfspan: float, z_top: float,
                     ny: int = 128, nz: int = 4,
                     z_bottom: float = 0.0,
                     screen_conductor_normal: bool = True) -> FieldMap:
    """Quasi-static field map above the strip on a midpoint (y, z) grid.

    The grid spans y in [-y_halfspan, y_halfspan] and z in
    (z_bottom, z_top); midpoint sampling keeps every point off the source
    sheet, which regularizes the otherwise singular sheet plane (points a
    half cell away instead of on the metal).  `ground_distance` adds the
    image sheet (-I at z = -2d); pass None for an isolated strip.
    `screen_conductor_normal` zeroes h_z over the strip footprint (see
    module docstring).
    """
    if strip_width <= 0 or y_halfspan <= 0 or z_top <= z_bottom:
        raise ValueError("strip width, span and z range must be positive")
    if ny < 2 or nz < 1:
        raise ValueError("grid must have at least 2 x 1 cells")
    dy = 2.0 * y_halfspan / ny
    dz = (z_top - z_bottom) / nz
    y = -y_halfspan + dy * (np.arange(ny) + 0.5)
    z = z_bottom + dz * (np.arange(nz) + 0.5)
    yy, zz = np.meshgrid(y, z)
    hy, hz = _sheet_field(yy, zz, strip_width)
    if ground_distance is not None:
        if ground_distance <= 0:
            raise ValueError("ground distance must be positive")
        hy_i, hz_i = _sheet_field(yy, zz + 2.0 * ground_distance, strip_width)
        hy, hz = hy - hy_i, hz - hz_i
    if screen_conductor_normal:
        hz = hz.copy()
        hz[:, np.abs(y) <= strip_width / 2.0] = 0.0
    return FieldMap(y=y, z=z, h_y=hy, h_z=hz, strip_width=strip_width,
                    ground_distance=ground_distance)


def device_field_map(ny: int = 128, nz: int = 4) -> FieldMap:
    """Default device map: field over the strip-width interaction window."""
    return microstrip_field(STRIP_WIDTH, GROUND_DISTANCE,
                            y_halfspan=STRIP_WIDTH / 2.0,
                            z_top=FILM_THICKNESS, ny=ny, nz=nz)


def in_plane_uniformity(fmap: FieldMap, y_extent: float | None = None) -> float:
    """Average fractional deviation of h_y over the sampled cross-section.

    mean(|h_y - <h_y>|) / |<h_y>| restricted to |y| <= y_extent/2; about
    0.08 for the device defaults (approximately uniform interaction field).
    """
    if y_extent is None:
        y_extent = 2.0 * float(np.max(np.abs(fmap.y)))
    mask = np.abs(fmap.y) <= y_extent / 2.0
    hy = fmap.h_y[:, mask]
    m = float(np.mean(hy))
    if m == 0.0:
        raise ValueError("mean in-plane field vanishes on this window")
    return float(np.mean(np.abs(hy - m)) / abs(m))


def _check_extent(fmap: FieldMap, y_extent: float):
    dy = fmap.dy
    if y_extent / 2.0 > fmap.y[-1] + dy / 2.0 + 1e-15:
        raise ValueError(
            f"sample extent {y_extent:g} m exceeds field grid half-span "
            f"{fmap.y[-1] + dy / 2.0:g} m")


def _check_k_resolution(fmap: FieldMap, k: float):
    if k * fmap.dy > math.pi / 5.0:
        raise ValueError(
            f"k = {k:g} rad/m too large for grid spacing {fmap.dy:g} m; "
            f"refine the field map")


def coupling_g(fmap: FieldMap, film: MaterialFilm, k: float,
               y_extent: float, normalized: bool = True) -> complex:
    """Linear coupling overlap for a magnon at wave number k along y.

    Midpoint quadrature of [h_y'(y,z) - i e_k h_z(y,z)] e^{-iky} over the
    film cross-section.  The resonator-mode profile along the strip factors
    out (k is perpendicular to x) and cancels in the normalization.  With
    `normalized`, the value is divided by the k = 0 overlap.
    """
    _check_extent(fmap, y_extent)
    _check_k_resolution(fmap, k)
    mask = np.abs(fmap.y) <= y_extent / 2.0
    y = fmap.y[mask]
    sin_phi = math.sin(film.angle)
    hyp = fmap.h_y[:, mask] * sin_phi
    hz = fmap.h_z[:, mask]

    def overlap(kk):
        _, e_k = ellipticity(film, kk)
        phase = np.exp(-1j * kk * y)
        integrand = (hyp - 1j * e_k * hz) * phase[None, :]
        return complex(integrand.sum() * fmap.dy * fmap.dz)

    val = overlap(k)
    if not normalized:
        return val
    return val / overlap(0.0)


def pumping_p(fmap: FieldMap, film: MaterialFilm, k: float,
              y_extent: float, normalized: bool = True) -> float:
    """Parallel-pumping efficiency for the +-k standing-wave pair.

    rho_k (|S_0| + |S_2k|) / 2 with S_q = integral of h_x'(y,z) e^{iqy},
    the optimal-offset form of the cos^2 overlap (see module docstring).
    Normalized (by default) to the k = 0 value, which makes the curve
    start at 1 and approach rho_k/rho_0 / 2 once the standing wave is much
    finer than the field profile.
    """
    _check_extent(fmap, y_extent)
    _check_k_resolution(fmap, 2.0 * k)
    mask = np.abs(fmap.y) <= y_extent / 2.0
    y = fmap.y[mask]
    cos_phi = math.cos(film.angle)
    hxp = fmap.h_y[:, mask] * cos_phi

    def overlap(kk):
        rho, _ = ellipticity(film, kk)
        s0 = abs(float(hxp.sum()))
        s2k = abs(complex((hxp * np.exp(2j * kk * y)[None, :]).sum()))
        return rho * 0.5 * (s0 + s2k) * fmap.dy * fmap.dz

    val = overlap(k)
    if not normalized:
        return val
    return val / overlap(0.0)


@dataclass(frozen=True)
class CouplingCurve:
    """Normalized |g_k|/|g_0| and P_k/P_0 sampled on a k grid."""

    k: np.ndarray
    g_norm: np.ndarray
    p_norm: np.ndarray
    rho: np.ndarray

    def __post_init__(self):
        if not (len(self.k) == len(self.g_norm) == len(self.p_norm)
                == len(self.rho)):
            raise ValueError("curve arrays must have equal length")
        if abs(self.g_norm[0] - 1.0) > 1e-12 or abs(self.p_norm[0] - 1.0) > 1e-12:
            raise ValueError("curves must be normalized to 1 at k = 0")
        if np.any(self.g_norm < 0) or np.any(self.p_norm < 0):
            raise ValueError("normalized curves must be non-negative")

    def g_at(self, k: float) -> float:
        """|g_k|/|g_0| by linear interpolation; 0 beyond the sampled range
        (the overlap has fully cancelled out there)."""
        return float(np.interp(abs(k), self.k, self.g_norm, right=0.0))

    def p_at(self, k: float) -> float:
        return float(np.interp(abs(k), self.k, self.p_norm,
                               right=float(self.p_norm[-1])))


def coupling_curve(fmap: FieldMap, film: MaterialFilm, y_extent: float,
                   k_max: float = 1e6, n_k: int = 201) -> CouplingCurve:
    """Sample the normalized coupling and pumping curves on [0, k_max]."""
    _check_extent(fmap, y_extent)
    _check_k_resolution(fmap, 2.0 * k_max)
    ks = np.linspace(0.0, k_max, n_k)
    mask = np.abs(fmap.y) <= y_extent / 2.0
    y = fmap.y[mask]
    sin_phi, cos_phi = math.sin(film.angle), math.cos(film.angle)
    hyp = (fmap.h_y[:, mask] * sin_phi).sum(axis=0)
    hz = fmap.h_z[:, mask].sum(axis=0)
    hx = (fmap.h_y[:, mask] * cos_phi).sum(axis=0)
    s0 = abs(float(hx.sum()))

    g = np.empty(n_k)
    p = np.empty(n_k)
    rho = np.empty(n_k)
    for i, kk in enumerate(ks):
        r, e_k = ellipticity(film, kk)
        rho[i] = r
        g[i] = abs(np.sum((hyp - 1j * e_k * hz) * np.exp(-1j * kk * y)))
        p[i] = r * 0.5 * (s0 + abs(np.sum(hx * np.exp(2j * kk * y))))
    g /= g[0]
    p /= p[0]
    return CouplingCurve(k=ks, g_norm=g, p_norm=p, rho=rho)


def device_coupling_curve(film: MaterialFilm, k_max: float = 1e6,
                          n_k: int = 201) -> CouplingCurve:
    """Coupling curves for the default device geometry.

    Wave vectors other than the calibrated y direction (film.angle away
    from the static field) are not calibrated against the device; callers
    picking a different geometry get a warning from here only when the
    angle looks unphysical.
    """
    if not 0 <= film.angle <= math.pi / 2:
        warnings.warn("coupling curve calibrated for in-plane angles in "
                      "[0, pi/2]; results not calibrated", stacklevel=2)
    fmap = device_field_map()
    return coupling_curve(fmap, film, y_extent=STRIP_WIDTH,
                          k_max=k_max, n_k=n_k)


def threshold_field(kappa: float, rho_k: float, gamma: float,
                    p_ratio: float = 1.0) -> float:
    """Parallel-pumping threshold rf field (Oe).

    h_th = 2 (kappa/2pi) / (gamma rho_k) * (P_k/P_uni)^-1 with kappa in
    rad/s, gamma in Hz/Oe.  The rate meets lab time here, so the
    ordinary-frequency convention applies (see `magpo.units`).  Circular
    precession cannot be parallel-pumped.
    """
    if rho_k < 0 or rho_k > 1:
        raise ValueError("ellipticity must lie in [0, 1]")
    if rho_k == 0:
        raise ValueError("parallel pumping forbidden for circular mode "
                         "(rho_k = 0)")
    if p_ratio <= 0:
        raise ValueError("pumping-efficiency ratio must be positive")
    if kappa < 0 or gamma <= 0:
        raise ValueError("kappa must be non-negative and gamma positive")
    return 2.0 * ordinary_rate(kappa) / (gamma * rho_k) / p_ratio
