"""Parametric polariton dynamics: equation-of-motion matrix, eigenvalues,
saturation, the reduced signal/idler Langevin system with thermal noise,
and the steady-state amplitude statistics.

Model summary.  A pump at twice the polariton frequency drives pair
creation of two hybrid modes split by +-Omega; four-magnon scattering adds
an occupation-dependent frequency pull that saturates the instability.
In the frame rotating with each mode, the slowly varying complex envelopes
(v+, v-) obey

    dv+-/dt = -(kappa + i T n / 2) v+- - (i drive / 2) conj(v-+) + f(t),
    n = (|v+|^2 + |v-|^2) / 2,

with thermal Langevin forces of strength <f f*> = 2 n_th kappa delta(t-t')
(classical limit, n_th >> 1, operators replaced by c-numbers).  Above the
threshold drive 2 kappa the pair locks its phase sum and saturates at
n = sqrt(drive^2 - 4 kappa^2) / T while the phase difference stays free,
which is the source of the device's randomness.

Rates inside `SystemParams` are angular (rad/s).  Matrix and eigenvalue
algebra uses them directly; the integrator and the phase-diffusion
linewidth convert to ordinary-frequency rates (rate/2pi acts as the
e-folding rate in lab time; see `magpo.units.RATE_CONVENTION`).
"""

import cmath
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import _sde
from .rngstream import stream
from .units import TWO_PI, ordinary_rate
from .waveio import ComplexWaveform


class BelowThresholdError(ValueError):
    """Drive below the parametric threshold 2 kappa; callers that want the
    sub-threshold behavior map this to a zero-amplitude steady state."""


@dataclass(frozen=True)
class SystemParams:
    """Constants of the hybrid pair system, all rates in rad/s.

    coupling is the polariton-gap coupling (sqrt(2) times the single-mode
    magnon-photon coupling); nonlinearity is the four-magnon coefficient
    (frequency pull per quantum, ~ 4 w_M / (N S)); drive is the pump
    amplitude times the pumping efficiency.  mean_loss defaults to the
    average of magnon and cavity losses, half_splitting to
    sqrt(max(coupling^2 - mean_loss^2, 0)); both can be overridden.
    """

    coupling: float
    magnon_loss: float
    cavity_loss: float
    nonlinearity: float
    drive: float
    thermal_occupation: float
    mean_loss: float | None = None
    half_splitting: float | None = None

    def __post_init__(self):
        if min(self.coupling, self.magnon_loss, self.cavity_loss,
               self.nonlinearity, self.thermal_occupation) < 0:
            raise ValueError("rates and occupations must be non-negative")
        if self.mean_loss is None:
            object.__setattr__(self, "mean_loss",
                               0.5 * (self.magnon_loss + self.cavity_loss))
        elif self.mean_loss < 0:
            raise ValueError("mean loss must be non-negative")
        if self.half_splitting is None:
            object.__setattr__(self, "half_splitting",
                               mode_splitting(self.coupling, self.mean_loss))
        elif self.half_splitting < 0:
            raise ValueError("half splitting must be non-negative")

    @property
    def single_mode_coupling(self) -> float:
        """Per-mode magnon-photon coupling g = coupling / sqrt(2)."""
        return self.coupling / math.sqrt(2.0)

    @property
    def threshold_drive(self) -> float:
        return 2.0 * self.mean_loss

    @property
    def above_threshold(self) -> bool:
        return abs(self.drive) > self.threshold_drive

    def with_drive(self, drive: float) -> "SystemParams":
        return replace(self, drive=drive)


def build_matrix_m(p: SystemParams, n_magnon: float) -> np.ndarray:
    """6x6 equation-of-motion matrix in the rotating frame.

    Basis order [c_k, c_-k, a, a_dag, c_k_dag, c_-k_dag]; diagonal carries
    the losses and the four-magnon frequency pull, off-diagonals the
    magnon-photon coupling (g = coupling/sqrt(2)) and the pair drive.
    """
    g = p.single_mode_coupling
    km, kr = p.magnon_loss, p.cavity_loss
    tn = p.nonlinearity * n_magnon
    pk = p.drive
    i = 1j
    return np.array([
        [-km - i * tn, 0, -i * g, 0, 0, -i * pk],
        [0, -km - i * tn, -i * g, 0, -i * pk, 0],
        [-i * g, -i * g, -kr, 0, 0, 0],
        [0, 0, 0, -kr, i * g, i * g],
        [0, i * pk, 0, i * g, -km + i * tn, 0],
        [i * pk, 0, 0, i * g, 0, -km + i * tn],
    ], dtype=complex)


def analytic_eigenvalues(p: SystemParams, n_magnon: float) -> np.ndarray:
    """Closed-form eigenvalues of the symmetric-loss matrix.

    Exact for magnon_loss = cavity_loss = kappa: the dark pair
    -kappa +- s, and the four bright modes -kappa +- (s +- i q)/2 with
    s = sqrt(drive^2 - (T n)^2) and q = sqrt(8 g^2 - (drive^2 - (T n)^2)),
    principal square roots.  Order: [dark+, dark-, bright...].
    """
    if p.magnon_loss > 0 and abs(p.magnon_loss - p.cavity_loss) \
            > 0.2 * max(p.magnon_loss, p.cavity_loss):
        warnings.warn("closed-form eigenvalues assume nearly equal magnon "
                      "and cavity losses; inputs differ by more than 20%",
                      stacklevel=2)
    kappa = p.mean_loss
    g = p.single_mode_coupling
    tn = p.nonlinearity * n_magnon
    s = cmath.sqrt(complex(p.drive ** 2 - tn ** 2))
    q = cmath.sqrt(complex(8.0 * g ** 2 - (p.drive ** 2 - tn ** 2)))
    return np.array([
        -kappa + s, -kappa - s,
        -kappa + 0.5 * (s + 1j * q), -kappa + 0.5 * (s - 1j * q),
        -kappa - 0.5 * (s + 1j * q), -kappa - 0.5 * (s - 1j * q),
    ])


def saturation_number(p: SystemParams) -> float:
    """Steady-state pair occupation sqrt(drive^2 - 4 kappa^2) / T.

    Zero exactly at threshold; below threshold there is no saturated
    state and BelowThresholdError is raised.
    """
    gap = abs(p.drive) ** 2 - p.threshold_drive ** 2
    if gap < 0:
        raise BelowThresholdError(
            f"drive {abs(p.drive):g} rad/s below threshold "
            f"{p.threshold_drive:g} rad/s")
    if p.nonlinearity == 0:
        raise ValueError("saturation requires a non-zero nonlinearity")
    return math.sqrt(gap) / p.nonlinearity


def mode_splitting(coupling: float, loss: float) -> float:
    """Half-splitting sqrt(coupling^2 - loss^2); 0 in the degenerate regime."""
    if coupling < 0 or loss < 0:
        raise ValueError("rates must be non-negative")
    if coupling <= loss:
        return 0.0
    return math.sqrt(coupling ** 2 - loss ** 2)


def pair_correlation_ss(p: SystemParams, n_pair: float | None = None) -> complex:
    """Steady-state pair correlation <v+ v->.

    -i (2 n + 1) drive / (4 kappa + 2 i T n); its argument is the locked
    value of the phase sum, its magnitude ~ n (coherent-part dominated).
    """
    if n_pair is None:
        n_pair = saturation_number(p)
    if not p.above_threshold:
        raise BelowThresholdError(
            "pair correlation steady state requires drive above threshold")
    return (-1j * (2.0 * n_pair + 1.0) * p.drive
            / (4.0 * p.mean_loss + 2j * p.nonlinearity * n_pair))


def lock_phase(p: SystemParams, n_pair: float | None = None) -> float:
    """Locked value of the envelope phase sum, arg(<v+ v->)."""
    return cmath.phase(pair_correlation_ss(p, n_pair))


def phase_diffusion(p: SystemParams, n_pair: float) -> tuple[float, float]:
    """Thermal phase-diffusion linewidth D (Hz) and coherence time 1/D (s).

    D = (n_th / 4 n) (kappa / 2 pi): the envelope autocorrelation decays as
    exp(-D t).  The rate meets lab time, hence the ordinary-frequency
    kappa (see `magpo.units.RATE_CONVENTION`).
    """
    if n_pair <= 0:
        raise ValueError("phase diffusion needs a positive pair occupation")
    d_hz = p.thermal_occupation / (4.0 * n_pair) * ordinary_rate(p.mean_loss)
    return d_hz, 1.0 / d_hz


def fp_steady_distribution(radius_scale: float, pump_excess: float,
                           n_grid: np.ndarray) -> np.ndarray:
    """Steady-state occupation density on `n_grid`, normalized to 1.

    P(n) ~ exp(B b^2 n / 2 - b^6 n^3 / 6) with b the radius scale and B
    the scaled pump excess; for B > 0 the density peaks at sqrt(B)/b^2,
    for B <= 0 it decreases monotonically.  Normalization is numeric
    (trapezoid) on the supplied grid.
    """
    if radius_scale <= 0:
        raise ValueError("radius scale must be positive")
    n = np.asarray(n_grid, dtype=float)
    if n.ndim != 1 or len(n) < 2 or np.any(np.diff(n) <= 0):
        raise ValueError("n_grid must be strictly increasing, length >= 2")
    b2 = radius_scale ** 2
    expo = 0.5 * pump_excess * b2 * n - (b2 * n) ** 3 / 6.0
    expo -= expo.max()
    dens = np.exp(expo)
    norm = np.trapezoid(dens, n)
    return dens / norm


def fp_mode(radius_scale: float, pump_excess: float) -> float:
    """Peak location sqrt(B)/b^2 of the steady-state density (B > 0)."""
    if pump_excess <= 0:
        return 0.0
    return math.sqrt(pump_excess) / radius_scale ** 2


def fit_fp(n_samples: np.ndarray, grid_points: int = 2000):
    """Fit (radius_scale, pump_excess) to occupation samples by maximum
    likelihood with numerically normalized density.

    Moment-based start: peak from a coarse histogram, width from the
    Gaussian curvature of the density around its peak.
    """
    from scipy.optimize import minimize

    n = np.asarray(n_samples, dtype=float)
    if len(n) < 100:
        raise ValueError("need at least 100 samples")
    if np.any(n < 0):
        raise ValueError("occupation samples must be non-negative")
    peak0 = max(float(np.median(n)), 1e-12)
    var0 = max(float(np.var(n)), 1e-24)
    # var ~ 1/(b^6 n*) around the peak
    b0 = (1.0 / (var0 * peak0)) ** (1.0 / 6.0)
    big_b0 = (b0 ** 2 * peak0) ** 2
    grid = np.linspace(0.0, max(n.max() * 1.5, peak0 * 3.0), grid_points)

    def nll(x):
        lb, bb = x
        b = math.exp(lb)
        try:
            dens = fp_steady_distribution(b, bb, grid)
        except (OverflowError, FloatingPointError):
            return 1e30
        pn = np.interp(n, grid, dens)
        if np.any(pn <= 0):
            return 1e30
        return -float(np.sum(np.log(pn)))

    res = minimize(nll, [math.log(b0), big_b0], method="Nelder-Mead",
                   options={"maxiter": 4000, "xatol": 1e-10, "fatol": 1e-10})
    return math.exp(res.x[0]), float(res.x[1])


@dataclass
class EnsembleResult:
    """Stored envelope trajectories with full reproducibility metadata."""

    params: SystemParams
    seed: int
    step: float
    store_every: int
    times: np.ndarray
    vplus: np.ndarray     # (trajectories, samples) complex
    vminus: np.ndarray
    initial: str = "vacuum"

    @property
    def trajectories(self) -> int:
        return self.vplus.shape[0]

    @property
    def sample_rate(self) -> float:
        return 1.0 / (self.step * self.store_every)

    def occupation(self, which: str = "pair") -> np.ndarray:
        """Instantaneous occupation per trajectory and sample."""
        if which == "pair":
            return 0.5 * (np.abs(self.vplus) ** 2 + np.abs(self.vminus) ** 2)
        if which == "signal":
            return np.abs(self.vplus) ** 2
        if which == "idler":
            return np.abs(self.vminus) ** 2
        raise ValueError("which must be pair, signal or idler")

    def calibration_phase(self) -> float:
        """Constant phase removed from the idler so the locked phase sum
        sits at zero, mirroring the receiver phase shifter."""
        try:
            return lock_phase(self.params)
        except BelowThresholdError:
            return 0.0

    def quadratures(self, calibrate: bool = True):
        """(X1, P1, X2, P2) arrays, idler rotated by the calibration phase."""
        v2 = self.vminus
        if calibrate:
            v2 = v2 * np.exp(-1j * self.calibration_phase())
        return (self.vplus.real, self.vplus.imag, v2.real, v2.imag)

    def phases(self, calibrate: bool = True):
        """(phi1, phi2) in [0, 2 pi)."""
        x1, p1, x2, p2 = self.quadratures(calibrate)
        return (np.mod(np.arctan2(p1, x1), TWO_PI),
                np.mod(np.arctan2(p2, x2), TWO_PI))

    def to_waveforms(self, trajectory: int = 0, pump_freq: float = 6.708e9,
                     calibrate: bool = True):
        """(signal, idler) ComplexWaveforms for one trajectory.

        Center-frequency tags sit at pump_freq/2 -+ half_splitting/2pi.
        """
        delta_hz = self.params.half_splitting / TWO_PI
        x1, p1, x2, p2 = self.quadratures(calibrate)
        sig = ComplexWaveform(x1[trajectory] + 1j * p1[trajectory],
                              self.sample_rate,
                              center_freq=pump_freq / 2.0 - delta_hz,
                              label=f"signal traj {trajectory} seed {self.seed}")
        idl = ComplexWaveform(x2[trajectory] + 1j * p2[trajectory],
                              self.sample_rate,
                              center_freq=pump_freq / 2.0 + delta_hz,
                              label=f"idler traj {trajectory} seed {self.seed}")
        return sig, idl


def max_stable_step(p: SystemParams, n_expected: float | None = None) -> float:
    """Largest allowed integrator step, 0.02 over the fastest lab-time rate."""
    if n_expected is None:
        n_expected = _expected_occupation(p)
    fastest = max(p.mean_loss, abs(p.drive), p.nonlinearity * n_expected)
    if fastest <= 0:
        raise ValueError("system has no dynamics (all rates zero)")
    return 0.02 / ordinary_rate(fastest)


def _expected_occupation(p: SystemParams) -> float:
    try:
        return max(saturation_number(p), p.thermal_occupation)
    except (BelowThresholdError, ValueError):
        return p.thermal_occupation


def simulate_pair(p: SystemParams, step: float, duration: float, seed: int,
                  trajectories: int = 1, store_every: int = 1,
                  initial: str = "vacuum",
                  n_expected: float | None = None) -> EnsembleResult:
    """Integrate the envelope pair by Euler-Maruyama with thermal noise.

    Each trajectory consumes its own Philox stream derived from
    (seed, trajectory index), so results are bit-identical for identical
    (seed, params, step, trajectories) regardless of scheduling, and
    trajectory i is unchanged when more trajectories are requested.

    `step` must satisfy step <= 0.02 / max(kappa, |drive|, T n_expected)
    with the rates in lab-time (ordinary-frequency) units, the units the
    integrator uses; `initial` chooses vacuum (v = 0) or steady (saturated
    amplitude with random pair phases, thermal below threshold) starts.
    """
    if trajectories < 1:
        raise ValueError("need at least one trajectory")
    if store_every < 1:
        raise ValueError("store_every must be a positive integer")
    if step <= 0 or duration <= 0:
        raise ValueError("step and duration must be positive")
    guard = max_stable_step(p, n_expected)
    if step > guard * (1.0 + 1e-12):
        raise ValueError(
            f"step {step:g} s exceeds stability guard {guard:g} s "
            f"(0.02 over the fastest rate)")
    if initial not in ("vacuum", "steady"):
        raise ValueError("initial must be 'vacuum' or 'steady'")

    n_steps = int(round(duration / step))
    n_out = n_steps // store_every
    loss = ordinary_rate(p.mean_loss)
    nonlin_half = 0.5 * ordinary_rate(p.nonlinearity)
    drive_half = 0.5 * ordinary_rate(p.drive)
    amp = math.sqrt(p.thermal_occupation * loss * step)

    times = np.arange(n_out + 1) * (step * store_every)
    vplus = np.empty((trajectories, n_out + 1), dtype=np.complex128)
    vminus = np.empty((trajectories, n_out + 1), dtype=np.complex128)

    for traj in range(trajectories):
        gen = stream(seed, traj)
        vp, vm = _initial_state(p, initial, gen)
        vplus[traj, 0] = vp
        vminus[traj, 0] = vm
        out_vp = np.zeros(n_out + 1, dtype=np.complex128)
        out_vm = np.zeros(n_out + 1, dtype=np.complex128)
        done = 0
        k_out = 1
        while done < n_steps:
            m = min(_sde.CHUNK_STEPS, n_steps - done)
            noise = gen.standard_normal((m, 4))
            vp, vm, k_out, bad = _sde.advance_chunk(
                vp, vm, loss, nonlin_half, drive_half, step, amp, noise,
                out_vp, out_vm, done, k_out, store_every)
            if bad >= 0:
                raise FloatingPointError(
                    f"non-finite state in trajectory {traj} at step {bad} "
                    f"(t = {bad * step:g} s)")
            done += m
        vplus[traj, 1:] = out_vp[1:]
        vminus[traj, 1:] = out_vm[1:]

    return EnsembleResult(params=p, seed=seed, step=step,
                          store_every=store_every, times=times,
                          vplus=vplus, vminus=vminus, initial=initial)


def _initial_state(p: SystemParams, initial: str, gen):
    if initial == "vacuum":
        return 0j, 0j
    if p.above_threshold:
        r = math.sqrt(saturation_number(p))
        phi_plus = gen.uniform(0.0, TWO_PI)
        phi_minus = lock_phase(p) - phi_plus
        return r * cmath.exp(1j * phi_plus), r * cmath.exp(1j * phi_minus)
    s = math.sqrt(p.thermal_occupation / 2.0)
    xi = gen.standard_normal(4)
    return s * complex(xi[0], xi[1]), s * complex(xi[2], xi[3])
