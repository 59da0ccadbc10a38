"""Waveform analytics: software homodyne down-conversion, Pearson
correlation matrices and lag curves, circular phase statistics, coherence
time fitting, and the volts-to-quanta thermal calibration.

Correlation coefficients are Pearson (centered, normalized by standard
deviations), which is the only normalization under which quadrature
correlations land in [-1, 1]; zero-mean quadrature series make any
mean-normalized variant degenerate.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import firwin

from .units import TWO_PI, thermal_occupation
from .waveio import ComplexWaveform

#: Blackman-windowed-sinc low-pass length; linear phase, ~-74 dB stopband.
FIR_TAPS = 255


def down_convert(samples, sample_rate: float, f_lo: float, bandwidth: float,
                 decimate: int | None = None, taps: int = FIR_TAPS,
                 label: str = "") -> ComplexWaveform:
    """Digital homodyne: mix a real waveform to baseband and low-pass.

    Multiplies by exp(-2 pi i f_lo t), filters with a Blackman-windowed
    sinc of `taps` coefficients cut at `bandwidth`, decimates, and scales
    by 2/(filter dc gain) so a unit tone at f_lo becomes the complex
    constant 1+0j.  `decimate` defaults to the largest factor keeping the
    output rate above 4x the bandwidth.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or len(x) < 2:
        raise ValueError("need a one-dimensional waveform of length >= 2")
    if not 0 < f_lo < sample_rate / 2:
        raise ValueError(f"local oscillator {f_lo:g} Hz must sit below "
                         f"Nyquist {sample_rate / 2:g} Hz")
    if not 0 < bandwidth < f_lo:
        raise ValueError("bandwidth must be positive and below f_lo")
    if decimate is None:
        decimate = max(1, int(sample_rate / (4.0 * bandwidth)))
    if decimate < 1:
        raise ValueError("decimation factor must be >= 1")
    if sample_rate / decimate < 2.0 * bandwidth:
        raise ValueError("decimation would alias the selected bandwidth")
    t = np.arange(len(x)) / sample_rate
    mixed = x * np.exp(-2j * math.pi * f_lo * t)
    h = firwin(taps, bandwidth, window="blackman", fs=sample_rate)
    base = np.convolve(mixed, h, mode="same") * (2.0 / h.sum())
    out = base[::decimate]
    return ComplexWaveform(out, sample_rate / decimate, center_freq=f_lo,
                           label=label or "downconverted")


def fir_response(taps: int, bandwidth: float, sample_rate: float,
                 freqs) -> np.ndarray:
    """|H(f)| of the down-converter's low-pass, normalized to dc gain 1."""
    h = firwin(taps, bandwidth, window="blackman", fs=sample_rate)
    f = np.asarray(freqs, dtype=float)
    n = np.arange(taps)
    phase = np.exp(-2j * math.pi * np.outer(f / sample_rate, n))
    return np.abs(phase @ h) / h.sum()


def correlation(a, b, max_lag: int, min_overlap: int = 100):
    """Pearson cross-correlation rho_ab(tau) for tau in [-max_lag, max_lag].

    rho(tau) = <(a(t) - <a>)(b(t+tau) - <b>)> / (sigma_a sigma_b) with
    global means and standard deviations, so rho_ab(tau) = rho_ba(-tau)
    exactly and the zero-lag autocorrelation is 1.
    Returns (lags, rho).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 1 or b.ndim != 1 or len(a) != len(b):
        raise ValueError("series must be one-dimensional and equally long")
    if len(a) - max_lag < min_overlap:
        raise ValueError(f"overlap at max lag is {len(a) - max_lag}, "
                         f"need >= {min_overlap}")
    sa, sb = a.std(), b.std()
    if sa == 0 or sb == 0:
        raise ValueError("zero-variance input")
    da, db = a - a.mean(), b - b.mean()
    lags = np.arange(-max_lag, max_lag + 1)
    rho = np.empty(len(lags))
    n = len(a)
    for i, lag in enumerate(lags):
        if lag >= 0:
            rho[i] = np.mean(da[:n - lag] * db[lag:]) / (sa * sb)
        else:
            rho[i] = np.mean(da[-lag:] * db[:n + lag]) / (sa * sb)
    return lags, rho


def ensemble_correlation(pairs, max_lag: int):
    """Pearson lag curve pooled over an ensemble of (a, b) trajectory pairs.

    Means and variances are pooled over the whole ensemble before the
    per-lag averaging, which removes the short-trajectory bias of
    per-trace centering (relevant when trajectories are only a few
    correlation times long).
    """
    pairs = [(np.asarray(a, float), np.asarray(b, float)) for a, b in pairs]
    if not pairs:
        raise ValueError("need at least one trajectory pair")
    all_a = np.concatenate([a for a, _ in pairs])
    all_b = np.concatenate([b for _, b in pairs])
    ma, mb = all_a.mean(), all_b.mean()
    sa, sb = all_a.std(), all_b.std()
    if sa == 0 or sb == 0:
        raise ValueError("zero-variance input")
    lags = np.arange(-max_lag, max_lag + 1)
    rho = np.zeros(len(lags))
    for a, b in pairs:
        da, db = a - ma, b - mb
        n = len(a)
        if n - max_lag < 2:
            raise ValueError("trajectories shorter than the lag range")
        for i, lag in enumerate(lags):
            if lag >= 0:
                rho[i] += np.mean(da[:n - lag] * db[lag:])
            else:
                rho[i] += np.mean(da[-lag:] * db[:n + lag])
    rho /= len(pairs) * sa * sb
    return lags, rho


def fit_coherence_time(lag_seconds, rho, floor: float = 0.1):
    """Exponential coherence time from a decaying correlation curve.

    Least squares of log|rho| against lag over the leading region where
    rho > floor (tau >= 0 side).  The curve must decay below 1/e inside
    the range.  Returns (tau_c, rms residual of the log fit).
    """
    lag_seconds = np.asarray(lag_seconds, dtype=float)
    rho = np.asarray(rho, dtype=float)
    pos = lag_seconds >= 0
    t = lag_seconds[pos]
    r = rho[pos]
    order = np.argsort(t)
    t, r = t[order], r[order]
    below = np.nonzero(r < math.exp(-1.0))[0]
    if len(below) == 0:
        raise ValueError("correlation does not decay below 1/e in range")
    cut = np.nonzero(r <= floor)[0]
    end = cut[0] if len(cut) else len(r)
    if end < 3:
        raise ValueError("not enough points above the fit floor")
    tt, rr = t[:end], r[:end]
    if np.any(rr <= 0):
        raise ValueError("correlation crosses zero inside the fit region")
    slope, intercept = np.polyfit(tt, np.log(rr), 1)
    if slope >= 0:
        raise ValueError("correlation does not decay")
    resid = np.log(rr) - (slope * tt + intercept)
    return -1.0 / slope, float(np.sqrt(np.mean(resid ** 2)))


def wrap_phase(phi):
    """Wrap to [-pi, pi)."""
    return np.mod(np.asarray(phi, dtype=float) + math.pi, TWO_PI) - math.pi


def rayleigh_test(phi) -> float:
    """Rayleigh uniformity p-value for circular data.

    Z = n R^2 with R the resultant length; p from the standard series
    approximation, adequate for n >= 10.
    """
    phi = np.asarray(phi, dtype=float).ravel()
    n = len(phi)
    if n < 10:
        raise ValueError("need at least 10 phases")
    r = abs(np.mean(np.exp(1j * phi)))
    z = n * r * r
    p = math.exp(-z) * (1.0 + (2.0 * z - z * z) / (4.0 * n)
                        - (24.0 * z - 132.0 * z ** 2 + 76.0 * z ** 3
                           - 9.0 * z ** 4) / (288.0 * n * n))
    return float(min(max(p, 0.0), 1.0))


def circular_mean_std(phi) -> tuple[float, float]:
    """Vector-average circular mean and standard deviation."""
    phi = np.asarray(phi, dtype=float).ravel()
    z = np.mean(np.exp(1j * phi))
    r = abs(z)
    if r <= 0:
        return 0.0, math.inf
    return float(np.angle(z)), math.sqrt(max(-2.0 * math.log(r), 0.0))


@dataclass
class PhaseStats:
    """Wrapped phase-sum and phase-difference statistics."""

    sum_hist: np.ndarray
    diff_hist: np.ndarray
    bin_edges: np.ndarray
    sum_circular_mean: float
    sum_circular_std: float
    diff_uniform_p: float

    def to_dict(self):
        return {
            "sum_hist": self.sum_hist.tolist(),
            "diff_hist": self.diff_hist.tolist(),
            "bin_edges": self.bin_edges.tolist(),
            "sum_circular_mean": self.sum_circular_mean,
            "sum_circular_std": self.sum_circular_std,
            "diff_uniform_p": self.diff_uniform_p,
        }


def phase_stats(phi1, phi2, bins: int = 41) -> PhaseStats:
    """Distributions of the wrapped phase sum and difference.

    All arithmetic stays wrapped in [-pi, pi); no unwrapping.  Uniformity
    of the difference is assessed with the Rayleigh test (circular data).
    """
    s = wrap_phase(np.asarray(phi1, float) + np.asarray(phi2, float)).ravel()
    d = wrap_phase(np.asarray(phi1, float) - np.asarray(phi2, float)).ravel()
    edges = np.linspace(-math.pi, math.pi, bins + 1)
    sum_hist, _ = np.histogram(s, bins=edges)
    diff_hist, _ = np.histogram(d, bins=edges)
    mean, std = circular_mean_std(s)
    return PhaseStats(sum_hist=sum_hist, diff_hist=diff_hist, bin_edges=edges,
                      sum_circular_mean=mean, sum_circular_std=std,
                      diff_uniform_p=rayleigh_test(d))


@dataclass
class CorrelationReport:
    """Zero-lag coefficient matrix over (X1, P1, X2, P2) plus lag curves."""

    labels: tuple = ("X1", "P1", "X2", "P2")
    matrix: np.ndarray = field(default_factory=lambda: np.eye(4))
    lag_seconds: np.ndarray = field(default_factory=lambda: np.zeros(1))
    curves: dict = field(default_factory=dict)
    coherence_times: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "labels": list(self.labels),
            "matrix": self.matrix.tolist(),
            "lag_seconds": self.lag_seconds.tolist(),
            "curves": {k: v.tolist() for k, v in self.curves.items()},
            "coherence_times": self.coherence_times,
        }


def correlation_report(x1, p1, x2, p2, sample_rate: float, max_lag: int,
                       curve_pairs=(("X1", "X1"), ("X1", "X2"),
                                    ("P1", "P2"), ("X2", "X2"))) -> CorrelationReport:
    """Assemble the quadrature correlation report.

    Inputs may be single series or (trajectory, sample) ensembles; the
    matrix holds zero-lag Pearson coefficients, `curves` the requested lag
    curves, and each decaying curve gets a fitted coherence time.
    """
    series = {"X1": np.atleast_2d(np.asarray(x1, float)),
              "P1": np.atleast_2d(np.asarray(p1, float)),
              "X2": np.atleast_2d(np.asarray(x2, float)),
              "P2": np.atleast_2d(np.asarray(p2, float))}
    labels = ("X1", "P1", "X2", "P2")
    mat = np.eye(4)
    for i, a in enumerate(labels):
        for j, b in enumerate(labels[i + 1:], start=i + 1):
            pairs = list(zip(series[a], series[b]))
            _, rho = ensemble_correlation(pairs, 0)
            mat[i, j] = mat[j, i] = rho[0]
    lags = None
    curves = {}
    taus = {}
    for a, b in curve_pairs:
        pairs = list(zip(series[a], series[b]))
        lags, rho = ensemble_correlation(pairs, max_lag)
        key = f"{a}-{b}"
        curves[key] = rho
        try:
            tau, _ = fit_coherence_time(lags / sample_rate, np.abs(rho))
            taus[key] = tau
        except ValueError:
            taus[key] = None
    return CorrelationReport(labels=labels, matrix=mat,
                             lag_seconds=lags / sample_rate, curves=curves,
                             coherence_times=taus)


def thermal_calibration(quadrature_samples, temperature_k: float,
                        frequency_hz: float) -> tuple[float, float]:
    """Volts-per-sqrt-quantum scale from below-threshold thermal noise.

    For complex quadrature samples V = X + iP in volts, the scale s
    satisfies <|V/s|^2> = n_th with n_th the Bose occupation at the given
    temperature and frequency.  Returns (s, n_th).
    """
    v = np.asarray(quadrature_samples)
    if v.size < 2:
        raise ValueError("need at least 2 samples")
    mean_sq = float(np.mean(np.abs(v) ** 2))
    if mean_sq <= 0:
        raise ValueError("degenerate (all-zero) samples")
    n_th = thermal_occupation(temperature_k, frequency_hz)
    return math.sqrt(mean_sq / n_th), n_th
