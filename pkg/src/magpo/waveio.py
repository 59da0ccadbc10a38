"""Binary waveform file format and complex waveform container.

Layout (little-endian throughout):

    offset  size  field
    0       4     magic b"MAGW"
    4       2     format version, u16 (currently 1)
    6       8     sample rate, f64 (Hz)
    14      8     center frequency tag, f64 (Hz)
    22      8     sample count, u64
    30      2     source label length, u16
    32      L     source label, utf-8
    32+L    16*N  interleaved I/Q pairs, f64 each

The round trip is bit exact; a corrupt header is rejected with the byte
offset of the first violated field.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"MAGW"
VERSION = 1
_HEADER = struct.Struct("<4sHddQH")


class WaveformFormatError(ValueError):
    """Raised on malformed waveform files; carries the failing byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


@dataclass
class ComplexWaveform:
    """Uniformly sampled complex (I/Q) time series."""

    samples: np.ndarray
    sample_rate: float
    center_freq: float = 0.0
    label: str = ""

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.complex128)
        if self.samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if self.sample_rate <= 0:
            raise ValueError("sample rate must be positive")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def times(self) -> np.ndarray:
        return np.arange(len(self.samples)) / self.sample_rate

    def phases(self) -> np.ndarray:
        """Instantaneous phase in [0, 2*pi)."""
        return np.mod(np.angle(self.samples), 2.0 * np.pi)


def write_waveform(path, wf: ComplexWaveform) -> None:
    label = wf.label.encode("utf-8")
    if len(label) > 0xFFFF:
        raise ValueError("source label too long")
    header = _HEADER.pack(MAGIC, VERSION, wf.sample_rate, wf.center_freq,
                          len(wf.samples), len(label))
    body = np.empty(2 * len(wf.samples), dtype="<f8")
    body[0::2] = wf.samples.real
    body[1::2] = wf.samples.imag
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(label)
        fh.write(body.tobytes())


def read_waveform(path) -> ComplexWaveform:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise WaveformFormatError("file shorter than fixed header", len(raw))
    magic, version, rate, center, count, label_len = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise WaveformFormatError(f"bad magic {magic!r}", 0)
    if version != VERSION:
        raise WaveformFormatError(f"unsupported version {version}", 4)
    if not (rate > 0) or not np.isfinite(rate):
        raise WaveformFormatError(f"invalid sample rate {rate}", 6)
    body_start = _HEADER.size + label_len
    if len(raw) < body_start:
        raise WaveformFormatError("truncated source label", _HEADER.size)
    label = raw[_HEADER.size:body_start].decode("utf-8")
    expected = 16 * count
    actual = len(raw) - body_start
    if actual != expected:
        raise WaveformFormatError(
            f"truncated body: expected {expected} bytes ({count} samples), "
            f"got {actual}", body_start + actual)
    flat = np.frombuffer(raw, dtype="<f8", offset=body_start)
    samples = flat[0::2] + 1j * flat[1::2]
    return ComplexWaveform(samples=samples, sample_rate=rate,
                           center_freq=center, label=label)
