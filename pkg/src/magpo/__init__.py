"""Cavity-magnonic non-degenerate parametric oscillator toolkit.

Device physics (dispersion, resonator, coupling), stochastic pair
dynamics, waveform statistics, randomness testing, and the correlated-pair
communication link, with a CLI (`magpo`) over all of it.
"""

__version__ = "0.1.0"

from .dispersion import MaterialFilm, MagnonMode  # noqa: F401
from .dynamics import SystemParams  # noqa: F401
from .waveio import ComplexWaveform  # noqa: F401
