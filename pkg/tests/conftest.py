import numpy as np
import pytest

from magpo import presets
from magpo.dynamics import max_stable_step, simulate_pair


@pytest.fixture(scope="session")
def reference_params():
    return presets.reference_pair_params()


@pytest.fixture(scope="session")
def steady_ensemble(reference_params):
    """100 steady-state trajectories at the fitted operating point.

    Shared by the occupation-statistics, correlation, and phase tests;
    160 us per trajectory at a 2 MHz store rate.
    """
    p = reference_params
    dt_max = max_stable_step(p)
    substeps = int(np.ceil(1.0 / (2e6 * dt_max)))
    step = 1.0 / (2e6 * substeps)
    return simulate_pair(p, step, 1.6e-4, seed=101, trajectories=100,
                         store_every=substeps, initial="steady")


@pytest.fixture(scope="session")
def long_run(reference_params):
    """12 long steady trajectories (2.4 ms) for coherence-time fits."""
    p = reference_params
    dt_max = max_stable_step(p)
    substeps = int(np.ceil(1.0 / (2e6 * dt_max)))
    step = 1.0 / (2e6 * substeps)
    return simulate_pair(p, step, 2.4e-3, seed=77, trajectories=12,
                         store_every=substeps, initial="steady")
