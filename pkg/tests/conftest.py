"""Session-scoped fixtures: the six-mass benchmark and cached records."""

import numpy as np
import pytest

from tdmdc import analytic_modes, build_6dof, impulse, simulate


@pytest.fixture(scope="session")
def model6():
    return build_6dof()


@pytest.fixture(scope="session")
def analytic6(model6):
    return analytic_modes(model6)


@pytest.fixture(scope="session")
def ref_freqs(analytic6):
    return np.array([m.freq_hz for m in analytic6])


@pytest.fixture(scope="session")
def ref_damps(analytic6):
    return np.array([m.damping for m in analytic6])


@pytest.fixture(scope="session")
def impulse_excitation():
    """Unit impulse on the first mass, 4000 samples at 4 Hz."""
    return impulse(6, 1, 1.0, 0, 4000, 0.25)


@pytest.fixture(scope="session")
def impulse_response(model6, impulse_excitation):
    return simulate(model6, impulse_excitation)
