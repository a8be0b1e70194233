import hypothesis
import numpy as np
import pytest

from gnft.envelope import NORMALIZED, SampledEnvelope, centered_grid
from gnft.sweeps import TABLE_I_CONSTANTS, reference_metrics, table_pulse

hypothesis.settings.register_profile("ci", max_examples=25, deadline=None)
hypothesis.settings.load_profile("ci")


def reference_envelope(kind: str, dt: float, window: float) -> SampledEnvelope:
    grid = centered_grid(window, dt)
    return SampledEnvelope(grid[0], dt, table_pulse(kind, grid), NORMALIZED)


@pytest.fixture(scope="session")
def ds_ref():
    """Double-eigenvalue reference pulse on the robustness-study grid."""
    return reference_envelope("DS", 0.0058, 10.5866)


@pytest.fixture(scope="session")
def ds_fine():
    """Double-eigenvalue pulse at fine resolution, window 4 * duration."""
    duration, _ = reference_metrics("DS")
    return reference_envelope("DS", 0.005, 4.0 * duration)


@pytest.fixture(scope="session")
def two_soliton_ref():
    return reference_envelope("2S", 0.0058, 10.5866)


@pytest.fixture(scope="session")
def one_soliton_ref():
    return reference_envelope("1S", 0.0058, 10.5866)


@pytest.fixture(scope="session")
def table_constants():
    return TABLE_I_CONSTANTS


def rel_err(a, b):
    return abs(a - b) / abs(b)
