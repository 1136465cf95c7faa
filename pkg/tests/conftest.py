import pytest

from pitchtrack.simulator import clean_scenario, simulate
from pitchtrack.tracker import run_sequence


@pytest.fixture(scope="session")
def small_clean_sim():
    """A short uncorrupted match shared by tests that just need real data."""
    return simulate(clean_scenario(seed=0, n_frames=60))


@pytest.fixture(scope="session")
def small_clean_rows(small_clean_sim):
    return run_sequence(small_clean_sim.detections)
