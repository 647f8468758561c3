import numpy as np
import pytest

from uca_prioritizer import parse_dataset
from uca_prioritizer.pipeline import fixture_manifest

# Worked example: three UCAs scored on the five criteria.
WORKED_IDS = ["UCA-1.1.1", "UCA-1.2.1", "UCA-2.1.1"]
WORKED = np.array([
    [3, 3, 2, 3, 0],
    [2, 2, 3, 3, 1],
    [1, 2, 1, 2, 1],
], dtype=float)

# Case study: PMS, CIF and published EJ per UCA.
CASE_STUDY = {
    "UCA-21.5.1": (20, 6, 59.4072555),
    "UCA-18.2.1": (20, 5, 29.85918475),
    "UCA-8.2.1": (20, 4, 29.77339235),
    "UCA-6.1.1": (20, 3, 29.87185488),
    "UCA-9.2.1": (20, 2, 58.99621273),
    "UCA-14.5.1": (20, 1, 59.45807616),
    "UCA-29.5.1": (12, 5, 208.2534994),
    "UCA-18.5.1": (12, 6, 208.6651534),
    "UCA-13.5.1": (4, 6, 208.8436053),
    "UCA-47.1.1": (7, 4, 266.8445137),
}


@pytest.fixture(scope="session")
def manifest():
    return fixture_manifest()


@pytest.fixture(scope="session")
def dataset(manifest):
    return parse_dataset(manifest)


@pytest.fixture
def worked():
    return WORKED.copy()
