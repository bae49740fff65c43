import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from chanassign.model import Assignment, AvailabilityModel, MacTiming, table1_assignment  # noqa: E402


def random_assignment(rng, M, N, share=0.5):
    """Each channel gets a random holder subset (possibly empty)."""
    holders = [[i for i in range(M) if rng.random() < share] for _ in range(N)]
    return Assignment.from_holders(holders, M)


@pytest.fixture
def paper_timing():
    return MacTiming.paper()


@pytest.fixture
def table1():
    return AvailabilityModel(np.full((3, 6), 0.8)), table1_assignment()
