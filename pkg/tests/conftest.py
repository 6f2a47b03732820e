import os
import random
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from symexpr import Chart  # noqa: E402


@pytest.fixture
def line():
    return Chart("L", ["x"])


@pytest.fixture
def plane():
    return Chart("E2", ["x", "y"])


@pytest.fixture
def target_plane():
    return Chart("Q", ["u", "v"])


@pytest.fixture
def super11():
    return Chart("S11", ["x"], ["th"])


@pytest.fixture
def super22():
    return Chart("S22", ["x1", "x2"], ["th1", "th2"])


@pytest.fixture
def rng():
    return random.Random(1)
