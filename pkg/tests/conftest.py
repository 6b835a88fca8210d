import numpy as np
import pytest

from tbqc.quantum import StateVector

S2 = 1 / np.sqrt(2)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def plus():
    return StateVector(np.array([S2, S2], dtype=complex))


def minus():
    return StateVector(np.array([S2, -S2], dtype=complex))
