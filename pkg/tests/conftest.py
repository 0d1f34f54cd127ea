import numpy as np
import pytest

from wigtomo import droplet as dr
from wigtomo import spin_ops as so


@pytest.fixture(scope="session")
def grid50():
    return dr.lebedev_grid(50)


@pytest.fixture(scope="session")
def grid26():
    return dr.lebedev_grid(26)


# Quaternion of the worked single-gate example used throughout the suite.
EXAMPLE_QUATERNION = (0.5198, -0.3462, -0.7424, 0.2425)


@pytest.fixture(scope="session")
def example_gate():
    q = so.Quaternion(*EXAMPLE_QUATERNION).normalized()
    return so.quaternion_to_unitary(q), q


def random_su2(rng) -> np.ndarray:
    vec = rng.normal(size=4)
    return so.quaternion_to_unitary(so.Quaternion.from_array(vec / np.linalg.norm(vec)))
