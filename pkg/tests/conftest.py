import numpy as np
import pytest

from ptwist import rotation_block_matrix, validate_p


def rotation_2d(theta: float) -> np.ndarray:
    return np.array([[np.cos(theta), -np.sin(theta)],
                     [np.sin(theta), np.cos(theta)]])


@pytest.fixture(scope="session")
def pb_rot():
    """Order-3 rotation twist with matching segment length."""
    return validate_p(rotation_block_matrix([2 * np.pi / 3]), 2 * np.pi / 3)


@pytest.fixture(scope="session")
def pb_identity():
    return validate_p(np.eye(2), 1.0)


@pytest.fixture(scope="session")
def pb_reflection():
    """Order-2 twist with a two-dimensional fixed space (angles 0 and pi)."""
    return validate_p(np.diag([-1.0, 1.0, -1.0, 1.0]), 1.0)
