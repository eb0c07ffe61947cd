import numpy as np
import pytest

from bellbound import MeasurementStrategy


@pytest.fixture
def octahedron_cuboid_strategy() -> MeasurementStrategy:
    """The canonical maximal-violation strategy: Pauli axes for Alice,
    the four cuboid diagonals for Bob."""
    alice = np.eye(3)
    bob = np.array(
        [
            [1.0, -1.0, 1.0],
            [1.0, 1.0, -1.0],
            [-1.0, -1.0, -1.0],
            [-1.0, 1.0, 1.0],
        ]
    ) / np.sqrt(3.0)
    return MeasurementStrategy(alice=alice, bob=bob)


def random_state(rng: np.random.Generator):
    """A random two-qubit state: Haar-like pure state mixed with noise."""
    from bellbound import TwoQubitState

    vec = rng.normal(size=4) + 1j * rng.normal(size=4)
    vec /= np.linalg.norm(vec)
    q = rng.uniform(0.0, 1.0)
    rho = q * np.outer(vec, vec.conj()) + (1 - q) * np.eye(4) / 4.0
    return TwoQubitState(rho)


def random_strategy(rng: np.random.Generator, k: int, l: int) -> MeasurementStrategy:
    def rows(n):
        v = rng.normal(size=(n, 3))
        return v / np.linalg.norm(v, axis=1, keepdims=True)

    return MeasurementStrategy(alice=rows(k), bob=rows(l))
