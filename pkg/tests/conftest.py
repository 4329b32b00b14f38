from functools import reduce

import numpy as np
import pytest

_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def kron_pauli(label: str) -> np.ndarray:
    """Reference Kronecker-product matrix, leftmost letter = qubit 0."""
    return reduce(np.kron, [_SINGLE[c] for c in label])


def random_label(rng, n: int) -> str:
    return "".join(rng.choice(list("IXYZ"), size=n))


def haar_unitary(rng, d: int) -> np.ndarray:
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
