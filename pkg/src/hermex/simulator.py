"""Dense state-vector and density-matrix simulation for up to 12 qubits.

States are plain complex numpy arrays. A state vector has shape
``(..., 2**n)``; every leading axis is a batch axis, which lets the
expressibility sampler push thousands of circuits through at once. Density
matrices have shape ``(2**n, 2**n)``. Amplitude ordering is big-endian:
qubit 0 is the most significant bit of the basis index.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import CapacityError, DimensionError, NotHermitianError
from .gates import CZ, Gate, Hadamard, PauliRotation, Unitary
from .pauli import MAX_DENSE_QUBITS, PauliString, PauliSum

StateVector = np.ndarray
DensityMatrix = np.ndarray

NORM_TOL = 1e-10
HERMITIAN_TOL = 1e-9
JACOBI_TOL = 1e-12

_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


def num_qubits(state: np.ndarray) -> int:
    dim = state.shape[-1]
    n = dim.bit_length() - 1
    if dim < 2 or dim != 1 << n:
        raise DimensionError(f"length {dim} is not a power of two")
    return n


def zero_state(n_qubits: int) -> StateVector:
    if not 1 <= n_qubits <= MAX_DENSE_QUBITS:
        raise CapacityError(f"{n_qubits} qubits outside supported range 1..{MAX_DENSE_QUBITS}")
    psi = np.zeros(1 << n_qubits, dtype=complex)
    psi[0] = 1.0
    return psi


def basis_state(n_qubits: int, index: int) -> StateVector:
    psi = zero_state(n_qubits)
    psi[0] = 0.0
    psi[index] = 1.0
    return psi


def random_state(n_qubits: int, rng: np.random.Generator) -> StateVector:
    dim = 1 << n_qubits
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return psi / np.linalg.norm(psi)


def random_density_matrix(n_qubits: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    dim = 1 << n_qubits
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def density_matrix(psi: StateVector) -> DensityMatrix:
    return np.outer(psi, psi.conj())


def check_state(psi: StateVector, tol: float = NORM_TOL) -> None:
    norms = np.sum(np.abs(psi) ** 2, axis=-1)
    if np.any(np.abs(norms - 1) > tol):
        raise ValueError(f"state norm deviates from 1 by {np.max(np.abs(norms - 1)):.3e}")


def check_density_matrix(rho: DensityMatrix, tol: float = NORM_TOL) -> None:
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise NotHermitianError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise ValueError(f"trace {np.trace(rho).real:.12f} != 1")
    if np.min(np.linalg.eigvalsh(rho)) < -1e-9:
        raise ValueError("density matrix has a negative eigenvalue")


def _check_qubits(qubits: Sequence[int], n: int) -> None:
    if len(set(qubits)) != len(qubits):
        raise DimensionError(f"duplicate qubit indices in {tuple(qubits)}")
    for q in qubits:
        if not 0 <= q < n:
            raise DimensionError(f"qubit {q} out of range for {n} qubits")


def apply_unitary(state: StateVector, matrix: np.ndarray, qubits: Sequence[int]) -> StateVector:
    """Apply a dense ``2**k x 2**k`` matrix to the listed qubits."""
    n = num_qubits(state)
    qubits = tuple(qubits)
    _check_qubits(qubits, n)
    k = len(qubits)
    if matrix.shape != (1 << k, 1 << k):
        raise DimensionError(f"{matrix.shape} matrix on {k} qubits")
    batch = state.shape[:-1]
    nb = len(batch)
    psi = state.reshape(batch + (2,) * n)
    axes = [nb + q for q in qubits]
    out = np.tensordot(matrix.reshape((2,) * (2 * k)), psi, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes)
    return out.reshape(state.shape)


def apply_hadamard(state: StateVector, qubit: int) -> StateVector:
    return apply_unitary(state, _H, (qubit,))


def apply_cz(state: StateVector, q1: int, q2: int) -> StateVector:
    n = num_qubits(state)
    _check_qubits((q1, q2), n)
    idx = np.arange(1 << n)
    both = ((idx >> (n - 1 - q1)) & 1) & ((idx >> (n - 1 - q2)) & 1)
    return state * (1 - 2 * both)


def apply_pauli_rotation(state: StateVector, p: PauliString, angle) -> StateVector:
    """``exp(-i angle P) |psi>`` as ``cos(angle) psi - i sin(angle) P psi``.

    ``angle`` may be an array matching the batch shape of ``state``.
    """
    if p.n_qubits != num_qubits(state):
        raise DimensionError(f"{p.n_qubits}-qubit Pauli on {num_qubits(state)}-qubit state")
    angle = np.asarray(angle, dtype=float)[..., None]
    return np.cos(angle) * state - 1j * np.sin(angle) * p.apply(state)


def apply_gate(state: StateVector, gate: Gate, params=None) -> StateVector:
    if isinstance(gate, Hadamard):
        return apply_hadamard(state, gate.qubit)
    if isinstance(gate, CZ):
        return apply_cz(state, gate.q1, gate.q2)
    if isinstance(gate, PauliRotation):
        if gate.slot is not None and params is None:
            raise ValueError("parameterized rotation needs a parameter vector")
        return apply_pauli_rotation(state, gate.pauli, gate.angle(params))
    if isinstance(gate, Unitary):
        return apply_unitary(state, gate.matrix, gate.qubits)
    raise TypeError(f"unknown gate {gate!r}")


def overlap(a: StateVector, b: StateVector) -> complex | np.ndarray:
    """``<a|b>`` over the last axis."""
    if a.shape[-1] != b.shape[-1]:
        raise DimensionError(f"states of length {a.shape[-1]} and {b.shape[-1]}")
    return np.sum(a.conj() * b, axis=-1)


def fidelity(a: StateVector, b: StateVector) -> float | np.ndarray:
    return np.abs(overlap(a, b)) ** 2


def expectation(state: StateVector, op: PauliSum | PauliString) -> float:
    return float(np.real(overlap(state, op.apply(state))))


def partial_trace(rho: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    """Reduced density matrix on ``keep`` (result ordered by ascending qubit)."""
    n = num_qubits(rho)
    keep = sorted(set(keep))
    if not keep:
        raise DimensionError("keep set is empty")
    _check_qubits(keep, n)
    if rho.shape != (1 << n, 1 << n):
        raise DimensionError(f"density matrix shape {rho.shape}")
    t = rho.reshape((2,) * (2 * n))
    letters = [chr(ord("a") + i) for i in range(2 * n)]
    ins = letters[:n] + [letters[n + q] if q in keep else letters[q] for q in range(n)]
    outs = [letters[q] for q in keep] + [letters[n + q] for q in keep]
    red = np.einsum("".join(ins) + "->" + "".join(outs), t)
    d = 1 << len(keep)
    return red.reshape(d, d)


def jacobi_eigh(matrix: np.ndarray, tol: float = JACOBI_TOL, max_sweeps: int = 100):
    """Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi rotations.

    Iterates until the off-diagonal Frobenius norm is below
    ``tol * max(1, ||A||_F)``. Returns ``(eigenvalues, eigenvectors)`` with
    ``A = V diag(w) V^H``.
    """
    a = np.array(matrix, dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    threshold = tol * max(1.0, float(np.linalg.norm(a)))
    diag_mask = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        if np.linalg.norm(a[diag_mask]) < threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag < 1e-300:
                    continue
                phase = apq / mag
                theta = 0.5 * math.atan2(2 * mag, a[p, p].real - a[q, q].real)
                c, s = math.cos(theta), math.sin(theta)
                # phase fix makes the (p, q) entry real, then a real rotation zeroes it
                g = np.array([[c, -s], [s * phase.conjugate(), c * phase.conjugate()]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ g
                a[idx, :] = g.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                v[:, idx] = v[:, idx] @ g
    else:
        raise RuntimeError("Jacobi iteration did not converge")
    return np.real(np.diag(a)).copy(), v


def _as_hermitian_matrix(h: PauliSum | np.ndarray) -> np.ndarray:
    if isinstance(h, PauliSum):
        return h.to_dense()
    m = np.asarray(h, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] > 1 << MAX_DENSE_QUBITS:
        raise CapacityError("matrix too large")
    if np.max(np.abs(m - m.conj().T), initial=0.0) > HERMITIAN_TOL:
        raise NotHermitianError("operator is not Hermitian")
    return m


def exact_unitary(h: PauliSum | np.ndarray, t: float) -> np.ndarray:
    """``exp(-i h t)`` from a spectral decomposition of ``h``."""
    m = _as_hermitian_matrix(h)
    w, v = jacobi_eigh(m)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def embed(matrix: np.ndarray, qubits: Sequence[int], n_qubits: int) -> np.ndarray:
    """Full ``2**n``-dimensional matrix of ``matrix`` acting on ``qubits``."""
    dim = 1 << n_qubits
    # rows of the identity are basis states; row i of the result is U|i>
    images = apply_unitary(np.eye(dim, dtype=complex), matrix, qubits)
    return images.T.copy()
