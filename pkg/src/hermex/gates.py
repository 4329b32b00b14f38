"""Gate value types shared by the simulator and the circuit layer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pauli import PauliString


@dataclass(frozen=True)
class Hadamard:
    qubit: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit,)


@dataclass(frozen=True)
class CZ:
    q1: int
    q2: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.q1, self.q2)


@dataclass(frozen=True)
class PauliRotation:
    """``exp(-i * angle * P)`` with ``angle = scale * params[slot]``.

    A rotation with ``slot=None`` is frozen and uses ``angle = scale``.
    """

    pauli: PauliString
    slot: int | None
    scale: float = 1.0

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.pauli.support

    def angle(self, params) -> float | np.ndarray:
        if self.slot is None:
            return self.scale
        return self.scale * params[..., self.slot]


@dataclass(frozen=True, eq=False)
class Unitary:
    """Dense unitary acting on the listed qubits (first listed = most significant)."""

    matrix: np.ndarray
    qubits: tuple[int, ...]


Gate = Hadamard | CZ | PauliRotation | Unitary
