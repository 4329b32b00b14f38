"""Variational compilation of ``exp(-i rho t)`` into shallow Pauli-rotation circuits.

Submodules: ``pauli`` (Pauli strings and sums), ``simulator`` (dense states),
``circuits`` (gate lists, ancilla layout, ansatz), ``baselines`` (Trotter and
DME), ``strategy1`` / ``strategy2`` (training), ``expressibility``,
``problems`` and ``cli``.
"""

__version__ = "0.1.0"

from .circuits import Circuit, build_apqc, build_two_body_ansatz, group_pauli_pairs, invert
from .pauli import PauliString, PauliSum
from .simulator import exact_unitary

__all__ = [
    "Circuit",
    "PauliString",
    "PauliSum",
    "build_apqc",
    "build_two_body_ansatz",
    "exact_unitary",
    "group_pauli_pairs",
    "invert",
]
