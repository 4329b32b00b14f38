"""Circuits over H / CZ / Pauli-rotation gates and the ansatz builders.

A :class:`Circuit` is an immutable gate list with ``n_params`` parameter
slots. Rotations reference a slot and a scale; the applied angle is
``scale * params[slot]`` and the gate is ``exp(-i angle P)``.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, ParseError, UnsupportedAnsatzError
from .gates import CZ, Gate, Hadamard, PauliRotation, Unitary
from .pauli import PauliString, PauliSum
from .simulator import apply_gate, zero_state

MAX_APQC_SYSTEM = 6


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...] = ()
    n_params: int = 0
    # optional Pauli term each slot was built from (ansatz metadata)
    slot_terms: tuple[PauliString, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        for g in self.gates:
            for q in g.qubits:
                if not 0 <= q < self.n_qubits:
                    raise DimensionError(f"gate {g} touches qubit {q} outside {self.n_qubits}")
            if isinstance(g, PauliRotation):
                if g.pauli.n_qubits != self.n_qubits:
                    raise DimensionError(f"rotation on {g.pauli.n_qubits} qubits in {self.n_qubits}-qubit circuit")
                if g.slot is not None and not 0 <= g.slot < self.n_params:
                    raise ValueError(f"slot {g.slot} outside {self.n_params} parameters")

    def __len__(self) -> int:
        return len(self.gates)

    def _params(self, params) -> np.ndarray | None:
        if self.n_params == 0:
            return None if params is None else np.asarray(params, dtype=float)
        if params is None:
            raise ValueError(f"circuit needs {self.n_params} parameters")
        params = np.asarray(params, dtype=float)
        if params.shape[-1] != self.n_params:
            raise DimensionError(f"got {params.shape[-1]} parameters, circuit has {self.n_params}")
        return params

    def apply(self, state: np.ndarray, params=None) -> np.ndarray:
        """Run the circuit on ``state``; batched params broadcast over batched states."""
        params = self._params(params)
        for g in self.gates:
            state = apply_gate(state, g, params)
        return state

    def run(self, params=None) -> np.ndarray:
        """Output state from ``|0...0>``."""
        params = self._params(params)
        psi = zero_state(self.n_qubits)
        if params is not None and params.ndim > 1:
            psi = np.broadcast_to(psi, params.shape[:-1] + psi.shape).copy()
        return self.apply(psi, params)

    def unitary(self, params=None) -> np.ndarray:
        dim = 1 << self.n_qubits
        images = self.apply(np.eye(dim, dtype=complex), params)
        return images.T.copy()

    def freeze(self, params=None) -> Circuit:
        """Same gates with every rotation angle fixed at ``params``."""
        params = self._params(params)
        gates = tuple(
            PauliRotation(g.pauli, None, float(g.angle(params))) if isinstance(g, PauliRotation) else g
            for g in self.gates
        )
        return Circuit(self.n_qubits, gates, 0)

    def then(self, other: Circuit) -> Circuit:
        """``other`` applied after ``self``; ``other``'s slots follow ours."""
        if other.n_qubits != self.n_qubits:
            raise DimensionError("register size mismatch")
        shifted = tuple(
            replace(g, slot=g.slot + self.n_params)
            if isinstance(g, PauliRotation) and g.slot is not None
            else g
            for g in other.gates
        )
        terms = None
        if self.slot_terms is not None and other.slot_terms is not None:
            terms = self.slot_terms + other.slot_terms
        return Circuit(self.n_qubits, self.gates + shifted, self.n_params + other.n_params, terms)

    def repeat(self, times: int) -> Circuit:
        if self.n_params:
            raise ValueError("repeat only frozen circuits")
        return Circuit(self.n_qubits, self.gates * times, 0)

    def lift(self, n_total: int) -> Circuit:
        """Same circuit embedded on the first ``n_qubits`` of a larger register."""
        if n_total < self.n_qubits:
            raise DimensionError("cannot lift to a smaller register")

        def widen(g):
            if isinstance(g, PauliRotation):
                p = g.pauli
                return replace(g, pauli=PauliString(n_total, p.x_mask, p.z_mask, p.phase_exp))
            return g

        terms = None
        if self.slot_terms is not None:
            terms = tuple(PauliString(n_total, p.x_mask, p.z_mask) for p in self.slot_terms)
        return Circuit(n_total, tuple(widen(g) for g in self.gates), self.n_params, terms)

    @property
    def rotations(self) -> list[PauliRotation]:
        return [g for g in self.gates if isinstance(g, PauliRotation)]

    def depth(self) -> int:
        """As-soon-as-possible layer count over qubit wires."""
        level = [0] * self.n_qubits
        for g in self.gates:
            qs = g.qubits
            if not qs:
                continue
            d = 1 + max(level[q] for q in qs)
            for q in qs:
                level[q] = d
        return max(level, default=0)

    def to_text(self, values=None) -> str:
        lines = [f"QUBITS {self.n_qubits}", f"PARAMS {self.n_params}"]
        for g in self.gates:
            if isinstance(g, Hadamard):
                lines.append(f"H {g.qubit}")
            elif isinstance(g, CZ):
                lines.append(f"CZ {g.q1} {g.q2}")
            elif isinstance(g, PauliRotation):
                slot = "-" if g.slot is None else str(g.slot)
                sign = "-" if g.pauli.phase_exp == 2 else ""
                lines.append(f"ROT {sign}{g.pauli.label} {slot} {g.scale!r}")
            else:
                raise TypeError(f"{type(g).__name__} gates have no text form")
        if values is not None:
            values = np.asarray(values, dtype=float)
            if values.shape != (self.n_params,):
                raise DimensionError("values do not match parameter count")
            lines.append("VALUES " + " ".join(repr(float(v)) for v in values))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> tuple[Circuit, np.ndarray | None]:
        """Parse the line format written by :meth:`to_text`; returns ``(circuit, values)``."""
        n = n_params = None
        gates: list[Gate] = []
        values = None
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            op, *args = line.split()
            try:
                if op == "QUBITS":
                    n = int(args[0])
                elif op == "PARAMS":
                    n_params = int(args[0])
                elif op == "H":
                    gates.append(Hadamard(int(args[0])))
                elif op == "CZ":
                    gates.append(CZ(int(args[0]), int(args[1])))
                elif op == "ROT":
                    word, slot, scale = args
                    phase = 0
                    if word.startswith("-"):
                        word, phase = word[1:], 2
                    p = PauliString.from_label(word)
                    p = PauliString(p.n_qubits, p.x_mask, p.z_mask, phase)
                    gates.append(PauliRotation(p, None if slot == "-" else int(slot), float(scale)))
                elif op == "VALUES":
                    values = np.array([float(a) for a in args])
                else:
                    raise ParseError(f"unknown instruction {op!r}")
            except (ValueError, IndexError) as exc:
                raise ParseError(f"line {lineno}: {raw!r}: {exc}") from None
        if n is None or n_params is None:
            raise ParseError("missing QUBITS or PARAMS header")
        return cls(n, tuple(gates), n_params), values


def invert(circuit: Circuit, params=None) -> Circuit:
    """Parameter-free inverse of ``circuit`` bound at ``params``."""
    params = circuit._params(params)
    gates = []
    for g in reversed(circuit.gates):
        if isinstance(g, PauliRotation):
            gates.append(PauliRotation(g.pauli, None, -float(g.angle(params))))
        elif isinstance(g, Unitary):
            gates.append(Unitary(g.matrix.conj().T, g.qubits))
        else:
            gates.append(g)
    return Circuit(circuit.n_qubits, tuple(gates), 0)


@dataclass(frozen=True)
class ApqcLayout:
    """Ancilla-assisted layout: system qubits ``0..n-1``, ancilla ``n..2n-1``."""

    n_system: int
    n_ancilla: int
    encode: Circuit
    decode: Circuit

    @property
    def n_total(self) -> int:
        return self.n_system + self.n_ancilla

    def system_qubits(self) -> tuple[int, ...]:
        return tuple(range(self.n_system))

    def bell_state(self) -> np.ndarray:
        return self.encode.run()


def build_apqc(n_system: int) -> ApqcLayout:
    if not 1 <= n_system <= MAX_APQC_SYSTEM:
        raise ValueError(f"n_system must be in 1..{MAX_APQC_SYSTEM}, got {n_system}")
    n = n_system
    sys_q = range(n)
    anc_q = range(n, 2 * n)
    enc: list[Gate] = [Hadamard(q) for q in sys_q]
    enc += [Hadamard(q) for q in anc_q]
    enc += [CZ(q, q + n) for q in sys_q]
    enc += [Hadamard(q) for q in anc_q]
    encode = Circuit(2 * n, tuple(enc))
    return ApqcLayout(n, n, encode, invert(encode))


def group_pauli_pairs(n: int) -> list[list[tuple[int, int]]]:
    """Partition all qubit pairs into ``n`` groups of qubit-disjoint pairs.

    Walks the upper triangle row by row with a free-slot label matrix: the
    diagonal entry ``i`` claims qubit ``i`` in group ``i`` and each pair goes to
    the first group, searched cyclically from ``(i + j) / 2 mod n``, in which
    both of its qubits are still free. For odd ``n`` the first candidate always
    fits (round-robin schedule); even ``n`` reuses the ``n - 1`` schedule and
    pairs each group's idle qubit with qubit ``n - 1``. Trailing groups may be
    empty.
    """
    if n < 2:
        raise ValueError("need at least two qubits")
    m = n if n % 2 else n - 1
    free = [[True] * m for _ in range(m)]
    groups: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    inv2 = pow(2, -1, m) if m > 1 else 0
    for i in range(m):
        for j in range(i, m):
            if i == j:
                if free[i][i]:
                    free[i][i] = False
                continue
            start = ((i + j) * inv2) % m
            for k in range(m):
                g = (start + k) % m
                if free[g][i] and free[g][j]:
                    groups[g].append((i, j))
                    free[g][i] = free[g][j] = False
                    break
            else:
                raise RuntimeError(f"pair {(i, j)} could not be placed")
    if m != n:
        # group g's only unused qubit is g itself, reserved by the diagonal
        for g in range(m):
            groups[g].append((g, n - 1))
    return groups


def _pair_of(p: PauliString) -> tuple[int, int]:
    a, b = p.support
    return (a, b)


def build_two_body_ansatz(h: PauliSum, t: float, layers: int = 1) -> Circuit:
    """Layered Pauli-rotation ansatz with one slot per non-identity term of ``h``.

    Two-body rotations are laid out group by group (see
    :func:`group_pauli_pairs`), each with scale ``t``. A single-qubit term
    goes right after the first layer that touches its qubit, or at the end if
    no two-body term does. ``layers > 1`` repeats the whole block with fresh
    slots. Identity terms only contribute a global phase and are skipped.
    """
    h = h.without_identity()
    if layers < 1:
        raise ValueError("layers must be >= 1")
    heavy = [p.label for p in h.strings if p.weight > 2]
    if heavy:
        raise UnsupportedAnsatzError(f"terms of weight > 2 not supported: {heavy}")
    n = h.n_qubits
    by_pair: dict[tuple[int, int], list[int]] = defaultdict(list)
    by_qubit: dict[int, list[int]] = defaultdict(list)
    for k, p in enumerate(h.strings):
        if p.weight == 2:
            by_pair[_pair_of(p)].append(k)
        else:
            by_qubit[p.support[0]].append(k)

    order: list[int] = []
    placed: set[int] = set()
    for group in group_pauli_pairs(n) if n >= 2 else []:
        touched = []
        for pair in group:
            for k in by_pair.get(pair, []):
                order.append(k)
                touched.extend(pair)
        for q in dict.fromkeys(touched):
            if q not in placed and q in by_qubit:
                order.extend(by_qubit[q])
                placed.add(q)
    for q in sorted(by_qubit):
        if q not in placed:
            order.extend(by_qubit[q])

    strings = h.strings
    m = len(strings)
    gates = tuple(
        PauliRotation(strings[k], rep * m + k, t) for rep in range(layers) for k in order
    )
    return Circuit(n, gates, m * layers, strings * layers)


def build_term_ansatz(h: PauliSum, t: float) -> Circuit:
    """One rotation per non-identity term, in term order, any Pauli weight."""
    h = h.without_identity()
    gates = tuple(PauliRotation(p, k, t) for k, p in enumerate(h.strings))
    return Circuit(h.n_qubits, gates, len(gates), h.strings)


def rotation_circuit(n_qubits: int, words: Sequence[str], scale: float = 1.0) -> Circuit:
    """Convenience: one fresh slot per Pauli word, applied in order."""
    strings = tuple(PauliString.from_label(w) for w in words)
    if any(p.n_qubits != n_qubits for p in strings):
        raise DimensionError("word length does not match register")
    gates = tuple(PauliRotation(p, k, scale) for k, p in enumerate(strings))
    return Circuit(n_qubits, gates, len(gates), strings)


def concat(circuits: Iterable[Circuit]) -> Circuit:
    circuits = list(circuits)
    out = circuits[0]
    for c in circuits[1:]:
        out = out.then(c)
    return out
