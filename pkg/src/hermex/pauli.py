"""Pauli strings and real-weighted Pauli sums.

A Pauli string on ``n`` qubits is stored as two integer bit masks plus a
phase exponent: the operator is ``i**phase_exp`` times the tensor product
whose factor on qubit ``q`` is I, X, Z or Y according to bits ``q`` of
``x_mask`` and ``z_mask`` (both set means the Hermitian Y, not XZ).

Qubit 0 is the leftmost tensor factor. In dense vectors and matrices qubit 0
is the most significant bit of the basis index (big-endian), so the label
``"XI"`` realizes as ``np.kron(X, I)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator

import numpy as np

from .errors import CapacityError, DimensionError, NotHermitianError, ParseError

MAX_DENSE_QUBITS = 12
COEFF_TOL = 1e-12

_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_BITS_LETTER = {v: k for k, v in _LETTER_BITS.items()}


def _single_qubit_phase(x1: int, z1: int, x2: int, z2: int) -> int:
    # exponent g with P1 P2 = i**g P(x1^x2, z1^z2), Hermitian-Y convention
    if x1 == 0 and z1 == 0:
        return 0
    if x1 == 1 and z1 == 1:
        return z2 - x2
    if x1 == 1:
        return z2 * (2 * x2 - 1)
    return x2 * (1 - 2 * z2)


@dataclass(frozen=True)
class PauliString:
    n_qubits: int
    x_mask: int = 0
    z_mask: int = 0
    phase_exp: int = 0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        limit = 1 << self.n_qubits
        if not (0 <= self.x_mask < limit and 0 <= self.z_mask < limit):
            raise ValueError(f"masks must fit in {self.n_qubits} bits")
        object.__setattr__(self, "phase_exp", self.phase_exp % 4)

    @classmethod
    def from_label(cls, label: str) -> PauliString:
        """Build from a word such as ``"XZIY"``; qubit 0 is the first letter."""
        word = label.strip().upper()
        if not word or any(c not in _LETTER_BITS for c in word):
            raise ParseError(f"malformed Pauli word {label!r}")
        x = z = 0
        for q, c in enumerate(word):
            xb, zb = _LETTER_BITS[c]
            x |= xb << q
            z |= zb << q
        return cls(len(word), x, z)

    @classmethod
    def identity(cls, n_qubits: int) -> PauliString:
        return cls(n_qubits)

    @classmethod
    def single(cls, n_qubits: int, qubit: int, letter: str) -> PauliString:
        word = ["I"] * n_qubits
        word[qubit] = letter
        return cls.from_label("".join(word))

    @property
    def label(self) -> str:
        return "".join(
            _BITS_LETTER[((self.x_mask >> q) & 1, (self.z_mask >> q) & 1)]
            for q in range(self.n_qubits)
        )

    @property
    def support(self) -> tuple[int, ...]:
        mask = self.x_mask | self.z_mask
        return tuple(q for q in range(self.n_qubits) if (mask >> q) & 1)

    @property
    def weight(self) -> int:
        return (self.x_mask | self.z_mask).bit_count()

    @property
    def is_identity(self) -> bool:
        return self.x_mask == 0 and self.z_mask == 0

    @property
    def coefficient(self) -> complex:
        return 1j**self.phase_exp

    def unsigned(self) -> PauliString:
        """Same string with the phase stripped."""
        return PauliString(self.n_qubits, self.x_mask, self.z_mask)

    def commutes_with(self, other: PauliString) -> bool:
        _check_same_size(self, other)
        sym = (self.x_mask & other.z_mask).bit_count() + (self.z_mask & other.x_mask).bit_count()
        return sym % 2 == 0

    def __mul__(self, other: PauliString) -> PauliString:
        return multiply(self, other)

    def __str__(self) -> str:
        prefix = ("", "i", "-", "-i")[self.phase_exp]
        return prefix + self.label

    def action(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(perm, phases)`` with ``P @ psi == (phases * psi)[perm]``."""
        return _action(self.n_qubits, self.x_mask, self.z_mask, self.phase_exp)

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """Apply the string to the last axis of ``psi`` (batched states allowed)."""
        perm, phases = self.action()
        if psi.shape[-1] != perm.size:
            raise DimensionError(f"state of length {psi.shape[-1]} vs {self.n_qubits}-qubit Pauli")
        return (phases * psi)[..., perm]

    def to_dense(self) -> np.ndarray:
        if self.n_qubits > MAX_DENSE_QUBITS:
            raise CapacityError(f"{self.n_qubits} qubits exceeds dense limit {MAX_DENSE_QUBITS}")
        perm, phases = self.action()
        dim = perm.size
        mat = np.zeros((dim, dim), dtype=complex)
        cols = np.arange(dim)
        mat[perm, cols] = phases
        return mat


def _index_mask(mask: int, n: int) -> int:
    return sum(1 << (n - 1 - q) for q in range(n) if (mask >> q) & 1)


@lru_cache(maxsize=4096)
def _action(n: int, x_mask: int, z_mask: int, phase_exp: int) -> tuple[np.ndarray, np.ndarray]:
    idx = np.arange(1 << n, dtype=np.int64)
    ix = _index_mask(x_mask, n)
    iz = _index_mask(z_mask, n)
    n_y = (x_mask & z_mask).bit_count()
    signs = 1 - 2 * (np.bitwise_count(idx & iz).astype(np.int64) & 1)
    phases = (1j ** ((phase_exp + n_y) % 4)) * signs
    perm = idx ^ ix
    perm.setflags(write=False)
    phases.setflags(write=False)
    return perm, phases


def _check_same_size(a: PauliString, b: PauliString) -> None:
    if a.n_qubits != b.n_qubits:
        raise DimensionError(f"{a.n_qubits}-qubit vs {b.n_qubits}-qubit Pauli strings")


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Exact product ``a @ b``; the phase is tracked as an exponent of i."""
    _check_same_size(a, b)
    g = a.phase_exp + b.phase_exp
    for q in range(a.n_qubits):
        g += _single_qubit_phase(
            (a.x_mask >> q) & 1, (a.z_mask >> q) & 1, (b.x_mask >> q) & 1, (b.z_mask >> q) & 1
        )
    return PauliString(a.n_qubits, a.x_mask ^ b.x_mask, a.z_mask ^ b.z_mask, g)


def commutator(a: PauliString, b: PauliString) -> tuple[complex, PauliString] | None:
    """``[a, b]`` as ``(coefficient, unsigned string)``, or None when they commute.

    Pauli strings either commute or anticommute, and in the latter case
    ``[a, b] = 2ab``.
    """
    if a.commutes_with(b):
        return None
    prod = multiply(a, b)
    return 2 * prod.coefficient, prod.unsigned()


@dataclass(frozen=True)
class PauliSum:
    """Real-weighted sum of unsigned Pauli strings (a Hermitian operator).

    Construction canonicalizes: duplicate strings are merged, terms whose
    merged coefficient is below ``COEFF_TOL`` are dropped, and first-appearance
    order is kept so that term indices are stable.
    """

    n_qubits: int
    terms: tuple[tuple[float, PauliString], ...] = field(default=())

    def __post_init__(self):
        merged: dict[tuple[int, int], float] = {}
        for coeff, p in self.terms:
            if p.n_qubits != self.n_qubits:
                raise DimensionError(f"term {p} does not act on {self.n_qubits} qubits")
            c = complex(coeff) * p.coefficient
            if abs(c.imag) > COEFF_TOL:
                raise NotHermitianError(f"term {coeff} * {p} is not Hermitian")
            key = (p.x_mask, p.z_mask)
            merged[key] = merged.get(key, 0.0) + c.real
        canon = tuple(
            (c, PauliString(self.n_qubits, x, z))
            for (x, z), c in merged.items()
            if abs(c) >= COEFF_TOL
        )
        object.__setattr__(self, "terms", canon)

    @classmethod
    def from_labels(cls, pairs: Iterable[tuple[float, str]]) -> PauliSum:
        pairs = [(float(c), PauliString.from_label(w)) for c, w in pairs]
        if not pairs:
            raise ValueError("need at least one term to infer the qubit count")
        return cls(pairs[0][1].n_qubits, tuple(pairs))

    @classmethod
    def from_dense(cls, matrix: np.ndarray, tol: float = COEFF_TOL) -> PauliSum:
        """Pauli decomposition ``c_P = Tr(P M) / 2**n`` of a Hermitian matrix."""
        matrix = np.asarray(matrix, dtype=complex)
        dim = matrix.shape[0]
        n = dim.bit_length() - 1
        if matrix.shape != (dim, dim) or dim != 1 << n or n < 1:
            raise DimensionError(f"matrix shape {matrix.shape} is not 2^n x 2^n")
        if n > MAX_DENSE_QUBITS:
            raise CapacityError(f"{n} qubits exceeds dense limit {MAX_DENSE_QUBITS}")
        if not np.allclose(matrix, matrix.conj().T, atol=1e-9):
            raise NotHermitianError("matrix is not Hermitian")
        cols = np.arange(dim)
        terms = []
        for z in range(dim):
            for x in range(dim):
                p = PauliString(n, x, z)
                perm, phases = p.action()
                # Tr(P M) = sum_i <i|P M|i> = sum_j phases[j] M[j, j^x]
                tr = np.sum(phases * matrix[cols, perm])
                c = tr.real / dim
                if abs(c) >= tol:
                    terms.append((c, p))
        return cls(n, tuple(sorted(terms, key=lambda cp: (cp[1].weight, cp[1].label))))

    def __iter__(self) -> Iterator[tuple[float, PauliString]]:
        return iter(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms], dtype=float)

    @property
    def strings(self) -> tuple[PauliString, ...]:
        return tuple(p for _, p in self.terms)

    def coefficient_of(self, p: PauliString) -> float:
        for c, q in self.terms:
            if (q.x_mask, q.z_mask) == (p.x_mask, p.z_mask):
                return c
        return 0.0

    def __add__(self, other: PauliSum) -> PauliSum:
        if other.n_qubits != self.n_qubits:
            raise DimensionError("cannot add sums on different registers")
        return PauliSum(self.n_qubits, self.terms + other.terms)

    def __mul__(self, scalar: float) -> PauliSum:
        return PauliSum(self.n_qubits, tuple((scalar * c, p) for c, p in self.terms))

    __rmul__ = __mul__

    def without_identity(self) -> PauliSum:
        return PauliSum(self.n_qubits, tuple((c, p) for c, p in self.terms if not p.is_identity))

    def restrict_weight(self, max_weight: int) -> PauliSum:
        """Keep only terms acting on at most ``max_weight`` qubits."""
        return PauliSum(self.n_qubits, tuple((c, p) for c, p in self.terms if p.weight <= max_weight))

    def is_commuting(self) -> bool:
        ps = self.strings
        return all(a.commutes_with(b) for i, a in enumerate(ps) for b in ps[i + 1 :])

    def apply(self, psi: np.ndarray) -> np.ndarray:
        out = np.zeros_like(psi, dtype=complex)
        for c, p in self.terms:
            out += c * p.apply(psi)
        return out

    def to_dense(self) -> np.ndarray:
        if self.n_qubits > MAX_DENSE_QUBITS:
            raise CapacityError(f"{self.n_qubits} qubits exceeds dense limit {MAX_DENSE_QUBITS}")
        dim = 1 << self.n_qubits
        mat = np.zeros((dim, dim), dtype=complex)
        cols = np.arange(dim)
        for c, p in self.terms:
            perm, phases = p.action()
            mat[perm, cols] += c * phases
        return mat

    def to_text(self) -> str:
        return "".join(f"{c!r} {p.label}\n" for c, p in self.terms)

    @classmethod
    def from_text(cls, text: str) -> PauliSum:
        """Parse lines of ``coefficient WORD``; ``#`` starts a comment."""
        pairs = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(f"line {lineno}: expected 'coefficient WORD', got {raw!r}")
            try:
                coeff = float(parts[0])
            except ValueError:
                raise ParseError(f"line {lineno}: bad coefficient {parts[0]!r}") from None
            try:
                p = PauliString.from_label(parts[1])
            except ParseError as exc:
                raise ParseError(f"line {lineno}: {exc}") from None
            if pairs and p.n_qubits != pairs[0][1].n_qubits:
                raise ParseError(f"line {lineno}: word length {p.n_qubits} differs from earlier terms")
            pairs.append((coeff, p))
        if not pairs:
            raise ParseError("no terms found")
        return cls(pairs[0][1].n_qubits, tuple(pairs))

    def __str__(self) -> str:
        return " + ".join(f"{c:g}*{p.label}" for c, p in self.terms) or "0"


def to_dense(op: PauliSum | PauliString) -> np.ndarray:
    return op.to_dense()
