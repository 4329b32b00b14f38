"""Built-in target operators and file loading.

Built-ins: the two-qubit Bell projector, the three-qubit GHZ projector and a
four-spin all-Z NMR Hamiltonian read from a parameter file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ParseError
from .pauli import PauliString, PauliSum

DEFAULT_TIMES = (0.05, 0.1, 0.2)
BUILTINS = ("bell", "ghz", "crotonic")


@dataclass(frozen=True)
class ProblemInstance:
    name: str
    n_qubits: int
    operator: PauliSum
    times: tuple[float, ...] = DEFAULT_TIMES
    description: str = field(default="", compare=False)

    def __post_init__(self):
        if self.operator.n_qubits != self.n_qubits:
            raise ValueError("operator size does not match n_qubits")
        if any(t <= 0 for t in self.times):
            raise ValueError("evolution times must be positive")

    def dense(self) -> np.ndarray:
        return self.operator.to_dense()

    def ansatz_terms(self) -> PauliSum:
        """Operator restricted to the one- and two-body terms an ansatz can hold."""
        return self.operator.without_identity().restrict_weight(2)


def cat_state_projector(n: int) -> np.ndarray:
    d = 1 << n
    rho = np.zeros((d, d))
    rho[0, 0] = rho[0, -1] = rho[-1, 0] = rho[-1, -1] = 0.5
    return rho


def parse_nmr_parameters(text: str) -> tuple[dict[int, float], dict[tuple[int, int], float]]:
    nu: dict[int, float] = {}
    coupling: dict[tuple[int, int], float] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "nu" and len(parts) == 3:
                nu[int(parts[1])] = float(parts[2])
            elif parts[0] == "J" and len(parts) == 4:
                j, k = sorted((int(parts[1]), int(parts[2])))
                if j == k:
                    raise ValueError("coupling needs two distinct spins")
                coupling[(j, k)] = float(parts[3])
            else:
                raise ValueError("expected 'nu j value' or 'J j k value'")
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {raw!r}: {exc}") from None
    return nu, coupling


def nmr_hamiltonian(nu: dict[int, float], coupling: dict[tuple[int, int], float], n: int | None = None) -> PauliSum:
    """``sum_j nu_j/2 Z_j + sum_{j<k} (pi/2) J_jk Z_j Z_k``."""
    if n is None:
        n = 1 + max([*nu, *(k for pair in coupling for k in pair)])
    terms = [(v / 2, PauliString.single(n, j, "Z")) for j, v in sorted(nu.items())]
    for (j, k), v in sorted(coupling.items()):
        terms.append((math.pi / 2 * v, PauliString.single(n, j, "Z") * PauliString.single(n, k, "Z")))
    return PauliSum(n, tuple(terms))


def crotonic(path: str | Path | None = None) -> ProblemInstance:
    if path is None:
        text = resources.files("hermex").joinpath("data/crotonic.txt").read_text()
    else:
        text = Path(path).read_text()
    h = nmr_hamiltonian(*parse_nmr_parameters(text), n=4)
    return ProblemInstance("crotonic", 4, h, DEFAULT_TIMES, "four-spin all-Z NMR Hamiltonian")


def builtin(name: str) -> ProblemInstance:
    if name == "bell":
        return ProblemInstance("bell", 2, PauliSum.from_dense(cat_state_projector(2)), description="Bell-state projector")
    if name == "ghz":
        return ProblemInstance("ghz", 3, PauliSum.from_dense(cat_state_projector(3)), description="GHZ-state projector")
    if name == "crotonic":
        return crotonic()
    raise KeyError(f"unknown problem {name!r}; choose from {BUILTINS}")


def _looks_like_pauli(text: str) -> bool:
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            parts = line.split()
            return len(parts) == 2 and parts[1].isalpha()
    return False


def parse_dense(text: str) -> np.ndarray:
    """Rows of ``re im re im ...`` pairs, one matrix row per line."""
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            vals = [float(v) for v in line.split()]
        except ValueError:
            raise ParseError(f"line {lineno}: non-numeric entry in {raw!r}") from None
        if len(vals) % 2:
            raise ParseError(f"line {lineno}: odd number of values (need re/im pairs)")
        rows.append(np.array(vals[0::2]) + 1j * np.array(vals[1::2]))
    if not rows or any(len(r) != len(rows) for r in rows):
        raise ParseError("dense matrix must be square")
    return np.array(rows)


def format_dense(matrix: np.ndarray) -> str:
    lines = []
    for row in np.asarray(matrix, dtype=complex):
        lines.append(" ".join(f"{float(z.real)!r} {float(z.imag)!r}" for z in row))
    return "\n".join(lines) + "\n"


def load(path: str | Path, times=DEFAULT_TIMES) -> ProblemInstance:
    """Read a Pauli-sum file (``coefficient WORD`` lines) or a dense matrix file."""
    path = Path(path)
    text = path.read_text()
    if _looks_like_pauli(text):
        h = PauliSum.from_text(text)
    else:
        h = PauliSum.from_dense(parse_dense(text))
    return ProblemInstance(path.stem, h.n_qubits, h, tuple(times))


def save(instance: ProblemInstance, path: str | Path, fmt: str = "pauli") -> None:
    path = Path(path)
    if fmt == "pauli":
        path.write_text(instance.operator.to_text())
    elif fmt == "dense":
        path.write_text(format_dense(instance.dense()))
    else:
        raise ValueError(f"unknown format {fmt!r}")


def resolve(name_or_path: str) -> ProblemInstance:
    if name_or_path in BUILTINS:
        return builtin(name_or_path)
    p = Path(name_or_path)
    if p.is_file():
        return load(p)
    raise KeyError(f"unknown problem {name_or_path!r}; choose from {BUILTINS} or give a file path")
