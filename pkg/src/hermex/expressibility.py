"""Expressibility of circuit families as KL divergence from Haar fidelity statistics.

For ``N = 2**n`` the fidelity between two Haar-random states follows
``P(f) = (N - 1)(1 - f)^(N - 2)``, whose mass on a bin ``[a, b]`` is
``(1 - a)^(N-1) - (1 - b)^(N-1)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .circuits import Circuit, build_two_body_ansatz, concat
from .errors import DimensionError
from .gates import CZ, Hadamard, PauliRotation, Unitary
from .pauli import PauliString, PauliSum
from .simulator import apply_gate, overlap, zero_state

TEMPLATES = ("circuit1", "circuit2", "circuit3", "ours")


@dataclass(frozen=True)
class ExprConfig:
    template: str = "circuit1"
    n_samples: int = 5000
    n_bins: int = 75
    n_qubits: int = 4
    layers: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.template not in TEMPLATES:
            raise ValueError(f"unknown template {self.template!r}; choose from {TEMPLATES}")
        if self.n_samples < self.n_bins:
            raise ValueError("n_samples must be at least n_bins")
        if not 1 <= self.layers <= 5:
            raise ValueError("layers must be in 1..5")


@dataclass(frozen=True)
class ExprResult:
    histogram: np.ndarray
    kl: float
    config: ExprConfig | None = None

    def csv_row(self) -> str:
        c = self.config
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerow(
            [c.template, c.layers, repr(float(self.kl)), c.n_samples, c.n_bins, c.seed]
        )
        return buf.getvalue()


class _Slots:
    """Hands out consecutive parameter slots while a template is built."""

    def __init__(self, n: int):
        self.n = n
        self.count = 0

    def rot(self, word: PauliString, scale: float) -> PauliRotation:
        g = PauliRotation(word, self.count, scale)
        self.count += 1
        return g

    def rx(self, q: int) -> PauliRotation:
        return self.rot(PauliString.single(self.n, q, "X"), 0.5)

    def rz(self, q: int) -> PauliRotation:
        return self.rot(PauliString.single(self.n, q, "Z"), 0.5)

    def crx(self, control: int, target: int) -> list[PauliRotation]:
        # CRX(a) = exp(-i a/4 X_t) exp(+i a/4 Z_c X_t), both driven by one slot
        x_t = PauliString.single(self.n, target, "X")
        zx = PauliString.single(self.n, control, "Z") * x_t
        slot = self.count
        self.count += 1
        return [PauliRotation(x_t, slot, 0.25), PauliRotation(zx, slot, -0.25)]


def _layer(template: str, n: int) -> Circuit:
    s = _Slots(n)
    gates: list = []
    if template == "circuit1":
        for q in range(n):
            gates += [s.rx(q), s.rz(q)]
    elif template == "circuit2":
        gates += [Hadamard(q) for q in range(n)]
        gates += [CZ(q - 1, q) for q in range(n - 1, 0, -1)]
        gates += [s.rx(q) for q in range(n)]
    elif template == "circuit3":
        for q in range(n):
            gates += [s.rx(q), s.rz(q)]
        for c in range(n - 1, -1, -1):
            for t in range(n - 1, -1, -1):
                if t != c:
                    gates += s.crx(c, t)
        for q in range(n):
            gates += [s.rx(q), s.rz(q)]
    else:
        return build_two_body_ansatz(_all_two_body(n), 1.0)
    return Circuit(n, tuple(gates), s.count)


def _all_two_body(n: int) -> PauliSum:
    terms = []
    for i in range(n):
        for j in range(i + 1, n):
            for a in "XYZ":
                terms.append((1.0, PauliString.single(n, i, a) * PauliString.single(n, j, a)))
    for q in range(n):
        for a in "XZ":
            terms.append((1.0, PauliString.single(n, q, a)))
    return PauliSum(n, tuple(terms))


def template_circuit(template: str, n_qubits: int = 4, layers: int = 1) -> Circuit:
    if template not in TEMPLATES:
        raise ValueError(f"unknown template {template!r}; choose from {TEMPLATES}")
    if n_qubits < 2 and template != "circuit1":
        raise DimensionError("entangling templates need at least two qubits")
    one = _layer(template, n_qubits)
    return concat([one] * layers)


def sample_fidelities(config: ExprConfig, circuit: Circuit | None = None) -> np.ndarray:
    """``|<psi(a)|psi(b)>|^2`` for ``a, b`` i.i.d. uniform on ``[0, 2 pi)``."""
    if circuit is None:
        circuit = template_circuit(config.template, config.n_qubits, config.layers)
    if circuit.n_params == 0:
        return np.ones(config.n_samples)
    rng = np.random.default_rng(config.seed)
    size = (config.n_samples, circuit.n_params)
    a = rng.uniform(0.0, 2 * math.pi, size)
    b = rng.uniform(0.0, 2 * math.pi, size)
    psi_a = circuit.run(a)
    psi_b = circuit.run(b)
    return np.clip(np.abs(overlap(psi_a, psi_b)) ** 2, 0.0, 1.0)


def ancilla_overlap(u_theta: Circuit, u_theta_prime: Circuit, params, params_prime) -> complex:
    """``<psi(theta)|psi(theta')>`` read off an ancilla as ``<X> + i<Y>``.

    The ancilla (qubit 0) is put in ``|+>``; the system gets ``U(theta)``
    and then, controlled on the ancilla, ``U(theta') U(theta)^dag``.
    """
    if u_theta.n_qubits != u_theta_prime.n_qubits:
        raise DimensionError("circuits act on different registers")
    n = u_theta.n_qubits
    sys_q = tuple(range(1, n + 1))
    w = u_theta_prime.unitary(params_prime) @ u_theta.unitary(params).conj().T
    d = 1 << n
    ctrl = np.eye(2 * d, dtype=complex)
    ctrl[d:, d:] = w
    psi = zero_state(n + 1)
    psi = apply_gate(psi, Hadamard(0))
    psi = apply_gate(psi, Unitary(u_theta.unitary(params), sys_q))
    psi = apply_gate(psi, Unitary(ctrl, (0,) + sys_q))
    x = PauliString.single(n + 1, 0, "X")
    y = PauliString.single(n + 1, 0, "Y")
    re = float(np.real(overlap(psi, x.apply(psi))))
    im = float(np.real(overlap(psi, y.apply(psi))))
    return complex(re, im)


def haar_bin_masses(n_bins: int, dim: int) -> np.ndarray:
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    tail = (1.0 - edges) ** (dim - 1)
    return tail[:-1] - tail[1:]


def sample_haar_fidelities(n_samples: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF draws from ``(N - 1)(1 - f)^(N - 2)``."""
    u = rng.random(n_samples)
    return 1.0 - (1.0 - u) ** (1.0 / (dim - 1))


def histogram(fidelities, n_bins: int) -> np.ndarray:
    counts, _ = np.histogram(np.asarray(fidelities, dtype=float), bins=n_bins, range=(0.0, 1.0))
    return counts


def kl_vs_haar(fidelities, n_bins: int, dim: int) -> float:
    """``sum_i p_i ln(p_i / q_i)`` over bins with ``p_i > 0``."""
    if dim < 2:
        raise DimensionError("dimension must be at least 2")
    fidelities = np.asarray(fidelities, dtype=float)
    if fidelities.size == 0:
        raise ValueError("no fidelity samples")
    p = histogram(fidelities, n_bins) / fidelities.size
    q = haar_bin_masses(n_bins, dim)
    nz = p > 0
    # q underflows to 0 only for huge N in the last bins; floor it so KL stays finite
    q = np.maximum(q[nz], np.finfo(float).tiny)
    return float(max(0.0, np.sum(p[nz] * np.log(p[nz] / q))))


def expressibility(config: ExprConfig) -> ExprResult:
    f = sample_fidelities(config)
    return ExprResult(histogram(f, config.n_bins), kl_vs_haar(f, config.n_bins, 1 << config.n_qubits), config)
