"""Lie-Trotter product simulation and density-matrix exponentiation (DME)."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DimensionError
from .pauli import PauliString, PauliSum
from .simulator import (
    apply_pauli_rotation,
    check_density_matrix,
    exact_unitary,
    num_qubits,
    partial_trace,
)


@dataclass(frozen=True)
class TrotterPlan:
    h: PauliSum
    t: float
    n_steps: int

    def __post_init__(self):
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")

    @property
    def dt(self) -> float:
        return self.t / self.n_steps

    def terms(self):
        return [(c, p) for c, p in self.h.without_identity()]

    def gate_count(self) -> int:
        return self.n_steps * len(self.terms())

    def layers_per_step(self) -> int:
        """Greedy packing of one product pass into layers of disjoint-support rotations."""
        level: dict[int, int] = {}
        depth = 0
        for _, p in self.terms():
            d = 1 + max((level.get(q, 0) for q in p.support), default=0)
            for q in p.support:
                level[q] = d
            depth = max(depth, d)
        return depth

    def depth(self) -> int:
        return self.n_steps * self.layers_per_step()


def trotter_evolve(plan: TrotterPlan, psi: np.ndarray) -> np.ndarray:
    """``(prod_i exp(-i c_i P_i dt))^n |psi>`` with terms applied in list order."""
    if num_qubits(psi) != plan.h.n_qubits:
        raise DimensionError(f"{plan.h.n_qubits}-qubit plan on {num_qubits(psi)}-qubit state")
    terms = plan.terms()
    # identity terms only add a global phase
    phase = np.exp(-1j * plan.t * plan.h.coefficient_of(PauliString.identity(plan.h.n_qubits)))
    for _ in range(plan.n_steps):
        for c, p in terms:
            psi = apply_pauli_rotation(psi, p, c * plan.dt)
    return phase * psi


def swap_operator(n_qubits: int) -> np.ndarray:
    """Swap of two ``n``-qubit registers as a ``4**n`` permutation matrix."""
    d = 1 << n_qubits
    idx = np.arange(d * d)
    a, b = divmod(idx, d)
    s = np.zeros((d * d, d * d), dtype=complex)
    s[b * d + a, idx] = 1.0
    return s


def dme_step(rho: np.ndarray, sigma: np.ndarray, dt: float) -> np.ndarray:
    """``tr_1[exp(-iS dt) (rho (x) sigma) exp(iS dt)]`` with ``exp(-iS dt) = cos dt I - i sin dt S``."""
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape or rho.ndim != 2:
        raise DimensionError(f"rho {rho.shape} and sigma {sigma.shape} differ")
    n = num_qubits(rho)
    s = swap_operator(n)
    u = math.cos(dt) * np.eye(s.shape[0]) - 1j * math.sin(dt) * s
    joint = u @ np.kron(rho, sigma) @ u.conj().T
    return partial_trace(joint, range(n, 2 * n))


@dataclass(frozen=True)
class DmePlan:
    rho: np.ndarray
    sigma: np.ndarray
    t: float
    n_copies: int

    def __post_init__(self):
        if self.n_copies < 1:
            raise ValueError("n_copies must be >= 1")
        if np.shape(self.rho) != np.shape(self.sigma):
            raise DimensionError("rho and sigma dimensions differ")
        check_density_matrix(np.asarray(self.rho), tol=1e-9)
        check_density_matrix(np.asarray(self.sigma), tol=1e-9)

    @property
    def copies_consumed(self) -> int:
        return self.n_copies

    def depth(self) -> int:
        return self.n_copies


def dme_evolve(plan: DmePlan) -> np.ndarray:
    dt = plan.t / plan.n_copies
    sigma = np.asarray(plan.sigma, dtype=complex)
    for _ in range(plan.n_copies):
        sigma = dme_step(plan.rho, sigma, dt)
    return sigma


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Half the trace norm of ``a - b`` for Hermitian inputs."""
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(a - b))))


def exact_dme_target(rho: np.ndarray, sigma: np.ndarray, t: float) -> np.ndarray:
    u = exact_unitary(rho, t)
    return u @ sigma @ u.conj().T


@dataclass(frozen=True)
class BaselineSummary:
    method: str
    t: float
    n: int
    final_infidelity: float
    depth: int
    gate_count: int

    FIELDS = ("method", "t", "n", "final_infidelity", "depth", "gate_count")

    def csv_row(self) -> str:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerow(
            [self.method, repr(self.t), self.n, repr(self.final_infidelity), self.depth, self.gate_count]
        )
        return buf.getvalue()

    def as_dict(self) -> dict:
        return asdict(self)


def trotter_process_infidelity(h: PauliSum, t: float, n_steps: int) -> float:
    """``1 - |Tr(V^dag U_trot)/d|^2``: the Choi-state infidelity of the product formula."""
    plan = TrotterPlan(h, t, n_steps)
    d = 1 << h.n_qubits
    cols = trotter_evolve(plan, np.eye(d, dtype=complex))
    # rows of ``cols`` are U|i>; Tr(V^dag U) = sum_i <i|V^dag U|i>
    v = exact_unitary(h, t)
    tr = np.sum(v.conj().T * cols)
    return float(max(0.0, 1.0 - abs(tr / d) ** 2))


def summarize_trotter(h: PauliSum, t: float, n_steps: int) -> BaselineSummary:
    plan = TrotterPlan(h, t, n_steps)
    return BaselineSummary(
        "trotter", t, n_steps, trotter_process_infidelity(h, t, n_steps), plan.depth(), plan.gate_count()
    )


def summarize_dme(rho: np.ndarray, sigma: np.ndarray, t: float, n_copies: int) -> BaselineSummary:
    plan = DmePlan(rho, sigma, t, n_copies)
    out = dme_evolve(plan)
    target = exact_dme_target(rho, sigma, t)
    err = trace_distance(out, target)
    return BaselineSummary("dme", t, n_copies, err, plan.depth(), n_copies)
