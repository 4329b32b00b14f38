"""Hybrid training by repeated time doubling (compression).

A first-order product step for a tiny time ``dt`` seeds the ansatz. Each
stage then trains a fresh copy of the same ansatz, at ``n_c`` times the
previous time scale, to reproduce ``n_c`` repetitions of the previous
stage. The comparison runs through the ancilla-assisted circuit, so each
objective value is a single projective probability that could be
measured on hardware. Gradients use a symmetric difference quotient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .circuits import ApqcLayout, Circuit, build_apqc, build_two_body_ansatz, invert
from .errors import DimensionError, UnsupportedAnsatzError
from .gates import PauliRotation
from .pauli import PauliSum
from .simulator import exact_unitary, overlap, zero_state
from .strategy1 import STAGNATION_WINDOW, TrainTrace


@dataclass(frozen=True)
class Strategy2Config:
    eps_o: float = 1e-6
    delta2: float = 1e-6
    eta: float = 0.02
    max_iters_per_stage: int = 350
    n_c: int = 2
    dt_ratio: float = 2.0**-10
    fd_step: float = 0.01
    seed: int = 0
    max_restarts: int = 5
    layers: int = 1

    def __post_init__(self):
        if self.n_c < 2:
            raise ValueError("n_c must be >= 2")
        if not 0 < self.dt_ratio <= 1:
            raise ValueError("dt_ratio must lie in (0, 1]")
        self.n_stages  # validates dt_ratio against n_c
        if self.fd_step <= 0 or self.eta <= 0 or self.eps_o <= 0:
            raise ValueError("fd_step, eta and eps_o must be positive")

    @property
    def n_stages(self) -> int:
        s = round(-math.log(self.dt_ratio) / math.log(self.n_c))
        if not math.isclose(self.n_c ** (-s), self.dt_ratio, rel_tol=1e-9):
            raise ValueError(f"dt_ratio {self.dt_ratio} is not a power of 1/{self.n_c}")
        return s


@dataclass
class StageRecord:
    stage: int
    params: np.ndarray
    objective: float
    trace: TrainTrace
    circuit: Circuit = field(repr=False, default=None)


def seed_small_dt(h: PauliSum, dt: float, ansatz: Circuit) -> np.ndarray:
    """Slot values making ``ansatz`` (scale ``dt``) a first-order product step of ``h``.

    A term that owns several slots (layered ansatz) has its coefficient split
    evenly between them, so the slot values still sum to the coefficient.
    """
    if ansatz.slot_terms is None:
        raise UnsupportedAnsatzError("ansatz carries no slot-to-term map")
    counts: dict[tuple[int, int], int] = {}
    for p in ansatz.slot_terms:
        key = (p.x_mask, p.z_mask)
        counts[key] = counts.get(key, 0) + 1
    betas = np.empty(ansatz.n_params)
    for k, p in enumerate(ansatz.slot_terms):
        key = (p.x_mask, p.z_mask)
        match = [c for c, q in h if (q.x_mask, q.z_mask) == key]
        if not match:
            raise UnsupportedAnsatzError(f"ansatz term {p.label} is not a term of h")
        betas[k] = match[0] / counts[key]
    return betas


def rescale(circuit: Circuit, factor: float) -> Circuit:
    """Same circuit with every rotation scale multiplied by ``factor``."""
    gates = tuple(replace(g, scale=g.scale * factor) if isinstance(g, PauliRotation) else g for g in circuit.gates)
    return Circuit(circuit.n_qubits, gates, circuit.n_params, circuit.slot_terms)


class Compression:
    """``|<0| U_D C(params) P^{-n_c} U_E |0>|^2`` with the fixed part cached."""

    def __init__(self, layout: ApqcLayout, candidate: Circuit, frozen_prev: Circuit, n_c: int):
        n = layout.n_system
        if candidate.n_qubits != n or frozen_prev.n_qubits != n:
            raise DimensionError(
                f"circuits on {candidate.n_qubits}/{frozen_prev.n_qubits} qubits, layout has {n} system qubits"
            )
        if frozen_prev.n_params:
            raise ValueError("previous stage must be frozen")
        self.layout = layout
        self.candidate = candidate.lift(layout.n_total)
        back = invert(frozen_prev).lift(layout.n_total)
        psi = layout.encode.run()
        for _ in range(n_c):
            psi = back.apply(psi)
        self._fixed = psi
        # <0|U_D = (U_E|0>)^dag since U_D is the inverse of U_E
        self._bra = layout.encode.run()

    def __call__(self, params) -> float | np.ndarray:
        out = self.candidate.apply(self._fixed, params)
        return np.abs(overlap(self._bra, out)) ** 2


def compression_objective(
    layout: ApqcLayout, candidate: Circuit, params, frozen_prev: Circuit, n_c: int
) -> float:
    """Probability of returning to ``|0...0>`` after encode, ``P^{-n_c}``, candidate, decode."""
    n_total = layout.n_total
    if candidate.n_qubits != layout.n_system or frozen_prev.n_qubits != layout.n_system:
        raise DimensionError("circuits must act on the layout's system register")
    circ = layout.encode
    back = invert(frozen_prev).lift(n_total)
    for _ in range(n_c):
        circ = circ.then(back)
    circ = circ.then(candidate.lift(n_total)).then(layout.decode)
    out = circ.apply(zero_state(n_total), params)
    return float(abs(out[0]) ** 2)


def fd_gradient(
    f: Callable, params, fd_step: float, batched: bool = False
) -> np.ndarray:
    """Symmetric difference quotient ``(f(x + h e_j) - f(x - h e_j)) / 2h``.

    With ``batched=True`` the objective is called once on a ``(2m, m)``
    stack of shifted parameter vectors.
    """
    if fd_step <= 0:
        raise ValueError("fd_step must be positive")
    params = np.asarray(params, dtype=float)
    m = params.size
    shifts = fd_step * np.eye(m)
    stack = np.concatenate([params + shifts, params - shifts])
    if batched:
        vals = np.asarray(f(stack), dtype=float)
    else:
        vals = np.array([f(x) for x in stack], dtype=float)
    return (vals[:m] - vals[m:]) / (2 * fd_step)


def _train_stage(
    config: Strategy2Config, objective: Compression, start: np.ndarray, rng: np.random.Generator
) -> tuple[np.ndarray, float, TrainTrace]:
    trace = TrainTrace()
    params = start.copy()
    best_f, best_params = float(objective(params)), params.copy()
    chain_best: list[float] = []
    restarts = 0
    for it in range(config.max_iters_per_stage):
        f = float(objective(params))
        if f > best_f:
            best_f, best_params = f, params.copy()
        if f >= 1.0 - config.eps_o:
            trace.iterations.append((it, f, 0.0))
            trace.converged = True
            break
        grad = fd_gradient(objective, params, config.fd_step, batched=True)
        trace.iterations.append((it, f, float(np.linalg.norm(grad))))
        chain_best.append(max(f, chain_best[-1]) if chain_best else f)
        if (
            len(chain_best) > STAGNATION_WINDOW
            and chain_best[-1] - chain_best[-1 - STAGNATION_WINDOW] <= config.delta2
        ):
            if restarts >= config.max_restarts:
                break
            restarts += 1
            params = rng.random(params.size)
            chain_best = []
            continue
        params = params + config.eta * grad
    else:
        f = float(objective(params))
        if f > best_f:
            best_f, best_params = f, params.copy()
        trace.converged = best_f >= 1.0 - config.eps_o
    trace.restarts_used = restarts
    trace.final_params, trace.final_objective = best_params, best_f
    return best_params, best_f, trace


def run(
    config: Strategy2Config,
    h: PauliSum,
    t: float,
    ansatz: Circuit | None = None,
    start_stage: int = 0,
    start_params=None,
    on_stage: Callable[[StageRecord], None] | None = None,
) -> list[StageRecord]:
    """Train all compression stages; returns one record per trained stage.

    ``ansatz`` must be built with scale 1 (its scales are multiplied by the
    stage time ``dt * n_c**k``). Resuming: pass ``start_stage=k`` and the
    slot values of stage ``k`` (0 means the seed step).
    """
    n = h.n_qubits
    layout = build_apqc(n)
    if ansatz is None:
        ansatz = build_two_body_ansatz(h.without_identity().restrict_weight(2), 1.0, config.layers)
    dt = t * config.dt_ratio
    if start_params is None:
        if start_stage != 0:
            raise ValueError("resuming needs the stage parameters")
        start_params = seed_small_dt(h, dt, ansatz)
    prev_params = np.asarray(start_params, dtype=float)
    records = []
    for k in range(start_stage + 1, config.n_stages + 1):
        prev = rescale(ansatz, dt * config.n_c ** (k - 1)).freeze(prev_params)
        cand = rescale(ansatz, dt * config.n_c**k)
        objective = Compression(layout, cand, prev, config.n_c)
        rng = np.random.default_rng(config.seed + k)
        params, f, trace = _train_stage(config, objective, prev_params, rng)
        rec = StageRecord(k, params, f, trace, cand)
        records.append(rec)
        if on_stage is not None:
            on_stage(rec)
        prev_params = params
    return records


def stage_circuit(ansatz: Circuit, config: Strategy2Config, t: float, stage: int) -> Circuit:
    """Parameterized circuit used at ``stage`` (0 is the seed step)."""
    return rescale(ansatz, t * config.dt_ratio * config.n_c**stage)


def process_fidelity(h, t: float, circuit: Circuit, params=None) -> float:
    """``|Tr(V^dag U)/d|^2`` against ``V = exp(-i h t)``."""
    v = exact_unitary(h, t)
    u = circuit.unitary(params)
    d = v.shape[0]
    return float(abs(np.trace(v.conj().T @ u) / d) ** 2)


def error_budget(eps_o: float, eps_t: float, t: float) -> float:
    """A-priori deviation bound ``(t^2 / eps_t) eps_o + eps_t`` with unit constants."""
    if eps_t <= 0 or t < 0 or eps_o < 0:
        raise ValueError("need eps_t > 0 and non-negative eps_o, t")
    return t * t / eps_t * eps_o + eps_t


def residual_second_order(h: PauliSum, betas, dt: float, probe: np.ndarray, terms=None) -> float:
    """Second-order estimate of ``1 - |<p| exp(-i h dt)^dag prod_i exp(-i b_i r_i dt) |p>|^2``.

    ``terms`` are the product factors ``r_i`` (default: the non-identity
    strings of ``h``), applied first to last. With ``H = -i dt h`` and
    ``M_i = -i dt b_i r_i`` the estimate is
    ``Re[(<H> - <sum M>)^2 - <H^2> + 2<H sum M> - <sum M^2> - 2 sum_{i>j} <M_i M_j>]``.
    """
    if terms is None:
        terms = h.without_identity().strings
    betas = np.asarray(betas, dtype=float)
    if len(terms) != betas.size:
        raise DimensionError("one beta per product term required")

    def ev(vec):
        return overlap(probe, vec)

    h_psi = -1j * dt * h.apply(probe)
    m_psi = [-1j * dt * b * p.apply(probe) for b, p in zip(betas, terms)]
    sum_m = sum(m_psi) if m_psi else np.zeros_like(probe)
    e_h = ev(h_psi)
    e_m = ev(sum_m)
    e_hh = ev(-1j * dt * h.apply(h_psi))
    # <H M> = <p| H (M p)> ; H is anti-Hermitian so <p|H v> = -(H p)^dag v
    e_hm = -overlap(h_psi, sum_m)
    e_mm = sum(-overlap(mp, mp) for mp in m_psi)
    cross = 0.0
    for i in range(len(m_psi)):
        for j in range(i):
            # later factor i acts after j: M_i M_j
            cross += -overlap(m_psi[i], m_psi[j])
    val = (e_h - e_m) ** 2 - e_hh + 2 * e_hm - e_mm - 2 * cross
    return float(np.real(val))
