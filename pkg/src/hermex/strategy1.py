"""Classical training of a Pauli-rotation ansatz against ``exp(-i h t)``.

The figure of merit is the squared overlap ``|<s| V^dag U(a) |s>|^2`` where
``V`` is the exact evolution on the system register. With ``s`` the
ancilla-assisted Bell state this is the process fidelity
``|Tr(V^dag U)/2^n|^2``. Gradients come from one backward sweep over the
rotation list (adjoint method), so a full gradient costs about two circuit
applications.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .circuits import Circuit, build_apqc
from .errors import DimensionError, UnsupportedAnsatzError
from .gates import PauliRotation
from .pauli import PauliSum
from .simulator import apply_pauli_rotation, apply_unitary, exact_unitary, num_qubits, overlap

STAGNATION_WINDOW = 20


@dataclass(frozen=True)
class Strategy1Config:
    t: float
    eps_o: float = 1e-3
    delta1: float = 1e-6
    eta: float = 0.02
    max_iters: int = 300
    seed: int = 0
    max_restarts: int = 5

    def __post_init__(self):
        if not (self.eps_o > 0 and self.eta > 0):
            raise ValueError("eps_o and eta must be positive")
        if math.isnan(self.delta1):
            raise ValueError("delta1 must be a number")
        if self.max_iters < 1 or self.max_restarts < 0:
            raise ValueError("max_iters must be >= 1 and max_restarts >= 0")


@dataclass
class TrainTrace:
    iterations: list[tuple[int, float, float]] = field(default_factory=list)
    final_params: np.ndarray | None = None
    converged: bool = False
    restarts_used: int = 0
    final_objective: float = 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iter", "objective", "grad_norm"])
        for it, f, g in self.iterations:
            w.writerow([it, repr(float(f)), repr(float(g))])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "iterations": len(self.iterations),
            "final_objective": float(self.final_objective),
            "converged": bool(self.converged),
            "restarts_used": int(self.restarts_used),
            "final_params": [float(x) for x in self.final_params] if self.final_params is not None else None,
        }


def bell_state(n_system: int) -> np.ndarray:
    return build_apqc(n_system).bell_state()


class Target:
    """Pre-computed ``|s>`` and ``V|s>`` for a target ``exp(-i h t)``."""

    def __init__(self, target_h: PauliSum | np.ndarray, t: float, sigma: np.ndarray | None = None):
        v = exact_unitary(target_h, t)
        n_sys = v.shape[0].bit_length() - 1
        if sigma is None:
            sigma = bell_state(n_sys)
        n_total = num_qubits(sigma)
        if n_total < n_sys:
            raise DimensionError(f"{n_total}-qubit state too small for {n_sys}-qubit target")
        self.n_system = n_sys
        self.n_qubits = n_total
        self.sigma = np.asarray(sigma, dtype=complex)
        self.evolved = apply_unitary(self.sigma, v, range(n_sys))

    def lift(self, ansatz: Circuit) -> Circuit:
        if ansatz.n_qubits == self.n_qubits:
            return ansatz
        if ansatz.n_qubits != self.n_system:
            raise DimensionError(f"{ansatz.n_qubits}-qubit ansatz for {self.n_system}-qubit target")
        return ansatz.lift(self.n_qubits)

    def amplitude(self, ansatz: Circuit, params) -> complex:
        return overlap(self.evolved, self.lift(ansatz).apply(self.sigma, params))

    def objective(self, ansatz: Circuit, params) -> float:
        return float(np.abs(self.amplitude(ansatz, params)) ** 2)

    def gradient(self, ansatz: Circuit, params) -> tuple[float, np.ndarray]:
        circ = self.lift(ansatz)
        params = np.asarray(params, dtype=float)
        rots = []
        for g in circ.gates:
            if not isinstance(g, PauliRotation):
                raise UnsupportedAnsatzError(f"analytic gradient needs rotation-only circuits, found {g}")
            rots.append(g)
        phi = circ.apply(self.sigma, params)
        mu = self.evolved.copy()
        amp = overlap(mu, phi)
        grad = np.zeros(circ.n_params)
        # walk back: phi holds nu_k (state after gate k), mu holds mu_k
        for g in reversed(rots):
            if g.slot is not None:
                d = overlap(mu, g.pauli.apply(phi))
                grad[g.slot] += 2.0 * g.scale * float(np.imag(np.conj(amp) * d))
            back = -g.angle(params)
            phi = apply_pauli_rotation(phi, g.pauli, back)
            mu = apply_pauli_rotation(mu, g.pauli, back)
        return float(abs(amp) ** 2), grad


def objective(ansatz: Circuit, params, target_h, t: float, sigma: np.ndarray | None = None) -> float:
    """``|<s| V^dag U(params) |s>|^2`` with ``V = exp(-i h t)`` on the system qubits."""
    return Target(target_h, t, sigma).objective(ansatz, params)


def analytic_gradient(ansatz: Circuit, params, target_h, t: float, sigma: np.ndarray | None = None) -> np.ndarray:
    """Exact gradient of :func:`objective` with respect to the parameter slots."""
    return Target(target_h, t, sigma).gradient(ansatz, params)[1]


def _window_stalled(best: list[float], delta: float) -> bool:
    if len(best) <= STAGNATION_WINDOW:
        return False
    return best[-1] - best[-1 - STAGNATION_WINDOW] <= delta


def run(
    config: Strategy1Config,
    ansatz: Circuit,
    target_h,
    initial_params=None,
    sigma: np.ndarray | None = None,
) -> TrainTrace:
    """Gradient ascent with random restarts on stagnation.

    Each chain runs for up to ``max_iters`` steps. A chain is abandoned when
    the best objective has improved by at most ``delta1`` over the last
    window of iterations; the next chain starts from uniform ``[0, 1)``
    parameters drawn with seed ``config.seed + restart``. The returned
    parameters are the best seen across all chains.
    """
    target = Target(target_h, config.t, sigma)
    trace = TrainTrace()
    best_f, best_params = -1.0, None
    step = 0
    for restart in range(config.max_restarts + 1):
        trace.restarts_used = restart
        if restart == 0 and initial_params is not None:
            params = np.array(initial_params, dtype=float)
        else:
            params = np.random.default_rng(config.seed + restart).random(ansatz.n_params)
        chain_best: list[float] = []
        for _ in range(config.max_iters):
            f, grad = target.gradient(ansatz, params)
            gnorm = float(np.linalg.norm(grad))
            trace.iterations.append((step, f, gnorm))
            step += 1
            if f > best_f:
                best_f, best_params = f, params.copy()
            if f >= 1.0 - config.eps_o:
                trace.converged = True
                trace.final_params, trace.final_objective = best_params, best_f
                return trace
            chain_best.append(max(f, chain_best[-1]) if chain_best else f)
            if _window_stalled(chain_best, config.delta1):
                break
            params = params + config.eta * grad
        else:
            # score the last update too
            f = target.objective(ansatz, params)
            if f > best_f:
                best_f, best_params = f, params.copy()
            if f >= 1.0 - config.eps_o:
                trace.converged = True
                break
    trace.final_params, trace.final_objective = best_params, best_f
    return trace
