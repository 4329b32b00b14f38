import math

import numpy as np
import pytest

from hermex import problems
from hermex.circuits import Circuit, build_two_body_ansatz, build_term_ansatz
from hermex.errors import DimensionError, UnsupportedAnsatzError
from hermex.gates import Hadamard, PauliRotation
from hermex.pauli import PauliString, PauliSum
from hermex.simulator import basis_state, random_state
from hermex.strategy1 import Strategy1Config, TrainTrace, analytic_gradient, objective, run

PLUS = np.array([1, 1], dtype=complex) / math.sqrt(2)
Z = PauliSum.from_labels([(1.0, "Z")])


def z_ansatz(t):
    return Circuit(1, (PauliRotation(PauliString.from_label("Z"), 0, t),), 1)


def random_instance(rng, n):
    words = ["".join(rng.choice(list("IXYZ"), size=n)) for _ in range(4)]
    words = [w if set(w) != {"I"} else "Z" * n for w in words]
    h = PauliSum.from_labels([(float(rng.normal()), w) for w in words])
    ansatz = build_term_ansatz(h, 0.4)
    params = rng.uniform(0, 1, ansatz.n_params)
    return h, ansatz, params


def test_exact_ansatz_scores_one():
    bell = problems.builtin("bell").operator
    ansatz = build_two_body_ansatz(bell, 0.2)
    assert abs(objective(ansatz, bell.without_identity().coefficients, bell, 0.2) - 1) < 1e-12
    assert abs(objective(ansatz, np.zeros(3), bell, 0.0) - 1) < 1e-12


def test_commuting_closed_form():
    grid = np.linspace(0, 2, 201)
    vals = np.array([objective(z_ansatz(0.3), [a], Z, 0.3, PLUS) for a in grid])
    np.testing.assert_allclose(vals, np.cos(0.3 * (grid - 1)) ** 2, atol=1e-12)
    assert grid[np.argmax(vals)] == pytest.approx(1.0)
    assert abs(analytic_gradient(z_ansatz(0.3), [1.0], Z, 0.3, PLUS)[0]) < 1e-8


def test_gradient_matches_finite_difference(rng):
    for trial in range(20):
        n = 1 + trial % 3
        h, ansatz, params = random_instance(rng, n)
        g = analytic_gradient(ansatz, params, h, 0.4)
        fd = np.empty_like(g)
        for k in range(len(params)):
            e = np.zeros_like(params)
            e[k] = 1e-5
            fd[k] = (objective(ansatz, params + e, h, 0.4) - objective(ansatz, params - e, h, 0.4)) / 2e-5
        assert np.allclose(g, fd, rtol=1e-6, atol=1e-9)


def test_gradient_with_shared_slots(rng):
    h = PauliSum.from_labels([(0.7, "XY"), (0.3, "ZI")])
    x, z = PauliString.from_label("XY"), PauliString.from_label("ZI")
    ansatz = Circuit(2, (PauliRotation(x, 0, 0.5), PauliRotation(z, 1, 0.2), PauliRotation(x, 0, -0.3)), 2)
    p = np.array([0.4, 1.3])
    g = analytic_gradient(ansatz, p, h, 0.5)
    for k in range(2):
        e = np.eye(2)[k] * 1e-6
        fd = (objective(ansatz, p + e, h, 0.5) - objective(ansatz, p - e, h, 0.5)) / 2e-6
        assert g[k] == pytest.approx(fd, rel=1e-6, abs=1e-10)


def test_gradient_vanishes_for_commuting_tail():
    h = PauliSum.from_labels([(0.9, "XI"), (0.4, "IZ")])
    ansatz = Circuit(
        2, (PauliRotation(PauliString.from_label("XI"), 0, 0.3), PauliRotation(PauliString.from_label("IZ"), 1, 0.3)), 2
    )
    g = analytic_gradient(ansatz, [0.2, 0.6], h, 0.3, basis_state(2, 0))
    assert abs(g[1]) < 1e-14 and abs(g[0]) > 1e-3


def test_gradient_rejects_non_rotations():
    c = Circuit(1, (Hadamard(0), PauliRotation(PauliString.from_label("Z"), 0, 1.0)), 1)
    with pytest.raises(UnsupportedAnsatzError):
        analytic_gradient(c, [0.1], Z, 0.1, PLUS)


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        objective(z_ansatz(0.1), [0.0], PauliSum.from_labels([(1.0, "ZZ")]), 0.1, random_state(1, np.random.default_rng(0)))


def test_objective_bounded(rng):
    for _ in range(20):
        h, ansatz, params = random_instance(rng, 2)
        assert objective(ansatz, rng.normal(size=params.size) * 5, h, 0.4) <= 1 + 1e-9


def test_run_stops_immediately_at_target():
    bell = problems.builtin("bell").operator
    ansatz = build_two_body_ansatz(bell, 0.1)
    trace = run(Strategy1Config(t=0.1), ansatz, bell, bell.without_identity().coefficients)
    assert trace.converged and len(trace.iterations) == 1 and trace.restarts_used == 0


def test_run_without_restarts():
    h = PauliSum.from_labels([(0.8, "XX"), (0.5, "ZI"), (0.3, "IY")])
    ansatz = build_two_body_ansatz(h, 0.5)
    trace = run(Strategy1Config(t=0.5, delta1=-math.inf, max_iters=40, eps_o=1e-12), ansatz, h)
    assert trace.restarts_used == 5  # each chain exhausts its budget, never stalls
    trace = run(Strategy1Config(t=0.5, delta1=-math.inf, max_iters=40, max_restarts=0, eps_o=1e-12), ansatz, h)
    assert trace.restarts_used == 0 and len(trace.iterations) == 40


def test_run_restarts_on_stagnation():
    h = PauliSum.from_labels([(0.8, "XX"), (0.5, "ZI")])
    ansatz = build_two_body_ansatz(h, 0.5)
    trace = run(Strategy1Config(t=0.5, delta1=math.inf, eps_o=1e-12), ansatz, h)
    # any improvement counts as stagnation: every chain stops after one window
    assert trace.restarts_used == 5
    assert len(trace.iterations) == 6 * 21


def test_run_is_deterministic():
    h = PauliSum.from_labels([(0.8, "XX"), (0.5, "ZI"), (0.3, "IY")])
    ansatz = build_two_body_ansatz(h, 0.5)
    a = run(Strategy1Config(t=0.5, max_iters=30), ansatz, h)
    b = run(Strategy1Config(t=0.5, max_iters=30), ansatz, h)
    assert a.to_csv() == b.to_csv()


def test_bell_short_time_reaches_target():
    inst = problems.builtin("bell")
    ansatz = build_two_body_ansatz(inst.ansatz_terms(), 0.05)
    trace = run(Strategy1Config(t=0.05), ansatz, inst.operator)
    assert trace.final_objective >= 0.99
    assert trace.final_objective >= trace.iterations[0][1]
    assert all(0 <= f <= 1 + 1e-9 for _, f, _ in trace.iterations)


def test_trace_csv_and_summary():
    t = TrainTrace([(0, 0.5, 0.1), (1, 0.75, 0.05)], np.array([0.1, 0.2]), False, 0, 0.75)
    assert t.to_csv() == "iter,objective,grad_norm\n0,0.5,0.1\n1,0.75,0.05\n"
    assert t.summary()["final_params"] == [0.1, 0.2]


def test_config_validation():
    with pytest.raises(ValueError):
        Strategy1Config(t=0.1, eta=0)
    with pytest.raises(ValueError):
        Strategy1Config(t=0.1, max_iters=0)
