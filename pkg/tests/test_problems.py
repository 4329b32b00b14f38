import math

import numpy as np
import pytest

from hermex import problems
from hermex.errors import NotHermitianError, ParseError
from hermex.simulator import exact_unitary


def test_bell_matrix():
    want = np.zeros((4, 4))
    want[0, 0] = want[0, 3] = want[3, 0] = want[3, 3] = 0.5
    np.testing.assert_allclose(problems.builtin("bell").dense(), want, atol=1e-15)


@pytest.mark.parametrize("name", ["bell", "ghz"])
def test_projectors(name):
    rho = problems.builtin(name).dense()
    assert abs(np.trace(rho @ rho) - 1) < 1e-12
    assert abs(np.trace(rho) - 1) < 1e-12
    assert np.linalg.eigvalsh(rho).min() > -1e-12
    np.testing.assert_allclose(rho, rho.conj().T)


def test_crotonic_is_diagonal():
    inst = problems.builtin("crotonic")
    assert inst.n_qubits == 4 and len(inst.operator) == 10
    assert inst.operator.is_commuting()
    u = exact_unitary(inst.operator, 0.2)
    np.testing.assert_allclose(u, np.diag(np.diag(u)), atol=1e-12)


def test_crotonic_parameter_file(tmp_path):
    path = tmp_path / "params.txt"
    path.write_text("nu 0 2.0\nnu 3 -4.0\nJ 2 0 1.0  # order-insensitive\n")
    h = problems.crotonic(path).operator
    got = {p.label: c for c, p in h}
    assert got == {"ZIII": 1.0, "IIIZ": -2.0, "ZIZI": pytest.approx(math.pi / 2)}
    path.write_text("nu 0\n")
    with pytest.raises(ParseError):
        problems.crotonic(path)
    path.write_text("J 1 1 0.3\n")
    with pytest.raises(ParseError):
        problems.crotonic(path)


def test_default_times_and_unknown():
    assert problems.builtin("ghz").times == (0.05, 0.1, 0.2)
    with pytest.raises(KeyError):
        problems.builtin("water")


def test_load_pauli_file(tmp_path):
    path = tmp_path / "zz.txt"
    path.write_text("1.0 ZZ\n")
    inst = problems.load(path)
    assert inst.n_qubits == 2 and len(inst.operator) == 1


@pytest.mark.parametrize("fmt", ["pauli", "dense"])
def test_round_trip(tmp_path, fmt):
    for name in problems.BUILTINS:
        inst = problems.builtin(name)
        path = tmp_path / f"{name}.{fmt}"
        problems.save(inst, path, fmt)
        back = problems.load(path)
        if fmt == "pauli":
            assert back.operator == inst.operator
            assert [c for c, _ in back.operator] == [c for c, _ in inst.operator]
        else:
            np.testing.assert_allclose(back.dense(), inst.dense(), atol=1e-15)


def test_dense_bell_file(tmp_path):
    path = tmp_path / "bell.mat"
    rows = ["0.5 0 0 0 0 0 0.5 0", "0 0 0 0 0 0 0 0", "0 0 0 0 0 0 0 0", "0.5 0 0 0 0 0 0.5 0"]
    path.write_text("\n".join(rows) + "\n")
    np.testing.assert_allclose(problems.load(path).dense(), problems.builtin("bell").dense(), atol=1e-15)


def test_bad_files(tmp_path):
    path = tmp_path / "m.txt"
    path.write_text("0 0 1 0\n0 0 0 0\n")
    with pytest.raises(NotHermitianError):
        problems.load(path)
    path.write_text("0 0 1\n")
    with pytest.raises(ParseError):
        problems.load(path)
    path.write_text("1.0 ZQ\n")
    with pytest.raises(ParseError):
        problems.load(path)


def test_instance_validation():
    op = problems.builtin("bell").operator
    with pytest.raises(ValueError):
        problems.ProblemInstance("x", 3, op)
    with pytest.raises(ValueError):
        problems.ProblemInstance("x", 2, op, (0.1, -1.0))
