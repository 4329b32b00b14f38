import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import kron_pauli, random_label
from hermex.errors import CapacityError, DimensionError, NotHermitianError, ParseError
from hermex.pauli import PauliString, PauliSum, commutator, multiply, to_dense

words = st.integers(1, 4).flatmap(lambda n: st.tuples(st.text("IXYZ", min_size=n, max_size=n), st.text("IXYZ", min_size=n, max_size=n)))


def test_single_qubit_table():
    z, x = PauliString.from_label("Z"), PauliString.from_label("X")
    zx = multiply(z, x)
    assert zx.label == "Y" and zx.coefficient == 1j
    assert multiply(x, z).coefficient == -1j


def test_identity_is_neutral():
    for lab in ("XYZ", "IIZ", "YYY"):
        p = PauliString.from_label(lab)
        assert multiply(PauliString.identity(3), p) == p
        assert multiply(p, PauliString.identity(3)) == p


def test_two_qubit_products_exhaustive():
    labels = ["".join(t) for t in itertools.product("IXYZ", repeat=2)]
    for a, b in itertools.product(labels, repeat=2):
        prod = multiply(PauliString.from_label(a), PauliString.from_label(b))
        np.testing.assert_allclose(prod.to_dense(), kron_pauli(a) @ kron_pauli(b), atol=1e-15)


@settings(max_examples=200, deadline=None)
@given(words)
def test_products_match_dense(pair):
    a, b = pair
    prod = PauliString.from_label(a) * PauliString.from_label(b)
    np.testing.assert_allclose(prod.to_dense(), kron_pauli(a) @ kron_pauli(b), atol=1e-15)


@settings(max_examples=200, deadline=None)
@given(words)
def test_commutator_none_iff_symplectic_product_even(pair):
    a, b = (PauliString.from_label(w) for w in pair)
    sym = (bin(a.x_mask & b.z_mask).count("1") + bin(a.z_mask & b.x_mask).count("1")) % 2
    assert (commutator(a, b) is None) == (sym == 0)


def test_commutator_examples():
    coeff, s = commutator(PauliString.from_label("Z"), PauliString.from_label("X"))
    assert coeff == 2j and s.label == "Y"
    assert commutator(PauliString.from_label("ZI"), PauliString.from_label("IX")) is None


def test_commutator_random_three_qubit(rng):
    for _ in range(50):
        la, lb = random_label(rng, 3), random_label(rng, 3)
        ma, mb = kron_pauli(la), kron_pauli(lb)
        ref = ma @ mb - mb @ ma
        res = commutator(PauliString.from_label(la), PauliString.from_label(lb))
        got = np.zeros((8, 8)) if res is None else res[0] * res[1].to_dense()
        np.testing.assert_allclose(got, ref, atol=1e-14)


def test_size_mismatch():
    with pytest.raises(DimensionError):
        multiply(PauliString.from_label("X"), PauliString.from_label("XX"))
    with pytest.raises(DimensionError):
        commutator(PauliString.from_label("X"), PauliString.from_label("XX"))


def test_label_round_trip_and_masks():
    p = PauliString.from_label("XYZI")
    assert p.label == "XYZI"
    assert p.x_mask == 0b0011 and p.z_mask == 0b0110
    assert p.support == (0, 1, 2)


@pytest.mark.parametrize("bad", ["", "XQ", "X Z", "1"])
def test_bad_labels(bad):
    with pytest.raises(ParseError):
        PauliString.from_label(bad)


def test_to_dense_simple():
    np.testing.assert_array_equal(PauliSum.from_labels([(1.0, "Z")]).to_dense(), np.diag([1, -1]))


def test_bell_and_ghz_matrices():
    bell = PauliSum.from_labels([(0.25, "II"), (0.25, "ZZ"), (0.25, "XX"), (-0.25, "YY")])
    want = np.zeros((4, 4))
    want[0, 0] = want[0, 3] = want[3, 0] = want[3, 3] = 0.5
    np.testing.assert_allclose(to_dense(bell), want, atol=1e-15)
    ghz = PauliSum.from_labels(
        [(0.125, w) for w in ("III", "ZZI", "ZIZ", "IZZ", "XXX")] + [(-0.125, w) for w in ("XYY", "YXY", "YYX")]
    )
    want = np.zeros((8, 8))
    want[0, 0] = want[0, 7] = want[7, 0] = want[7, 7] = 0.5
    np.testing.assert_allclose(ghz.to_dense(), want, atol=1e-15)


def test_sum_is_hermitian_and_canonical(rng):
    terms = [(float(rng.normal()), random_label(rng, 3)) for _ in range(12)]
    s = PauliSum.from_labels(terms + [(1e-14, "XXX")])
    m = s.to_dense()
    np.testing.assert_allclose(m, m.conj().T, atol=1e-15)
    keys = [(p.x_mask, p.z_mask) for p in s.strings]
    assert len(keys) == len(set(keys))
    ref = sum(c * kron_pauli(w) for c, w in terms)
    np.testing.assert_allclose(m, ref, atol=1e-12)


def test_duplicates_merge_and_cancel():
    s = PauliSum.from_labels([(0.5, "ZZ"), (0.25, "ZZ"), (1.0, "XI"), (-1.0, "XI")])
    assert len(s) == 1 and s.coefficient_of(PauliString.from_label("ZZ")) == 0.75


def test_imaginary_coefficient_rejected():
    iy = PauliString.from_label("Z") * PauliString.from_label("X")  # iY
    with pytest.raises(NotHermitianError):
        PauliSum(1, ((1.0, iy),))


def test_dense_capacity_guard():
    p = PauliSum(13, ((1.0, PauliString.identity(13)),))
    with pytest.raises(CapacityError):
        p.to_dense()


def test_from_dense_round_trip(rng):
    a = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    h = a + a.conj().T
    np.testing.assert_allclose(PauliSum.from_dense(h).to_dense(), h, atol=1e-12)


def test_text_format():
    s = PauliSum.from_text("# comment\n0.5 ZZII\n-1.25 XIIY  # trailing\n")
    assert s.to_text() == "0.5 ZZII\n-1.25 XIIY\n"
    assert PauliSum.from_text(s.to_text()) == s
    with pytest.raises(ParseError, match="line 2"):
        PauliSum.from_text("1.0 ZZ\n1.0 ZQ\n")
    with pytest.raises(ParseError):
        PauliSum.from_text("1.0 ZZ\n1.0 ZZZ\n")


def test_apply_matches_dense(rng):
    for _ in range(20):
        lab = random_label(rng, 4)
        psi = rng.normal(size=16) + 1j * rng.normal(size=16)
        np.testing.assert_allclose(PauliString.from_label(lab).apply(psi), kron_pauli(lab) @ psi, atol=1e-14)
