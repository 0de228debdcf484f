import itertools

import numpy as np
import pytest

from errors import DimensionError, PauliParseError
from pauli_core import PauliSum, PauliTerm, commutator, mul, parse_pauli_text, write_pauli_text


def _random_sum(rng, n_qubits, n_terms):
    terms = []
    for _ in range(n_terms):
        x = int(rng.integers(0, 1 << n_qubits))
        z = int(rng.integers(0, 1 << n_qubits))
        terms.append(PauliTerm(n_qubits, x, z, complex(rng.normal(), rng.normal())))
    return PauliSum.from_terms(n_qubits, terms)


def test_single_qubit_products():
    """X·Y = iZ, Y·X = -iZ, Z·Z = I."""
    x, y, z = (PauliTerm.from_label(1, lbl) for lbl in ("X0", "Y0", "Z0"))
    xy = mul(x, y)
    assert xy.key == z.key and xy.coeff == pytest.approx(1j)
    yx = mul(y, x)
    assert yx.key == z.key and yx.coeff == pytest.approx(-1j)
    zz = mul(z, z)
    assert zz.is_identity and zz.coeff == pytest.approx(1.0)


def test_mul_matches_dense_product(rng):
    """Every product of 2-qubit strings equals the dense matrix product."""
    singles = ("", "X{q}", "Y{q}", "Z{q}")
    labels = [" ".join(p for p in (a.format(q=0), b.format(q=1)) if p) for a in singles for b in singles]
    for la, lb in itertools.product(labels, repeat=2):
        a = PauliTerm.from_label(2, la, complex(rng.normal(), rng.normal()))
        b = PauliTerm.from_label(2, lb, complex(rng.normal(), rng.normal()))
        np.testing.assert_allclose(mul(a, b).to_matrix(), a.to_matrix() @ b.to_matrix(), atol=1e-12)


def test_mul_qubit_mismatch():
    """Strings on different registers cannot be multiplied."""
    with pytest.raises(DimensionError):
        mul(PauliTerm.from_label(1, "X0"), PauliTerm.from_label(2, "X1"))


def test_commutator_of_z_and_x():
    """[Z0, X0] = 2i Y0."""
    h = parse_pauli_text("1.0 Z0", 1)
    out = commutator(h, PauliTerm.from_label(1, "X0"))
    assert out.keys() == [PauliTerm.from_label(1, "Y0").key]
    assert out.coeff(PauliTerm.from_label(1, "Y0").key) == pytest.approx(2j)


def test_commutator_of_commuting_strings_is_zero():
    """Z0 Z1 commutes with X0 X1."""
    h = parse_pauli_text("0.7 Z0 Z1", 2)
    assert len(commutator(h, PauliTerm.from_label(2, "X0 X1"))) == 0


def test_commutator_matches_dense(rng):
    """[H, sigma] agrees with the dense commutator."""
    h = _random_sum(rng, 3, 12)
    s = PauliTerm.from_label(3, "X0 Y2")
    dense = h.to_matrix() @ s.to_matrix() - s.to_matrix() @ h.to_matrix()
    np.testing.assert_allclose(commutator(h, s).to_matrix(), dense, atol=1e-12)


def test_sum_product_matches_dense(rng):
    """PauliSum multiplication is the matrix product."""
    a = _random_sum(rng, 3, 8)
    b = _random_sum(rng, 3, 8)
    np.testing.assert_allclose((a * b).to_matrix(), a.to_matrix() @ b.to_matrix(), atol=1e-12)


def test_sparse_and_dense_agree(rng):
    """The cached CSR matrix equals the dense matrix."""
    h = _random_sum(rng, 4, 20)
    np.testing.assert_allclose(h.to_sparse().toarray(), h.to_matrix(), atol=0)


def test_merging_and_pruning():
    """Equal strings merge and cancelled terms are dropped."""
    h = parse_pauli_text("0.5 X0\n0.25 X0\n1.0 Z1\n-1.0 Z1", 2)
    assert len(h) == 1
    assert h.coeff(PauliTerm.from_label(2, "X0").key) == pytest.approx(0.75)


def test_parse_identity_and_complex_coefficients():
    """A bare coefficient is the identity; complex coefficients parse."""
    h = parse_pauli_text("# comment\n\n2.5\n(0+1j) Y1 Z0   # trailing\n", 2)
    assert h.constant() == pytest.approx(2.5)
    assert h.coeff(PauliTerm.from_label(2, "Z0 Y1").key) == pytest.approx(1j)


@pytest.mark.parametrize("text", ["1.0 X5", "1.0 X0 Z0", "abc X0", "1.0 W0", "1.0 X"])
def test_parse_errors(text):
    """Malformed lines raise PauliParseError."""
    with pytest.raises(PauliParseError):
        parse_pauli_text(text, 2)


def test_parse_error_names_the_line():
    """The message points at the offending line."""
    with pytest.raises(PauliParseError, match="line 3"):
        parse_pauli_text("1.0 Z0\n0.5 X1\n0.5 Q1", 2)


def test_write_then_parse_preserves_the_operator(rng):
    """Writer output parses back to the same sum."""
    h = _random_sum(rng, 3, 10)
    again = parse_pauli_text(write_pauli_text(h), 3)
    assert again.keys() == h.keys()
    for key in h.keys():
        assert again.coeff(key) == pytest.approx(h.coeff(key), abs=1e-13)


def test_writer_uses_canonical_order():
    """Terms are written in (z_mask, x_mask) order, identity first."""
    h = parse_pauli_text("1.0 Z1\n2.0 X0\n3.0", 2)
    assert write_pauli_text(h).splitlines() == ["3", "2 X0", "1 Z1"]


def test_adjoint_and_hermiticity():
    """Hermitian sums have real coefficients; the adjoint conjugates them."""
    h = parse_pauli_text("(1+2j) X0\n0.5 Z0", 1)
    assert not h.is_hermitian()
    assert h.adjoint().coeff(PauliTerm.from_label(1, "X0").key) == pytest.approx(1 - 2j)
    assert (h + h.adjoint()).is_hermitian()


def test_traceless_drops_only_the_identity():
    """traceless removes the constant term and nothing else."""
    h = parse_pauli_text("3.0\n1.0 Z0\n0.5 X0", 1)
    assert h.traceless.constant() == 0
    assert len(h.traceless) == 2


def test_term_masks_are_checked():
    """Masks outside the register raise DimensionError."""
    with pytest.raises(DimensionError):
        PauliTerm(1, 2, 0)
