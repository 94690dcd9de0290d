import itertools

import numpy as np
import pytest

from modules.errors import DimensionError
from modules.pauli import (
    BinMatrix,
    GF2Basis,
    PauliString,
    commutes,
    conjugate_by_hadamards,
    gf2_nullspace,
    gf2_rank,
    in_row_span,
    row_reduce,
    syndrome,
)


def test_single_qubit_x_and_z_anticommute():
    assert not commutes(PauliString.from_label("X"), PauliString.from_label("Z"))


def test_double_overlap_commutes():
    assert commutes(PauliString.from_label("XX"), PauliString.from_label("ZZ"))


def test_identity_commutes_with_everything():
    identity = PauliString.identity(3)
    for label in ("XYZ", "ZZI", "YYY"):
        assert commutes(identity, PauliString.from_label(label))


def test_commutes_length_mismatch():
    with pytest.raises(DimensionError):
        commutes(PauliString.from_label("X"), PauliString.from_label("XX"))


def test_mismatched_bit_lengths_rejected():
    with pytest.raises(DimensionError):
        PauliString([1, 0], [1])


def test_label_weight_and_support():
    p = PauliString.from_label("IXYZ")
    assert p.label() == "IXYZ"
    assert p.weight() == 3
    assert p.support() == [1, 2, 3]
    assert p.letter(2) == "Y"


def test_multiply_is_xor():
    product = PauliString.from_label("XZ").multiply(PauliString.from_label("ZZ"))
    assert product.label() == "YI"


@pytest.mark.parametrize(
    "bits, rank",
    [
        (np.eye(3, dtype=np.uint8), 3),
        (np.ones((2, 2), dtype=np.uint8), 1),
        (np.zeros((3, 4), dtype=np.uint8), 0),
    ],
)
def test_gf2_rank_examples(bits, rank):
    assert gf2_rank(bits) == rank


def test_gf2_rank_leaves_input_untouched():
    bits = np.array([[1, 1], [1, 1]], dtype=np.uint8)
    gf2_rank(bits)
    assert bits.tolist() == [[1, 1], [1, 1]]


def test_gf2_rank_matches_span_enumeration():
    rng = np.random.default_rng(7)
    for _ in range(30):
        rows = int(rng.integers(1, 9))
        bits = rng.integers(0, 2, size=(rows, 6), dtype=np.uint8)
        span = set()
        for coeffs in itertools.product((0, 1), repeat=rows):
            vec = np.bitwise_xor.reduce(bits[np.array(coeffs, dtype=bool)], axis=0) if any(coeffs) else np.zeros(6, np.uint8)
            span.add(tuple(int(b) for b in vec))
        assert 2 ** gf2_rank(bits) == len(span)


def test_row_reduce_pivots():
    rref, pivots = row_reduce([[0, 1, 1], [0, 1, 0]])
    assert pivots == [1, 2]
    assert rref.tolist() == [[0, 1, 0], [0, 0, 1]]


def test_nullspace_vectors_are_annihilated():
    h = BinMatrix([[1, 1, 0, 0], [0, 1, 1, 0]])
    basis = gf2_nullspace(h)
    assert basis.shape == (2, 4)
    for v in basis:
        assert not syndrome(h, v).any()


def test_in_row_span():
    h = BinMatrix([[1, 1, 0], [0, 1, 1]])
    assert in_row_span(h, [1, 0, 1])
    assert not in_row_span(h, [1, 0, 0])


@pytest.mark.parametrize(
    "error, expected",
    [([0, 0, 0], [0, 0]), ([1, 0, 0], [1, 0]), ([0, 1, 0], [1, 1])],
)
def test_syndrome_examples(error, expected):
    h = BinMatrix([[1, 1, 0], [0, 1, 1]])
    assert syndrome(h, error).tolist() == expected


def test_syndrome_dimension_mismatch():
    with pytest.raises(DimensionError):
        syndrome(BinMatrix([[1, 1, 0]]), [1, 0])


def test_hadamard_swaps_x_and_z():
    mask = np.array([True, False])
    assert conjugate_by_hadamards(PauliString.from_label("XX"), mask).label() == "ZX"
    assert conjugate_by_hadamards(PauliString.from_label("YI"), mask).label() == "YI"


def test_identity_mask_leaves_operator_unchanged():
    p = PauliString.from_label("XYZI")
    assert conjugate_by_hadamards(p, np.zeros(4, dtype=bool)) == p


def test_hadamards_preserve_weight_and_commutation():
    rng = np.random.default_rng(3)
    for _ in range(50):
        a = PauliString(rng.integers(0, 2, 6), rng.integers(0, 2, 6))
        b = PauliString(rng.integers(0, 2, 6), rng.integers(0, 2, 6))
        mask = rng.integers(0, 2, 6).astype(bool)
        ha, hb = conjugate_by_hadamards(a, mask), conjugate_by_hadamards(b, mask)
        assert ha.weight() == a.weight()
        assert commutes(a, b) == commutes(b, a) == commutes(ha, hb)


def test_gf2_basis_tracks_rank():
    basis = GF2Basis(3)
    assert basis.add([1, 1, 0])
    assert basis.add([0, 1, 1])
    assert not basis.add([1, 0, 1])
    assert basis.rank == 2
    assert basis.is_independent([0, 0, 1])


def test_bits_are_read_only_bytes_at_lattice_scale():
    n = 19 * 19
    a = PauliString(np.arange(n) % 4, np.zeros(n, dtype=np.uint8))
    assert a.x_bits.dtype == np.uint8 and a.x_bits.shape == (n,)
    assert set(np.unique(a.x_bits)) <= {0, 1}
    assert a.weight() == n // 2
    with pytest.raises(ValueError):
        a.x_bits[0] = 1
    b = PauliString.from_support(n, z=range(0, n, 3))
    assert commutes(a, b) == (len(set(a.support()) & set(range(0, n, 3))) % 2 == 0)
    assert a.multiply(a).is_identity()
