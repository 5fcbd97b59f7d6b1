import pytest

from moment2d.lattice import (
    ExtendedIndex,
    Window,
    ZERO,
    canonical_key,
    conj_index,
    data_indices,
    enumerate_basis,
    indexation,
    pair_index,
    rank,
    shift,
)

E = ExtendedIndex


def test_pair_index_identity():
    assert pair_index(ZERO, ZERO) == ZERO


def test_pair_index_crosses_resolvent_axes():
    a = E(0, 1, 0, 0, 0, 0)
    assert pair_index(a, a) == E(0, 1, 1, 0, 0, 0)


def test_pair_index_mixed():
    a = E(1, 0, -1, 0, 2, 0)
    b = E(0, 1, 0, 1, 0, -1)
    assert pair_index(a, b) == E(1, 0, 0, 1, 1, 0)


def test_pair_index_conjugate_swap():
    basis = enumerate_basis(Window(1, 1))
    for a in basis:
        for b in basis:
            assert pair_index(a, b) == conj_index(pair_index(b, a))


def test_basis_small_windows():
    assert enumerate_basis(Window(1, 0)) == [ZERO, E(1, 0, 0, 0, 0, 0), E(0, 0, 0, 1, 0, 0)]
    assert enumerate_basis(Window(0, 0)) == [ZERO]
    assert len(enumerate_basis(Window(2, 0))) == 6


def test_basis_sizes_and_order():
    for w in [Window(2, 1), Window(1, 2), Window(3, 1)]:
        basis = enumerate_basis(w)
        keys = [canonical_key(i) for i in basis]
        assert keys == sorted(keys)
        assert len(set(basis)) == len(basis)
        assert ZERO in basis
        assert all(i.degree <= w.deg_cap and i.resolvent_order <= w.res_cap for i in basis)
    # 6 monomials times (1 + 8) resolvent patterns of order <= 1
    assert len(enumerate_basis(Window(2, 1))) == 54


def test_indexation_first_terms():
    assert indexation(1) == E(0, 1, 0, 0, 0, 0)
    assert indexation(2) == E(0, -1, 0, 0, 0, 0)


def test_indexation_skips_classical():
    seen = [indexation(j) for j in range(1, 400)]
    assert not any(i.is_classical for i in seen)
    assert len(set(seen)) == len(seen)


def test_rank_round_trip():
    assert rank(indexation(17)) == 17
    for j in range(1, 10_001, 97):
        assert rank(indexation(j)) == j


def test_rank_rejects_classical():
    with pytest.raises(ValueError):
        rank(E(1, 0, 0, 2, 0, 0))


def test_indexation_rejects_nonpositive():
    with pytest.raises(ValueError):
        indexation(0)


def test_shift():
    assert shift(ZERO, "m", +1) == E(1, 0, 0, 0, 0, 0)
    assert shift(ZERO, "m", -1) is None
    assert shift(ZERO, "n", -1) is None
    assert shift(E(0, 1, 0, 0, 0, 0), "k", -1) == ZERO
    assert shift(ZERO, "t", -1) == E(0, 0, 0, 0, 0, -1)


def test_data_set_is_closure():
    w = Window(1, 1)
    basis = enumerate_basis(w)
    D = set(data_indices(w))
    assert D == {pair_index(a, b) for a in basis for b in basis}


def test_index_text():
    assert str(E(1, -1, 0, 2, 0, 3)) == "(1,-1,0;2,0,3)"
