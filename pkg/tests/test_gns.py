import warnings

import numpy as np
import pytest

from moment2d.gns import (
    FlatnessWarning,
    NotAMomentKernelError,
    OperatorPair,
    build_operators,
    build_space,
    cayley,
    check_cayley_unitarity,
    check_commutation,
    reconstruct_vector,
)
from moment2d.lattice import ExtendedIndex, Window, ZERO, classical, shift
from moment2d.moments import ExtendedMoments, oracle_extended

from conftest import random_measure

E = ExtendedIndex


def _pair(A, B):
    A, B = np.asarray(A, dtype=complex), np.asarray(B, dtype=complex)
    return OperatorPair(A, B, [], [], 0.0, 0.0, 0.0, 0.0, True)


def test_space_delta_origin(delta_origin):
    space = build_space(oracle_extended(delta_origin, Window(1, 0)), Window(1, 0))
    assert space.dim == 1
    assert np.vdot(space.cyclic, space.cyclic).real == pytest.approx(1.0)


def test_space_two_atom_classical(two_atom):
    u = oracle_extended(two_atom, Window(1, 0))
    space = build_space(u, Window(1, 0))
    assert space.dim == 2
    X = space.coords[:2]  # 1 and x1
    np.testing.assert_allclose(X @ X.conj().T, np.eye(2), atol=1e-14)


def test_space_rank_bounded_by_atoms(rng):
    for n in (1, 2, 3, 4):
        u = oracle_extended(random_measure(rng, n), Window(2, 1))
        space = build_space(u)
        assert space.dim <= n
        assert space.fidelity() <= 1e-9 * u.scale()
        assert np.vdot(space.cyclic, space.cyclic).real == pytest.approx(u[ZERO].real)


def test_space_rejects_indefinite(delta_origin):
    u = oracle_extended(delta_origin, Window(1, 1))
    bad = dict(u.u)
    bad[E(0, 1, 1, 0, 0, 0)] = -1.0
    with pytest.raises(NotAMomentKernelError):
        build_space(ExtendedMoments(u.window, bad))


def test_operator_two_atom(two_atom):
    u = oracle_extended(two_atom, Window(1, 0))
    space = build_space(u, Window(1, 0))
    with pytest.warns(FlatnessWarning):
        pair = build_operators(space, u)
    # matrix of A in the orthonormal basis given by the vectors 1 and x1
    X = space.coords[:2]
    np.testing.assert_allclose(X.conj() @ pair.A @ X.T, [[0, 1], [1, 0]], atol=1e-12)


def test_operator_one_atom(delta_one):
    u = oracle_extended(delta_one, Window(2, 1))
    pair = build_operators(build_space(u), u)
    np.testing.assert_allclose(np.linalg.eigvalsh(pair.A), [1.0], atol=1e-12)
    np.testing.assert_allclose(np.linalg.eigvalsh(pair.B), [0.0], atol=1e-12)


def test_operators_on_flat_oracle_data(rng):
    for n in (2, 3, 4):
        u = oracle_extended(random_measure(rng, n), Window(3, 1))
        space = build_space(u)
        pair = build_operators(space, u)
        assert pair.flat
        assert pair.residual_A <= 1e-10 and pair.residual_B <= 1e-10
        assert pair.symmetry_defect_A <= 1e-8 and pair.symmetry_defect_B <= 1e-8
        for M in (pair.A, pair.B):
            assert np.linalg.norm(M - M.conj().T, 2) <= 1e-10 * max(1.0, np.linalg.norm(M, 2))
        assert check_commutation(pair, 1e-8).passed


def test_non_flat_warns():
    # Window(0, 1) has no power shifts at all
    mu = random_measure(np.random.default_rng(3), 3)
    u = oracle_extended(mu, Window(0, 1))
    with pytest.warns(FlatnessWarning):
        pair = build_operators(build_space(u), u)
    assert not pair.flat


def test_cayley_examples():
    np.testing.assert_allclose(cayley([[0.0]]), [[-1.0]])
    np.testing.assert_allclose(cayley([[1.0]]), [[-1j]])
    ev = np.linalg.eigvals(cayley([[0.0, 1.0], [1.0, 0.0]]))
    np.testing.assert_allclose(sorted(ev, key=lambda z: z.imag), [-1j, 1j], atol=1e-15)


def test_cayley_rejects_non_hermitian():
    with pytest.raises(ValueError):
        cayley([[0.0, 1.0], [0.0, 0.0]])


def test_commutation_examples():
    rep = check_commutation(_pair(np.diag([1.0, 2.0]), np.diag([3.0, 4.0])), 1e-8)
    assert rep.passed and rep.details[0][1] == 0.0
    rep = check_commutation(_pair([[0, 1], [1, 0]], [[1, 0], [0, 0]]), 1e-8)
    assert not rep.passed
    assert rep.details[0][1] == pytest.approx(1.0)


def test_cayley_commutator_first_order(rng):
    for _ in range(10):
        H = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        A = (H + H.conj().T) / 2
        D = np.diag(rng.normal(size=4))
        Q, _ = np.linalg.qr(rng.normal(size=(4, 4)))
        B = Q @ D @ Q.T + 1e-6 * A
        B = (B + B.conj().T) / 2
        rep = check_commutation(_pair(A, B), 1.0)
        raw = np.linalg.norm(A @ B - B @ A, 2)
        assert rep.details[1][1] <= 10 * raw


def test_unitarity_examples(rng):
    assert check_cayley_unitarity(cayley([[0.0]]), 1e-10).details[0][1] == 0.0
    assert not check_cayley_unitarity(np.array([[2.0]]), 1e-10).passed
    u = oracle_extended(random_measure(rng, 3), Window(2, 1))
    pair = build_operators(build_space(u), u)
    for M in (pair.A, pair.B):
        assert check_cayley_unitarity(cayley(M), 1e-12).passed


def test_reconstruct_examples(two_atom):
    u = oracle_extended(two_atom, Window(1, 1))
    space = build_space(u)
    pair = build_operators(space, u)
    np.testing.assert_allclose(reconstruct_vector(space, pair, ZERO), space.cyclic)
    np.testing.assert_allclose(
        reconstruct_vector(space, pair, classical(1, 0)), pair.A @ space.cyclic, atol=1e-12
    )


def test_reconstruct_whole_basis(rng):
    for n in (1, 2, 4):
        u = oracle_extended(random_measure(rng, n), Window(3, 1))
        space = build_space(u)
        pair = build_operators(space, u)
        for idx in space.basis:
            err = np.linalg.norm(reconstruct_vector(space, pair, idx) - space.vector(idx))
            assert err <= 1e-8


def test_single_k_shift(rng):
    u = oracle_extended(random_measure(rng, 3), Window(2, 1))
    space = build_space(u)
    pair = build_operators(space, u)
    eye = np.eye(space.dim)
    for a in space.basis:
        up = shift(a, "k", +1)
        if up in space.position:
            np.testing.assert_allclose(space.vector(up), (pair.A + 1j * eye) @ space.vector(a), atol=1e-8)
