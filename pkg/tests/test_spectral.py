import warnings

import numpy as np
import pytest

from moment2d.gns import OperatorPair, build_operators, build_space
from moment2d.lattice import Window
from moment2d.moments import AtomicMeasure, oracle_classical, oracle_extended
from moment2d.pipeline import canonical_atoms, extended_roundtrip_residual, recover
from moment2d.spectral import (
    JointDiagonalizationError,
    JointSpectrum,
    MergeWarning,
    jacobi_joint_diagonalize,
    joint_diagonalize,
    recover_measure,
    verify_measure,
)

from conftest import random_measure


def _pair(A, B):
    A, B = np.asarray(A, dtype=complex), np.asarray(B, dtype=complex)
    return OperatorPair(A, B, [], [], 0.0, 0.0, 0.0, 0.0, True)


def test_diagonal_pair():
    spec = joint_diagonalize(_pair(np.diag([1.0, 2.0]), np.diag([3.0, 4.0])))
    got = sorted(zip(spec.a.round(12), spec.b.round(12)))
    assert got == [(1.0, 3.0), (2.0, 4.0)]
    assert 0.7 <= spec.gamma_used <= 1.3


def test_swap_with_zero_b():
    spec = joint_diagonalize(_pair([[0, 1], [1, 0]], np.zeros((2, 2))))
    order = np.argsort(spec.a)
    np.testing.assert_allclose(spec.a[order], [-1, 1], atol=1e-14)
    np.testing.assert_allclose(spec.b, 0, atol=1e-14)
    v = spec.vectors[:, order[1]]
    np.testing.assert_allclose(np.abs(v), [2**-0.5, 2**-0.5], atol=1e-14)


def test_degenerate_cluster_split():
    # A is degenerate; only B separates its eigenvectors
    Q, _ = np.linalg.qr(np.random.default_rng(1).normal(size=(3, 3)))
    A = Q @ np.diag([1.0, 1.0, 2.0]) @ Q.T
    B = Q @ np.diag([5.0, -5.0, 0.0]) @ Q.T
    spec = joint_diagonalize(_pair(A, B), seed=4)
    assert sorted(zip(spec.a.round(10), spec.b.round(10))) == [(1.0, -5.0), (1.0, 5.0), (2.0, 0.0)]
    assert spec.off_diagonal <= 1e-10


def test_non_commuting_pair_fails():
    with pytest.raises(JointDiagonalizationError):
        joint_diagonalize(_pair([[0, 1], [1, 0]], [[1, 0], [0, 0]]))


def test_jacobi_diagonalizes_commuting_pair():
    rng = np.random.default_rng(7)
    Q, _ = np.linalg.qr(rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5)))
    A = Q @ np.diag([1.0, 1.0, 2.0, 3.0, 3.0]) @ Q.conj().T
    B = Q @ np.diag([0.0, 1.0, 0.0, 4.0, 5.0]) @ Q.conj().T
    V = jacobi_joint_diagonalize([A, B])
    for M in (A, B):
        D = V.conj().T @ M @ V
        assert np.max(np.abs(D - np.diag(np.diag(D)))) <= 1e-12
    np.testing.assert_allclose(V.conj().T @ V, np.eye(5), atol=1e-12)


def test_one_atom_recovery(delta_one):
    rec = recover(oracle_extended(delta_one, Window(2, 1)))
    assert rec.measure.atoms == [pytest.approx((1.0, 0.0, 1.0), abs=1e-12)]


def test_two_atom_recovery(two_atom):
    rec = recover(oracle_extended(two_atom, Window(2, 1)))
    np.testing.assert_allclose(canonical_atoms(rec.measure), [[-1, 0, 0.5], [1, 0, 0.5]], atol=1e-12)


def test_random_recovery(rng):
    for n in (3, 4):
        mu = random_measure(rng, n)
        u = oracle_extended(mu, Window(3, 1))
        rec = recover(u)
        assert len(rec.measure) == n
        assert np.max(np.abs(canonical_atoms(rec.measure) - canonical_atoms(mu))) <= 1e-6
        assert np.max(np.abs(rec.spectrum.vectors.conj().T @ rec.spectrum.vectors - np.eye(n))) <= 1e-10
        assert rec.measure.total_mass == pytest.approx(u.u[(0, 0, 0, 0, 0, 0)].real, abs=1e-9)
        assert extended_roundtrip_residual(rec.measure, u) <= 1e-7
        assert verify_measure(rec.measure, oracle_classical(mu, 4), 1e-8).passed


def test_recovery_seed_invariance(rng):
    mu = random_measure(rng, 4)
    u = oracle_extended(mu, Window(3, 1))
    a = canonical_atoms(recover(u, seed=0).measure)
    b = canonical_atoms(recover(u, seed=12345).measure)
    assert np.max(np.abs(a - b)) <= 1e-8


def test_close_atoms_collapse_in_rank():
    mu = AtomicMeasure.from_atoms([(0.5, 0.5, 0.5), (0.5 + 1e-9, 0.5, 0.5)])
    rec = recover(oracle_extended(mu, Window(2, 1)))
    assert len(rec.measure) == 1
    assert rec.measure.total_mass == pytest.approx(1.0)


def test_close_spectral_points_merge(two_atom):
    u = oracle_extended(two_atom, Window(1, 1))
    space = build_space(u)
    V, _ = np.linalg.qr(np.array([[1.0, 1.0], [1.0, -1.0]]))
    spec = JointSpectrum(np.array([1.0, 1.0 + 1e-9]), np.zeros(2), V.astype(complex), 1.0, 1e-7, 0.0, "test")
    with pytest.warns(MergeWarning):
        mu = recover_measure(space, spec)
    assert len(mu) == 1
    assert mu.total_mass == pytest.approx(1.0)
    assert mu.atoms[0][0] == pytest.approx(1.0)


def test_weight_floor_drops_ghosts(two_atom):
    u = oracle_extended(two_atom, Window(2, 1))
    space = build_space(u)
    spec = joint_diagonalize(build_operators(space, u))
    assert len(recover_measure(space, spec)) <= space.dim


def test_verify_examples(delta_origin, delta_one):
    rep = verify_measure(delta_origin, oracle_classical(delta_origin, 2), 1e-12)
    assert rep.passed and rep.details[0][1] == 0.0
    rep = verify_measure(delta_origin, oracle_classical(delta_one, 2), 1e-8)
    assert not rep.passed
    assert rep.details[0][0] == "moments@(1, 0)"
