"""Finite GNS space of a moment kernel and the multiplication operators on it."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .lattice import ExtendedIndex, Window, ZERO, enumerate_basis, shift
from .moments import CheckReport, ExtendedMoments, gram_matrix

DEFAULT_RANK_TOL = 1e-10


class NotAMomentKernelError(ValueError):
    """The Gram kernel has a significantly negative eigenvalue."""


class FlatnessWarning(UserWarning):
    """Shifted vectors do not span the GNS space; the operator is a compression."""


@dataclass(frozen=True)
class GnsSpace:
    """Coordinates of the lattice vectors in a rank-revealing factorization.

    ``coords[i]`` is the coordinate vector of ``basis[i]``.  The inner product
    is ``<x, y> = vdot(y, x)`` (linear in the first slot), so that
    ``<coords[a], coords[b]> = G[a, b]``.
    """

    basis: list[ExtendedIndex]
    coords: np.ndarray
    gram: np.ndarray
    eigenvalues: np.ndarray
    gram_rank_tol: float

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    @property
    def position(self) -> dict[ExtendedIndex, int]:
        return {idx: i for i, idx in enumerate(self.basis)}

    def vector(self, idx: ExtendedIndex) -> np.ndarray:
        return self.coords[self.position[ExtendedIndex(*idx)]]

    @property
    def cyclic(self) -> np.ndarray:
        return self.vector(ZERO)

    def fidelity(self) -> float:
        """Max deviation of the coordinate Gram from the moment Gram."""
        X = self.coords
        return float(np.max(np.abs(X @ X.conj().T - self.gram), initial=0.0))


@dataclass(frozen=True)
class OperatorPair:
    A: np.ndarray
    B: np.ndarray
    domain_A: list[ExtendedIndex]
    domain_B: list[ExtendedIndex]
    residual_A: float
    residual_B: float
    symmetry_defect_A: float
    symmetry_defect_B: float
    flat: bool


def hermitian_part(M: np.ndarray) -> np.ndarray:
    return (M + M.conj().T) / 2


def build_space(
    u: ExtendedMoments,
    w: Window | None = None,
    rank_tol: float = DEFAULT_RANK_TOL,
    psd_tol: float | None = None,
) -> GnsSpace:
    """Factor the Gram kernel on ``B(w)`` as ``G = X X^H``.

    Eigenpairs above ``rank_tol * max eigenvalue`` are kept.  Negative
    eigenvalues down to ``-psd_tol * max(1, max eigenvalue)`` (default
    ``rank_tol``) are discarded with the rest of the numerical kernel; more
    negative ones raise :class:`NotAMomentKernelError`.
    """
    psd_tol = rank_tol if psd_tol is None else psd_tol
    w = u.window if w is None else w
    basis = enumerate_basis(w)
    G = hermitian_part(gram_matrix(u, basis))
    lam, V = np.linalg.eigh(G)
    hi = max(float(lam[-1]), 0.0)
    if lam[0] < -psd_tol * max(hi, 1.0):
        raise NotAMomentKernelError(
            f"Gram kernel has eigenvalue {lam[0]:.3e} below -{psd_tol:g} * {max(hi, 1.0):.3e}"
        )
    keep = lam > rank_tol * hi if hi > 0 else np.zeros(len(lam), dtype=bool)
    # largest eigenvalues first, so coordinates are ordered by significance
    keep_idx = np.flatnonzero(keep)[::-1]
    coords = V[:, keep_idx] * np.sqrt(lam[keep_idx])
    return GnsSpace(basis, coords, G, lam, rank_tol)


def _shift_operator(space: GnsSpace, axis: str):
    pos = space.position
    domain, targets = [], []
    for idx in space.basis:
        up = shift(idx, axis, +1)
        if up is not None and up in pos:
            domain.append(idx)
            targets.append(pos[up])
    dim = space.dim
    if dim == 0:
        return np.zeros((0, 0), dtype=complex), domain, 0.0, 0.0, True
    Xd = space.coords[[pos[i] for i in domain]]
    Yd = space.coords[targets]
    # row form: Xd @ M^T = Yd; singular directions are left at zero
    if len(domain):
        _, sv, vh = np.linalg.svd(Xd, full_matrices=False)
    else:
        sv, vh = np.zeros(1), np.zeros((0, dim))
    cutoff = np.sqrt(space.gram_rank_tol) * 1e-2
    span = int(np.sum(sv > cutoff * sv[0])) if len(domain) and sv[0] > 0 else 0
    flat = span == dim
    if not flat:
        warnings.warn(
            f"shift along {axis} spans {span} of {dim} dimensions; "
            "operator completed by symmetry and zero",
            FlatnessWarning,
            stacklevel=3,
        )
    Mt = np.linalg.lstsq(Xd, Yd, rcond=cutoff)[0] if len(domain) else np.zeros((dim, dim))
    # orthogonal projector onto the span of the domain coordinates
    Q = vh[:span].T
    P = Q @ Q.conj().T
    M = Mt.T @ P
    scale = max(1.0, float(np.max(np.abs(Yd), initial=0.0)))
    residual = float(np.max(np.abs(Xd @ M.T - Yd), initial=0.0)) / scale
    norm = max(1.0, float(np.linalg.norm(M, 2)))
    C = P @ M
    sym_defect = float(np.linalg.norm(C - C.conj().T, 2)) / norm
    # Hermitian completion: symmetrize the compression to the domain span,
    # mirror the part leaving it, and put zero on the orthogonal complement
    rest = M - C
    M = hermitian_part(C) + rest + rest.conj().T
    return M, domain, residual, sym_defect, flat


def build_operators(space: GnsSpace, u: ExtendedMoments | None = None) -> OperatorPair:
    """Matrices of multiplication by ``x1`` and ``x2`` on the GNS space.

    ``A`` sends ``coords[a]`` to ``coords[a + e_m]`` for every ``a`` whose
    m-shift stays in the basis (least squares), then is symmetrized; ``B``
    does the same along ``n``.  When the shifted vectors do not span the
    space the operator is completed as the Hermitian matrix that agrees with
    the shift on its domain and has no block on the complement.  ``u`` is
    accepted for interface symmetry and is not needed since the space
    already carries the kernel.
    """
    A, dom_a, res_a, sym_a, flat_a = _shift_operator(space, "m")
    B, dom_b, res_b, sym_b, flat_b = _shift_operator(space, "n")
    return OperatorPair(A, B, dom_a, dom_b, res_a, res_b, sym_a, sym_b, flat_a and flat_b)


def cayley(M: np.ndarray) -> np.ndarray:
    """``(M - iI)(M + iI)^{-1}`` for Hermitian ``M``."""
    M = np.asarray(M, dtype=complex)
    defect = np.max(np.abs(M - M.conj().T), initial=0.0)
    if defect > 1e-8 * max(1.0, np.max(np.abs(M), initial=0.0)):
        raise ValueError(f"matrix is not Hermitian (defect {defect:.3e})")
    eye = np.eye(M.shape[0])
    # the two factors commute, so a left solve is fine
    return np.linalg.solve(M + 1j * eye, M - 1j * eye)


def _opnorm(M: np.ndarray) -> float:
    return float(np.linalg.norm(M, 2)) if M.size else 0.0


def check_commutation(pair: OperatorPair, tol: float = 1e-8) -> CheckReport:
    if tol <= 0:
        raise ValueError("tol must be positive")
    A, B = pair.A, pair.B
    comm = _opnorm(A @ B - B @ A) / max(1.0, _opnorm(A) * _opnorm(B))
    VA, VB = cayley(A), cayley(B)
    comm_v = _opnorm(VA @ VB - VB @ VA)
    return CheckReport(
        "commutation",
        comm <= tol and comm_v <= tol,
        details=[("commutator", comm), ("cayley-commutator", comm_v)],
    )


def check_cayley_unitarity(V: np.ndarray, tol: float = 1e-10) -> CheckReport:
    V = np.asarray(V, dtype=complex)
    defect = _opnorm(V.conj().T @ V - np.eye(V.shape[0]))
    return CheckReport("cayley-unitarity", defect <= tol, details=[("unitarity", defect)])


def _power(v: np.ndarray, M: np.ndarray, p: int) -> np.ndarray:
    if p >= 0:
        for _ in range(p):
            v = M @ v
        return v
    for _ in range(-p):
        v = np.linalg.solve(M, v)
    return v


def reconstruct_vector(space: GnsSpace, pair: OperatorPair, idx: ExtendedIndex) -> np.ndarray:
    """``A^m (A+i)^k (A-i)^l B^n (B+i)^r (B-i)^t`` applied to the cyclic vector."""
    m, k, l, n, r, t = idx
    eye = np.eye(space.dim)
    v = space.cyclic.astype(complex)
    v = _power(v, pair.B - 1j * eye, t)
    v = _power(v, pair.B + 1j * eye, r)
    v = _power(v, pair.B, n)
    v = _power(v, pair.A - 1j * eye, l)
    v = _power(v, pair.A + 1j * eye, k)
    return _power(v, pair.A, m)
