"""Joint spectrum of a commuting Hermitian pair and the measure it carries."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .gns import GnsSpace, OperatorPair
from .moments import AtomicMeasure, CheckReport, ClassicalMoments, oracle_classical

MAX_RETRIES = 8
WEIGHT_FLOOR = 1e-12


class JointDiagonalizationError(RuntimeError):
    """The pair could not be diagonalized by a common unitary."""


class MergeWarning(UserWarning):
    """Several spectral points fell within the clustering tolerance."""


@dataclass(frozen=True)
class JointSpectrum:
    a: np.ndarray
    b: np.ndarray
    vectors: np.ndarray  # columns are the joint eigenvectors
    gamma_used: float
    cluster_tol: float
    off_diagonal: float
    method: str

    @property
    def eigenpairs(self):
        return [(float(a), float(b), self.vectors[:, j]) for j, (a, b) in enumerate(zip(self.a, self.b))]


def _off_diagonal(V: np.ndarray, mats) -> float:
    worst = 0.0
    for M in mats:
        D = V.conj().T @ M @ V
        worst = max(worst, float(np.max(np.abs(D - np.diag(np.diag(D))), initial=0.0)))
    return worst


def _clusters(values: np.ndarray, tol: float) -> list[np.ndarray]:
    groups, start = [], 0
    for i in range(1, len(values) + 1):
        if i == len(values) or values[i] - values[i - 1] > tol:
            groups.append(np.arange(start, i))
            start = i
    return groups


def _mixed_eigenvectors(A, B, gamma, tol):
    vals, V = np.linalg.eigh(A + gamma * B)
    for group in _clusters(vals, tol):
        if len(group) < 2:
            continue
        sub = V[:, group]
        for M in (B, A):
            # split what is left of the degeneracy by each operator in turn
            _, W = np.linalg.eigh(sub.conj().T @ M @ sub)
            sub = sub @ W
        V[:, group] = sub
    return V


def jacobi_joint_diagonalize(mats, sweeps: int = 100, threshold: float = 1e-15):
    """Simultaneous Jacobi rotations for a family of Hermitian matrices.

    Each plane rotation maximizes the summed squared gap between the two
    diagonal entries it touches, which is equivalent to minimizing the
    off-diagonal mass of the pair.
    """
    mats = [np.array(M, dtype=complex) for M in mats]
    size = mats[0].shape[0]
    V = np.eye(size, dtype=complex)
    for _ in range(sweeps):
        rotated = False
        for p in range(size - 1):
            for q in range(p + 1, size):
                h = np.array(
                    [[M[p, p].real - M[q, q].real, 2 * M[p, q].real, -2 * M[p, q].imag] for M in mats]
                )
                _, vecs = np.linalg.eigh(h.T @ h)
                x, y, z = vecs[:, -1]
                if x < 0:
                    x, y, z = -x, -y, -z
                c = np.sqrt((1 + x) / 2)
                s = (y + 1j * z) / np.sqrt(2 * (1 + x))
                if abs(s) <= threshold:
                    continue
                rotated = True
                R = np.array([[c, -np.conj(s)], [s, c]])
                cols = [p, q]
                for M in mats:
                    M[:, cols] = M[:, cols] @ R
                    M[cols, :] = R.conj().T @ M[cols, :]
                V[:, cols] = V[:, cols] @ R
        if not rotated:
            break
    return V


def joint_diagonalize(pair: OperatorPair, seed: int = 0, tol: float = 1e-8) -> JointSpectrum:
    """Common eigenbasis of the commuting pair ``(A, B)``.

    ``A + gamma B`` is diagonalized for a random ``gamma`` in ``[0.7, 1.3]``;
    degenerate clusters are split by ``B`` and then ``A``.  If the result is
    not diagonal for both operators the draw is repeated, and after
    ``MAX_RETRIES`` failures a Jacobi sweep is used.
    """
    A, B = pair.A, pair.B
    size = A.shape[0]
    scale = max(1.0, np.linalg.norm(A, 2) if size else 0.0, np.linalg.norm(B, 2) if size else 0.0)
    rng = np.random.default_rng(seed)
    cluster_tol = 1e-7 * scale
    if size == 0:
        empty = np.zeros(0)
        return JointSpectrum(empty, empty, np.zeros((0, 0), complex), 1.0, cluster_tol, 0.0, "empty")

    best = None
    gamma = None
    for _ in range(MAX_RETRIES + 1):
        gamma = float(rng.uniform(0.7, 1.3))
        V = _mixed_eigenvectors(A, B, gamma, tol * scale)
        off = _off_diagonal(V, (A, B))
        if best is None or off < best[1]:
            best = (V, off, "mixed")
        if off <= tol * scale:
            break
    else:
        V = jacobi_joint_diagonalize([A, B])
        off = _off_diagonal(V, (A, B))
        if off < best[1]:
            best = (V, off, "jacobi")
    V, off, method = best
    if off > tol * scale:
        raise JointDiagonalizationError(
            f"off-diagonal residual {off:.3e} exceeds {tol * scale:.3e}; the pair does not commute"
        )
    a = np.real(np.einsum("ij,ik,kj->j", V.conj(), A, V))
    b = np.real(np.einsum("ij,ik,kj->j", V.conj(), B, V))
    diam = max(np.ptp(a), np.ptp(b))
    return JointSpectrum(a, b, V, gamma, 1e-7 * (1 + diam), off, method)


def recover_measure(space: GnsSpace, spectrum: JointSpectrum) -> AtomicMeasure:
    """Atoms at the joint eigenvalues, weighted by ``|<v_j, cyclic>|^2``."""
    if space.dim == 0:
        return AtomicMeasure.from_atoms([])
    w = np.abs(spectrum.vectors.conj().T @ space.cyclic) ** 2
    total = w.sum()
    keep = w > WEIGHT_FLOOR * total
    pts = np.column_stack([spectrum.a[keep], spectrum.b[keep]])
    w = w[keep]

    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts, w = pts[order], w[order]
    merged_pts, merged_w = [], []
    used = np.zeros(len(w), dtype=bool)
    for i in range(len(w)):
        if used[i]:
            continue
        close = (~used) & (np.max(np.abs(pts - pts[i]), axis=1) <= spectrum.cluster_tol)
        used |= close
        wsum = w[close].sum()
        merged_pts.append((w[close] @ pts[close]) / wsum)
        merged_w.append(wsum)
    if len(merged_w) < len(w):
        warnings.warn(
            f"merged {len(w)} spectral points into {len(merged_w)} atoms "
            f"(cluster tolerance {spectrum.cluster_tol:.1e})",
            MergeWarning,
            stacklevel=2,
        )
    return AtomicMeasure(np.array(merged_pts).reshape(-1, 2), np.array(merged_w))


def verify_measure(mu: AtomicMeasure, s: ClassicalMoments, tol: float = 1e-8) -> CheckReport:
    """Max deviation of the moments of ``mu`` from ``s``, relative to ``max(1, |s|)``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    scale = s.scale()
    if len(mu) == 0:
        worst_val = max((abs(v) for v in s.s.values()), default=0.0)
        return CheckReport("verify", worst_val / scale <= tol, details=[("moments", worst_val / scale)])
    mine = oracle_classical(mu, s.deg_cap)
    worst, where = 0.0, None
    for mn, val in s.s.items():
        dev = abs(mine.s[mn] - val)
        if dev > worst:
            worst, where = dev, mn
    rel = worst / scale
    cid = f"moments@{where}" if where is not None else "moments"
    return CheckReport("verify", rel <= tol, details=[(cid, rel)])
