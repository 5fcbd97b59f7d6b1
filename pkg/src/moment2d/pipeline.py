"""End-to-end recovery: extended moments -> GNS space -> operators -> atoms."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .gns import (
    DEFAULT_RANK_TOL,
    FlatnessWarning,
    GnsSpace,
    OperatorPair,
    build_operators,
    build_space,
    cayley,
    check_cayley_unitarity,
    check_commutation,
)
from .moments import AtomicMeasure, CheckReport, ExtendedMoments, oracle_extended
from .spectral import JointSpectrum, joint_diagonalize, recover_measure


class RecoveryError(RuntimeError):
    """Recovery stopped at ``stage``; ``report`` explains why when available."""

    def __init__(self, stage: str, message: str, report: CheckReport | None = None):
        self.stage = stage
        self.report = report
        super().__init__(f"{stage}: {message}")


@dataclass
class Recovery:
    measure: AtomicMeasure
    space: GnsSpace
    pair: OperatorPair
    spectrum: JointSpectrum
    reports: dict[str, CheckReport] = field(default_factory=dict)


def recover(
    u: ExtendedMoments,
    rank_tol: float = DEFAULT_RANK_TOL,
    seed: int = 0,
    tol: float = 1e-8,
) -> Recovery:
    """Run the full spectral pipeline on ``u``.

    ``tol`` bounds the commutation and diagonalization residuals and the
    negative Gram eigenvalues tolerated as round-off.

    Raises
    ------
    RecoveryError
        If the kernel is not positive, the operators fail to commute, or the
        joint diagonalization does not converge.
    """
    try:
        space = build_space(u, u.window, rank_tol, psd_tol=max(rank_tol, tol))
    except ValueError as exc:
        raise RecoveryError("positivity", str(exc)) from exc
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", FlatnessWarning)
        pair = build_operators(space, u)
    for w in caught:
        if not issubclass(w.category, FlatnessWarning):
            warnings.warn_explicit(w.message, w.category, w.filename, w.lineno)
    reports = {}
    comm = check_commutation(pair, tol)
    reports["commutation"] = comm
    if not comm.passed:
        raise RecoveryError("commutation", f"operators do not commute {comm.details}", comm)
    reports["unitarity-A"] = check_cayley_unitarity(cayley(pair.A))
    reports["unitarity-B"] = check_cayley_unitarity(cayley(pair.B))
    reports["flatness"] = CheckReport(
        "flatness",
        pair.flat,
        details=[("residual-A", pair.residual_A), ("residual-B", pair.residual_B)],
    )
    try:
        spectrum = joint_diagonalize(pair, seed, tol)
    except RuntimeError as exc:
        raise RecoveryError("joint-diagonalization", str(exc)) from exc
    measure = recover_measure(space, spectrum)
    return Recovery(measure, space, pair, spectrum, reports)


def extended_roundtrip_residual(mu: AtomicMeasure, u: ExtendedMoments) -> float:
    """Max deviation between ``u`` and the extended moments of ``mu``, relative to ``u.scale()``."""
    idx = list(u.u)
    if len(mu) == 0:
        return max((abs(v) for v in u.u.values()), default=0.0) / u.scale()
    mine = oracle_extended(mu, u.window, idx)
    worst = max((abs(mine.u[i] - u.u[i]) for i in idx), default=0.0)
    return float(worst) / u.scale()


def canonical_atoms(mu: AtomicMeasure) -> np.ndarray:
    """``(N, 3)`` array of ``(x1, x2, w)`` rows in lexicographic order."""
    srt = mu.sorted()
    return np.column_stack([srt.points, srt.weights]) if len(srt) else np.zeros((0, 3))
