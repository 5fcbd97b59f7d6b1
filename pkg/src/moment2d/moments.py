"""Moment containers, the atomic-measure oracle and the solvability checks."""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Iterable, Mapping

import numpy as np

from .lattice import (
    ExtendedIndex,
    Window,
    ZERO,
    classical,
    conj_index,
    data_indices,
    enumerate_basis,
    pair_index,
    shift,
)

DEFAULT_TOL = 1e-10


class MissingMomentError(LookupError):
    """A moment needed by a computation is absent from the data."""

    def __init__(self, index):
        self.index = index
        super().__init__(f"missing moment at index {index}")


@dataclass(frozen=True)
class AtomicMeasure:
    """Finitely atomic measure on the plane.

    Parameters
    ----------
    points : array_like, shape (N, 2)
        Atom locations ``(x1, x2)``.
    weights : array_like, shape (N,)
        Strictly positive masses.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        wts = np.asarray(self.weights, dtype=float).reshape(-1)
        if pts.shape[0] != wts.shape[0]:
            raise ValueError("points and weights have different lengths")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(wts))):
            raise ValueError("atoms must have finite coordinates and weights")
        if np.any(wts <= 0):
            raise ValueError("atom weights must be strictly positive")
        if len({tuple(p) for p in pts.tolist()}) != len(pts):
            raise ValueError("atom locations must be pairwise distinct")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)

    @classmethod
    def from_atoms(cls, atoms: Iterable[tuple[float, float, float]]) -> "AtomicMeasure":
        atoms = [tuple(a) for a in atoms]
        if not atoms:
            return cls(np.zeros((0, 2)), np.zeros(0))
        arr = np.array(atoms, dtype=float)
        return cls(arr[:, :2], arr[:, 2])

    @property
    def atoms(self) -> list[tuple[float, float, float]]:
        return [(float(p[0]), float(p[1]), float(w)) for p, w in zip(self.points, self.weights)]

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def __len__(self) -> int:
        return len(self.weights)

    def sorted(self) -> "AtomicMeasure":
        """Copy with atoms in lexicographic order of their coordinates."""
        order = np.lexsort((self.points[:, 1], self.points[:, 0]))
        return AtomicMeasure(self.points[order], self.weights[order])

    def scaled(self, factor: float) -> "AtomicMeasure":
        return AtomicMeasure(self.points, self.weights * factor)


@dataclass(frozen=True)
class ClassicalMoments:
    """Power moments ``s[(m, n)]`` for ``m + n <= 2 * deg_cap``."""

    deg_cap: int
    s: Mapping[tuple[int, int], complex]

    def __getitem__(self, mn: tuple[int, int]) -> complex:
        try:
            return self.s[mn]
        except KeyError:
            raise MissingMomentError(mn) from None

    def __contains__(self, mn) -> bool:
        return mn in self.s

    @property
    def max_degree(self) -> int:
        return 2 * self.deg_cap

    def scale(self) -> float:
        return max(1.0, max((abs(v) for v in self.s.values()), default=0.0))


@dataclass(frozen=True)
class ExtendedMoments:
    """Extended moments ``u[idx]`` on (a subset of) the data set of ``window``."""

    window: Window
    u: Mapping[ExtendedIndex, complex]
    # filled in by the extension solver; not part of the data
    reports: tuple = field(default=(), compare=False, repr=False)
    state: object = field(default=None, compare=False, repr=False)

    def __getitem__(self, idx: ExtendedIndex) -> complex:
        try:
            return self.u[idx]
        except KeyError:
            raise MissingMomentError(idx) from None

    def __contains__(self, idx) -> bool:
        return idx in self.u

    def scale(self) -> float:
        return max(1.0, max((abs(v) for v in self.u.values()), default=0.0))

    def missing(self) -> list[ExtendedIndex]:
        return [idx for idx in data_indices(self.window) if idx not in self.u]


@dataclass
class CheckReport:
    """Outcome of one solvability check.

    ``details`` lists ``(constraint id, residual)`` pairs; ``skipped`` counts
    constraints that referenced indices outside the available data.
    """

    name: str
    passed: bool
    min_eigenvalue: float = float("nan")
    max_recurrence_residual: float = 0.0
    max_symmetry_residual: float = 0.0
    details: list[tuple[str, float]] = field(default_factory=list)
    skipped: int = 0

    def __post_init__(self):
        self.passed = bool(self.passed)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "min_eigenvalue": float(self.min_eigenvalue),
            "max_recurrence_residual": float(self.max_recurrence_residual),
            "max_symmetry_residual": float(self.max_symmetry_residual),
            "details": [[cid, float(res)] for cid, res in self.details],
            "skipped": self.skipped,
        }


# --------------------------------------------------------------------------
# oracles


def _require_atoms(mu: AtomicMeasure):
    if len(mu) == 0:
        raise ValueError("the measure has no atoms")


def integrand(indices: Iterable[ExtendedIndex], points: np.ndarray) -> np.ndarray:
    """Evaluate the lattice integrands at ``points``; shape (len(indices), N)."""
    idx = np.array(list(indices), dtype=int).reshape(-1, 6)
    x1 = points[:, 0].astype(complex)[None, :]
    x2 = points[:, 1].astype(complex)[None, :]
    col = [idx[:, j][:, None] for j in range(6)]
    return (
        x1 ** col[0]
        * (x1 + 1j) ** col[1]
        * (x1 - 1j) ** col[2]
        * x2 ** col[3]
        * (x2 + 1j) ** col[4]
        * (x2 - 1j) ** col[5]
    )


def oracle_classical(mu: AtomicMeasure, deg_cap: int) -> ClassicalMoments:
    """Power moments of ``mu`` up to total degree ``2 * deg_cap``."""
    _require_atoms(mu)
    if deg_cap < 0:
        raise ValueError("deg_cap must be non-negative")
    x1, x2 = mu.points[:, 0], mu.points[:, 1]
    s = {}
    for deg in range(2 * deg_cap + 1):
        for m in range(deg + 1):
            n = deg - m
            s[(m, n)] = complex(np.sum(mu.weights * x1**m * x2**n))
    return ClassicalMoments(deg_cap, s)


def oracle_extended(
    mu: AtomicMeasure, w: Window, indices: Iterable[ExtendedIndex] | None = None
) -> ExtendedMoments:
    """Extended moments of ``mu`` on ``D(w)`` (or on ``indices`` if given)."""
    _require_atoms(mu)
    idx = data_indices(w) if indices is None else list(indices)
    vals = integrand(idx, mu.points) @ mu.weights
    return ExtendedMoments(w, {i: complex(v) for i, v in zip(idx, vals)})


def expand_nonnegative(idx: ExtendedIndex) -> dict[tuple[int, int], complex]:
    """Write a polynomial integrand as a combination of monomials.

    Returns ``{(a, b): c}`` with ``u[idx] = sum c * s[(a, b)]``.
    """
    if not ExtendedIndex(*idx).nonnegative:
        raise ValueError(f"{idx} has a negative resolvent exponent")
    m, k, l, n, r, t = idx

    def factor(power, plus, minus):
        # coefficients, lowest degree first, of x^power (x+i)^plus (x-i)^minus
        p = np.zeros(power + 1, dtype=complex)
        p[power] = 1.0
        for _ in range(plus):
            p = np.convolve(p, [1j, 1.0])
        for _ in range(minus):
            p = np.convolve(p, [-1j, 1.0])
        return p

    px, py = factor(m, k, l), factor(n, r, t)
    out = {}
    for a, ca in enumerate(px):
        if ca == 0:
            continue
        for b, cb in enumerate(py):
            if cb != 0:
                out[(a, b)] = complex(ca * cb)
    return out


def classical_as_extended(s: ClassicalMoments) -> ExtendedMoments:
    """View classical moments as extended moments on the window ``(deg_cap, 0)``."""
    u = {classical(m, n): v for (m, n), v in s.s.items()}
    return ExtendedMoments(Window(s.deg_cap, 0), u)


# --------------------------------------------------------------------------
# Gram kernel and checks


def gram_matrix(u: ExtendedMoments, basis: list[ExtendedIndex]) -> np.ndarray:
    """``G[a, b] = u[pair_index(a, b)]`` over ``basis``."""
    size = len(basis)
    G = np.empty((size, size), dtype=complex)
    for i, a in enumerate(basis):
        for j, b in enumerate(basis):
            G[i, j] = u[pair_index(a, b)]
    return G


def classical_basis(deg_cap: int) -> list[tuple[int, int]]:
    return [(m, deg - m) for deg in range(deg_cap + 1) for m in range(deg, -1, -1)]


def classical_moment_matrix(s: ClassicalMoments, deg_cap: int | None = None) -> np.ndarray:
    deg_cap = s.deg_cap if deg_cap is None else deg_cap
    basis = classical_basis(deg_cap)
    M = np.empty((len(basis), len(basis)), dtype=complex)
    for i, (a1, a2) in enumerate(basis):
        for j, (b1, b2) in enumerate(basis):
            M[i, j] = s[(a1 + b1, a2 + b2)]
    return M


def _psd_report(name: str, G: np.ndarray, tol: float) -> CheckReport:
    if tol <= 0:
        raise ValueError("tol must be positive")
    herm_defect = float(np.max(np.abs(G - G.conj().T), initial=0.0))
    eig = np.linalg.eigvalsh((G + G.conj().T) / 2)
    lo, hi = float(eig[0]), float(eig[-1])
    threshold = -tol * max(1.0, hi)
    scale = max(1.0, float(np.max(np.abs(G), initial=0.0)))
    passed = lo >= threshold and herm_defect <= tol * scale
    return CheckReport(
        name,
        passed,
        min_eigenvalue=lo,
        max_symmetry_residual=herm_defect,
        details=[("positivity", lo), ("hermitian", herm_defect)],
    )


def check_positivity(u: ExtendedMoments, w: Window, tol: float = DEFAULT_TOL) -> CheckReport:
    """Positive semidefiniteness of the Gram kernel on ``B(w)``."""
    return _psd_report("positivity", gram_matrix(u, enumerate_basis(w)), tol)


def check_classical_positivity(s: ClassicalMoments, tol: float = DEFAULT_TOL) -> CheckReport:
    return _psd_report("classical-positivity", classical_moment_matrix(s), tol)


# (constraint id, axis raised by one, sign of the i-term, resolvent axis raised)
RECURRENCES = (
    ("k-raise", "m", +1, "k"),
    ("l-raise", "m", -1, "l"),
    ("r-raise", "n", +1, "r"),
    ("t-raise", "n", -1, "t"),
)


def recurrence_instances(indices: Iterable[ExtendedIndex]):
    """Yield ``(cid, base, up, res)`` with ``u[up] +- i u[base] = u[res]``.

    Only instances whose three indices all lie in ``indices`` are produced.
    The second return value counts the skipped ones.
    """
    pool = set(indices)
    found, skipped = [], 0
    for idx in pool:
        for cid, axis, sign, res_axis in RECURRENCES:
            up = shift(idx, axis, +1)
            res = shift(idx, res_axis, +1)
            if up in pool and res in pool:
                found.append((cid, sign, idx, up, res))
            else:
                skipped += 1
    return found, skipped


def check_recurrences(u: ExtendedMoments, tol: float = DEFAULT_TOL) -> CheckReport:
    """Shift identities linking the power axes to the resolvent axes.

    For each base index the four identities
    ``u[m+1] + i u = u[k+1]``, ``u[m+1] - i u = u[l+1]`` and their
    ``n, r, t`` analogues are evaluated wherever all three entries exist.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    instances, skipped = recurrence_instances(u.u.keys())
    worst: dict[str, tuple[float, ExtendedIndex | None]] = {
        cid: (0.0, None) for cid, *_ in RECURRENCES
    }
    for cid, sign, base, up, res in instances:
        resid = abs(u.u[up] + sign * 1j * u.u[base] - u.u[res])
        if resid > worst[cid][0] or worst[cid][1] is None:
            worst[cid] = (resid, base)
    top = max((v[0] for v in worst.values()), default=0.0)
    details = [
        (f"{cid}@{base}" if base is not None else cid, res) for cid, (res, base) in worst.items()
    ]
    return CheckReport(
        "recurrences",
        top <= tol * u.scale(),
        max_recurrence_residual=top,
        details=details,
        skipped=skipped,
    )


def check_symmetry(u: ExtendedMoments, tol: float = DEFAULT_TOL) -> CheckReport:
    """``u[conj_index(idx)] == conj(u[idx])`` wherever both entries exist."""
    worst, where, skipped = 0.0, None, 0
    for idx, val in u.u.items():
        other = conj_index(idx)
        if other not in u.u:
            skipped += 1
            continue
        resid = abs(u.u[other] - np.conj(val))
        if resid > worst:
            worst, where = resid, idx
    details = [(f"conjugate@{where}" if where else "conjugate", worst)]
    return CheckReport(
        "symmetry",
        worst <= tol * u.scale(),
        max_symmetry_residual=worst,
        details=details,
        skipped=skipped,
    )


def check_anchoring(
    u: ExtendedMoments, s: ClassicalMoments, tol: float = DEFAULT_TOL
) -> CheckReport:
    """Classical entries of ``u`` must reproduce ``s``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    scale = s.scale()
    details, worst = [], 0.0
    for (m, n), val in s.s.items():
        idx = classical(m, n)
        if idx not in u.u:
            continue
        resid = abs(u.u[idx] - val)
        worst = max(worst, resid)
        if resid > tol * scale:
            details.append((f"anchor@({m},{n})", resid))
    details.insert(0, ("anchoring", worst))
    return CheckReport("anchoring", worst <= tol * scale, details=details)


def check_all(
    u: ExtendedMoments, s: ClassicalMoments | None = None, tol: float = DEFAULT_TOL
) -> list[CheckReport]:
    reports = [check_positivity(u, u.window, tol), check_recurrences(u, tol), check_symmetry(u, tol)]
    if s is not None:
        reports.append(check_anchoring(u, s, tol))
    return reports


def total_mass(u: ExtendedMoments) -> float:
    return float(np.real(u[ZERO]))
