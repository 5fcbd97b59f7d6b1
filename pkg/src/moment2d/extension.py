"""Extension of classical moments to extended moments on a truncation window.

The unknown extended moments are the entries of ``D(w)`` with a negative
resolvent exponent.  Entries with non-negative exponents are fixed by the
classical data.  Feasibility means: the shift identities and conjugate
symmetry hold, the Gram kernel on ``B(w)`` is positive semidefinite, and every
squared norm ``d = u[pair_index(a, a)]`` stays below its a-priori cap.

The solver alternates between the affine set cut out by the linear
identities, the PSD cone, and the norm caps.  Step bookkeeping follows the
canonical indexation of the non-classical basis vectors: step ``r`` adds the
vector ``x_{w(r)}`` and is summarised by its coefficients on the classical
orthonormal basis, on the previously added directions, and the remaining
slack.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace
from math import comb

import numpy as np
import scipy.sparse as sp

from .gns import DEFAULT_RANK_TOL, build_space
from .lattice import (
    ExtendedIndex,
    Window,
    classical,
    conj_index,
    data_indices,
    enumerate_basis,
    pair_index,
)
from .moments import (
    AtomicMeasure,
    CheckReport,
    ClassicalMoments,
    ExtendedMoments,
    MissingMomentError,
    check_all,
    check_classical_positivity,
    classical_basis,
    classical_moment_matrix,
    classical_as_extended,
    expand_nonnegative,
    integrand,
    oracle_extended,
    recurrence_instances,
)

log = logging.getLogger(__name__)


class Step0Rejected(ValueError):
    """The classical data already violates a necessary condition."""

    def __init__(self, report: CheckReport, message: str):
        self.report = report
        super().__init__(message)


class InsufficientDegreeError(ValueError):
    def __init__(self, required: tuple[int, int], available: int):
        self.required = required
        super().__init__(
            f"need classical moments up to (m, n) = {required}, have total degree {available}"
        )


class ExtensionError(RuntimeError):
    """No feasible extension was found; ``reports`` hold the best residuals."""

    def __init__(self, message: str, reports: list[CheckReport]):
        self.reports = reports
        super().__init__(message)


# --------------------------------------------------------------------------
# classical model space


@dataclass(frozen=True)
class ModelSpace:
    """Orthonormal basis of the span of the classical vectors ``h_{m,n}``.

    ``vectors[i]`` holds coordinates of ``h_{labels[i]}``; ``basis`` holds the
    Gram-Schmidt vectors ``g_1, g_2, ...`` in the same coordinates.
    """

    labels: list[tuple[int, int]]
    vectors: np.ndarray
    basis: np.ndarray
    gram_s: np.ndarray

    @property
    def rank(self) -> int:
        return self.basis.shape[0]

    def orthonormality_defect(self) -> float:
        if self.rank == 0:
            return 0.0
        return float(np.max(np.abs(self.basis.conj() @ self.basis.T - np.eye(self.rank))))

    def reproduction_defect(self) -> float:
        """How far the g-expansion of the h's is from reproducing ``gram_s``."""
        coef = self.vectors @ self.basis.conj().T
        return float(np.max(np.abs(coef @ coef.conj().T - self.gram_s), initial=0.0))


def gram_schmidt(rows: np.ndarray, tol: float) -> tuple[np.ndarray, list[int]]:
    """Modified Gram-Schmidt with one re-orthogonalization pass.

    Rows whose remainder has squared norm below ``tol`` times the largest
    squared row norm are treated as dependent.  Returns the orthonormal rows
    and the positions of the rows that contributed a new direction.
    """
    rows = np.asarray(rows, dtype=complex)
    scale = max((float(np.vdot(r, r).real) for r in rows), default=0.0)
    basis: list[np.ndarray] = []
    used = []
    for i, v in enumerate(rows):
        v = v.copy()
        for _ in range(2):
            for q in basis:
                v -= np.vdot(q, v) * q
        nrm2 = float(np.vdot(v, v).real)
        if scale > 0 and nrm2 > tol * scale:
            basis.append(v / np.sqrt(nrm2))
            used.append(i)
    dim = rows.shape[1] if rows.ndim == 2 else 0
    return (np.array(basis) if basis else np.zeros((0, dim), dtype=complex)), used


def _violated_minor(s: ClassicalMoments, tol: float) -> str:
    M = classical_moment_matrix(s)
    scale = max(1.0, float(np.max(np.abs(M), initial=0.0)))
    herm = float(np.max(np.abs(M - M.conj().T), initial=0.0))
    if herm > tol * scale:
        return f"moment matrix is not Hermitian (defect {herm:.3e})"
    labels = classical_basis(s.deg_cap)
    for size in range(1, len(labels) + 1):
        lo = float(np.linalg.eigvalsh(M[:size, :size])[0])
        if lo < -tol * scale:
            return (
                f"leading minor of size {size} (monomials up to x1^{labels[size - 1][0]} "
                f"x2^{labels[size - 1][1]}) has eigenvalue {lo:.3e}"
            )
    return "moment matrix is not positive semidefinite"


def step0(s: ClassicalMoments, tol: float = 1e-10) -> ModelSpace:
    """Validate the classical data and build its orthonormal model basis.

    Positivity of the moment matrix and its Hermitian (hence Hankel-real)
    structure are checked; the index-sum dependence of the classical inner
    products holds by construction of the moment matrix.

    Raises
    ------
    Step0Rejected
        When the classical data admits no representing measure.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    report = check_classical_positivity(s, tol)
    if not report.passed:
        raise Step0Rejected(report, "classical data rejected: " + _violated_minor(s, tol))
    u0 = classical_as_extended(s)
    space = build_space(u0, u0.window, tol)
    labels = [(idx.m, idx.n) for idx in space.basis]
    g, _ = gram_schmidt(space.coords, tol)
    return ModelSpace(labels, space.coords, g, space.gram)


def bound_M(idx: ExtendedIndex, s: ClassicalMoments) -> float:
    """A-priori cap on ``||x_idx||^2``.

    The squared norm is the integral of
    ``x1^{2m} (x1^2+1)^{k+l} x2^{2n} (x2^2+1)^{r+t}``; a non-positive exponent
    of ``x^2 + 1`` is bounded by one, a positive one is expanded binomially.
    """
    m, k, l, n, r, t = idx
    p1, p2 = max(k + l, 0), max(r + t, 0)
    need = (2 * m + 2 * p1, 2 * n + 2 * p2)
    if sum(need) > s.max_degree:
        raise InsufficientDegreeError(need, s.max_degree)
    total = 0.0
    for a in range(p1 + 1):
        for b in range(p2 + 1):
            total += comb(p1, a) * comb(p2, b) * s[(2 * m + 2 * a, 2 * n + 2 * b)].real
    return float(total)


# --------------------------------------------------------------------------
# state and linear constraints


@dataclass
class StepParameters:
    step: int
    index: ExtendedIndex
    bound: float
    d: float
    alpha: np.ndarray
    beta: np.ndarray
    slack: float
    theta: float = 0.0


@dataclass
class ExtensionState:
    window: Window
    known: dict[ExtendedIndex, complex]
    free: list[ExtendedIndex]
    steps: list[ExtendedIndex]
    bounds: dict[int, float]
    parameters: list[StepParameters] = field(default_factory=list)
    step: int = 0


def init_state(s: ClassicalMoments, w: Window) -> ExtensionState:
    """Fix every polynomial entry of ``D(w)`` from ``s`` and list the unknowns."""
    need = 2 * (w.deg_cap + w.res_cap)
    if s.max_degree < need:
        raise InsufficientDegreeError((need, 0), s.max_degree)
    known, free = {}, []
    for idx in data_indices(w):
        if idx.nonnegative:
            try:
                known[idx] = complex(sum(c * s[ab] for ab, c in expand_nonnegative(idx).items()))
            except MissingMomentError as exc:
                raise InsufficientDegreeError(exc.index, s.max_degree) from exc
        else:
            free.append(idx)
    steps = [idx for idx in enumerate_basis(w) if not idx.is_classical]
    bounds = {r: bound_M(idx, s) for r, idx in enumerate(steps, start=1)}
    return ExtensionState(w, known, free, steps, bounds)


class LinearSystem:
    """Real linear system ``matrix @ z = rhs`` in ``z = [Re u_free, Im u_free]``."""

    def __init__(self, unknowns, matrix, rhs, labels):
        self.unknowns = unknowns
        self.matrix = matrix
        self.rhs = rhs
        self.labels = labels
        self._row_space = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def row_space(self):
        """Nonzero eigenpairs of ``matrix^T matrix``; cached."""
        if self._row_space is None:
            self._row_space = _row_space(self.matrix)
        return self._row_space

    @property
    def condition(self) -> float:
        if self.matrix.shape[0] == 0 or self.matrix.shape[1] == 0:
            return 1.0
        lam, _ = self.row_space()
        return float(np.sqrt(lam[-1] / lam[0])) if len(lam) else 1.0

    def residual(self, z: np.ndarray) -> float:
        if self.matrix.shape[0] == 0:
            return 0.0
        return float(np.max(np.abs(self.matrix @ z - self.rhs)))


def _pack(values: dict, unknowns) -> np.ndarray:
    vals = np.array([values[i] for i in unknowns], dtype=complex)
    return np.concatenate([vals.real, vals.imag])


def _unpack(z: np.ndarray, count: int) -> np.ndarray:
    return z[:count] + 1j * z[count:]


def _slot_matrix(basis: list[ExtendedIndex], ids: dict[ExtendedIndex, int]) -> np.ndarray:
    return np.array([[ids[pair_index(a, b)] for b in basis] for a in basis], dtype=int)


def integrand_relations(basis: list[ExtendedIndex], tol: float = 1e-10) -> np.ndarray:
    """Linear relations ``sum_b c[b] f_b = 0`` holding identically among the basis integrands.

    For example ``(x1 + i) - (x1 - i) - 2i = 0``.  The relations are read off
    the null space of the integrands sampled at fixed real points, with the
    columns normalized so the tolerance is scale free.  Returns an array of
    shape ``(q, len(basis))``.
    """
    if not basis:
        return np.zeros((0, 0), dtype=complex)
    rng = np.random.default_rng(0)
    pts = rng.uniform(-2.0, 2.0, size=(4 * len(basis) + 16, 2))
    F = integrand(basis, pts).T
    norms = np.linalg.norm(F, axis=0)
    _, sv, Vh = np.linalg.svd(F / norms, full_matrices=True)
    rank = int(np.sum(sv > tol * sv[0]))
    null = Vh[rank:].conj()
    return null / norms


def _orthonormal_rows(K: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    if len(K) == 0:
        return K
    _, sv, Vh = np.linalg.svd(K, full_matrices=False)
    return Vh[sv > tol * sv[0]]


def _block_kernel(basis, values, members, tol):
    G = np.array([[values[pair_index(basis[a], basis[b])] for b in members] for a in members])
    lam, V = np.linalg.eigh((G + G.conj().T) / 2)
    small = lam <= tol * max(1.0, float(lam[-1]))
    out = np.zeros((int(small.sum()), len(basis)), dtype=complex)
    out[:, members] = V[:, small].T
    return out


def _determined_block(basis, values):
    """Greedy set of basis positions whose pairwise Gram entries are all in ``values``."""
    order = sorted(range(len(basis)), key=lambda i: not basis[i].nonnegative)
    members: list[int] = []
    for i in order:
        if all(pair_index(basis[i], basis[b]) in values for b in members + [i]):
            members.append(i)
    return sorted(members)


def kernel_vectors(state: ExtensionState, tol: float = 1e-10, max_rounds: int = 10) -> np.ndarray:
    """Vectors ``v`` with ``G v = 0`` for every PSD extension of the data.

    Starts from the identities among the integrands.  Each round then takes
    the largest block of the Gram matrix whose entries are pinned by the
    classical data and the constraints found so far; a null vector ``v`` of
    that block has ``v^H G v = 0`` and, by positivity, ``G v = 0`` on the
    whole basis.  Rounds stop when no new null vectors appear.  Returned as
    orthonormal rows over ``enumerate_basis``.
    """
    basis = enumerate_basis(state.window)
    relations = integrand_relations(basis).conj()
    kernel, count = _orthonormal_rows(relations), -1
    F = len(state.free)
    for _ in range(max_rounds):
        values = dict(state.known)
        if F:
            system = assemble_constraints(state, kernel=kernel)
            lam, V = system.row_space()
            if len(lam):
                z0 = V @ ((V.T @ (system.matrix.T @ system.rhs)) / lam)
                # a coordinate is pinned when it lies entirely in the row space
                pinned = 1.0 - np.sum(V**2, axis=1) < 1e-12
                for j, idx in enumerate(state.free):
                    if pinned[j] and pinned[F + j]:
                        values[idx] = complex(z0[j], z0[F + j])
        block = _block_kernel(basis, values, _determined_block(basis, values), tol)
        if len(block) == count:
            break
        count = len(block)
        kernel = _orthonormal_rows(np.vstack([relations, block]))
    return kernel


def assemble_constraints(
    state: ExtensionState,
    pins: dict[ExtendedIndex, complex] | None = None,
    kernel: np.ndarray | None = None,
) -> LinearSystem:
    """Shift identities and conjugate symmetry as a real system in the unknowns.

    Known entries are moved to the right-hand side and equations without an
    unknown are dropped.  ``pins`` adds equations ``u[idx] = value``.  Each
    row ``v`` of ``kernel`` adds the equations ``G v = 0`` (see
    :func:`kernel_vectors`); these hold for every PSD extension but the
    projection scheme would otherwise only reach them in the limit.
    """
    known = list(state.known)
    entries = known + state.free
    ids = {idx: j for j, idx in enumerate(entries)}
    nk, F = len(known), len(state.free)
    known_vals = np.array([state.known[i] for i in known], dtype=complex)

    # complex-linear equations: C @ u_entries = c0
    r_idx, c_idx, vals, c0, labels = [], [], [], [], []
    instances, _ = recurrence_instances(entries)
    for cid, sign, base, up, res in sorted(instances, key=lambda x: (x[0], tuple(x[2]))):
        row = len(c0)
        r_idx += [row] * 3
        c_idx += [ids[up], ids[base], ids[res]]
        vals += [1.0, sign * 1j, -1.0]
        c0.append(0j)
        labels.append(f"{cid}@{base}")
    for idx, value in (pins or {}).items():
        r_idx.append(len(c0))
        c_idx.append(ids[idx])
        vals.append(1.0)
        c0.append(complex(value))
        labels.append(f"pin@{idx}")
    C = sp.coo_matrix((vals, (r_idx, c_idx)), shape=(len(c0), len(entries)), dtype=complex).tocsr()
    c0 = np.array(c0, dtype=complex)
    if kernel is not None and len(kernel):
        basis = enumerate_basis(state.window)
        slot = _slot_matrix(basis, ids)
        q, nb = kernel.shape
        rows = np.repeat(np.arange(q * nb), nb)
        cols = np.tile(slot, (q, 1)).ravel()
        kv = np.repeat(kernel, nb, axis=0).ravel()
        K = sp.csr_matrix((kv, (rows, cols)), shape=(q * nb, len(entries)))
        K.data[np.abs(K.data) < 1e-14] = 0
        K.eliminate_zeros()
        C = sp.vstack([C, K]).tocsr()
        c0 = np.concatenate([c0, np.zeros(q * nb)])
        labels += [f"kernel{j}@{a}" for j in range(q) for a in basis]

    Cf, Ck = C[:, nk:], C[:, :nk]
    rhs = c0 - Ck @ known_vals
    live = np.diff(Cf.indptr) > 0
    Cf, rhs = Cf[live], rhs[live]
    labels = [lab for lab, keep in zip(labels, live) if keep]
    re, im = sp.csr_matrix(Cf.real), sp.csr_matrix(Cf.imag)
    blocks = [sp.hstack([re, -im]), sp.hstack([im, re])]
    all_labels = [f"{lab}.re" for lab in labels] + [f"{lab}.im" for lab in labels]
    rhs_parts = [rhs.real, rhs.imag]

    # conjugate symmetry is real-linear only: u[conj] = conj(u[idx])
    col = {idx: j for j, idx in enumerate(state.free)}
    cr, cc, cv, clab, seen = [], [], [], [], set()
    for idx in state.free:
        if idx in seen:
            continue
        other = conj_index(idx)
        seen.update((idx, other))
        j, k = col[idx], col[other]
        row = len(clab)
        if j == k:
            cr.append(row)
            cc.append(F + j)
            cv.append(1.0)
            clab.append(f"conjugate@{idx}.im")
            continue
        cr += [row, row, row + 1, row + 1]
        cc += [k, j, F + k, F + j]
        cv += [1.0, -1.0, 1.0, 1.0]
        clab += [f"conjugate@{idx}.re", f"conjugate@{idx}.im"]
    blocks.append(sp.csr_matrix((cv, (cr, cc)), shape=(len(clab), 2 * F)))
    all_labels += clab
    rhs_parts.append(np.zeros(len(clab)))

    matrix = sp.vstack(blocks).tocsr() if F else sp.csr_matrix((0, 0))
    rhs_all = np.concatenate(rhs_parts) if F else np.zeros(0)
    return LinearSystem(state.free, matrix, rhs_all, all_labels if F else [])


def _row_space(matrix: sp.csr_matrix):
    if matrix.shape[1] == 0:
        return np.zeros(0), np.zeros((0, 0))
    normal = (matrix.T @ matrix).toarray()
    lam, V = np.linalg.eigh(normal)
    top = lam[-1]
    keep = lam > 1e-12 * top if top > 0 else np.zeros(len(lam), dtype=bool)
    return lam[keep], V[:, keep]


class _AffineProjector:
    """Orthogonal projection onto ``{z : matrix @ z = rhs}`` in the metric ``diag(weights)``.

    Inconsistent systems are handled in the least-squares sense.
    """

    def __init__(self, system: LinearSystem, weights: np.ndarray | None = None):
        n = system.shape[1]
        self.root = np.sqrt(weights) if weights is not None else np.ones(n)
        scaled = sp.csr_matrix(system.matrix @ sp.diags(1.0 / self.root)) if n else system.matrix
        lam, V = _row_space(scaled) if weights is not None else system.row_space()
        self.V = V
        self.y0 = V @ ((V.T @ (scaled.T @ system.rhs)) / lam) if len(lam) else None

    def __call__(self, z: np.ndarray) -> np.ndarray:
        if self.y0 is None:
            return z
        y = z * self.root
        y = y - self.V @ (self.V.T @ (y - self.y0))
        return y / self.root


@dataclass(frozen=True)
class ExtendOptions:
    max_iters: int = 500
    tol: float = 1e-9
    seed: int = 0
    init: str = "cauchy"  # or "zero"
    rank_tol: float = DEFAULT_RANK_TOL


class _Problem:
    """Precomputed maps between the unknown vector and the Gram matrix on ``B(w)``."""

    def __init__(self, s: ClassicalMoments, w: Window, pins=None, kernel=None, kernel_tol: float = 1e-10):
        self.s = s
        self.state = init_state(s, w)
        self.kernel = kernel_vectors(self.state, kernel_tol) if kernel is None else kernel
        self.system = assemble_constraints(self.state, pins, self.kernel)
        st = self.state
        self.free = st.free
        self.F = len(st.free)
        self.entries = list(st.known) + st.free
        self.known_vals = np.array([st.known[i] for i in st.known], dtype=complex)
        ids = {idx: j for j, idx in enumerate(self.entries)}
        self.basis = enumerate_basis(w)
        self.slot = _slot_matrix(self.basis, ids)
        nk = len(self.known_vals)
        flat = self.slot.ravel()
        self.free_mask = flat >= nk
        self.free_slot = flat[self.free_mask] - nk
        self.counts = np.bincount(self.free_slot, minlength=self.F)
        # Frobenius geometry on G: each unknown weighs as often as it appears
        weight = np.maximum(self.counts, 1).astype(float)
        self.project = _AffineProjector(self.system, np.concatenate([weight, weight]))
        # caps on squared norms of basis vectors whose norm entry is unknown
        caps: dict[int, float] = {}
        for r, idx in enumerate(st.steps, start=1):
            d_idx = pair_index(idx, idx)
            if d_idx in ids and ids[d_idx] >= nk:
                j = ids[d_idx] - nk
                caps[j] = min(caps.get(j, np.inf), st.bounds[r])
        self.cap_idx = np.array(sorted(caps), dtype=int)
        self.cap_val = np.array([caps[j] for j in sorted(caps)], dtype=float)

    def gram(self, z: np.ndarray) -> np.ndarray:
        vals = np.concatenate([self.known_vals, _unpack(z, self.F)])
        return vals[self.slot]

    def psd_repair(self, z: np.ndarray, G: np.ndarray, lam, V) -> np.ndarray:
        Gp = (V * np.clip(lam, 0, None)) @ V.conj().T
        flat = Gp.ravel()[self.free_mask]
        re = np.bincount(self.free_slot, flat.real, self.F) / np.maximum(self.counts, 1)
        im = np.bincount(self.free_slot, flat.imag, self.F) / np.maximum(self.counts, 1)
        out = z.copy()
        hit = self.counts > 0
        out[: self.F][hit] = re[hit]
        out[self.F :][hit] = im[hit]
        return out

    def clamp(self, z: np.ndarray) -> np.ndarray:
        if len(self.cap_idx) == 0:
            return z
        z = z.copy()
        z[self.cap_idx] = np.clip(z[self.cap_idx], 0.0, self.cap_val)
        z[self.F + self.cap_idx] = 0.0
        return z

    def moments(self, z: np.ndarray, reports=()) -> ExtendedMoments:
        u = dict(self.state.known)
        u.update(zip(self.free, _unpack(z, self.F).tolist()))
        return ExtendedMoments(self.state.window, u, reports=tuple(reports))


def provisional_measure(s: ClassicalMoments, seed: int = 0, rank_tol: float = DEFAULT_RANK_TOL):
    """Atoms read off the classical data alone (exact when the data is flat), or ``None``."""
    from .pipeline import recover

    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rec = recover(classical_as_extended(s), rank_tol, seed, tol=1e-6)
    except Exception as exc:  # heuristic only; any failure means a cold start
        log.debug("provisional measure unavailable: %s", exc)
        return None
    return rec.measure


def _initial_vector(problem: _Problem, opts: ExtendOptions) -> np.ndarray:
    if opts.init == "zero" or problem.F == 0:
        return np.zeros(2 * problem.F)
    if opts.init != "cauchy":
        raise ValueError(f"unknown init {opts.init!r}")
    mu = provisional_measure(problem.s, opts.seed, opts.rank_tol)
    if mu is None or len(mu) == 0:
        return np.zeros(2 * problem.F)
    guess = oracle_extended(mu, problem.state.window, problem.free)
    return _pack(guess.u, problem.free)


def _solve(problem: _Problem, z: np.ndarray, opts: ExtendOptions) -> tuple[np.ndarray, int]:
    tol = opts.tol
    for it in range(1, opts.max_iters + 1):
        z = problem.project(z)
        G = problem.gram(z)
        G = (G + G.conj().T) / 2
        lam, V = np.linalg.eigh(G)
        capped = problem.clamp(z)
        if lam[0] >= -tol * max(1.0, lam[-1]) * 0.5 and np.allclose(capped, z, rtol=0, atol=tol):
            return z, it
        z = problem.clamp(problem.psd_repair(z, G, lam, V))
    return problem.project(z), opts.max_iters


def _finish(problem: _Problem, z: np.ndarray, opts: ExtendOptions, iterations: int) -> ExtendedMoments:
    u = problem.moments(z)
    reports = check_all(u, problem.s, opts.tol)
    if not all(r.passed for r in reports):
        failed = ", ".join(f"{r.name} {r.details[:2]}" for r in reports if not r.passed)
        raise ExtensionError(f"no feasible extension after {iterations} iterations: {failed}", reports)
    state = replace(problem.state, step=len(problem.state.steps))
    state.parameters = step_parameters(u, problem.state, opts)
    return replace(u, reports=tuple(reports), state=state)


def extend_truncated(
    s: ClassicalMoments, w: Window, opts: ExtendOptions | None = None, **overrides
) -> ExtendedMoments:
    """Extended moments on ``w`` consistent with the classical moments ``s``.

    Polynomial entries come from ``s``; the rest are found by alternating
    projections started from the extended moments of a provisional atomic
    measure read off ``s`` (``init="cauchy"``) or from zero.  The result is
    the feasible point reached from that start; its check reports and step
    parameters are attached as ``.reports`` and ``.state``.

    Raises
    ------
    Step0Rejected
        If the classical data fails the necessary conditions.
    ExtensionError
        If no point passing every check is reached within ``max_iters``.
    """
    opts = replace(opts or ExtendOptions(), **overrides)
    return _extend(s, w, opts)[0]


def _extend(s: ClassicalMoments, w: Window, opts: ExtendOptions):
    step0(s, opts.tol)
    problem = _Problem(s, w, kernel_tol=opts.rank_tol)
    z, iterations = _solve(problem, _initial_vector(problem, opts), opts)
    log.debug("extension stopped after %d iterations", iterations)
    return _finish(problem, z, opts, iterations), problem


def step_parameters(u: ExtendedMoments, state: ExtensionState, opts: ExtendOptions) -> list[StepParameters]:
    """Coefficients of each step vector on the classical basis and on earlier steps."""
    # the solution is PSD only up to opts.tol, so factor at that tolerance
    space = build_space(u, u.window, opts.rank_tol, psd_tol=opts.tol)
    classical_rows = [space.position[i] for i in space.basis if i.is_classical]
    g, _ = gram_schmidt(space.coords[classical_rows], opts.rank_tol)
    extra: list[np.ndarray] = []
    scale = max(1.0, float(np.max(np.abs(space.gram), initial=0.0)))
    params = []
    for r, idx in enumerate(state.steps, start=1):
        h = space.vector(idx)
        alpha = g.conj() @ h if len(g) else np.zeros(0, dtype=complex)
        beta = np.array([np.vdot(e, h) for e in extra], dtype=complex)
        rem = h - (alpha @ g if len(g) else 0) - (beta @ np.array(extra) if extra else 0)
        slack = float(np.vdot(rem, rem).real)
        if slack > opts.tol * scale:
            extra.append(rem / np.sqrt(slack))
        d = float(u[pair_index(idx, idx)].real)
        params.append(StepParameters(r, idx, state.bounds[r], d, alpha, beta, slack, 0.0))
    return params


# --------------------------------------------------------------------------
# solution family


def _same(u1: ExtendedMoments, u2: ExtendedMoments, tol: float) -> bool:
    scale = max(u1.scale(), u2.scale())
    return all(abs(u1.u[i] - u2.u[i]) <= tol * scale for i in u1.u)


def is_realizable(u: ExtendedMoments, opts: ExtendOptions, tol: float = 1e-8) -> bool:
    """True when the spectral recovery of ``u`` reproduces ``u`` itself."""
    from .pipeline import RecoveryError, extended_roundtrip_residual, recover

    try:
        rec = recover(u, opts.rank_tol, opts.seed, tol)
    except RecoveryError:
        return False
    if not rec.pair.flat:
        return False
    return extended_roundtrip_residual(rec.measure, u) <= tol


def _rotated_start(problem: _Problem, base: ExtendedMoments, step: int, theta: float, opts) -> np.ndarray:
    """Unknowns after turning the new direction of step ``step`` by ``e^{i theta}``."""
    space = build_space(base, base.window, opts.rank_tol, psd_tol=opts.tol)
    classical_rows = [space.position[i] for i in space.basis if i.is_classical]
    g, _ = gram_schmidt(space.coords[classical_rows], opts.rank_tol)
    rows = [space.position[i] for i in problem.state.steps]
    frame, _ = gram_schmidt(np.vstack([g, space.coords[rows]]) if len(rows) else g, opts.rank_tol)
    coef = space.coords @ frame.conj().T  # coordinates in the orthonormal frame
    pos = space.position[problem.state.steps[step - 1]]
    # the step's own direction is the frame vector with the largest component
    # that no earlier vector touches
    earlier = [space.position[i] for i in space.basis if i.is_classical] + rows[: step - 1]
    touched = np.max(np.abs(coef[earlier]), axis=0) if earlier else np.zeros(coef.shape[1])
    fresh = np.flatnonzero(touched <= 1e-12 * max(1.0, np.max(np.abs(coef))))
    if len(fresh) == 0:
        return _pack(base.u, problem.free)
    j = fresh[np.argmax(np.abs(coef[pos, fresh]))]
    coef[pos, j] *= np.exp(1j * theta)
    G = coef @ coef.conj().T
    z = _pack(base.u, problem.free)
    nk = len(problem.known_vals)
    flat = G.ravel()[problem.free_mask]
    re = np.bincount(problem.free_slot, flat.real, problem.F) / np.maximum(problem.counts, 1)
    im = np.bincount(problem.free_slot, flat.imag, problem.F) / np.maximum(problem.counts, 1)
    hit = problem.counts > 0
    z[: problem.F][hit] = re[hit]
    z[problem.F :][hit] = im[hit]
    del nk
    return z


def enumerate_solution_family(
    s: ClassicalMoments,
    w: Window,
    depth: int,
    grid: int,
    opts: ExtendOptions | None = None,
    realizable_only: bool = False,
    **overrides,
) -> list[ExtendedMoments]:
    """Sample feasible extensions by sweeping the free parameters of the first steps.

    For each of the first ``depth`` steps the squared norm ``d`` of the new
    vector is pinned to ``grid`` values between its projected part and its
    cap, and the phase of the new direction is turned through ``grid``
    angles in ``[0, 2 pi)``; each setting is re-solved.  Feasible results are
    de-duplicated at ``1e-8`` relative to scale.  With ``realizable_only`` a
    result (the base extension included) is kept only if spectral recovery
    reproduces it, i.e. it is the extended moment sequence of an actual
    measure.
    """
    opts = replace(opts or ExtendOptions(), **overrides)
    base, base_problem = _extend(s, w, opts)
    if depth <= 0:
        return [base]
    family: list[ExtendedMoments] = []

    def add(u):
        if realizable_only and not is_realizable(u, opts):
            return
        if not any(_same(u, v, 1e-8) for v in family):
            family.append(u)

    add(base)
    params = base.state.parameters
    for r in range(1, min(depth, len(params)) + 1):
        p = params[r - 1]
        d_idx = pair_index(p.index, p.index)
        if d_idx in base_problem.state.free and grid > 0:
            lower = p.d - p.slack
            for target in np.linspace(lower, p.bound, grid):
                problem = _Problem(s, w, pins={d_idx: complex(target)}, kernel=base_problem.kernel)
                z, iterations = _solve(problem, _pack(base.u, problem.free), opts)
                try:
                    add(_finish(problem, z, opts, iterations))
                except ExtensionError:
                    continue
        for theta in np.linspace(0, 2 * np.pi, grid, endpoint=False):
            z0 = _rotated_start(base_problem, base, r, theta, opts)
            z, iterations = _solve(base_problem, z0, opts)
            try:
                add(_finish(base_problem, z, opts, iterations))
            except ExtensionError:
                continue
    return family
