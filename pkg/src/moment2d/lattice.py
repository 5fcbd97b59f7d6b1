"""Index arithmetic on the extended moment lattice.

An extended index ``(m, k, l; n, r, t)`` labels the integrand
``x1^m (x1+i)^k (x1-i)^l x2^n (x2+i)^r (x2-i)^t``.  The powers ``m`` and ``n``
are non-negative, the four resolvent exponents are arbitrary integers.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import product
from typing import Iterator, NamedTuple

AXES = ("m", "k", "l", "n", "r", "t")


class ExtendedIndex(NamedTuple):
    m: int
    k: int
    l: int  # noqa: E741
    n: int
    r: int
    t: int

    def __str__(self) -> str:
        return f"({self.m},{self.k},{self.l};{self.n},{self.r},{self.t})"

    @property
    def is_classical(self) -> bool:
        return self.k == 0 and self.l == 0 and self.r == 0 and self.t == 0

    @property
    def degree(self) -> int:
        return self.m + self.n

    @property
    def resolvent_order(self) -> int:
        return abs(self.k) + abs(self.l) + abs(self.r) + abs(self.t)

    @property
    def weight(self) -> int:
        return self.degree + self.resolvent_order

    @property
    def nonnegative(self) -> bool:
        """True when every resolvent exponent is >= 0 (the integrand is a polynomial)."""
        return self.k >= 0 and self.l >= 0 and self.r >= 0 and self.t >= 0


ZERO = ExtendedIndex(0, 0, 0, 0, 0, 0)


def classical(m: int, n: int) -> ExtendedIndex:
    return ExtendedIndex(m, 0, 0, n, 0, 0)


class Window(NamedTuple):
    """Finite truncation of the lattice.

    The basis ``B(w)`` holds indices with ``m + n <= deg_cap`` and
    ``|k| + |l| + |r| + |t| <= res_cap``.
    """

    deg_cap: int
    res_cap: int


def pair_index(a: ExtendedIndex, b: ExtendedIndex) -> ExtendedIndex:
    """Index of the moment that equals the inner product of ``x_a`` against ``x_b``."""
    return ExtendedIndex(
        a.m + b.m, a.k + b.l, a.l + b.k, a.n + b.n, a.r + b.t, a.t + b.r
    )


def conj_index(idx: ExtendedIndex) -> ExtendedIndex:
    """Index of the complex-conjugate integrand (swap k<->l and r<->t)."""
    return ExtendedIndex(idx.m, idx.l, idx.k, idx.n, idx.t, idx.r)


def shift(idx: ExtendedIndex, axis: str, delta: int) -> ExtendedIndex | None:
    """Move ``idx`` by ``delta`` along ``axis``.

    Returns ``None`` when the result would leave the lattice (negative ``m``
    or ``n``).
    """
    pos = AXES.index(axis)
    values = list(idx)
    values[pos] += delta
    if values[0] < 0 or values[3] < 0:
        return None
    return ExtendedIndex(*values)


# Canonical order.  Components compare by (|v|, v < 0), so 0 < 1 < -1 < 2 < -2,
# and ties inside a weight class are resolved colexicographically (last axis
# most significant).  This makes (1,0,0;0,0,0) precede (0,0,0;1,0,0) and puts
# (0,1,0;0,0,0), (0,-1,0;0,0,0) at the front of the non-classical indices.


def _component_key(v: int) -> tuple[int, bool]:
    return (abs(v), v < 0)


def canonical_key(idx: ExtendedIndex) -> tuple:
    return (idx.weight,) + tuple(_component_key(v) for v in reversed(idx))


def _signed(v: int) -> tuple[int, ...]:
    return (0,) if v == 0 else (v, -v)


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in _compositions(total - head, parts - 1):
            yield (head,) + tail


@lru_cache(maxsize=None)
def indices_of_weight(weight: int) -> tuple[ExtendedIndex, ...]:
    """All lattice points of the given weight, in canonical order."""
    out = []
    for m, ak, al, n, ar, at in _compositions(weight, 6):
        for k, l, r, t in product(_signed(ak), _signed(al), _signed(ar), _signed(at)):
            out.append(ExtendedIndex(m, k, l, n, r, t))
    out.sort(key=canonical_key)
    return tuple(out)


@lru_cache(maxsize=None)
def _nonclassical_of_weight(weight: int) -> tuple[ExtendedIndex, ...]:
    return tuple(idx for idx in indices_of_weight(weight) if not idx.is_classical)


@lru_cache(maxsize=None)
def _positions(weight: int) -> dict[ExtendedIndex, int]:
    return {idx: i for i, idx in enumerate(_nonclassical_of_weight(weight))}


def indexation(j: int) -> ExtendedIndex:
    """The ``j``-th non-classical index (``j >= 1``) in canonical order."""
    if j < 1:
        raise ValueError(f"indexation is defined for j >= 1, got {j}")
    remaining = j - 1
    weight = 1
    while True:
        layer = _nonclassical_of_weight(weight)
        if remaining < len(layer):
            return layer[remaining]
        remaining -= len(layer)
        weight += 1


def rank(idx: ExtendedIndex) -> int:
    """Inverse of :func:`indexation`."""
    idx = ExtendedIndex(*idx)
    if idx.is_classical:
        raise ValueError(f"{idx} is classical and has no rank among non-classical indices")
    if idx.m < 0 or idx.n < 0:
        raise ValueError(f"{idx} is not a lattice point")
    before = sum(len(_nonclassical_of_weight(w)) for w in range(1, idx.weight))
    return before + _positions(idx.weight)[idx] + 1


def _resolvent_tuples(cap: int) -> list[tuple[int, int, int, int]]:
    out = []
    for total in range(cap + 1):
        for parts in _compositions(total, 4):
            out.extend(product(*(_signed(p) for p in parts)))
    return out


def enumerate_basis(w: Window) -> list[ExtendedIndex]:
    """The basis ``B(w)`` in canonical order."""
    out = []
    for deg in range(w.deg_cap + 1):
        for m in range(deg + 1):
            for k, l, r, t in _resolvent_tuples(w.res_cap):
                out.append(ExtendedIndex(m, k, l, deg - m, r, t))
    out.sort(key=canonical_key)
    return out


def data_indices(w: Window) -> list[ExtendedIndex]:
    """The data set ``D(w)``: every index read by the Gram matrix on ``B(w)``."""
    basis = enumerate_basis(w)
    seen = {pair_index(a, b) for a in basis for b in basis}
    return sorted(seen, key=canonical_key)
