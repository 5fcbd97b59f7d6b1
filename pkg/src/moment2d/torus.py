"""Cayley point map to the torus and trigonometric moments of the image measure."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .moments import AtomicMeasure

TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class TorusMeasure:
    """Atoms ``(phi, psi, weight)`` with angles in ``[0, 2 pi)``."""

    angles: np.ndarray
    weights: np.ndarray

    @property
    def atoms(self):
        return [(float(a[0]), float(a[1]), float(w)) for a, w in zip(self.angles, self.weights)]

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())


def _angle(x):
    z = (np.asarray(x, dtype=float) + 1j) / (np.asarray(x, dtype=float) - 1j)
    phi = np.mod(np.angle(z), TWO_PI)
    # np.mod can return exactly 2 pi for tiny negative angles
    return np.where(phi >= TWO_PI, 0.0, phi)


def cayley_point_map(x1, x2):
    """Angles with ``e^{i phi} = (x1 + i)/(x1 - i)``, ``e^{i psi} = (x2 + i)/(x2 - i)``."""
    phi, psi = _angle(x1), _angle(x2)
    if np.ndim(phi) == 0:
        return float(phi), float(psi)
    return phi, psi


def pushforward(mu: AtomicMeasure) -> TorusMeasure:
    phi, psi = _angle(mu.points[:, 0]), _angle(mu.points[:, 1])
    return TorusMeasure(np.column_stack([phi, psi]).reshape(-1, 2), mu.weights.copy())


def trig_moment(nu: TorusMeasure, k: int, l: int) -> complex:  # noqa: E741
    phase = np.exp(1j * (k * nu.angles[:, 0] + l * nu.angles[:, 1]))
    return complex(nu.weights @ phase)


def compare_measures(mu1: AtomicMeasure, mu2: AtomicMeasure, max_order: int) -> float:
    """Largest gap between trigonometric moments of the two pushforwards, ``|k|, |l| <= max_order``."""
    if max_order < 0:
        raise ValueError("max_order must be non-negative")
    nu1, nu2 = pushforward(mu1), pushforward(mu2)
    worst = 0.0
    for k in range(-max_order, max_order + 1):
        for l in range(-max_order, max_order + 1):  # noqa: E741
            worst = max(worst, abs(trig_moment(nu1, k, l) - trig_moment(nu2, k, l)))
    return worst
