"""Two quadrature rules sharing moments up to degree 4, and the extensions they allow."""
import warnings

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from moment2d import AtomicMeasure, Window, check_all, enumerate_solution_family, oracle_classical, oracle_extended, recover

warnings.simplefilter("ignore")


def gauss_hermite(n):
    x, w = hermegauss(n)
    return AtomicMeasure(np.column_stack([x, np.zeros(n)]), w / w.sum())


mu3, mu4 = gauss_hermite(3), gauss_hermite(4)
s = oracle_classical(mu3, 2)
w = Window(1, 1)
gap = max(abs(s[k] - oracle_classical(mu4, 2)[k]) for k in s.s)
print(f"largest gap between the classical moments: {gap:.1e}")
for name, mu in (("3-node", mu3), ("4-node", mu4)):
    ok = all(r.passed for r in check_all(oracle_extended(mu, w), s))
    print(f"{name} rule gives a valid extension of the same data: {ok}")

family = enumerate_solution_family(s, w, depth=3, grid=5)
print(f"\n{len(family)} distinct extensions found by the sweep")
for u in family:
    atoms = recover(u).measure.sorted()
    print("  x1 nodes", np.round(atoms.points[:, 0], 4), "weights", np.round(atoms.weights, 4))
