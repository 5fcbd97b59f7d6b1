"""Moments of a three-atom measure and the atoms read back from them."""
import numpy as np

from moment2d import AtomicMeasure, Window, check_all, oracle_classical, oracle_extended, recover
from moment2d.torus import compare_measures

mu = AtomicMeasure.from_atoms([(-1.5, 0.2, 0.2), (0.3, 2.1, 0.5), (2.4, -0.7, 0.3)])
w = Window(3, 1)
u = oracle_extended(mu, w)
s = oracle_classical(mu, w.deg_cap + w.res_cap)
print(f"{len(u.u)} extended moments on {w}")
for report in check_all(u, s):
    print(f"  {report.name:<12} {'passed' if report.passed else 'FAILED'}")

rec = recover(u)
print(f"GNS space of dimension {rec.space.dim}; commutator {rec.reports['commutation'].details[0][1]:.1e}")
for x1, x2, wt in rec.measure.sorted().atoms:
    print(f"  atom ({x1: .6f}, {x2: .6f}) weight {wt:.6f}")
print(f"torus moment gap to the input: {compare_measures(mu, rec.measure, 3):.1e}")
np.testing.assert_allclose(rec.measure.sorted().weights, mu.sorted().weights, atol=1e-9)
