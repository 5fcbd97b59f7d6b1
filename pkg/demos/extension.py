"""Resolvent moments solved for from power moments alone, then turned into atoms."""
from moment2d import AtomicMeasure, ExtendedIndex, Window, extend_truncated, oracle_classical, recover
from moment2d.spectral import verify_measure

mu = AtomicMeasure.from_atoms([(0.8, -1.1, 0.6), (-2.0, 0.4, 0.4)])
s = oracle_classical(mu, 3)
w = Window(2, 1)

u = extend_truncated(s, w)
print(f"{len(u.u)} entries on {w}, {len(u.state.free)} of them solved for")
for report in u.reports:
    print(f"  {report.name:<12} {'passed' if report.passed else 'FAILED'}")

idx = ExtendedIndex(0, -1, 0, 0, 0, 0)
print(f"u{idx} = {u[idx]:.6f}; integral of 1/(x1 + i) over the measure is "
      f"{sum(wt / (x1 + 1j) for x1, _, wt in mu.atoms):.6f}")

rec = recover(u)
print("recovered atoms:", [tuple(round(v, 6) for v in atom) for atom in rec.measure.sorted().atoms])
print("moment residual:", f"{verify_measure(rec.measure, s).details[0][1]:.1e}")
