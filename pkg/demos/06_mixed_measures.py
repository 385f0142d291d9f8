"""Superpositions of coherent states on two orbits.

The state sqrt(c1) Psi_1 + sqrt(c2) Psi_2 sees the weighted average
c1 a(gamma_1) + c2 a(gamma_2) of the orbit averages once the cross terms
have died out.
"""

import math

from keplerfock.experiments import GeodesicMeasure, mixed_measure_study
from keplerfock.geometry import AlphaFrame
from keplerfock.symbols import shell_bump

f1 = AlphaFrame.parse("e1+ie2")
f2 = AlphaFrame([0, 0, 1, 0], [0, math.cos(math.pi / 6), 0, math.sin(math.pi / 6)])
a = shell_bump(1.0, 2.0)
for w in (0.5, 0.2):
    m = GeodesicMeasure(((w, f1), (1 - w, f2)))
    rec = mixed_measure_study(m, a, [16, 32, 64])
    print(f"weights ({w}, {1 - w}): orbit averages {[round(r, 5) for r in rec.extra['radon']]},"
          f" prediction {rec.predicted:.5f}")
    for N, v, e, cr in zip(rec.N, rec.measured, rec.errors, rec.extra["cross_terms"]):
        c = max(math.hypot(*z) for z in cr.values())
        print(f"  N = {N:2d}: {v.real:.5f}  error {e:.2e}  largest cross term {c:.1e}")
