"""Matrix elements of coherent states against orbit averages.

Diagonal elements approach the orbit average of the symbol at rate 1/N.
Symbols supported away from the orbit give superpolynomially small values,
and so do cross terms between states on different orbits.
"""

from keplerfock.experiments import cross_decay_study, theorem1_study
from keplerfock.geometry import AlphaFrame
from keplerfock.symbols import angular_bump, off_orbit_bump, shell_bump

N_list = [8, 16, 32, 64]
circ = AlphaFrame.parse("e1+ie2")

rec = theorem1_study(circ, shell_bump(1.0, 2.0), N_list)
print(f"shell bump on the circular orbit, orbit average {rec.predicted:.6f}")
for N, v, e in zip(rec.N, rec.measured, rec.errors):
    print(f"  N = {N:2d}: {v.real:.6f}  error {e:.2e}")
print(f"  fitted rate {rec.rate:.3f}")

rec = theorem1_study(circ, off_orbit_bump(), N_list)
print("\nbump centred on |xi| = 3, where the orbit never goes")
for N, v in zip(rec.N, rec.measured):
    print(f"  N = {N:2d}: {abs(v):.2e}")

rec = cross_decay_study(circ, AlphaFrame.parse("e1+ie3"), shell_bump(1.0, 2.0), N_list)
print("\ncross term between the e1+ie2 and e1+ie3 orbits")
for N, v in zip(rec.N, rec.measured):
    print(f"  N = {N:2d}: {abs(v):.2e}")
print(f"  successive ratios {[f'{r:.1e}' for r in rec.ratios]}")

# the reversed orbit pairs with a radial symbol to exactly zero, so a
# direction-dependent symbol is used to see its decay
rec = cross_decay_study(circ, AlphaFrame.parse("e1-ie2"),
                        angular_bump([1.0, 0.0, 0.0], 0.6, 0.2, 4.0), [8, 16, 32])
print("\ncross term with the reversed orbit, angular symbol")
for N, v in zip(rec.N, rec.measured):
    print(f"  N = {N:2d}: {abs(v):.2e}")
