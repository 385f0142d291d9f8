"""Kepler orbits from great circles on S^3.

A frame alpha = e + i f spans a great circle; pulling it back through the
inverse Moser map gives a Kepler orbit at energy E. This script walks
through a circular orbit, an eccentric one and a collision orbit.
"""

import math

import numpy as np

from keplerfock.geometry import (
    AlphaFrame,
    KeplerOrbit,
    SemiclassicalScale,
    collision_time,
    hamiltonian,
    kepler_state,
    moser_map,
    orbit_average,
)

scale = SemiclassicalScale.from_energy(-0.5, 10)
print(f"E = {scale.E}, p0 = {scale.p0}, hbar = {scale.hbar:.4f}, period = {scale.period:.4f}")

# circular orbit: |x| = 1 and |xi| = 1 throughout
orb = KeplerOrbit(AlphaFrame.parse("e1+ie2"), scale)
p = kepler_state(orb, np.linspace(0, orb.period, 7)[:-1])
print("\ncircular orbit, six equally spaced times")
for x, xi in zip(p.x, p.xi):
    print(f"  x = {np.round(x, 4)}  xi = {np.round(xi, 4)}")

# eccentric orbit: standard(th) has eccentricity sin(th)
th = 0.9
orb = KeplerOrbit(AlphaFrame.standard(th), scale)
t = np.linspace(0, orb.period, 400, endpoint=False)
p = kepler_state(orb, t)
r = np.linalg.norm(p.x, axis=1)
print(f"\neccentric orbit, e = {math.sin(th):.4f}")
print(f"  r ranges over [{r.min():.4f}, {r.max():.4f}]")
print(f"  energy drift {np.ptp(hamiltonian(p)):.2e}")
eta = moser_map(p, scale).eta
print(f"  | |eta| - 1 | on the Moser side: {np.max(np.abs(np.linalg.norm(eta, axis=1) - 1)):.2e}")

# time averages: the position vector averages to -(3/2) a e along the major axis
avg = orbit_average(lambda x, xi: x[..., 0], orb)
print(f"  time average of x1 = {avg.real:.6f}  (-(3/2) e = {-1.5 * math.sin(th):.6f})")

# a collision orbit reaches the origin at t_gamma and its average uses the
# window that ends there
f = AlphaFrame.parse("e1+ie4")
tg = collision_time(f, scale)
print(f"\ncollision orbit e1+ie4: t_gamma = {tg:.6f} (pi/2 - 1 = {math.pi / 2 - 1:.6f})")
p = kepler_state(KeplerOrbit(f, scale), tg - np.array([1e-1, 1e-2, 1e-3]))
print("  |x| approaching the collision:", np.round(np.linalg.norm(p.x, axis=1), 6))
