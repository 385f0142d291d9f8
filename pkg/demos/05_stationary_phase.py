"""The critical curve of the oscillatory phase and its Hessian.

On the orbit the phase P is stationary with real values; off it Im P > 0.
The transverse Hessian determinant has a closed form, checked here against
finite differences, including orbits through the collision point.
"""

import math

import numpy as np

from keplerfock.stationary import (
    check_stationarity,
    critical_point,
    hessian_numeric,
    leading_order_factor,
    perturb,
)

rng = np.random.default_rng(0)
th = 0.6
print(f"critical curve for theta0 = {th}")
for b in (0.0, 1.0, 2.5, 4.0):
    cp = critical_point(b, th)
    r = check_stationarity(cp)
    q = check_stationarity(perturb(cp, rng))
    print(f"  beta = {b:3.1f}: |grad P| {r.grad_norm:.1e}, Im P {r.im_P:.1e};"
          f" perturbed Im P {q.im_P:.1e}")

print("\nsqrt|det Hess|: finite differences against the closed form")
for b, t in [(0.4, 0.0), (2.0, 0.8), (1.0, math.pi / 2 - 0.1), (0.3, math.pi / 2),
             (4.0, 3 * math.pi / 2)]:
    h = hessian_numeric(b, t)
    print(f"  beta = {b:.2f}, theta0 = {t:.4f} ({h.chart:9s}): "
          f"{h.sqrt_abs_det:.8f} vs {h.closed_form:.8f}, rel. error {h.rel_error:.1e}")

b = rng.uniform(0, 2 * math.pi, 1000)
t = rng.uniform(-1.4, 1.4, 1000)
lhs, rhs = leading_order_factor(b, t)
print(f"\nleading-order factor equals (1 - sin b sin th)/2 to {np.max(np.abs(lhs - rhs)):.1e}")
