"""Phase-space pictures: Wigner slices and the oscillatory-integral estimator.

A Wigner slice W(x, .) at a point of the orbit peaks at the orbit's momentum
there, and its integral over xi returns |psi(x)|^2. The Monte Carlo
estimator evaluates the same Weyl pairing as an oscillatory integral and is
compared with the exact multiplier value.
"""

import numpy as np

from keplerfock.geometry import AlphaFrame, SemiclassicalScale
from keplerfock.oscillatory import monte_carlo_matrix_element
from keplerfock.quantize import WignerSlicer, matrix_element
from keplerfock.states import MomentumState, position_eval_direct
from keplerfock.symbols import position_bump, shell_bump

st = MomentumState(AlphaFrame.parse("e1+ie2"), SemiclassicalScale.from_energy(-0.5, 8))
sl = WignerSlicer(st)
x = np.array([0.0, -1.0, 0.0])
W = sl(x)
i = np.unravel_index(np.argmax(W.real), W.shape)
print(f"Wigner slice at x = {x}: lattice {W.shape}, spacing {sl.xi_spacing:.4f}")
print(f"  peak at xi = {np.round(sl.xi_axis[list(i)], 3)} (classical momentum (1, 0, 0))")
print(f"  max |Im W| / max |W| = {np.max(np.abs(W.imag)) / np.max(np.abs(W)):.1e}")
print(f"  sum W dxi = {np.sum(W).real * sl.xi_spacing**3:.6f}, "
      f"|psi(x)|^2 = {abs(position_eval_direct(st, x)[0]) ** 2:.6f}")
print(f"  negative part: min W = {W.real.min():.3e}")

a = shell_bump(1.0, 2.0)
print("\nshell bump, multiplier against Monte Carlo")
for N in (8, 16):
    s = MomentumState(AlphaFrame.parse("e1+ie2"), SemiclassicalScale.from_energy(-0.5, N))
    exact = matrix_element(a, s).value.real
    mc = monte_carlo_matrix_element(a, s, n_samples=100_000)
    print(f"  N = {N:2d}: {exact:.5f} vs {mc.value.real:.4f} +- {mc.error_estimate:.4f}")

pb = position_bump([1.0, 0.0, 0.0], 1.5)
s = MomentumState(AlphaFrame.parse("e1+ie2"), SemiclassicalScale.from_energy(-0.5, 4))
exact = matrix_element(pb, s).value.real
mc = monte_carlo_matrix_element(pb, s, n_samples=200_000)
print(f"\nposition bump at N = 4: {exact:.5f} vs {mc.value.real:.4f} +- {mc.error_estimate:.4f}")
print("  (the sampled-x path is unbiased but its error bar shrinks slowly)")
