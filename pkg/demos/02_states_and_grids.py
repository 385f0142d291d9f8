"""Hydrogen coherent states in momentum space and on a position grid.

The momentum wavefunction is closed-form. The position wavefunction is one
FFT away, and for the circular frame e1+ie2 it must match
(x1 + i x2)^N exp(-p0 r / hbar) exactly.
"""

import math
import tempfile
from pathlib import Path

import numpy as np

from keplerfock.geometry import AlphaFrame, SemiclassicalScale
from keplerfock.grid import GridState
from keplerfock.states import (
    MomentumState,
    SphericalState,
    hydrogen_residual,
    momentum_norm,
    riesz_apply,
    riesz_eigenvalue,
    sphere_norm,
    to_position_grid,
)

print("norms on S^3 and in momentum space")
for N in (0, 4, 16, 32):
    st = MomentumState(AlphaFrame.parse("e1+ie4"), SemiclassicalScale.from_energy(-0.5, N))
    print(f"  N = {N:2d}: {sphere_norm(st.spherical):.14f}  {momentum_norm(st):.14f}")

print("\nthe Riesz operator acts on degree-N harmonics by 2 pi^2 / (N+1)")
u = np.array([0.3, -0.5, 0.7, 0.2])
u /= np.linalg.norm(u)
for N in range(4):
    sph = SphericalState(AlphaFrame.parse("e1+ie3"), N)
    print(f"  N = {N}: T Phi / Phi = {(riesz_apply(sph, u) / sph(u)).real:.10f}"
          f"  expected {riesz_eigenvalue(N):.10f}")

st = MomentumState(AlphaFrame.parse("e1+ie2"), SemiclassicalScale.from_energy(-0.5, 3))
xi = np.random.default_rng(0).normal(size=(5, 3))
print(f"\nhydrogen equation residual at N = 3: {hydrogen_residual(st, xi):.2e}")

N = 8
st = MomentumState(AlphaFrame.parse("e1+ie2"), SemiclassicalScale.from_energy(-0.5, N))
g = to_position_grid(st)
X = g.points()
hb, p0 = st.scale.hbar, st.scale.p0
cl = (X[..., 0] + 1j * X[..., 1]) ** N * np.exp(-p0 * np.linalg.norm(X, axis=-1) / hb)
cl /= math.sqrt(np.sum(np.abs(cl) ** 2) * g.cell_volume)
print(f"\nposition grid for N = {N}: shape {g.shape}, norm {g.norm():.8f}")
print(f"  max |grid - closed form| / max |closed form| = "
      f"{np.max(np.abs(g.samples - cl)) / np.abs(cl).max():.2e}")

with tempfile.TemporaryDirectory() as d:
    path = g.save(Path(d) / "state.kfg")
    h = GridState.load(path)
    print(f"  saved and reloaded: identical = {np.array_equal(h.samples, g.samples)}")
