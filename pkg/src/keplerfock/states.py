"""Quantum side: spherical coherent states and hydrogen coherent states.

A spherical coherent state is Phi(u) = c_N (alpha.u)^N on S^3, with
c_N = sqrt(N+1) / (pi sqrt 2) and the bilinear (not Hermitian) dot product.
Its hydrogen counterpart lives natively in momentum space,

    psi_hat(xi) = p0^{-3/2} (2 / (|xi/p0|^2 + 1))^2 Phi(omega(xi/p0)),

with the semiclassical Fourier convention
F(psi)(xi) = (2 pi hbar)^{-3/2} int psi(x) exp(-i x.xi/hbar) dx.
Position-space wavefunctions are derived objects on FFT grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.fft import ifftn, next_fast_len

from .errors import ConvergenceError, GridCoverageError, PreconditionError
from .geometry import AlphaFrame, SemiclassicalScale, stereographic_inv
from .grid import GridState
from .sphere import gauss_legendre, s2_product_rule, s3_product_rule


def normalization_constant(N: int) -> float:
    return math.sqrt(N + 1) / (math.pi * math.sqrt(2.0))


@dataclass(frozen=True)
class SphericalState:
    frame: AlphaFrame
    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 0:
            raise PreconditionError("N must be a nonnegative integer")

    @property
    def c_N(self) -> float:
        return normalization_constant(self.N)

    def __call__(self, u):
        return sph_coherent_eval(self, u)


@dataclass(frozen=True)
class MomentumState:
    """Closed-form momentum wavefunction of a hydrogen coherent state."""

    frame: AlphaFrame
    scale: SemiclassicalScale

    @property
    def N(self) -> int:
        return self.scale.N

    @property
    def spherical(self) -> SphericalState:
        return SphericalState(self.frame, self.scale.N)

    def __call__(self, xi):
        return momentum_eval(self, xi)


def _phi_unchecked(alpha, N, cN, u):
    return cN * (u @ alpha) ** N


def sph_coherent_eval(state: SphericalState, u):
    """Phi(u) = c_N (alpha.u)^N for unit u (broadcasts over leading axes)."""
    u = np.asarray(u, dtype=float)
    if np.any(np.abs(np.linalg.norm(u, axis=-1) - 1.0) > 1e-10):
        raise PreconditionError("u must be a unit 4-vector (tol 1e-10)")
    return _phi_unchecked(state.frame.alpha, state.N, state.c_N, u)


def momentum_eval(state: MomentumState, xi):
    """psi_hat(xi) in closed form; decays like |xi|^-4."""
    p0 = state.scale.p0
    p = np.asarray(xi, dtype=float) / p0
    r2 = np.sum(p * p, axis=-1)
    u = stereographic_inv(p)
    sph = state.spherical
    return p0**-1.5 * (2.0 / (r2 + 1.0)) ** 2 * _phi_unchecked(
        sph.frame.alpha, sph.N, sph.c_N, u
    )


# ---------------------------------------------------------------------------
# Norms by quadrature
# ---------------------------------------------------------------------------


def sphere_norm(state: SphericalState, degree: int | None = None) -> float:
    """L2(S^3) norm by the product rule of degree 2N+8."""
    degree = 2 * state.N + 8 if degree is None else degree
    u, w = s3_product_rule(degree)
    return float(np.sqrt(np.sum(w * np.abs(state(u)) ** 2)))


def momentum_norm(state: MomentumState, n_r: int = 400, degree: int | None = None) -> float:
    """L2(R^3) norm of psi_hat in spherical coordinates of xi.

    Radial variable r = p0 q/(1-q) with Gauss-Legendre in q; the angular part
    uses an S^2 product rule exact for the polynomial angular dependence.
    This works directly in R^3, independently of the S^3 quadrature.
    """
    p0 = state.scale.p0
    degree = 2 * state.N + 8 if degree is None else degree
    q, wq = gauss_legendre(n_r, 0.0, 1.0)
    r = p0 * q / (1.0 - q)
    wr = wq * p0 / (1.0 - q) ** 2 * r * r
    n, wn = s2_product_rule(degree)
    total = 0.0
    for ri, wi in zip(r, wr):
        total += wi * np.sum(wn * np.abs(state(ri * n)) ** 2)
    return float(np.sqrt(total))


# ---------------------------------------------------------------------------
# The Riesz operator and the momentum-space hydrogen equation
# ---------------------------------------------------------------------------


def _tangent_basis(u):
    # rows 1..3 of the SVD give an orthonormal basis of u-perp
    return np.linalg.svd(u[None, :])[2][1:]


def _riesz_once(state: SphericalState, u, n: int):
    chi, wc = gauss_legendre(n, 0.0, math.pi)
    nodes, wn = s2_product_rule(state.N + 6)
    B = _tangent_basis(u)
    dirs = nodes @ B  # unit vectors orthogonal to u
    y = np.cos(chi)[:, None, None] * u + np.sin(chi)[:, None, None] * dirs[None, :, :]
    vals = _phi_unchecked(state.frame.alpha, state.N, state.c_N, y)
    return np.sum(vals * (wc * np.cos(0.5 * chi) ** 2)[:, None] * wn[None, :])


def riesz_apply(state: SphericalState, u, rtol: float = 1e-3):
    """T(Phi)(u) = int_{S^3} Phi(y) / |y-u|^2 dOmega(y).

    Geodesic polar coordinates centred at u, y = cos(chi) u + sin(chi) n,
    turn the kernel into sin^2(chi) / (4 sin^2(chi/2)) = cos^2(chi/2), so the
    integrand is smooth. Gauss-Legendre in chi with two resolutions gives the
    error estimate.
    """
    u = np.asarray(u, dtype=float)
    if abs(np.linalg.norm(u) - 1.0) > 1e-10:
        raise PreconditionError("u must be a unit 4-vector")
    if state.N > 6:
        raise PreconditionError("riesz_apply is limited to N <= 6")
    n = state.N + 16
    a = _riesz_once(state, u, n)
    b = _riesz_once(state, u, n + 8)
    err = abs(a - b)
    if err > rtol * max(abs(b), 1e-300) and err > 1e-14:
        raise ConvergenceError("Riesz quadrature did not converge", err)
    return complex(b)


def riesz_eigenvalue(N: int) -> float:
    """Eigenvalue of T on degree-N harmonics: 2 pi^2 / (N+1)."""
    return 2.0 * math.pi**2 / (N + 1)


def _coulomb_convolution(state: MomentumState, xi, n_r: int, degree: int):
    # int psi_hat(p) / |p - xi|^2 dp in polar coordinates centred at xi:
    # dp = rho^2 d rho dn cancels the kernel.
    p0 = state.scale.p0
    q, wq = gauss_legendre(n_r, 0.0, 1.0)
    rho = p0 * q / (1.0 - q)
    wr = wq * p0 / (1.0 - q) ** 2
    n, wn = s2_product_rule(degree)
    pts = xi + rho[:, None, None] * n[None, :, :]
    return np.sum(wr[:, None] * wn[None, :] * state(pts))


def hydrogen_residual(state: MomentumState, xi_samples, rtol: float = 1e-3) -> float:
    """Max residual of the momentum-space hydrogen equation over samples.

    Compares (|xi|^2/2 - E) psi_hat(xi) with
    (1 / (2 pi^2 hbar)) int psi_hat(p) / |p - xi|^2 dp and returns
    max_k |lhs_k - rhs_k| / max_k |lhs_k|.
    """
    if state.N > 4:
        raise PreconditionError("hydrogen_residual is limited to N <= 4")
    sc = state.scale
    xi_samples = np.atleast_2d(np.asarray(xi_samples, dtype=float))
    lhs = (0.5 * np.sum(xi_samples**2, axis=-1) - sc.E) * state(xi_samples)
    # resolution grows until two levels agree on the sample-wide scale, like the
    # residual itself; samples far from the state's momenta need the finer levels
    levels = [(160, 40), (240, 56), (400, 80), (800, 120)]
    prev = None
    for n_r, degree in levels:
        cur = np.array([_coulomb_convolution(state, xi, n_r, degree) for xi in xi_samples])
        if prev is not None:
            err = float(np.max(np.abs(cur - prev)))
            if err <= rtol * np.max(np.abs(cur)) or err <= 1e-12:
                break
        prev = cur
    else:
        raise ConvergenceError("Coulomb convolution did not converge", err)
    rhs = cur / (2.0 * math.pi**2 * sc.hbar)
    return float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(lhs)))


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------


def default_extents(frame: AlphaFrame, scale: SemiclassicalScale, pad: float = 8.0):
    """Default (position half-width, momentum half-width) for a state.

    The orbit of frame alpha reaches |x| <= (1+s)/p0^2 and
    |xi| <= p0 sqrt((1+s)/(1-s)), with s the largest u4 on the great circle;
    the quantum spread adds a margin shrinking like N^{-1/2}.
    """
    s = min(math.hypot(frame.re[3], frame.im[3]), 0.9)
    pad = pad / math.sqrt(scale.N + 1)
    L = ((1.0 + s) + pad) / scale.p0**2
    K = (math.sqrt((1.0 + s) / (1.0 - s)) + pad) * scale.p0
    return L, K


def grid_size(L: float, K: float, hbar: float) -> int:
    """Smallest even FFT-friendly n with momentum Nyquist >= K on box [-L, L)."""
    n = math.ceil(2.0 * L * K / (math.pi * hbar))
    n = next_fast_len(max(n, 8))
    while n % 2:
        n = next_fast_len(n + 1)
    return n


def _sign(n):
    return 1.0 - 2.0 * (np.arange(n) % 2)


def sample_momentum(state: MomentumState, L: float, n: int) -> GridState:
    """psi_hat on the momentum lattice dual to the position box [-L, L)^3."""
    dxi = math.pi * state.scale.hbar / L
    ax = (np.arange(n) - n // 2) * dxi
    out = np.empty((n, n, n), dtype=complex)
    g1, g2 = np.meshgrid(ax, ax, indexing="ij")
    for i in range(n):
        pts = np.stack([np.full_like(g1, ax[i]), g1, g2], axis=-1)
        out[i] = state(pts)
    return GridState(
        np.full(3, ax[0]), np.full(3, dxi), out, state.scale, "momentum",
        {"frame": state.frame.as_list(), "L": L},
    )


def to_position_grid(
    state: MomentumState,
    half_width: float | None = None,
    n: int | None = None,
    min_mass: float = 1.0 - 1e-4,
) -> GridState:
    """Position wavefunction on [-L, L)^3 by a discrete inverse F_hbar.

    The momentum lattice has spacing pi hbar / L, which makes the discrete
    transform an exact FFT. Raises GridCoverageError if the momentum lattice
    captures less than ``min_mass`` of the norm, or if more than 1e-4 of the
    position mass sits in the outer 5% of the box (wrap-around).
    """
    L0, K0 = default_extents(state.frame, state.scale)
    L = L0 if half_width is None else float(half_width)
    n = grid_size(L, K0, state.scale.hbar) if n is None else int(n)
    if n % 2:
        raise PreconditionError("grid size must be even")
    mom = sample_momentum(state, L, n)
    mass = float(np.sum(np.abs(mom.samples) ** 2) * mom.cell_volume)
    if mass < min_mass:
        raise GridCoverageError(
            f"momentum lattice captures only {mass:.6f} of the norm", captured_mass=mass
        )
    hb = state.scale.hbar
    sg = _sign(n)
    sgn3 = sg[:, None, None] * sg[None, :, None] * sg[None, None, :]
    psi = ifftn(mom.samples * sgn3, workers=-1) * sgn3
    psi *= (2.0 * math.pi * hb) ** -1.5 * mom.cell_volume * n**3 * (-1.0) ** (3 * (n // 2))
    dx = 2.0 * L / n
    grid = GridState(
        np.full(3, -L), np.full(3, dx), psi, state.scale, "position",
        {"frame": state.frame.as_list(), "momentum_mass": mass, "L": L},
    )
    edge = int(math.ceil(0.05 * n))
    dens = np.abs(psi) ** 2
    inner = dens[edge:-edge, edge:-edge, edge:-edge].sum()
    outer_frac = float(1.0 - inner / dens.sum())
    if outer_frac > 1e-4:
        raise GridCoverageError(
            f"{outer_frac:.2e} of the position mass lies at the box edge",
            captured_mass=1.0 - outer_frac,
        )
    return grid


def position_eval_direct(state: MomentumState, x, n_r: int = 200, degree: int | None = None):
    """psi(x) at a few points by direct quadrature of the inverse transform.

    Slow; intended as a test oracle for :func:`to_position_grid`.
    """
    hb, p0 = state.scale.hbar, state.scale.p0
    degree = 2 * state.N + 40 if degree is None else degree
    q, wq = gauss_legendre(n_r, 0.0, 1.0)
    r = p0 * q / (1.0 - q)
    wr = wq * p0 / (1.0 - q) ** 2 * r * r
    nn, wn = s2_product_rule(degree)
    xi = r[:, None, None] * nn[None, :, :]
    base = state(xi) * (wr[:, None] * wn[None, :])
    x = np.atleast_2d(np.asarray(x, dtype=float))
    out = np.array([np.sum(base * np.exp(1j * (xi @ xx) / hb)) for xx in x])
    return out * (2.0 * math.pi * hb) ** -1.5
