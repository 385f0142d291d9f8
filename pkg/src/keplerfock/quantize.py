"""Weyl-quantized matrix elements <Op(a) psi, psi'> and Wigner functions.

Weyl convention:

    <Op(a) psi, psi'> = int a(x, xi) W(x, xi) dx dxi,
    W(x, xi) = (2 pi hbar)^-3 int psi_hat(xi + u/2) conj(psi_hat'(xi - u/2)) e^{i x.u/hbar} du.

The inner product is linear in the first slot. Strategies:

multiplier
    Momentum-only symbols act by multiplication in momentum space. Pulled back
    to S^3 the matrix element is
    int g(p0 omega^{-1}(u)) (1 - u4) Phi_alpha(u) conj(Phi_beta(u)) dOmega,
    integrated with a Hopf rule (diagonal), a hyperspherical product rule
    (off-diagonal) or, for radial symbols and frames in the equatorial R^3, an
    exact one-dimensional reduction. Position-only symbols are multipliers in
    position space and use FFT grids.
grid_wigner
    Lattice evaluation of the Weyl pairing for separable symbols
    f(x) g(xi): the x-factor enters through its Fourier transform.
monte_carlo
    Importance-sampled oscillatory integral (see :mod:`keplerfock.oscillatory`).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.fft import fftn, ifftn
from scipy.special import gammaln, roots_jacobi, roots_sh_jacobi

from .errors import PreconditionError
from .geometry import AlphaFrame, SemiclassicalScale
from .sphere import chebyshev_u_rule, orthonormal_complement, s2_product_rule
from .states import (
    MomentumState,
    default_extents,
    grid_size,
    normalization_constant,
    sample_momentum,
    to_position_grid,
)
from .symbols import SymbolSpec

METHODS = ("multiplier", "grid_wigner", "monte_carlo")


@dataclass
class MatrixElementReport:
    value: complex
    method: str
    error_estimate: float
    evaluations: int = 0
    wall_time: float = 0.0
    predicted: Optional[float] = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not self.error_estimate >= 0:
            raise ValueError("error_estimate must be nonnegative")

    def as_dict(self) -> dict:
        return {
            "value_re": float(np.real(self.value)),
            "value_im": float(np.imag(self.value)),
            "method": self.method,
            "error_estimate": float(self.error_estimate),
            "evaluations": int(self.evaluations),
            "wall_time": float(self.wall_time),
            "predicted": self.predicted,
            "details": self.details,
        }


def _same_frame(a: AlphaFrame, b: AlphaFrame) -> bool:
    return np.array_equal(a.re, b.re) and np.array_equal(a.im, b.im)


def _check_pair(psi: MomentumState, psi2: MomentumState):
    if psi.scale != psi2.scale:
        raise PreconditionError("states must share the same semiclassical scale")


# ---------------------------------------------------------------------------
# Multiplier path on S^3
# ---------------------------------------------------------------------------


def _pullback(g, p0):
    """G(u) = g(p0 omega^{-1}(u)) (1 - u4), extended by 0 at the north pole."""

    def G(u):
        w = 1.0 - u[..., 3]
        out = np.zeros(u.shape[:-1], dtype=complex)
        ok = w > 1e-14
        if np.any(ok):
            xi = p0 * u[ok][:, :3] / w[ok][:, None]
            out[ok] = g(xi) * w[ok]
        return out

    return G


def _hopf_diag(G, frame: AlphaFrame, N: int, n_w: int, n_phi: int, n_psi: int):
    w, ww = roots_sh_jacobi(n_w, N + 1.0, N + 1.0)
    phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
    psi = 2.0 * math.pi * (np.arange(n_psi) + 0.5) / n_psi
    a, b = orthonormal_complement(frame)
    circ = np.cos(phi)[:, None] * frame.re + np.sin(phi)[:, None] * frame.im
    perp = np.cos(psi)[:, None] * a + np.sin(psi)[:, None] * b
    parts = []
    for wk, wwk in zip(w, ww):
        u = math.sqrt(wk) * circ[:, None, :] + math.sqrt(1.0 - wk) * perp[None, :, :]
        parts.append(wwk * np.sum(G(u)))
    total = math.fsum(p.real for p in parts) + 1j * math.fsum(p.imag for p in parts)
    scale = 0.5 * (2.0 * math.pi / n_phi) * (2.0 * math.pi / n_psi)
    return normalization_constant(N) ** 2 * total * scale, n_w * n_phi * n_psi


def _product_cross(G, alpha, beta_conj, N: int, degree: int):
    n_t = degree // 2 + 1
    t, wt = chebyshev_u_rule(n_t)
    pts2, w2 = s2_product_rule(degree)
    parts = []
    for tk, wk in zip(t, wt):
        s = math.sqrt(1.0 - tk * tk)
        u = np.concatenate([s * pts2, np.full((len(w2), 1), tk)], axis=1)
        vals = G(u) * (u @ alpha) ** N * (u @ beta_conj) ** N
        parts.append(wk * np.sum(w2 * vals))
    total = math.fsum(p.real for p in parts) + 1j * math.fsum(p.imag for p in parts)
    return normalization_constant(N) ** 2 * total, n_t * len(w2)


def _is_equatorial(frame: AlphaFrame) -> bool:
    return abs(frame.re[3]) < 1e-14 and abs(frame.im[3]) < 1e-14


def _radial_exact(profile, alpha: AlphaFrame, beta: AlphaFrame, N: int, p0: float, n: int):
    """Exact angular reduction for radial g(|xi|) and equatorial frames.

    With u4 = t, |xi| = p0 sqrt((1+t)/(1-t)) and u = (sqrt(1-t^2) n, t):

        m = c_N^2 K_N int h(t) (1-t^2)^{N+1/2} dt,   h(t) = g(|xi|)(1 - t),
        K_N = int_{S^2} (a.n)^N (conj(b).n)^N dsigma,

    and since a.a = conj(b).conj(b) = 0, Wick's theorem for Gaussian moments
    gives K_N = N! (a.conj(b))^N (2 pi)^{3/2} / (Gamma(N+3/2) 2^{N+1/2}).
    """
    a = alpha.alpha[:3]
    bc = np.conj(beta.alpha[:3])
    ab = complex(a @ bc)
    if ab == 0 and N > 0:
        return 0j, 0.0
    logK = (gammaln(N + 1) + 1.5 * math.log(2 * math.pi) - gammaln(N + 1.5)
            - (N + 0.5) * math.log(2.0))
    pref = normalization_constant(N) ** 2 * math.exp(logK) * ab**N

    def J(m):
        t, w = roots_jacobi(m, N + 0.5, N + 0.5)
        r = p0 * np.sqrt((1.0 + t) / (1.0 - t))
        return float(np.sum(w * profile(r) * (1.0 - t)))

    j1, j2 = J(n), J(n + n // 2)
    return pref * j2, abs(pref) * abs(j2 - j1)


def multiplier_momentum(
    a: SymbolSpec,
    psi: MomentumState,
    psi2: MomentumState,
    rtol: float = 1e-9,
    atol: float = 1e-13,
    path: str = "auto",
) -> MatrixElementReport:
    """Matrix element of a momentum-only symbol by quadrature on S^3."""
    if a.kind != "momentum":
        raise PreconditionError("multiplier_momentum needs a momentum-only symbol")
    _check_pair(psi, psi2)
    t0 = time.perf_counter()
    N, p0 = psi.N, psi.scale.p0
    diag = _same_frame(psi.frame, psi2.frame)
    if path == "auto":
        if a.radial is not None and _is_equatorial(psi.frame) and _is_equatorial(psi2.frame):
            path = "radial"
        else:
            path = "hopf" if diag else "product"
    if path == "radial":
        val, err = _radial_exact(a.radial, psi.frame, psi2.frame, N, p0, 160 + 2 * N)
        return MatrixElementReport(val, "multiplier", err, 400 + 5 * N,
                                   time.perf_counter() - t0, details={"path": "radial"})
    G = _pullback(a.momentum_part, p0)
    evals = 0
    prev = None
    if path == "hopf":
        if not diag:
            raise PreconditionError("the Hopf rule needs identical frames")
        levels = [(24, 64, 32), (36, 128, 64), (48, 256, 128), (72, 512, 192)]
        for lv in levels:
            val, ne = _hopf_diag(G, psi.frame, N, *lv)
            evals += ne
            if prev is not None:
                err = abs(val - prev)
                if err <= max(rtol * abs(val), atol):
                    break
            prev = val
    elif path == "product":
        alpha, bconj = psi.frame.alpha, np.conj(psi2.frame.alpha)
        for extra in (48, 80, 128, 192):
            val, ne = _product_cross(G, alpha, bconj, N, 2 * N + extra)
            evals += ne
            if prev is not None:
                err = abs(val - prev)
                if err <= max(rtol * abs(val), atol):
                    break
            prev = val
    else:
        raise PreconditionError(f"unknown multiplier path {path!r}")
    return MatrixElementReport(complex(val), "multiplier", float(err), evals,
                               time.perf_counter() - t0, details={"path": path})


def multiplier_position(
    a: SymbolSpec, psi: MomentumState, psi2: MomentumState, grid: dict | None = None
) -> MatrixElementReport:
    """int f(x) psi(x) conj(psi'(x)) dx on FFT position grids, two resolutions."""
    if a.kind != "position":
        raise PreconditionError("multiplier_position needs a position-only symbol")
    _check_pair(psi, psi2)
    t0 = time.perf_counter()
    L, K = _common_extents(psi, psi2, grid)
    vals = []
    evals = 0
    for fac in (0.85, 1.0):
        n = grid_size(L, fac * K, psi.scale.hbar)
        g1 = to_position_grid(psi, L, n)
        g2 = g1 if _same_frame(psi.frame, psi2.frame) else to_position_grid(psi2, L, n)
        f = a.position_part(g1.points())
        vals.append(np.sum(f * g1.samples * np.conj(g2.samples)) * g1.cell_volume)
        evals += n**3
    return MatrixElementReport(complex(vals[1]), "multiplier", float(abs(vals[1] - vals[0])),
                               evals, time.perf_counter() - t0,
                               details={"path": "position-grid", "L": L})


def _common_extents(psi, psi2, grid):
    L1, K1 = default_extents(psi.frame, psi.scale)
    L2, K2 = default_extents(psi2.frame, psi2.scale)
    L, K = max(L1, L2), max(K1, K2)
    if grid:
        L = grid.get("half_width", L)
        K = grid.get("momentum_half_width", K)
    return L, K


# ---------------------------------------------------------------------------
# Lattice Weyl pairing for separable symbols
# ---------------------------------------------------------------------------


def _lattice_pairing(a: SymbolSpec, psi, psi2, L: float, n: int, tail: float,
                     max_offsets: int):
    hb = psi.scale.hbar
    m1 = sample_momentum(psi, L, n)
    m2 = m1 if _same_frame(psi.frame, psi2.frame) else sample_momentum(psi2, L, n)
    A, B = m1.samples, np.conj(m2.samples)
    d = m1.spacing[0]
    q0 = m1.origin[0]
    dx = 2.0 * L / n
    xax = (np.arange(n) - n // 2) * dx
    X = np.stack(np.meshgrid(xax, xax, xax, indexing="ij"), axis=-1)
    total = 0j
    bound = 0.0
    evals = 0
    for f, g in a.terms:
        if g is None:
            Gh = None
        else:
            hax = q0 + 0.5 * d * np.arange(2 * n - 1)
            Gh = g(np.stack(np.meshgrid(hax, hax, hax, indexing="ij"), axis=-1))
            evals += Gh.size
        if f is None:
            G0 = 1.0 if Gh is None else Gh[::2, ::2, ::2]
            total += np.sum(G0 * A * B) * d**3
            continue
        # ft[m] = int f(x) exp(i x.(m d)/hbar) dx for offsets m in [-n/2, n/2)
        fx = f(X)
        evals += fx.size
        sg = 1.0 - 2.0 * (np.arange(n) % 2)
        s3 = sg[:, None, None] * sg[None, :, None] * sg[None, None, :]
        ft = np.fft.fftshift(ifftn(fx) * n**3 * dx**3) * s3 * (-1.0) ** (3 * (n // 2))
        if Gh is None:
            # pure position term: sum_q A(q + m d) B(q) is a cross-correlation,
            # so every offset comes from one zero-padded FFT and nothing is dropped
            shape = (2 * n,) * 3
            corr = ifftn(fftn(A, shape) * np.conj(fftn(np.conj(B), shape)))
            idx = np.arange(-(n // 2), n - n // 2) % (2 * n)
            corr = corr[np.ix_(idx, idx, idx)]
            total += np.sum(ft * corr) * d**6 / (2.0 * math.pi * hb) ** 3
            continue
        mag = np.abs(ft)
        order = np.argsort(mag, axis=None)[::-1]
        csum = np.cumsum(mag.ravel()[order])
        keep = int(np.searchsorted(csum, (1.0 - tail) * csum[-1])) + 1
        keep = min(keep, order.size, max_offsets)
        bound += float(csum[-1] - csum[keep - 1])
        acc = []
        for flat in order[:keep]:
            m = np.array(np.unravel_index(flat, ft.shape)) - n // 2
            # sum over q of g(q + m d/2) A(q + m d) conj(B-state)(q)
            sa = [slice(max(k, 0), n + min(k, 0)) for k in m]
            sb = [slice(max(-k, 0), n + min(-k, 0)) for k in m]
            prod = A[tuple(sa)] * B[tuple(sb)]
            if Gh is not None:
                sh = [slice(2 * s.start + k, 2 * (s.stop - 1) + k + 1, 2) for s, k in zip(sb, m)]
                prod = prod * Gh[tuple(sh)]
            acc.append(ft[tuple(m + n // 2)] * np.sum(prod))
        total += (math.fsum(z.real for z in acc) + 1j * math.fsum(z.imag for z in acc)) * \
            d**6 / (2.0 * math.pi * hb) ** 3
    norm_bound = float(np.sqrt(np.sum(np.abs(A) ** 2) * np.sum(np.abs(B) ** 2))) * d**3
    gmax = 1.0
    return total, bound * norm_bound * gmax * d**3 / (2.0 * math.pi * hb) ** 3, evals


def grid_wigner_matrix_element(
    a: SymbolSpec,
    psi: MomentumState,
    psi2: MomentumState,
    grid: dict | None = None,
    tail: float = 1e-8,
    max_offsets: int = 20000,
) -> MatrixElementReport:
    """Weyl pairing on a momentum lattice for momentum, position or separable symbols.

    For a term f(x) g(xi) the pairing is
    (2 pi hbar)^-3 sum_m ft(m d) sum_q g(q + m d/2) psi_hat(q + m d) conj(psi_hat'(q)) d^6
    where ft is the Fourier transform of f, computed by one FFT on the dual
    position lattice. For position-only terms the inner sum is a
    cross-correlation and all offsets come from one padded FFT. For terms
    with a momentum factor, offsets m are kept in decreasing |ft| order until
    the discarded l1 mass is below ``tail`` (at most ``max_offsets``); the
    discarded part enters the error estimate together with the change under a
    coarser lattice. That loop costs (kept offsets) x n^3, so separable
    symbols are meant for small N.
    """
    if a.kind == "general":
        raise PreconditionError("grid_wigner needs a separable symbol")
    _check_pair(psi, psi2)
    t0 = time.perf_counter()
    L, K = _common_extents(psi, psi2, grid)
    hb = psi.scale.hbar
    coarse = _lattice_pairing(a, psi, psi2, 0.85 * L, grid_size(0.85 * L, 0.9 * K, hb), tail,
                              max_offsets)
    fine = _lattice_pairing(a, psi, psi2, L, grid_size(L, K, hb), tail, max_offsets)
    err = abs(fine[0] - coarse[0]) + fine[1]
    return MatrixElementReport(complex(fine[0]), "grid_wigner", float(err),
                               coarse[2] + fine[2], time.perf_counter() - t0,
                               details={"L": L, "K": K})


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------


def matrix_element(
    a: SymbolSpec,
    psi: MomentumState,
    psi2: MomentumState | None = None,
    method: str = "auto",
    **kwargs,
) -> MatrixElementReport:
    """<Op_hbar(a) psi, psi'>; psi' defaults to psi.

    ``method`` is "auto" or one of multiplier, grid_wigner, monte_carlo.
    Extra keyword arguments go to the chosen strategy.
    """
    psi2 = psi if psi2 is None else psi2
    _check_pair(psi, psi2)
    if method == "auto":
        method = {"momentum": "multiplier", "position": "multiplier",
                  "separable": "grid_wigner", "general": "monte_carlo"}[a.kind]
    if method == "multiplier":
        if a.kind == "momentum":
            return multiplier_momentum(a, psi, psi2, **kwargs)
        if a.kind == "position":
            return multiplier_position(a, psi, psi2, **kwargs)
        raise PreconditionError("the multiplier method needs a momentum- or position-only symbol")
    if method == "grid_wigner":
        return grid_wigner_matrix_element(a, psi, psi2, **kwargs)
    if method == "monte_carlo":
        from .oscillatory import monte_carlo_matrix_element

        return monte_carlo_matrix_element(a, psi, psi2, **kwargs)
    raise PreconditionError(f"unknown method {method!r}")


def cross_matrix_element(
    a: SymbolSpec,
    alpha: AlphaFrame,
    beta: AlphaFrame,
    N: int,
    E: float = -0.5,
    method: str = "auto",
    **kwargs,
) -> MatrixElementReport:
    """<Op(a) Psi_alpha, Psi_beta> at quantum number N and energy E."""
    sc = SemiclassicalScale.from_energy(E, N)
    return matrix_element(a, MomentumState(alpha, sc), MomentumState(beta, sc), method, **kwargs)


# ---------------------------------------------------------------------------
# Wigner slices
# ---------------------------------------------------------------------------


class WignerSlicer:
    """Evaluate xi -> W(x, xi) on a momentum lattice for arbitrary x.

    For each x the state is resynthesised on a position lattice centred at
    x (one FFT from the closed-form momentum samples), the products
    psi(x + y) conj(psi'(x - y)) are formed, and a final FFT over y gives W on
    the lattice xi_l = l * pi hbar / (2 L'), |xi| < K. Here y = v/2 runs over a
    box of half-width L' = half_width, which must cover |x| plus the state's
    extent. Mathematically this is the momentum-space formula
    W = (2 pi hbar)^-3 int psi_hat(xi+u/2) conj(psi_hat'(xi-u/2)) e^{i x.u/hbar} du.
    """

    def __init__(self, psi: MomentumState, psi2: MomentumState | None = None,
                 half_width: float | None = None, xi_half_width: float | None = None,
                 n: int | None = None, pad: float = 4.0):
        psi2 = psi if psi2 is None else psi2
        _check_pair(psi, psi2)
        self.psi, self.psi2 = psi, psi2
        L1, K1 = default_extents(psi.frame, psi.scale, pad)
        L2, K2 = default_extents(psi2.frame, psi2.scale, pad)
        L0, K0 = max(L1, L2), max(K1, K2)
        self.L = 2.0 * L0 if half_width is None else float(half_width)
        self.K = K0 if xi_half_width is None else float(xi_half_width)
        hb = psi.scale.hbar
        # position spacing dy must satisfy pi hbar / (2 dy) >= K
        self.n = grid_size(self.L, 2.0 * self.K, hb) if n is None else int(n)
        if self.n <= 0 or self.n % 2:
            raise PreconditionError("n must be positive and even")
        self.dy = 2.0 * self.L / self.n
        self.dxi_state = math.pi * hb / self.L
        if self.dxi_state * self.L > math.pi * hb * (1 + 1e-12):
            raise PreconditionError("momentum lattice too coarse for the box")
        self.mom1 = sample_momentum(psi, self.L, self.n)
        self.mom2 = self.mom1 if psi2 is psi else sample_momentum(psi2, self.L, self.n)
        ax = self.mom1.axes()[0]
        self._qax = ax
        self.xi_spacing = math.pi * hb / (2.0 * self.L)
        self.xi_axis = (np.arange(self.n) - self.n // 2) * self.xi_spacing

    def _synth(self, mom, x):
        # values psi(x + y_j), y_j = (j - n/2) dy
        hb, n = self.psi.scale.hbar, self.n
        q = self._qax
        ph = [np.exp(1j * x[k] * q / hb) for k in range(3)]
        data = mom.samples * ph[0][:, None, None] * ph[1][None, :, None] * ph[2][None, None, :]
        sg = 1.0 - 2.0 * (np.arange(n) % 2)
        s3 = sg[:, None, None] * sg[None, :, None] * sg[None, None, :]
        out = ifftn(data * s3, workers=-1) * s3
        return out * (2 * math.pi * hb) ** -1.5 * mom.cell_volume * n**3 * (-1.0) ** (3 * (n // 2))

    def __call__(self, x):
        """Return W(x, xi) on the (n, n, n) lattice self.xi_axis^3 (complex)."""
        x = np.asarray(x, dtype=float).reshape(3)
        n, hb = self.n, self.psi.scale.hbar
        a = self._synth(self.mom1, x)
        b = a if self.psi2 is self.psi else self._synth(self.mom2, x)
        # index j <-> y_j; -y_j <-> index (n - j) mod n with y_0 = -L mapped to itself
        rev = (-np.arange(n)) % n
        prod = a * np.conj(b[rev][:, rev][:, :, rev])
        # W(xi_l) = (2 pi hbar)^-3 sum_j prod_j exp(-2i y_j xi_l / hbar) (2 dy)^3
        sg = 1.0 - 2.0 * (np.arange(n) % 2)
        s3 = sg[:, None, None] * sg[None, :, None] * sg[None, None, :]
        W = fftn(prod * s3, workers=-1) * s3 * (-1.0) ** (3 * (n // 2))
        return W * (2.0 * self.dy) ** 3 / (2.0 * math.pi * hb) ** 3

    def density(self, x) -> float:
        """psi(x) conj(psi'(x)) from the same synthesis (for marginal checks)."""
        x = np.asarray(x, dtype=float).reshape(3)
        a = self._synth(self.mom1, x)
        b = a if self.psi2 is self.psi else self._synth(self.mom2, x)
        c = self.n // 2
        return complex(a[c, c, c] * np.conj(b[c, c, c]))


def wigner_slice(psi: MomentumState, x, psi2: MomentumState | None = None, **kwargs):
    """W(x, .) on a momentum lattice; returns (xi_axis, W) with W of shape (n, n, n)."""
    sl = WignerSlicer(psi, psi2, **kwargs)
    return sl.xi_axis, sl(x)
