"""The oscillatory-integral form of coherent-state matrix elements.

In the scaled variables x' = p0^2 x, xi' = xi / p0, v = u / p0 the Weyl
matrix element of two coherent states becomes

    <Op(a) Psi_alpha, Psi_beta> = (N+1)^4 / (16 pi^5) int f e^{i N P} dx' dxi' dv,

    f = 16 a(x'/p0^2, p0 xi') e^{i v.x'} / ((|xi'+v/2|^2+1)^2 (|xi'-v/2|^2+1)^2),
    P = -i log(alpha.omega(xi'+v/2)) - i log(conj(beta).omega(xi'-v/2)) + v.x'.

Since |alpha.omega| <= 1, Im P >= 0. The Monte Carlo estimator below samples
(xi'+v/2, xi'-v/2) from the damping |alpha.omega|^N |beta.omega|^N (pulled
back from S^3 through the Hopf fibration), mixed with a heavy-tailed proposal
concentrated near v = 0, where the x-integral of exp(i(N+1)v.x') lives.
"""

from __future__ import annotations

import math
import time
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import gammaln

from .errors import BranchPointError, ConvergenceError, PreconditionError
from .geometry import AlphaFrame, stereographic_fwd, stereographic_inv
from .quantize import MatrixElementReport, _check_pair
from .sphere import orthonormal_complement
from .states import MomentumState, default_extents
from .symbols import SymbolSpec, plateau


class OscillatoryForm(NamedTuple):
    f: Callable
    P: Callable
    prefactor: float


def _log_branch(z, ref):
    if ref is None:
        return np.log(z)
    ref = np.asarray(ref, dtype=float)
    return np.log(np.abs(z)) + 1j * (ref + np.angle(z * np.exp(-1j * ref)))


def oscillatory_form(a: SymbolSpec, alpha: AlphaFrame, beta: AlphaFrame | None, N: int,
                     p0: float = 1.0) -> OscillatoryForm:
    """Amplitude f(x, xi, v) and phase P(x, xi, v, branch=None) in scaled variables.

    ``beta`` defaults to ``alpha`` (diagonal element). The logarithms use the
    principal branch unless ``branch=(ref_plus, ref_minus)`` is passed, in
    which case each argument is taken within pi of the given reference angle.
    """
    beta = alpha if beta is None else beta
    al = alpha.alpha
    bc = np.conj(beta.alpha)

    def f(x, xi, v):
        x, xi, v = (np.asarray(t, dtype=float) for t in (x, xi, v))
        ap = np.sum((xi + 0.5 * v) ** 2, axis=-1) + 1.0
        am = np.sum((xi - 0.5 * v) ** 2, axis=-1) + 1.0
        sym = a(x / p0**2, p0 * xi)
        return 16.0 * sym * np.exp(1j * np.sum(v * x, axis=-1)) / (ap**2 * am**2)

    def P(x, xi, v, branch=None):
        x, xi, v = (np.asarray(t, dtype=float) for t in (x, xi, v))
        zp = stereographic_inv(xi + 0.5 * v) @ al
        zm = stereographic_inv(xi - 0.5 * v) @ bc
        if np.any(np.abs(zp) < 1e-12) or np.any(np.abs(zm) < 1e-12):
            raise BranchPointError("|alpha.omega| < 1e-12: too close to the branch point")
        rp, rm = (None, None) if branch is None else branch
        return -1j * _log_branch(zp, rp) - 1j * _log_branch(zm, rm) + np.sum(v * x, axis=-1)

    return OscillatoryForm(f, P, (N + 1) ** 4 / (16.0 * math.pi**5))


# ---------------------------------------------------------------------------
# Samplers on S^3 pulled back to R^3
# ---------------------------------------------------------------------------


def _hopf_sample(frame: AlphaFrame, k: float, size: int, rng: np.random.Generator):
    """u on S^3 with density |alpha.u|^{2k} / Z_k, Z_k = 2 pi^2 / (k+1)."""
    w = rng.random(size) ** (1.0 / (k + 1.0))
    phi = rng.random(size) * 2 * math.pi
    psi = rng.random(size) * 2 * math.pi
    a, b = orthonormal_complement(frame)
    u = (np.sqrt(w)[:, None] * (np.cos(phi)[:, None] * frame.re + np.sin(phi)[:, None] * frame.im)
         + np.sqrt(1 - w)[:, None] * (np.cos(psi)[:, None] * a + np.sin(psi)[:, None] * b))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def _hopf_density_xi(frame: AlphaFrame, k: float, xi):
    """Density in R^3 of omega^{-1}(u) for u from :func:`_hopf_sample`."""
    r2 = np.sum(xi * xi, axis=-1)
    u = stereographic_inv(xi)
    jac = (2.0 / (r2 + 1.0)) ** 3
    return np.abs(u @ frame.alpha) ** (2 * k) * jac * (k + 1.0) / (2 * math.pi**2)


def _sample_xi(frame, k, size, rng):
    u = _hopf_sample(frame, k, size, rng)
    u[:, 3] = np.minimum(u[:, 3], 1.0 - 1e-11)
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    return stereographic_fwd(u)


def _radial_ft_table(profile, r_max: float, n_nodes: int = 3000, n_table: int = 20001):
    """Tabulate k -> int profile(|x|) e^{i k.x} dx for a radial profile on [0, r_max]."""
    t, w = np.polynomial.legendre.leggauss(n_nodes)
    r = 0.5 * r_max * (t + 1.0)
    w = 0.5 * r_max * w * 4 * math.pi * r * r * profile(r)
    k_max = 750.0 / r_max
    ks = np.linspace(0.0, k_max, n_table)
    vals = np.array([np.sum(w * np.sinc(k * r / math.pi)) for k in ks])
    return ks, vals


def _student_t(size, sigma, nu, rng):
    z = rng.standard_normal((size, 3))
    return sigma * z / np.sqrt(rng.chisquare(nu, size) / nu)[:, None]


def _student_t_density(v, sigma, nu):
    q = np.sum(v * v, axis=-1) / (nu * sigma**2)
    logc = gammaln(0.5 * (nu + 3)) - gammaln(0.5 * nu) - 1.5 * math.log(nu * math.pi) - 3 * math.log(sigma)
    return np.exp(logc - 0.5 * (nu + 3) * np.log1p(q))


def monte_carlo_matrix_element(
    a: SymbolSpec,
    psi: MomentumState,
    psi2: MomentumState | None = None,
    n_samples: int = 200_000,
    x_per_sample: int = 8,
    chunk: int = 20_000,
    mix_damping: float = 0.3,
    sigma_v: float | None = None,
    nu: float = 3.0,
    seed: int = 0,
    rtol: float | None = None,
    cutoff_radius: float | None = None,
) -> MatrixElementReport:
    """Importance-sampled estimate of the oscillatory integral.

    (xi, v) are drawn from a mixture: with weight ``mix_damping`` the pair
    xi +- v/2 comes from the damping factors of the two states, otherwise xi
    comes from |Phi|^2 and v from a Student-t with scale ``sigma_v`` and
    ``nu`` degrees of freedom (heavy tails keep the weights bounded).

    Momentum-only symbols are multiplied by a radial plateau cutoff equal to
    1 on a ball containing the states; the x-integral of the phase against
    that cutoff is then a radial Fourier transform, which is tabulated and
    used exactly (no x sampling). Other symbols sample x on the periodic box
    around their support, ``x_per_sample`` points spaced over one wavelength
    of the phase so that the oscillation averages out.
    Raises ConvergenceError if ``rtol`` is given and the relative standard
    error exceeds it.
    """
    psi2 = psi if psi2 is None else psi2
    _check_pair(psi, psi2)
    t0 = time.perf_counter()
    N, p0 = psi.N, psi.scale.p0
    details = {"path": "oscillatory", "n_samples": n_samples, "seed": seed}
    exact_x = a.kind == "momentum"
    form = None
    if exact_x:
        if cutoff_radius is None:
            L1, _ = default_extents(psi.frame, psi.scale, 4.0)
            L2, _ = default_extents(psi2.frame, psi2.scale, 4.0)
            cutoff_radius = max(L1, L2)
        details["cutoff_radius"] = cutoff_radius
        Rs = p0**2 * cutoff_radius
        ks, table = _radial_ft_table(lambda r: plateau(r, Rs, 1.5 * Rs), 1.5 * Rs)
        form = oscillatory_form(a, psi.frame, psi2.frame, N, p0)
        details["x_integral"] = "exact"
    else:
        if a.x_support is None:
            raise PreconditionError("symbol needs position support for Monte Carlo")
        c, R = a.x_support
        cs, Rs = p0**2 * np.asarray(c, float), p0**2 * float(R)
        vol = (2.0 * Rs) ** 3
        form = oscillatory_form(a, psi.frame, psi2.frame, N, p0)
        details["x_integral"] = "sampled"
        details["x_per_sample"] = x_per_sample
    sigma = 2.0 / ((N + 1) * Rs) if sigma_v is None else sigma_v
    details["sigma_v"] = sigma
    k = 0.5 * N
    rng = np.random.default_rng(seed)
    fa, fb = psi.frame, psi2.frame
    lam = mix_damping
    origin = np.zeros(3)

    sums_re, sums_im, sq = [], [], []
    done = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        nA = rng.binomial(m, lam)
        nB = m - nA
        xp = _sample_xi(fa, k, nA, rng)
        xm = _sample_xi(fb, k, nA, rng)
        pick = rng.random(nB) < 0.5
        xc = np.where(pick[:, None], _sample_xi(fa, N, nB, rng), _sample_xi(fb, N, nB, rng))
        vv = _student_t(nB, sigma, nu, rng)
        xi_p = np.concatenate([xp, xc + 0.5 * vv])
        xi_m = np.concatenate([xm, xc - 0.5 * vv])
        xi = 0.5 * (xi_p + xi_m)
        v = xi_p - xi_m
        dens_a = _hopf_density_xi(fa, k, xi_p) * _hopf_density_xi(fb, k, xi_m)
        dens_c = 0.5 * (_hopf_density_xi(fa, N, xi) + _hopf_density_xi(fb, N, xi))
        rho = lam * dens_a + (1.0 - lam) * dens_c * _student_t_density(v, sigma, nu)
        kap = (N + 1) * np.linalg.norm(v, axis=1)
        if exact_x:
            # f and P at x = 0 carry everything but the phase exp(i(N+1)v.x)
            xft = np.interp(kap, ks, table, right=0.0)
            acc = form.f(origin, xi, v) * np.exp(1j * N * form.P(origin, xi, v)) * xft
        else:
            acc = np.zeros(m, dtype=complex)
            with np.errstate(divide="ignore"):
                span = np.where(kap > 0, 2 * math.pi / kap, np.inf)
            span = np.minimum(span, 2 * Rs)
            vhat = v / np.maximum(np.linalg.norm(v, axis=1, keepdims=True), 1e-300)
            start = rng.random((m, 3)) * 2 * Rs
            for j in range(x_per_sample):
                # every comb point is uniform on the periodic box, so the
                # average stays unbiased while the phases nearly cancel
                off = start + (j * span / x_per_sample)[:, None] * vhat
                x = cs - Rs + np.mod(off, 2 * Rs)
                acc += form.f(x, xi, v) * np.exp(1j * N * form.P(x, xi, v))
            acc *= vol / x_per_sample
        z = form.prefactor * acc / rho
        sums_re.append(math.fsum(z.real))
        sums_im.append(math.fsum(z.imag))
        sq.append(math.fsum(np.abs(z) ** 2))
        done += m
    mean = complex(math.fsum(sums_re), math.fsum(sums_im)) / n_samples
    var = max(math.fsum(sq) / n_samples - abs(mean) ** 2, 0.0)
    se = math.sqrt(var / n_samples)
    if rtol is not None and se > rtol * abs(mean):
        raise ConvergenceError(
            f"Monte Carlo standard error {se:.3g} exceeds tolerance", se)
    evals = n_samples * (1 if exact_x else x_per_sample)
    return MatrixElementReport(mean, "monte_carlo", se, evals,
                               time.perf_counter() - t0, details=details)
