"""Quadrature rules on S^2 and S^3.

Two families:

* product rules in hyperspherical coordinates, exact for polynomials of a
  requested degree (used for norms and cross terms);
* Hopf-fibration rules adapted to a frame alpha, which absorb the weight
  |alpha.u|^{2N} into Gauss-Jacobi weights (used for diagonal matrix elements
  at large N, where |alpha.u|^{2N} is sharply peaked).
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import roots_legendre, roots_sh_jacobi

from .geometry import AlphaFrame


@lru_cache(maxsize=64)
def _legendre(n: int):
    x, w = roots_legendre(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n: int, a: float = -1.0, b: float = 1.0):
    """Gauss-Legendre nodes and weights on [a, b]."""
    x, w = _legendre(int(n))
    half = 0.5 * (b - a)
    return half * x + 0.5 * (a + b), half * w


def chebyshev_u_rule(n: int):
    """Nodes/weights with sum w f(t) = int_{-1}^{1} f(t) sqrt(1-t^2) dt, exact to degree 2n-1."""
    k = np.arange(1, n + 1)
    ang = k * math.pi / (n + 1)
    return np.cos(ang), math.pi / (n + 1) * np.sin(ang) ** 2


def s2_product_rule(degree: int):
    """Points (M, 3) and weights on S^2, exact for polynomials up to ``degree``."""
    n_t = degree // 2 + 1
    n_p = degree + 1
    ct, wt = gauss_legendre(n_t)
    ph = 2.0 * math.pi * np.arange(n_p) / n_p
    st = np.sqrt(1.0 - ct**2)
    pts = np.stack(
        [
            st[:, None] * np.cos(ph)[None, :],
            st[:, None] * np.sin(ph)[None, :],
            np.broadcast_to(ct[:, None], (n_t, n_p)),
        ],
        axis=-1,
    ).reshape(-1, 3)
    w = np.repeat(wt * (2.0 * math.pi / n_p), n_p)
    return pts, w


def s3_product_rule(degree: int):
    """Points (M, 4) and weights on S^3, exact for polynomials up to ``degree``.

    u = (sqrt(1-t^2) n, t) with n on S^2 and dOmega = sqrt(1-t^2) dt dsigma(n).
    """
    n_t = degree // 2 + 1
    t, wt = chebyshev_u_rule(n_t)
    pts2, w2 = s2_product_rule(degree)
    st = np.sqrt(1.0 - t**2)
    u = np.concatenate(
        [
            st[:, None, None] * pts2[None, :, :],
            np.broadcast_to(t[:, None, None], (n_t, len(w2), 1)),
        ],
        axis=-1,
    ).reshape(-1, 4)
    w = (wt[:, None] * w2[None, :]).reshape(-1)
    return u, w


def orthonormal_complement(frame: AlphaFrame) -> np.ndarray:
    """Two unit vectors (rows) spanning the orthogonal complement of the frame plane."""
    A = np.stack([frame.re, frame.im], axis=1)
    q, _ = np.linalg.qr(np.concatenate([A, np.eye(4)], axis=1))
    return q[:, 2:4].T


def hopf_rule(frame: AlphaFrame, N: int, n_w: int, n_phi: int, n_psi: int):
    """Rule with sum w G(u) = int_{S^3} |alpha.u|^{2N} G(u) dOmega.

    Coordinates u = sqrt(w)(cos phi re + sin phi im) + sqrt(1-w)(cos psi a + sin psi b),
    in which |alpha.u|^2 = w and dOmega = dw dphi dpsi / 2. The w^N weight goes
    into a shifted Gauss-Jacobi rule. Returned nodes have shape
    (n_w, n_phi, n_psi, 4), weights (n_w, n_phi, n_psi), and the phase
    exp(i phi) of alpha.u as a third array (n_phi,).
    """
    w, ww = roots_sh_jacobi(n_w, N + 1.0, N + 1.0)
    phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
    psi = 2.0 * math.pi * (np.arange(n_psi) + 0.5) / n_psi
    a, b = orthonormal_complement(frame)
    rw = np.sqrt(w)[:, None, None, None]
    cw = np.sqrt(1.0 - w)[:, None, None, None]
    circ = np.cos(phi)[:, None] * frame.re + np.sin(phi)[:, None] * frame.im
    perp = np.cos(psi)[:, None] * a + np.sin(psi)[:, None] * b
    u = rw * circ[None, :, None, :] + cw * perp[None, None, :, :]
    weights = np.broadcast_to(
        (0.5 * ww * (2.0 * math.pi / n_phi) * (2.0 * math.pi / n_psi))[:, None, None],
        u.shape[:3],
    )
    return u, weights, np.exp(1j * phi)
