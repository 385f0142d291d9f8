"""Stationary-phase skeleton of the oscillatory matrix-element integral.

For the frame alpha = e1 + i(cos th e2 + sin th e4) (AlphaFrame.standard(th))
the phase P(x, xi, v) of :func:`keplerfock.oscillatory.oscillatory_form` is
stationary with real value exactly on the closed curve

    x(b)  = (sin b - sin th, -cos th cos b, 0)
    xi(b) = (cos b, sin b cos th, 0) / (1 - sin th sin b)
    v     = 0,

which is the energy -1/2 Kepler orbit of the frame. This module evaluates
those points, checks the stationarity conditions by finite differences, and
computes the transverse Hessian of P in tubular coordinates, whose
determinant has the closed form

    sqrt|det| = 2 (1 - sin b sin th)^3 sqrt(1 - sin^2 b sin^2 th).

All Hessians are central finite differences of the complex phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .geometry import AlphaFrame, KeplerOrbit, SemiclassicalScale, great_circle, kepler_state, \
    moser_inv, time_change
from .oscillatory import oscillatory_form
from .symbols import SymbolSpec

COLLISION_TOL = 1e-12
E3 = np.array([0.0, 0.0, 1.0])
_UNIT = SymbolSpec(((None, None),), name="constant")


@dataclass(frozen=True)
class CriticalPoint:
    beta: float
    theta0: float
    x: np.ndarray
    xi: np.ndarray
    v: np.ndarray

    @property
    def frame(self) -> AlphaFrame:
        return AlphaFrame.standard(self.theta0)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.xi, self.v])


def _denominator(beta, theta0):
    d = 1.0 - math.sin(theta0) * math.sin(beta)
    if d <= COLLISION_TOL:
        raise PreconditionError(
            f"1 - sin(theta0) sin(beta) = {d:.3g}: the collision endpoint has no critical point")
    return d


def is_collision_angle(theta0: float) -> bool:
    return abs(abs(math.sin(theta0)) - 1.0) <= COLLISION_TOL


def critical_point(beta: float, theta0: float) -> CriticalPoint:
    """The point of the critical curve at orbit parameter beta."""
    beta, theta0 = float(beta), float(theta0)
    d = _denominator(beta, theta0)
    sb, cb = math.sin(beta), math.cos(beta)
    st, ct = math.sin(theta0), math.cos(theta0)
    x = np.array([sb - st, -ct * cb, 0.0])
    xi = np.array([cb, sb * ct, 0.0]) / d
    return CriticalPoint(beta, theta0, x, xi, np.zeros(3))


def moser_image(beta: float, theta0: float):
    """(x, xi) of the great circle point at parameter beta, through the inverse Moser map."""
    frame = AlphaFrame.standard(theta0)
    scale = SemiclassicalScale(0, -0.5, 1.0, 1.0)
    p = moser_inv(great_circle(frame, beta), scale)
    return p.x, p.xi


def orbit_point(beta: float, theta0: float):
    """(x, xi) of the Kepler flow at the time matched to parameter beta."""
    frame = AlphaFrame.standard(theta0)
    scale = SemiclassicalScale(0, -0.5, 1.0, 1.0)
    t = float(time_change(frame, beta % (2 * math.pi), scale))
    p = kepler_state(KeplerOrbit(frame, scale), t)
    return p.x, p.xi


def _phase(theta0: float, beta: float):
    """P(x, xi, v) with the logarithms continued from the arguments at parameter beta."""
    form = oscillatory_form(_UNIT, AlphaFrame.standard(theta0), None, 0)
    refs = (beta, -beta)

    def P(z):
        z = np.asarray(z, dtype=float)
        return form.P(z[..., 0:3], z[..., 3:6], z[..., 6:9], branch=refs)

    return P


def _gradient(F, z0, h):
    n = z0.size
    out = np.zeros(n, dtype=complex)
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        out[k] = (F(z0 + e) - F(z0 - e)) / (2 * h)
    return out


def _hessian(F, z0, h):
    n = z0.size
    H = np.zeros((n, n), dtype=complex)
    f0 = F(z0)
    I = np.eye(n) * h
    for i in range(n):
        H[i, i] = (F(z0 + I[i]) - 2 * f0 + F(z0 - I[i])) / h**2
        for j in range(i + 1, n):
            H[i, j] = H[j, i] = (F(z0 + I[i] + I[j]) - F(z0 + I[i] - I[j])
                                 - F(z0 - I[i] + I[j]) + F(z0 - I[i] - I[j])) / (4 * h**2)
    return H


@dataclass(frozen=True)
class StationarityReport:
    grad_x: np.ndarray
    grad_xi: np.ndarray
    grad_v: np.ndarray
    im_P: float

    @property
    def grad_norm(self) -> float:
        return float(np.linalg.norm(np.concatenate([self.grad_x, self.grad_xi, self.grad_v])))

    def is_critical(self, grad_tol: float = 1e-6, im_tol: float = 1e-10) -> bool:
        return self.grad_norm < grad_tol and abs(self.im_P) < im_tol


def check_stationarity(p: CriticalPoint, frame: AlphaFrame | None = None, h: float = 1e-6
                       ) -> StationarityReport:
    """Finite-difference gradient of P and Im P at a (possibly perturbed) point.

    ``frame`` must be AlphaFrame.standard(p.theta0) up to 1e-12 (the default).
    The caller judges the residuals.
    """
    std = p.frame
    if frame is not None:
        if np.max(np.abs(frame.alpha - std.alpha)) > 1e-12:
            raise PreconditionError("frame does not match theta0 of the critical point")
    P = _phase(p.theta0, p.beta)
    z0 = p.as_vector()
    g = _gradient(P, z0, h)
    return StationarityReport(g[0:3], g[3:6], g[6:9], float(np.imag(P(z0))))


def perturb(p: CriticalPoint, rng: np.random.Generator, size: float = 1e-2) -> CriticalPoint:
    """A copy of p displaced by a random vector of length ``size`` in (x, xi, v)."""
    d = rng.standard_normal(9)
    d *= size / np.linalg.norm(d)
    z = p.as_vector() + d
    return CriticalPoint(p.beta, p.theta0, z[0:3], z[3:6], z[6:9])


# ---------------------------------------------------------------------------
# Hessian in tubular coordinates
# ---------------------------------------------------------------------------


def hessian_det_closed(beta: float, theta0: float) -> float:
    """sqrt|det Hess| on the critical curve.

    Generic frames: 2 (1 - sin b sin th)^3 sqrt(1 - sin^2 b sin^2 th).
    Collision frames (sin th = +-1): 2 (1 - sin th sin b)^3 |cos b|.
    """
    sb, st = math.sin(beta), math.sin(theta0)
    d = 1.0 - sb * st
    if is_collision_angle(theta0):
        return 2.0 * d**3 * abs(math.cos(beta))
    return 2.0 * d**3 * math.sqrt(1.0 - sb * sb * st * st)


def normal_vector(beta: float, theta0: float) -> np.ndarray:
    """Unit normal n_b to the projected orbit inside the orbital plane."""
    sb, cb, st, ct = math.sin(beta), math.cos(beta), math.sin(theta0), math.cos(theta0)
    w = math.sqrt(1.0 - sb * sb * st * st)
    if w < 1e-12:
        raise PreconditionError("the tubular chart degenerates here; use the collision chart")
    return np.array([-sb * ct, cb, 0.0]) / w


def generic_chart(beta: float, theta0: float):
    """z(t, s, xi, v) = (x(b) + t n_b + s e3, xi, v) as a map R^8 -> R^9."""
    cp = critical_point(beta, theta0)
    n = normal_vector(beta, theta0)

    def chart(w):
        w = np.asarray(w, dtype=float)
        x = cp.x + w[0] * n + w[1] * E3
        return np.concatenate([x, w[2:5], w[5:8]])

    w0 = np.concatenate([[0.0, 0.0], cp.xi, np.zeros(3)])
    return chart, w0


def collision_chart(beta: float, theta0: float):
    """Phase-space chart around the collision critical curve, sin th = sg = +-1.

    x  = x(b) + t1 e2 + t2 e3 + s1 m_b
    xi = xi(b) + s1 m'_b + s2 e2 + s3 e3
    v  = s1' m'_b + s2' e2 + s3' e3
    with m_b = c(-sg / (1 - sg sin b), 0, 0), m'_b = c(cos b, 0, 0),
    c = (cos^2 b + (1 - sg sin b)^-2)^-1/2. Variables (t1, t2, s1, s2, s3, s1', s2', s3').
    """
    if not is_collision_angle(theta0):
        raise PreconditionError("collision chart needs sin(theta0) = +-1")
    sg = 1.0 if math.sin(theta0) > 0 else -1.0
    cp = critical_point(beta, theta0)
    d = 1.0 - sg * math.sin(beta)
    cb = math.cos(beta)
    c = 1.0 / math.sqrt(cb * cb + 1.0 / d**2)
    m = np.array([-sg * c / d, 0.0, 0.0])
    mp = np.array([c * cb, 0.0, 0.0])
    e2 = np.array([0.0, 1.0, 0.0])

    def chart(w):
        w = np.asarray(w, dtype=float)
        x = cp.x + w[0] * e2 + w[1] * E3 + w[2] * m
        xi = cp.xi + w[2] * mp + w[3] * e2 + w[4] * E3
        v = w[5] * mp + w[6] * e2 + w[7] * E3
        return np.concatenate([x, xi, v])

    return chart, np.zeros(8)


@dataclass(frozen=True)
class HessianReport:
    beta: float
    theta0: float
    chart: str
    matrix: np.ndarray
    det: complex
    sqrt_abs_det: float
    closed_form: float
    ill_conditioned: bool

    @property
    def rel_error(self) -> float:
        return abs(self.sqrt_abs_det - self.closed_form) / abs(self.closed_form)


def hessian_numeric(beta: float, theta0: float, h: float = 1e-4, chart: str = "auto"
                    ) -> HessianReport:
    """8x8 complex Hessian of P in tubular coordinates at the critical point.

    ``chart`` is "generic" (variables t, s, xi, v), "collision" or "auto"
    (collision exactly when sin th = +-1). The determinant comes from an LU
    factorisation; ``ill_conditioned`` is set when |det| < 1e-10.
    """
    if chart == "auto":
        chart = "collision" if is_collision_angle(theta0) else "generic"
    if chart == "generic":
        phi, w0 = generic_chart(beta, theta0)
    elif chart == "collision":
        phi, w0 = collision_chart(beta, theta0)
    else:
        raise PreconditionError(f"unknown chart {chart!r}")
    P = _phase(theta0, beta)
    H = _hessian(lambda w: P(phi(w)), w0, h)
    sign, logdet = np.linalg.slogdet(H)
    det = complex(sign * np.exp(logdet))
    return HessianReport(float(beta), float(theta0), chart, H, det,
                         float(np.exp(0.5 * logdet)), hessian_det_closed(beta, theta0),
                         abs(det) < 1e-10)


def tubular_jacobian(beta: float, theta0: float, t: float = 0.0, h: float = 1e-6) -> float:
    """|det d(x)/d(b, t, s)| of the configuration-space tube chart, by finite differences."""
    n = normal_vector(beta, theta0)

    def x_of(b, tt, s):
        cp = critical_point(b, theta0)
        return cp.x + tt * normal_vector(b, theta0) + s * E3

    db = (x_of(beta + h, t, 0.0) - x_of(beta - h, t, 0.0)) / (2 * h)
    return abs(float(np.linalg.det(np.column_stack([db, n, E3]))))


def tubular_jacobian_closed(beta: float, theta0: float) -> float:
    """sqrt(1 - sin^2 b sin^2 th): the tube-chart volume factor on the orbit (t = s = 0).

    Off the orbit the factor changes by -t times the turning rate of n_b,
    which is what :func:`tubular_jacobian` measures for t != 0.
    """
    sb, st = math.sin(beta), math.sin(theta0)
    return math.sqrt(1.0 - sb * sb * st * st)


def leading_order_factor(beta, theta0):
    """Both sides of the pointwise cancellation in the leading stationary-phase term.

    Returns (lhs, rhs) with
    lhs = 16 / (|xi(b)|^2 + 1)^4 * J / sqrt|det Hess|, J = sqrt(1 - sin^2 b sin^2 th),
    rhs = (1 - sin b sin th) / 2.
    Works on arrays; the collision case uses J = |cos b|.
    """
    beta = np.asarray(beta, dtype=float)
    theta0 = np.asarray(theta0, dtype=float)
    sb, cb, st, ct = np.sin(beta), np.cos(beta), np.sin(theta0), np.cos(theta0)
    d = 1.0 - sb * st
    xi2 = (cb**2 + sb**2 * ct**2) / d**2
    J = np.sqrt(np.maximum(1.0 - sb**2 * st**2, 0.0))
    root_det = 2.0 * d**3 * J
    lhs = 16.0 / (xi2 + 1.0) ** 4 * J / root_det
    return lhs, 0.5 * d


def xi_norm_identity(beta, theta0):
    """(|xi(b)|^2 + 1, 2 / (1 - sin th sin b)); equal on the critical curve."""
    beta = np.asarray(beta, dtype=float)
    theta0 = np.asarray(theta0, dtype=float)
    sb, cb, st, ct = np.sin(beta), np.cos(beta), np.sin(theta0), np.cos(theta0)
    d = 1.0 - sb * st
    return (cb**2 + sb**2 * ct**2) / d**2 + 1.0, 2.0 / d
