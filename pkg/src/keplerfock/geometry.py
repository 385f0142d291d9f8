"""Classical side: stereographic projection, the Moser map, Kepler flow.

Conventions
-----------
Phase points are pairs (x, xi) in T*(R^3 minus 0), sphere points are pairs
(u, eta) with u on S^3 and eta tangent at u. All functions broadcast over
leading axes, so ``x`` may have shape (..., 3) and ``u`` shape (..., 4).

The Kepler flow is never integrated as an ODE. A Kepler orbit of energy E is
the Moser preimage of a great circle s -> Re(alpha) cos s + Im(alpha) sin s,
run at the speed dt/ds = (1 - u4(s)) / p0**3.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    CollisionTimeError,
    ConfigError,
    ConvergenceError,
    DomainError,
    PreconditionError,
)

TWO_PI = 2.0 * math.pi
NORTH_POLE_TOL = 1e-12
COLLISION_TOL = 1e-10


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SemiclassicalScale:
    """The coupled semiclassical parameters.

    ``E = -1/(2 hbar^2 (N+1)^2)`` and ``p0 = sqrt(-2E)``, so that
    ``p0 * hbar * (N+1) = 1``. Use :meth:`from_energy` or :meth:`from_hbar`
    rather than the raw constructor.
    """

    N: int
    E: float
    p0: float
    hbar: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 0:
            raise PreconditionError(f"N must be a nonnegative integer, got {self.N}")
        if not self.E < 0:
            raise PreconditionError(f"energy must be negative, got {self.E}")
        if not (self.p0 > 0 and self.hbar > 0):
            raise PreconditionError("p0 and hbar must be positive")
        if abs(self.p0 - math.sqrt(-2.0 * self.E)) > 1e-12 * self.p0:
            raise PreconditionError("p0 != sqrt(-2E)")
        if abs(self.p0 * self.hbar * (self.N + 1) - 1.0) > 1e-12:
            raise PreconditionError("p0 * hbar * (N+1) != 1")

    @classmethod
    def from_energy(cls, E: float, N: int) -> "SemiclassicalScale":
        if not E < 0:
            raise PreconditionError(f"energy must be negative, got {E}")
        if N < 0:
            raise PreconditionError(f"N must be nonnegative, got {N}")
        p0 = math.sqrt(-2.0 * E)
        return cls(int(N), float(E), p0, 1.0 / (p0 * (N + 1)))

    @classmethod
    def from_hbar(cls, hbar: float, N: int) -> "SemiclassicalScale":
        if not hbar > 0:
            raise PreconditionError(f"hbar must be positive, got {hbar}")
        p0 = 1.0 / (hbar * (N + 1))
        return cls(int(N), -0.5 * p0 * p0, p0, float(hbar))

    def with_N(self, N: int) -> "SemiclassicalScale":
        """Same energy, different quantum number (hbar adjusts)."""
        return SemiclassicalScale.from_energy(self.E, N)

    @property
    def period(self) -> float:
        return TWO_PI / self.p0**3


@dataclass(frozen=True)
class PhasePoint:
    """A point (or array of points) of T*(R^3 minus 0)."""

    x: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        x = _frozen(self.x)
        xi = _frozen(self.xi)
        if x.shape[-1:] != (3,) or xi.shape[-1:] != (3,):
            raise PreconditionError("x and xi must have trailing dimension 3")
        if np.any(np.linalg.norm(x, axis=-1) == 0.0):
            raise DomainError("x = 0 is the Coulomb singularity")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xi", xi)


@dataclass(frozen=True)
class SpherePoint:
    """A point (or array of points) (u, eta) of T*S^3, eta tangent at u."""

    u: np.ndarray
    eta: np.ndarray
    tol: float = field(default=1e-9, repr=False, compare=False)

    def __post_init__(self):
        u = _frozen(self.u)
        eta = _frozen(self.eta)
        if u.shape[-1:] != (4,) or eta.shape[-1:] != (4,):
            raise PreconditionError("u and eta must have trailing dimension 4")
        if np.any(np.abs(np.linalg.norm(u, axis=-1) - 1.0) > self.tol):
            raise PreconditionError("u is not on the unit sphere")
        scale = np.maximum(1.0, np.linalg.norm(eta, axis=-1))
        if np.any(np.abs(np.sum(u * eta, axis=-1)) > self.tol * scale):
            raise PreconditionError("eta is not tangent at u")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "eta", eta)


_FRAME_RE = re.compile(r"^\s*([+-]?)e([1-4])\s*([+-])\s*i\s*e([1-4])\s*$")


@dataclass(frozen=True)
class AlphaFrame:
    """alpha = re + i*im with re, im orthonormal in R^4.

    The great circle generated by alpha is s -> re cos s + im sin s.
    """

    re: np.ndarray
    im: np.ndarray

    def __post_init__(self):
        r = _frozen(self.re)
        m = _frozen(self.im)
        if r.shape != (4,) or m.shape != (4,):
            raise PreconditionError("frame vectors must be real 4-vectors")
        if (
            abs(r @ r - 1.0) > 1e-12
            or abs(m @ m - 1.0) > 1e-12
            or abs(r @ m) > 1e-12
        ):
            raise PreconditionError("frame vectors must be orthonormal (tol 1e-12)")
        object.__setattr__(self, "re", r)
        object.__setattr__(self, "im", m)

    @property
    def alpha(self) -> np.ndarray:
        return self.re + 1j * self.im

    @classmethod
    def from_complex(cls, alpha) -> "AlphaFrame":
        alpha = np.asarray(alpha, dtype=complex)
        return cls(alpha.real, alpha.imag)

    @classmethod
    def standard(cls, theta0: float) -> "AlphaFrame":
        """e1 + i(cos(theta0) e2 + sin(theta0) e4)."""
        return cls([1.0, 0, 0, 0], [0.0, math.cos(theta0), 0.0, math.sin(theta0)])

    @classmethod
    def parse(cls, text: str) -> "AlphaFrame":
        """Parse strings like ``"e1+ie2"`` or ``"-e1-ie4"``."""
        m = _FRAME_RE.match(text)
        if not m:
            raise ConfigError(f"cannot parse frame {text!r}; expected e.g. 'e1+ie2'")
        s_re, a, s_im, b = m.groups()
        if a == b:
            raise ConfigError(f"frame {text!r} has parallel real and imaginary parts")
        r = np.zeros(4)
        i = np.zeros(4)
        r[int(a) - 1] = -1.0 if s_re == "-" else 1.0
        i[int(b) - 1] = -1.0 if s_im == "-" else 1.0
        return cls(r, i)

    @classmethod
    def random(cls, rng: np.random.Generator) -> "AlphaFrame":
        q, _ = np.linalg.qr(rng.standard_normal((4, 2)))
        return cls(q[:, 0], q[:, 1])

    def conj(self) -> "AlphaFrame":
        """The time-reversed frame (same plane, opposite orientation)."""
        return AlphaFrame(self.re, -self.im)

    def rotate_phase(self, theta: float) -> "AlphaFrame":
        """The frame e^{i theta} alpha (same oriented great circle)."""
        return AlphaFrame.from_complex(np.exp(1j * theta) * self.alpha)

    def transform(self, R: np.ndarray) -> "AlphaFrame":
        """Apply a 4x4 orthogonal matrix to both frame vectors."""
        return AlphaFrame(R @ self.re, R @ self.im)

    @property
    def is_collision(self) -> bool:
        return self.re[3] ** 2 + self.im[3] ** 2 >= 1.0 - COLLISION_TOL

    def projector(self) -> np.ndarray:
        return np.outer(self.re, self.re) + np.outer(self.im, self.im)

    def as_list(self):
        return [self.re.tolist(), self.im.tolist()]


@dataclass(frozen=True)
class KeplerOrbit:
    """The Kepler orbit of energy ``scale.E`` generated by ``frame``."""

    frame: AlphaFrame
    scale: SemiclassicalScale
    collision: bool = field(init=False)
    t_collision: float | None = field(init=False)

    def __post_init__(self):
        col = self.frame.is_collision
        object.__setattr__(self, "collision", col)
        object.__setattr__(
            self, "t_collision", collision_time(self.frame, self.scale) if col else None
        )

    @property
    def period(self) -> float:
        return self.scale.period


# ---------------------------------------------------------------------------
# Stereographic projection and the Moser map
# ---------------------------------------------------------------------------


def stereographic_inv(x) -> np.ndarray:
    """omega(x) = (2x, |x|^2 - 1) / (|x|^2 + 1), from R^3 onto S^3 minus the north pole."""
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x * x, axis=-1, keepdims=True)
    return np.concatenate([2.0 * x, r2 - 1.0], axis=-1) / (r2 + 1.0)


def stereographic_fwd(u) -> np.ndarray:
    """omega^{-1}(u) = u[:3] / (1 - u4)."""
    u = np.asarray(u, dtype=float)
    if np.any(np.abs(np.linalg.norm(u, axis=-1) - 1.0) > 1e-10):
        raise PreconditionError("u must be a unit 4-vector")
    if np.any(u[..., 3] >= 1.0 - NORTH_POLE_TOL):
        raise DomainError("stereographic projection is undefined at the north pole")
    return u[..., :3] / (1.0 - u[..., 3:4])


def moser_map(p: PhasePoint, scale: SemiclassicalScale) -> SpherePoint:
    """M_E(x, xi) = (omega(xi/p0), eta)."""
    x, xi, p0 = p.x, p.xi, scale.p0
    u = stereographic_inv(xi / p0)
    xdx = np.sum(x * xi, axis=-1, keepdims=True)
    xi2 = np.sum(xi * xi, axis=-1, keepdims=True)
    eta3 = -0.5 * x * (xi2 + p0 * p0) + xdx * xi
    eta4 = -p0 * xdx
    return SpherePoint(u, np.concatenate([eta3, eta4], axis=-1))


def moser_inv(s: SpherePoint, scale: SemiclassicalScale) -> PhasePoint:
    """Inverse of :func:`moser_map`; rejects the north pole."""
    u, eta, p0 = s.u, s.eta, scale.p0
    xi = p0 * stereographic_fwd(u)
    u4 = u[..., 3:4]
    x = (eta[..., :3] * (u4 - 1.0) - eta[..., 3:4] * u[..., :3]) / p0**2
    return PhasePoint(x, xi)


def hamiltonian(p: PhasePoint):
    """H = |xi|^2/2 - 1/|x|."""
    r = np.linalg.norm(p.x, axis=-1)
    if np.any(r < 1e-14):
        raise DomainError("|x| < 1e-14")
    return 0.5 * np.sum(p.xi * p.xi, axis=-1) - 1.0 / r


def aux_hamiltonians(p: PhasePoint, scale: SemiclassicalScale):
    """Return (F, G) with F = |x|^2 (|xi|^2 + p0^2)^2 / 8 and G = sqrt(2F) - 1."""
    r = np.linalg.norm(p.x, axis=-1)
    if np.any(r < 1e-14):
        raise DomainError("|x| < 1e-14")
    xi2 = np.sum(p.xi * p.xi, axis=-1)
    F = r * r * (xi2 + scale.p0**2) ** 2 / 8.0
    return F, np.sqrt(2.0 * F) - 1.0


def moser_jacobian(p: PhasePoint, scale: SemiclassicalScale, h: float = 1e-5) -> np.ndarray:
    """8x6 central-difference Jacobian of (x, xi) -> (u, eta) at a single point."""
    z0 = np.concatenate([p.x, p.xi]).astype(float)
    if z0.shape != (6,):
        raise PreconditionError("moser_jacobian takes a single phase point")
    J = np.empty((8, 6))
    for k in range(6):
        dz = np.zeros(6)
        dz[k] = h
        a = moser_map(PhasePoint((z0 + dz)[:3], (z0 + dz)[3:]), scale)
        b = moser_map(PhasePoint((z0 - dz)[:3], (z0 - dz)[3:]), scale)
        J[:, k] = (np.concatenate([a.u, a.eta]) - np.concatenate([b.u, b.eta])) / (2 * h)
    return J


def symplectic_matrix(n: int) -> np.ndarray:
    """Canonical [[0, I], [-I, 0]] in (position, momentum) ordering."""
    I = np.eye(n)
    Z = np.zeros((n, n))
    return np.block([[Z, I], [-I, Z]])


def symplectic_defect(p: PhasePoint, scale: SemiclassicalScale, h: float = 1e-5) -> float:
    """max |J^T Omega_8 J - p0 Omega_6| entrywise."""
    J = moser_jacobian(p, scale, h)
    D = J.T @ symplectic_matrix(4) @ J - scale.p0 * symplectic_matrix(3)
    return float(np.max(np.abs(D)))


# ---------------------------------------------------------------------------
# Great circles and the time change
# ---------------------------------------------------------------------------


def great_circle(frame: AlphaFrame, s) -> SpherePoint:
    """Unit-speed great circle and its velocity at parameter s."""
    s = np.asarray(s, dtype=float)[..., None]
    c, sn = np.cos(s), np.sin(s)
    return SpherePoint(frame.re * c + frame.im * sn, -frame.re * sn + frame.im * c)


def _tau(frame: AlphaFrame, s):
    # p0**3 * t(s)
    r4, i4 = frame.re[3], frame.im[3]
    return s - r4 * np.sin(s) + i4 * (np.cos(s) - 1.0)


def time_change(frame: AlphaFrame, s, scale: SemiclassicalScale):
    """t(s) = [s - re4 sin s + im4 (cos s - 1)] / p0^3."""
    return _tau(frame, np.asarray(s, dtype=float)) / scale.p0**3


def invert_time(frame: AlphaFrame, t, scale: SemiclassicalScale, maxiter: int = 200):
    """Solve time_change(frame, s) = t for s in [0, 2 pi].

    Safeguarded Newton: a Newton step is taken when it stays inside the
    current bracket, otherwise the bracket is bisected.
    """
    t = np.asarray(t, dtype=float)
    c = scale.p0**3
    tau = t * c
    if np.any(tau < -1e-12) or np.any(tau > TWO_PI + 1e-12):
        raise PreconditionError("t must lie within one period [0, 2 pi / p0^3]")
    tau = np.clip(tau, 0.0, TWO_PI)
    r4, i4 = frame.re[3], frame.im[3]
    lo = np.zeros_like(tau)
    hi = np.full_like(tau, TWO_PI)
    s = tau.copy()
    for _ in range(maxiter):
        f = _tau(frame, s) - tau
        done = np.abs(f) <= 1e-14 * max(1.0, TWO_PI)
        if np.all(done | (hi - lo <= 4e-16 * TWO_PI)):
            return s
        lo = np.where(f < 0, s, lo)
        hi = np.where(f > 0, s, hi)
        d = 1.0 - (r4 * np.cos(s) + i4 * np.sin(s))
        with np.errstate(divide="ignore", invalid="ignore"):
            s_new = s - f / d
        bad = ~np.isfinite(s_new) | (s_new <= lo) | (s_new >= hi)
        s = np.where(done, s, np.where(bad, 0.5 * (lo + hi), s_new))
    f = _tau(frame, s) - tau
    raise ConvergenceError("time inversion did not converge", float(np.max(np.abs(f))) / c)


def collision_parameter(frame: AlphaFrame) -> float:
    """s_phi in (0, 2 pi] where the great circle passes the north pole."""
    if not frame.is_collision:
        raise PreconditionError("frame does not generate a collision orbit")
    s = math.atan2(frame.im[3], frame.re[3]) % TWO_PI
    return TWO_PI if s == 0.0 else s


def collision_time(frame: AlphaFrame, scale: SemiclassicalScale) -> float:
    """t_gamma = t(s_phi) for a collision orbit."""
    return float(time_change(frame, collision_parameter(frame), scale))


def _wrapped_distance(a, b, period):
    return np.abs((a - b + 0.5 * period) % period - 0.5 * period)


def kepler_state(orbit: KeplerOrbit, t) -> PhasePoint:
    """Phase point of the Kepler orbit at time t (any real t, broadcasts)."""
    P = orbit.period
    t = np.asarray(t, dtype=float)
    if orbit.collision:
        near = _wrapped_distance(t, orbit.t_collision, P) <= 1e-12 * P
        if np.any(near):
            raise CollisionTimeError("the Kepler flow is undefined at the collision time")
    tm = np.mod(t, P)
    s = invert_time(orbit.frame, tm, orbit.scale)
    try:
        return moser_inv(great_circle(orbit.frame, s), orbit.scale)
    except DomainError as exc:
        raise CollisionTimeError("time too close to the collision instant") from exc


def orbit_average(
    a: Callable,
    orbit: KeplerOrbit,
    rtol: float = 1e-8,
    atol: float = 1e-13,
    n0: int = 128,
    max_nodes: int = 1 << 18,
):
    """Time average of a(x, xi) over one period of the orbit.

    Computed in the great-circle parameter as
    (1/2pi) * int_0^{2pi} a(gamma(t(s))) (1 - u4(s)) ds
    with the periodic trapezoid rule, doubling until two consecutive
    refinements agree. For collision orbits the integrand is set to zero at
    the north-pole parameter, so the result is the average over the window
    (t_gamma - period, t_gamma).
    """
    frame, scale = orbit.frame, orbit.scale

    def integrand(s):
        gc = great_circle(frame, s)
        w = 1.0 - gc.u[..., 3]
        ok = w > NORTH_POLE_TOL
        out = np.zeros(s.shape, dtype=complex)
        if np.any(ok):
            sp = SpherePoint(gc.u[ok], gc.eta[ok])
            p = moser_inv(sp, scale)
            out[ok] = np.asarray(a(p.x, p.xi)) * w[ok]
        return out

    n = n0
    total = np.sum(integrand(TWO_PI * np.arange(n) / n))
    estimates = [total / n]
    while n < max_nodes:
        mids = TWO_PI * (np.arange(n) + 0.5) / n
        total = total + np.sum(integrand(mids))
        n *= 2
        estimates.append(total / n)
        if len(estimates) >= 3:
            d1 = abs(estimates[-1] - estimates[-2])
            d2 = abs(estimates[-2] - estimates[-3])
            tol = max(rtol * abs(estimates[-1]), atol)
            if d1 <= tol and d2 <= max(tol, 1e3 * tol):
                val = estimates[-1]
                return float(val.real) if val.imag == 0 else complex(val)
    raise ConvergenceError(
        "orbit average did not converge", float(abs(estimates[-1] - estimates[-2]))
    )
