"""Phase-space symbols a(x, xi) and a palette of smooth compactly supported ones.

A SymbolSpec is a sum of separable terms f_k(x) g_k(xi) (either factor may
be absent, meaning 1), or a general callable a(x, xi). The kind is derived:

    momentum   - every term has f = 1
    position   - every term has g = 1
    separable  - a mix
    general    - a non-separable callable

Support metadata is a (center, radius) ball outside of which the symbol is
exactly zero; palette symbols guarantee it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, PreconditionError

Ball = Optional[tuple]  # (center 3-vector, radius)


def bump(s):
    """exp(1 - 1/(1 - s^2)) on |s| < 1, zero elsewhere; equals 1 at s = 0."""
    s = np.asarray(s, dtype=float)
    out = np.zeros(s.shape)
    m = np.abs(s) < 1.0
    out[m] = np.exp(1.0 - 1.0 / (1.0 - s[m] ** 2))
    return out


def _psi(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape)
    m = t > 0
    out[m] = np.exp(-1.0 / t[m])
    return out


def plateau(r, r1: float, r2: float):
    """Smooth step: 1 for r <= r1, 0 for r >= r2."""
    t = (np.asarray(r, dtype=float) - r1) / (r2 - r1)
    a = _psi(1.0 - t)
    return a / (a + _psi(t))


def _norm(v):
    return np.linalg.norm(np.asarray(v, dtype=float), axis=-1)


@dataclass(frozen=True)
class SymbolSpec:
    terms: tuple = ()
    general: Optional[Callable] = None
    x_support: Ball = None
    xi_support: Ball = None
    radial: Optional[Callable] = None
    name: str = "symbol"
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.general is None and not self.terms:
            raise PreconditionError("a symbol needs terms or a general evaluator")
        if self.general is not None and self.terms:
            raise PreconditionError("give either separable terms or a general evaluator")

    @property
    def kind(self) -> str:
        if self.general is not None:
            return "general"
        if all(f is None for f, _ in self.terms):
            return "momentum"
        if all(g is None for _, g in self.terms):
            return "position"
        return "separable"

    def __call__(self, x, xi):
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        if self.general is not None:
            return self.general(x, xi)
        shape = np.broadcast_shapes(x.shape[:-1], xi.shape[:-1])
        out = np.zeros(shape, dtype=complex)
        for f, g in self.terms:
            fv = 1.0 if f is None else f(x)
            gv = 1.0 if g is None else g(xi)
            out = out + fv * gv
        if not np.iscomplexobj(out) or not np.any(out.imag):
            return out.real
        return out

    def momentum_part(self, xi):
        """Evaluate sum_k g_k(xi) for a momentum-only symbol."""
        if self.kind != "momentum":
            raise PreconditionError("not a momentum-only symbol")
        return self(np.ones(3), xi)

    def position_part(self, x):
        if self.kind != "position":
            raise PreconditionError("not a position-only symbol")
        return self(x, np.zeros(3))

    def conj(self) -> "SymbolSpec":
        def c(h):
            return None if h is None else (lambda z: np.conj(h(z)))

        if self.general is not None:
            gen = self.general
            return SymbolSpec(general=lambda x, xi: np.conj(gen(x, xi)),
                              x_support=self.x_support, xi_support=self.xi_support,
                              name=f"conj({self.name})")
        rad = self.radial
        return SymbolSpec(
            tuple((c(f), c(g)) for f, g in self.terms),
            x_support=self.x_support, xi_support=self.xi_support,
            radial=None if rad is None else (lambda r: np.conj(rad(r))),
            name=f"conj({self.name})",
        )

    def __add__(self, other: "SymbolSpec") -> "SymbolSpec":
        if self.general is not None or other.general is not None:
            a, b = self, other
            return SymbolSpec(general=lambda x, xi: a(x, xi) + b(x, xi),
                              x_support=_union(a.x_support, b.x_support),
                              xi_support=_union(a.xi_support, b.xi_support),
                              name=f"{a.name}+{b.name}")
        radial = None
        if self.radial is not None and other.radial is not None:
            ra, rb = self.radial, other.radial
            radial = lambda r: ra(r) + rb(r)  # noqa: E731
        return SymbolSpec(
            self.terms + other.terms,
            x_support=_union(self.x_support, other.x_support),
            xi_support=_union(self.xi_support, other.xi_support),
            radial=radial,
            name=f"{self.name}+{other.name}",
        )

    def times_position(self, f: Callable, x_support: Ball = None) -> "SymbolSpec":
        """Multiply every term by a position factor f(x) (e.g. a cutoff)."""
        if self.general is not None:
            gen = self.general
            return SymbolSpec(general=lambda x, xi: f(x) * gen(x, xi),
                              x_support=x_support, xi_support=self.xi_support,
                              name=f"{self.name}*cut")
        terms = []
        for fk, gk in self.terms:
            if fk is None:
                terms.append((f, gk))
            else:
                terms.append(((lambda x, fk=fk: f(x) * fk(x)), gk))
        return SymbolSpec(tuple(terms), x_support=x_support, xi_support=self.xi_support,
                          name=f"{self.name}*cut")

    def as_general(self) -> "SymbolSpec":
        """The same function wrapped as a general symbol (forces the Monte Carlo path)."""
        me = self
        return SymbolSpec(general=lambda x, xi: me(x, xi), x_support=self.x_support,
                          xi_support=self.xi_support, name=self.name)


def _union(a: Ball, b: Ball) -> Ball:
    if a is None or b is None:
        return None
    ca, ra = np.asarray(a[0], float), a[1]
    cb, rb = np.asarray(b[0], float), b[1]
    c = 0.5 * (ca + cb)
    return (c, max(np.linalg.norm(ca - c) + ra, np.linalg.norm(cb - c) + rb))


# ---------------------------------------------------------------------------
# Palette
# ---------------------------------------------------------------------------


def shell_bump(center: float, width: float) -> SymbolSpec:
    """Radial momentum bump g(xi) = bump((|xi|^2 - center^2) / width^2).

    Depends on |xi|^2, so it is smooth at xi = 0 even when the support
    contains the origin. Peak value 1 on the sphere |xi| = center.
    """
    c2, w2 = center * center, width * width

    def prof(r):
        return bump((np.asarray(r, float) ** 2 - c2) / w2)

    def g(xi):
        return bump((np.sum(np.asarray(xi, float) ** 2, axis=-1) - c2) / w2)

    return SymbolSpec(((None, g),), xi_support=(np.zeros(3), math.sqrt(c2 + w2)),
                      radial=prof, name="radial-bump",
                      params={"center": center, "width": width})


def radial_momentum_bump(center: float, width: float) -> SymbolSpec:
    """g(xi) = bump((|xi| - center) / width); smooth if width < center."""

    def prof(r):
        return bump((np.asarray(r, float) - center) / width)

    def g(xi):
        return prof(_norm(xi))

    return SymbolSpec(((None, g),), xi_support=(np.zeros(3), center + width),
                      radial=prof, name="radial-abs-bump",
                      params={"center": center, "width": width})


def momentum_bump(center, width: float) -> SymbolSpec:
    c = np.asarray(center, dtype=float)

    def g(xi):
        return bump(_norm(np.asarray(xi, float) - c) / width)

    return SymbolSpec(((None, g),), xi_support=(c, width), name="momentum-bump",
                      params={"center": c.tolist(), "width": width})


def position_bump(center, width: float) -> SymbolSpec:
    c = np.asarray(center, dtype=float)

    def f(x):
        return bump(_norm(np.asarray(x, float) - c) / width)

    return SymbolSpec(((f, None),), x_support=(c, width), name="position-bump",
                      params={"center": c.tolist(), "width": width})


def momentum_plateau(radius: float, outer: float | None = None) -> SymbolSpec:
    """Equal to 1 on |xi| <= radius, smoothly 0 beyond ``outer``."""
    outer = 1.5 * radius if outer is None else outer

    def prof(r):
        return plateau(r, radius, outer)

    def g(xi):
        return prof(_norm(xi))

    return SymbolSpec(((None, g),), xi_support=(np.zeros(3), outer), radial=prof,
                      name="momentum-plateau", params={"radius": radius, "outer": outer})


def position_plateau(radius: float, outer: float | None = None) -> SymbolSpec:
    outer = 1.5 * radius if outer is None else outer

    def f(x):
        return plateau(_norm(x), radius, outer)

    return SymbolSpec(((f, None),), x_support=(np.zeros(3), outer),
                      name="position-plateau", params={"radius": radius, "outer": outer})


def position_cutoff(radius: float, outer: float | None = None) -> Callable:
    """The bare plateau function x -> chi(|x|), for use with SymbolSpec.times_position."""
    outer = 1.5 * radius if outer is None else outer
    return lambda x: plateau(_norm(x), radius, outer)


def angular_bump(direction, width: float, r_in: float, r_out: float) -> SymbolSpec:
    """Bump in the angle between xi and ``direction``, windowed to r_in < |xi| < r_out."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    mid, half = 0.5 * (r_in + r_out), 0.5 * (r_out - r_in)

    def g(xi):
        xi = np.asarray(xi, dtype=float)
        r = _norm(xi)
        with np.errstate(invalid="ignore", divide="ignore"):
            cosang = np.clip(np.sum(xi * d, axis=-1) / r, -1.0, 1.0)
        ang = np.where(r > 0, np.arccos(cosang), math.pi)
        return bump(ang / width) * bump((r - mid) / half)

    return SymbolSpec(((None, g),), xi_support=(np.zeros(3), r_out), name="angular-bump",
                      params={"direction": d.tolist(), "width": width,
                              "r_in": r_in, "r_out": r_out})


def tube_bump(orbit, radius: float, n_samples: int = 720) -> SymbolSpec:
    """Position bump of the distance to a Kepler orbit's trajectory.

    The trajectory is sampled uniformly in the great-circle parameter; the
    radius should be below the orbit's radius of curvature.
    """
    from .geometry import great_circle, moser_inv  # local: avoid a cycle at import

    s = 2.0 * math.pi * np.arange(n_samples) / n_samples
    gc = great_circle(orbit.frame, s)
    keep = gc.u[:, 3] < 1.0 - 1e-9
    pts = moser_inv(type(gc)(gc.u[keep], gc.eta[keep]), orbit.scale).x

    def f(x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, 3)
        d = np.empty(len(flat))
        for i in range(0, len(flat), 4096):
            blk = flat[i:i + 4096]
            d2 = (np.sum(blk**2, 1)[:, None] - 2 * blk @ pts.T + np.sum(pts**2, 1)[None, :])
            d[i:i + 4096] = np.sqrt(np.maximum(d2.min(axis=1), 0.0))
        return bump(d / radius).reshape(x.shape[:-1])

    c = 0.5 * (pts.max(0) + pts.min(0))
    R = float(np.max(np.linalg.norm(pts - c, axis=1))) + radius
    return SymbolSpec(((f, None),), x_support=(c, R), name="tube-bump",
                      params={"radius": radius})


def off_orbit_bump(p0: float = 1.0) -> SymbolSpec:
    """Control symbol: shell bump centred on |xi| = 3 p0, far from circular orbits."""
    return shell_bump(3.0 * p0, 2.0 * p0)


def x_component(k: int, radius: float) -> SymbolSpec:
    """x_k times a plateau cutoff at ``radius`` (position moment)."""

    def f(x):
        x = np.asarray(x, dtype=float)
        return x[..., k] * plateau(_norm(x), radius, 1.5 * radius)

    return SymbolSpec(((f, None),), x_support=(np.zeros(3), 1.5 * radius),
                      name=f"x{k + 1}", params={"k": k, "radius": radius})


PALETTE = {
    "radial-bump": lambda p0=1.0, center=None, width=None: shell_bump(
        p0 if center is None else center, 2.0 * p0 if width is None else width),
    "momentum-bump": lambda p0=1.0, center=(1.0, 0.0, 0.0), width=0.5: momentum_bump(
        np.asarray(center) * p0, width * p0),
    "position-bump": lambda p0=1.0, center=(1.0, 0.0, 0.0), width=0.5: position_bump(
        np.asarray(center) / p0**2, width / p0**2),
    "angular-bump": lambda p0=1.0, direction=(1.0, 0.0, 0.0), width=0.6: angular_bump(
        direction, width, 0.2 * p0, 4.0 * p0),
    "off-orbit-bump": lambda p0=1.0: off_orbit_bump(p0),
    "constant": lambda p0=1.0, radius=6.0: momentum_plateau(radius * p0),
}


def from_config(kind: str, params: dict | None = None, p0: float = 1.0, orbit=None) -> SymbolSpec:
    """Build a palette symbol from a CLI/config description."""
    params = dict(params or {})
    if kind == "tube-bump":
        if orbit is None:
            raise ConfigError("tube-bump needs an orbit")
        return tube_bump(orbit, params.get("radius", 0.3) / p0**2)
    if kind not in PALETTE:
        raise ConfigError(f"unknown symbol kind {kind!r}; choose from "
                          f"{sorted(PALETTE) + ['tube-bump']}")
    try:
        return PALETTE[kind](p0=p0, **params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for symbol {kind!r}: {exc}") from exc
