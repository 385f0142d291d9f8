"""Convergence studies and report emission.

Studies return a ConvergenceRecord; :func:`write_csv` and
:func:`write_summary` turn records into plot-ready CSV and a JSON summary.
"""

from __future__ import annotations

import csv
import json
import math
import platform
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy

from . import __version__
from .errors import PreconditionError
from .geometry import (
    AlphaFrame,
    KeplerOrbit,
    PhasePoint,
    SemiclassicalScale,
    kepler_state,
    moser_inv,
    moser_map,
    orbit_average,
    symplectic_defect,
)
from .quantize import matrix_element
from .states import MomentumState, momentum_norm, sphere_norm
from .stationary import check_stationarity, critical_point, hessian_numeric, leading_order_factor
from .symbols import SymbolSpec, shell_bump

N_CAP = 64


def same_geodesic(a: AlphaFrame, b: AlphaFrame, tol: float = 1e-10) -> bool:
    """True if the frames span the same oriented 2-plane (a phase change apart)."""
    if np.linalg.norm(a.projector() - b.projector(), 2) >= tol:
        return False
    # coordinates of (Re b, Im b) in the orthonormal basis (Re a, Im a)
    M = np.array([[b.re @ a.re, b.re @ a.im], [b.im @ a.re, b.im @ a.im]])
    return float(np.linalg.det(M)) > 0


@dataclass(frozen=True)
class GeodesicMeasure:
    """Finite convex combination sum_j c_j delta_{gamma_j} of distinct oriented orbits."""

    entries: tuple

    def __post_init__(self):
        entries = tuple((float(c), f) for c, f in self.entries)
        if not entries:
            raise PreconditionError("a geodesic measure needs at least one entry")
        weights = [c for c, _ in entries]
        if any(not (0.0 < c <= 1.0) for c in weights):
            raise PreconditionError("weights must lie in (0, 1]")
        if abs(math.fsum(weights) - 1.0) > 1e-12:
            raise PreconditionError("weights must sum to 1")
        for i in range(len(entries)):
            for j in range(i + 1, len(entries)):
                if same_geodesic(entries[i][1], entries[j][1]):
                    raise PreconditionError(f"entries {i} and {j} generate the same geodesic")
        object.__setattr__(self, "entries", entries)

    @property
    def weights(self):
        return [c for c, _ in self.entries]

    @property
    def frames(self):
        return [f for _, f in self.entries]


@dataclass
class ConvergenceRecord:
    N: list
    measured: list
    predicted: Optional[float] = None
    error_estimates: list = field(default_factory=list)
    rate: Optional[float] = None
    label: str = ""
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.N) != len(self.measured):
            raise ValueError("N and measured must have equal length")
        if self.error_estimates and len(self.error_estimates) != len(self.N):
            raise ValueError("error_estimates must match N")

    @property
    def errors(self):
        if self.predicted is None:
            return [abs(m) for m in self.measured]
        return [abs(m - self.predicted) for m in self.measured]

    @property
    def ratios(self):
        """|m(N_{k+1})| / |m(N_k)|; 0/0 counts as 0 (an identically vanishing element)."""
        mags = [abs(m) for m in self.measured]
        return [b / a if a > 0 else (0.0 if b == 0 else math.inf) for a, b in zip(mags, mags[1:])]

    def rows(self):
        errs = self.errors
        est = self.error_estimates or [math.nan] * len(self.N)
        pred = math.nan if self.predicted is None else self.predicted
        for n, m, e, s in zip(self.N, self.measured, errs, est):
            yield [n, complex(m).real, complex(m).imag, pred, e, s]

    def as_dict(self) -> dict:
        return {
            "label": self.label,
            "N": list(self.N),
            "value_re": [complex(m).real for m in self.measured],
            "value_im": [complex(m).imag for m in self.measured],
            "predicted": self.predicted,
            "errors": self.errors,
            "error_estimates": list(self.error_estimates),
            "rate": self.rate,
            "extra": self.extra,
        }


CSV_HEADER = ["N", "value", "value_im", "predicted", "error", "error_estimate"]


def fit_rate(N: Sequence[float], errors: Sequence[float], last: int = 3) -> float:
    """Exponent p in error ~ C N^-p, least squares on log-log over the largest ``last`` N."""
    pairs = sorted(zip(N, errors))[-last:]
    if len(pairs) < 2 or any(e <= 0 for _, e in pairs):
        raise PreconditionError("need at least two positive errors to fit a rate")
    x = np.log([n for n, _ in pairs])
    y = np.log([e for _, e in pairs])
    slope = np.polyfit(x, y, 1)[0]
    return float(-slope)


def _check_budget(N_list, allow_large):
    if not N_list:
        raise PreconditionError("N list is empty")
    if any(int(n) != n or n < 0 for n in N_list):
        raise PreconditionError("N values must be nonnegative integers")
    if max(N_list) > N_CAP:
        if not allow_large:
            raise PreconditionError(f"N above {N_CAP} needs allow_large=True")
        warnings.warn(f"N = {max(N_list)} exceeds {N_CAP}; quadrature cost grows with N",
                      stacklevel=3)


def radon_transform(a, frame: AlphaFrame, scale: SemiclassicalScale, **kwargs):
    """Average of a over one period of the orbit of ``frame`` (truncated window for collisions)."""
    return orbit_average(a, KeplerOrbit(frame, scale), **kwargs)


def theorem1_study(frame: AlphaFrame, a: SymbolSpec, N_list, E: float = -0.5,
                   method: str = "auto", allow_large: bool = False, **kwargs) -> ConvergenceRecord:
    """Diagonal matrix elements at fixed energy E against the orbit average."""
    _check_budget(N_list, allow_large)
    pred = radon_transform(a, frame, SemiclassicalScale.from_energy(E, max(N_list)))
    vals, ests = [], []
    for N in N_list:
        st = MomentumState(frame, SemiclassicalScale.from_energy(E, int(N)))
        r = matrix_element(a, st, st, method, **kwargs)
        vals.append(complex(r.value))
        ests.append(float(r.error_estimate))
    rec = ConvergenceRecord(list(N_list), vals, pred, ests, label="theorem1")
    rec.extra["frame"] = frame.as_list()
    errs = rec.errors
    if len(N_list) >= 2 and all(e > 0 for e in errs):
        rec.rate = fit_rate(N_list, errs)
    return rec


def cross_decay_study(alpha: AlphaFrame, beta: AlphaFrame, a: SymbolSpec, N_list,
                      E: float = -0.5, method: str = "auto", allow_large: bool = False,
                      **kwargs) -> ConvergenceRecord:
    """|<Op(a) Psi_alpha, Psi_beta>| over N for frames on distinct geodesics."""
    if same_geodesic(alpha, beta):
        raise PreconditionError("alpha and beta generate the same geodesic")
    _check_budget(N_list, allow_large)
    vals, ests = [], []
    for N in N_list:
        sc = SemiclassicalScale.from_energy(E, int(N))
        r = matrix_element(a, MomentumState(alpha, sc), MomentumState(beta, sc), method, **kwargs)
        vals.append(complex(r.value))
        ests.append(float(r.error_estimate))
    rec = ConvergenceRecord(list(N_list), vals, None, ests, label="cross")
    ratios = rec.ratios
    rec.extra["ratios"] = ratios
    rec.extra["superpolynomial"] = bool(len(ratios) >= 2 and all(
        r2 < r1 or r2 == 0.0 for r1, r2 in zip(ratios, ratios[1:])))
    return rec


def mixed_measure_study(m: GeodesicMeasure, a: SymbolSpec, N_list, E: float = -0.5,
                        method: str = "auto", allow_large: bool = False,
                        **kwargs) -> ConvergenceRecord:
    """<Op(a) Psi, Psi> for Psi = sum_j sqrt(c_j) Psi_{alpha_j}, against sum_j c_j a-bar(gamma_j)."""
    _check_budget(N_list, allow_large)
    ref = SemiclassicalScale.from_energy(E, max(N_list))
    bars = [radon_transform(a, f, ref) for f in m.frames]
    pred = math.fsum(c * b for c, b in zip(m.weights, bars))
    w = m.weights
    vals, ests, cross = [], [], []
    for N in N_list:
        sc = SemiclassicalScale.from_energy(E, int(N))
        states = [MomentumState(f, sc) for f in m.frames]
        total, err, cr = 0j, 0.0, {}
        for j, sj in enumerate(states):
            for k, sk in enumerate(states):
                r = matrix_element(a, sj, sk, method, **kwargs)
                coef = w[j] if j == k else math.sqrt(w[j] * w[k])
                total += coef * complex(r.value)
                err += coef * float(r.error_estimate)
                if j != k:
                    cr[f"{j},{k}"] = [complex(r.value).real, complex(r.value).imag]
        vals.append(total)
        ests.append(err)
        cross.append(cr)
    rec = ConvergenceRecord(list(N_list), vals, pred, ests, label="mixed")
    rec.extra.update(weights=w, radon=bars, cross_terms=cross,
                     frames=[f.as_list() for f in m.frames])
    return rec


def monotone_violations(rec: ConvergenceRecord, N_min: int = 16) -> list:
    """Error increases for N >= N_min; one increase below twice its error estimate is tolerated."""
    errs, est = rec.errors, rec.error_estimates or [0.0] * len(rec.N)
    idx = [i for i, n in enumerate(rec.N) if n >= N_min]
    bad, soft = [], 0
    for i, j in zip(idx, idx[1:]):
        rise = errs[j] - errs[i]
        if rise > 0:
            if rise < 2 * max(est[i], est[j]) and soft == 0:
                soft += 1
                continue
            bad.append(f"error rises from N={rec.N[i]} to N={rec.N[j]} by {rise:.3g}")
    return bad


# ---------------------------------------------------------------------------
# Report emission
# ---------------------------------------------------------------------------


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path, header, rows) -> Path:
    """CSV with a header row, floats at 17 significant digits, LF line endings."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def versions() -> dict:
    return {"keplerfock": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return None if not math.isfinite(obj) else float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_summary(path, config: dict, results: list, invariant_failures: list) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"config": config, "results": results, "invariant_failures": invariant_failures,
           "versions": versions()}
    path.write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")
    return path


# ---------------------------------------------------------------------------
# Quick property suite
# ---------------------------------------------------------------------------


def _inv_symplectic(rng):
    sc = SemiclassicalScale.from_energy(-0.5, 10)
    worst = 0.0
    for _ in range(20):
        p = PhasePoint(rng.uniform(0.3, 2.0, 3) * rng.choice([-1, 1], 3), rng.normal(size=3))
        worst = max(worst, symplectic_defect(p, sc))
    return worst < 1e-8, f"max |J^T Omega J - p0 Omega| = {worst:.2e}"


def _inv_energy_roundtrip(rng):
    sc = SemiclassicalScale.from_energy(-0.5, 10)
    frames = [AlphaFrame.random(rng) for _ in range(5)]
    worst_eta, worst_rt = 0.0, 0.0
    for f in frames:
        orb = KeplerOrbit(f, sc)
        ts = rng.uniform(0, orb.period, 20)
        if orb.collision:
            ts = ts[np.abs(ts - orb.t_collision) > 1e-3]
        p = kepler_state(orb, ts)
        s = moser_map(p, sc)
        worst_eta = max(worst_eta, float(np.max(np.abs(np.linalg.norm(s.eta, axis=-1) - 1.0))))
        q = moser_inv(s, sc)
        worst_rt = max(worst_rt, float(np.max(np.abs(q.x - p.x))), float(np.max(np.abs(q.xi - p.xi))))
    ok = worst_eta < 1e-10 and worst_rt < 1e-10
    return ok, f"| |eta| - 1 | = {worst_eta:.2e}, round trip {worst_rt:.2e}"


def _inv_norms(rng):
    worst = 0.0
    for N in (0, 3, 8):
        st = MomentumState(AlphaFrame.random(rng), SemiclassicalScale.from_energy(-0.5, N))
        worst = max(worst, abs(sphere_norm(st.spherical) - 1.0), abs(momentum_norm(st) - 1.0))
    return worst < 1e-6, f"max norm defect {worst:.2e}"


def _inv_stationarity(rng):
    worst_g, worst_i = 0.0, 0.0
    for _ in range(10):
        th, b = rng.uniform(0, 2 * math.pi, 2)
        if 1 - math.sin(th) * math.sin(b) < 1e-3:
            continue
        r = check_stationarity(critical_point(b, th))
        worst_g, worst_i = max(worst_g, r.grad_norm), max(worst_i, abs(r.im_P))
    return worst_g < 1e-6 and worst_i < 1e-10, f"|grad P| <= {worst_g:.2e}, |Im P| <= {worst_i:.2e}"


def _inv_hessian(rng):
    worst = 0.0
    for th, b in [(0.0, 0.4), (math.pi / 4, math.pi / 3), (math.pi / 2 - 0.1, 1.0),
                  (math.pi / 2, 0.3)]:
        worst = max(worst, hessian_numeric(b, th).rel_error)
    return worst < 1e-4, f"max relative determinant error {worst:.2e}"


def _inv_leading(rng):
    b = rng.uniform(0, 2 * math.pi, 100)
    th = rng.uniform(0, 2 * math.pi, 100)
    keep = 1 - np.sin(b) * np.sin(th) > 1e-3
    lhs, rhs = leading_order_factor(b[keep], th[keep])
    worst = float(np.max(np.abs(lhs - rhs)))
    return worst < 1e-12, f"max |lhs - rhs| = {worst:.2e}"


def _inv_mixed_prediction(rng):
    a = shell_bump(1.0, 2.0)
    f1, f2 = AlphaFrame.parse("e1+ie2"), AlphaFrame.standard(0.5).transform(
        np.array([[0, 0, 1, 0], [0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1.0]]))
    sc = SemiclassicalScale.from_energy(-0.5, 4)
    lin = 0.3 * radon_transform(a, f1, sc) + 0.7 * radon_transform(a, f2, sc)
    rec = mixed_measure_study(GeodesicMeasure(((0.3, f1), (0.7, f2))), a, [4])
    d = abs(rec.predicted - lin)
    return d < 1e-12, f"|predicted - linear combination| = {d:.2e}"


INVARIANTS = {
    "symplectic pullback": _inv_symplectic,
    "energy surface and round trip": _inv_energy_roundtrip,
    "unit norms": _inv_norms,
    "stationarity on the critical curve": _inv_stationarity,
    "hessian determinant": _inv_hessian,
    "leading-order identity": _inv_leading,
    "mixed prediction linearity": _inv_mixed_prediction,
}


def run_invariants(seed: int = 0) -> list:
    """Run the quick property suite; returns [(name, passed, detail)]."""
    out = []
    for name, fn in INVARIANTS.items():
        ok, detail = fn(np.random.default_rng(seed))
        out.append((name, bool(ok), detail))
    return out
