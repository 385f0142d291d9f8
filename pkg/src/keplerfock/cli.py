"""Command-line front end: ``keplerfock <subcommand> [flags]``.

Every subcommand accepts ``--config FILE`` (JSON with keys frame, E, N_list,
symbol, method, tolerances, seed, output_dir) and writes
``<subcommand>.csv`` plus ``<subcommand>.json`` to the output directory.
Flags override config values.

Wall-clock times go to the JSON only, so equal inputs give identical CSV.
Exit status: 0 success, 1 invariant failures, 2 bad configuration,
3 precondition violation, 4 numerical nonconvergence.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, ConvergenceError, PreconditionError
from .experiments import (
    CSV_HEADER,
    GeodesicMeasure,
    cross_decay_study,
    mixed_measure_study,
    monotone_violations,
    radon_transform,
    run_invariants,
    theorem1_study,
    write_csv,
    write_summary,
)
from .geometry import AlphaFrame, KeplerOrbit, SemiclassicalScale, hamiltonian, kepler_state
from .quantize import matrix_element
from .states import MomentumState, hydrogen_residual, momentum_norm, sphere_norm, to_position_grid
from .stationary import hessian_numeric, is_collision_angle
from .symbols import from_config

EXIT_INVARIANT, EXIT_CONFIG, EXIT_PRECONDITION, EXIT_CONVERGENCE = 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def parse_frame(value) -> AlphaFrame:
    """'e1+ie2', a JSON string '[[re4], [im4]]', or a [re4, im4] list."""
    if isinstance(value, AlphaFrame):
        return value
    if isinstance(value, str):
        text = value.strip()
        if not text.startswith("["):
            return AlphaFrame.parse(text)
        try:
            value = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"cannot parse frame {value!r}") from exc
    try:
        re, im = value
        return AlphaFrame(np.asarray(re, dtype=float), np.asarray(im, dtype=float))
    except PreconditionError as exc:
        raise ConfigError(f"invalid frame {value!r}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"frame must be [re4, im4], got {value!r}") from exc


def parse_int_list(text) -> list:
    if isinstance(text, (list, tuple)):
        vals = list(text)
    else:
        vals = [t for t in str(text).split(",") if t.strip()]
    try:
        return [int(v) for v in vals]
    except ValueError as exc:
        raise ConfigError(f"expected a comma-separated list of integers, got {text!r}") from exc


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    known = {"frame", "E", "N_list", "symbol", "method", "tolerances", "seed", "output_dir"}
    extra = set(cfg) - known
    if extra:
        raise ConfigError(f"unknown config keys {sorted(extra)}")
    return cfg


def _merge(args) -> dict:
    """Config file values overridden by explicitly given flags."""
    cfg = _load_config(args.config)
    out = {
        "frame": cfg.get("frame", "e1+ie2"),
        "E": float(cfg.get("E", -0.5)),
        "N_list": cfg.get("N_list", [8, 16, 32]),
        "symbol": cfg.get("symbol", {"kind": "radial-bump", "params": {}}),
        "method": cfg.get("method", "auto"),
        "tolerances": cfg.get("tolerances", {}),
        "seed": int(cfg.get("seed", 0)),
        "output_dir": cfg.get("output_dir", "."),
    }
    for key in ("frame", "E", "method", "seed", "output_dir"):
        v = getattr(args, key, None)
        if v is not None:
            out[key] = v
    if getattr(args, "N", None) is not None:
        out["N_list"] = args.N
    if getattr(args, "symbol", None) is not None:
        params = {}
        if args.symbol_params:
            try:
                params = json.loads(args.symbol_params)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"--symbol-params is not valid JSON: {exc}") from exc
        out["symbol"] = {"kind": args.symbol, "params": params}
    out["N_list"] = parse_int_list(out["N_list"])
    if not isinstance(out["symbol"], dict) or "kind" not in out["symbol"]:
        raise ConfigError("symbol must be an object {kind, params}")
    if not isinstance(out["tolerances"], dict):
        raise ConfigError("tolerances must be an object")
    if out["E"] >= 0:
        raise ConfigError("E must be negative")
    return out


def _symbol(cfg, frame):
    p0 = math.sqrt(-2.0 * cfg["E"])
    orbit = KeplerOrbit(frame, SemiclassicalScale.from_energy(cfg["E"], 1))
    spec = cfg["symbol"]
    return from_config(spec["kind"], spec.get("params") or {}, p0, orbit)


def _method_kwargs(cfg):
    kw = dict(cfg["tolerances"])
    if cfg["method"] == "monte_carlo":
        kw.setdefault("seed", cfg["seed"])
    return kw


def _config_echo(cfg, **extra):
    echo = dict(cfg)
    for k, v in extra.items():
        echo[k] = v
    if isinstance(echo.get("frame"), AlphaFrame):
        echo["frame"] = echo["frame"].as_list()
    return echo


def _outputs(cfg, name):
    d = Path(cfg["output_dir"])
    return d / f"{name}.csv", d / f"{name}.json"


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_orbit(args, cfg):
    frame = parse_frame(cfg["frame"])
    sc = SemiclassicalScale.from_energy(cfg["E"], 1)
    orb = KeplerOrbit(frame, sc)
    n = args.samples
    t = (np.arange(n) + 0.5) * orb.period / n
    if orb.collision:
        t = t[np.abs(t - orb.t_collision) > 1e-9 * orb.period]
    p = kepler_state(orb, t)
    H = hamiltonian(p)
    rows = [[ti, *xi, *pi, hi] for ti, xi, pi, hi in zip(t, p.x, p.xi, H)]
    csv_path, json_path = _outputs(cfg, "orbit")
    write_csv(csv_path, ["t", "x1", "x2", "x3", "xi1", "xi2", "xi3", "H"], rows)
    res = {"period": orb.period, "collision": orb.collision, "t_collision": orb.t_collision,
           "max_energy_defect": float(np.max(np.abs(H - cfg["E"])))}
    write_summary(json_path, _config_echo(cfg, frame=frame), [res], [])
    return 0


def cmd_state(args, cfg):
    frame = parse_frame(cfg["frame"])
    rows, results = [], []
    for N in cfg["N_list"]:
        st = MomentumState(frame, SemiclassicalScale.from_energy(cfg["E"], N))
        res = {"N": N, "sphere_norm": sphere_norm(st.spherical), "momentum_norm": momentum_norm(st)}
        if args.residual:
            if N > 4:
                raise PreconditionError("--residual is limited to N <= 4")
            xi = np.random.default_rng(cfg["seed"]).normal(scale=st.scale.p0, size=(10, 3))
            res["hydrogen_residual"] = hydrogen_residual(st, xi)
        if args.grid:
            g = to_position_grid(st)
            path = Path(cfg["output_dir"]) / f"state_N{N}.kfgrid"
            path.parent.mkdir(parents=True, exist_ok=True)
            g.save(path)
            res["grid"] = str(path)
            res["grid_norm"] = g.norm()
        results.append(res)
        rows.append([N, res["sphere_norm"], res["momentum_norm"], res.get("hydrogen_residual", math.nan)])
    csv_path, json_path = _outputs(cfg, "state")
    write_csv(csv_path, ["N", "sphere_norm", "momentum_norm", "hydrogen_residual"], rows)
    write_summary(json_path, _config_echo(cfg, frame=frame), results, [])
    return 0


def cmd_matelem(args, cfg):
    frame = parse_frame(cfg["frame"])
    frame2 = frame if args.frame2 is None else parse_frame(args.frame2)
    a = _symbol(cfg, frame)
    rows, results = [], []
    for N in cfg["N_list"]:
        sc = SemiclassicalScale.from_energy(cfg["E"], N)
        r = matrix_element(a, MomentumState(frame, sc), MomentumState(frame2, sc), cfg["method"],
                           **_method_kwargs(cfg))
        rows.append([N, complex(r.value).real, complex(r.value).imag, r.method, r.error_estimate])
        results.append(dict(N=N, **r.as_dict()))
    csv_path, json_path = _outputs(cfg, "matelem")
    write_csv(csv_path, ["N", "value", "value_im", "method", "error_estimate"], rows)
    write_summary(json_path, _config_echo(cfg, frame=frame, frame2=frame2.as_list()), results, [])
    return 0


def _study_out(cfg, name, rec, failures, extra_cols=None):
    csv_path, json_path = _outputs(cfg, name)
    header = list(CSV_HEADER)
    rows = list(rec.rows())
    if extra_cols:
        for col, vals in extra_cols.items():
            header.append(col)
            rows = [r + [v] for r, v in zip(rows, vals)]
    write_csv(csv_path, header, rows)
    write_summary(json_path, _config_echo(cfg), [rec.as_dict()], failures)


def cmd_converge(args, cfg):
    frame = parse_frame(cfg["frame"])
    a = _symbol(cfg, frame)
    rec = theorem1_study(frame, a, cfg["N_list"], cfg["E"], cfg["method"],
                         allow_large=args.allow_large, **_method_kwargs(cfg))
    failures = monotone_violations(rec)
    _study_out(dict(cfg, frame=frame.as_list()), "converge", rec, failures)
    return 0


def cmd_cross(args, cfg):
    alpha = parse_frame(args.alpha if args.alpha is not None else cfg["frame"])
    beta = parse_frame(args.beta)
    a = _symbol(cfg, alpha)
    rec = cross_decay_study(alpha, beta, a, cfg["N_list"], cfg["E"], cfg["method"],
                            allow_large=args.allow_large, **_method_kwargs(cfg))
    failures = [] if rec.extra["superpolynomial"] else ["successive ratios do not shrink"]
    ratio_col = [math.nan] + list(rec.extra["ratios"])
    _study_out(dict(cfg, frame=alpha.as_list(), beta=beta.as_list()), "cross", rec, failures,
               {"ratio": ratio_col})
    return 0


def cmd_mixed(args, cfg):
    frames = [parse_frame(f) for f in (args.frames or [])]
    if len(frames) < 1:
        raise ConfigError("mixed needs at least one --frames entry")
    if args.weights is None:
        weights = [1.0 / len(frames)] * len(frames)
    else:
        try:
            weights = [float(w) for w in args.weights.split(",")]
        except ValueError as exc:
            raise ConfigError(f"bad --weights {args.weights!r}") from exc
    if len(weights) != len(frames):
        raise ConfigError("--weights must match the number of frames")
    m = GeodesicMeasure(tuple(zip(weights, frames)))
    a = _symbol(cfg, frames[0])
    rec = mixed_measure_study(m, a, cfg["N_list"], cfg["E"], cfg["method"],
                              allow_large=args.allow_large, **_method_kwargs(cfg))
    ref = SemiclassicalScale.from_energy(cfg["E"], max(cfg["N_list"]))
    lin = math.fsum(c * radon_transform(a, f, ref) for c, f in zip(weights, frames))
    failures = []
    if abs(lin - rec.predicted) > 1e-12:
        failures.append("prediction is not the weighted sum of orbit averages")
    _study_out(dict(cfg, frame=[f.as_list() for f in frames], weights=weights), "mixed", rec,
               failures)
    return 0


def cmd_hessian(args, cfg):
    th = args.theta0
    n = args.beta_samples
    betas = 2 * math.pi * (np.arange(n) + 0.5) / n
    if is_collision_angle(th):
        # the collision curve is parametrised away from the endpoint sin(b) sin(th) = 1
        betas = betas - math.pi
    rows, results, failures = [], [], []
    for b in betas:
        if 1.0 - math.sin(b) * math.sin(th) <= 1e-6:
            continue
        r = hessian_numeric(b, th)
        rows.append([b, th, r.chart, r.closed_form, r.sqrt_abs_det, r.rel_error])
        results.append({"beta": b, "theta0": th, "chart": r.chart, "closed": r.closed_form,
                        "numeric": r.sqrt_abs_det, "rel_error": r.rel_error})
        if r.rel_error > args.tol:
            failures.append(f"beta={b:.6g}: relative error {r.rel_error:.3g}")
    csv_path, json_path = _outputs(cfg, "hessian")
    write_csv(csv_path, ["beta", "theta0", "chart", "closed_form", "numeric", "rel_error"], rows)
    write_summary(json_path, _config_echo(cfg, theta0=th), results, failures)
    return EXIT_INVARIANT if failures else 0


def cmd_invariants(args, cfg):
    res = run_invariants(cfg["seed"])
    csv_path, json_path = _outputs(cfg, "invariants")
    write_csv(csv_path, ["name", "passed", "detail"], [[n, int(ok), d] for n, ok, d in res])
    failures = [f"{n}: {d}" for n, ok, d in res if not ok]
    write_summary(json_path, _config_echo(cfg),
                  [{"name": n, "passed": ok, "detail": d} for n, ok, d in res], failures)
    for n, ok, d in res:
        print(f"{'PASS' if ok else 'FAIL'}  {n}: {d}")
    return EXIT_INVARIANT if failures else 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--output-dir", dest="output_dir")
    common.add_argument("--E", type=float, help="energy (negative)")
    common.add_argument("--seed", type=int)

    sym = argparse.ArgumentParser(add_help=False)
    sym.add_argument("--symbol", help="palette symbol kind, e.g. radial-bump")
    sym.add_argument("--symbol-params", dest="symbol_params", help="JSON object of parameters")
    sym.add_argument("--method", choices=["auto", "multiplier", "grid_wigner", "monte_carlo"])
    sym.add_argument("--allow-large", dest="allow_large", action="store_true",
                     help="permit N above the default budget")

    nlist = argparse.ArgumentParser(add_help=False)
    nlist.add_argument("--N", type=parse_int_list, help="comma-separated quantum numbers")

    p = _Parser(prog="keplerfock", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("orbit", parents=[common], help="sample a Kepler orbit")
    s.add_argument("--frame")
    s.add_argument("--samples", type=int, default=256)
    s.set_defaults(func=cmd_orbit)

    s = sub.add_parser("state", parents=[common, nlist], help="norms (and grids) of coherent states")
    s.add_argument("--frame")
    s.add_argument("--residual", action="store_true", help="hydrogen equation residual (N <= 4)")
    s.add_argument("--grid", action="store_true", help="save the position grid")
    s.set_defaults(func=cmd_state)

    s = sub.add_parser("matelem", parents=[common, sym, nlist], help="single matrix elements")
    s.add_argument("--frame")
    s.add_argument("--frame2")
    s.set_defaults(func=cmd_matelem)

    s = sub.add_parser("converge", parents=[common, sym, nlist], help="diagonal convergence study")
    s.add_argument("--frame")
    s.set_defaults(func=cmd_converge)

    s = sub.add_parser("cross", parents=[common, sym, nlist], help="cross-term decay study")
    s.add_argument("--alpha", dest="alpha")
    s.add_argument("--beta", required=True)
    s.set_defaults(func=cmd_cross, frame=None)

    s = sub.add_parser("mixed", parents=[common, sym, nlist], help="finite convex combinations")
    s.add_argument("--frames", action="append", help="frame (repeat for each orbit)")
    s.add_argument("--weights", help="comma-separated weights (default equal)")
    s.set_defaults(func=cmd_mixed, frame=None)

    s = sub.add_parser("hessian", parents=[common], help="Hessian determinant table")
    s.add_argument("--theta0", type=float, required=True)
    s.add_argument("--beta-samples", dest="beta_samples", type=int, default=20)
    s.add_argument("--tol", type=float, default=1e-4)
    s.set_defaults(func=cmd_hessian)

    s = sub.add_parser("invariants", parents=[common], help="run the quick property suite")
    s.set_defaults(func=cmd_invariants)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = _merge(args)
        return args.func(args, cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PreconditionError as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except ConvergenceError as exc:
        print(f"numerical nonconvergence: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
