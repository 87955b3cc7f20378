"""Command-line front end.

Subcommands (all driven by a single JSON config document, "schema": 1):

    simulate    integrate an N-peakon system; trajectory CSV + events JSON
    single      sweep single-peakon amplitudes; CSV of (a, residual, c)
    classify2   2-peakon regime report as JSON
    breakcheck  print blow-up coefficients A, B; optional indicator series
    field       periodic field run; snapshot CSV per sampled time
    invariants  recompute invariant columns from a trajectory CSV

Exit codes: 0 clean, 1 config error, 2 blow-up termination, 3 step-size
underflow.  CSV output is comma-separated, UTF-8, LF line endings, one
version comment line, then a header row; floats carry 17 significant digits.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import math
import os
import sys

import numpy as np

from . import __version__, expr
from .conservation import (MODEL_INVARIANT_COLUMNS, energy, h1_norm_sq,
                           momentum, monitor_trajectory, two_peakon_invariants)
from .dynamics import PeakonState, rhs_general, single_peakon_test
from .equations import (FgEquation, PRESET_NAMES, hamiltonian_family_from_text,
                        hamiltonian_to_fg, preset)
from .solver import IntegrationConfig, integrate
from .twopeakon import (classify_ch, classify_gch_p2, classify_gmch,
                        gch_p2_invariant)
from .wavebreak import blowup_AB, blowup_indicator
from . import fields as F

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_BLOWUP = 2
EXIT_UNDERFLOW = 3


class ConfigError(Exception):
    pass


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# peakonfg {__version__}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_csv(path):
    """(header, float rows) of a CSV written by this tool."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if lines and lines[0].startswith("#"):
        lines = lines[1:]
    header = lines[0].split(",")
    rows = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
    return header, rows


def _require(cfg: dict, key: str, kind=None):
    if key not in cfg:
        raise ConfigError(f"missing required config field {key!r}")
    val = cfg[key]
    if kind is not None and not isinstance(val, kind):
        raise ConfigError(f"config field {key!r} has wrong type "
                          f"({type(val).__name__})")
    return val


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON "
                          f"(line {exc.lineno}, column {exc.colno}): {exc.msg}")
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    if cfg.get("schema") != 1:
        raise ConfigError('config must declare "schema": 1')
    return cfg


def equation_from_config(cfg: dict) -> FgEquation:
    spec = _require(cfg, "equation", dict)
    if "preset" in spec:
        name = spec["preset"]
        if name not in PRESET_NAMES:
            raise ConfigError(f"unknown preset {name!r}; expected one of "
                              f"{', '.join(PRESET_NAMES)}")
        params = spec.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError("equation.params must be an object")
        try:
            return preset(name, **params)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad parameters for preset {name!r}: {exc}")
    try:
        if "f1" in spec or "g1" in spec:
            h = hamiltonian_family_from_text(spec.get("f1", "0"),
                                             spec.get("g1", "0"))
            return hamiltonian_to_fg(h, name=spec.get("name", "custom"))
        if "f" in spec and "g" in spec:
            return FgEquation(name=spec.get("name", "custom"),
                              f=expr.parse(spec["f"]), g=expr.parse(spec["g"]))
    except expr.ParseError as exc:
        raise ConfigError(f"equation DSL does not parse: {exc}")
    raise ConfigError("equation must give a preset, f/g texts, or f1/g1 texts")


def integration_config_from(cfg: dict, args) -> IntegrationConfig:
    tol = cfg.get("tolerances", {})
    if not isinstance(tol, dict):
        raise ConfigError("tolerances must be an object")
    kwargs = {}
    if "rtol" in tol:
        kwargs["rtol"] = float(tol["rtol"])
    if "atol" in tol:
        kwargs["atol"] = float(tol["atol"])
    if "stride" in cfg:
        kwargs["stride"] = float(cfg["stride"])
    if "amplitude_cap" in cfg:
        kwargs["amplitude_cap"] = float(cfg["amplitude_cap"])
    if "min_separation" in cfg:
        kwargs["min_separation"] = float(cfg["min_separation"])
    if getattr(args, "continue_through_collisions", False) or \
            cfg.get("continue_through_collisions", False):
        kwargs["continue_through_collisions"] = True
    try:
        return IntegrationConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc))


def _state_from_config(cfg: dict) -> PeakonState:
    alphas = _require(cfg, "alphas", list)
    betas = _require(cfg, "betas", list)
    if len(alphas) != len(betas):
        raise ConfigError("alphas and betas must have equal length")
    try:
        return PeakonState(float(cfg.get("t0", 0.0)), alphas, betas)
    except ValueError as exc:
        raise ConfigError(str(exc))


def _outdir(args) -> str:
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def _exit_code_for(reason: str) -> int:
    if reason == "blowup":
        return EXIT_BLOWUP
    if reason == "step-underflow":
        return EXIT_UNDERFLOW
    return EXIT_OK


# -------------------------------------------------------------- simulate

def cmd_simulate(cfg: dict, args) -> int:
    eq = equation_from_config(cfg)
    state = _state_from_config(cfg)
    t1 = float(_require(cfg, "t1", (int, float)))
    icfg = integration_config_from(cfg, args)
    traj = integrate(lambda s: rhs_general(eq, s), state, t1, icfg)

    out = _outdir(args)
    n = state.n
    header = ["t"] + [f"alpha_{i + 1}" for i in range(n)] + \
        [f"beta_{i + 1}" for i in range(n)]
    rows = [[s.t] + list(s.alphas) + list(s.betas) for s in traj.states]
    _write_csv(os.path.join(out, "trajectory.csv"), header, rows)

    events = {"reason": traj.reason,
              "events": [{"kind": ev.kind, "time": ev.time,
                          "pair": list(ev.pair) if ev.pair else None}
                         for ev in traj.events]}
    with open(os.path.join(out, "events.json"), "w", encoding="utf-8") as fh:
        json.dump(events, fh, indent=2)
        fh.write("\n")

    if cfg.get("monitor", False):
        rep = monitor_trajectory(traj, eq.hamiltonian, model=cfg.get("model"))
        _write_csv(os.path.join(out, "invariants.csv"), rep.header(),
                   rep.rows())
    if args.plot:
        from . import report
        report.plot_trajectory(traj, os.path.join(out, "trajectory.png"))
    print(f"simulate: {traj.reason} at t = {_fmt(traj.states[-1].t)} "
          f"({len(traj.states)} samples)")
    return _exit_code_for(traj.reason)


# ---------------------------------------------------------------- single

def _single_point(eq_cfg: dict, a: float):
    eq = equation_from_config(eq_cfg)
    res = single_peakon_test(eq, a)
    return (a, res.condition_residual, res.c)


def cmd_single(cfg: dict, args) -> int:
    equation_from_config(cfg)  # validate before spawning workers
    sweep = _require(cfg, "amplitudes", (list, dict))
    if isinstance(sweep, dict):
        lo = float(_require(sweep, "min", (int, float)))
        hi = float(_require(sweep, "max", (int, float)))
        count = int(_require(sweep, "count", int))
        grid = list(np.linspace(lo, hi, count))
    else:
        grid = [float(a) for a in sweep]
    if any(a == 0.0 for a in grid):
        raise ConfigError("amplitude sweep must not contain 0")

    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as ex:
            rows = list(ex.map(_single_point, [cfg] * len(grid), grid))
    else:
        rows = [_single_point(cfg, a) for a in grid]

    out = _outdir(args)
    _write_csv(os.path.join(out, "single.csv"),
               ["a", "condition_residual", "c"], rows)
    if args.plot:
        from . import report
        report.plot_sweep(rows, os.path.join(out, "single.png"))
    print(f"single: {len(rows)} amplitudes")
    return EXIT_OK


# ------------------------------------------------------------- classify2

def cmd_classify2(cfg: dict, args) -> int:
    model = _require(cfg, "model", str)
    if model == "ch":
        if "M" in cfg and "E" in cfg:
            rep = classify_ch(float(cfg["M"]), float(cfg["E"]))
        else:
            st = _state_from_config(cfg)
            if st.n != 2:
                raise ConfigError("ch classification needs exactly 2 peakons")
            inv = two_peakon_invariants("ch", st)
            rep = classify_ch(inv["M"], inv["E"])
    elif model == "gch-p2":
        if "nu" in cfg:
            nu = float(cfg["nu"])
        else:
            st = _state_from_config(cfg)
            if st.n != 2:
                raise ConfigError("gch-p2 classification needs exactly 2 peakons")
            nu = gch_p2_invariant(st.alphas[0] + st.alphas[1],
                                  st.alphas[0] - st.alphas[1],
                                  st.betas[0] - st.betas[1])
        try:
            rep = classify_gch_p2(nu)
        except ValueError as exc:
            raise ConfigError(str(exc))
    elif model in ("gmch-p1", "gmch-p2"):
        st = _state_from_config(cfg)
        if st.n != 2:
            raise ConfigError("gmch classification needs exactly 2 peakons")
        p = 1 if model == "gmch-p1" else 2
        rep = classify_gmch(p, st.alphas[0], st.alphas[1],
                            st.betas[0] - st.betas[1])
    else:
        raise ConfigError(f"unknown model {model!r}; expected ch, gch-p2, "
                          "gmch-p1, or gmch-p2")

    text = rep.to_json()
    print(text)
    out = _outdir(args)
    with open(os.path.join(out, "regime.json"), "w", encoding="utf-8") as fh:
        fh.write(text + "\n")
    return EXIT_OK


# ------------------------------------------------------------ breakcheck

def cmd_breakcheck(cfg: dict, args) -> int:
    eq = equation_from_config(cfg)
    try:
        coeffs = blowup_AB(eq)
    except Exception as exc:
        raise ConfigError(str(exc))
    print(f"A = {expr.render(coeffs.A)}")
    print(f"B = {expr.render(coeffs.B)}")

    out = _outdir(args)
    with open(os.path.join(out, "coefficients.json"), "w", encoding="utf-8") as fh:
        json.dump(coeffs.render(), fh, indent=2)
        fh.write("\n")

    if "field" in cfg:
        run = _field_run(eq, cfg["field"])
        alpha = float(cfg.get("alpha", 1.0))
        beta = float(cfg.get("beta", 1.0))
        ts, values = [], []
        for fs in run.states:
            u, ux, _ = F.helmholtz_invert(fs)
            ts.append(fs.t)
            values.append(blowup_indicator(coeffs, u, ux, fs.m, alpha, beta))
        _write_csv(os.path.join(out, "indicator.csv"), ["t", "indicator"],
                   zip(ts, values))
        if args.plot:
            from . import report
            report.plot_indicator(ts, values, os.path.join(out, "indicator.png"))
        return _exit_code_for(run.reason)
    return EXIT_OK


# ----------------------------------------------------------------- field

def _field_run(eq: FgEquation, fcfg: dict):
    if not isinstance(fcfg, dict):
        raise ConfigError("field config must be an object")
    L = float(_require(fcfg, "L", (int, float)))
    n = int(_require(fcfg, "n", int))
    init = _require(fcfg, "initial", dict)
    try:
        if init.get("kind") == "gaussian":
            fs0 = F.gaussian_state(L, n, float(init.get("amplitude", 1.0)),
                                   float(init.get("width", 1.0)),
                                   init.get("center"))
        elif init.get("kind") == "peakons":
            fs0 = F.mollified_peakon_state(
                L, n, _require(init, "alphas", list),
                _require(init, "betas", list),
                float(init["width"]) if "width" in init else None)
        else:
            raise ConfigError("field initial.kind must be gaussian or peakons")
        dt = float(fcfg["dt"]) if "dt" in fcfg else None
        return F.run(eq, fs0, float(_require(fcfg, "t1", (int, float))),
                     dt=dt, sample_every=int(fcfg.get("sample_every", 1)))
    except (ValueError, F.CFLViolation) as exc:
        raise ConfigError(str(exc))


def cmd_field(cfg: dict, args) -> int:
    eq = equation_from_config(cfg)
    run = _field_run(eq, _require(cfg, "field", dict))
    out = _outdir(args)
    for k, fs in enumerate(run.states):
        _write_csv(os.path.join(out, f"snapshot_{k:04d}.csv"),
                   ["x", "m", "u", "u_x"], F.snapshot_rows(fs))
    summary = {"reason": run.reason,
               "times": [fs.t for fs in run.states]}
    with open(os.path.join(out, "field.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    if args.plot:
        from . import report
        report.plot_field(run.states, os.path.join(out, "field.png"))
    print(f"field: {run.reason}, {len(run.states)} snapshots")
    return _exit_code_for(run.reason)


# ------------------------------------------------------------ invariants

def cmd_invariants(cfg: dict, args) -> int:
    eq = equation_from_config(cfg)
    path = _require(cfg, "trajectory", str)
    try:
        header, rows = read_csv(path)
    except OSError as exc:
        raise ConfigError(f"cannot read trajectory {path}: {exc}")
    if not header or header[0] != "t":
        raise ConfigError("trajectory CSV must start with a t column")
    n = (len(header) - 1) // 2
    if len(header) != 1 + 2 * n:
        raise ConfigError("trajectory CSV must have alpha/beta column pairs")
    model = cfg.get("model")
    extra = MODEL_INVARIANT_COLUMNS.get(model, ()) if model else ()
    out_header = ["t", "P", "H", "H1sq"] + list(extra)
    out_rows = []
    for row in rows:
        st = PeakonState(row[0], row[1:1 + n], row[1 + n:1 + 2 * n])
        vals = [st.t, momentum(st),
                energy(eq.hamiltonian, st) if eq.hamiltonian else math.nan,
                h1_norm_sq(st)]
        if extra:
            inv = two_peakon_invariants(model, st)
            vals += [inv[name] for name in extra]
        out_rows.append(vals)
    out = _outdir(args)
    _write_csv(os.path.join(out, "invariants.csv"), out_header, out_rows)
    print(f"invariants: {len(out_rows)} rows")
    return EXIT_OK


# ------------------------------------------------------------------ main

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="peakonfg",
        description="Peakon dynamics and wave-breaking diagnostics for "
                    "fg-family equations")
    parser.add_argument("--version", action="version",
                        version=f"peakonfg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--jobs", type=int, default=1,
                       help="parallel workers for parameter sweeps")
        p.add_argument("--continue-through-collisions", action="store_true")
        p.add_argument("--plot", action="store_true",
                       help="also render figures next to the CSV output")
    return parser


COMMANDS = {
    "simulate": cmd_simulate,
    "single": cmd_single,
    "classify2": cmd_classify2,
    "breakcheck": cmd_breakcheck,
    "field": cmd_field,
    "invariants": cmd_invariants,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
