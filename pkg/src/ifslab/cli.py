"""Command-line interface.

Subcommands: validate, measure, integrate, pressure, cylinders,
dimension, sweep, diagnose, report.  Every run names its system either
with --preset or with --config (a JSON document); flags override the
engine settings stored there.  Delimited output goes to --out ("-" is
stdout) behind '#'-prefixed metadata lines; all lines except the
timestamp are deterministic, so identical invocations produce
byte-identical bodies.

Exit codes: 0 success; 1 a computation refused or failed its
mathematical preconditions; 2 usage or configuration errors (bad
flags, malformed config or expressions, parameters outside declared
intervals).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import shlex
import sys
from dataclasses import dataclass, replace
from datetime import datetime, timezone

from . import __version__
from .dimension import DIMENSION_CSV_HEADER, dimension_summary
from .errors import (
    BindError,
    ConfigError,
    ExprSyntaxError,
    IfsLabError,
)
from .measure import chaos_game, depth_n_measure, integrate, markov_step, w1_distance
from .rng import RNG_ALGORITHM
from .sweep import (
    DIAGNOSTIC_CSV_HEADER,
    PRESET_NAMES,
    SWEEP_CSV_HEADER,
    EngineConfig,
    Quantity,
    ScalarFn,
    SweepSpec,
    _error_coefficient,
    _tail_error,
    dyadic_ladder,
    parse_potential_spec,
    preset,
    run_sweep,
    smoothness_diagnostic,
)
from .system import ExprWeight, FamilySpec, StepWeight, bind, validate
from .thermo import gibbs_cylinder, pressure_periodic, pressure_transfer
from .expressions import to_source

_INSTANCE_DEPTH_DEFAULTS = {
    "measure": 12,
    "integrate": 12,
    "pressure": 8,
    "cylinders": 8,
    "dimension": 12,
}


# ---------------------------------------------------------------------------
# config documents
# ---------------------------------------------------------------------------


def _interval_json(iv):
    lo, hi = iv
    if math.isfinite(lo) and math.isfinite(hi):
        return [lo, hi]
    return None


def family_to_config(fam: FamilySpec) -> dict:
    weights = []
    for w in fam.weights:
        if isinstance(w, StepWeight):
            weights.append(
                {"breakpoints": list(w.breakpoints), "values": [to_source(v) for v in w.values]}
            )
        else:
            weights.append(to_source(w.expr))
    out = {
        "name": fam.name,
        "maps": [to_source(m) for m in fam.maps],
        "weights": weights,
        "default_lambda": fam.default_lambda,
        "default_theta": fam.default_theta,
    }
    li = _interval_json(fam.lambda_interval)
    ti = _interval_json(fam.theta_interval)
    if li is not None:
        out["lambda_interval"] = li
    if ti is not None:
        out["theta_interval"] = ti
    return out


def config_to_family(d: dict) -> FamilySpec:
    try:
        maps = d["maps"]
        weights = d["weights"]
    except (KeyError, TypeError):
        raise ConfigError("config family needs 'maps' and 'weights'") from None
    return FamilySpec(
        maps=tuple(maps),
        weights=tuple(weights),
        lambda_interval=d.get("lambda_interval"),
        theta_interval=d.get("theta_interval"),
        default_lambda=d.get("default_lambda"),
        default_theta=d.get("default_theta"),
        name=d.get("name", "config"),
    )


def quantity_to_config(q: Quantity) -> dict:
    out = {"kind": q.kind}
    if q.kind == "integral":
        if q.f.config is None:
            raise ConfigError("integrand built from a raw callable cannot be serialized")
        out["f"] = q.f.config if "pieces" in (q.f.config or {}) else q.f.config["expr"]
    if q.kind == "pressure":
        out["potential"] = q.potential
    return out


def config_to_quantity(d: dict) -> Quantity:
    kind = d.get("kind")
    if kind == "integral":
        f = d.get("f")
        if isinstance(f, str):
            fn = ScalarFn.from_expression(f)
        elif isinstance(f, dict) and "pieces" in f:
            fn = ScalarFn.piecewise(tuple(f.get("breakpoints", ())), tuple(f["pieces"]))
        else:
            raise ConfigError("integral quantity needs 'f' (expression or piecewise object)")
        return Quantity.integral(fn)
    if kind == "bowen_dimension":
        return Quantity.bowen()
    if kind == "measure_dimension":
        return Quantity.measure_dim()
    if kind == "pressure":
        if not d.get("potential"):
            raise ConfigError("pressure quantity needs 'potential'")
        return Quantity.pressure(d["potential"])
    raise ConfigError(f"unknown quantity kind {kind!r}")


def engine_to_config(e: EngineConfig) -> dict:
    return {
        "method": e.method,
        "depth": e.depth,
        "samples": e.samples,
        "seed": e.seed,
        "x0": e.x0,
        "burn_in": e.burn_in,
        "merge_tol": e.merge_tol,
        "pressure_method": e.pressure_method,
        "tol": e.tol,
    }


def config_to_engine(d: dict) -> EngineConfig:
    allowed = {
        "method",
        "depth",
        "samples",
        "seed",
        "x0",
        "burn_in",
        "merge_tol",
        "pressure_method",
        "tol",
        "atom_budget",
    }
    bad = set(d) - allowed
    if bad:
        raise ConfigError(f"unknown engine keys: {', '.join(sorted(bad))}")
    return EngineConfig(**d)


def sweep_to_config(spec: SweepSpec) -> dict:
    out = {
        "parameter": spec.parameter,
        "lo": spec.lo,
        "hi": spec.hi,
        "points": spec.points,
        "quantity": quantity_to_config(spec.quantity),
    }
    if spec.fixed_lambda is not None:
        out["fixed_lambda"] = spec.fixed_lambda
    if spec.fixed_theta is not None:
        out["fixed_theta"] = spec.fixed_theta
    return out


def config_to_sweep(d: dict, family: FamilySpec, engine: EngineConfig) -> SweepSpec:
    try:
        return SweepSpec(
            family=family,
            parameter=d["parameter"],
            lo=float(d["lo"]),
            hi=float(d["hi"]),
            points=int(d["points"]),
            quantity=config_to_quantity(d["quantity"]),
            engine=engine,
            fixed_lambda=d.get("fixed_lambda"),
            fixed_theta=d.get("fixed_theta"),
        )
    except KeyError as exc:
        raise ConfigError(f"config sweep section is missing {exc.args[0]!r}") from None


@dataclass
class Setup:
    """Resolved run inputs: the family, optional sweep, engine, source tag."""

    family: FamilySpec
    sweep: SweepSpec
    engine: EngineConfig
    source: str
    out: str = None


def load_config(path: str) -> Setup:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or ("system" not in data and "family" not in data):
        raise ConfigError("config document needs a 'system' section")
    family = config_to_family(data.get("system", data.get("family")))
    engine = config_to_engine(data.get("engine", {}))
    # Dry-run bind at the interval midpoints so broken families fail at
    # load time with a config error, not deep inside a computation.
    mid = []
    for iv in (family.lambda_interval, family.theta_interval):
        mid.append(0.5 * (iv[0] + iv[1]) if math.isfinite(iv[0]) and math.isfinite(iv[1]) else None)
    try:
        bind(family, lam=mid[0], theta=mid[1])
    except IfsLabError as exc:
        raise ConfigError(f"config family fails a dry-run bind: {exc}") from exc
    sweep_spec = None
    if "sweep" in data:
        sweep_spec = config_to_sweep(data["sweep"], family, engine)
    out = data.get("out")
    if out is not None and not isinstance(out, str):
        raise ConfigError("config 'out' must be a path string")
    return Setup(family=family, sweep=sweep_spec, engine=engine, source=f"config:{path}", out=out)


def setup_to_config(setup: Setup) -> dict:
    out = {"system": family_to_config(setup.family), "engine": engine_to_config(setup.engine)}
    if setup.sweep is not None:
        out["sweep"] = sweep_to_config(setup.sweep)
    return out


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--preset", choices=PRESET_NAMES, help="built-in system name")
    src.add_argument("--config", metavar="PATH", help="JSON config document")
    common.add_argument("--lambda", dest="lam", type=float, default=None, help="map parameter")
    common.add_argument("--theta", type=float, default=None, help="weight parameter")
    common.add_argument("--seed", type=int, default=0, help="base RNG seed (default 0)")
    common.add_argument("--depth", type=int, default=None, help="expansion/transfer depth")
    common.add_argument("--samples", type=int, default=None, help="stochastic sample count")
    common.add_argument(
        "--method",
        "--engine",
        dest="method",
        choices=("depth", "chaos", "transfer", "periodic"),
        default=None,
        help="evaluation engine (depth/chaos) or pressure backend (transfer/periodic)",
    )
    common.add_argument("--tol", type=float, default=None, help="solver/bisection tolerance")
    common.add_argument("--out", default=None, help="output path ('-' = stdout, the default)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    common.add_argument("--x0", type=float, default=None, help="expansion start point")
    common.add_argument("--burn-in", dest="burn_in", type=int, default=None)
    common.add_argument("--merge-tol", dest="merge_tol", type=float, default=None)
    common.add_argument(
        "--emit-config",
        action="store_true",
        help="print the resolved configuration as JSON and exit",
    )

    parser = argparse.ArgumentParser(
        prog="ifslab",
        description="Stationary measures, pressure, dimensions, and parameter sweeps "
        "for weighted contraction schemes on [0,1].",
    )
    parser.add_argument("--version", action="version", version=f"ifslab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="check the hypotheses of a bound system")
    p.add_argument("--grid-n", dest="grid_n", type=int, default=4096)
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("measure", parents=[common], help="atoms of a stationary-measure estimate")
    p.set_defaults(handler=cmd_measure)

    p = sub.add_parser("integrate", parents=[common], help="integral of f against the measure")
    p.add_argument("--f", dest="f", default=None, help="integrand expression in x")
    p.set_defaults(handler=cmd_integrate)

    p = sub.add_parser("pressure", parents=[common], help="topological pressure of a potential")
    p.add_argument(
        "--potential",
        default="weight_log",
        help="weight_log | derivative_log | constant:<c> | scaled:<t>:<base>",
    )
    p.set_defaults(handler=cmd_pressure)

    p = sub.add_parser("cylinders", parents=[common], help="depth-n cylinder weights")
    p.set_defaults(handler=cmd_cylinders)

    p = sub.add_parser("dimension", parents=[common], help="limit-set and measure dimensions")
    p.set_defaults(handler=cmd_dimension)

    p = sub.add_parser("sweep", parents=[common], help="evaluate a quantity over a parameter grid")
    p.add_argument("--parameter", choices=("lambda", "theta", "both"), default=None)
    p.add_argument("--lo", type=float, default=None)
    p.add_argument("--hi", type=float, default=None)
    p.add_argument("--points", type=int, default=None)
    p.add_argument(
        "--quantity",
        choices=("integral", "bowen_dimension", "measure_dimension", "pressure"),
        default=None,
    )
    p.add_argument("--f", dest="f", default=None, help="integrand expression in x")
    p.add_argument("--potential", default=None)
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser(
        "diagnose", parents=[common], help="difference-quotient growth of the sweep quantity"
    )
    p.add_argument("--probe", type=float, required=True)
    p.add_argument("--order", type=int, required=True, choices=(1, 2, 3))
    p.add_argument("--ladder", default=None, help="comma-separated step sizes")
    p.add_argument(
        "--levels",
        default=None,
        help="dyadic ladder exponents 'coarse:fine' relative to the grid length",
    )
    p.add_argument("--f", dest="f", default=None, help="integrand expression in x")
    p.set_defaults(handler=cmd_diagnose)

    p = sub.add_parser(
        "report", parents=[common], help="render CSVs and figures into a directory"
    )
    p.set_defaults(handler=cmd_report)

    return parser


def resolve_setup(args) -> Setup:
    if args.preset:
        sp = preset(args.preset)
        setup = Setup(family=sp.family, sweep=sp, engine=sp.engine, source=f"preset:{args.preset}")
    elif args.config:
        setup = load_config(args.config)
    else:
        raise ConfigError("one of --preset or --config is required")
    setup.engine = _apply_engine_overrides(setup.engine, args)
    if setup.sweep is not None:
        setup.sweep = replace(setup.sweep, engine=setup.engine)
    if args.out is None:
        args.out = setup.out if setup.out is not None else "-"
    return setup


def _apply_engine_overrides(engine: EngineConfig, args) -> EngineConfig:
    kw = {}
    if args.method in ("depth", "chaos"):
        kw["method"] = args.method
    elif args.method in ("transfer", "periodic"):
        kw["pressure_method"] = args.method
    if args.depth is not None:
        kw["depth"] = args.depth
    if args.samples is not None:
        kw["samples"] = args.samples
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.tol is not None:
        kw["tol"] = args.tol
    if args.x0 is not None:
        kw["x0"] = args.x0
    if args.burn_in is not None:
        kw["burn_in"] = args.burn_in
    if args.merge_tol is not None:
        kw["merge_tol"] = args.merge_tol
    return replace(engine, **kw) if kw else engine


def _bind_instance(setup: Setup, args):
    return bind(setup.family, lam=args.lam, theta=args.theta)


def _depth_for(args, command: str) -> int:
    if args.depth is not None:
        return args.depth
    return _INSTANCE_DEPTH_DEFAULTS[command]


def _sweep_spec(setup: Setup, args) -> SweepSpec:
    quantity = None
    if getattr(args, "quantity", None):
        if args.quantity == "integral":
            if not getattr(args, "f", None):
                raise ConfigError("--quantity integral needs --f")
            quantity = Quantity.integral(ScalarFn.from_expression(args.f))
        elif args.quantity == "bowen_dimension":
            quantity = Quantity.bowen()
        elif args.quantity == "measure_dimension":
            quantity = Quantity.measure_dim()
        else:
            if not getattr(args, "potential", None):
                raise ConfigError("--quantity pressure needs --potential")
            quantity = Quantity.pressure(args.potential)
    elif getattr(args, "f", None):
        quantity = Quantity.integral(ScalarFn.from_expression(args.f))
    elif getattr(args, "potential", None):
        quantity = Quantity.pressure(args.potential)

    base = setup.sweep
    if base is None:
        if args.parameter is None or args.lo is None or args.hi is None or args.points is None:
            raise ConfigError(
                "this config has no sweep section; provide --parameter, --lo, --hi, "
                "--points, and a quantity"
            )
        if quantity is None:
            raise ConfigError("no quantity given; use --quantity/--f/--potential")
        return SweepSpec(
            family=setup.family,
            parameter=args.parameter,
            lo=args.lo,
            hi=args.hi,
            points=args.points,
            quantity=quantity,
            engine=setup.engine,
            fixed_lambda=args.lam,
            fixed_theta=args.theta,
        )
    kw = {"engine": setup.engine}
    if getattr(args, "parameter", None):
        kw["parameter"] = args.parameter
    if getattr(args, "lo", None) is not None:
        kw["lo"] = args.lo
    if getattr(args, "hi", None) is not None:
        kw["hi"] = args.hi
    if getattr(args, "points", None) is not None:
        kw["points"] = args.points
    if quantity is not None:
        kw["quantity"] = quantity
    if args.lam is not None:
        kw["fixed_lambda"] = args.lam
    if args.theta is not None:
        kw["fixed_theta"] = args.theta
    return replace(base, **kw)


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _g(x) -> str:
    return format(float(x), ".17g")


def _meta_lines(args, argv, pairs) -> list:
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    lines = [
        f"# ifslab {__version__}",
        f"# timestamp={stamp}",
        f"# command={shlex.join(argv)}",
    ]
    lines.extend(f"# {k}={v}" for k, v in pairs)
    return lines


def _write_out(out: str, text: str):
    if out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _emit_table(args, argv, pairs, header: str, rows) -> None:
    lines = _meta_lines(args, argv, pairs)
    lines.append(header)
    lines.extend(rows)
    _write_out(args.out, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# command handlers
# ---------------------------------------------------------------------------


def cmd_validate(args, setup, argv) -> int:
    inst = _bind_instance(setup, args)
    rep = validate(inst, grid_n=args.grid_n)
    lines = _meta_lines(args, argv, [("source", setup.source)])
    lines.extend(rep.summary_lines())
    _write_out(args.out, "\n".join(lines) + "\n")
    return 0 if rep.valid else 1


def _measure_for(args, setup, inst, command: str):
    eng = setup.engine
    depth = _depth_for(args, command)
    x0 = eng.x0
    if eng.method == "chaos":
        mu = chaos_game(inst, x0, eng.burn_in, eng.samples, eng.seed)
        info = [
            ("method", "chaos"),
            ("depth_or_samples", eng.samples),
            ("seed", eng.seed),
            ("rng", RNG_ALGORITHM),
            ("burn_in", eng.burn_in),
            ("x0", _g(x0)),
        ]
        return mu, info
    from .measure import EvolveConfig  # local import to keep module load light

    cfg = EvolveConfig(merge_tol=eng.merge_tol) if eng.merge_tol > 0.0 else None
    mu = depth_n_measure(inst, x0, depth, cfg)
    info = [
        ("method", "depth"),
        ("depth_or_samples", depth),
        ("seed", eng.seed),
        ("x0", _g(x0)),
    ]
    if eng.merge_tol > 0.0:
        info.append(("merge_tol", _g(eng.merge_tol)))
    return mu, info


def cmd_measure(args, setup, argv) -> int:
    inst = _bind_instance(setup, args)
    mu, info = _measure_for(args, setup, inst, "measure")
    pairs = [("source", setup.source), ("lambda", _g(inst.lam)), ("theta", _g(inst.theta))] + info
    rows = [f"{_g(p)},{_g(w)}" for p, w in zip(mu.positions, mu.weights)]
    _emit_table(args, argv, pairs, "position,weight", rows)
    return 0


def cmd_integrate(args, setup, argv) -> int:
    inst = _bind_instance(setup, args)
    if args.f:
        f = ScalarFn.from_expression(args.f)
    elif setup.sweep is not None and setup.sweep.quantity.kind == "integral":
        f = setup.sweep.quantity.f
    else:
        raise ConfigError("integrate needs --f (or a config whose quantity is an integral)")
    eng = setup.engine
    depth = _depth_for(args, "integrate")
    if eng.method == "chaos":
        mu = chaos_game(inst, eng.x0, eng.burn_in, eng.samples, eng.seed)
        value = integrate(mu, f)
        err = 1.0 / math.sqrt(eng.samples)
        engine_label, size = "chaos", eng.samples
    else:
        rep = validate(inst)
        from .measure import EvolveConfig

        cfg = EvolveConfig(merge_tol=eng.merge_tol) if eng.merge_tol > 0.0 else None
        mu = depth_n_measure(inst, eng.x0, depth, cfg)
        mu1 = markov_step(inst, mu, cfg)
        mu2 = markov_step(inst, mu1, cfg)
        delta = w1_distance(mu, mu1)
        delta_next = w1_distance(mu1, mu2)
        coeff = _error_coefficient(f, rep.images)
        ratio = delta_next / delta if delta > 0.0 else 0.0
        err = _tail_error(delta, delta / ratio if ratio > 0.0 else 0.0, rep.holder_a, coeff)
        value = integrate(mu, f)
        engine_label, size = "depth", depth
    pairs = [
        ("source", setup.source),
        ("lambda", _g(inst.lam)),
        ("theta", _g(inst.theta)),
        ("f", f.description),
        ("method", engine_label),
        ("depth_or_samples", size),
        ("seed", eng.seed),
    ]
    if engine_label == "chaos":
        pairs.append(("rng", RNG_ALGORITHM))
    row = f"{_g(value)},{_g(err)},{engine_label},{size},{eng.seed}"
    _emit_table(args, argv, pairs, "value,err_estimate,engine,depth_or_samples,seed", [row])
    return 0


def cmd_pressure(args, setup, argv) -> int:
    inst = _bind_instance(setup, args)
    pot = parse_potential_spec(inst, args.potential)
    depth = _depth_for(args, "pressure")
    method = setup.engine.pressure_method
    tol = args.tol if args.tol is not None else 1e-13
    if method == "transfer":
        est = pressure_transfer(pot, depth, tol=tol)
    else:
        est = pressure_periodic(pot, depth)
    pairs = [
        ("source", setup.source),
        ("lambda", _g(inst.lam)),
        ("theta", _g(inst.theta)),
        ("potential", args.potential),
        ("method", method),
        ("depth", depth),
        ("tol", _g(tol)),
    ]
    row = f"{_g(est.value)},{_g(est.gap)},{method},{depth},{args.potential}"
    _emit_table(args, argv, pairs, "value,gap,method,depth,potential", [row])
    return 0


def cmd_cylinders(args, setup, argv) -> int:
    inst = _bind_instance(setup, args)
    depth = _depth_for(args, "cylinders")
    cyl = gibbs_cylinder(inst, depth)
    pairs = [
        ("source", setup.source),
        ("lambda", _g(inst.lam)),
        ("theta", _g(inst.theta)),
        ("depth", depth),
    ]
    rows = ["".join(str(s) for s in word) + "," + _g(w) for word, w in cyl.items()]
    _emit_table(args, argv, pairs, "word,weight", rows)
    return 0


def cmd_dimension(args, setup, argv) -> int:
    inst = _bind_instance(setup, args)
    depth = _depth_for(args, "dimension")
    tol = args.tol if args.tol is not None else 1e-10
    method = setup.engine.pressure_method
    res = dimension_summary(inst, method=method, depth=depth, tol=tol)
    pairs = [
        ("source", setup.source),
        ("lambda", _g(inst.lam)),
        ("theta", _g(inst.theta)),
        ("method", method),
        ("depth", depth),
        ("tol", _g(tol)),
    ]
    row = ",".join(
        [
            _g(inst.lam),
            _g(inst.theta),
            _g(res.t_star),
            _g(res.h),
            _g(res.chi),
            _g(res.hd_measure),
            _g(res.bracket[0]),
            _g(res.bracket[1]),
            str(res.depth),
            res.pressure_method,
        ]
    )
    _emit_table(args, argv, pairs, DIMENSION_CSV_HEADER, [row])
    return 0


def _sweep_rows_csv(rows) -> list:
    out = []
    for r in rows:
        err_text = r.error.replace(",", ";").replace("\n", " ") if r.error else ""
        out.append(
            f"{_g(r.param)},{_g(r.value)},{_g(r.err_estimate)},{r.engine},"
            f"{r.depth_or_samples},{r.seed},{err_text}"
        )
    return out


def cmd_sweep(args, setup, argv) -> int:
    spec = _sweep_spec(setup, args)
    rows = run_sweep(spec, threads=args.threads)
    pairs = [
        ("source", setup.source),
        ("parameter", spec.parameter),
        ("lo", _g(spec.lo)),
        ("hi", _g(spec.hi)),
        ("points", spec.points),
        ("quantity", spec.quantity.kind),
        ("method", spec.engine.method),
        ("seed", spec.engine.seed),
        ("threads", args.threads),
    ]
    if spec.quantity.kind == "integral":
        pairs.append(("f", spec.quantity.f.description))
        if spec.engine.method == "chaos":
            pairs.append(("rng", RNG_ALGORITHM))
    _emit_table(args, argv, pairs, SWEEP_CSV_HEADER, _sweep_rows_csv(rows))
    return 0


def _parse_ladder(args, spec) -> tuple:
    if args.ladder:
        try:
            return tuple(float(t) for t in args.ladder.split(","))
        except ValueError:
            raise ConfigError(f"bad --ladder {args.ladder!r}; use comma-separated floats") from None
    if args.levels:
        try:
            coarse, fine = (int(t) for t in args.levels.split(":"))
        except ValueError:
            raise ConfigError(f"bad --levels {args.levels!r}; use 'coarse:fine'") from None
        return dyadic_ladder(spec.lo, spec.hi, coarse, fine)
    return None


def cmd_diagnose(args, setup, argv) -> int:
    spec = _sweep_spec(setup, args)
    ladder = _parse_ladder(args, spec)
    diag = smoothness_diagnostic(spec, args.probe, args.order, ladder)
    pairs = [
        ("source", setup.source),
        ("parameter", spec.parameter),
        ("probe", _g(diag.probe)),
        ("order", diag.order),
        ("engine", diag.engine),
        ("depth", diag.depth),
        ("err_estimate", _g(diag.err_estimate)),
        ("noise_floor", _g(diag.noise_floor)),
        ("certified", str(diag.certified).lower()),
        ("exponent", _g(diag.exponent) if math.isfinite(diag.exponent) else "nan"),
        ("verdict", diag.verdict),
    ]
    for note in diag.notes:
        pairs.append(("note", note))
    rows = [
        f"{_g(h)},{_g(q)},{diag.order},{_g(c)}"
        for h, q, c in zip(diag.ladder, diag.quotients, diag.centers)
    ]
    _emit_table(args, argv, pairs, DIAGNOSTIC_CSV_HEADER, rows)
    return 0


def cmd_report(args, setup, argv) -> int:
    from . import plots

    if args.out == "-":
        raise ConfigError("report writes multiple files; pass a directory via --out")
    os.makedirs(args.out, exist_ok=True)
    written = []

    inst = _bind_instance(setup, args)
    rep = validate(inst)
    path = os.path.join(args.out, "validate.txt")
    lines = _meta_lines(args, argv, [("source", setup.source)])
    lines.extend(rep.summary_lines())
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    written.append(path)

    mu, info = _measure_for(args, setup, inst, "measure")
    path = os.path.join(args.out, "measure.csv")
    pairs = [("source", setup.source), ("lambda", _g(inst.lam)), ("theta", _g(inst.theta))] + info
    lines = _meta_lines(args, argv, pairs)
    lines.append("position,weight")
    lines.extend(f"{_g(p)},{_g(w)}" for p, w in zip(mu.positions, mu.weights))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    written.append(path)
    png = os.path.join(args.out, "measure.png")
    plots.render_measure_figure(mu, png, title=f"{setup.family.name or 'system'} measure")
    written.append(png)

    if setup.sweep is not None:
        spec = _sweep_spec(setup, args)
        rows = run_sweep(spec, threads=args.threads)
        path = os.path.join(args.out, "sweep.csv")
        pairs = [
            ("source", setup.source),
            ("parameter", spec.parameter),
            ("lo", _g(spec.lo)),
            ("hi", _g(spec.hi)),
            ("points", spec.points),
            ("quantity", spec.quantity.kind),
            ("method", spec.engine.method),
            ("seed", spec.engine.seed),
        ]
        lines = _meta_lines(args, argv, pairs)
        lines.append(SWEEP_CSV_HEADER)
        lines.extend(_sweep_rows_csv(rows))
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
        written.append(path)
        png = os.path.join(args.out, "sweep.png")
        plots.render_sweep_figure(
            rows, png, title=f"{setup.family.name or 'system'}: {spec.quantity.kind}"
        )
        written.append(png)

    for w in written:
        sys.stdout.write(w + "\n")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        setup = resolve_setup(args)
    except (ConfigError, ExprSyntaxError, BindError) as exc:
        print(f"ifslab: {exc}", file=sys.stderr)
        return 2
    except IfsLabError as exc:
        print(f"ifslab: {exc}", file=sys.stderr)
        return 2
    if args.emit_config:
        doc = setup_to_config(setup)
        text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
        _write_out(args.out, text)
        return 0
    try:
        return args.handler(args, setup, argv)
    except (ConfigError, ExprSyntaxError, BindError) as exc:
        print(f"ifslab: {exc}", file=sys.stderr)
        return 2
    except IfsLabError as exc:
        print(f"ifslab: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
