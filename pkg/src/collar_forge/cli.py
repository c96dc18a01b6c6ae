"""Command-line front end: build fixtures, verify collars, export fiber trajectories.

Exit codes: 0 pass, 1 verification failure, 2 usage or parameter error.
"""
import argparse
import csv
import json
import sys

import numpy as np

from .bicollar import bicollar_report
from .collar import CollarValidationError, trajectories
from .covers import NotACoverError, net_constants
from .fixtures import FIXTURES, fixture_from_json, load_fixture
from .lipschitz import VerifyConfig, verify

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _parser():
    p = argparse.ArgumentParser(prog="collar-forge", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--fixture", choices=sorted(FIXTURES), help="fixture name")
        sp.add_argument("--input", help="fixture JSON written by `build` (overrides --fixture)")
        sp.add_argument("--r", type=float, help="circle radius")
        sp.add_argument("--side", type=float, help="square side length")
        sp.add_argument("--n-collars", type=int, help="square: 4 or 8 collars")
        sp.add_argument("--overlap", type=float, help="square: overlap width")
        sp.add_argument("--tilt", type=float, help="strip: shear of the second collar")
        sp.add_argument("--length", type=float, help="net: segment length")
        sp.add_argument("--tau", type=float, help="net: separation")
        sp.add_argument("--order", help="collar enumeration order, comma separated indices")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", help="output path")

    b = sub.add_parser("build", help="build and validate a fixture, write its JSON")
    common(b)
    b.add_argument("--samples", type=int, default=10_000, help="validation sample count")

    v = sub.add_parser("verify", help="measure constants, evaluate bounds, emit a report")
    common(v)
    v.add_argument("--samples", type=int, default=10_000, help="pairs per estimate")
    v.add_argument("--declare", action="append", default=[], metavar="KEY=VAL",
                   help="declare a constant (repeatable); checked against measurement")
    v.add_argument("--emit-quotients", metavar="CSV", help="write every sampled quotient of h")
    v.add_argument("--epsilon", help="also run the bicollar checks at this epsilon ('max' for the largest)")

    t = sub.add_parser("trace", help="export fiber trajectories t -> h(x, t) as CSV")
    common(t)
    t.add_argument("--points", type=int, default=5, help="number of sampled base points")
    t.add_argument("--at", type=float, action="append", default=[], help="arclength parameter of a base point")
    t.add_argument("--t-steps", type=int, default=11, help="grid size on [0, 1] (endpoints included)")
    return p


_PARAMS = {
    "circle": {"r": "r"},
    "square": {"side": "side", "n_collars": "n_collars", "overlap": "overlap"},
    "strip": {"tilt": "tilt"},
    "net": {"length": "length", "tau": "tau"},
}


def _load(args):
    if args.input:
        try:
            with open(args.input) as fh:
                fx = fixture_from_json(json.load(fh))
        except (OSError, json.JSONDecodeError, KeyError) as e:
            raise UsageError(f"cannot read fixture {args.input}: {e}") from e
    else:
        if not args.fixture:
            raise UsageError("--fixture or --input is required")
        params = {k: getattr(args, a) for k, a in _PARAMS[args.fixture].items()}
        fx = load_fixture(args.fixture, **params)
    if args.order:
        try:
            order = [int(s) for s in args.order.split(",")]
        except ValueError as e:
            raise UsageError(f"bad --order {args.order!r}") from e
        if sorted(order) != list(range(len(fx.collars))):
            raise UsageError(f"--order must be a permutation of 0..{len(fx.collars) - 1}")
        fx = fx.with_order(order)
    return fx


def _dump(obj, path):
    text = json.dumps(obj, sort_keys=True, indent=2, default=_jsonable) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not serializable: {type(o).__name__}")


def cmd_build(args):
    fx = _load(args)
    gc = fx.global_collar(n_check=args.samples, seed=args.seed)
    out = fx.to_json()
    out["validation"] = {k: v for k, v in gc.validation_.items()}
    path = args.out or f"{fx.name}.json"
    _dump(out, path)
    print(f"built {fx.name} {json.dumps(fx.params, sort_keys=True)}: {len(fx.collars)} collars, "
          f"validation ok, written to {path}")
    return EXIT_OK


def _declared(fx, pairs):
    declared = dict(fx.declared)
    for item in pairs:
        key, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"--declare expects KEY=VAL, got {item!r}")
        try:
            declared[key.strip()] = float(val)
        except ValueError as e:
            raise UsageError(f"--declare value for {key!r} is not a number") from e
    return declared


def cmd_verify(args):
    fx = _load(args)
    declared = _declared(fx, args.declare)
    cfg = VerifyConfig(n_pairs=args.samples, seed=args.seed, keep_quotients=bool(args.emit_quotients))
    gc = fx.global_collar(seed=args.seed)
    zeta_floor = net_constants(1, declared.get("C", 1.0)).zeta if fx.name == "net" else None
    rep = verify(gc, fx.dom, cfg, declared=declared, zeta_floor=zeta_floor)
    out = rep.to_json()
    out["fixture"] = {"name": fx.name, "params": fx.params}
    passed = rep.passed
    if args.epsilon is not None:
        if fx.charts is None:
            raise UsageError(f"fixture {fx.name!r} has no two-sided charts for --epsilon")
        eps = None if args.epsilon == "max" else _positive(args.epsilon, "--epsilon")
        bic = fx.bicollar(seed=args.seed)
        br = bicollar_report(bic, fx.local_bicollars(), min(fx.delta, 1.0), eps, n_pairs=args.samples,
                             n_cross=max(1, args.samples // 10), seed=args.seed)
        out["bicollar"] = br
        for k, v in br["verdicts"].items():
            out["verdicts"][f"bicollar:{k}"] = v
        passed = passed and all(v["pass"] for v in br["verdicts"].values())
    out["passed"] = passed
    _dump(out, args.out)
    if args.emit_quotients:
        _write_quotients(args.emit_quotients, rep.quotients)
    if not passed:
        for k, v in sorted(out["verdicts"].items()):
            if not v["pass"]:
                wit = out["witnesses"].get(k) or out["witnesses"].get(f"bundle:{k.split(':')[-1]}")
                print(f"FAIL {k}: estimate {v.get('estimate')} vs bound {v.get('bound')}; witness {wit}",
                      file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def _positive(text, flag):
    try:
        v = float(text)
    except ValueError as e:
        raise UsageError(f"{flag} expects a number or 'max'") from e
    if not v > 0:
        raise UsageError(f"{flag} must be positive")
    return v


def _write_quotients(path, quot):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for name, ((P, Q), q) in sorted(quot.items()):
            if name == "L_h":
                d = P.shape[1]
                w.writerow(["quantity"] + [f"p{i}" for i in range(d)] + [f"q{i}" for i in range(d)] + ["quotient"])
            for p, r, v in zip(P, Q, q):
                w.writerow([name, *map(repr, map(float, p)), *map(repr, map(float, r)), repr(float(v))])


def cmd_trace(args):
    fx = _load(args)
    if args.t_steps < 2:
        raise UsageError("--t-steps must be at least 2")
    gc = fx.global_collar(seed=args.seed)
    if args.at:
        x = fx.curve.point_at(np.asarray(args.at, dtype=float))
    else:
        if args.points < 1:
            raise UsageError("--points must be positive")
        x = fx.curve.sample(args.points, args.seed)
    rows = trajectories(gc, x, np.linspace(0.0, 1.0, args.t_steps))
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(["point", "t"] + [f"x{i}" for i in range(rows.shape[1] - 2)])
        for r in rows:
            w.writerow([int(r[0]), *map(repr, map(float, r[1:]))])
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


COMMANDS = {"build": cmd_build, "verify": cmd_verify, "trace": cmd_trace}


def main(argv=None):
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (CollarValidationError, NotACoverError) as e:
        print(f"validation failed: {e}", file=sys.stderr)
        return EXIT_FAIL
    except (ValueError, TypeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
