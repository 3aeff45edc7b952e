"""Command-line front end.

Commands: ``space``, ``map``, ``modulus``, ``qc-report``, ``modgrad-scan`` and
``counterexample``.  Exit codes: 0 success, 2 usage or validation error,
3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import curves as C
from .curves import FamilyError
from .maps import (
    RemetrizedMap,
    identity_map,
    load_map,
    modgrad_scan,
    random_remetrization,
    save_map,
    scaling_map,
    snowflake_to_rug,
)
from .modulus import ModulusError, compute_modulus
from .qc import Battery, product_4regular_study, qc_report, scan_csv, snowflake_rug_study
from .space import (
    MeasureSpace,
    SpaceError,
    build_grid,
    build_path,
    build_product_with_interval,
    build_rug,
    build_snowflake,
    load_space,
    random_space,
    space_to_dict,
)

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# family specs


def _ids(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"bad node list {text!r}") from None


def _fields(body: str) -> dict:
    out = {}
    for part in body.split(";"):
        if not part.strip():
            continue
        key, sep, val = part.partition("=")
        if not sep:
            raise UsageError(f"expected key=value, got {part!r}")
        out[key.strip()] = val.strip()
    return out


def _float(fields: dict, key: str, kind: str) -> float:
    if key not in fields:
        raise UsageError(f"{kind} family needs {key}=")
    try:
        return float(fields[key])
    except ValueError:
        raise UsageError(f"{key} must be a number, got {fields[key]!r}") from None


def load_curves(path) -> list[C.Curve]:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read curve file {path}: {exc}") from None
    if isinstance(data, dict):
        data = data.get("curves", [])
    out = []
    for rec in data:
        nodes = rec["nodes"] if isinstance(rec, dict) else rec
        out.append(C.Curve(tuple(int(v) for v in nodes), trivial=len(nodes) == 1))
    return out


def parse_family(spec: str, space: MeasureSpace):
    """Parse ``connect:A=..;B=..``, ``annulus:center=..;r=..;s=..``,
    ``disp:eps=..[;V=..]``, ``explicit:@file.json`` or ``empty``."""
    spec = spec.strip()
    kind, _, body = spec.partition(":")
    if kind == "empty":
        return C.explicit_family([])
    if kind == "explicit":
        if not body.startswith("@"):
            raise UsageError("explicit family needs @file.json")
        curves = load_curves(body[1:])
        for c in curves:
            if not c.trivial:
                c.edge_ids(space)       # validates adjacency
        return C.explicit_family(curves)
    f = _fields(body)
    if kind == "connect":
        if "A" not in f or "B" not in f:
            raise UsageError("connect family needs A= and B=")
        A, B = _ids(f["A"]), _ids(f["B"])
        for v in A + B:
            space._check_node(v)
        return C.connect_family(A, B)
    if kind == "annulus":
        if "center" not in f:
            raise UsageError("annulus family needs center=")
        return C.annular_family(space, int(f["center"]), _float(f, "r", "annulus"),
                                _float(f, "s", "annulus"))
    if kind == "disp":
        V = _ids(f["V"]) if "V" in f else None
        return C.displacement_family(space, _float(f, "eps", "disp"), V)
    raise UsageError(f"unknown family kind {kind!r}")


# ---------------------------------------------------------------------------
# output helpers


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=1, allow_nan=False, default=_jsonable) + "\n"


def _jsonable(x):
    import numpy as np
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, (set, frozenset, tuple)):
        return list(x)
    raise TypeError(f"not serializable: {type(x).__name__}")


def _finite(obj):
    """Replace non-finite floats by strings so JSON stays strict."""
    if isinstance(obj, float) and obj != obj:
        return "nan"
    if isinstance(obj, float) and obj in (float("inf"), float("-inf")):
        return "inf" if obj > 0 else "-inf"
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([f"{x:.12g}" if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def _solver(args) -> dict:
    kw = {"tol_sep": args.tol_sep, "tol_gap": args.tol_gap}
    if args.max_iter is not None:
        kw["max_iterations"] = args.max_iter
    return kw


def _load_map(args) -> RemetrizedMap:
    if args.map:
        return load_map(args.map)
    if args.x and args.y:
        return RemetrizedMap(load_space(args.x), load_space(args.y))
    raise UsageError("give --map FILE or both --x and --y space files")


# ---------------------------------------------------------------------------
# commands


def _build_space(args) -> MeasureSpace:
    name = args.builder
    if name == "grid":
        return build_grid(args.n, args.side, args.alpha)
    if name == "snowflake":
        return build_snowflake(args.n, args.side)
    if name == "rug":
        return build_rug(args.n, args.side)
    if name == "path":
        return build_path(args.n, args.length, args.mu)
    if name == "random":
        return random_space(args.n, args.extra, args.seed)
    if name == "product":
        base = {"grid": lambda: build_grid(args.n, args.side, args.alpha),
                "snowflake": lambda: build_snowflake(args.n, args.side),
                "rug": lambda: build_rug(args.n, args.side)}[args.base]()
        return build_product_with_interval(base, args.m or args.n, args.length, args.q)
    raise UsageError(f"unknown builder {name!r}")


def cmd_space(args) -> int:
    S = _build_space(args)
    summary = (f"nodes={S.n_nodes} edges={S.n_edges} "
               f"total_measure={S.total_measure:.12g}\n")
    text = _json(space_to_dict(S))
    if args.out:
        Path(args.out).write_text(text)
        sys.stdout.write(summary)
    else:
        sys.stdout.write(text)
        sys.stderr.write(summary)
    return EXIT_OK


def cmd_map(args) -> int:
    kind = args.kind
    if kind == "snowflake-rug":
        f = snowflake_to_rug(args.n, args.side)
    else:
        if not args.space:
            raise UsageError(f"map {kind} needs --space FILE")
        S = load_space(args.space)
        if kind == "identity":
            f = identity_map(S)
        elif kind == "scale":
            f = scaling_map(S, args.c, args.q)
        else:
            f = random_remetrization(S, args.seed, args.spread)
    from .maps import map_to_dict
    text = _json(map_to_dict(f))
    if args.out:
        Path(args.out).write_text(text)
        sys.stdout.write(f"nodes={f.n_nodes} edges={f.n_edges}\n")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_modulus(args) -> int:
    S = load_space(args.space)
    fam = parse_family(args.family, S)
    res = compute_modulus(S, fam, args.p, **_solver(args))
    if args.format == "csv":
        rows = [(int(u), int(v), float(r)) for (u, v), r in zip(S.edges.tolist(), res.density)]
        _emit(_csv(rows, ("u", "v", "rho")), args.out)
    else:
        _emit(_json(_finite(res.to_dict(S))), args.out)
    return EXIT_OK if res.converged else EXIT_NUMERIC


def _battery_from_file(path, f: RemetrizedMap, Q, seed, solver) -> Battery:
    try:
        specs = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read battery {path}: {exc}") from None
    if isinstance(specs, dict):
        specs = specs.get("families", [])
    return Battery([(s, parse_family(s, f.X)) for s in specs], Q, seed, solver)


def cmd_qc_report(args) -> int:
    f = _load_map(args)
    solver = _solver(args)
    battery = None
    if args.battery:
        battery = _battery_from_file(args.battery, f, args.Q, args.seed, solver)
    rep = qc_report(f, args.Q, battery, lam=args.lam, seed=args.seed, jobs=args.jobs,
                    conditions=not args.no_conditions, scan=args.scan, **solver)
    if args.format == "csv":
        if rep.condition_III is None:
            raise UsageError("csv output needs the condition tables (drop --no-conditions)")
        _emit(scan_csv(rep.condition_III.scan(), ("r", "condition_III")), args.out)
    else:
        _emit(_json(_finite(rep.to_dict())), args.out)
    sys.stderr.write(rep.verdicts["summary"] + "\n")
    return EXIT_OK if rep.verdicts["converged"] else EXIT_NUMERIC


def cmd_modgrad_scan(args) -> int:
    f = _load_map(args)
    eps = [float(e) for e in args.eps.split(",")] if args.eps else None
    res = modgrad_scan(f, args.p, eps, **_solver(args))
    for e in res.dropped:
        sys.stderr.write(f"note: eps={e:.12g} below the edge floor, row omitted\n")
    if args.format == "json":
        _emit(_json(_finite(res.to_dict())), args.out)
    else:
        rows = [(r.eps, r.value, res.energy) for r in res.rows]
        rows.append((0.0, res.energy, res.energy))   # the eps -> 0 reference
        _emit(_csv(rows, ("eps", "scan", "energy")), args.out)
    return EXIT_OK if res.converged else EXIT_NUMERIC


def cmd_counterexample(args) -> int:
    ns = _ids(args.n)
    if not ns:
        raise UsageError("--n needs at least one resolution")
    solver = _solver(args)
    if args.variant == "snowflake-rug":
        out = snowflake_rug_study(ns, args.Q or 3.0, **solver)
        cols = ("n", "mod_X", "mod_Y", "forward_ratio", "inverse_ratio")
    else:
        out = product_4regular_study(ns, args.Q or 4.0, **solver)
        cols = ("n", "mod_X", "mod_Y", "fubini_X", "fubini_Y")
    if args.format == "csv":
        rows = [tuple(float(r[c]) if c != "n" else r[c] for c in cols) for r in out["rows"]]
        _emit(_csv(rows, cols), args.out)
    else:
        _emit(_json(_finite(out)), args.out)
    if out["verdict"]:
        sys.stderr.write(f"verdict: {out['verdict']}\n")
    return EXIT_OK if all(r["converged"] for r in out["rows"]) else EXIT_NUMERIC


# ---------------------------------------------------------------------------
# parser


def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=d(0))
    p.add_argument("--tol-sep", type=float, default=d(1e-6))
    p.add_argument("--tol-gap", type=float, default=d(1e-6))
    p.add_argument("--max-iter", type=int, default=d(None))
    p.add_argument("--jobs", type=int, default=d(1))
    p.add_argument("--out", default=d(None))
    p.add_argument("--format", choices=("json", "csv"), default=d(None))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qcmod", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("space", parents=[common], help="build a space and write its JSON")
    sp.add_argument("builder", choices=("grid", "snowflake", "rug", "product", "path", "random"))
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--side", type=float, default=1.0)
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.add_argument("--m", type=int, default=None, help="product: interval subdivisions")
    sp.add_argument("--length", type=float, default=1.0,
                    help="product: interval length; path: edge length")
    sp.add_argument("--base", choices=("grid", "snowflake", "rug"), default="grid")
    sp.add_argument("--q", type=float, default=None, help="product: nominal dimension")
    sp.add_argument("--mu", type=float, default=1.0, help="path: node measure")
    sp.add_argument("--extra", type=int, default=0, help="random: extra chords")
    sp.set_defaults(run=cmd_space)

    mp = sub.add_parser("map", parents=[common], help="build a remetrized map")
    mp.add_argument("kind", choices=("identity", "scale", "random", "snowflake-rug"))
    mp.add_argument("--space", default=None)
    mp.add_argument("--n", type=int, default=8)
    mp.add_argument("--side", type=float, default=1.0)
    mp.add_argument("--c", type=float, default=2.0)
    mp.add_argument("--q", type=float, default=None)
    mp.add_argument("--spread", type=float, default=4.0)
    mp.set_defaults(run=cmd_map)

    mo = sub.add_parser("modulus", parents=[common], help="p-modulus of a curve family")
    mo.add_argument("--space", required=True)
    mo.add_argument("--family", required=True)
    mo.add_argument("--p", type=float, required=True)
    mo.set_defaults(run=cmd_modulus)

    qr = sub.add_parser("qc-report", parents=[common], help="dilatations and condition checks")
    qr.add_argument("--map", default=None)
    qr.add_argument("--x", default=None)
    qr.add_argument("--y", default=None)
    qr.add_argument("--Q", type=float, required=True)
    qr.add_argument("--battery", default=None)
    qr.add_argument("--lambda", dest="lam", type=float, default=2.0)
    qr.add_argument("--scan", action="store_true")
    qr.add_argument("--no-conditions", action="store_true")
    qr.set_defaults(run=cmd_qc_report)

    ms = sub.add_parser("modgrad-scan", parents=[common], help="eps^p Mod(f^-1(Gamma_eps)) scan")
    ms.add_argument("--map", default=None)
    ms.add_argument("--x", default=None)
    ms.add_argument("--y", default=None)
    ms.add_argument("--p", type=float, required=True)
    ms.add_argument("--eps", default=None, help="comma-separated eps list")
    ms.set_defaults(run=cmd_modgrad_scan)

    ce = sub.add_parser("counterexample", parents=[common], help="one-sidedness studies")
    ce.add_argument("variant", choices=("snowflake-rug", "product-4regular"))
    ce.add_argument("--n", default="8,16")
    ce.add_argument("--Q", type=float, default=None)
    ce.set_defaults(run=cmd_counterexample)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = "csv" if args.command == "modgrad-scan" else "json"
    try:
        return args.run(args)
    except BrokenPipeError:
        # reader went away (e.g. piped into head); not an error of ours
        sys.stderr.close()
        return 0
    except (UsageError, SpaceError, FamilyError, ModulusError, ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
