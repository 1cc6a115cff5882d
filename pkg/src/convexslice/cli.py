"""Command-line interface.

Commands: ``solve`` (find the halfspace/sphere/tangent pair of an instance
file), ``check`` (well-separation report), ``oracle`` (planar angle-sweep
verification), ``gen`` (seeded instance generator), ``plot`` (SVG figure).

Exit codes: 0 success, 2 not well separated, 3 no convergence, 4 invalid
input.  Results go to ``--out`` or standard output; diagnostics to standard
error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import (
    ConvexSliceError,
    GenerationFailed,
    NoConvergence,
    NoIntersection,
    NotWellSeparated,
    SchemaError,
    ToleranceUnreachable,
    VerticalSolution,
)
from .instances import (
    KINDS,
    generate_instance,
    parse_instance,
    parse_result,
    run_instance,
    serialize_instance,
    serialize_result,
)
from .oracle import oracle_angle_sweep
from .render import render_svg
from .separation import check_well_separated

EXIT_OK = 0
EXIT_NOT_SEPARATED = 2
EXIT_NO_CONVERGENCE = 3
EXIT_INVALID = 4


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); we reserve 2
        raise _UsageError(message)


def _build_parser() -> _Parser:
    p = _Parser(prog="convexslice",
                description="Slice well-separated convex bodies by a common "
                            "halfspace or sphere with prescribed fractions.")
    sub = p.add_subparsers(dest="command", required=True)

    def add_solver_flags(sp):
        sp.add_argument("--tol", type=float, default=None,
                        help="fraction residual tolerance (default 1e-9)")
        sp.add_argument("--max-iter", type=int, default=None,
                        help="iteration budget per start")
        sp.add_argument("--engine", choices=("fixpoint", "newton", "hybrid"),
                        default=None)
        sp.add_argument("--seed", type=int, default=None,
                        help="solver seed (default 42)")
        sp.add_argument("--multistart", type=int, default=None,
                        help="number of initial directions")

    sp = sub.add_parser("solve", help="solve an instance file")
    sp.add_argument("file")
    add_solver_flags(sp)
    sp.add_argument("--out", default=None)

    sp = sub.add_parser("check", help="well-separation report for an instance")
    sp.add_argument("file")
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--out", default=None)

    sp = sub.add_parser("oracle", help="planar angle-sweep verification")
    sp.add_argument("file")
    sp.add_argument("--grid", type=int, default=4096)
    sp.add_argument("--out", default=None)

    sp = sub.add_parser("gen", help="generate a seeded instance")
    sp.add_argument("kind", choices=KINDS)
    sp.add_argument("--dim", type=int, required=True)
    sp.add_argument("--seed", type=int, default=42)
    sp.add_argument("--mode", choices=("halfspace", "sphere"),
                    default="halfspace")
    sp.add_argument("--out", default=None)

    sp = sub.add_parser("plot", help="render an instance and its result as SVG")
    sp.add_argument("file")
    sp.add_argument("result", nargs="?", default=None)
    sp.add_argument("--out", default=None)
    return p


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _cmd_solve(args) -> int:
    inst = parse_instance(_read(args.file))
    res = run_instance(inst, engine=args.engine, seed=args.seed,
                       tol=args.tol, max_iterations=args.max_iter,
                       multistart=args.multistart)
    _emit(serialize_result(res), args.out)
    return EXIT_OK


def _cmd_check(args) -> int:
    inst = parse_instance(_read(args.file))
    rep = check_well_separated(inst.family, tol=args.tol)
    doc = {"ok": bool(rep.ok), "margin": float(rep.margin),
           "tolerance": float(rep.tolerance),
           "pairs_checked": int(rep.pairs_checked)}
    if rep.witness is not None:
        doc["witness"] = {
            "group_a": [inst.names[i] for i in rep.witness.group_a],
            "group_b": [inst.names[j] for j in rep.witness.group_b],
            "point": list(map(float, rep.witness.point)),
        }
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return EXIT_OK if rep.ok else EXIT_NOT_SEPARATED


def _cmd_oracle(args) -> int:
    inst = parse_instance(_read(args.file))
    if inst.mode != "halfspace":
        raise SchemaError("the oracle covers halfspace instances", field="mode")
    roots = oracle_angle_sweep(inst, grid=args.grid)
    doc = {"count": len(roots),
           "roots": [{"theta": r.theta, "normal": r.normal.tolist(),
                      "offset": r.offset,
                      "orientation_det": r.orientation_det} for r in roots]}
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return EXIT_OK


def _cmd_gen(args) -> int:
    inst = generate_instance(args.dim, args.kind, args.seed, mode=args.mode)
    _emit(serialize_instance(inst), args.out)
    return EXIT_OK


def _cmd_plot(args) -> int:
    inst = parse_instance(_read(args.file))
    res = parse_result(_read(args.result)) if args.result else None
    _emit(render_svg(inst, res), args.out)
    return EXIT_OK


_HANDLERS = {"solve": _cmd_solve, "check": _cmd_check, "oracle": _cmd_oracle,
             "gen": _cmd_gen, "plot": _cmd_plot}


def cli_dispatch(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        return _HANDLERS[args.command](args)
    except NotWellSeparated as exc:
        print(f"not well separated: {exc}", file=sys.stderr)
        if exc.report is not None and exc.report.witness is not None:
            w = exc.report.witness
            print(f"witness: bodies {list(w.group_a)} vs {list(w.group_b)} "
                  f"near {w.point.tolist()}", file=sys.stderr)
        return EXIT_NOT_SEPARATED
    except (NoConvergence, ToleranceUnreachable, VerticalSolution,
            NoIntersection, GenerationFailed) as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except (SchemaError, ConvexSliceError, OSError, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main(argv=None) -> int:
    return cli_dispatch(argv)
