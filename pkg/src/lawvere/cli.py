"""Command line: check, signature, construct, dot.

Exit status: 0 computed and the oracle passed (or is not applicable),
1 oracle failure or a failed construction, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .algebra import AlgebraError
from .catfile import ParseError, parse
from .conditions import Budget, maltsev_signature
from .report import FAIL, dumps, emit_dot, load_report, run_battery, witness_of
from .spanclass import ALL, RELATIONS, STRONG, SpanClass, dump_custom, load_custom

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _load(path: str):
    text = _read(path)
    return text, parse(text).build()


def _class(spec: str, cat) -> SpanClass:
    kinds = {"all": ALL, "relations": RELATIONS, "strong-relations": STRONG}
    if spec in kinds:
        return SpanClass(kinds[spec])
    if spec.startswith("custom:"):
        try:
            return load_custom(spec[len("custom:"):], cat)
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise InputError(f"bad custom class file: {exc}") from None
    raise InputError(f"unknown class {spec!r} (all, relations, strong-relations, custom:<file>)")


def cmd_check(args) -> int:
    text, cat = _load(args.input)
    cls = _class(args.cls, cat)
    budget = Budget(structures=args.max_structures, candidates=args.max_candidates)
    try:
        report = run_battery(text, cls, args.conditions, args.bound, args.jobs, budget, args.timing)
    except KeyError as exc:
        raise InputError(str(exc.args[0])) from None
    body = dumps(report)
    if args.report:
        Path(args.report).write_text(body)
    else:
        sys.stdout.write(body)
    out = sys.stderr if not args.report else sys.stdout
    for r in report["conditions"]:
        v = {True: "true", False: "false", None: "unknown"}[r["verdict"]]
        print(f"{r['condition']:7s} {v}", file=out)
    print(f"oracle: {report['oracle']['verdict']}", file=out)
    return EXIT_FAIL if report["oracle"]["verdict"] == FAIL else EXIT_OK


def cmd_signature(args) -> int:
    _, cat = _load(args.input)
    sig = maltsev_signature(cat, args.bound)
    doc = dump_custom(sig)
    doc["count"] = len(sig.spans)
    text = json.dumps(doc, indent=1) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_construct(args) -> int:
    from .algebra import Hom, product
    from .structures import (
        ReflexiveGraph,
        groupoid_from_pregroupoid,
        pregroupoid_structures,
        validate_groupoid,
        validate_pregroupoid,
    )

    _, cat = _load(args.input)
    X = cat.by_name.get(args.graph)
    if X is None:
        raise InputError(f"no object named {args.graph!r} (have {sorted(cat.by_name)})")
    # the pair graph on X: arrows (a, b) from b to a
    XX = product(X, X)
    pi1, pi2 = XX.projections
    diag = Hom(X, XX.algebra, tuple(XX.index((x, x)) for x in range(X.size)))
    g = ReflexiveGraph(pi2, pi1, diag)
    ps = pregroupoid_structures(g.span, limit=2)
    doc: dict = {"graph": args.graph, "arrows": [list(t) for t in XX.tuples], "pregroupoids": len(ps)}
    if not ps:
        doc["error"] = "no pregroupoid on the pair graph"
        print(json.dumps(doc))
        return EXIT_FAIL
    p = ps[0]
    if args.what == "pregroupoid":
        v = validate_pregroupoid(g.span, p)
        doc.update(p=np.asarray(p).tolist(), unique=len(ps) == 1, valid=bool(v.ok))
    else:
        try:
            grp = groupoid_from_pregroupoid(g, p)
        except AlgebraError as exc:
            doc["error"] = str(exc)
            print(json.dumps(doc))
            return EXIT_FAIL
        v = validate_groupoid(g, grp.m, grp.i)
        composable = [list(t) for t in g.c2.sub.tuples]
        doc.update(composable=composable, m=np.asarray(grp.m).tolist(), i=np.asarray(grp.i).tolist(),
                   valid=bool(v.ok))
    print(json.dumps(doc))
    return EXIT_OK if doc["valid"] else EXIT_FAIL


def cmd_dot(args) -> int:
    try:
        report = load_report(args.report)
        w = witness_of(report, args.witness)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read report: {exc}") from None
    except KeyError as exc:
        raise InputError(str(exc.args[0])) from None
    if w is None:
        raise InputError(f"condition {args.witness} has no witness")
    text = emit_dot(w, args.witness)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lawvere", description="Check the relative Lawvere condition on finite categories.")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="run the condition battery")
    c.add_argument("--input", required=True)
    c.add_argument("--class", dest="cls", default="all")
    c.add_argument("--conditions", default="all")
    c.add_argument("--bound", type=int, default=None)
    c.add_argument("--report", default=None)
    c.add_argument("--jobs", type=int, default=1)
    c.add_argument("--timing", action="store_true", help="record per-condition timings in the report")
    c.add_argument("--max-structures", type=int, default=Budget.structures)
    c.add_argument("--max-candidates", type=int, default=Budget.candidates)
    c.set_defaults(func=cmd_check)

    s = sub.add_parser("signature", help="spans all of whose dikites are admissible")
    s.add_argument("--input", required=True)
    s.add_argument("--bound", type=int, default=None)
    s.add_argument("--output", default=None)
    s.set_defaults(func=cmd_signature)

    k = sub.add_parser("construct", help="build a pregroupoid or groupoid on the pair graph of an object")
    k.add_argument("--input", required=True)
    k.add_argument("--what", choices=["groupoid", "pregroupoid"], required=True)
    k.add_argument("--graph", required=True, help="object X; the pair graph on X is used")
    k.set_defaults(func=cmd_construct)

    d = sub.add_parser("dot", help="render a witness from a report")
    d.add_argument("--report", required=True)
    d.add_argument("--witness", required=True, help="condition id")
    d.add_argument("--output", default=None)
    d.set_defaults(func=cmd_dot)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (InputError, ParseError, AlgebraError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
