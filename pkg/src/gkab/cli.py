"""Command-line frontend: parse an instance, run one pipeline stage, report.

Exit codes: 0 = success / property holds, 1 = property fails,
2 = usage or parse/validation error, 3 = resource limit hit.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import bisim, kb, mucalc, repairs, translations
from .actions import build_ts_skab
from .errors import (CombinatorialLimit, GkabError, ParseError, RewriteBlowup,
                     RunBoundExceeded, StateLimitExceeded, ValidationError)
from .golog import build_ts_gkab
from .parser import (Instance, instance_from_gkab, instance_from_kab,
                     parse_instance_file, serialize_instance)
from .ts import Limits, TransitionSystem

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_LIMIT = 3

_LIMIT_ERRORS = (StateLimitExceeded, RunBoundExceeded, CombinatorialLimit,
                 RewriteBlowup)


def _add_common(sub):
    sub.add_argument("instance", help="instance file")
    sub.add_argument("--max-states", type=int, default=100_000)
    sub.add_argument("--max-run-adom", type=int, default=None)
    sub.add_argument("--json", dest="json_out", default=None,
                     help="write a JSON report to this file")
    sub.add_argument("--seed", type=int, default=0,
                     help="reserved for deterministic fresh-constant schemes")
    sub.add_argument("--dump-ts", default=None, help="write the built TS as JSON")
    sub.add_argument("--dot", default=None, help="write the built TS as DOT")
    sub.add_argument("--allow-reserved", action="store_true",
                     help="accept reserved (translated) vocabulary in the instance")


def build_arg_parser():
    ap = argparse.ArgumentParser(prog="gkab",
                                 description="GKAB verification toolkit")
    sp = ap.add_subparsers(dest="command", required=True)

    s = sp.add_parser("check-consistency", help="is the initial ABox T-consistent?")
    _add_common(s)

    s = sp.add_parser("repairs", help="repairs of the initial ABox")
    _add_common(s)
    s.add_argument("--kind", choices=["b", "c"], required=True)

    s = sp.add_parser("evolve", help="bold evolution of the initial ABox")
    _add_common(s)
    s.add_argument("--add", default="", help="facts to add, e.g. 'N1(a); P(a,b)'")
    s.add_argument("--del", dest="dele", default="", help="facts to delete")

    s = sp.add_parser("build-ts", help="build the explicit transition system")
    _add_common(s)
    s.add_argument("--semantics", choices=["s", "b", "c", "e"], default="s")
    s.add_argument("--as-kab", action="store_true",
                   help="use the condition-action process (standard semantics only)")

    s = sp.add_parser("compile", help="translate the instance")
    _add_common(s)
    s.add_argument("--to", dest="target", required=True,
                   choices=["sgkab-from-skab", "sgkab-from-b", "sgkab-from-c",
                            "sgkab-from-e", "skab"])
    s.add_argument("-o", "--output", default=None,
                   help="write the translated instance here (default stdout)")

    s = sp.add_parser("verify", help="model-check a named formula")
    _add_common(s)
    s.add_argument("--semantics", choices=["s", "b", "c", "e"], default="s")
    s.add_argument("--as-kab", action="store_true")
    s.add_argument("--formula", required=True)

    s = sp.add_parser("bisim", help="compare two dumped transition systems")
    s.add_argument("--kind", choices=["e", "j", "l", "s"], required=True)
    s.add_argument("--left", required=True, help="TS JSON file")
    s.add_argument("--right", required=True, help="TS JSON file")
    s.add_argument("--json", dest="json_out", default=None)

    s = sp.add_parser("translate-formula", help="print a translated formula")
    _add_common(s)
    s.add_argument("--kind", choices=["b", "d", "j"], required=True)
    s.add_argument("--formula", required=True)
    return ap


def _limits(args) -> Limits:
    return Limits(max_states=args.max_states, max_run_adom=args.max_run_adom)


def _report(args, payload: dict):
    if getattr(args, "json_out", None):
        with open(args.json_out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _dump_ts(args, ts: TransitionSystem):
    if getattr(args, "dump_ts", None):
        with open(args.dump_ts, "w", encoding="utf-8") as fh:
            json.dump(ts.to_json(), fh, indent=2)
            fh.write("\n")
    if getattr(args, "dot", None):
        with open(args.dot, "w", encoding="utf-8") as fh:
            fh.write(ts.to_dot())
            fh.write("\n")


def _build(inst: Instance, semantics: str, as_kab: bool, limits: Limits):
    if as_kab:
        if semantics != "s":
            raise ValidationError("--as-kab only supports the standard semantics")
        return build_ts_skab(inst.to_kab(), inst.service, limits)
    return build_ts_gkab(inst.to_gkab(), semantics.upper(), inst.service, limits)


def _parse_fact_list(inst: Instance, text: str):
    from .ts import parse_fact
    facts = set()
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        f = parse_fact(chunk.replace(" ", ""))
        if not inst.tbox.declares(f.pred):
            raise ValidationError(f"undeclared predicate in fact {chunk!r}")
        facts.add(f)
    return frozenset(facts)


def _cmd_check_consistency(args):
    inst = parse_instance_file(args.instance, args.allow_reserved)
    ok = kb.is_consistent(inst.tbox, inst.abox0)
    print(f"consistent: {str(ok).lower()}")
    _report(args, {"command": "check-consistency", "consistent": ok})
    return EXIT_OK if ok else EXIT_FAIL


def _cmd_repairs(args):
    inst = parse_instance_file(args.instance, args.allow_reserved)
    if args.kind == "b":
        reps = repairs.b_repairs(inst.tbox, inst.abox0)
    else:
        reps = [repairs.c_repair(inst.tbox, inst.abox0)]
    listed = [sorted(str(f) for f in r) for r in reps]
    for i, r in enumerate(listed):
        print(f"repair {i}: {{{', '.join(r)}}}")
    _report(args, {"command": "repairs", "kind": args.kind, "repairs": listed})
    return EXIT_OK


def _cmd_evolve(args):
    inst = parse_instance_file(args.instance, args.allow_reserved)
    fplus = _parse_fact_list(inst, args.add)
    fminus = _parse_fact_list(inst, args.dele)
    result = repairs.evolve(inst.tbox, inst.abox0, fplus, fminus)
    listed = sorted(str(f) for f in result)
    print(f"evolved: {{{', '.join(listed)}}}")
    _report(args, {"command": "evolve", "result": listed})
    return EXIT_OK


def _cmd_build_ts(args):
    inst = parse_instance_file(args.instance, args.allow_reserved)
    ts = _build(inst, args.semantics, args.as_kab, _limits(args))
    print(f"states: {len(ts)}")
    print(f"edges: {sum(len(v) for v in ts.edges.values())}")
    _dump_ts(args, ts)
    _report(args, {"command": "build-ts", "semantics": args.semantics,
                   "states": len(ts),
                   "edges": sum(len(v) for v in ts.edges.values()),
                   "ts": ts.to_json()})
    return EXIT_OK


def _cmd_compile(args):
    inst = parse_instance_file(args.instance, args.allow_reserved)
    formulas = dict(inst.formulas)
    if args.target == "sgkab-from-skab":
        out = instance_from_gkab(translations.tkabs(inst.to_kab()), inst.service,
                                 formulas)
    elif args.target == "sgkab-from-b":
        out = instance_from_gkab(translations.tgkabb(inst.to_gkab()), inst.service,
                                 {n: translations.tforb(translations.nnf(f))
                                  for n, f in formulas.items()})
    elif args.target == "sgkab-from-c":
        out = instance_from_gkab(translations.tgkabc(inst.to_gkab()), inst.service,
                                 {n: translations.tford(f) for n, f in formulas.items()})
    elif args.target == "sgkab-from-e":
        out = instance_from_gkab(translations.tgkabe(inst.to_gkab()), inst.service,
                                 {n: translations.tford(f) for n, f in formulas.items()})
    else:  # skab
        out = instance_from_kab(translations.tgkab(inst.to_gkab()), inst.service,
                                {n: translations.tforj(translations.nnf(f))
                                 for n, f in formulas.items()})
    text = serialize_instance(out)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    _report(args, {"command": "compile", "to": args.target})
    return EXIT_OK


def _cmd_verify(args):
    inst = parse_instance_file(args.instance, args.allow_reserved)
    if args.formula not in inst.formulas:
        raise ValidationError(f"no formula named {args.formula!r}")
    ts = _build(inst, args.semantics, args.as_kab, _limits(args))
    holds = mucalc.model_check(ts, inst.formulas[args.formula],
                               allow_markers=args.allow_reserved)
    print(f"{args.formula}: {str(holds).lower()}")
    _dump_ts(args, ts)
    _report(args, {"command": "verify", "formula": args.formula,
                   "semantics": args.semantics, "holds": holds})
    return EXIT_OK if holds else EXIT_FAIL


def _cmd_bisim(args):
    with open(args.left, "r", encoding="utf-8") as fh:
        left = TransitionSystem.from_json(json.load(fh))
    with open(args.right, "r", encoding="utf-8") as fh:
        right = TransitionSystem.from_json(json.load(fh))
    fn = {"e": bisim.e_bisimilar, "j": bisim.j_bisimilar,
          "l": bisim.l_bisimilar, "s": bisim.s_bisimilar}[args.kind]
    ok = fn(left, right)
    print(f"{args.kind}-bisimilar: {str(ok).lower()}")
    _report(args, {"command": "bisim", "kind": args.kind, "bisimilar": ok})
    return EXIT_OK if ok else EXIT_FAIL


def _cmd_translate_formula(args):
    inst = parse_instance_file(args.instance, args.allow_reserved)
    if args.formula not in inst.formulas:
        raise ValidationError(f"no formula named {args.formula!r}")
    f = inst.formulas[args.formula]
    if args.kind == "b":
        out = translations.tforb(translations.nnf(f))
    elif args.kind == "d":
        out = translations.tford(f)
    else:
        out = translations.tforj(translations.nnf(f))
    print(str(out))
    _report(args, {"command": "translate-formula", "kind": args.kind,
                   "formula": args.formula, "result": str(out)})
    return EXIT_OK


_COMMANDS = {
    "check-consistency": _cmd_check_consistency,
    "repairs": _cmd_repairs,
    "evolve": _cmd_evolve,
    "build-ts": _cmd_build_ts,
    "compile": _cmd_compile,
    "verify": _cmd_verify,
    "bisim": _cmd_bisim,
    "translate-formula": _cmd_translate_formula,
}


def main(argv=None) -> int:
    ap = build_arg_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return _COMMANDS[args.command](args)
    except _LIMIT_ERRORS as exc:
        print(f"limit: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GkabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
