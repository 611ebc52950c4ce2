"""Command-line driver.

Exit codes: 0 holds/accepted, 1 fails/rejected, 2 inconclusive, 64 usage
errors, 65 parse/spec errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .bounds import DEFAULT_BOUNDS
from .kernel import SessionRole
from .lts import Config, GuardError
from .parser import (ParseError, parse_assertion, parse_expr, parse_formula,
                     parse_process, parse_update)
from .printer import print_assertion, print_formula, print_process
from .predicates import DomainTooLarge, EvalError
from .satisfaction import FAILS, HOLDS, INCONCLUSIVE, check_judgement, sat
from .shuffle import ShuffleError, env_formula, flatten_chains, \
    is_pure_chain_formula, shuffle
from .specfile import SpecError, parse_spec
from .typing_rules import erase, prove_asserted, print_utype, \
    typecheck_unasserted, erase_env

EX_USAGE = 64
EX_PARSE = 65

_VERDICT_EXIT = {HOLDS: 0, FAILS: 1, INCONCLUSIVE: 2}


def _read(arg: str) -> str:
    """Treat the argument as a path when it names a file, as literal text
    otherwise."""
    if os.path.exists(arg):
        with open(arg, encoding="utf-8") as fh:
            return fh.read()
    return arg


def _bounds(args) -> "DEFAULT_BOUNDS.__class__":
    kw = {}
    if getattr(args, "sort_bound", None) is not None:
        kw["sort_bound"] = args.sort_bound
    if getattr(args, "mu_depth", None) is not None:
        kw["mu_depth"] = args.mu_depth
    if getattr(args, "repl_depth", None) is not None:
        kw["repl_depth"] = args.repl_depth
    return DEFAULT_BOUNDS.with_(**kw) if kw else DEFAULT_BOUNDS


def _parse_state(text: str) -> dict:
    sigma = {}
    text = text.strip()
    if not text:
        return sigma
    for part in text.split(","):
        name, _, value = part.partition("=")
        name = name.strip().lstrip("@")
        value = value.strip()
        if not name or not value:
            raise SpecError(f"malformed state entry {part!r}")
        if value in ("true", "false"):
            sigma[name] = value == "true"
        else:
            sigma[name] = int(value)
    return sigma


def _parse_at(text: str) -> SessionRole:
    head, _, rest = text.partition("[")
    role = rest.rstrip("]")
    if not head or not role or not rest.endswith("]"):
        raise SpecError(f"expected s[p], got {text!r}")
    return SessionRole(head, role)


def _emit(args, payload: dict, text_lines: list[str]):
    if getattr(args, "json", False):
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for line in text_lines:
            print(line)


def _cmd_parse(args) -> int:
    text = _read(args.input)
    kinds = ([args.kind] if args.kind != "auto"
             else ["process", "assertion", "formula", "update", "expr"])
    last_err = None
    for kind in kinds:
        try:
            if kind == "assertion":
                out = print_assertion(parse_assertion(text))
            elif kind == "process":
                out = print_process(parse_process(text))
            elif kind == "formula":
                out = print_formula(parse_formula(text))
            elif kind == "update":
                from .printer import print_update
                out = print_update(parse_update(text))
            else:
                from .printer import print_expr
                out = print_expr(parse_expr(text))
        except ParseError as e:
            last_err = e
            continue
        _emit(args, {"kind": kind, "canonical": out}, [out])
        return 0
    raise last_err


def _cmd_embed(args) -> int:
    from .embedding import embed
    a = parse_assertion(_read(args.input))
    phi = embed(a, _parse_at(args.at))
    out = print_formula(phi)
    _emit(args, {"formula": out}, [out])
    return 0


def _cmd_shuffle(args) -> int:
    f1 = parse_formula(_read(args.left))
    f2 = parse_formula(_read(args.right))
    phi = shuffle(f1, f2, _bounds(args))
    if is_pure_chain_formula(phi):
        phi = flatten_chains(phi)
    out = print_formula(phi)
    _emit(args, {"formula": out}, [out])
    return 0


def _cmd_envfml(args) -> int:
    doc = parse_spec(_read(args.spec))
    phi = env_formula(doc.assertion_delta(), doc.gamma, _bounds(args))
    out = print_formula(phi)
    _emit(args, {"formula": out}, [out])
    return 0


def _cmd_check(args) -> int:
    process = parse_process(_read(args.process))
    phi = parse_formula(_read(args.formula))
    sigma = _parse_state(args.state or "")
    verdict = sat(Config.make(process, sigma), phi, _bounds(args))
    payload = verdict.to_json()
    lines = [f"verdict: {verdict.status}"]
    if verdict.witness:
        from .lts import format_action
        lines.append("witness: " +
                     " ".join(format_action(a) for a in verdict.witness))
    _emit(args, payload, lines)
    return _VERDICT_EXIT[verdict.status]


def _cmd_judge(args) -> int:
    doc = parse_spec(_read(args.spec))
    process = parse_process(_read(args.process))
    bounds = _bounds(args)
    delta = doc.assertion_delta()
    unasserted = typecheck_unasserted(process, erase_env(delta),
                                      {a: {r: erase(t) for r, t in tab.items()}
                                       for a, tab in doc.gamma.items()})
    asserted = prove_asserted(doc.precondition, doc.gamma, delta, process,
                              doc.state_domains(), bounds)
    worst = HOLDS
    sigmas = list(doc.sigmas()) or [{}]
    for sigma in sigmas:
        v = check_judgement(doc.precondition, doc.gamma, delta, process,
                            sigma, bounds)
        if v.status == FAILS:
            worst = FAILS
            break
        if v.status == INCONCLUSIVE:
            worst = INCONCLUSIVE
    payload = {"typecheck_unasserted": unasserted,
               "prove_asserted": asserted,
               "check_judgement": worst,
               "states_checked": len(sigmas)}
    lines = [f"typecheck_unasserted: {'accepted' if unasserted else 'rejected'}",
             f"prove_asserted: {'accepted' if asserted else 'rejected'}",
             f"check_judgement: {worst} ({len(sigmas)} states)"]
    _emit(args, payload, lines)
    if worst == FAILS or not unasserted or not asserted:
        return 1
    return _VERDICT_EXIT[worst]


def _cmd_erase(args) -> int:
    a = parse_assertion(_read(args.input))
    out = print_utype(erase(a))
    _emit(args, {"type": out}, [out])
    return 0


def _cmd_rec_embed(args) -> int:
    from .automata import rec_pipeline
    doc = parse_spec(_read(args.spec))
    report = rec_pipeline(doc.delta, _bounds(args))
    counts = {
        "components": [a.n_states for a in report.components],
        "product": report.prod.n_states if report.prod else 0,
        "expanded": report.expanded.n_states if report.expanded else 0,
    }
    out = print_formula(report.formula)
    lines = ["component states: " +
             ",".join(str(n) for n in counts["components"]),
             f"product states: {counts['product']}",
             f"expanded states: {counts['expanded']}",
             out]
    payload = {"formula": out, **counts}
    if args.dump_automata:
        from .report import dump_automata
        written = dump_automata(report, args.dump_automata)
        payload["files"] = written
        lines += [f"wrote {p}" for p in written]
    _emit(args, payload, lines)
    return 0


def _cmd_encode_store(args) -> int:
    from .purehml import encode_store, print_pi
    sigma = _parse_state(args.state)
    out = print_pi(encode_store(sigma))
    _emit(args, {"process": out}, [out])
    return 0


def _cmd_pi_check(args) -> int:
    from .purehml import (PiPar, encode_formula, encode_process, encode_store,
                          pi_sat, print_pi)
    from .shuffle import env_formula as envf
    doc = parse_spec(_read(args.spec))
    process = parse_process(_read(args.process))
    bounds = _bounds(args)
    delta = doc.assertion_delta()
    phi = envf(delta, doc.gamma, bounds)
    store = sorted(d.name for d in doc.states)
    sigma = _parse_state(args.state) if args.state else doc.initial_sigma()
    session_v = sat(Config.make(process, sigma), phi, bounds).status
    pure = encode_formula(phi, store)
    pi_proc = PiPar(encode_process(process, store), encode_store(sigma))
    pure_v = pi_sat(pi_proc, pure, store, bounds)
    agree = (session_v == pure_v or INCONCLUSIVE in (session_v, pure_v))
    payload = {"session_verdict": session_v, "pure_verdict": pure_v,
               "agree": agree, "pi_process": print_pi(pi_proc)}
    lines = [f"session verdict: {session_v}",
             f"pure verdict: {pure_v}",
             f"agreement: {'yes' if agree else 'NO'}"]
    _emit(args, payload, lines)
    if not agree:
        return 1
    return _VERDICT_EXIT[pure_v]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="protocheck",
        description="Compile stateful protocol assertions into modal "
                    "formulae and check processes against them.")
    ap.add_argument("--json", action="store_true",
                    help="emit the report as JSON")
    ap.add_argument("--jobs", type=int, default=1,
                    help="worker processes for batch work (accepted, "
                         "single-invocation commands run serially)")
    ap.add_argument("--sort-bound", type=int, default=None)
    ap.add_argument("--mu-depth", type=int, default=None)
    ap.add_argument("--repl-depth", type=int, default=None)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="echo the canonical form")
    p.add_argument("input")
    p.add_argument("--kind", default="auto",
                   choices=["auto", "assertion", "process", "formula",
                            "update", "expr"])
    p.set_defaults(fn=_cmd_parse)

    p = sub.add_parser("embed", help="compile an assertion at a session-role")
    p.add_argument("input")
    p.add_argument("--at", required=True, metavar="s[p]")
    p.set_defaults(fn=_cmd_embed)

    p = sub.add_parser("shuffle", help="interleave two formulae")
    p.add_argument("left")
    p.add_argument("right")
    p.set_defaults(fn=_cmd_shuffle)

    p = sub.add_parser("envfml", help="environment formula of a SPEC")
    p.add_argument("spec")
    p.set_defaults(fn=_cmd_envfml)

    p = sub.add_parser("check", help="check a process/state against a formula")
    p.add_argument("--process", required=True)
    p.add_argument("--state", default="")
    p.add_argument("--formula", required=True)
    p.set_defaults(fn=_cmd_check)

    p = sub.add_parser("judge", help="full judgement: type checks plus "
                                     "satisfaction over the state domain")
    p.add_argument("--spec", required=True)
    p.add_argument("--process", required=True)
    p.set_defaults(fn=_cmd_judge)

    p = sub.add_parser("erase", help="erase an assertion to a plain type")
    p.add_argument("input")
    p.set_defaults(fn=_cmd_erase)

    p = sub.add_parser("rec-embed", help="recursion pipeline over a SPEC")
    p.add_argument("spec")
    p.add_argument("--dump-automata", metavar="DIR", default=None)
    p.set_defaults(fn=_cmd_rec_embed)

    p = sub.add_parser("encode-store", help="compile a state to a process")
    p.add_argument("state", metavar="STATE", help="e.g. '@x=5,@z=2'")
    p.set_defaults(fn=_cmd_encode_store)

    p = sub.add_parser("pi-check", help="state-free round-trip check")
    p.add_argument("--spec", required=True)
    p.add_argument("--process", required=True)
    p.add_argument("--state", default="")
    p.set_defaults(fn=_cmd_pi_check)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EX_USAGE if e.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (ParseError, SpecError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EX_PARSE
    except (ShuffleError, GuardError, EvalError, DomainTooLarge) as e:
        mod = type(e).__module__.rsplit(".", 1)[-1]
        print(f"error[{mod}]: {e}", file=sys.stderr)
        return EX_USAGE
    except Exception as e:  # pragma: no cover - surfaced for scripting
        print(f"error[{type(e).__name__}]: {e}", file=sys.stderr)
        return EX_USAGE


if __name__ == "__main__":
    sys.exit(main())
