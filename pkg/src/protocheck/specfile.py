"""The SPEC document: one text file bundling a judgement's precondition,
state-variable domains, shared-channel environment and session environment.

Format, one entry per ``keyword:`` occurrence (entries may span lines until
the next keyword; ``#`` starts a comment)::

    precondition: @x > 10
    state: @x: Int = 0 .. 31
    gamma: a -> { p: <assertion> }
    delta: s[p]: <assertion>

A ``delta`` entry may also carry a formula (e.g. ``mu X. [1][2] X``) for the
recursion pipeline, which interleaves formulae rather than assertions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .kernel import (
    BoolLit, BoolSort, IntSort, LocalAssertion, NatSort,
    Predicate, SessionRole, Sort, VirtualState,
)
from .parser import ParseError, Parser, parse_assertion, parse_expr, \
    parse_formula


class SpecError(Exception):
    pass


@dataclass(frozen=True)
class StateDecl:
    name: str
    sort: Sort
    lo: int
    hi: int

    def domain(self) -> list:
        if isinstance(self.sort, BoolSort):
            return [False, True]
        return list(range(self.lo, self.hi + 1))


@dataclass
class SpecDoc:
    precondition: Predicate = field(default_factory=lambda: BoolLit(True))
    states: list[StateDecl] = field(default_factory=list)
    gamma: dict[str, dict[str, LocalAssertion]] = field(default_factory=dict)
    delta: dict[SessionRole, "LocalAssertion | Formula"] = field(default_factory=dict)

    def state_domains(self) -> dict[str, Sort]:
        return {d.name: d.sort for d in self.states}

    def sigmas(self, cap: int = 4096):
        """Every state over the declared domains, in declaration order."""
        names = [d.name for d in self.states]
        domains = [d.domain() for d in self.states]
        total = 1
        for dom in domains:
            total *= len(dom)
        if total > cap:
            raise SpecError(f"state domain has {total} points, cap is {cap}")
        for combo in itertools.product(*domains):
            yield dict(zip(names, combo))

    def initial_sigma(self) -> VirtualState:
        return {d.name: d.domain()[0] for d in self.states}

    def assertion_delta(self) -> dict[SessionRole, LocalAssertion]:
        out = {}
        for sr, entry in self.delta.items():
            if not isinstance(entry, LocalAssertion):
                raise SpecError(
                    f"delta entry for {sr} is a formula; this operation "
                    f"needs assertions")
            out[sr] = entry
        return out


_KEYWORDS = ("precondition:", "state:", "gamma:", "delta:")


def _entries(text: str):
    current: tuple[str, list[str]] | None = None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        stripped = line.strip()
        matched = next((k for k in _KEYWORDS if stripped.startswith(k)), None)
        if matched:
            if current:
                yield current[0], " ".join(current[1])
            rest = stripped[len(matched):].strip()
            current = (matched[:-1], [rest] if rest else [])
        elif current:
            current[1].append(stripped)
        else:
            raise SpecError(f"text before the first section: {stripped!r}")
    if current:
        yield current[0], " ".join(current[1])


def _parse_state(text: str) -> StateDecl:
    p = Parser(text, strict_vars=False)
    p.expect("@")
    name = p.ident("state variable")
    p.expect(":")
    sort = p.parse_sort()
    if isinstance(sort, BoolSort):
        p.done()
        return StateDecl(name, sort, 0, 1)
    p.expect("=")
    lo = _int(p)
    p.expect(".")
    p.expect(".")
    hi = _int(p)
    p.done()
    if hi < lo:
        raise SpecError(f"empty domain for @{name}")
    bound = max(abs(lo), hi + 1)
    refined = NatSort(hi + 1) if lo >= 0 else IntSort(bound)
    return StateDecl(name, refined, lo, hi)


def _int(p: Parser) -> int:
    neg = p.accept("-")
    t = p.peek()
    if t.kind != "INT":
        raise SpecError(f"expected an integer, found {t.text!r}")
    p.next()
    return -int(t.text) if neg else int(t.text)


def _parse_gamma(text: str) -> tuple[str, dict[str, LocalAssertion]]:
    head, _, body = text.partition("->")
    shared = head.strip()
    if not shared or not body.strip():
        raise SpecError(f"malformed gamma entry: {text!r}")
    body = body.strip()
    if not (body.startswith("{") and body.endswith("}")):
        raise SpecError(f"gamma table must be braced: {text!r}")
    table = {}
    for part in _split_semis(body[1:-1]):
        role, _, assertion = part.partition(":")
        role = role.strip()
        if not role or not assertion.strip():
            raise SpecError(f"malformed gamma role entry: {part!r}")
        table[role] = parse_assertion(assertion)
    return shared, table


def _split_semis(text: str):
    """Split on top-level semicolons (braces nest inside assertions)."""
    depth = 0
    buf = []
    for ch in text:
        if ch in "{[(":
            depth += 1
        elif ch in "}])":
            depth -= 1
        if ch == ";" and depth == 0:
            yield "".join(buf)
            buf = []
        else:
            buf.append(ch)
    if "".join(buf).strip():
        yield "".join(buf)


def _parse_delta(text: str) -> tuple[SessionRole, "LocalAssertion | Formula"]:
    p = Parser(text, strict_vars=False)
    try:
        session = p.ident("session name")
        p.expect("[")
        t = p.peek()
        if t.kind not in ("IDENT", "INT"):
            raise SpecError(f"expected a role, found {t.text!r}")
        role = p.next().text
        p.expect("]")
        p.expect(":")
    except ParseError as err:
        raise SpecError(f"malformed delta head: {err}") from err
    rest_start = p.pos
    rest = _token_text(text, p, rest_start)
    try:
        entry: "LocalAssertion | Formula" = parse_assertion(rest)
    except ParseError:
        entry = parse_formula(rest)
    return SessionRole(session, role), entry


def _token_text(text: str, p: Parser, start: int) -> str:
    tok = p.toks[start]
    # Recover the raw remainder from the first unconsumed token onward.
    lines = text.splitlines()
    line = lines[tok.line - 1]
    out = [line[tok.col - 1:]]
    out.extend(lines[tok.line:])
    return "\n".join(out)


def parse_spec(text: str) -> SpecDoc:
    doc = SpecDoc()
    seen_pre = False
    for kind, body in _entries(text):
        if kind == "precondition":
            if seen_pre:
                raise SpecError("multiple precondition entries")
            doc.precondition = parse_expr(body)
            seen_pre = True
        elif kind == "state":
            decl = _parse_state(body)
            if any(d.name == decl.name for d in doc.states):
                raise SpecError(f"duplicate state variable @{decl.name}")
            doc.states.append(decl)
        elif kind == "gamma":
            shared, table = _parse_gamma(body)
            if shared in doc.gamma:
                raise SpecError(f"duplicate gamma entry for {shared}")
            doc.gamma[shared] = table
        elif kind == "delta":
            sr, entry = _parse_delta(body)
            if sr in doc.delta:
                raise SpecError(f"duplicate delta entry for {sr}")
            doc.delta[sr] = entry
    return doc


def load_spec(path: str) -> SpecDoc:
    with open(path, encoding="utf-8") as fh:
        return parse_spec(fh.read())
