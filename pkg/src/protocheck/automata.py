"""Recursive formulae as finite automata over modality packets.

A recursive formula in packet form is a rooted directed automaton: one state
per syntactic point, one transition per packet, back-edges for recursion
variables.  Interleaving recursive formulae is then the asynchronous product
of their automata; translating back to a formula requires first expanding
the product into branch form, where forward edges form a tree and back-edges
only target ancestors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .bounds import Bounds, DEFAULT_BOUNDS
from .kernel import (
    Conj, Formula, FVar, LabelPat, LocalAssertion, Mu, Must,
    SessionRole, Tru, conj, )
from .shuffle import Packet, extract_packet


class AutomatonError(Exception):
    pass


@dataclass(frozen=True)
class AEdge:
    src: int
    label: str
    dst: int


@dataclass
class PacketAutomaton:
    n_states: int
    initial: int
    edges: list[AEdge]
    # One representative packet per label, used to rebuild formulae; plain
    # label automata (no packets) rebuild as bare label modalities.
    packets: dict[str, Packet] = field(default_factory=dict)

    def __post_init__(self):
        seen: dict[tuple[int, str], int] = {}
        for e in self.edges:
            if not (0 <= e.src < self.n_states and 0 <= e.dst < self.n_states):
                raise AutomatonError(f"edge {e} out of range")
            if (e.src, e.label) in seen:
                raise AutomatonError(
                    f"nondeterministic on label {e.label!r} at state {e.src}")
            seen[(e.src, e.label)] = e.dst

    def succ(self, s: int) -> list[AEdge]:
        return [e for e in self.edges if e.src == s]

    def labels(self) -> set[str]:
        return {e.label for e in self.edges}

    def reachable(self) -> set[int]:
        seen = {self.initial}
        todo = [self.initial]
        while todo:
            s = todo.pop()
            for e in self.succ(s):
                if e.dst not in seen:
                    seen.add(e.dst)
                    todo.append(e.dst)
        return seen


def rebuild_edge(a: PacketAutomaton, label: str, cont: Formula) -> Formula:
    p = a.packets.get(label)
    if p is not None:
        return p.rebuild(cont)
    return Must(LabelPat(label.strip("[]")), cont)


# ---------------------------------------------------------------------------
# Formula -> automaton

def formula_to_automaton(phi: Formula) -> PacketAutomaton:
    """One state per syntactic point between modalities or at a recursion
    binder; recursion variables become back-edges."""
    edges: list[AEdge] = []
    packets: dict[str, Packet] = {}
    counter = [0]

    def new_state() -> int:
        counter[0] += 1
        return counter[0] - 1

    def build(f: Formula, muenv: dict[str, int]) -> int:
        if isinstance(f, FVar):
            if f.var not in muenv:
                raise AutomatonError(f"free recursion variable {f.var}")
            return muenv[f.var]
        s = new_state()
        attach(s, f, muenv)
        return s

    def attach(s: int, f: Formula, muenv: dict[str, int]):
        if isinstance(f, Tru):
            return
        if isinstance(f, Conj):
            attach(s, f.left, muenv)
            attach(s, f.right, muenv)
            return
        if isinstance(f, Mu):
            attach(s, f.body, {**muenv, f.var: s})
            return
        p = extract_packet(f)
        if p is not None:
            packets.setdefault(p.key, p)
            dst = build(p.hole, muenv)
            edges.append(AEdge(s, p.key, dst))
            return
        if isinstance(f, FVar):
            raise AutomatonError(
                f"unguarded recursion variable {f.var}")
        raise AutomatonError(
            f"formula not in packet form at {type(f).__name__}")

    init = build(phi, {})
    return PacketAutomaton(counter[0], init, edges, packets)


# ---------------------------------------------------------------------------
# Asynchronous product

def product(a: PacketAutomaton, b: PacketAutomaton) -> PacketAutomaton:
    clash = a.labels() & b.labels()
    if clash:
        raise AutomatonError(
            f"overlapping packet labels in product: {sorted(clash)}")
    idx: dict[tuple[int, int], int] = {}
    edges: list[AEdge] = []

    def state(pair) -> int:
        if pair not in idx:
            idx[pair] = len(idx)
        return idx[pair]

    start = state((a.initial, b.initial))
    todo = [(a.initial, b.initial)]
    seen = {(a.initial, b.initial)}
    while todo:
        x, y = todo.pop()
        s = state((x, y))
        for e in a.succ(x):
            t = (e.dst, y)
            edges.append(AEdge(s, e.label, state(t)))
            if t not in seen:
                seen.add(t)
                todo.append(t)
        for e in b.succ(y):
            t = (x, e.dst)
            edges.append(AEdge(s, e.label, state(t)))
            if t not in seen:
                seen.add(t)
                todo.append(t)
    return PacketAutomaton(len(idx), start, edges, {**a.packets, **b.packets})


# ---------------------------------------------------------------------------
# Expansion into branch form

def expand_to_branch(a: PacketAutomaton,
                     bounds: Bounds = DEFAULT_BOUNDS) -> PacketAutomaton:
    """Unfold into an equivalent automaton whose forward edges form a tree
    and whose back-edges target ancestors only.  A state revisited along the
    current unfolding path closes a loop to its ancestor copy; any other
    revisit gets a fresh copy."""
    edges: list[AEdge] = []
    counter = [0]

    def new_node() -> int:
        counter[0] += 1
        if counter[0] > bounds.state_cap:
            raise AutomatonError(
                f"expansion exceeds the state cap ({bounds.state_cap})")
        return counter[0] - 1

    def go(st: int, stack: tuple[tuple[int, int], ...]) -> int:
        n = new_node()
        stack2 = stack + ((st, n),)
        ancestors = dict(stack2)
        for e in a.succ(st):
            if e.dst in ancestors:
                edges.append(AEdge(n, e.label, ancestors[e.dst]))
            else:
                edges.append(AEdge(n, e.label, go(e.dst, stack2)))
        return n

    init = go(a.initial, ())
    return PacketAutomaton(counter[0], init, edges, dict(a.packets))


def is_branch_form(a: PacketAutomaton) -> bool:
    """Forward edges form a tree rooted at the source; every remaining edge
    targets an ancestor in that tree."""
    parent: dict[int, int] = {a.initial: -1}
    order: list[int] = [a.initial]
    back: list[AEdge] = []
    todo = [a.initial]
    while todo:
        s = todo.pop()
        for e in a.succ(s):
            if e.dst in parent or e.dst == a.initial:
                back.append(e)
            else:
                parent[e.dst] = s
                order.append(e.dst)
                todo.append(e.dst)
    if len(parent) != a.n_states:
        return False

    def is_ancestor(anc: int, node: int) -> bool:
        while node != -1:
            if node == anc:
                return True
            node = parent[node]
        return False

    return all(is_ancestor(e.dst, e.src) for e in back)


# ---------------------------------------------------------------------------
# Automaton -> formula

_NAMES = [chr(ord("A") + i) for i in range(26)]


def _mu_name(i: int) -> str:
    return _NAMES[i] if i < 26 else f"X{i}"


def automaton_to_formula(a: PacketAutomaton) -> Formula:
    if not is_branch_form(a):
        raise AutomatonError("automaton is not in branch form")
    back_targets: set[int] = set()
    tree_children: dict[int, bool] = {}
    seen = {a.initial}
    todo = [a.initial]
    while todo:
        s = todo.pop()
        for e in a.succ(s):
            if e.dst in seen:
                back_targets.add(e.dst)
            else:
                seen.add(e.dst)
                todo.append(e.dst)
    names: dict[int, str] = {}

    def fml(node: int, on_path: set[int]) -> Formula:
        if node in back_targets:
            names[node] = _mu_name(len(names))
        parts = []
        for e in a.succ(node):
            if e.dst in on_path:
                cont: Formula = FVar(names[e.dst])
            else:
                cont = fml(e.dst, on_path | {e.dst})
            parts.append(rebuild_edge(a, e.label, cont))
        body = conj(parts) if parts else Tru()
        if node in back_targets:
            return Mu(names[node], body)
        return body

    return fml(a.initial, {a.initial})


# ---------------------------------------------------------------------------
# Bisimulation by partition refinement

def bisimilar(a: PacketAutomaton, b: PacketAutomaton) -> bool:
    """Packet-label bisimilarity of the two initial states."""
    n = a.n_states
    states = list(range(n + b.n_states))

    def succ(s: int) -> list[tuple[str, int]]:
        if s < n:
            return [(e.label, e.dst) for e in a.succ(s)]
        return [(e.label, e.dst + n) for e in b.succ(s - n)]

    block = {s: 0 for s in states}
    while True:
        sigs = {}
        new_block = {}
        for s in states:
            sig = (block[s], frozenset((l, block[d]) for l, d in succ(s)))
            if sig not in sigs:
                sigs[sig] = len(sigs)
            new_block[s] = sigs[sig]
        if new_block == block:
            break
        block = new_block
    return block[a.initial] == block[b.initial + n]


# ---------------------------------------------------------------------------
# Pipeline

@dataclass
class RecReport:
    components: list[PacketAutomaton]
    prod: Optional[PacketAutomaton]
    expanded: Optional[PacketAutomaton]
    formula: Formula


def rec_pipeline(delta: dict[SessionRole, "LocalAssertion | Formula"],
                 bounds: Bounds = DEFAULT_BOUNDS) -> RecReport:
    """Interleave possibly-recursive per-session formulae: embed, translate
    to automata, fold the product, expand into branch form, read back."""
    from .embedding import embed

    comps = []
    for sr, entry in delta.items():
        phi = embed(entry, sr) if isinstance(entry, LocalAssertion) else entry
        comps.append(formula_to_automaton(phi))
    if not comps:
        return RecReport([], None, None, Tru())
    prod = comps[0]
    for c in comps[1:]:
        prod = product(prod, c)
    expanded = expand_to_branch(prod, bounds)
    return RecReport(comps, prod, expanded, automaton_to_formula(expanded))


def rec_interleave(delta: dict[SessionRole, "LocalAssertion | Formula"],
                   bounds: Bounds = DEFAULT_BOUNDS) -> Formula:
    return rec_pipeline(delta, bounds).formula


# ---------------------------------------------------------------------------
# Trace semantics (for cross-checks) and DOT export

def packet_traces(a: PacketAutomaton, depth: int) -> set[tuple[str, ...]]:
    """All label sequences of length <= depth from the initial state."""
    out: set[tuple[str, ...]] = set()

    def go(s: int, prefix: tuple[str, ...]):
        out.add(prefix)
        if len(prefix) >= depth:
            return
        for e in a.succ(s):
            go(e.dst, prefix + (e.label,))

    go(a.initial, ())
    return out


def to_dot(a: PacketAutomaton, name: str = "packets") -> str:
    lines = [f"digraph {name} {{", "  rankdir=LR;",
             f"  init [shape=point];",
             f"  init -> n{a.initial};"]
    for s in range(a.n_states):
        lines.append(f"  n{s} [shape=circle, label=\"{s}\"];")
    for e in a.edges:
        label = e.label.replace("\"", "\\\"")
        lines.append(f"  n{e.src} -> n{e.dst} [label=\"{label}\"];")
    lines.append("}")
    return "\n".join(lines)
