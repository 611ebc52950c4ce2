"""The interleaving operator on formulae and the environment formula.

A communication modality travels together with its predicate and update
modality as one atomic packet, so state effects never separate from the
communication that caused them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .bounds import Bounds, DEFAULT_BOUNDS
from .kernel import (
    AcceptPat, ActionPattern, Conj, Formula, ForallF, FVar, Implies, InPat,
    LabelPat, LocalAssertion, Mu, Must, OutPat, PredF,
    SessionRole, Sort, Tru, UpdPat, conj, conjuncts, formula_free_vars,
    formula_sessions, subst_formula, Var,
)
from .printer import print_actpat


class ShuffleError(Exception):
    pass


class ShuffleBudgetError(ShuffleError):
    pass


def _is_comm(pat: ActionPattern) -> bool:
    return isinstance(pat, (OutPat, InPat, LabelPat, AcceptPat))


@dataclass
class Packet:
    """One shuffle unit: an optional quantifier, a modality, and the
    predicate/update material glued to it.  ``rebuild`` re-wraps a new
    continuation into the same packet shape."""
    rebuild: Callable[[Formula], Formula]
    hole: Formula
    binder: Optional[tuple[str, Sort]]
    key: str


def extract_packet(phi: Formula) -> Optional[Packet]:
    binder = None
    inner = phi
    if isinstance(phi, ForallF) and isinstance(phi.body, Must) \
            and _is_comm(phi.body.pattern):
        binder = (phi.var, phi.sort)
        inner = phi.body
    if not isinstance(inner, Must):
        return None
    pat, body = inner.pattern, inner.body
    var, sort = binder if binder else (None, None)

    def wrap(core: Callable[[Formula], Formula]) -> Callable[[Formula], Formula]:
        if binder is None:
            return core
        return lambda h: ForallF(var, sort, core(h))

    key = _pattern_key(pat, var)
    if _is_comm(pat):
        if isinstance(body, Conj) and isinstance(body.left, PredF) \
                and isinstance(body.right, Must) \
                and isinstance(body.right.pattern, UpdPat):
            pred, upd = body.left, body.right.pattern
            return Packet(wrap(lambda h: Must(pat, Conj(pred, Must(upd, h)))),
                          body.right.body, binder, key)
        if isinstance(body, Implies):
            hyp = body.hyp
            return Packet(wrap(lambda h: Must(pat, Implies(hyp, h))),
                          body.body, binder, key)
        return Packet(wrap(lambda h: Must(pat, h)), body, binder, key)
    if isinstance(pat, UpdPat):
        # A leading update modality not glued to a communication still
        # shuffles as a unit of its own.
        return Packet(lambda h: Must(pat, h), body, None, key)
    return None


def _pattern_key(pat: ActionPattern, binder_var: str | None) -> str:
    text = print_actpat(pat)
    if binder_var:
        text = text.replace(f"({binder_var})", "(_)")
    return text


def shuffle(phi1: Formula, phi2: Formula,
            bounds: Bounds = DEFAULT_BOUNDS,
            literal_right: bool = False) -> Formula:
    """Normal form of the interleaving of two formulae.

    With ``literal_right`` the right conjunct of the modality-vs-modality
    rule is the under-interleaving plain conjunction instead of the
    symmetric recursive interleaving.
    """
    s1, s2 = formula_sessions(phi1), formula_sessions(phi2)
    clash = s1 & s2
    if clash:
        raise ShuffleError(f"overlapping names in interleaving: {sorted(clash)}")
    v1, v2 = formula_free_vars(phi1), formula_free_vars(phi2)
    if v1 & v2:
        raise ShuffleError(
            f"overlapping free variables in interleaving: {sorted(v1 & v2)}")
    budget = [bounds.conjunct_budget]
    return _shuffle(phi1, phi2, budget, literal_right)


def _spend(budget: list[int], n: int = 1):
    budget[0] -= n
    if budget[0] < 0:
        raise ShuffleBudgetError("interleaving exceeds the conjunct budget")


def _shuffle(a: Formula, b: Formula, budget: list[int],
             lit: bool = False) -> Formula:
    _spend(budget)
    if isinstance(a, Tru):
        return b
    if isinstance(b, Tru):
        return a
    if isinstance(a, Conj):
        return conj([_shuffle(x, b, budget, lit) for x in conjuncts(a)])
    if isinstance(b, Conj):
        return conj([_shuffle(a, y, budget, lit) for y in conjuncts(b)])
    pa, pb = extract_packet(a), extract_packet(b)
    if pa is not None and pb is not None:
        pa = _avoid_capture(pa, b)
        pb = _avoid_capture(pb, a)
        left = pa.rebuild(_shuffle(pa.hole, pb.rebuild(pb.hole), budget, lit))
        if lit:
            right = pb.rebuild(Conj(pa.rebuild(pa.hole), pb.hole))
        else:
            right = pb.rebuild(_shuffle(pa.rebuild(pa.hole), pb.hole, budget, lit))
        _spend(budget)
        return Conj(left, right)
    if isinstance(a, ForallF):
        a = _rename_forall(a, b)
        return ForallF(a.var, a.sort, _shuffle(a.body, b, budget, lit))
    if isinstance(b, ForallF):
        b = _rename_forall(b, a)
        return ForallF(b.var, b.sort, _shuffle(a, b.body, budget, lit))
    if isinstance(a, Implies):
        return Implies(a.hyp, _shuffle(a.body, b, budget, lit))
    if isinstance(b, Implies):
        return Implies(b.hyp, _shuffle(a, b.body, budget, lit))
    if isinstance(a, (Mu, FVar)) or isinstance(b, (Mu, FVar)):
        raise ShuffleError(
            "recursive formulae cannot be interleaved syntactically; "
            "use the automata pipeline")
    raise ShuffleError(
        f"no interleaving rule applies to {type(a).__name__} vs "
        f"{type(b).__name__}")


_FRESH = [0]


def _fresh(name: str) -> str:
    _FRESH[0] += 1
    return f"{name}_{_FRESH[0]}"


def _avoid_capture(p: Packet, other: Formula) -> Packet:
    if p.binder is None or p.binder[0] not in formula_free_vars(other):
        return p
    var, sort = p.binder
    new = _fresh(var)
    old_rebuild = p.rebuild

    def rebuild(h: Formula) -> Formula:
        built = old_rebuild(h)
        assert isinstance(built, ForallF)
        return ForallF(new, sort, subst_formula(built.body, {var: Var(new)}))

    return Packet(rebuild, p.hole, (new, sort), p.key)


def _rename_forall(f: ForallF, other: Formula) -> ForallF:
    if f.var not in formula_free_vars(other):
        return f
    new = _fresh(f.var)
    return ForallF(new, f.sort, subst_formula(f.body, {f.var: Var(new)}))


# ---------------------------------------------------------------------------
# Path structure

def modality_paths(phi: Formula) -> set[tuple[str, ...]]:
    """Distinct maximal packet paths of a formula."""
    p = extract_packet(phi)
    if p is not None:
        return {(p.key,) + rest for rest in modality_paths(p.hole)}
    if isinstance(phi, Conj):
        out: set[tuple[str, ...]] = set()
        for c in conjuncts(phi):
            out |= modality_paths(c)
        return out
    if isinstance(phi, (ForallF, Implies, Must, Mu)):
        body = phi.body
        return modality_paths(body)
    return {()}


def is_pure_chain_formula(phi: Formula) -> bool:
    """True when the formula is built only from bare label modalities,
    conjunction and true."""
    if isinstance(phi, Tru):
        return True
    if isinstance(phi, Conj):
        return is_pure_chain_formula(phi.left) and is_pure_chain_formula(phi.right)
    if isinstance(phi, Must) and isinstance(phi.pattern, LabelPat):
        return is_pure_chain_formula(phi.body)
    return False


def flatten_chains(phi: Formula) -> Formula:
    """Distribute modalities over conjunctions: the flat conjunction whose
    conjuncts are the maximal label chains.  Only defined on pure chains."""
    if not is_pure_chain_formula(phi):
        raise ShuffleError("flattening is only defined on pure label chains")

    def paths(f: Formula) -> list[tuple[str, ...]]:
        if isinstance(f, Tru):
            return [()]
        if isinstance(f, Conj):
            out = []
            for c in conjuncts(f):
                for p in paths(c):
                    if p not in out:
                        out.append(p)
            return out
        assert isinstance(f, Must) and isinstance(f.pattern, LabelPat)
        return [(f.pattern.name,) + p for p in paths(f.body)]

    def chain(p: tuple[str, ...]) -> Formula:
        out: Formula = Tru()
        for name in reversed(p):
            out = Must(LabelPat(name), out)
        return out

    return conj([chain(p) for p in paths(phi)])


# ---------------------------------------------------------------------------
# Environment formula

def env_formula(delta: dict[SessionRole, LocalAssertion],
                gamma: dict[str, dict[str, LocalAssertion]] | None = None,
                bounds: Bounds = DEFAULT_BOUNDS) -> Formula:
    """Interleaving of the embeddings of all session entries and all
    shared-channel entries."""
    from .embedding import embed, embed_env_entry

    gamma = gamma or {}
    sessions = [sr.session for sr in delta]
    if len(sessions) != len(set(sessions)):
        raise ShuffleError("session names in delta must be pairwise distinct")
    parts: list[Formula] = []
    for sr, assertion in delta.items():
        parts.append(embed(assertion, sr))
    for i, (a, table) in enumerate(gamma.items()):
        parts.append(embed_env_entry(a, table, sess_var=f"s'{i}" if i else "s'"))
    out: Formula = Tru()
    for p in parts:
        out = shuffle(out, p, bounds) if not isinstance(out, Tru) else p
    return out
