"""Erasure to plain session types, the unasserted type checker, and the
asserted proof checker.

The asserted rules walk the process against the asserted environment keeping
a symbolic view of the state: every state variable maps to an expression over
the initial state and the values received so far.  Predicate obligations are
discharged by bounded validity over the declared sort domains.
"""

from __future__ import annotations

from dataclasses import dataclass

from .bounds import Bounds, DEFAULT_BOUNDS
from .kernel import (
    Accept, BinOp, BoolLit, Branch, Branching, EndA, Expr, GuardedSelect,
    Inact, KernelError, LocalAssertion, Not, Par, PendingUpdate, Predicate,
    Process, RecA, RecCallA, RecCallP, RecDef, Request, Select, SessionRole,
    Sort, StateVar, Var, process_sessions, process_shared_names,
    subst_expr, subst_state_expr,
)
from .predicates import valid_bounded


class TypingError(Exception):
    pass


# ---------------------------------------------------------------------------
# Unasserted types

@dataclass(frozen=True)
class UnassertedType:
    pass


@dataclass(frozen=True)
class UEnd(UnassertedType):
    pass


@dataclass(frozen=True)
class UBranchT:
    label: str
    sort: Sort
    cont: UnassertedType


@dataclass(frozen=True)
class UOut(UnassertedType):
    partner: str
    branches: tuple[UBranchT, ...]


@dataclass(frozen=True)
class UIn(UnassertedType):
    partner: str
    branches: tuple[UBranchT, ...]


@dataclass(frozen=True)
class URec(UnassertedType):
    var: str
    body: UnassertedType


@dataclass(frozen=True)
class UVar(UnassertedType):
    var: str


def erase(assertion: LocalAssertion) -> UnassertedType:
    """Drop every predicate, update and assertion variable; keep labels,
    sorts and structure."""
    if isinstance(assertion, EndA):
        return UEnd()
    if isinstance(assertion, Select):
        return UOut(assertion.partner,
                    tuple(UBranchT(b.label, b.sort, erase(b.cont))
                          for b in assertion.branches))
    if isinstance(assertion, Branch):
        return UIn(assertion.partner,
                   tuple(UBranchT(b.label, b.sort, erase(b.cont))
                         for b in assertion.branches))
    if isinstance(assertion, RecA):
        return URec(assertion.var, erase(assertion.body))
    if isinstance(assertion, RecCallA):
        return UVar(assertion.var)
    raise KernelError(f"unknown assertion node {assertion!r}")


def erase_env(delta: dict[SessionRole, LocalAssertion]
              ) -> dict[SessionRole, UnassertedType]:
    return {sr: erase(a) for sr, a in delta.items()}


def print_utype(t: UnassertedType) -> str:
    from .printer import print_sort
    if isinstance(t, UEnd):
        return "end"
    if isinstance(t, (UOut, UIn)):
        op = "!" if isinstance(t, UOut) else "?"
        body = "; ".join(f"{b.label}({print_sort(b.sort)}).{print_utype(b.cont)}"
                         for b in t.branches)
        return f"{t.partner}{op}{{ {body} }}"
    if isinstance(t, URec):
        return f"mu {t.var}. {print_utype(t.body)}"
    if isinstance(t, UVar):
        return t.var
    raise KernelError(f"unknown type node {t!r}")


# ---------------------------------------------------------------------------
# Unasserted type checking

def _all_end(delta: dict[SessionRole, UnassertedType]) -> bool:
    return all(isinstance(t, UEnd) for t in delta.values())


def _split(delta: dict, used_left: frozenset[tuple[str, str]],
           used_right: frozenset[tuple[str, str]]):
    """Multiplicative split of a session environment between the two sides
    of a parallel; entries neither side touches must be end-typed and are
    parked on the left."""
    left, right = {}, {}
    for sr, t in delta.items():
        key = (sr.session, sr.role)
        in_l, in_r = key in used_left, key in used_right
        if in_l and in_r:
            raise TypingError(f"both parallel components use {sr}")
        (right if in_r else left)[sr] = t
    return left, right


def _split_gamma(gamma: dict, used_left: frozenset[str],
                 used_right: frozenset[str]):
    left, right = {}, {}
    for a, entry in gamma.items():
        in_l, in_r = a in used_left, a in used_right
        if in_l and in_r:
            raise TypingError(f"both parallel components use shared name {a}")
        (right if in_r else left)[a] = entry
    return left, right


def typecheck_unasserted(process: Process,
                         delta: dict[SessionRole, UnassertedType],
                         gamma: dict[str, dict[str, UnassertedType]] | None = None,
                         trace: list[str] | None = None) -> bool:
    try:
        _utype(process, dict(delta), dict(gamma or {}), {}, trace, 0)
        return True
    except TypingError as e:
        if trace is not None:
            trace.append(f"rejected: {e}")
        return False


def _note(trace, depth, msg):
    if trace is not None:
        trace.append("  " * depth + msg)


def _utype(p: Process, delta, gamma, recenv: dict[str, str], trace, d):
    if isinstance(p, Inact):
        if not _all_end(delta):
            bad = [str(sr) for sr, t in delta.items() if not isinstance(t, UEnd)]
            raise TypingError(f"inaction leaves sessions open: {', '.join(bad)}")
        if gamma:
            # Shared-channel entries are unrestricted; leftovers are fine.
            pass
        _note(trace, d, "0 |> all end")
        return
    if isinstance(p, GuardedSelect):
        sr = SessionRole(p.session, p.role_self)
        t = _lookup(delta, sr)
        if not isinstance(t, UOut) or t.partner != p.role_to:
            raise TypingError(f"{sr} is not an output towards {p.role_to}")
        by_label = {b.label: b for b in t.branches}
        for br in p.branches:
            if br.label not in by_label:
                raise TypingError(
                    f"selection label {br.label} not offered by the type at {sr}")
            tb = by_label[br.label]
            _check_payload_sort(br.payload, tb.sort, sr, br.label)
            _note(trace, d, f"{sr}!{br.label} : {print_utype(tb.cont)}")
            _utype(br.cont, {**delta, sr: tb.cont}, gamma, recenv, trace, d + 1)
        return
    if isinstance(p, Branching):
        sr = SessionRole(p.session, p.role_self)
        t = _lookup(delta, sr)
        if not isinstance(t, UIn) or t.partner != p.role_from:
            raise TypingError(f"{sr} is not an input from {p.role_from}")
        plabels = {b.label for b in p.branches}
        tlabels = {b.label for b in t.branches}
        if plabels != tlabels:
            raise TypingError(
                f"branching at {sr} offers {sorted(plabels)} but the type "
                f"requires exactly {sorted(tlabels)}")
        by_label = {b.label: b for b in t.branches}
        for br in p.branches:
            tb = by_label[br.label]
            _note(trace, d, f"{sr}?{br.label} : {print_utype(tb.cont)}")
            _utype(br.cont, {**delta, sr: tb.cont}, gamma, recenv, trace, d + 1)
        return
    if isinstance(p, Par):
        ul, ur = process_sessions(p.left), process_sessions(p.right)
        dl, dr = _split(delta, ul, ur)
        gl, gr = _split_gamma(gamma, process_shared_names(p.left),
                              process_shared_names(p.right))
        _note(trace, d, "parallel split")
        _utype(p.left, dl, gl, recenv, trace, d + 1)
        _utype(p.right, dr, gr, recenv, trace, d + 1)
        return
    if isinstance(p, Accept):
        if p.shared not in gamma:
            raise TypingError(f"no shared-channel entry for {p.shared}")
        table = gamma[p.shared]
        if p.role not in table:
            raise TypingError(
                f"shared channel {p.shared} has no role {p.role}")
        gamma2 = {a: t for a, t in gamma.items() if a != p.shared}
        sr = SessionRole(p.sess_var, p.role)
        _note(trace, d, f"accept {p.shared} as {sr}")
        _utype(p.body, {**delta, sr: table[p.role]}, gamma2, recenv, trace, d + 1)
        return
    if isinstance(p, RecDef):
        sr, t = _single_open(delta)
        if not isinstance(t, URec):
            raise TypingError(f"recursive process against non-recursive type {print_utype(t)}")
        recenv2 = {**recenv, p.var: t.var}
        _note(trace, d, f"mu {p.var} ~ mu {t.var}")
        _utype(p.body, {**delta, sr: t.body}, gamma,
               recenv2, trace, d + 1)
        return
    if isinstance(p, RecCallP):
        sr, t = _single_open(delta)
        if not isinstance(t, UVar):
            raise TypingError(
                f"recursion call against non-variable type {print_utype(t)}")
        if recenv.get(p.var) != t.var:
            raise TypingError(
                f"recursion variable {p.var} does not correspond to {t.var}")
        _note(trace, d, f"{p.var} ~ {t.var}")
        return
    if isinstance(p, PendingUpdate):
        _utype(p.cont, delta, gamma, recenv, trace, d)
        return
    if isinstance(p, Request):
        raise TypingError("session requests are not covered by these rules")
    raise KernelError(f"unknown process node {p!r}")


def _lookup(delta, sr: SessionRole):
    if sr not in delta:
        raise TypingError(f"no environment entry for {sr}")
    return delta[sr]


def _single_open(delta):
    """Recursion rules act on the unique non-end entry."""
    opens = [(sr, t) for sr, t in delta.items() if not isinstance(t, UEnd)]
    if len(opens) != 1:
        raise TypingError(
            "recursion requires exactly one open session in the environment")
    return opens[0]


def _check_payload_sort(e: Expr, sort: Sort, sr, label):
    kind = _expr_kind(e)
    from .kernel import BoolSort
    want = "bool" if isinstance(sort, BoolSort) else "int"
    if kind is not None and kind != want:
        raise TypingError(
            f"payload of {sr}!{label} has the wrong sort (expected {want})")


def _expr_kind(e: Expr):
    """Best-effort payload sorting: None when the expression's sort depends
    on its free variables."""
    from .kernel import IntLit, BoolLit as BL
    if isinstance(e, IntLit):
        return "int"
    if isinstance(e, BL):
        return "bool"
    if isinstance(e, Not):
        return "bool"
    if isinstance(e, BinOp):
        if e.op in ("+", "-", "*"):
            return "int"
        if e.op in ("<", "<=", ">", ">=", "==", "!=", "/\\", "\\/"):
            return "bool"
    return None


# ---------------------------------------------------------------------------
# Asserted proof checking

TRUE = BoolLit(True)


def _conj(a: Expr, b: Expr) -> Expr:
    if a == TRUE:
        return b
    if b == TRUE:
        return a
    return BinOp("/\\", a, b)


@dataclass(frozen=True)
class _RecInfo:
    """What a recursion call must re-establish."""
    param: str
    sort: Sort
    init_var: str
    init_pred: Predicate
    invariant: Predicate


class _Prover:
    def __init__(self, state_domains: dict[str, Sort], bounds: Bounds,
                 trace: list[str] | None):
        self.state_domains = dict(state_domains)
        self.bounds = bounds
        self.trace = trace
        self.fresh = 0

    def freshen(self, name: str, ctx) -> str:
        while name in ctx or name in self.state_domains:
            self.fresh += 1
            name = f"{name}_{self.fresh}"
        return name

    def note(self, depth, msg):
        if self.trace is not None:
            self.trace.append("  " * depth + msg)

    def valid(self, hyp: Expr, concl: Expr, ctx: dict[str, Sort]) -> bool:
        r = valid_bounded(hyp, concl, ctx, self.bounds,
                          state_ctx=self.state_domains)
        return r is True


def prove_asserted(pre: Predicate,
                   gamma: dict[str, dict[str, LocalAssertion]] | None,
                   delta: dict[SessionRole, LocalAssertion],
                   process: Process,
                   state_domains: dict[str, Sort],
                   bounds: Bounds = DEFAULT_BOUNDS,
                   trace: list[str] | None = None) -> bool:
    """Proof search for the asserted judgement.

    Each communication rule discharges one bounded-validity obligation:
    outputs must have their predicate derivable from the path condition, and
    inputs extend the path condition with theirs.  State reads go through a
    substitution that composes the updates performed so far, so obligations
    range only over the initial state and the received values.
    """
    pv = _Prover(state_domains, bounds, trace)
    theta = {x: StateVar(x) for x in state_domains}
    try:
        pv.note(0, f"precondition {_show(pre)}")
        _prove(pv, pre, dict(gamma or {}), dict(delta), process,
               theta, {}, {}, {}, 0)
        return True
    except TypingError as e:
        if trace is not None:
            trace.append(f"rejected: {e}")
        return False


def _show(e: Expr) -> str:
    from .printer import print_expr
    return print_expr(e)


def _sym(e: Expr, rho: dict[str, Expr], theta: dict[str, Expr]) -> Expr:
    """Rewrite an expression over the current point into one over the
    initial state and symbolic received values."""
    return subst_state_expr(subst_expr(e, rho), theta)


def _compose_update(update, theta: dict[str, Expr],
                    rho: dict[str, Expr]) -> dict[str, Expr]:
    new = dict(theta)
    for x, e in update.assigns:
        if x not in theta:
            raise TypingError(f"update writes undeclared state variable @{x}")
        new[x] = _sym(e, rho, theta)
    return new


def _updates_match(proc_upd, assert_upd, proc_var: str, assert_var: str) -> bool:
    """The process must perform exactly the update the assertion announces,
    up to the name of the bound payload variable."""
    renamed = tuple((x, subst_expr(e, {assert_var: Var(proc_var)}))
                    for x, e in assert_upd.assigns)
    return tuple(proc_upd.assigns) == renamed


def _prove(pv: _Prover, cond: Expr, gamma, delta, p: Process,
           theta: dict[str, Expr], rho: dict[str, Expr],
           ctx: dict[str, Sort], recenv: dict[str, _RecInfo], d: int):
    if isinstance(p, Inact):
        open_ = [str(sr) for sr, a in delta.items() if not isinstance(a, EndA)]
        if open_:
            raise TypingError(f"inaction leaves sessions open: {', '.join(open_)}")
        pv.note(d, "0 |> all end")
        return
    if isinstance(p, GuardedSelect):
        sr = SessionRole(p.session, p.role_self)
        a = _alookup(delta, sr)
        if not isinstance(a, Select) or a.partner != p.role_to:
            raise TypingError(f"{sr} is not an output towards {p.role_to}")
        by_label = {b.label: b for b in a.branches}
        # Guard coverage: some branch must be enabled, and no two at once,
        # whenever the path condition holds — otherwise execution can get
        # stuck or become nondeterministic where the type demands a choice.
        guards = [_sym(br.guard, rho, theta) for br in p.branches]
        any_guard = guards[0]
        for g in guards[1:]:
            any_guard = BinOp("\\/", any_guard, g)
        if not pv.valid(cond, any_guard, ctx):
            raise TypingError(f"guards at {sr} are not exhaustive")
        for i in range(len(guards)):
            for j in range(i + 1, len(guards)):
                if not pv.valid(_conj(cond, guards[i]), Not(guards[j]), ctx):
                    raise TypingError(f"guards at {sr} are not exclusive")
        for br, g in zip(p.branches, guards):
            if br.label not in by_label:
                raise TypingError(
                    f"selection label {br.label} not offered by the type at {sr}")
            ab = by_label[br.label]
            payload = _sym(br.payload, rho, theta)
            goal = subst_expr(_sym_pred(ab.pred, theta),
                              {ab.var: payload})
            hyp = _conj(cond, g)
            if not pv.valid(hyp, goal, ctx):
                raise TypingError(
                    f"cannot derive {_show(ab.pred)} for the payload of "
                    f"{sr}!{br.label} under {_show(hyp)}")
            if not _updates_match(br.update, ab.update, br.var, ab.var):
                raise TypingError(
                    f"update of {sr}!{br.label} differs from the asserted one")
            pv.note(d, f"{sr}!{br.label}: {_show(hyp)} ==> {_show(goal)}")
            rho2 = {**rho, br.var: payload}
            theta2 = _compose_update(br.update, theta, rho2)
            _prove(pv, hyp, gamma, {**delta, sr: ab.cont}, br.cont,
                   theta2, rho2, ctx, recenv, d + 1)
        return
    if isinstance(p, Branching):
        sr = SessionRole(p.session, p.role_self)
        a = _alookup(delta, sr)
        if not isinstance(a, Branch) or a.partner != p.role_from:
            raise TypingError(f"{sr} is not an input from {p.role_from}")
        plabels = {b.label for b in p.branches}
        tlabels = {b.label for b in a.branches}
        if plabels != tlabels:
            raise TypingError(
                f"branching at {sr} offers {sorted(plabels)} but the type "
                f"requires exactly {sorted(tlabels)}")
        by_label = {b.label: b for b in a.branches}
        for br in p.branches:
            ab = by_label[br.label]
            v = pv.freshen(ab.var, ctx)
            ctx2 = {**ctx, v: ab.sort}
            received = subst_expr(_sym_pred(ab.pred, theta), {ab.var: Var(v)})
            hyp = _conj(cond, received)
            if not _updates_match(br.update, ab.update, br.var, ab.var):
                raise TypingError(
                    f"update of {sr}?{br.label} differs from the asserted one")
            pv.note(d, f"{sr}?{br.label}: assume {_show(received)}")
            rho2 = {**rho, br.var: Var(v)}
            theta2 = _compose_update(br.update, theta, rho2)
            _prove(pv, hyp, gamma, {**delta, sr: ab.cont}, br.cont,
                   theta2, rho2, ctx2, recenv, d + 1)
        return
    if isinstance(p, Par):
        ul, ur = process_sessions(p.left), process_sessions(p.right)
        dl, dr = _split(delta, ul, ur)
        gl, gr = _split_gamma(gamma, process_shared_names(p.left),
                              process_shared_names(p.right))
        pv.note(d, "parallel split")
        _prove(pv, cond, gl, dl, p.left, theta, rho, ctx, recenv, d + 1)
        _prove(pv, cond, gr, dr, p.right, theta, rho, ctx, recenv, d + 1)
        return
    if isinstance(p, Accept):
        if p.shared not in gamma or p.role not in gamma[p.shared]:
            raise TypingError(
                f"no shared-channel entry for {p.shared} at role {p.role}")
        entry = gamma[p.shared][p.role]
        gamma2 = {x: t for x, t in gamma.items() if x != p.shared}
        sr = SessionRole(p.sess_var, p.role)
        pv.note(d, f"accept {p.shared} as {sr}")
        _prove(pv, cond, gamma2, {**delta, sr: entry}, p.body,
               theta, rho, ctx, recenv, d + 1)
        return
    if isinstance(p, RecDef):
        sr, a = _single_open_a(delta)
        if not isinstance(a, RecA):
            raise TypingError("recursive process against non-recursive assertion")
        init = _sym(p.init, rho, theta)
        init_goal = subst_expr(_sym_pred(a.init_pred, theta),
                               {a.init_var: init})
        if not pv.valid(cond, init_goal, ctx):
            raise TypingError(
                f"initial argument does not satisfy {_show(a.init_pred)}")
        xp = pv.freshen(a.param, ctx)
        inv = subst_expr(a.invariant, {a.param: Var(xp)})
        entry = subst_expr(a.init_pred, {a.init_var: Var(xp)})
        if not pv.valid(entry, inv, {xp: a.sort}):
            raise TypingError("initialisation predicate does not entail the "
                              "loop invariant")
        pv.note(d, f"mu {p.var}: invariant {_show(a.invariant)}")
        # The loop body is checked once, for an arbitrary iteration: the
        # state is havocked (identity substitution, quantified by the
        # bounded-validity check) and only the invariant is assumed.
        theta0 = {x: StateVar(x) for x in pv.state_domains}
        info = _RecInfo(xp, a.sort, a.init_var, a.init_pred, a.invariant)
        body = _subst_assert_var(a.body, a.var)
        rho2 = {p.param: Var(xp)}
        ctx2 = {xp: a.sort}
        _prove(pv, inv, gamma, {**delta, sr: body}, p.body,
               theta0, rho2, ctx2, {**recenv, p.var: info}, d + 1)
        return
    if isinstance(p, RecCallP):
        sr, a = _single_open_a(delta)
        if not isinstance(a, RecCallA):
            raise TypingError("recursion call against non-call assertion")
        if p.var not in recenv:
            raise TypingError(f"unbound process recursion variable {p.var}")
        info = recenv[p.var]
        arg = _sym(p.arg, rho, theta)
        asserted = subst_expr(_sym_pred(a.arg_pred, theta), {a.arg_var: arg})
        if not pv.valid(cond, asserted, ctx):
            raise TypingError(
                f"recursion argument does not satisfy {_show(a.arg_pred)}")
        re_init = subst_expr(_sym_pred(info.init_pred, theta),
                             {info.init_var: arg})
        if not pv.valid(cond, re_init, ctx):
            raise TypingError("recursion call does not re-establish the "
                              "initialisation predicate")
        pv.note(d, f"call {p.var}: {_show(asserted)}")
        return
    if isinstance(p, PendingUpdate):
        theta2 = _compose_update(p.update, theta, rho)
        _prove(pv, cond, gamma, delta, p.cont, theta2, rho, ctx, recenv, d)
        return
    if isinstance(p, Request):
        raise TypingError("session requests are not covered by these rules")
    raise KernelError(f"unknown process node {p!r}")


def _sym_pred(pred: Predicate, theta: dict[str, Expr]) -> Expr:
    return subst_state_expr(pred, theta)


def _alookup(delta, sr: SessionRole) -> LocalAssertion:
    if sr not in delta:
        raise TypingError(f"no environment entry for {sr}")
    return delta[sr]


def _single_open_a(delta):
    opens = [(sr, a) for sr, a in delta.items() if not isinstance(a, EndA)]
    if len(opens) != 1:
        raise TypingError(
            "recursion requires exactly one open session in the environment")
    return opens[0]


def _subst_assert_var(a: LocalAssertion, var: str) -> LocalAssertion:
    """Leave recursion-call leaves in place; the proof rule handles them via
    the recursion environment."""
    return a
