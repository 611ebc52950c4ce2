"""Core abstract syntax: sorts, expressions, updates, assertions,
processes, actions, formulae, virtual states and environments.

All values are immutable (frozen dataclasses over tuples) and safe to
share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, is_dataclass
from typing import Union


class KernelError(Exception):
    """Malformed AST or violated well-formedness condition."""


# ---------------------------------------------------------------------------
# Sorts

@dataclass(frozen=True)
class Sort:
    pass


DEFAULT_BOUND = 32


@dataclass(frozen=True)
class IntSort(Sort):
    bound: int = DEFAULT_BOUND


@dataclass(frozen=True)
class NatSort(Sort):
    bound: int = DEFAULT_BOUND


@dataclass(frozen=True)
class BoolSort(Sort):
    pass


def sort_domain(sort: Sort, bound: int | None = None) -> list:
    """Finite enumeration domain of a sort (bounded checking only)."""
    if isinstance(sort, BoolSort):
        return [False, True]
    b = bound if bound is not None else sort.bound
    if b <= 0:
        raise KernelError("enumeration bound must be positive")
    if isinstance(sort, NatSort):
        return list(range(0, b))
    if isinstance(sort, IntSort):
        return list(range(-b, b))
    raise KernelError(f"unknown sort {sort!r}")


# ---------------------------------------------------------------------------
# Expressions

@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class IntLit(Expr):
    value: int


@dataclass(frozen=True)
class BoolLit(Expr):
    value: bool


@dataclass(frozen=True)
class Var(Expr):
    """Message variable or recursion parameter."""
    name: str


@dataclass(frozen=True)
class StateVar(Expr):
    """Role-local state variable, written @x."""
    name: str


ARITH_OPS = ("+", "-", "*")
CMP_OPS = ("<", "<=", ">", ">=", "==", "!=")
BOOL_OPS = ("/\\", "\\/")


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Not(Expr):
    operand: Expr


# A predicate is a boolean-sorted expression.
Predicate = Expr

TRUE = BoolLit(True)
FALSE = BoolLit(False)


def expr_vars(e: Expr) -> frozenset[str]:
    """Free message/recursion variables of an expression."""
    if isinstance(e, Var):
        return frozenset([e.name])
    if isinstance(e, BinOp):
        return expr_vars(e.left) | expr_vars(e.right)
    if isinstance(e, Not):
        return expr_vars(e.operand)
    return frozenset()


def expr_state_vars(e: Expr) -> frozenset[str]:
    if isinstance(e, StateVar):
        return frozenset([e.name])
    if isinstance(e, BinOp):
        return expr_state_vars(e.left) | expr_state_vars(e.right)
    if isinstance(e, Not):
        return expr_state_vars(e.operand)
    return frozenset()


def subst_expr(e: Expr, mapping: dict[str, Expr]) -> Expr:
    """Substitute message variables by expressions."""
    if isinstance(e, Var) and e.name in mapping:
        return mapping[e.name]
    if isinstance(e, BinOp):
        return BinOp(e.op, subst_expr(e.left, mapping), subst_expr(e.right, mapping))
    if isinstance(e, Not):
        return Not(subst_expr(e.operand, mapping))
    return e


def subst_state_expr(e: Expr, mapping: dict[str, Expr]) -> Expr:
    """Substitute state variables by expressions."""
    if isinstance(e, StateVar) and e.name in mapping:
        return mapping[e.name]
    if isinstance(e, BinOp):
        return BinOp(e.op, subst_state_expr(e.left, mapping),
                     subst_state_expr(e.right, mapping))
    if isinstance(e, Not):
        return Not(subst_state_expr(e.operand, mapping))
    return e


def literal(v) -> Expr:
    if isinstance(v, bool):
        return BoolLit(v)
    if isinstance(v, int):
        return IntLit(v)
    raise KernelError(f"not a literal value: {v!r}")


# ---------------------------------------------------------------------------
# Updates

@dataclass(frozen=True)
class Update:
    """Finite sequence of assignments @x := e; right-hand sides read the
    pre-state, and assigned variables are pairwise distinct."""
    assigns: tuple[tuple[str, Expr], ...] = ()

    def __post_init__(self):
        names = [x for x, _ in self.assigns]
        if len(names) != len(set(names)):
            raise KernelError(f"duplicate assignment targets in update: {names}")

    @property
    def is_skip(self) -> bool:
        return not self.assigns


SKIP = Update()


def subst_update(u: Update, mapping: dict[str, Expr]) -> Update:
    return Update(tuple((x, subst_expr(e, mapping)) for x, e in u.assigns))


def update_vars(u: Update) -> frozenset[str]:
    out: frozenset[str] = frozenset()
    for _, e in u.assigns:
        out |= expr_vars(e)
    return out


# ---------------------------------------------------------------------------
# Local assertions

@dataclass(frozen=True)
class LocalAssertion:
    pass


@dataclass(frozen=True)
class ABranch:
    label: str
    var: str
    sort: Sort
    pred: Predicate
    update: Update
    cont: LocalAssertion


def _check_branch_labels(branches: tuple[ABranch, ...]):
    labels = [b.label for b in branches]
    if len(labels) != len(set(labels)):
        raise KernelError(f"duplicate branch labels: {labels}")
    if not branches:
        raise KernelError("choice with no branches")


@dataclass(frozen=True)
class Select(LocalAssertion):
    """Output choice towards a partner role."""
    partner: str
    branches: tuple[ABranch, ...]

    def __post_init__(self):
        _check_branch_labels(self.branches)


@dataclass(frozen=True)
class Branch(LocalAssertion):
    """Input choice offered to a partner role."""
    partner: str
    branches: tuple[ABranch, ...]

    def __post_init__(self):
        _check_branch_labels(self.branches)


@dataclass(frozen=True)
class RecA(LocalAssertion):
    var: str
    param: str
    sort: Sort
    init_var: str
    init_pred: Predicate
    body: LocalAssertion
    invariant: Predicate


@dataclass(frozen=True)
class RecCallA(LocalAssertion):
    var: str
    arg_var: str
    arg_pred: Predicate


@dataclass(frozen=True)
class EndA(LocalAssertion):
    pass


END = EndA()


def assertion_wellformed(a: LocalAssertion, bound: frozenset[str] = frozenset(),
                         guarded: bool = True) -> None:
    """Check recursion variables are bound and bodies contractive."""
    if isinstance(a, (Select, Branch)):
        for b in a.branches:
            assertion_wellformed(b.cont, bound, True)
    elif isinstance(a, RecA):
        assertion_wellformed(a.body, bound | {a.var}, False)
    elif isinstance(a, RecCallA):
        if a.var not in bound:
            raise KernelError(f"unbound recursion variable {a.var}")
        if not guarded:
            raise KernelError(f"non-contractive recursion at {a.var}")
    elif isinstance(a, EndA):
        pass
    else:
        raise KernelError(f"unknown assertion node {a!r}")


# ---------------------------------------------------------------------------
# Processes

@dataclass(frozen=True)
class Process:
    pass


@dataclass(frozen=True)
class Inact(Process):
    pass


INACT = Inact()


@dataclass(frozen=True)
class Request(Process):
    shared: str
    role: str
    sess_var: str
    body: Process


@dataclass(frozen=True)
class Accept(Process):
    shared: str
    role: str
    sess_var: str
    body: Process


@dataclass(frozen=True)
class GBranchP:
    """One alternative of a guarded command: when the guard holds, send
    label with the payload value, bind it to var, apply update, continue."""
    guard: Expr
    label: str
    payload: Expr
    var: str
    update: Update
    cont: Process


@dataclass(frozen=True)
class GuardedSelect(Process):
    session: str
    role_self: str
    role_to: str
    branches: tuple[GBranchP, ...]


@dataclass(frozen=True)
class PBranchP:
    label: str
    var: str
    update: Update
    cont: Process


@dataclass(frozen=True)
class Branching(Process):
    session: str
    role_from: str
    role_self: str
    branches: tuple[PBranchP, ...]


@dataclass(frozen=True)
class Par(Process):
    left: Process
    right: Process


@dataclass(frozen=True)
class RecDef(Process):
    var: str
    param: str
    init: Expr
    body: Process


@dataclass(frozen=True)
class RecCallP(Process):
    var: str
    arg: Expr


@dataclass(frozen=True)
class PendingUpdate(Process):
    """Internal LTS node: the update emitted by the previous communication,
    still to be observed as a transition of its own."""
    update: Update
    cont: Process


def subst_process(p: Process, mapping: dict[str, Expr]) -> Process:
    """Substitute message variables by expressions (capture naive: callers
    only substitute closed values for freshly bound names)."""
    if isinstance(p, Inact):
        return p
    if isinstance(p, (Request, Accept)):
        body = subst_process(p.body, mapping)
        return type(p)(p.shared, p.role, p.sess_var, body)
    if isinstance(p, GuardedSelect):
        branches = []
        for b in p.branches:
            inner = {k: v for k, v in mapping.items() if k != b.var}
            branches.append(GBranchP(subst_expr(b.guard, mapping), b.label,
                                     subst_expr(b.payload, mapping), b.var,
                                     subst_update(b.update, inner),
                                     subst_process(b.cont, inner)))
        return GuardedSelect(p.session, p.role_self, p.role_to, tuple(branches))
    if isinstance(p, Branching):
        branches = []
        for b in p.branches:
            inner = {k: v for k, v in mapping.items() if k != b.var}
            branches.append(PBranchP(b.label, b.var,
                                     subst_update(b.update, inner),
                                     subst_process(b.cont, inner)))
        return Branching(p.session, p.role_from, p.role_self, tuple(branches))
    if isinstance(p, Par):
        return Par(subst_process(p.left, mapping), subst_process(p.right, mapping))
    if isinstance(p, RecDef):
        inner = {k: v for k, v in mapping.items() if k != p.param}
        return RecDef(p.var, p.param, subst_expr(p.init, mapping),
                      subst_process(p.body, inner))
    if isinstance(p, RecCallP):
        return RecCallP(p.var, subst_expr(p.arg, mapping))
    if isinstance(p, PendingUpdate):
        return PendingUpdate(subst_update(p.update, mapping),
                             subst_process(p.cont, mapping))
    raise KernelError(f"unknown process node {p!r}")


def rename_session(p: Process, old: str, new: str) -> Process:
    if isinstance(p, (Inact, RecCallP)):
        return p
    if isinstance(p, (Request, Accept)):
        if p.sess_var == old:
            return p
        return type(p)(p.shared, p.role, p.sess_var, rename_session(p.body, old, new))
    if isinstance(p, GuardedSelect):
        s = new if p.session == old else p.session
        return GuardedSelect(s, p.role_self, p.role_to,
                             tuple(GBranchP(b.guard, b.label, b.payload, b.var,
                                            b.update, rename_session(b.cont, old, new))
                                   for b in p.branches))
    if isinstance(p, Branching):
        s = new if p.session == old else p.session
        return Branching(s, p.role_from, p.role_self,
                         tuple(PBranchP(b.label, b.var, b.update,
                                        rename_session(b.cont, old, new))
                               for b in p.branches))
    if isinstance(p, Par):
        return Par(rename_session(p.left, old, new), rename_session(p.right, old, new))
    if isinstance(p, RecDef):
        return RecDef(p.var, p.param, p.init, rename_session(p.body, old, new))
    if isinstance(p, PendingUpdate):
        return PendingUpdate(p.update, rename_session(p.cont, old, new))
    raise KernelError(f"unknown process node {p!r}")


def process_sessions(p: Process) -> frozenset[tuple[str, str]]:
    """Session-role pairs on which the process may communicate."""
    if isinstance(p, (Inact, RecCallP)):
        return frozenset()
    if isinstance(p, (Request, Accept)):
        return frozenset((s, r) for s, r in process_sessions(p.body)
                         if s != p.sess_var)
    if isinstance(p, GuardedSelect):
        out = frozenset([(p.session, p.role_self)])
        for b in p.branches:
            out |= process_sessions(b.cont)
        return out
    if isinstance(p, Branching):
        out = frozenset([(p.session, p.role_self)])
        for b in p.branches:
            out |= process_sessions(b.cont)
        return out
    if isinstance(p, Par):
        return process_sessions(p.left) | process_sessions(p.right)
    if isinstance(p, RecDef):
        return process_sessions(p.body)
    if isinstance(p, PendingUpdate):
        return process_sessions(p.cont)
    raise KernelError(f"unknown process node {p!r}")


def process_shared_names(p: Process) -> frozenset[str]:
    if isinstance(p, (Inact, RecCallP)):
        return frozenset()
    if isinstance(p, (Request, Accept)):
        return frozenset([p.shared]) | process_shared_names(p.body)
    if isinstance(p, GuardedSelect):
        out = frozenset()
        for b in p.branches:
            out |= process_shared_names(b.cont)
        return out
    if isinstance(p, Branching):
        out = frozenset()
        for b in p.branches:
            out |= process_shared_names(b.cont)
        return out
    if isinstance(p, Par):
        return process_shared_names(p.left) | process_shared_names(p.right)
    if isinstance(p, (RecDef, PendingUpdate)):
        return process_shared_names(p.body if isinstance(p, RecDef) else p.cont)
    raise KernelError(f"unknown process node {p!r}")


# ---------------------------------------------------------------------------
# Actions (LTS labels) and action patterns (formula modalities)

@dataclass(frozen=True)
class Action:
    pass


@dataclass(frozen=True)
class OutputAct(Action):
    session: str
    role_from: str
    role_to: str
    value: object


@dataclass(frozen=True)
class InputAct(Action):
    session: str
    role_from: str
    role_to: str
    value: object


@dataclass(frozen=True)
class UpdateAct(Action):
    update: Update


@dataclass(frozen=True)
class AcceptAct(Action):
    shared: str
    session: str
    role: str


@dataclass(frozen=True)
class ActionPattern:
    pass


@dataclass(frozen=True)
class OutPat(ActionPattern):
    session: str
    role_from: str
    role_to: str
    var: str


@dataclass(frozen=True)
class InPat(ActionPattern):
    session: str
    role_from: str
    role_to: str
    var: str


@dataclass(frozen=True)
class UpdPat(ActionPattern):
    update: Update


@dataclass(frozen=True)
class AcceptPat(ActionPattern):
    shared: str
    sess_var: str
    role: str


@dataclass(frozen=True)
class LabelPat(ActionPattern):
    """Abstract interaction label, used when protocols are summarised by
    bare labels (e.g. in the recursion pipeline)."""
    name: str


# ---------------------------------------------------------------------------
# Formulae

@dataclass(frozen=True)
class Formula:
    pass


@dataclass(frozen=True)
class Tru(Formula):
    pass


TRUE_F = Tru()


@dataclass(frozen=True)
class Conj(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    hyp: Predicate
    body: Formula


@dataclass(frozen=True)
class Must(Formula):
    pattern: ActionPattern
    body: Formula


@dataclass(frozen=True)
class PredF(Formula):
    pred: Predicate


@dataclass(frozen=True)
class ForallF(Formula):
    var: str
    sort: Sort
    body: Formula


@dataclass(frozen=True)
class SessionSort(Sort):
    """Pseudo-sort for quantification over session names; the domain comes
    from the checking bounds, not from an enumeration bound."""


@dataclass(frozen=True)
class Mu(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class FVar(Formula):
    var: str


def conj(parts: list[Formula]) -> Formula:
    parts = [p for p in parts]
    if not parts:
        return TRUE_F
    out = parts[0]
    for p in parts[1:]:
        out = Conj(out, p)
    return out


def conjuncts(phi: Formula) -> list[Formula]:
    if isinstance(phi, Conj):
        return conjuncts(phi.left) + conjuncts(phi.right)
    return [phi]


class PositivityError(KernelError):
    pass


def check_positive(phi: Formula, mu_bound: frozenset[str] = frozenset(),
                   guarded: bool = True) -> None:
    """The positive fragment: implication antecedents are plain predicates,
    and mu-variables are bound and guarded by a modality."""
    if isinstance(phi, (Tru, PredF)):
        return
    if isinstance(phi, Conj):
        check_positive(phi.left, mu_bound, guarded)
        check_positive(phi.right, mu_bound, guarded)
        return
    if isinstance(phi, Implies):
        if not isinstance(phi.hyp, Expr):
            raise PositivityError("implication antecedent must be a predicate")
        check_positive(phi.body, mu_bound, guarded)
        return
    if isinstance(phi, Must):
        check_positive(phi.body, mu_bound, True)
        return
    if isinstance(phi, ForallF):
        check_positive(phi.body, mu_bound, guarded)
        return
    if isinstance(phi, Mu):
        check_positive(phi.body, mu_bound | {phi.var}, False)
        return
    if isinstance(phi, FVar):
        if phi.var not in mu_bound:
            raise PositivityError(f"unbound mu-variable {phi.var}")
        if not guarded:
            raise PositivityError(f"unguarded mu-variable {phi.var}")
        return
    raise KernelError(f"unknown formula node {phi!r}")


def formula_free_vars(phi: Formula) -> frozenset[str]:
    """Free message variables of a formula (quantifier-aware)."""
    if isinstance(phi, Tru):
        return frozenset()
    if isinstance(phi, Conj):
        return formula_free_vars(phi.left) | formula_free_vars(phi.right)
    if isinstance(phi, Implies):
        return expr_vars(phi.hyp) | formula_free_vars(phi.body)
    if isinstance(phi, Must):
        pat = phi.pattern
        pv: frozenset[str] = frozenset()
        if isinstance(pat, (OutPat, InPat)):
            pv = frozenset([pat.var])
        elif isinstance(pat, UpdPat):
            pv = update_vars(pat.update)
        elif isinstance(pat, AcceptPat):
            pv = frozenset([pat.sess_var])
        return pv | formula_free_vars(phi.body)
    if isinstance(phi, PredF):
        return expr_vars(phi.pred)
    if isinstance(phi, ForallF):
        return formula_free_vars(phi.body) - {phi.var}
    if isinstance(phi, Mu):
        return formula_free_vars(phi.body)
    if isinstance(phi, FVar):
        return frozenset()
    raise KernelError(f"unknown formula node {phi!r}")


def formula_sessions(phi: Formula) -> frozenset[str]:
    """Session names (and bare interaction labels) mentioned in modalities."""
    if isinstance(phi, (Tru, PredF, FVar)):
        return frozenset()
    if isinstance(phi, Conj):
        return formula_sessions(phi.left) | formula_sessions(phi.right)
    if isinstance(phi, (Implies, ForallF, Mu)):
        return formula_sessions(phi.body)
    if isinstance(phi, Must):
        pat = phi.pattern
        out = formula_sessions(phi.body)
        if isinstance(pat, (OutPat, InPat)):
            out |= frozenset([pat.session])
        elif isinstance(pat, AcceptPat):
            out |= frozenset([pat.shared])
        elif isinstance(pat, LabelPat):
            out |= frozenset([pat.name])
        return out
    raise KernelError(f"unknown formula node {phi!r}")


def subst_formula(phi: Formula, mapping: dict[str, Expr]) -> Formula:
    """Substitute message variables in predicates, patterns and updates."""
    if isinstance(phi, (Tru, FVar)):
        return phi
    if isinstance(phi, Conj):
        return Conj(subst_formula(phi.left, mapping), subst_formula(phi.right, mapping))
    if isinstance(phi, Implies):
        return Implies(subst_expr(phi.hyp, mapping), subst_formula(phi.body, mapping))
    if isinstance(phi, PredF):
        return PredF(subst_expr(phi.pred, mapping))
    if isinstance(phi, Must):
        pat = phi.pattern
        if isinstance(pat, UpdPat):
            pat = UpdPat(subst_update(pat.update, mapping))
        return Must(pat, subst_formula(phi.body, mapping))
    if isinstance(phi, ForallF):
        inner = {k: v for k, v in mapping.items() if k != phi.var}
        return ForallF(phi.var, phi.sort, subst_formula(phi.body, inner))
    if isinstance(phi, Mu):
        return Mu(phi.var, subst_formula(phi.body, mapping))
    raise KernelError(f"unknown formula node {phi!r}")


def subst_formula_var(phi: Formula, var: str, repl: Formula) -> Formula:
    """Substitute a mu-variable by a formula (for unfolding)."""
    if isinstance(phi, FVar):
        return repl if phi.var == var else phi
    if isinstance(phi, (Tru, PredF)):
        return phi
    if isinstance(phi, Conj):
        return Conj(subst_formula_var(phi.left, var, repl),
                    subst_formula_var(phi.right, var, repl))
    if isinstance(phi, Implies):
        return Implies(phi.hyp, subst_formula_var(phi.body, var, repl))
    if isinstance(phi, Must):
        return Must(phi.pattern, subst_formula_var(phi.body, var, repl))
    if isinstance(phi, ForallF):
        return ForallF(phi.var, phi.sort, subst_formula_var(phi.body, var, repl))
    if isinstance(phi, Mu):
        if phi.var == var:
            return phi
        return Mu(phi.var, subst_formula_var(phi.body, var, repl))
    raise KernelError(f"unknown formula node {phi!r}")


# ---------------------------------------------------------------------------
# Virtual states and environments

VirtualState = dict  # str -> int | bool; treated as immutable by convention


def state_key(sigma: VirtualState) -> tuple:
    return tuple(sorted(sigma.items()))


@dataclass(frozen=True)
class SessionRole:
    session: str
    role: str

    def __str__(self):
        return f"{self.session}[{self.role}]"


@dataclass(frozen=True)
class Env:
    """The judgement context: precondition, shared-channel environment
    (per-role assertion tables) and session environment."""
    pre: Predicate
    gamma: tuple[tuple[str, tuple[tuple[str, LocalAssertion], ...]], ...]
    delta: tuple[tuple[SessionRole, LocalAssertion], ...]

    def gamma_dict(self) -> dict[str, dict[str, LocalAssertion]]:
        return {a: dict(tbl) for a, tbl in self.gamma}

    def delta_dict(self) -> dict[SessionRole, LocalAssertion]:
        return dict(self.delta)


def make_env(pre: Predicate = TRUE,
             gamma: dict[str, dict[str, LocalAssertion]] | None = None,
             delta: dict[SessionRole, LocalAssertion] | None = None) -> Env:
    gamma = gamma or {}
    delta = delta or {}
    if len(set(delta)) != len(delta):
        raise KernelError("duplicate session-roles in delta")
    return Env(pre,
               tuple((a, tuple(tbl.items())) for a, tbl in gamma.items()),
               tuple(delta.items()))


# ---------------------------------------------------------------------------
# JSON export

def to_json(node) -> object:
    """Stable JSON form of any kernel AST node."""
    if is_dataclass(node) and not isinstance(node, type):
        out = {"kind": type(node).__name__}
        for f in fields(node):
            out[f.name] = to_json(getattr(node, f.name))
        return out
    if isinstance(node, tuple):
        return [to_json(x) for x in node]
    if isinstance(node, dict):
        return {str(k): to_json(v) for k, v in node.items()}
    return node
