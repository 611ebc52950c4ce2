"""Canonical pretty-printer: ``parse(print(ast)) == ast`` for every
well-formed AST.
"""

from __future__ import annotations

from .kernel import (
    ABranch, Accept, AcceptPat, ActionPattern, BinOp, BoolLit, BoolSort,
    Branch, Branching, Conj, EndA, Expr, Formula, FVar, ForallF, GuardedSelect, Implies, Inact, InPat, IntLit, IntSort, KernelError,
    LabelPat, LocalAssertion, Mu, Must, NatSort, Not, OutPat, Par, PendingUpdate, PredF, Process, RecA, RecCallA, RecCallP, RecDef, Request,
    Select, SessionSort, Sort, StateVar, Tru, UpdPat, Update, Var,
    conjuncts,
)

_LEVEL = {"\\/": 1, "/\\": 2,
          "<": 3, "<=": 3, ">": 3, ">=": 3, "==": 3, "!=": 3,
          "+": 4, "-": 4, "*": 5}


def print_expr(e: Expr, parent: int = 0) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, StateVar):
        return "@" + e.name
    if isinstance(e, Not):
        inner = print_expr(e.operand, 6)
        return f"not {inner}"
    if isinstance(e, BinOp):
        lvl = _LEVEL[e.op]
        right_lvl = lvl + 1 if e.op != "/\\" and e.op != "\\/" else lvl + 1
        s = f"{print_expr(e.left, lvl)} {e.op} {print_expr(e.right, right_lvl)}"
        return f"({s})" if lvl < parent else s
    raise KernelError(f"cannot print expression {e!r}")


def print_sort(s: Sort) -> str:
    if isinstance(s, IntSort):
        return "Int"
    if isinstance(s, NatSort):
        return "Nat"
    if isinstance(s, BoolSort):
        return "Bool"
    if isinstance(s, SessionSort):
        return "Session"
    raise KernelError(f"cannot print sort {s!r}")


def print_update(u: Update) -> str:
    if u.is_skip:
        return "skip"
    return ", ".join(f"@{x}:={print_expr(e, 4)}" for x, e in u.assigns)


# ---------------------------------------------------------------------------
# Assertions

def print_assertion(a: LocalAssertion) -> str:
    if isinstance(a, EndA):
        return "end"
    if isinstance(a, Select):
        return f"{a.partner}!{{ {_branches(a.branches)} }}"
    if isinstance(a, Branch):
        return f"{a.partner}?{{ {_branches(a.branches)} }}"
    if isinstance(a, RecA):
        return (f"mu {a.var} {{{a.init_var}: {print_expr(a.init_pred)}}}"
                f"({a.param}:{print_sort(a.sort)}). {print_assertion(a.body)}"
                f" : {print_expr(a.invariant)}")
    if isinstance(a, RecCallA):
        return f"{a.var}({a.arg_var}: {print_expr(a.arg_pred)})"
    raise KernelError(f"cannot print assertion {a!r}")


def _branches(bs: tuple[ABranch, ...]) -> str:
    return "; ".join(
        f"{b.label}({b.var}:{print_sort(b.sort)}){{{print_expr(b.pred)}}}"
        f"<{print_update(b.update)}>. {print_assertion(b.cont)}"
        for b in bs)


# ---------------------------------------------------------------------------
# Processes

def print_process(p: Process) -> str:
    if isinstance(p, Par):
        return f"{_par_side(p.left)} | {_par_side(p.right)}"
    return _prefix(p)


def _par_side(p: Process) -> str:
    return print_process(p) if isinstance(p, Par) else _prefix(p)


def _cont(p: Process) -> str:
    # A continuation binds tighter than '|'; parenthesise parallel bodies.
    if isinstance(p, Par):
        return f"({print_process(p)})"
    return _prefix(p)


def _prefix(p: Process) -> str:
    if isinstance(p, Inact):
        return "0"
    if isinstance(p, Request):
        return f"req {p.shared}[{p.role}]({p.sess_var}). {_cont(p.body)}"
    if isinstance(p, Accept):
        return f"acc {p.shared}[{p.role}]({p.sess_var}). {_cont(p.body)}"
    if isinstance(p, GuardedSelect):
        body = "; ".join(
            f"{print_expr(b.guard)} :: {b.label}<{print_expr(b.payload, 4)}>"
            f"({b.var})<{print_update(b.update)}>. {_cont(b.cont)}"
            for b in p.branches)
        return f"{p.session}[{p.role_self},{p.role_to}]!{{ {body} }}"
    if isinstance(p, Branching):
        body = "; ".join(
            f"{b.label}({b.var})<{print_update(b.update)}>. {_cont(b.cont)}"
            for b in p.branches)
        return f"{p.session}[{p.role_from},{p.role_self}]?{{ {body} }}"
    if isinstance(p, RecDef):
        return (f"mu {p.var}({p.param} := {print_expr(p.init)})."
                f" {_cont(p.body)}")
    if isinstance(p, RecCallP):
        return f"{p.var}<{print_expr(p.arg, 4)}>"
    if isinstance(p, PendingUpdate):
        return f"<{print_update(p.update)}>:: {_cont(p.cont)}"
    if isinstance(p, Par):
        return f"({print_process(p)})"
    raise KernelError(f"cannot print process {p!r}")


# ---------------------------------------------------------------------------
# Formulae

def print_actpat(pat: ActionPattern) -> str:
    if isinstance(pat, OutPat):
        return f"{pat.session}[{pat.role_from},{pat.role_to}]!({pat.var})"
    if isinstance(pat, InPat):
        return f"{pat.session}[{pat.role_from},{pat.role_to}]?({pat.var})"
    if isinstance(pat, UpdPat):
        return f"<{print_update(pat.update)}>"
    if isinstance(pat, AcceptPat):
        return f"{pat.shared}({pat.sess_var}[{pat.role}])"
    if isinstance(pat, LabelPat):
        return pat.name
    if hasattr(pat, "chan") and hasattr(pat, "term"):
        # Channel-level patterns from the state-free encoding.
        mark = "!" if type(pat).__name__.startswith("PiOut") else "?"
        return f"{pat.chan}{mark}({print_expr(pat.term)})"
    raise KernelError(f"cannot print action pattern {pat!r}")


def _pred_has_top_conj(phi: Formula) -> bool:
    return isinstance(phi, PredF) and isinstance(phi.pred, BinOp) \
        and phi.pred.op in ("/\\", "\\/")


def _atomic(phi: Formula) -> bool:
    """Safe to print bare inside a larger formula without ambiguity."""
    if isinstance(phi, (Tru, Must, FVar)):
        return True
    return isinstance(phi, PredF) and not _pred_has_top_conj(phi)


def print_formula(phi: Formula) -> str:
    if isinstance(phi, Tru):
        return "true"
    if isinstance(phi, PredF):
        return print_expr(phi.pred)
    if isinstance(phi, FVar):
        return phi.var
    if isinstance(phi, Conj):
        parts = conjuncts(phi)
        out = []
        for i, part in enumerate(parts):
            last = i == len(parts) - 1
            greedy = isinstance(part, (ForallF, Mu, Implies))
            if _pred_has_top_conj(part) or (greedy and not last):
                out.append(f"({print_formula(part)})")
            else:
                out.append(print_formula(part))
        return " /\\ ".join(out)
    if isinstance(phi, Implies):
        body = print_formula(phi.body) if _atomic(phi.body) \
            else f"({print_formula(phi.body)})"
        return f"{print_expr(phi.hyp, 3)} => {body}"
    if isinstance(phi, Must):
        if isinstance(phi.body, Must):
            return f"[{print_actpat(phi.pattern)}]{print_formula(phi.body)}"
        body = print_formula(phi.body) if _atomic(phi.body) \
            else f"({print_formula(phi.body)})"
        return f"[{print_actpat(phi.pattern)}] {body}"
    if isinstance(phi, ForallF):
        return f"forall {phi.var}:{print_sort(phi.sort)}. {print_formula(phi.body)}"
    if isinstance(phi, Mu):
        return f"mu {phi.var}. {print_formula(phi.body)}"
    raise KernelError(f"cannot print formula {phi!r}")
