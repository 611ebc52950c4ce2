"""Expression evaluation under a virtual state plus message-variable
binding, and bounded validity of implications.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .bounds import Bounds, DEFAULT_BOUNDS
from .kernel import (
    BinOp, BoolLit, Expr, IntLit, Not, Predicate, Sort, StateVar, Update,
    Var, VirtualState,
)


class EvalError(Exception):
    pass


@dataclass
class Binding:
    """Message/recursion variable values together with the virtual state
    used to resolve @-variables."""
    values: dict[str, object] = field(default_factory=dict)
    state: VirtualState = field(default_factory=dict)

    def extend(self, var: str, value) -> "Binding":
        new = dict(self.values)
        new[var] = value
        return Binding(new, self.state)


def eval_expr(e: Expr, b: Binding):
    if isinstance(e, IntLit):
        return e.value
    if isinstance(e, BoolLit):
        return e.value
    if isinstance(e, Var):
        if e.name not in b.values:
            raise EvalError(f"unbound variable {e.name}")
        return b.values[e.name]
    if isinstance(e, StateVar):
        if e.name not in b.state:
            raise EvalError(f"unknown state variable @{e.name}")
        return b.state[e.name]
    if isinstance(e, Not):
        v = eval_expr(e.operand, b)
        _need(bool, v, e)
        return not v
    if isinstance(e, BinOp):
        lv = eval_expr(e.left, b)
        rv = eval_expr(e.right, b)
        op = e.op
        if op in ("+", "-", "*"):
            _need(int, lv, e)
            _need(int, rv, e)
            return lv + rv if op == "+" else lv - rv if op == "-" else lv * rv
        if op in ("<", "<=", ">", ">="):
            _need(int, lv, e)
            _need(int, rv, e)
            return {"<": lv < rv, "<=": lv <= rv,
                    ">": lv > rv, ">=": lv >= rv}[op]
        if op == "==":
            return lv == rv
        if op == "!=":
            return lv != rv
        if op == "/\\":
            _need(bool, lv, e)
            _need(bool, rv, e)
            return lv and rv
        if op == "\\/":
            _need(bool, lv, e)
            _need(bool, rv, e)
            return lv or rv
    raise EvalError(f"cannot evaluate {e!r}")


def _need(ty, v, e):
    # bool is a subclass of int; check exactly
    if (ty is int and isinstance(v, bool)) or not isinstance(v, ty):
        from .printer import print_expr
        raise EvalError(f"sort mismatch evaluating {print_expr(e)}: "
                        f"got {v!r}, expected {ty.__name__}")


def holds(pred: Predicate, sigma: VirtualState, b: Binding | None = None) -> bool:
    binding = Binding(dict(b.values) if b else {}, sigma)
    v = eval_expr(pred, binding)
    if not isinstance(v, bool):
        raise EvalError(f"predicate evaluated to non-boolean {v!r}")
    return v


class DomainTooLarge(Exception):
    pass


def valid_bounded(hyp: Predicate, concl: Predicate, ctx: dict[str, Sort],
                  bounds: Bounds = DEFAULT_BOUNDS,
                  state_ctx: dict[str, Sort] | None = None):
    """Exhaustively check hyp => concl over the product of the bounded sort
    domains.  Returns True or a counterexample Binding."""
    state_ctx = state_ctx or {}
    names = sorted(ctx) + sorted(state_ctx)
    domains = [bounds.domain(ctx[n]) for n in sorted(ctx)] + \
              [bounds.domain(state_ctx[n]) for n in sorted(state_ctx)]
    total = 1
    for d in domains:
        total *= len(d)
        if total > bounds.domain_cap:
            raise DomainTooLarge(
                f"validity check over {total}+ assignments exceeds the cap "
                f"({bounds.domain_cap})")
    n_msg = len(ctx)
    for combo in itertools.product(*domains):
        values = dict(zip(names[:n_msg], combo[:n_msg]))
        state = dict(zip(names[n_msg:], combo[n_msg:]))
        b = Binding(values, state)
        if eval_expr(hyp, b) and not eval_expr(concl, b):
            return b
    return True


def is_valid(hyp: Predicate, concl: Predicate, ctx: dict[str, Sort],
             bounds: Bounds = DEFAULT_BOUNDS,
             state_ctx: dict[str, Sort] | None = None) -> bool:
    return valid_bounded(hyp, concl, ctx, bounds, state_ctx) is True


def apply_update(upd: Update, sigma: VirtualState,
                 b: Binding | None = None) -> VirtualState:
    """Apply an update; right-hand sides read the pre-state."""
    binding = Binding(dict(b.values) if b else {}, sigma)
    new = dict(sigma)
    for x, e in upd.assigns:
        if x not in sigma:
            raise EvalError(f"update writes unknown state variable @{x}")
        new[x] = eval_expr(e, binding)
    return new
