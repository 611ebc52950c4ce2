"""Labelled transition system over configurations (process, state).

Communication steps leave the state untouched; each communication is
immediately followed by one observable update step; recursion unfolds
silently; parallel components interleave without internal synchronisation
(the checker drives open processes).
"""

from __future__ import annotations

from dataclasses import dataclass

from .bounds import Bounds, DEFAULT_BOUNDS
from .kernel import (
    Accept, AcceptAct, Action, Branching, GuardedSelect, Inact, InputAct,
    KernelError, OutputAct, Par, PendingUpdate, Process, RecCallP, RecDef,
    Request, UpdateAct, VirtualState, literal, rename_session, subst_process,
    )
from .predicates import Binding, apply_update, eval_expr
from .printer import print_update


class GuardError(Exception):
    """Guard set not exhaustive or not exclusive at the current state."""


@dataclass(frozen=True)
class Config:
    process: Process
    state: tuple  # sorted (name, value) pairs

    @staticmethod
    def make(process: Process, sigma: VirtualState) -> "Config":
        return Config(process, tuple(sorted(sigma.items())))

    @property
    def sigma(self) -> VirtualState:
        return dict(self.state)


_MAX_UNFOLD = 64


def unfold(p: Process, sigma: VirtualState, depth: int = _MAX_UNFOLD) -> Process:
    """Resolve top-level recursive definitions to their bodies."""
    if depth <= 0:
        raise KernelError("non-contractive process recursion")
    if isinstance(p, RecDef):
        v = eval_expr(p.init, Binding({}, sigma))
        body = subst_process(p.body, {p.param: literal(v)})
        body = _subst_recvar(body, p.var, p.param, p.body)
        return unfold(body, sigma, depth - 1)
    return p


def _subst_recvar(p: Process, var: str, param: str, body: Process) -> Process:
    """Replace calls X<e> by the re-armed definition (mu X(param := e). body)."""
    from .kernel import (GBranchP, PBranchP)
    if isinstance(p, RecCallP) and p.var == var:
        return RecDef(var, param, p.arg, body)
    if isinstance(p, (Inact, RecCallP)):
        return p
    if isinstance(p, (Request, Accept)):
        return type(p)(p.shared, p.role, p.sess_var,
                       _subst_recvar(p.body, var, param, body))
    if isinstance(p, GuardedSelect):
        return GuardedSelect(p.session, p.role_self, p.role_to,
                             tuple(GBranchP(b.guard, b.label, b.payload, b.var,
                                            b.update,
                                            _subst_recvar(b.cont, var, param, body))
                                   for b in p.branches))
    if isinstance(p, Branching):
        return Branching(p.session, p.role_from, p.role_self,
                         tuple(PBranchP(b.label, b.var, b.update,
                                        _subst_recvar(b.cont, var, param, body))
                               for b in p.branches))
    if isinstance(p, Par):
        return Par(_subst_recvar(p.left, var, param, body),
                   _subst_recvar(p.right, var, param, body))
    if isinstance(p, RecDef):
        if p.var == var:  # shadowing
            return p
        return RecDef(p.var, p.param, p.init,
                      _subst_recvar(p.body, var, param, body))
    if isinstance(p, PendingUpdate):
        return PendingUpdate(p.update, _subst_recvar(p.cont, var, param, body))
    raise KernelError(f"unknown process node {p!r}")


def step(c: Config, bounds: Bounds = DEFAULT_BOUNDS) -> list[tuple[Action, Config]]:
    """The complete finite set of one-step successors."""
    sigma = c.sigma
    return [(act, Config.make(p2, s2))
            for act, p2, s2 in _step(c.process, sigma, bounds)]


def _step(p: Process, sigma: VirtualState, bounds: Bounds):
    p = unfold(p, sigma)
    if isinstance(p, Inact):
        return []
    if isinstance(p, PendingUpdate):
        s2 = apply_update(p.update, sigma)
        return [(UpdateAct(p.update), p.cont, s2)]
    if isinstance(p, GuardedSelect):
        b = Binding({}, sigma)
        enabled = [br for br in p.branches if eval_expr(br.guard, b)]
        if not enabled:
            raise GuardError(
                f"no guard enabled in {p.session}[{p.role_self},{p.role_to}]! "
                f"at state {sigma}")
        if len(enabled) > 1:
            raise GuardError(
                f"guards not mutually exclusive in "
                f"{p.session}[{p.role_self},{p.role_to}]! at state {sigma}")
        br = enabled[0]
        v = eval_expr(br.payload, b)
        mapping = {br.var: literal(v)}
        from .kernel import subst_update
        nxt = PendingUpdate(subst_update(br.update, mapping),
                            subst_process(br.cont, mapping))
        return [(OutputAct(p.session, p.role_self, p.role_to, v), nxt, sigma)]
    if isinstance(p, Branching):
        out = []
        for br in p.branches:
            for v in bounds.input_domain():
                from .kernel import subst_update
                mapping = {br.var: literal(v)}
                nxt = PendingUpdate(subst_update(br.update, mapping),
                                    subst_process(br.cont, mapping))
                out.append((InputAct(p.session, p.role_from, p.role_self, v),
                            nxt, sigma))
        return out
    if isinstance(p, Par):
        out = []
        for act, l2, s2 in _step(p.left, sigma, bounds):
            out.append((act, Par(l2, p.right), s2))
        for act, r2, s2 in _step(p.right, sigma, bounds):
            out.append((act, Par(p.left, r2), s2))
        return out
    if isinstance(p, Accept):
        out = []
        for s in bounds.session_names:
            body = rename_session(p.body, p.sess_var, s)
            out.append((AcceptAct(p.shared, s, p.role), body, sigma))
        return out
    if isinstance(p, Request):
        # Closed-system initiation is out of scope; requests are inert here.
        return []
    raise KernelError(f"unknown process node {p!r}")


def traces(c: Config, depth: int,
           bounds: Bounds = DEFAULT_BOUNDS) -> set[tuple[Action, ...]]:
    """All maximal action sequences of length <= depth."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    out: set[tuple[Action, ...]] = set()

    def go(cfg: Config, prefix: tuple[Action, ...]):
        if len(prefix) >= depth:
            out.add(prefix)
            return
        succs = step(cfg, bounds)
        if not succs:
            out.add(prefix)
            return
        for act, nxt in succs:
            go(nxt, prefix + (act,))

    go(c, ())
    return out


def format_action(act: Action) -> str:
    if isinstance(act, OutputAct):
        v = "true" if act.value is True else "false" if act.value is False \
            else str(act.value)
        return f"{act.session}[{act.role_from},{act.role_to}]!{v}"
    if isinstance(act, InputAct):
        v = "true" if act.value is True else "false" if act.value is False \
            else str(act.value)
        return f"{act.session}[{act.role_from},{act.role_to}]?{v}"
    if isinstance(act, UpdateAct):
        return f"<{print_update(act.update)}>"
    if isinstance(act, AcceptAct):
        return f"{act.shared}({act.session}[{act.role}])"
    raise KernelError(f"unknown action {act!r}")
