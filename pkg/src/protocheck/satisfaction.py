"""Bounded satisfaction checking of positive formulae against LTS
configurations.

The must modality quantifies over all matching transitions (vacuously true
when there are none); quantifiers enumerate bounded sort domains; recursion
unfolds up to a depth budget with a three-valued verdict.
"""

from __future__ import annotations

from dataclasses import dataclass

from .bounds import Bounds, DEFAULT_BOUNDS
from .kernel import (
    AcceptAct, AcceptPat, Action, Conj, Formula, ForallF, FVar, Implies,
    InPat, InputAct, KernelError, LabelPat, LocalAssertion, Mu, Must,
    OutPat, OutputAct, PredF, Predicate, Process, SessionRole, SessionSort,
    Tru, UpdPat, UpdateAct, VirtualState, literal, subst_formula_var,
    subst_update,
)
from .lts import Config, format_action, step
from .predicates import Binding, eval_expr


HOLDS = "holds"
FAILS = "fails"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Verdict:
    status: str
    witness: tuple[Action, ...] | None = None
    obligations: int = 0

    @property
    def holds(self) -> bool:
        return self.status == HOLDS

    def to_json(self) -> dict:
        out = {"verdict": self.status,
               "obligations_checked": self.obligations}
        if self.witness is not None:
            out["witness"] = [format_action(a) for a in self.witness]
        return out


class _Counter:
    __slots__ = ("n",)

    def __init__(self):
        self.n = 0


def sat(c: Config, phi: Formula, bounds: Bounds = DEFAULT_BOUNDS,
        env: dict | None = None) -> Verdict:
    """Check a configuration against a formula; ``env`` pre-binds free
    message variables of the formula."""
    counter = _Counter()
    status, witness = _sat(c, phi, dict(env or {}), bounds.mu_depth, bounds,
                           counter)
    return Verdict(status, witness, counter.n)


def check_judgement(pre: Predicate,
                    gamma: dict[str, dict[str, LocalAssertion]] | None,
                    delta: dict[SessionRole, LocalAssertion],
                    process: Process, sigma: VirtualState,
                    bounds: Bounds = DEFAULT_BOUNDS) -> Verdict:
    """sat of (precondition => environment formula); a failing precondition
    yields a vacuous holds."""
    from .shuffle import env_formula

    phi = env_formula(delta, gamma, bounds)
    cfg = Config.make(process, sigma)
    return sat(cfg, Implies(pre, phi), bounds)


def _sat(cfg: Config, phi: Formula, env: dict, fuel: int, bounds: Bounds,
         counter: _Counter):
    counter.n += 1
    if isinstance(phi, Tru):
        return HOLDS, None
    if isinstance(phi, Conj):
        return _all([(cfg, phi.left, env, fuel), (cfg, phi.right, env, fuel)],
                    bounds, counter)
    if isinstance(phi, PredF):
        b = Binding(dict(env), cfg.sigma)
        v = eval_expr(phi.pred, b)
        return (HOLDS, None) if v else (FAILS, ())
    if isinstance(phi, Implies):
        b = Binding(dict(env), cfg.sigma)
        if not eval_expr(phi.hyp, b):
            return HOLDS, None
        return _sat(cfg, phi.body, env, fuel, bounds, counter)
    if isinstance(phi, ForallF):
        if isinstance(phi.sort, SessionSort):
            domain = list(bounds.session_names)
        else:
            domain = bounds.domain(phi.sort)
        obligations = []
        for v in domain:
            env2 = dict(env)
            env2[phi.var] = v
            obligations.append((cfg, phi.body, env2, fuel))
        return _all(obligations, bounds, counter)
    if isinstance(phi, Must):
        if isinstance(phi.pattern, LabelPat):
            return HOLDS, None  # abstract labels have no concrete transitions
        obligations = []
        witness_acts = []
        for act, cfg2 in step(cfg, bounds):
            binding = _match(phi.pattern, act, env)
            if binding is None:
                continue
            env2 = dict(env)
            env2.update(binding)
            obligations.append((cfg2, phi.body, env2, fuel))
            witness_acts.append(act)
        status, witness, idx = _all_idx(obligations, bounds, counter)
        if status == FAILS:
            return FAILS, (witness_acts[idx],) + (witness or ())
        return status, None
    if isinstance(phi, Mu):
        if fuel <= 0:
            return INCONCLUSIVE, None
        unfolded = subst_formula_var(phi.body, phi.var, phi)
        return _sat(cfg, unfolded, env, fuel - 1, bounds, counter)
    if isinstance(phi, FVar):
        raise KernelError(f"free mu-variable {phi.var} during checking")
    raise KernelError(f"unknown formula node {phi!r}")


def _all(obligations, bounds: Bounds, counter: _Counter):
    status, witness, _ = _all_idx(obligations, bounds, counter)
    return status, witness


def _all_idx(obligations, bounds: Bounds, counter: _Counter):
    """Three-valued conjunction over sub-obligations; reports which
    obligation failed and its witness trace."""
    saw_inconclusive = False
    for i, (cfg, phi, env, fuel) in enumerate(obligations):
        status, witness = _sat(cfg, phi, env, fuel, bounds, counter)
        if status == FAILS:
            return FAILS, witness or (), i
        if status == INCONCLUSIVE:
            saw_inconclusive = True
    return (INCONCLUSIVE if saw_inconclusive else HOLDS), None, -1


def _match(pattern, act: Action, env: dict):
    if isinstance(pattern, OutPat):
        if not isinstance(act, OutputAct):
            return None
        sess = env.get(pattern.session, pattern.session)
        if (sess, pattern.role_from, pattern.role_to) != \
                (act.session, act.role_from, act.role_to):
            return None
        if pattern.var in env:
            return {} if env[pattern.var] == act.value else None
        return {pattern.var: act.value}
    if isinstance(pattern, InPat):
        if not isinstance(act, InputAct):
            return None
        sess = env.get(pattern.session, pattern.session)
        if (sess, pattern.role_from, pattern.role_to) != \
                (act.session, act.role_from, act.role_to):
            return None
        if pattern.var in env:
            return {} if env[pattern.var] == act.value else None
        return {pattern.var: act.value}
    if isinstance(pattern, UpdPat):
        if not isinstance(act, UpdateAct):
            return None
        mapping = {k: literal(v) for k, v in env.items()
                   if isinstance(v, (int, bool))}
        expected = subst_update(pattern.update, mapping)
        return {} if expected == act.update else None
    if isinstance(pattern, AcceptPat):
        if not isinstance(act, AcceptAct):
            return None
        if pattern.shared != act.shared or pattern.role != act.role:
            return None
        if pattern.sess_var in env:
            return {} if env[pattern.sess_var] == act.session else None
        return {pattern.sess_var: act.session}
    raise KernelError(f"malformed action pattern {pattern!r}")
