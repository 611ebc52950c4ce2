"""Compiling the virtual state away: stores become value-passing processes,
state-reading formulae become pure modal formulae, and a small interpreter
checks the result.

The store for variables x1..xn is one output ("cell") per variable on
channel a_xi plus one replicated updater per variable: the updater receives
an update expression on channel xi, captures every cell, and re-emits them
with xi's cell replaced by the evaluated expression.  Updates in formulae
become output modalities on the xi channels; predicates become capture
chains over the a_xi channels.
"""

from __future__ import annotations

from dataclasses import dataclass

from .bounds import Bounds, DEFAULT_BOUNDS
from .kernel import (
    Accept, BoolLit, Branching, Conj, Expr, Formula, ForallF, FVar,
    GuardedSelect, Implies, Inact, InPat, KernelError, Mu, Must, OutPat, Par, PendingUpdate, PredF, Process, RecCallP, RecDef, Request,
    StateVar, Tru, UpdPat, Update, Var, VirtualState, expr_state_vars,
    literal, subst_expr, subst_process, subst_state_expr, subst_update,
)
from .predicates import Binding, eval_expr


class PureEncodingError(Exception):
    pass


# ---------------------------------------------------------------------------
# Process syntax

@dataclass(frozen=True)
class PiProcess:
    pass


@dataclass(frozen=True)
class PiNil(PiProcess):
    pass


@dataclass(frozen=True)
class PiPar(PiProcess):
    left: PiProcess
    right: PiProcess


@dataclass(frozen=True)
class PiEvalSubst:
    """The updater's re-emission payload eval(e[y/x]): the quoted expression
    received as ``quote_var`` with each state variable replaced by the
    matching captured value."""
    quote_var: str
    captures: tuple[tuple[str, str], ...]  # (state var, capture var)
    expr: Expr | None = None  # filled in once the quote arrives


@dataclass(frozen=True)
class PiSend(PiProcess):
    chan: str
    payload: object  # Expr | PiEvalSubst
    cont: PiProcess


@dataclass(frozen=True)
class PiRecv(PiProcess):
    chan: str
    var: str
    cont: PiProcess


@dataclass(frozen=True)
class PiRepl(PiProcess):
    proc: PiProcess  # a PiRecv


@dataclass(frozen=True)
class PiChoice(PiProcess):
    branches: tuple[tuple[Expr, PiProcess], ...]  # (guard, send- or recv-head)


@dataclass(frozen=True)
class PiRec(PiProcess):
    var: str
    param: str
    init: Expr
    body: PiProcess


@dataclass(frozen=True)
class PiRecCall(PiProcess):
    var: str
    arg: Expr


@dataclass(frozen=True)
class PiQuote:
    """A quoted expression travelling as a value on an update channel."""
    expr: Expr


# ---------------------------------------------------------------------------
# Channel naming

def cell_chan(x: str) -> str:
    return f"a_{x}"


def session_chan(session: str, r1: str, r2: str) -> str:
    return f"{session}[{r1},{r2}]"


def is_session_chan(chan: str) -> bool:
    return "[" in chan


# ---------------------------------------------------------------------------
# Store encoding

def _capture_var(x: str, store: list[str]) -> str:
    return "y" if len(store) == 1 else f"y_{x}"


def encode_store(sigma: VirtualState) -> PiProcess:
    store = sorted(sigma)
    parts: list[PiProcess] = []
    for x in store:
        parts.append(PiSend(cell_chan(x), literal(sigma[x]), PiNil()))
    for x in store:
        captures = tuple((z, _capture_var(z, store)) for z in store)
        emits: list[PiProcess] = []
        for z in store:
            if z == x:
                payload: object = PiEvalSubst("e", captures)
            else:
                payload = Var(_capture_var(z, store))
            emits.append(PiSend(cell_chan(z), payload, PiNil()))
        body: PiProcess = emits[0]
        for e in emits[1:]:
            body = PiPar(body, e)
        for z in reversed(store):
            body = PiRecv(cell_chan(z), _capture_var(z, store), body)
        parts.append(PiRepl(PiRecv(x, "e", body)))
    if not parts:
        return PiNil()
    out = parts[0]
    for p in parts[1:]:
        out = PiPar(out, p)
    return out


# ---------------------------------------------------------------------------
# Formula encoding

@dataclass(frozen=True)
class PiOutPat:
    chan: str
    term: object  # Expr (Var binds when free)


@dataclass(frozen=True)
class PiInPat:
    chan: str
    term: object


def _update_modality(upd: Update, store: list[str], body: Formula) -> Formula:
    """One output-on-x modality per assignment; skip re-emits the first
    cell's current value so process and formula stay in step."""
    if not upd.assigns:
        if not store:
            return body
        x = store[0]
        return Must(PiOutPat(x, StateVar(x)), body)
    out = body
    for x, e in reversed(upd.assigns):
        if x not in store:
            raise PureEncodingError(f"update writes @{x}, outside the store")
        out = Must(PiOutPat(x, e), out)
    return out


def _capture_chain(pred: Expr, store: list[str], fresh: list[int]) -> Formula:
    svars = sorted(expr_state_vars(pred))
    for x in svars:
        if x not in store:
            raise PureEncodingError(f"predicate reads @{x}, outside the store")
    mapping: dict[str, Expr] = {}
    pats = []
    for x in svars:
        fresh[0] += 1
        v = f"v{fresh[0]}"
        mapping[x] = Var(v)
        pats.append(PiOutPat(cell_chan(x), Var(v)))
    body: Formula = PredF(subst_state_expr(pred, mapping))
    for p in reversed(pats):
        body = Must(p, body)
    return body


def encode_formula(phi: Formula, store: list[str],
                   _fresh: list[int] | None = None) -> Formula:
    fresh = _fresh if _fresh is not None else [0]
    if isinstance(phi, Tru):
        return phi
    if isinstance(phi, Conj):
        return Conj(encode_formula(phi.left, store, fresh),
                    encode_formula(phi.right, store, fresh))
    if isinstance(phi, PredF):
        return _capture_chain(phi.pred, store, fresh)
    if isinstance(phi, Implies):
        if expr_state_vars(phi.hyp):
            # A state-reading hypothesis captures the cells it mentions
            # before testing.
            return _encode_implies(phi, store, fresh)
        return Implies(phi.hyp, encode_formula(phi.body, store, fresh))
    if isinstance(phi, ForallF):
        return ForallF(phi.var, phi.sort,
                       encode_formula(phi.body, store, fresh))
    if isinstance(phi, Must):
        pat = phi.pattern
        if isinstance(pat, UpdPat):
            return _update_modality(pat.update, store,
                                    encode_formula(phi.body, store, fresh))
        if isinstance(pat, OutPat):
            p2 = PiOutPat(session_chan(pat.session, pat.role_from,
                                       pat.role_to), Var(pat.var))
            return Must(p2, encode_formula(phi.body, store, fresh))
        if isinstance(pat, InPat):
            p2 = PiInPat(session_chan(pat.session, pat.role_from,
                                      pat.role_to), Var(pat.var))
            return Must(p2, encode_formula(phi.body, store, fresh))
        raise PureEncodingError(
            f"pattern {type(pat).__name__} has no pure encoding")
    if isinstance(phi, Mu):
        return Mu(phi.var, encode_formula(phi.body, store, fresh))
    if isinstance(phi, FVar):
        return phi
    raise KernelError(f"unknown formula node {phi!r}")


def _encode_implies(phi: Implies, store: list[str], fresh: list[int]) -> Formula:
    svars = sorted(expr_state_vars(phi.hyp))
    mapping: dict[str, Expr] = {}
    pats = []
    for x in svars:
        fresh[0] += 1
        v = f"v{fresh[0]}"
        mapping[x] = Var(v)
        pats.append(PiOutPat(cell_chan(x), Var(v)))
    body: Formula = Implies(subst_state_expr(phi.hyp, mapping),
                            encode_formula(phi.body, store, fresh))
    for p in reversed(pats):
        body = Must(p, body)
    return body


# ---------------------------------------------------------------------------
# Process encoding

def _check_state_free(e: Expr, what: str):
    if expr_state_vars(e):
        raise PureEncodingError(
            f"{what} reads the state; the pure encoding requires "
            f"state access only through updates")


def _encode_update(upd: Update, store: list[str], cont: PiProcess) -> PiProcess:
    if len(upd.assigns) > 1:
        raise PureEncodingError(
            "the pure encoding supports single-assignment updates only")
    if not upd.assigns:
        if not store:
            return cont
        x = store[0]
        return PiSend(x, StateVar(x), cont)
    x, e = upd.assigns[0]
    if x not in store:
        raise PureEncodingError(f"update writes @{x}, outside the store")
    return PiSend(x, e, cont)


def encode_process(p: Process, store: list[str]) -> PiProcess:
    if isinstance(p, Inact):
        return PiNil()
    if isinstance(p, GuardedSelect):
        chan = session_chan(p.session, p.role_self, p.role_to)
        branches = []
        for b in p.branches:
            _check_state_free(b.guard, "a selection guard")
            _check_state_free(b.payload, "a payload")
            # the payload variable aliases the sent expression on the
            # sender's side, so resolve it before encoding
            mapping = {b.var: b.payload}
            upd = subst_update(b.update, mapping)
            cont = _encode_update(upd, store,
                                  encode_process(subst_process(b.cont, mapping),
                                                 store))
            branches.append((b.guard, PiSend(chan, b.payload, cont)))
        if len(branches) == 1 and branches[0][0] == BoolLit(True):
            return branches[0][1]
        return PiChoice(tuple(branches))
    if isinstance(p, Branching):
        chan = session_chan(p.session, p.role_from, p.role_self)
        branches = []
        for b in p.branches:
            cont = _encode_update(b.update, store,
                                  encode_process(b.cont, store))
            branches.append((BoolLit(True), PiRecv(chan, b.var, cont)))
        if len(branches) == 1:
            return branches[0][1]
        return PiChoice(tuple(branches))
    if isinstance(p, Par):
        return PiPar(encode_process(p.left, store),
                     encode_process(p.right, store))
    if isinstance(p, RecDef):
        _check_state_free(p.init, "a recursion argument")
        return PiRec(p.var, p.param, p.init, encode_process(p.body, store))
    if isinstance(p, RecCallP):
        _check_state_free(p.arg, "a recursion argument")
        return PiRecCall(p.var, p.arg)
    if isinstance(p, PendingUpdate):
        return _encode_update(p.update, store,
                              encode_process(p.cont, store))
    if isinstance(p, (Request, Accept)):
        raise PureEncodingError(
            "shared-channel initiation has no pure encoding here")
    raise KernelError(f"unknown process node {p!r}")


# ---------------------------------------------------------------------------
# Substitution

def pi_subst(p: PiProcess, mapping: dict[str, object]) -> PiProcess:
    if isinstance(p, PiNil):
        return p
    if isinstance(p, PiPar):
        return PiPar(pi_subst(p.left, mapping), pi_subst(p.right, mapping))
    if isinstance(p, PiSend):
        return PiSend(p.chan, _subst_payload(p.payload, mapping),
                      pi_subst(p.cont, mapping))
    if isinstance(p, PiRecv):
        inner = {k: v for k, v in mapping.items() if k != p.var}
        return PiRecv(p.chan, p.var, pi_subst(p.cont, inner))
    if isinstance(p, PiRepl):
        return PiRepl(pi_subst(p.proc, mapping))
    if isinstance(p, PiChoice):
        return PiChoice(tuple((_subst_expr_v(g, mapping),
                               pi_subst(b, mapping))
                              for g, b in p.branches))
    if isinstance(p, PiRec):
        inner = {k: v for k, v in mapping.items() if k != p.param}
        return PiRec(p.var, p.param, _subst_expr_v(p.init, mapping),
                     pi_subst(p.body, inner))
    if isinstance(p, PiRecCall):
        return PiRecCall(p.var, _subst_expr_v(p.arg, mapping))
    raise KernelError(f"unknown pi node {p!r}")


def _subst_expr_v(e: Expr, mapping: dict[str, object]) -> Expr:
    plain = {k: literal(v) for k, v in mapping.items()
             if isinstance(v, (int, bool))}
    return subst_expr(e, plain)


def _subst_payload(payload, mapping: dict[str, object]):
    if isinstance(payload, PiEvalSubst):
        expr = payload.expr
        if payload.quote_var in mapping:
            q = mapping[payload.quote_var]
            if not isinstance(q, PiQuote):
                raise PureEncodingError(
                    f"update channel carried a non-quote value {q!r}")
            expr = q.expr
        if expr is not None:
            plain = {sv: literal(mapping[cv])
                     for sv, cv in payload.captures
                     if cv in mapping and isinstance(mapping[cv], (int, bool))}
            expr = subst_state_expr(expr, plain)
        return PiEvalSubst(payload.quote_var, payload.captures, expr)
    return _subst_expr_v(payload, mapping)


# ---------------------------------------------------------------------------
# Interpreter

@dataclass(frozen=True)
class PiOutAct:
    chan: str
    value: object


@dataclass(frozen=True)
class PiInAct:
    chan: str
    value: object


@dataclass(frozen=True)
class PiConfig:
    components: tuple[PiProcess, ...]
    fuel: int

    @staticmethod
    def make(p: PiProcess, fuel: int) -> "PiConfig":
        return PiConfig(tuple(_flatten(p)), fuel)


def _flatten(p: PiProcess) -> list[PiProcess]:
    if isinstance(p, PiNil):
        return []
    if isinstance(p, PiPar):
        return _flatten(p.left) + _flatten(p.right)
    return [p]


_MAX_UNFOLD = 64


def _unfold_pi(p: PiProcess, depth: int = _MAX_UNFOLD) -> PiProcess:
    if depth <= 0:
        raise PureEncodingError("non-contractive recursion")
    if isinstance(p, PiRec):
        v = eval_expr(p.init, Binding({}, {}))
        body = pi_subst(p.body, {p.param: v})
        body = _subst_pi_recvar(body, p.var, p.param, p.body)
        return _unfold_pi(body, depth - 1)
    return p


def _subst_pi_recvar(p: PiProcess, var: str, param: str,
                     body: PiProcess) -> PiProcess:
    if isinstance(p, PiRecCall) and p.var == var:
        return PiRec(var, param, p.arg, body)
    if isinstance(p, (PiNil, PiRecCall)):
        return p
    if isinstance(p, PiPar):
        return PiPar(_subst_pi_recvar(p.left, var, param, body),
                     _subst_pi_recvar(p.right, var, param, body))
    if isinstance(p, PiSend):
        return PiSend(p.chan, p.payload,
                      _subst_pi_recvar(p.cont, var, param, body))
    if isinstance(p, PiRecv):
        return PiRecv(p.chan, p.var, _subst_pi_recvar(p.cont, var, param, body))
    if isinstance(p, PiRepl):
        return PiRepl(_subst_pi_recvar(p.proc, var, param, body))
    if isinstance(p, PiChoice):
        return PiChoice(tuple((g, _subst_pi_recvar(b, var, param, body))
                              for g, b in p.branches))
    if isinstance(p, PiRec):
        if p.var == var:
            return p
        return PiRec(p.var, p.param, p.init,
                     _subst_pi_recvar(p.body, var, param, body))
    raise KernelError(f"unknown pi node {p!r}")


def _payload_value(payload, chan: str, store: list[str]):
    if isinstance(payload, PiEvalSubst):
        if payload.expr is None or expr_state_vars(payload.expr):
            raise PureEncodingError("re-emission fired before its captures")
        return eval_expr(payload.expr, Binding({}, {}))
    if chan in store:
        return PiQuote(payload)
    return eval_expr(payload, Binding({}, {}))


def _heads(comps: tuple[PiProcess, ...]):
    """Enumerate the active prefixes: (index, guard-checked process)."""
    out = []
    for i, c in enumerate(comps):
        c = _unfold_pi(c)
        if isinstance(c, PiChoice):
            for g, b in c.branches:
                if eval_expr(g, Binding({}, {})):
                    out.append((i, b))
        elif isinstance(c, (PiSend, PiRecv, PiRepl)):
            out.append((i, c))
    return out


def _settle(comps: tuple[PiProcess, ...]) -> tuple[PiProcess, ...]:
    """Perform every pending cell hand-off inside an in-progress update
    silently: an update is atomic from the observer's point of view."""
    while True:
        heads = _heads(comps)
        senders = {}
        for i, h in heads:
            if isinstance(h, PiSend) and h.chan.startswith("a_"):
                senders.setdefault(h.chan, (i, h))
        match = None
        for i, h in heads:
            if isinstance(h, PiRecv) and h.chan in senders:
                j, s = senders[h.chan]
                if j != i:
                    match = (j, s, i, h)
                    break
        if match is None:
            return comps
        j, s, i, h = match
        v = _payload_value(s.payload, s.chan, [])
        new = list(comps)
        new[j] = s.cont
        new[i] = pi_subst(h.cont, {h.var: v})
        comps = tuple(x for c in new for x in _flatten(_unfold_pi(c))
                      if not isinstance(x, PiNil))


def pi_step(cfg: PiConfig, store: list[str],
            bounds: Bounds = DEFAULT_BOUNDS):
    """Visible transitions after settlement.  Returns (transitions,
    fuel_blocked): the flag records that a replication sync was suppressed
    only by the fuel bound."""
    comps = _settle(tuple(x for c in cfg.components
                          for x in _flatten(_unfold_pi(c))))
    heads = _heads(comps)
    repls = {}
    for i, h in enumerate(comps):
        h2 = _unfold_pi(h)
        if isinstance(h2, PiRepl) and isinstance(h2.proc, PiRecv):
            repls[h2.proc.chan] = (i, h2.proc)
    out = []
    blocked = False
    for i, h in heads:
        if isinstance(h, PiSend):
            v = _payload_value(h.payload, h.chan, store)
            if h.chan in repls and h.chan in store:
                if cfg.fuel <= 0:
                    blocked = True
                    continue
                j, recv = repls[h.chan]
                new = list(comps)
                new[i] = h.cont
                new.append(pi_subst(recv.cont, {recv.var: v}))
                out.append((PiOutAct(h.chan, v),
                            PiConfig(_clean(new), cfg.fuel - 1)))
            else:
                new = list(comps)
                new[i] = h.cont
                out.append((PiOutAct(h.chan, v),
                            PiConfig(_clean(new), cfg.fuel)))
        elif isinstance(h, PiRecv) and is_session_chan(h.chan):
            for v in bounds.input_domain():
                new = list(comps)
                new[i] = pi_subst(h.cont, {h.var: v})
                out.append((PiInAct(h.chan, v),
                            PiConfig(_clean(new), cfg.fuel)))
    return out, blocked


def _clean(comps: list[PiProcess]) -> tuple[PiProcess, ...]:
    return tuple(x for c in comps for x in _flatten(c)
                 if not isinstance(x, PiNil))


def cell_outputs(cfg: PiConfig) -> dict[str, int]:
    """Available cell outputs per channel (for the linearity invariant)."""
    counts: dict[str, int] = {}
    comps = _settle(tuple(x for c in cfg.components
                          for x in _flatten(_unfold_pi(c))))
    for i, h in _heads(comps):
        if isinstance(h, PiSend) and h.chan.startswith("a_"):
            counts[h.chan] = counts.get(h.chan, 0) + 1
    return counts


# ---------------------------------------------------------------------------
# Pure satisfaction

HOLDS = "holds"
FAILS = "fails"
INCONCLUSIVE = "inconclusive"


def pi_sat(p: "PiProcess | PiConfig", phi: Formula, store: list[str],
           bounds: Bounds = DEFAULT_BOUNDS) -> str:
    cfg = p if isinstance(p, PiConfig) else PiConfig.make(p, bounds.repl_depth)
    return _pisat(cfg, phi, {}, bounds.mu_depth, store, bounds)


def _pisat(cfg: PiConfig, phi: Formula, env: dict, fuel: int,
           store: list[str], bounds: Bounds) -> str:
    if isinstance(phi, Tru):
        return HOLDS
    if isinstance(phi, Conj):
        return _pi_all([_pisat(cfg, phi.left, env, fuel, store, bounds),
                        _pisat(cfg, phi.right, env, fuel, store, bounds)])
    if isinstance(phi, PredF):
        v = eval_expr(phi.pred, Binding(dict(env), {}))
        return HOLDS if v else FAILS
    if isinstance(phi, Implies):
        if not eval_expr(phi.hyp, Binding(dict(env), {})):
            return HOLDS
        return _pisat(cfg, phi.body, env, fuel, store, bounds)
    if isinstance(phi, ForallF):
        results = []
        for v in bounds.domain(phi.sort):
            results.append(_pisat(cfg, phi.body, {**env, phi.var: v},
                                  fuel, store, bounds))
        return _pi_all(results)
    if isinstance(phi, Must):
        transitions, blocked = pi_step(cfg, store, bounds)
        results = []
        matched = False
        for act, cfg2 in transitions:
            binding = _pi_match(phi.pattern, act, env)
            if binding is None:
                continue
            matched = True
            if act.chan.startswith("a_") and isinstance(act.value, (int, bool)):
                # a formula-level capture only peeks at the cell; restore it
                # so the rest of the formula still finds the store intact
                cfg2 = PiConfig(
                    cfg2.components + (PiSend(act.chan, literal(act.value),
                                              PiNil()),),
                    cfg2.fuel)
            results.append(_pisat(cfg2, phi.body, {**env, **binding},
                                  fuel, store, bounds))
        if not matched and blocked:
            return INCONCLUSIVE
        return _pi_all(results)
    if isinstance(phi, Mu):
        if fuel <= 0:
            return INCONCLUSIVE
        from .kernel import subst_formula_var
        return _pisat(cfg, subst_formula_var(phi.body, phi.var, phi),
                      env, fuel - 1, store, bounds)
    if isinstance(phi, FVar):
        raise KernelError(f"free recursion variable {phi.var}")
    raise KernelError(f"unsupported pure formula node {phi!r}")


def _pi_all(results: list[str]) -> str:
    if FAILS in results:
        return FAILS
    if INCONCLUSIVE in results:
        return INCONCLUSIVE
    return HOLDS


def _pi_match(pattern, act, env: dict):
    if isinstance(pattern, PiOutPat):
        if not isinstance(act, PiOutAct) or act.chan != pattern.chan:
            return None
        return _match_term(pattern.term, act.value, env)
    if isinstance(pattern, PiInPat):
        if not isinstance(act, PiInAct) or act.chan != pattern.chan:
            return None
        return _match_term(pattern.term, act.value, env)
    return None


def _match_term(term, value, env: dict):
    if isinstance(term, Var) and term.name not in env:
        return {term.name: value}
    if isinstance(value, PiQuote):
        if not isinstance(term, Expr):
            return None
        plain = {k: literal(v) for k, v in env.items()
                 if isinstance(v, (int, bool))}
        return {} if subst_expr(term, plain) == value.expr else None
    want = eval_expr(term, Binding(dict(env), {}))
    return {} if want == value else None


# ---------------------------------------------------------------------------
# Printing

def print_pi(p: PiProcess) -> str:
    parts = [_pp_term(c) for c in _flatten(p)] or ["0"]
    return " | ".join(parts)


def _pp_term(p: PiProcess) -> str:
    if isinstance(p, PiNil):
        return "0"
    if isinstance(p, PiPar):
        return f"({print_pi(p)})"
    if isinstance(p, PiSend):
        head = f"{p.chan}<{_pp_payload(p.payload)}>"
        if isinstance(p.cont, PiNil):
            return head
        return f"{head}.{_pp_cont(p.cont)}"
    if isinstance(p, PiRecv):
        return f"{p.chan}({p.var}).{_pp_cont(p.cont)}"
    if isinstance(p, PiRepl):
        return f"!{_pp_term(p.proc)}"
    if isinstance(p, PiChoice):
        from .printer import print_expr
        return "(" + " + ".join(f"{print_expr(g)} :: {_pp_term(b)}"
                                for g, b in p.branches) + ")"
    if isinstance(p, PiRec):
        from .printer import print_expr
        return f"mu {p.var}({p.param} := {print_expr(p.init)}). {_pp_term(p.body)}"
    if isinstance(p, PiRecCall):
        from .printer import print_expr
        return f"{p.var}<{print_expr(p.arg)}>"
    raise KernelError(f"unknown pi node {p!r}")


def _pp_cont(p: PiProcess) -> str:
    if isinstance(p, PiPar):
        return f"({print_pi(p)})"
    return _pp_term(p)


def _pp_payload(payload) -> str:
    if isinstance(payload, PiEvalSubst):
        ys = ",".join(cv for _, cv in payload.captures)
        xs = ",".join(sv for sv, _ in payload.captures)
        return f"eval({payload.quote_var}[{ys}/{xs}])"
    from .printer import print_expr
    return print_expr(payload)


def print_pure_formula(phi: Formula) -> str:
    from .printer import print_formula, print_expr
    # Reuse the main printer by registering the pure patterns' text forms.
    return print_formula(phi)


# ---------------------------------------------------------------------------
# Parsing (the store/process fragment)

def parse_pi(text: str) -> PiProcess:
    from .parser import tokenize, ParseError
    toks = tokenize(text)
    pos = [0]

    def peek():
        return toks[pos[0]]

    def at(t: str) -> bool:
        return peek().text == t and peek().kind != "EOF"

    def accept(t: str) -> bool:
        if at(t):
            pos[0] += 1
            return True
        return False

    def expect(t: str):
        tok = peek()
        if not accept(t):
            raise ParseError(f"expected {t!r}, found {tok.text!r}",
                             tok.line, tok.col)

    def ident() -> str:
        tok = peek()
        if tok.kind not in ("IDENT", "INT"):
            raise ParseError(f"expected a name, found {tok.text!r}",
                             tok.line, tok.col)
        pos[0] += 1
        return tok.text

    def parse_par() -> PiProcess:
        p = parse_term()
        while accept("|"):
            p = PiPar(p, parse_term())
        return p

    def chan_name() -> str:
        name = ident()
        if accept("["):
            r1 = ident()
            expect(",")
            r2 = ident()
            expect("]")
            name = f"{name}[{r1},{r2}]"
        return name

    def parse_payload():
        tok = peek()
        if tok.kind == "IDENT" and tok.text == "eval":
            pos[0] += 1
            expect("(")
            qv = ident()
            expect("[")
            ys = [ident()]
            while accept(","):
                ys.append(ident())
            expect("/")
            xs = [ident()]
            while accept(","):
                xs.append(ident())
            expect("]")
            expect(")")
            if len(xs) != len(ys):
                raise ParseError("capture lists differ in length",
                                 tok.line, tok.col)
            return PiEvalSubst(qv, tuple(zip(xs, ys)))
        from .parser import Parser
        sub = Parser(toks[pos[0]:], strict_vars=False)
        e = sub.parse_expr(no_angle=True)
        pos[0] += sub.pos
        return e

    def parse_term() -> PiProcess:
        if accept("0"):
            return PiNil()
        if accept("!"):
            return PiRepl(parse_term())
        if accept("("):
            first = parse_par()
            if at("+"):
                branches = [(BoolLit(True), first)]
                while accept("+"):
                    branches.append((BoolLit(True), parse_term()))
                expect(")")
                return PiChoice(tuple(branches))
            expect(")")
            return first
        if accept("mu"):
            var = ident()
            expect("(")
            param = ident()
            expect(":=")
            from .parser import Parser
            sub = Parser(toks[pos[0]:], strict_vars=False)
            init = sub.parse_expr()
            pos[0] += sub.pos
            expect(")")
            expect(".")
            return PiRec(var, param, init, parse_term())
        name = chan_name()
        if accept("<"):
            payload = parse_payload()
            expect(">")
            if accept("."):
                return PiSend(name, payload, parse_term())
            return PiSend(name, payload, PiNil())
        expect("(")
        var = ident()
        expect(")")
        expect(".")
        return PiRecv(name, var, parse_term())

    out = parse_par()
    tok = peek()
    if tok.kind != "EOF":
        from .parser import ParseError as PE
        raise PE(f"unexpected trailing input {tok.text!r}", tok.line, tok.col)
    return out
