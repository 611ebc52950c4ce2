"""Surface-syntax parser for assertions, processes, formulae, updates and
expressions.

The grammar is deterministic except for one spot: inside a formula, a
parenthesised item may open either a predicate or a sub-formula; we try the
expression reading first and fall back.  Comparison with ``<`` / ``>`` is not
available at the top level of expressions that live inside angle brackets
(payloads, updates, recursion arguments); parenthesise to use it there.
"""

from __future__ import annotations

from dataclasses import dataclass

from .kernel import (
    ABranch, Accept, AcceptPat, BinOp, BoolLit, BoolSort, Branch, Branching,
    EndA, Expr, Formula, FVar, ForallF, GBranchP, GuardedSelect, Implies,
    Inact, InPat, IntLit, IntSort, KernelError, LabelPat, LocalAssertion,
    Mu, Must, NatSort, Not, OutPat, Par, PBranchP, PredF, Process, RecA,
    RecCallA, RecCallP, RecDef, Request, Select, Sort, StateVar, Tru,
    UpdPat, Update, Var, assertion_wellformed, check_positive,
)

KEYWORDS = {"end", "mu", "forall", "true", "false", "skip", "req", "acc",
            "not", "Int", "Nat", "Bool", "Session"}

SYMBOLS = ["::", ":=", "++", "/\\", "\\/", "=>", "==", "!=", "<=", ">=",
           "!", "?", "{", "}", "(", ")", "[", "]", "<", ">", ".", ":",
           ";", ",", "|", "@", "+", "-", "*", "/", "="]


class ParseError(Exception):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {msg}" if line else msg)
        self.line = line
        self.col = col


class SortError(ParseError):
    pass


@dataclass
class Token:
    kind: str  # IDENT, INT, SYM, KW, EOF
    text: str
    line: int
    col: int


def tokenize(src: str) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(src)
    while i < n:
        c = src[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and src[i] != "\n":
                i += 1
            continue
        if c.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            toks.append(Token("INT", src[i:j], line, col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] in "_'"):
                j += 1
            word = src[i:j]
            toks.append(Token("KW" if word in KEYWORDS else "IDENT", word, line, col))
            col += j - i
            i = j
            continue
        for sym in SYMBOLS:
            if src.startswith(sym, i):
                toks.append(Token("SYM", sym, line, col))
                col += len(sym)
                i += len(sym)
                break
        else:
            raise ParseError(f"unexpected character {c!r}", line, col)
    toks.append(Token("EOF", "", line, col))
    return toks


# Sort approximations used by the parse-time checker.
S_INT, S_BOOL, S_ANY = "int", "bool", "any"


def _approx(sort: Sort) -> str:
    from .kernel import SessionSort
    if isinstance(sort, SessionSort):
        return S_ANY
    return S_BOOL if isinstance(sort, BoolSort) else S_INT


class Parser:
    def __init__(self, src: "str | list[Token]", strict_vars: bool = True):
        self.toks = src if isinstance(src, list) else tokenize(src)
        self.pos = 0
        # var -> approximate sort; None entries are unconstrained
        self.scope: dict[str, str] = {}
        self.mu_scope: list[str] = []
        self.strict_vars = strict_vars

    # -- token plumbing -----------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "EOF":
            self.pos += 1
        return t

    def at(self, text: str) -> bool:
        t = self.peek()
        return t.text == text and t.kind in ("SYM", "KW", "INT")

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.next()
            return True
        return False

    def expect(self, text: str) -> Token:
        t = self.peek()
        if not self.at(text):
            raise ParseError(f"expected {text!r}, found {t.text!r}", t.line, t.col)
        return self.next()

    def ident(self, what: str = "identifier") -> str:
        t = self.peek()
        if t.kind != "IDENT":
            raise ParseError(f"expected {what}, found {t.text!r}", t.line, t.col)
        return self.next().text

    def err(self, msg: str) -> ParseError:
        t = self.peek()
        return ParseError(msg, t.line, t.col)

    def done(self):
        t = self.peek()
        if t.kind != "EOF":
            raise ParseError(f"trailing input starting at {t.text!r}", t.line, t.col)

    # -- expressions --------------------------------------------------------

    def parse_expr(self, no_angle: bool = False) -> Expr:
        return self._or(no_angle)

    def _or(self, na: bool) -> Expr:
        e = self._and(na)
        while self.at("\\/"):
            self.next()
            r = self._and(na)
            self._want_bool(e)
            self._want_bool(r)
            e = BinOp("\\/", e, r)
        return e

    def _and(self, na: bool) -> Expr:
        e = self._cmp(na)
        while self.at("/\\"):
            self.next()
            r = self._cmp(na)
            self._want_bool(e)
            self._want_bool(r)
            e = BinOp("/\\", e, r)
        return e

    def _cmp(self, na: bool) -> Expr:
        e = self._add(na)
        ops = ["==", "!=", "<=", ">="] + ([] if na else ["<", ">"])
        for op in ops:
            if self.at(op):
                self.next()
                r = self._add(na)
                if op in ("<", "<=", ">", ">="):
                    self._want_int(e)
                    self._want_int(r)
                return BinOp(op, e, r)
        return e

    def _add(self, na: bool) -> Expr:
        e = self._mul(na)
        while self.at("+") or self.at("-"):
            op = self.next().text
            r = self._mul(na)
            self._want_int(e)
            self._want_int(r)
            e = BinOp(op, e, r)
        return e

    def _mul(self, na: bool) -> Expr:
        e = self._unary(na)
        while self.at("*"):
            self.next()
            r = self._unary(na)
            self._want_int(e)
            self._want_int(r)
            e = BinOp("*", e, r)
        return e

    def _unary(self, na: bool) -> Expr:
        if self.accept("not"):
            e = self._unary(na)
            self._want_bool(e)
            return Not(e)
        if self.at("-"):
            self.next()
            e = self._unary(na)
            self._want_int(e)
            if isinstance(e, IntLit):
                return IntLit(-e.value)
            return BinOp("-", IntLit(0), e)
        return self._atom(na)

    def _atom(self, na: bool) -> Expr:
        t = self.peek()
        if t.kind == "INT":
            self.next()
            return IntLit(int(t.text))
        if self.accept("true"):
            return BoolLit(True)
        if self.accept("false"):
            return BoolLit(False)
        if self.at("@"):
            self.next()
            return StateVar(self.ident("state variable"))
        if t.kind == "IDENT":
            self.next()
            if self.strict_vars and t.text not in self.scope:
                raise ParseError(f"unbound variable {t.text!r}", t.line, t.col)
            return Var(t.text)
        if self.at("("):
            self.next()
            e = self.parse_expr(False)
            self.expect(")")
            return e
        raise ParseError(f"expected expression, found {t.text!r}", t.line, t.col)

    # -- approximate sorting ------------------------------------------------

    def _sort_of(self, e: Expr) -> str:
        if isinstance(e, IntLit):
            return S_INT
        if isinstance(e, BoolLit):
            return S_BOOL
        if isinstance(e, Var):
            return self.scope.get(e.name, S_ANY)
        if isinstance(e, StateVar):
            return S_ANY
        if isinstance(e, Not):
            return S_BOOL
        if isinstance(e, BinOp):
            if e.op in ("+", "-", "*"):
                return S_INT
            return S_BOOL
        raise KernelError(f"unknown expression {e!r}")

    def _want_int(self, e: Expr):
        if self._sort_of(e) == S_BOOL:
            from .printer import print_expr
            raise self.err(f"expression {print_expr(e)} is boolean where an "
                           f"integer is required")

    def _want_bool(self, e: Expr):
        if self._sort_of(e) == S_INT:
            from .printer import print_expr
            raise self.err(f"expression {print_expr(e)} is an integer where a "
                           f"boolean is required")

    def _pred(self, no_angle: bool = False) -> Expr:
        e = self.parse_expr(no_angle)
        self._want_bool(e)
        return e

    # -- sorts and updates --------------------------------------------------

    def parse_sort(self) -> Sort:
        if self.accept("Int"):
            return IntSort()
        if self.accept("Nat"):
            return NatSort()
        if self.accept("Bool"):
            return BoolSort()
        if self.accept("Session"):
            from .kernel import SessionSort
            return SessionSort()
        raise self.err("expected a sort (Int, Nat or Bool)")

    def parse_update(self) -> Update:
        if self.accept("skip"):
            return Update()
        assigns = []
        while True:
            self.expect("@")
            x = self.ident("state variable")
            if self.accept("++"):
                assigns.append((x, BinOp("+", StateVar(x), IntLit(1))))
            else:
                self.expect(":=")
                assigns.append((x, self.parse_expr(no_angle=True)))
            if not self.accept(","):
                break
        return Update(tuple(assigns))

    # -- local assertions ---------------------------------------------------

    def parse_assertion(self) -> LocalAssertion:
        if self.accept("end"):
            return EndA()
        if self.accept("mu"):
            tvar = self.ident("recursion variable")
            self.expect("{")
            init_var = self.ident()
            self.expect(":")
            with self._scoped({init_var: S_ANY}):
                init_pred = self._pred()
            self.expect("}")
            self.expect("(")
            param = self.ident()
            self.expect(":")
            sort = self.parse_sort()
            self.expect(")")
            self.expect(".")
            self.mu_scope.append(tvar)
            try:
                with self._scoped({param: _approx(sort)}):
                    body = self.parse_assertion()
                    self.expect(":")
                    inv = self._pred()
            finally:
                self.mu_scope.pop()
            return RecA(tvar, param, sort, init_var, init_pred, body, inv)
        name = self.ident("role or recursion variable")
        if self.accept("!"):
            return Select(name, self._abranches())
        if self.accept("?"):
            return Branch(name, self._abranches())
        if name in self.mu_scope and self.accept("("):
            arg_var = self.ident()
            self.expect(":")
            with self._scoped({arg_var: S_ANY}):
                arg_pred = self._pred()
            self.expect(")")
            return RecCallA(name, arg_var, arg_pred)
        raise self.err(f"expected '!', '?' or a recursion call after {name!r}")

    def _abranches(self) -> tuple[ABranch, ...]:
        self.expect("{")
        branches = []
        while True:
            t = self.peek()
            if t.kind in ("IDENT", "INT"):
                label = self.next().text
            else:
                raise ParseError(f"expected branch label, found {t.text!r}",
                                 t.line, t.col)
            self.expect("(")
            var = self.ident()
            self.expect(":")
            sort = self.parse_sort()
            self.expect(")")
            self.expect("{")
            with self._scoped({var: _approx(sort)}):
                pred = self._pred()
                self.expect("}")
                self.expect("<")
                upd = self.parse_update()
                self.expect(">")
                self.expect(".")
                cont = self.parse_assertion()
            branches.append(ABranch(label, var, sort, pred, upd, cont))
            if not self.accept(";"):
                break
        self.expect("}")
        try:
            return tuple(branches)
        except KernelError as e:
            raise self.err(str(e))

    # -- processes ----------------------------------------------------------

    def parse_process(self) -> Process:
        p = self._prefix()
        while self.accept("|"):
            p = Par(p, self._prefix())
        return p

    def _role(self) -> str:
        t = self.peek()
        if t.kind in ("IDENT", "INT"):
            return self.next().text
        raise ParseError(f"expected role, found {t.text!r}", t.line, t.col)

    def _prefix(self) -> Process:
        t = self.peek()
        if t.kind == "INT" and t.text == "0":
            self.next()
            return Inact()
        if self.at("("):
            self.next()
            p = self.parse_process()
            self.expect(")")
            return p
        if self.accept("req") or (t.text == "acc" and self.accept("acc")):
            kind = t.text
            shared = self.ident("shared name")
            self.expect("[")
            role = self._role()
            self.expect("]")
            self.expect("(")
            y = self.ident()
            self.expect(")")
            self.expect(".")
            body = self._prefix()
            cls = Request if kind == "req" else Accept
            return cls(shared, role, y, body)
        if self.accept("mu"):
            xvar = self.ident("recursion variable")
            self.expect("(")
            param = self.ident()
            self.expect(":=")
            init = self.parse_expr()
            self.expect(")")
            self.expect(".")
            self.mu_scope.append(xvar)
            try:
                with self._scoped({param: S_ANY}):
                    body = self._prefix()
            finally:
                self.mu_scope.pop()
            return RecDef(xvar, param, init, body)
        if t.kind == "IDENT":
            if self.peek(1).text == "[":
                sess = self.ident()
                self.expect("[")
                r1 = self._role()
                self.expect(",")
                r2 = self._role()
                self.expect("]")
                if self.accept("!"):
                    return GuardedSelect(sess, r1, r2, self._gbranches())
                if self.accept("?"):
                    return Branching(sess, r1, r2, self._pbranches())
                raise self.err("expected '!' or '?' after session channel")
            if self.peek(1).text == "<":
                name = self.ident()
                if name not in self.mu_scope:
                    raise ParseError(f"unbound process recursion variable {name!r}",
                                     t.line, t.col)
                self.expect("<")
                arg = self.parse_expr(no_angle=True)
                self.expect(">")
                return RecCallP(name, arg)
        raise ParseError(f"expected process, found {t.text!r}", t.line, t.col)

    def _gbranches(self) -> tuple[GBranchP, ...]:
        self.expect("{")
        branches = []
        while True:
            guard = self._pred()
            self.expect("::")
            label = self.next().text
            self.expect("<")
            payload = self.parse_expr(no_angle=True)
            self.expect(">")
            self.expect("(")
            var = self.ident()
            self.expect(")")
            self.expect("<")
            with self._scoped({var: S_ANY}):
                upd = self.parse_update()
                self.expect(">")
                self.expect(".")
                cont = self._prefix()
            branches.append(GBranchP(guard, label, payload, var, upd, cont))
            if not self.accept(";"):
                break
        self.expect("}")
        return tuple(branches)

    def _pbranches(self) -> tuple[PBranchP, ...]:
        self.expect("{")
        branches = []
        while True:
            label = self.next().text
            self.expect("(")
            var = self.ident()
            self.expect(")")
            self.expect("<")
            with self._scoped({var: S_ANY}):
                upd = self.parse_update()
                self.expect(">")
                self.expect(".")
                cont = self._prefix()
            branches.append(PBranchP(label, var, upd, cont))
            if not self.accept(";"):
                break
        self.expect("}")
        return tuple(branches)

    # -- formulae -----------------------------------------------------------

    def parse_formula(self) -> Formula:
        parts = [self._fitem()]
        while self.accept("/\\"):
            parts.append(self._fitem())
        out = parts[0]
        for p in parts[1:]:
            out = self._mk_conj(out, p)
        return out

    @staticmethod
    def _mk_conj(a: Formula, b: Formula) -> Formula:
        # Adjacent predicate conjuncts collapse into one predicate, so that
        # printing a compound predicate reparses to the same AST.
        from .kernel import Conj
        if isinstance(a, PredF) and isinstance(b, PredF):
            return PredF(BinOp("/\\", a.pred, b.pred))
        return Conj(a, b)

    def _fitem(self) -> Formula:
        if self.accept("forall"):
            var = self.ident()
            self.expect(":")
            sort = self.parse_sort()
            self.expect(".")
            with self._scoped({var: _approx(sort)}):
                body = self.parse_formula()
            return ForallF(var, sort, body)
        if self.accept("mu"):
            var = self.ident("mu variable")
            self.expect(".")
            self.mu_scope.append(var)
            try:
                body = self.parse_formula()
            finally:
                self.mu_scope.pop()
            return Mu(var, body)
        return self._fmodal()

    def _fmodal(self) -> Formula:
        if self.at("["):
            self.next()
            pat = self._actpat()
            self.expect("]")
            body = self._fitem()
            return Must(pat, body)
        # Try the expression reading; fall back to a parenthesised formula.
        mark = self.pos
        expr_exc: ParseError | None = None
        try:
            strict = self.strict_vars
            self.strict_vars = False
            try:
                e = self.parse_expr()
            finally:
                self.strict_vars = strict
        except ParseError as exc:
            expr_exc = exc
            self.pos = mark
            if self.at("("):
                self.next()
                inner = self.parse_formula()
                self.expect(")")
                if self.accept("=>"):
                    hyp = self._as_pred(inner)
                    return Implies(hyp, self._fitem())
                return inner
            # The greedy expression reading may have swallowed a /\ that
            # belongs to the formula level (as in "a == b /\ [1] true");
            # retry with a single comparison, leaving the /\ for the caller.
            try:
                strict = self.strict_vars
                self.strict_vars = False
                try:
                    e = self._cmp(False)
                finally:
                    self.strict_vars = strict
            except ParseError:
                self.pos = mark
                raise expr_exc
        if self.accept("=>"):
            self._want_bool(e)
            return Implies(e, self._fitem())
        if isinstance(e, Var) and e.name in self.mu_scope:
            return FVar(e.name)
        if e == BoolLit(True):
            return Tru()
        self._want_bool(e)
        return PredF(e)

    def _as_pred(self, phi: Formula) -> Expr:
        if isinstance(phi, PredF):
            return phi.pred
        if isinstance(phi, Tru):
            return BoolLit(True)
        raise self.err("implication antecedent must be a predicate "
                       "(no modalities, quantifiers or recursion)")

    def _actpat(self):
        if self.at("<"):
            self.next()
            upd = self.parse_update()
            self.expect(">")
            return UpdPat(upd)
        t = self.peek()
        if t.kind == "INT":
            self.next()
            return LabelPat(t.text)
        name = self.ident("action pattern")
        if self.at("["):
            self.next()
            r1 = self._role()
            self.expect(",")
            r2 = self._role()
            self.expect("]")
            if self.accept("!"):
                self.expect("(")
                var = self.ident()
                self.expect(")")
                return OutPat(name, r1, r2, var)
            if self.accept("?"):
                self.expect("(")
                var = self.ident()
                self.expect(")")
                return InPat(name, r1, r2, var)
            raise self.err("expected '!' or '?' in communication pattern")
        if self.at("("):
            self.next()
            sess = self.ident("session variable")
            self.expect("[")
            role = self._role()
            self.expect("]")
            self.expect(")")
            return AcceptPat(name, sess, role)
        return LabelPat(name)

    # -- scope helper -------------------------------------------------------

    def _scoped(self, names: dict[str, str]):
        parser = self

        class _Ctx:
            def __enter__(self):
                self.saved = {k: parser.scope.get(k) for k in names}
                parser.scope.update(names)

            def __exit__(self, *exc):
                for k, v in self.saved.items():
                    if v is None:
                        parser.scope.pop(k, None)
                    else:
                        parser.scope[k] = v

        return _Ctx()


# ---------------------------------------------------------------------------
# Entry points

def parse_assertion(src: str) -> LocalAssertion:
    p = Parser(src)
    a = p.parse_assertion()
    p.done()
    assertion_wellformed(a)
    return a


def parse_process(src: str) -> Process:
    p = Parser(src)
    proc = p.parse_process()
    p.done()
    return proc


def parse_formula(src: str) -> Formula:
    p = Parser(src, strict_vars=False)
    phi = p.parse_formula()
    p.done()
    check_positive(phi)
    return phi


def parse_expr(src: str) -> Expr:
    p = Parser(src, strict_vars=False)
    e = p.parse_expr()
    p.done()
    return e


def parse_update(src: str) -> Update:
    p = Parser(src, strict_vars=False)
    u = p.parse_update()
    p.done()
    return u
