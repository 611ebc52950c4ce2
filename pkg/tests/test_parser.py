"""Surface syntax round trips and parse-time checks."""

import random
import sys

import pytest
from hypothesis import given, strategies as st

sys.path.insert(0, "tests")

from protocheck.kernel import (
    BinOp, BoolLit, Branching, EndA, GBranchP, GuardedSelect, Inact,
    IntLit, IntSort, NatSort, RecA, RecCallA, Select,
    StateVar, Update, Var, SKIP,
)
from protocheck.parser import (
    ParseError, parse_assertion, parse_expr, parse_formula,
    parse_process, parse_update,
)
from protocheck.printer import (
    print_assertion, print_expr, print_formula, print_process, print_update,
)
from gen import gen_instance


def test_end_assertion():
    assert parse_assertion("end") == EndA()


def test_select_assertion_shape():
    a = parse_assertion("q!{ l(y:Nat){y>10 /\\ y==@x}<@x:=@x+1>. end }")
    assert isinstance(a, Select)
    assert a.partner == "q"
    (b,) = a.branches
    assert b.label == "l" and b.var == "y"
    assert b.pred == BinOp("/\\", BinOp(">", Var("y"), IntLit(10)),
                           BinOp("==", Var("y"), StateVar("x")))
    assert b.update == Update((("x", BinOp("+", StateVar("x"), IntLit(1))),))
    assert b.cont == EndA()


def test_rec_assertion_shape():
    a = parse_assertion("mu t {y: y==0}(x:Int). end : x>=0")
    assert isinstance(a, RecA)
    assert a.var == "t" and a.param == "x"
    assert a.init_var == "y"
    assert a.init_pred == BinOp("==", Var("y"), IntLit(0))
    assert a.invariant == BinOp(">=", Var("x"), IntLit(0))
    assert a.body == EndA()


def test_rec_call_assertion():
    a = parse_assertion("mu t {y: y==0}(x:Int). q!{ l(z:Int){true}<skip>. "
                        "t(w: w==x+1) } : true")
    sel = a.body
    call = sel.branches[0].cont
    assert isinstance(call, RecCallA)
    assert call.var == "t" and call.arg_var == "w"


def test_inact_process():
    assert parse_process("0") == Inact()


def test_guarded_select_process():
    p = parse_process("s[p,q]!{ true :: l<11>(y)<@x:=@x+1>. 0 }")
    assert p == GuardedSelect("s", "p", "q",
                              (GBranchP(BoolLit(True), "l", IntLit(11), "y",
                                        Update((("x", BinOp("+", StateVar("x"),
                                                            IntLit(1))),)),
                                        Inact()),))


def test_branching_process_skip():
    p = parse_process("s[q,p]?{ l(y)<skip>. 0 }")
    assert isinstance(p, Branching)
    assert p.branches[0].update == SKIP


def test_update_increment_sugar():
    assert parse_update("@x++") == parse_update("@x := @x + 1")


def test_formula_positivity_rejected():
    # modalities may not appear on the hypothesis side of an implication
    with pytest.raises(ParseError):
        parse_formula("([l] true) => true")


def test_formula_conjunct_after_predicate():
    # the formula-level /\ must not be swallowed by the predicate expression
    phi = parse_formula("forall y:Nat. [s[p,q]!(y)](y == @x /\\ [<@x++>] true)")
    assert "[<@x:=@x + 1>]" in print_formula(phi)


def test_unbound_variable_rejected():
    with pytest.raises(ParseError):
        parse_assertion("q!{ l(y:Nat){z > 0}<skip>. end }")


def test_sort_mismatch_rejected():
    with pytest.raises(ParseError):
        parse_assertion("q!{ l(y:Bool){y + 1 == 2}<skip>. end }")


def test_duplicate_branch_labels_rejected():
    with pytest.raises(Exception):
        parse_assertion("q!{ l(y:Nat){true}<skip>. end ; "
                        "l(z:Nat){true}<skip>. end }")


@pytest.mark.parametrize("src", [
    "end",
    "q!{ l(y:Nat){y > 10 /\\ y == @x}<@x:=@x + 1>. end }",
    "q?{ a(y:Nat){y <= 3}<@z:=y>. end ; b(y:Nat){true}<skip>. end }",
    "mu t {y: y == 0}(x:Int). q!{ l(z:Int){z == x}<skip>. t(w: w == x + 1) } : x >= 0",
])
def test_assertion_round_trip(src):
    a = parse_assertion(src)
    assert parse_assertion(print_assertion(a)) == a


@pytest.mark.parametrize("src", [
    "0",
    "s[p,q]!{ true :: l<11>(y)<@x:=@x + 1>. 0 }",
    "s[q,p]?{ l(y)<skip>. 0 ; m(y)<@x:=y>. 0 }",
    "s[p,q]!{ true :: l<1>(y)<skip>. 0 } | k[q,p]?{ l(y)<skip>. 0 }",
    "mu X (x := 0). s[p,q]!{ x < 3 :: l<x>(y)<skip>. X<x + 1> ; "
    "x >= 3 :: m<0>(y)<skip>. 0 }",
    "req a[3](y). 0",
    "acc a[2](y). 0",
])
def test_process_round_trip(src):
    p = parse_process(src)
    assert parse_process(print_process(p)) == p


@pytest.mark.parametrize("src", [
    "true",
    "forall y:Nat. [s[p,q]!(y)]((y > 10 /\\ y == @x) /\\ [<@x:=@x + 1>] true)",
    "forall y:Int. [s[q,p]?(y)](y > 0 => true)",
    "mu X. [1][2] X",
    "forall s':Session. [a(s'[p])] true",
    "@x == 1 => [<skip>] true",
])
def test_formula_round_trip(src):
    phi = parse_formula(src)
    assert parse_formula(print_formula(phi)) == phi


def test_generated_round_trips():
    rng = random.Random(42)
    for _ in range(60):
        _, a, p, _, _ = gen_instance(rng, mode="free", max_depth=4)
        # generated sorts carry a non-default bound which the surface syntax
        # does not spell, so compare canonical text instead of ASTs
        assert print_assertion(parse_assertion(print_assertion(a))) == \
            print_assertion(a)
        assert parse_process(print_process(p)) == p


# -- expressions, via hypothesis ------------------------------------------

_names = st.sampled_from(["x", "y", "z"])


def _int_exprs(depth):
    """Well-sorted integer expressions (the parser checks sorts)."""
    leaf = st.one_of(st.integers(0, 99).map(IntLit), _names.map(Var),
                     _names.map(StateVar))
    if depth == 0:
        return leaf
    sub = _int_exprs(depth - 1)
    return st.one_of(
        leaf,
        st.tuples(st.sampled_from(["+", "-", "*"]), sub, sub)
        .map(lambda t: BinOp(*t)),
    )


def _preds(depth):
    cmp_ = st.tuples(st.sampled_from(["<", "<=", ">", ">=", "==", "!="]),
                     _int_exprs(depth), _int_exprs(depth)) \
        .map(lambda t: BinOp(*t))
    return st.one_of(
        cmp_,
        st.tuples(st.sampled_from(["/\\", "\\/"]), cmp_, cmp_)
        .map(lambda t: BinOp(*t)),
    )


@given(_int_exprs(3))
def test_expr_round_trip(e):
    assert parse_expr(print_expr(e)) == e


@given(_preds(2))
def test_predicate_round_trip(e):
    assert parse_expr(print_expr(e)) == e


@given(st.lists(st.tuples(_names, _int_exprs(2)), min_size=0, max_size=3,
                unique_by=lambda t: t[0]))
def test_update_round_trip(assigns):
    u = Update(tuple((f"s{n}", e) for n, e in assigns))
    assert parse_update(print_update(u)) == u


def test_sorts_carry_bounds():
    a = parse_assertion("q!{ l(y:Nat){true}<skip>. end }")
    assert a.branches[0].sort == NatSort(32)
    b = parse_assertion("q!{ l(y:Int){true}<skip>. end }")
    assert b.branches[0].sort == IntSort(32)
