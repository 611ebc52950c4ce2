"""Erasure, the unasserted type checker, and the asserted proof checker."""

import random
import sys

sys.path.insert(0, "tests")

from protocheck.kernel import NatSort, SessionRole
from protocheck.parser import parse_assertion, parse_expr, parse_process
from protocheck.typing_rules import (
    UEnd, UOut, URec, erase, erase_env, print_utype, prove_asserted,
    typecheck_unasserted,
)
from gen import ORACLE_BOUNDS, gen_instance

SP = SessionRole("s", "p")
EQ2 = "q!{ l(y:Nat){y > 10 /\\ y == @x}<@x:=@x + 1>. end }"


def test_erase_drops_annotations():
    t = erase(parse_assertion(EQ2))
    assert isinstance(t, UOut) and t.partner == "q"
    assert print_utype(t) == "q!{ l(Nat).end }"


def test_erase_end():
    assert erase(parse_assertion("end")) == UEnd()


def test_erase_recursion():
    t = erase(parse_assertion(
        "mu t {y: y == 0}(x:Int). q!{ l(z:Int){z == x}<skip>. "
        "t(w: w == x) } : true"))
    assert isinstance(t, URec)
    assert print_utype(t) == "mu t. q!{ l(Int).t }"


def test_erase_env_pointwise_and_idempotent():
    delta = {SP: parse_assertion(EQ2)}
    ud = erase_env(delta)
    assert set(ud) == {SP}
    assert erase(parse_assertion(EQ2)) == ud[SP]


def test_typecheck_inact_all_end():
    assert typecheck_unasserted(parse_process("0"), {SP: UEnd()})


def test_typecheck_inact_open_session():
    t = erase(parse_assertion(EQ2))
    assert not typecheck_unasserted(parse_process("0"), {SP: t})


def test_typecheck_sender():
    t = erase(parse_assertion(EQ2))
    p = parse_process("s[p,q]!{ true :: l<11>(y)<@x:=@x + 1>. 0 }")
    assert typecheck_unasserted(p, {SP: t})


def test_typecheck_polarity_mismatch():
    t = erase(parse_assertion("q?{ l(y:Nat){true}<skip>. end }"))
    p = parse_process("s[p,q]!{ true :: l<11>(y)<skip>. 0 }")
    assert not typecheck_unasserted(p, {SP: t})


def test_typecheck_selection_subset_ok():
    t = erase(parse_assertion("q!{ l(y:Nat){true}<skip>. end ; "
                              "m(y:Nat){true}<skip>. end }"))
    p = parse_process("s[p,q]!{ true :: l<1>(y)<skip>. 0 }")
    assert typecheck_unasserted(p, {SP: t})


def test_typecheck_branching_must_cover_all_labels():
    t = erase(parse_assertion("q?{ l(y:Nat){true}<skip>. end ; "
                              "m(y:Nat){true}<skip>. end }"))
    partial = parse_process("s[q,p]?{ l(y)<skip>. 0 }")
    assert not typecheck_unasserted(partial, {SP: t})
    full = parse_process("s[q,p]?{ l(y)<skip>. 0 ; m(y)<skip>. 0 }")
    assert typecheck_unasserted(full, {SP: t})


def test_typecheck_payload_sort():
    t = erase(parse_assertion("q!{ l(y:Nat){true}<skip>. end }"))
    p = parse_process("s[p,q]!{ true :: l<1 == 1>(y)<skip>. 0 }")
    assert not typecheck_unasserted(p, {SP: t})


def test_typecheck_parallel_split():
    delta = {
        SessionRole("s", "p"): erase(parse_assertion(
            "q!{ l(y:Nat){true}<skip>. end }")),
        SessionRole("k", "p"): erase(parse_assertion(
            "q!{ l(y:Nat){true}<skip>. end }")),
    }
    p = parse_process("s[p,q]!{ true :: l<1>(y)<skip>. 0 } | "
                      "k[p,q]!{ true :: l<2>(y)<skip>. 0 }")
    assert typecheck_unasserted(p, delta)
    # one side must not use the other's session
    bad = parse_process("s[p,q]!{ true :: l<1>(y)<skip>. "
                        "s[p,q]!{ true :: l<2>(y)<skip>. 0 } } | 0")
    assert not typecheck_unasserted(bad, delta)


def test_typecheck_accept_consumes_gamma():
    gamma = {"a": {"2": erase(parse_assertion(
        "q!{ l(y:Nat){true}<skip>. end }"))}}
    p = parse_process("acc a[2](y). y[2,q]!{ true :: l<1>(y0)<skip>. 0 }")
    assert typecheck_unasserted(p, {}, gamma)
    assert not typecheck_unasserted(p, {}, {})


def test_typecheck_request_rejected():
    assert not typecheck_unasserted(parse_process("req a[2](y). 0"), {})


def test_typecheck_recursion():
    t = erase(parse_assertion(
        "mu t {y: y == 0}(x:Int). q!{ l(z:Int){true}<skip>. "
        "t(w: w == x) } : true"))
    p = parse_process("mu X (x := 0). s[p,q]!{ true :: l<x>(z)<skip>. "
                      "X<x + 1> }")
    assert typecheck_unasserted(p, {SP: t})


def test_typecheck_trace_on_demand():
    trace = []
    typecheck_unasserted(parse_process("0"), {SP: UEnd()}, trace=trace)
    assert trace == ["0 |> all end"]


# -- asserted proof checker -------------------------------------------------

DOM = {"x": NatSort(32)}


def test_prove_end():
    assert prove_asserted(parse_expr("true"), None, {SP: parse_assertion("end")},
                          parse_process("0"), {}, ORACLE_BOUNDS)


def test_prove_sender_under_precondition():
    delta = {SP: parse_assertion(EQ2)}
    p = parse_process("s[p,q]!{ true :: l<@x>(y)<@x:=@x + 1>. 0 }")
    assert prove_asserted(parse_expr("@x > 10"), None, delta, p, DOM,
                          ORACLE_BOUNDS)


def test_prove_sender_rejected_without_precondition():
    delta = {SP: parse_assertion(EQ2)}
    p = parse_process("s[p,q]!{ true :: l<@x>(y)<@x:=@x + 1>. 0 }")
    trace = []
    assert not prove_asserted(parse_expr("true"), None, delta, p, DOM,
                              ORACLE_BOUNDS, trace=trace)
    assert any("rejected" in line for line in trace)


def test_prove_branch_assumes_predicate():
    delta = {SP: parse_assertion(
        "q?{ l(y:Nat){y >= 2}<@x:=y>. q!{ m(z:Nat){z >= 2}<skip>. end } }")}
    p = parse_process("s[q,p]?{ l(y)<@x:=y>. "
                      "s[p,q]!{ true :: m<y>(z)<skip>. 0 } }")
    assert prove_asserted(parse_expr("true"), None, delta, p,
                          {"x": NatSort(8)}, ORACLE_BOUNDS)


def test_prove_update_mismatch_rejected():
    delta = {SP: parse_assertion(
        "q!{ l(y:Nat){true}<@x:=y>. end }")}
    p = parse_process("s[p,q]!{ true :: l<1>(y)<@x:=0>. 0 }")
    assert not prove_asserted(parse_expr("true"), None, delta, p,
                              {"x": NatSort(8)}, ORACLE_BOUNDS)


def test_prove_guard_exhaustiveness():
    delta = {SP: parse_assertion(
        "q!{ l(y:Nat){true}<skip>. end ; m(y:Nat){true}<skip>. end }")}
    partial = parse_process("s[p,q]!{ @x < 5 :: l<0>(y)<skip>. 0 }")
    assert not prove_asserted(parse_expr("true"), None, delta, partial,
                              {"x": NatSort(8)}, ORACLE_BOUNDS)
    total = parse_process("s[p,q]!{ @x < 5 :: l<0>(y)<skip>. 0 ; "
                          "@x >= 5 :: m<0>(y)<skip>. 0 }")
    assert prove_asserted(parse_expr("true"), None, delta, total,
                          {"x": NatSort(8)}, ORACLE_BOUNDS)


def test_prove_overlapping_guards_rejected():
    delta = {SP: parse_assertion(
        "q!{ l(y:Nat){true}<skip>. end ; m(y:Nat){true}<skip>. end }")}
    p = parse_process("s[p,q]!{ @x < 5 :: l<0>(y)<skip>. 0 ; "
                      "@x < 9 \\/ @x >= 9 :: m<0>(y)<skip>. 0 }")
    assert not prove_asserted(parse_expr("true"), None, delta, p,
                              {"x": NatSort(8)}, ORACLE_BOUNDS)


def test_prove_recursion_invariant():
    delta = {SP: parse_assertion(
        "mu t {y: y >= 0}(x:Nat). q!{ l(z:Nat){z >= 0}<skip>. "
        "t(w: w >= 0) } : x >= 0")}
    p = parse_process("mu X (x := 0). s[p,q]!{ true :: l<x>(z)<skip>. "
                      "X<x + 1> }")
    assert prove_asserted(parse_expr("true"), None, delta, p, {},
                          ORACLE_BOUNDS)


def test_prove_recursion_broken_invariant():
    # the call argument x - 1 cannot re-establish the initialisation bound
    delta = {SP: parse_assertion(
        "mu t {y: y >= 1}(x:Nat). q!{ l(z:Nat){z == x}<skip>. "
        "t(w: w >= 1) } : x >= 1")}
    p = parse_process("mu X (x := 0). s[p,q]!{ true :: l<x>(z)<skip>. "
                      "X<x - 1> }")
    assert not prove_asserted(parse_expr("true"), None, delta, p, {},
                              ORACLE_BOUNDS)


def test_prove_parallel_split():
    delta = {
        SessionRole("s", "p"): parse_assertion(
            "q!{ l(y:Nat){y == 1}<skip>. end }"),
        SessionRole("k", "p"): parse_assertion(
            "q!{ l(y:Nat){y == 2}<skip>. end }"),
    }
    p = parse_process("s[p,q]!{ true :: l<1>(y)<skip>. 0 } | "
                      "k[p,q]!{ true :: l<2>(y)<skip>. 0 }")
    assert prove_asserted(parse_expr("true"), None, delta, p, {},
                          ORACLE_BOUNDS)


def test_generated_skeletons_typecheck():
    """Generated pairs share the label/polarity skeleton, so erasure always
    typechecks even when predicates are arbitrary."""
    rng = random.Random(17)
    for _ in range(100):
        _, a, p, _, sr = gen_instance(rng, mode="free", max_depth=4)
        assert typecheck_unasserted(p, erase_env({sr: a}))
