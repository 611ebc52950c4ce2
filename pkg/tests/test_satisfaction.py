"""Three-valued bounded satisfaction checking."""

import sys

sys.path.insert(0, "tests")

from protocheck.bounds import Bounds, DEFAULT_BOUNDS
from protocheck.kernel import SessionRole
from protocheck.lts import Config, format_action
from protocheck.parser import parse_assertion, parse_expr, parse_formula, \
    parse_process
from protocheck.satisfaction import check_judgement, sat
from gen import ORACLE_BOUNDS


def _sat(proc_src, phi_src, sigma, bounds=DEFAULT_BOUNDS, env=None):
    return sat(Config.make(parse_process(proc_src), sigma),
               parse_formula(phi_src), bounds, env)


def test_true_always_holds():
    assert _sat("0", "true", {}).holds


def test_predicate_reads_state():
    assert _sat("0", "@x == 3", {"x": 3}).holds
    assert _sat("0", "@x == 3", {"x": 4}).status == "fails"


def test_box_vacuous_on_inact():
    assert _sat("0", "forall y:Nat. [s[p,q]!(y)] (1 == 2)", {}).holds


def test_must_checks_matching_transition():
    phi = "forall y:Nat. [s[p,q]!(y)](y == 11 /\\ [<@x:=@x + 1>] @x == 12)"
    good = "s[p,q]!{ true :: l<11>(y)<@x++>. 0 }"
    assert _sat(good, phi, {"x": 11}).holds
    bad = "s[p,q]!{ true :: l<10>(y)<@x++>. 0 }"
    assert _sat(bad, phi, {"x": 11}).status == "fails"


def test_update_pattern_mismatch_is_vacuous():
    phi = "forall y:Nat. [s[p,q]!(y)][<@x:=0>] true"
    p = "s[p,q]!{ true :: l<1>(y)<@x:=5>. 0 }"
    assert _sat(p, phi, {"x": 0}).holds


def test_implication_vacuous_on_false_hypothesis():
    assert _sat("0", "@x > 10 => 1 == 2", {"x": 0}).holds
    assert _sat("0", "@x > 10 => 1 == 2", {"x": 11}).status == "fails"


def test_forall_enumerates_domain():
    assert _sat("0", "forall y:Nat. y >= 0", {},
                Bounds(sort_bound=8)).holds
    v = _sat("0", "forall y:Nat. y <= 6", {}, Bounds(sort_bound=8))
    assert v.status == "fails"


def test_env_prebinds_free_variables():
    phi = parse_formula("forall y:Nat. y >= 0")
    body = phi.body  # y >= 0 with y free
    cfg = Config.make(parse_process("0"), {})
    assert sat(cfg, body, DEFAULT_BOUNDS, env={"y": 3}).holds


def test_mu_unfolds_and_runs_out_of_fuel():
    phi = ("mu X. forall y:Nat. [s[p,q]!(y)]"
           "(true /\\ [<skip>] X)")
    p = "mu X (x := 0). s[p,q]!{ true :: l<x>(y)<skip>. X<x + 1> }"
    v = _sat(p, phi, {}, Bounds(mu_depth=4))
    assert v.status == "inconclusive"


def test_mu_concludes_on_terminating_process():
    # the process stops, so the recursive obligation bottoms out vacuously
    phi = "mu X. forall y:Nat. [s[p,q]!(y)](true /\\ [<skip>] X)"
    p = "s[p,q]!{ true :: l<1>(y)<skip>. 0 }"
    assert _sat(p, phi, {}, Bounds(mu_depth=4)).holds


def test_witness_is_a_counterexample_trace():
    phi = ("forall y:Nat. [s[p,q]!(y)]"
           "(true /\\ [<skip>] (forall z:Nat. [s[p,q]!(z)] (z == 0)))")
    p = ("s[p,q]!{ true :: l<1>(y)<skip>. "
         "s[p,q]!{ true :: m<7>(z)<skip>. 0 } }")
    v = _sat(p, phi, {})
    assert v.status == "fails"
    assert [format_action(a) for a in v.witness] == \
        ["s[p,q]!1", "<skip>", "s[p,q]!7"]


def test_obligation_counter_grows():
    v = _sat("0", "forall y:Nat. y >= 0", {}, Bounds(sort_bound=16))
    assert v.obligations >= 16


def test_check_judgement_flagship():
    pre = parse_expr("@x > 10")
    delta = {SessionRole("s", "p"): parse_assertion(
        "q!{ l(y:Nat){y > 10 /\\ y == @x}<@x:=@x + 1>. end }")}
    good = parse_process("s[p,q]!{ true :: l<@x>(y)<@x:=@x + 1>. 0 }")
    assert check_judgement(pre, None, delta, good, {"x": 11}).holds
    bad = parse_process("s[p,q]!{ true :: l<10>(y)<@x:=@x + 1>. 0 }")
    assert check_judgement(pre, None, delta, bad,
                           {"x": 11}).status == "fails"


def test_check_judgement_vacuous_precondition():
    pre = parse_expr("@x > 10")
    delta = {SessionRole("s", "p"): parse_assertion(
        "q!{ l(y:Nat){1 == 2}<skip>. end }")}
    p = parse_process("s[p,q]!{ true :: l<0>(y)<skip>. 0 }")
    # sigma violates the precondition, so the judgement holds vacuously
    assert check_judgement(pre, None, delta, p, {"x": 0}).holds


def test_input_update_tracked_through_formula():
    phi = ("forall y:Nat. [s[q,p]?(y)]"
           "(y >= 1 => [<@x:=y>] @x == y)")
    p = "s[q,p]?{ l(y)<@x:=y>. 0 }"
    assert _sat(p, phi, {"x": 0}, ORACLE_BOUNDS).holds


def test_json_verdict_shape():
    v = _sat("0", "1 == 2", {})
    d = v.to_json()
    assert d["verdict"] == "fails"
    assert d["witness"] == []
    assert d["obligations_checked"] >= 1
