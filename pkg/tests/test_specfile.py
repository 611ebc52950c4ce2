"""The SPEC document format."""

import pytest

from protocheck.kernel import (
    Branch, BinOp, BoolSort, IntSort, NatSort, Select, SessionRole,
)
from protocheck.parser import parse_formula
from protocheck.specfile import SpecError, parse_spec


def test_full_document():
    doc = parse_spec("""
        precondition: @x > 10
        state: @x: Int = 0 .. 31
        gamma: a -> { p: q!{ l(y:Nat){true}<skip>. end } }
        delta: s[p]: q!{ l(y:Nat){y > 10 /\\ y == @x}<@x:=@x+1>. end }
    """)
    assert doc.precondition == BinOp(">", __import__(
        "protocheck.kernel", fromlist=["StateVar"]).StateVar("x"),
        __import__("protocheck.kernel", fromlist=["IntLit"]).IntLit(10))
    assert [d.name for d in doc.states] == ["x"]
    assert set(doc.gamma) == {"a"}
    assert isinstance(doc.gamma["a"]["p"], Select)
    assert isinstance(doc.delta[SessionRole("s", "p")], Select)


def test_defaults_when_sections_absent():
    doc = parse_spec("delta: s[p]: end")
    assert doc.precondition.value is True
    assert doc.states == [] and doc.gamma == {}


def test_comments_and_multiline_entries():
    doc = parse_spec("""
        # leading comment
        delta: s[p]: q?{ l(y:Nat){true}  # trailing comment
            <skip>. end }
    """)
    assert isinstance(doc.delta[SessionRole("s", "p")], Branch)


def test_nonnegative_range_refines_to_nat():
    doc = parse_spec("state: @x: Int = 0 .. 15")
    d = doc.states[0]
    assert d.sort == NatSort(16)
    assert d.domain() == list(range(16))


def test_negative_range_stays_int():
    doc = parse_spec("state: @x: Int = -3 .. 3")
    d = doc.states[0]
    assert d.sort == IntSort(4)
    assert d.domain() == list(range(-3, 4))


def test_bool_state():
    doc = parse_spec("state: @b: Bool")
    assert doc.states[0].sort == BoolSort()
    assert doc.states[0].domain() == [False, True]


def test_sigmas_enumerate_product():
    doc = parse_spec("state: @x: Int = 0 .. 1\nstate: @b: Bool")
    sigmas = list(doc.sigmas())
    assert len(sigmas) == 4
    assert {"x": 0, "b": False} in sigmas
    assert doc.initial_sigma() == {"x": 0, "b": False}


def test_sigmas_cap():
    doc = parse_spec("state: @x: Int = 0 .. 100\nstate: @z: Int = 0 .. 100")
    with pytest.raises(SpecError):
        list(doc.sigmas(cap=1000))


def test_delta_formula_fallback():
    doc = parse_spec("delta: s1[p1]: mu X. [1][2] X")
    assert doc.delta[SessionRole("s1", "p1")] == parse_formula("mu X. [1][2] X")
    with pytest.raises(SpecError):
        doc.assertion_delta()


def test_state_domains_view():
    doc = parse_spec("state: @x: Int = 0 .. 7")
    assert doc.state_domains() == {"x": NatSort(8)}


@pytest.mark.parametrize("bad", [
    "junk before sections",
    "precondition: @x > 1\nprecondition: true",
    "state: @x: Int = 0 .. 1\nstate: @x: Int = 0 .. 1",
    "state: @x: Int = 5 .. 2",
    "gamma: a -> { p: end }\ngamma: a -> { p: end }",
    "gamma: a -> p: end",
    "gamma: a -> { : end }",
    "delta: s[p]: end\ndelta: s[p]: end",
    "delta: s: end",
])
def test_malformed_documents_rejected(bad):
    with pytest.raises(SpecError):
        parse_spec(bad)


def test_gamma_multiple_roles():
    doc = parse_spec(
        "gamma: a -> { p: q!{ l(y:Nat){true}<skip>. end } ; "
        "2: q!{ m(y:Nat){true}<skip>. end } }")
    assert set(doc.gamma["a"]) == {"p", "2"}
