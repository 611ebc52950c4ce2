"""Automata translation of recursive formulae: product, branch expansion,
read-back, bisimulation."""

import random
import sys

import pytest

sys.path.insert(0, "tests")

from protocheck.automata import (
    AEdge, AutomatonError, PacketAutomaton, automaton_to_formula, bisimilar,
    expand_to_branch, formula_to_automaton, is_branch_form, packet_traces,
    product, rec_interleave, rec_pipeline, to_dot,
)
from protocheck.bounds import Bounds, DEFAULT_BOUNDS
from protocheck.kernel import SessionRole
from protocheck.parser import parse_assertion, parse_formula
from protocheck.printer import print_formula
from gen import gen_automaton

TWO_LOOPS = {
    SessionRole("s1", "p1"): parse_formula("mu X. [1][2] X"),
    SessionRole("s2", "p2"): parse_formula("mu Y. [3][4] Y"),
}

# the minimal interleaving of the two loops, written out by hand
TWO_LOOP_FORMULA = (
    "mu A. ([1] (mu B. ([2] A /\\ [3] (mu C. ([4] B /\\ [2] ([1] C /\\ [4] A)))))"
    " /\\ [3] (mu D. ([4] A /\\ [1] (mu E. ([2] D /\\ [4] ([2] A /\\ [3] E))))))")


def test_loop_formula_automaton():
    a = formula_to_automaton(parse_formula("mu X. [1][2] X"))
    assert a.n_states == 2
    assert {(e.src, e.label, e.dst) for e in a.edges} == \
        {(0, "1", 1), (1, "2", 0)}


def test_pipeline_state_counts():
    rep = rec_pipeline(TWO_LOOPS, DEFAULT_BOUNDS)
    assert [c.n_states for c in rep.components] == [2, 2]
    assert rep.prod.n_states == 4
    assert rep.expanded.n_states == 7
    assert is_branch_form(rep.expanded)
    assert not is_branch_form(rep.prod)  # the product is diamond-shaped


def test_pipeline_formula_matches_known_interleaving():
    rep = rec_pipeline(TWO_LOOPS, DEFAULT_BOUNDS)
    want = formula_to_automaton(parse_formula(TWO_LOOP_FORMULA))
    assert bisimilar(formula_to_automaton(rep.formula), want)
    assert bisimilar(want, rep.expanded)
    assert bisimilar(want, rep.prod)


def test_pipeline_traces_match_brute_shuffle():
    rep = rec_pipeline(TWO_LOOPS, DEFAULT_BOUNDS)
    t1 = packet_traces(rep.components[0], 4)
    t2 = packet_traces(rep.components[1], 4)

    def merges(xs, ys):
        if not xs:
            return {tuple(ys)}
        if not ys:
            return {tuple(xs)}
        out = set()
        for rest in merges(xs[1:], ys):
            out.add((xs[0],) + rest)
        for rest in merges(xs, ys[1:]):
            out.add((ys[0],) + rest)
        return out

    want = set()
    for a in t1:
        for b in t2:
            for m in merges(list(a), list(b)):
                if len(m) <= 4:
                    want.add(m)
    assert packet_traces(rep.prod, 4) == want
    assert packet_traces(rep.expanded, 4) == want


def test_single_loop_expands_to_itself():
    a = formula_to_automaton(parse_formula("mu X. [1] X"))
    ex = expand_to_branch(a)
    assert ex.n_states == 1
    assert print_formula(automaton_to_formula(ex)) == "mu A. [1] A"


def test_finite_chain_round_trip():
    phi = parse_formula("[1][2] true")
    a = formula_to_automaton(phi)
    assert automaton_to_formula(a) == phi


def test_mu_binder_shares_state_with_body():
    a = formula_to_automaton(parse_formula("mu X. [1] (mu Y. [2] Y)"))
    # the inner binder introduces no extra state
    assert a.n_states == 2


def test_nondeterminism_rejected():
    with pytest.raises(AutomatonError):
        PacketAutomaton(2, 0, [AEdge(0, "1", 0), AEdge(0, "1", 1)])


def test_product_rejects_shared_labels():
    a = formula_to_automaton(parse_formula("[1] true"))
    b = formula_to_automaton(parse_formula("[1] true"))
    with pytest.raises(AutomatonError):
        product(a, b)


def test_expansion_state_cap():
    rep_delta = {
        SessionRole("s1", "p1"): parse_formula("mu X. [1][2] X"),
        SessionRole("s2", "p2"): parse_formula("mu Y. [3][4][5] Y"),
    }
    with pytest.raises(AutomatonError):
        rec_pipeline(rep_delta, Bounds(state_cap=5))


def test_rec_interleave_accepts_assertions():
    delta = {
        SessionRole("s", "p"): parse_assertion(
            "mu t {y: y == 0}(x:Nat). q!{ l(z:Nat){true}<skip>. "
            "t(w: w == x) } : true"),
    }
    phi = rec_interleave(delta, DEFAULT_BOUNDS)
    a = formula_to_automaton(phi)
    assert a.n_states >= 1 and a.labels()


def test_bisimilar_distinguishes():
    a = formula_to_automaton(parse_formula("mu X. [1] X"))
    b = formula_to_automaton(parse_formula("[1][1] true"))
    assert not bisimilar(a, b)
    c = formula_to_automaton(parse_formula("mu X. [1][1] X"))
    assert bisimilar(a, c)


def test_random_expansion_bisimilar():
    rng = random.Random(5)
    done = 0
    while done < 40:
        a = gen_automaton(rng, 20)
        try:
            ex = expand_to_branch(a)
        except AutomatonError:
            continue  # blew the state cap; draw again
        done += 1
        assert is_branch_form(ex)
        assert bisimilar(a, ex)


def test_random_read_back_round_trip():
    rng = random.Random(6)
    done = 0
    while done < 40:
        a = gen_automaton(rng, 12)
        try:
            ex = expand_to_branch(a)
        except AutomatonError:
            continue
        done += 1
        phi = automaton_to_formula(ex)
        assert bisimilar(formula_to_automaton(phi), ex)


def test_to_dot_mentions_every_edge():
    a = formula_to_automaton(parse_formula("mu X. [1][2] X"))
    dot = to_dot(a, "loop")
    assert "digraph" in dot
    assert dot.count("->") >= len(a.edges)
