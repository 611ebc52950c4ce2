"""The pure value-passing encoding: stores as cell processes, formulae as
capture chains, and agreement between the two checkers."""

import random
import sys

import pytest

sys.path.insert(0, "tests")

from protocheck.bounds import Bounds
from protocheck.embedding import embed
from protocheck.kernel import SessionRole
from protocheck.lts import Config
from protocheck.parser import parse_assertion, parse_formula, parse_process
from protocheck.purehml import (
    PiConfig, PiPar, PiQuote, PureEncodingError, cell_outputs,
    encode_formula, encode_process, encode_store, parse_pi, pi_sat, pi_step,
    print_pi,
)
from protocheck.satisfaction import sat
from gen import gen_instance, gen_sigma

STORE_X = "a_x<5> | !x(e).a_x(y).a_x<eval(e[y/x])>"


def test_single_variable_store_text():
    assert print_pi(encode_store({"x": 5})) == STORE_X


def test_store_round_trips_through_parser():
    for sigma in ({"x": 5}, {"x": 1, "z": 2}, {}):
        s = encode_store(sigma)
        assert parse_pi(print_pi(s)) == s


def test_two_variable_store_has_one_updater_per_variable():
    text = print_pi(encode_store({"x": 1, "z": 2}))
    assert text.count("!") == 2
    assert "a_x<1>" in text and "a_z<2>" in text
    # each updater recaptures every cell before re-emitting
    assert "a_x(y_x).a_z(y_z)" in text


def test_empty_store_is_nil():
    assert print_pi(encode_store({})) == "0"


def _pi(proc_src, sigma):
    p = parse_process(proc_src)
    store = sorted(sigma)
    return PiPar(encode_process(p, store), encode_store(sigma)), store


def test_cell_linearity_along_runs():
    """Exactly one output per cell channel whenever no observer holds it."""
    pi, store = _pi("s[p,q]!{ true :: l<1>(y)<@x:=3>. "
                    "s[p,q]!{ true :: m<2>(z)<@x:=z>. 0 } }", {"x": 0})
    frontier = [PiConfig.make(pi, 8)]
    seen = 0
    for _ in range(6):
        nxt = []
        for cfg in frontier:
            assert cell_outputs(cfg) == {"a_x": 1}
            seen += 1
            trans, _ = pi_step(cfg, store)
            nxt.extend(c2 for act, c2 in trans
                       if not act.chan.startswith("a_"))
        frontier = nxt
    assert seen >= 4


def test_update_settles_to_new_cell_value():
    pi, store = _pi("s[p,q]!{ true :: l<1>(y)<@x:=3>. 0 }", {"x": 0})
    cfg = PiConfig.make(pi, 8)
    (act, cfg), = [(a, c) for a, c in pi_step(cfg, store)[0]
                   if a.chan == "s[p,q]"]
    trans, _ = pi_step(cfg, store)
    upd = [(a, c) for a, c in trans if a.chan == "x"]
    assert len(upd) == 1
    act, cfg = upd[0]
    assert act.value == PiQuote(parse_pi("a<3>").payload)  # quoted literal 3
    reads, _ = pi_step(cfg, store)
    assert [a.value for a, _ in reads if a.chan == "a_x"] == [3]


def test_sender_payload_alias_resolved():
    # the alias y names the sent value on the sender's side
    pi, store = _pi("s[p,q]!{ true :: l<7>(y)<@x:=y>. 0 }", {"x": 0})
    text = print_pi(pi)
    assert "x<7>" in text and "x<y>" not in text


def test_state_reading_payload_rejected():
    p = parse_process("s[p,q]!{ true :: l<@x>(y)<skip>. 0 }")
    with pytest.raises(PureEncodingError):
        encode_process(p, ["x"])


def test_state_reading_guard_rejected():
    p = parse_process("s[p,q]!{ @x > 0 :: l<1>(y)<skip>. 0 }")
    with pytest.raises(PureEncodingError):
        encode_process(p, ["x"])


def test_multi_assignment_update_rejected():
    p = parse_process("s[p,q]!{ true :: l<1>(y)<@x:=1, @z:=2>. 0 }")
    with pytest.raises(PureEncodingError):
        encode_process(p, ["x", "z"])


def test_out_of_store_update_rejected():
    p = parse_process("s[p,q]!{ true :: l<1>(y)<@z:=1>. 0 }")
    with pytest.raises(PureEncodingError):
        encode_process(p, ["x"])


def test_encode_formula_turns_predicates_into_captures():
    phi = encode_formula(parse_formula("@x == 3"), ["x"])
    # one capture on the cell channel, then a pure comparison
    assert "a_x" in repr(phi)
    cfg = PiConfig.make(encode_store({"x": 3}), 4)
    assert pi_sat(cfg, phi, ["x"]) == "holds"
    cfg = PiConfig.make(encode_store({"x": 4}), 4)
    assert pi_sat(cfg, phi, ["x"]) == "fails"


def test_pure_checker_hand_case():
    a = parse_assertion("q!{ l(y:Nat){y == 7}<@x:=y>. end }")
    phi = embed(a, SessionRole("s", "p"))
    pure = encode_formula(phi, ["x"])
    good, store = _pi("s[p,q]!{ true :: l<7>(y)<@x:=y>. 0 }", {"x": 0})
    assert pi_sat(good, pure, store) == "holds"
    bad, store = _pi("s[p,q]!{ true :: l<6>(y)<@x:=y>. 0 }", {"x": 0})
    assert pi_sat(bad, pure, store) == "fails"


def test_fuel_starved_update_is_inconclusive():
    a = parse_assertion("mu t {y: y == 0}(x:Nat). "
                        "q!{ l(z:Nat){true}<@x:=z>. t(w: true) } : true")
    p = ("mu X (x0 := 0). s[p,q]!{ true :: l<1>(z)<@x:=z>. X<x0> }")
    pure = encode_formula(embed(a, SessionRole("s", "p")), ["x"])
    pi, store = _pi(p, {"x": 0})
    v = pi_sat(pi, pure, store, Bounds(mu_depth=10, repl_depth=2, sort_bound=4))
    assert v == "inconclusive"


def test_mu_starved_is_inconclusive():
    a = parse_assertion("mu t {y: y == 0}(x:Nat). "
                        "q!{ l(z:Nat){true}<@x:=z>. t(w: true) } : true")
    p = ("mu X (x0 := 0). s[p,q]!{ true :: l<1>(z)<@x:=z>. X<x0> }")
    pure = encode_formula(embed(a, SessionRole("s", "p")), ["x"])
    pi, store = _pi(p, {"x": 0})
    v = pi_sat(pi, pure, store, Bounds(mu_depth=3, repl_depth=50, sort_bound=4))
    assert v == "inconclusive"


def test_checkers_agree_on_random_instances():
    bounds = Bounds(sort_bound=4, mu_depth=5, repl_depth=4)
    rng = random.Random(3)
    for _ in range(40):
        _, a, p, doms, sr = gen_instance(rng, mode="free", max_depth=3,
                                         state_free=True, single_updates=True)
        store = sorted(doms)
        sigma = gen_sigma(rng, store)
        phi = embed(a, sr)
        v = sat(Config.make(p, sigma), phi, bounds)
        pv = pi_sat(PiPar(encode_process(p, store), encode_store(sigma)),
                    encode_formula(phi, store), store, bounds).lower()
        if "inconclusive" in (v.status, pv):
            continue
        assert v.status == pv


def test_parse_pi_rejects_trailing_garbage():
    from protocheck.parser import ParseError
    with pytest.raises(ParseError):
        parse_pi("a_x<5> extra")
