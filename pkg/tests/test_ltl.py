import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ltlplan.errors import LtlSyntaxError, UnsupportedFragment
from ltlplan.ltl import (And, Atom, Eventually, Or, TriggerSafety, accepts, compile_dfa, dfa_step,
                         eval_finite_trace, format_formula, formula_atoms, parse_ltl, run_dfa,
                         task_structure, to_dot)

from conftest import DISJ, SEQ4, SEQ4_SAFE, SEQ4_SAFE_LITERAL
from oracles import progression_accepts, random_formula


def _labels(atoms):
    atoms = sorted(atoms)
    return [frozenset(c) for r in range(len(atoms) + 1) for c in itertools.combinations(atoms, r)]


# -- parsing -----------------------------------------------------------------------


def test_parse_sequence():
    f = parse_ltl(SEQ4)
    depth, node = 0, f
    while isinstance(node, Eventually):
        depth += 1
        node = node.operand.right if isinstance(node.operand, And) else None
    assert depth == 4


def test_parse_single():
    assert parse_ltl("F(g1)") == Eventually(Atom("g1"))


def test_parse_disjunctive_stage():
    f = parse_ltl("F(g1 || g2 & F(g3 & F(g4)))")
    assert isinstance(f, Eventually)
    assert f.operand.left == Or(Atom("g1"), Atom("g2"))
    assert task_structure(f)[0] == [(("g1", "g2"),), (("g3",),), (("g4",),)]


def test_safety_spellings_agree():
    a, b = parse_ltl(SEQ4_SAFE), parse_ltl(SEQ4_SAFE_LITERAL)
    assert a == b
    assert isinstance(a.right, TriggerSafety)
    assert a.right.trigger == Atom("g1") and a.right.forbidden == Atom("us")


@pytest.mark.parametrize("text", ["F(g1 && F(g2))", "F(g1 | g2)", "F(g1) & G(g1 => X G(~us))"])
def test_alternative_operator_spellings(text):
    parse_ltl(text)


@pytest.mark.parametrize("text,pos", [("F(g1", 4), ("F(g1 $ g2)", 5), ("F(g1))", 5), ("Q(g1)", 0),
                                      ("", 0), ("F(g_1)", 2)])
def test_syntax_errors(text, pos):
    with pytest.raises(LtlSyntaxError) as exc:
        parse_ltl(text)
    assert exc.value.position == pos


@pytest.mark.parametrize("text", [
    "F(g1 U g2)",
    "g1",
    "F(!g1)",
    "F(g1) & F(g2)",
    "G(!us)",
    "F(g1) & G(g1 -> G(!us))",
    "F(g1 & F(g2) & F(g3))",
    "F(F(g1))",
    "F(g1) || F(g2)",
])
def test_unsupported(text):
    with pytest.raises(UnsupportedFragment):
        parse_ltl(text)


@pytest.mark.parametrize("text", [SEQ4, SEQ4_SAFE, DISJ, "F(g1)", "F(a & b & F(c||d))"])
def test_format_round_trip(text):
    f = parse_ltl(text)
    assert parse_ltl(format_formula(f)) == f


def test_format_shapes():
    assert format_formula(parse_ltl(DISJ)) == "F(g1||g2 & F(g3 & F(g4)))"
    assert format_formula(parse_ltl(SEQ4_SAFE_LITERAL)) == SEQ4_SAFE


# -- DFA structure -------------------------------------------------------------------


def test_sequence_dfa(dfa_seq):
    assert dfa_seq.states == (0, 1, 2, 3, 4)
    assert dfa_seq.accepting == {4}
    assert dfa_seq.trap is None
    assert dfa_step(dfa_seq, 0, {"g1"}) == 1
    assert dfa_step(dfa_seq, 0, set()) == 0


def test_safety_dfa(dfa_safe):
    assert len(dfa_safe.states) == 6
    assert dfa_safe.trap == 5 and dfa_safe.name(5) == "trap"
    assert dfa_safe.accepting == {4}
    assert dfa_step(dfa_safe, 1, {"us"}) == 5
    # the forbidden atom only matters after the trigger
    assert dfa_step(dfa_safe, 0, {"us"}) == 0
    assert dfa_step(dfa_safe, 0, {"g1", "us"}) == 1


def test_single_goal_dfa():
    d = compile_dfa(parse_ltl("F(g1)"))
    assert d.states == (0, 1) and d.accepting == {1}
    assert dfa_step(d, 0, {"g1"}) == 1


def test_runs(dfa_seq, dfa_safe):
    assert accepts(dfa_seq, [{"g1"}, {"g2"}, {"g3"}, {"g4"}])
    assert not accepts(dfa_seq, [{"g2"}, {"g1"}])
    assert not accepts(dfa_safe, [{"g1"}, {"us"}, {"g2"}, {"g3"}, {"g4"}])
    assert accepts(dfa_safe, [{"us"}, {"g1"}, {"g2"}, {"g3"}, {"g4"}])
    # a cell carrying several goals completes several stages at once
    assert accepts(compile_dfa(parse_ltl("F(g1 & F(g2))")), [{"g1", "g2"}])


def test_empty_trace_with_accepting_initial():
    d = compile_dfa(parse_ltl("F(a)"))
    assert run_dfa(d, [], start=1) == [1]
    assert not accepts(d, [])


def test_eval_examples():
    assert eval_finite_trace(parse_ltl(SEQ4), [{"g1"}, {"g2"}, {"g3"}, {"g4"}])
    assert not eval_finite_trace(parse_ltl(SEQ4_SAFE), [{"g1"}, {"us"}, {"g2"}, {"g3"}, {"g4"}])
    assert eval_finite_trace(parse_ltl("F(g1||g2)"), [{"g2"}])
    assert not eval_finite_trace(parse_ltl("F(g1)"), [])
    assert eval_finite_trace(TriggerSafety(Atom("a"), Atom("b")), [])


def test_dot_output(dfa_safe):
    dot = to_dot(dfa_safe)
    assert dot.startswith("digraph dfa {")
    assert "q4 [shape=doublecircle]" in dot
    assert 'q1 -> trap [label="us"]' in dot
    assert "__start -> q0" in dot


def test_too_many_atoms():
    text = "F(" + "||".join(f"a{i}" for i in range(17)) + ")"
    with pytest.raises(UnsupportedFragment):
        compile_dfa(parse_ltl(text))


# -- properties ------------------------------------------------------------------------

formulas = st.builds(lambda seed, n: random_formula(random.Random(seed), ["a", "b", "c", "d"][:n]),
                     st.integers(0, 2**32), st.integers(1, 4))


def _check_dfa_shape(d):
    for s in d.states:
        for lab in _labels(d.alphabet):
            fired = [dst for g, dst in d.outgoing[s] if g.holds(lab)]
            assert fired, "every label must fire some transition"
            assert d.firing(s, lab)[1] == fired[0]
    if d.trap is not None:
        assert all(dfa_step(d, d.trap, lab) == d.trap for lab in _labels(d.alphabet))


@settings(max_examples=80, deadline=None)
@given(formulas)
def test_dfa_total_and_trap_absorbing(text):
    _check_dfa_shape(compile_dfa(parse_ltl(text)))


@settings(max_examples=80, deadline=None)
@given(formulas)
def test_progress_monotone(text):
    f = parse_ltl(text)
    d = compile_dfa(f)
    labels = _labels(d.alphabet)
    for s in d.states:
        if s == d.trap:
            continue
        for lab in labels:
            nxt = dfa_step(d, s, lab)
            assert nxt == d.trap or d.progress[nxt] >= d.progress[s]
            assert nxt == d.trap or nxt >= s


@settings(max_examples=60, deadline=None)
@given(formulas, st.lists(st.integers(0, 15), max_size=6))
def test_three_way_agreement(text, picks):
    """DFA, direct semantics and formula progression agree on random traces."""
    f = parse_ltl(text)
    labels = _labels(formula_atoms(f))
    trace = [labels[i % len(labels)] for i in picks]
    expect = eval_finite_trace(f, trace)
    assert accepts(compile_dfa(f), trace) == expect
    assert progression_accepts(f, trace) == expect


@pytest.mark.parametrize("text", ["F(a & F(b)) & G(a -> X G(!b))", "F(a||b & F(c & a))", "F(a & b & F(c))"])
def test_exhaustive_traces_up_to_six(text):
    f = parse_ltl(text)
    d = compile_dfa(f)
    labels = _labels(formula_atoms(f))
    for n in range(7 if len(labels) <= 4 else 5):
        for trace in itertools.product(labels, repeat=n):
            assert accepts(d, trace) == eval_finite_trace(f, trace), trace


@settings(max_examples=100, deadline=None)
@given(formulas)
def test_format_parse_round_trip(text):
    f = parse_ltl(text)
    assert parse_ltl(format_formula(f)) == f
