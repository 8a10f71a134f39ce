"""Stable-model engine: hand-checked unit cases and an oracle comparison.

The oracle in ``oracles.py`` enumerates raw atom sets and applies the
reduct definition directly; the engine's search is never consulted.
"""

import math

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from oracles import engine_atom_set, lpmln_models
from pbcmdp.engine import (
    NoStableModelError,
    ResourceLimitError,
    ZeroProbabilityError,
    enumerate_stable_models,
    expected_utility,
    query_probability,
    reduct,
    satisfies,
    solve,
    utility,
)
from pbcmdp.lang import BOT, TOP, And, Atom, Not, Or
from pbcmdp.parser import parse_description
from pbcmdp.translator import ProgramBuilder, UtilityAtom, translate

a, b, c = Atom("a"), Atom("b"), Atom("c")


def true_atoms(record):
    return {k[1] for k, v in record.interpretation.assignment().items() if v == "true"}


def models_of(builder):
    return sorted((sorted(true_atoms(r)), r.probability) for r in enumerate_stable_models(builder.build()))


def test_negation_as_failure():
    p = ProgramBuilder()
    p.hard(a, Not(b))
    p.plain("b")
    assert models_of(p) == [(["a"], 1.0)]


def test_choice_rule_gives_both():
    p = ProgramBuilder()
    p.choice(a)
    got = models_of(p)
    assert [m for m, _ in got] == [[], ["a"]]
    assert all(math.isclose(pr, 0.5) for _, pr in got)


def test_uec_constant_marginals():
    p = ProgramBuilder()
    p.constant("col", ("r", "g", "b"))
    dist = {"r": 0.2, "g": 0.5, "b": 0.3}
    for v, pr in dist.items():
        p.soft(math.log(pr), Atom("col", (), v))
    prog = p.build()
    for v, pr in dist.items():
        assert abs(query_probability(prog, Atom("col", (), v)).probability - pr) < 1e-12
    assert len(enumerate_stable_models(prog)) == 3


def test_double_negation_body_keeps_choice():
    # a <- not not a  is the choice rule; a <- not a has no stable model
    p = ProgramBuilder()
    p.hard(a, Not(Not(a)))
    assert [m for m, _ in models_of(p)] == [[], ["a"]]
    q = ProgramBuilder()
    q.hard(a, Not(a))
    with pytest.raises(NoStableModelError):
        enumerate_stable_models(q.build())


def test_positive_loop_is_unfounded():
    p = ProgramBuilder()
    p.hard(a, b)
    p.hard(b, a)
    assert [m for m, _ in models_of(p)] == [[]]


def test_double_negation_breaks_loop_support():
    p = ProgramBuilder()
    p.hard(a, Not(Not(b)))
    p.hard(b, Not(Not(a)))
    assert [m for m, _ in models_of(p)] == [[], ["a", "b"]]


def test_disjunctive_head_is_minimal():
    p = ProgramBuilder()
    p.hard(Or((a, b)))
    assert [m for m, _ in models_of(p)] == [["a"], ["b"]]


def test_soft_rule_weights():
    p = ProgramBuilder()
    p.choice(a)
    p.soft(math.log(3.0), a)
    prog = p.build()
    assert abs(query_probability(prog, a).probability - 0.75) < 1e-12


def test_soft_rules_may_be_violated():
    # a soft fact that contradicts a hard constraint just loses its weight
    p = ProgramBuilder()
    p.soft(2.0, a)
    p.hard(BOT, a)
    (m,) = enumerate_stable_models(p.build())
    assert true_atoms(m) == set()
    assert m.probability == 1.0


def test_utility_and_conditioning():
    p = ProgramBuilder()
    p.choice(a)
    p.hard(UtilityAtom(4.0, ("x",)), a)
    p.hard(UtilityAtom(-1.0, ("y",)), Not(a))
    prog = p.build()
    assert abs(expected_utility(prog) - 1.5) < 1e-12
    assert expected_utility(prog, a) == 4.0
    recs = solve(prog, Not(a))
    assert [utility(r.interpretation) for r in recs] == [-1.0]
    with pytest.raises(ZeroProbabilityError):
        expected_utility(prog, And((a, Not(a))))


def test_reduct_definition():
    p = ProgramBuilder()
    p.choice(a)
    (I,) = [r.interpretation for r in enumerate_stable_models(p.build()) if true_atoms(r) == {"a"}]
    assert reduct(Not(a), I) == BOT
    assert reduct(Not(Not(a)), I) == Not(BOT)
    assert reduct(Or((a, Atom("a", value="true"))), I) == Or((a, a))
    assert satisfies(I, a) and not satisfies(I, Not(a))


def test_model_limit_guard():
    p = ProgramBuilder()
    for name in "abcdefgh":
        p.choice(Atom(name))
    with pytest.raises(ResourceLimitError):
        solve(p.build(), limit=10)


def test_probabilities_normalised_with_large_weights():
    p = ProgramBuilder()
    p.choice(a)
    p.soft(800.0, a)
    p.soft(799.0, Not(a))
    prog = p.build()
    got = query_probability(prog, a).probability
    assert abs(got - 1.0 / (1.0 + math.exp(-1.0))) < 1e-12


# ---------------------------------------------------------------------------
# oracle comparison
# ---------------------------------------------------------------------------

ATOMS = [a, b, c, Atom("col", (), "r"), Atom("col", (), "g")]


def _formula(depth):
    leaf = st.sampled_from(ATOMS + [TOP, BOT])
    if depth == 0:
        return leaf
    sub = _formula(depth - 1)
    return st.one_of(
        leaf,
        sub.map(Not),
        st.tuples(sub, sub).map(And),
        st.tuples(sub, sub).map(Or),
    )


HEADS = st.one_of(
    st.sampled_from(ATOMS),
    st.just(BOT),
    st.tuples(st.sampled_from(ATOMS), st.sampled_from(ATOMS)).map(Or),
    st.tuples(st.sampled_from(ATOMS), st.sampled_from(ATOMS)).map(And),
    st.sampled_from(ATOMS).map(Not),
    st.just(UtilityAtom(3.0, ("u",))),
)
RULES = st.lists(
    st.tuples(
        st.sampled_from(["hard", "choice", 0.7, -1.3, 2.0]),
        HEADS,
        _formula(2),
    ),
    min_size=1,
    max_size=6,
)


def build(rules):
    p = ProgramBuilder()
    p.constant("col", ("r", "g"))
    for name in "abc":
        p.plain(name)
    for kind, head, body in rules:
        if kind == "hard":
            p.hard(head, body)
        elif kind == "choice":
            p.choice(head, body)
        else:
            p.soft(kind, head, body)
    return p.build()


def compare(prog):
    expect = lpmln_models(prog)
    try:
        got = enumerate_stable_models(prog)
    except NoStableModelError:
        got = []
    seen = {}
    for r in got:
        key = engine_atom_set(prog, r.interpretation)
        assert key not in seen
        seen[key] = (r.probability, r.utility)
    assert set(seen) == set(expect)
    for key, (pr, u) in expect.items():
        assert abs(seen[key][0] - pr) < 1e-9
        assert abs(seen[key][1] - u) < 1e-9


@settings(max_examples=250, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(RULES)
def test_engine_matches_oracle(rules):
    compare(build(rules))


def test_translated_description_matches_oracle():
    D = parse_description(
        "fluent F.\naction A.\npf X.\n"
        "caused X = {true: 0.4, false: 0.6}.\n"
        "A causes F if X.\ninertial F.\nreward 2 if F after ~F.\n"
    )
    compare(translate(D, 1, include_init=False))


def test_initial_state_program_matches_oracle(D_simple):
    compare(translate(D_simple, 0))
