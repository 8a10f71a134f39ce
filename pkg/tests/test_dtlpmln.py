import pytest

from oracles import marketing_best, marketing_values
from pbcmdp.domains.marketing import GRAPHS, decision_problem
from pbcmdp.dtlpmln import (
    DecisionError,
    DecisionProblem,
    TooManyDecisionsError,
    evaluate_decision,
    meu,
)
from pbcmdp.engine import expected_utility
from pbcmdp.lang import TOP, Atom, Not
from pbcmdp.translator import ProgramBuilder, UtilityAtom

# frozen from oracles.marketing_best (brute force over decisions x edge outcomes)
FROZEN = {
    "chain3": ((True, True, False), 20.0),
    "cycle4": ((True, False, True, False), 29.54),
    "star5": ((True, True, True, False, True), 29.5),
}


@pytest.mark.parametrize("g", GRAPHS, ids=[g.name for g in GRAPHS])
def test_marketing_meu_matches_oracle(g):
    dp = decision_problem(g)
    assert [a.args[0] for a in dp.decisions] == list(g.people)  # people listed alphabetically
    res = meu(dp)
    best, value, values = marketing_best(g)
    assert res.assignment.values == best == FROZEN[g.name][0]
    assert res.value == pytest.approx(value, abs=1e-9)
    assert value == pytest.approx(FROZEN[g.name][1], abs=1e-9)
    assert set(res.values) == set(values)
    for k, v in values.items():
        assert res.values[k] == pytest.approx(v, abs=1e-9)


def test_evaluate_decision_single_assignment():
    g = GRAPHS[0]
    dp = decision_problem(g)
    values = marketing_values(g)
    for key in [(False, False, False), (True, False, True)]:
        assert evaluate_decision(dp, dp.assignment(key)) == pytest.approx(values[key], abs=1e-9)


def two_switches(extra_constant=False, reverse=False):
    b = ProgramBuilder()
    d1, d2 = b.plain("d1"), b.plain("d2")
    b.hard(UtilityAtom(1.0, ("one",)), d1)
    b.hard(UtilityAtom(1.0, ("two",)), d2)
    if extra_constant:
        b.hard(UtilityAtom(5.0, ("const",)), TOP)
    decisions = [d2, d1] if reverse else [d1, d2]
    return DecisionProblem(b.build(), decisions)


def test_independent_decisions():
    res = meu(two_switches())
    assert res.assignment.values == (True, True)
    assert res.value == pytest.approx(2.0)
    assert res.values[(False, False)] == 0.0


def test_constant_utility_shifts_value_only():
    base = meu(two_switches())
    shifted = meu(two_switches(extra_constant=True))
    assert shifted.assignment == base.assignment
    assert shifted.value == pytest.approx(base.value + 5.0)


def test_decision_order_is_canonical():
    assert meu(two_switches(reverse=True)).assignment == meu(two_switches()).assignment


def test_no_decisions_is_plain_expectation():
    b = ProgramBuilder()
    b.choice(Atom("x"))
    b.hard(UtilityAtom(4.0, ("x",)), Atom("x"))
    prog = b.build()
    res = meu(DecisionProblem(prog, []))
    assert res.assignment.values == ()
    assert res.value == pytest.approx(expected_utility(prog)) == pytest.approx(2.0)


def test_ties_prefer_false():
    b = ProgramBuilder()
    d = b.plain("d")
    b.hard(UtilityAtom(0.0, ("z",)), d)
    res = meu(DecisionProblem(b.build(), [d]))
    assert res.assignment.values == (False,)
    assert len(res.maximizers) == 2


def test_evidence_restricts():
    dp = two_switches()
    res = meu(dp, Not(Atom("d1")))
    assert res.assignment.values == (False, True)
    assert res.value == pytest.approx(1.0)


def test_decision_validation():
    b = ProgramBuilder()
    b.plain("d")
    b.constant("c", ("r", "g", "b"))
    prog = b.build()
    with pytest.raises(DecisionError):
        DecisionProblem(prog, [Atom("missing")])
    with pytest.raises(DecisionError):
        DecisionProblem(prog, [Atom("c", (), "r")])
    with pytest.raises(DecisionError):
        DecisionProblem(prog, [Atom("d")]).assignment([True, False])


def test_decision_guard():
    b = ProgramBuilder()
    atoms = [b.plain(f"d{i}") for i in range(25)]
    with pytest.raises(TooManyDecisionsError):
        meu(DecisionProblem(b.build(), atoms))
