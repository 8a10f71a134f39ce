import pytest

from pbcmdp.lang import (
    BOT,
    TOP,
    ActionDescription,
    And,
    Atom,
    Choice,
    ConstantDecl,
    FluentDynamicLaw,
    Guard,
    InitPfDeclaration,
    Not,
    Or,
    PfDeclaration,
    Sort,
    StaticLaw,
    UtilityLaw,
    Variable,
    atoms,
    conj,
    disj,
    evaluate,
    ground_law,
    ground_schematics,
    lift,
    render,
    size,
    validate,
)

P, Q = Atom("P"), Atom("Q")


def test_conj_disj_collapse():
    assert conj() == TOP
    assert disj() == BOT
    assert conj(P) == P
    assert conj(P, Q) == And((P, Q))
    assert disj(P, Q) == Or((P, Q))


def test_lift_stamps_every_atom_once():
    f = And((P, Not(Atom("In", ("B1",), "R1"))))
    g = lift(f, 3)
    assert {a.step for a in atoms(g)} == {3}
    with pytest.raises(ValueError):
        lift(g, 3)
    with pytest.raises(ValueError):
        lift(f, -1)


def test_evaluate_and_size():
    f = Or((And((P, Not(Q))), BOT))
    assert evaluate(f, lambda a: a == P)
    assert not evaluate(f, lambda a: True)
    assert size(f) == 6
    assert evaluate(Choice(P), lambda a: False)


def test_render_values():
    assert render(Atom("P", value="false")) == "~P"
    assert render(Atom("In", ("B1",), "R2", 1)) == "1:In(B1) = R2"
    assert render(And((P, Or((Q, P))))) == "P & (Q | P)"


def _tiny(laws, extra=()):
    return ActionDescription(
        sorts=(Sort("Room", ("R1", "R2")),),
        variables=(Variable("r", "Room"),),
        constants=(
            ConstantDecl("P", "regular"),
            ConstantDecl("At", "regular", ("R1", "R2"), (), "Room"),
            ConstantDecl("S", "static"),
            ConstantDecl("A", "action"),
            ConstantDecl("Go", "action", params=("Room",)),
            ConstantDecl("X", "pf"),
            ConstantDecl("I", "initpf"),
            *extra,
        ),
        laws=tuple(laws),
    )


GOOD = [
    PfDeclaration("X", (), (("true", 0.3), ("false", 0.7))),
    InitPfDeclaration("I", (), (("true", 0.5), ("false", 0.5))),
]


def test_validate_accepts_wellformed():
    laws = GOOD + [
        StaticLaw(Atom("S"), Atom("P")),
        FluentDynamicLaw(Atom("At", (), "r"), TOP, conj(Atom("Go", ("r",)), Atom("X"))),
        UtilityLaw(5.0, Atom("P"), Atom("A")),
    ]
    assert validate(_tiny(laws)) == []


@pytest.mark.parametrize(
    "law, fragment",
    [
        (StaticLaw(Atom("P"), Atom("A")), "may not mention action"),
        (FluentDynamicLaw(Atom("S"), TOP, Atom("A")), "dynamic law head may not mention static"),
        (FluentDynamicLaw(Atom("P"), Atom("X"), TOP), "may not mention pf"),
        (UtilityLaw(1.0, TOP, Atom("X")), "may not mention pf"),
        (StaticLaw(Atom("Nope")), "undeclared constant"),
        (StaticLaw(Atom("At", (), "R9")), "not in domain"),
        (StaticLaw(Atom("P", step=0)), "timed atom"),
        (StaticLaw(Not(Choice(Atom("P")))), "nested choice"),
    ],
)
def test_validate_rejects(law, fragment):
    problems = validate(_tiny(GOOD + [law]))
    assert any(fragment in str(v) for v in problems), problems


def test_validate_distributions():
    bad = [
        PfDeclaration("X", (), (("true", 0.3), ("false", 0.6))),
        InitPfDeclaration("I", (), (("true", 1.0), ("false", 0.0))),
    ]
    text = " ".join(str(v) for v in validate(_tiny(bad)))
    assert "sum to" in text
    assert "not in (0,1)" in text


def test_validate_requires_exactly_one_distribution():
    problems = validate(_tiny(GOOD[:1]))
    assert any("I" in str(v) for v in problems)
    problems = validate(_tiny(GOOD + GOOD[:1]))
    assert problems


def test_validate_signature_errors():
    D = _tiny(GOOD, extra=(ConstantDecl("P", "regular"),))
    assert any("declared twice" in str(v) for v in validate(D))


def test_grounding_respects_guards():
    law = FluentDynamicLaw(Atom("At", (), "r"), TOP, Atom("Go", ("r",)), (Guard("r", "!=", "R1"),))
    D = _tiny(GOOD + [law])
    ground = ground_law(law, D)
    assert ground == [FluentDynamicLaw(Atom("At", (), "R2"), TOP, Atom("Go", ("R2",)))]
    G = ground_schematics(D)
    assert G.variables == ()
    assert len(G.laws) == 3


def test_ground_constants_order():
    D = _tiny(GOOD)
    labels = [c.label for c in D.ground_constants()]
    assert labels == ["P", "At", "S", "A", "Go(R1)", "Go(R2)", "X", "I"]
    assert [c.label for c in D.constants_of("action")] == ["A", "Go(R1)", "Go(R2)"]
