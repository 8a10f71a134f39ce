"""Decision-theoretic reasoning over LP^MLN programs.

A decision problem pairs a ground program with a set of Boolean decision
atoms.  Decision atoms that no rule can derive are given choice rules, so
that every assignment to them can be conditioned on.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .engine import ZeroProbabilityError, solve, satisfies
from .lang import FALSE, TOP, TRUE, Atom, Not, conj
from .translator import GroundProgram, GroundSignature, choice_rule, program_atoms, render_program_formula

MAX_DECISIONS = 24
TIE_TOLERANCE = 1e-12


class DecisionError(Exception):
    pass


class TooManyDecisionsError(DecisionError):
    pass


@dataclass(frozen=True)
class DecisionAssignment:
    """Truth value per decision atom, in the problem's canonical atom order."""

    atoms: tuple[Atom, ...]
    values: tuple[bool, ...]

    def formula(self):
        return conj(*(a if v else Not(a) for a, v in zip(self.atoms, self.values)))

    def true_atoms(self) -> list[Atom]:
        return [a for a, v in zip(self.atoms, self.values) if v]

    def as_dict(self) -> dict[Atom, bool]:
        return dict(zip(self.atoms, self.values))


@dataclass
class MeuResult:
    assignment: DecisionAssignment
    value: float
    maximizers: list[DecisionAssignment]
    values: dict[tuple[bool, ...], float]


def _canonical(atoms: Sequence[Atom]) -> tuple[Atom, ...]:
    return tuple(sorted(set(atoms), key=lambda a: (-1 if a.step is None else a.step, a.name, a.args, a.value)))


class DecisionProblem:
    def __init__(self, program: GroundProgram, decisions: Sequence[Atom]):
        index = program.signature.index()
        for d in decisions:
            e = index.get(d.key)
            if e is None or d.value not in e.domain and not (e.plain and d.value == TRUE):
                raise DecisionError(f"decision atom not in signature: {render_program_formula(d)}")
            if not e.plain and set(e.domain) != {TRUE, FALSE}:
                raise DecisionError(f"decision atom must be Boolean: {render_program_formula(d)}")
        self.decisions = _canonical(decisions)
        heads = {a for r in program.rules for a in program_atoms(r.head)}
        extra = [choice_rule(d, category="choice_decision") for d in self.decisions if d not in heads]
        if extra:
            program = GroundProgram(program.signature, program.rules + tuple(extra), program.horizon)
        self.program = program

    def assignment(self, values: Mapping[Atom, bool] | Sequence[bool]) -> DecisionAssignment:
        if isinstance(values, Mapping):
            missing = [d for d in self.decisions if d not in values]
            if missing:
                raise DecisionError(f"assignment is not total: missing {render_program_formula(missing[0])}")
            vals = tuple(bool(values[d]) for d in self.decisions)
        else:
            vals = tuple(bool(v) for v in values)
            if len(vals) != len(self.decisions):
                raise DecisionError("assignment length does not match the decision atoms")
        return DecisionAssignment(self.decisions, vals)


def evaluate_decision(dp: DecisionProblem, dec: DecisionAssignment | Mapping, e=TOP) -> float:
    """Expected utility ``E[U(dec & e)]``."""
    if not isinstance(dec, DecisionAssignment):
        dec = dp.assignment(dec)
    cond = conj(dec.formula(), e) if e != TOP else dec.formula()
    models = solve(dp.program, cond)
    if not models:
        raise ZeroProbabilityError(render_program_formula(cond))
    return math.fsum(r.utility * r.probability for r in models)


def meu(dp: DecisionProblem, e=TOP) -> MeuResult:
    """Exhaustive maximum-expected-utility decision under evidence ``e``.

    Ties are all reported; the primary answer is the lexicographically
    smallest assignment (false before true, canonical atom order).
    """
    k = len(dp.decisions)
    if k > MAX_DECISIONS:
        raise TooManyDecisionsError(f"{k} decision atoms exceed the limit of {MAX_DECISIONS}")
    models = solve(dp.program, None if e == TOP else e)
    groups: dict[tuple[bool, ...], list[float]] = {}
    for r in models:
        key = tuple(r.interpretation.holds(d) for d in dp.decisions)
        acc = groups.setdefault(key, [0.0, 0.0])
        acc[0] += r.probability
        acc[1] += r.probability * r.utility
    values = {key: pu / p for key, (p, pu) in groups.items() if p > 0.0}
    if not values:
        raise ZeroProbabilityError(render_program_formula(e))
    best = max(values.values())
    tol = TIE_TOLERANCE * max(1.0, abs(best))
    ties = sorted(key for key, v in values.items() if v >= best - tol)
    maxi = [DecisionAssignment(dp.decisions, key) for key in ties]
    return MeuResult(maxi[0], values[ties[0]], maxi, values)
