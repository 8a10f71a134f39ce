"""Viral-marketing decision problems on small social graphs.

Marketing to a person costs that person's cost and makes them buy; a buyer
influences each neighbour with the probability of the connecting edge;
every buyer yields the same revenue.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..dtlpmln import DecisionProblem
from ..lang import Atom, conj
from ..translator import ProgramBuilder, UtilityAtom


@dataclass(frozen=True)
class MarketingGraph:
    name: str
    people: tuple[str, ...]
    cost: dict
    edges: tuple[tuple[str, str, float], ...]  # (influencer, influenced, probability)
    revenue: float = 10.0


def marketing_program(g: MarketingGraph):
    b = ProgramBuilder()
    market = {v: b.plain("marketTo", (v,)) for v in g.people}
    influence = {}
    for u, v, p in g.edges:
        influence[(u, v)] = b.plain("influence", (u, v))
    buy = {v: b.plain("buy", (v,)) for v in g.people}
    for (u, v), atom in influence.items():
        p = next(q for (x, y, q) in g.edges if (x, y) == (u, v))
        b.soft(math.log(p / (1.0 - p)), atom)
    for v in g.people:
        b.hard(buy[v], market[v])
    for (u, v), atom in influence.items():
        b.hard(buy[v], conj(buy[u], atom))
    for v in g.people:
        b.hard(UtilityAtom(g.revenue, ("buy", v)), buy[v])
        b.hard(UtilityAtom(-g.cost[v], ("market", v)), market[v])
    return b.build(), [market[v] for v in g.people]


def decision_problem(g: MarketingGraph) -> DecisionProblem:
    program, decisions = marketing_program(g)
    return DecisionProblem(program, decisions)


GRAPHS = (
    MarketingGraph(
        "chain3",
        ("alice", "bob", "carol"),
        {"alice": 2.0, "bob": 3.0, "carol": 9.5},
        (("alice", "bob", 0.6), ("bob", "carol", 0.5)),
    ),
    MarketingGraph(
        "cycle4",
        ("alice", "bob", "carol", "dave"),
        {"alice": 4.0, "bob": 6.0, "carol": 3.0, "dave": 8.0},
        (
            ("alice", "bob", 0.7),
            ("bob", "carol", 0.4),
            ("carol", "alice", 0.3),
            ("carol", "dave", 0.9),
            ("dave", "bob", 0.2),
        ),
    ),
    MarketingGraph(
        "star5",
        ("alice", "bob", "carol", "dave", "eve"),
        {"alice": 7.0, "bob": 1.5, "carol": 5.0, "dave": 9.0, "eve": 2.5},
        (
            ("alice", "bob", 0.8),
            ("alice", "carol", 0.3),
            ("alice", "dave", 0.55),
            ("bob", "eve", 0.35),
            ("eve", "alice", 0.25),
            ("dave", "carol", 0.45),
        ),
    ),
)
