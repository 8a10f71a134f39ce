"""Probabilistic transition system of a pBC+ description.

States are residual stable models of D_0 projected onto the fluents; action
profiles come from D_1.  Every quantity below is read off the stable models
of D_1, grouped by (state, action profile, pf assignment, successor).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

from .engine import StableModelRecord, ZeroProbabilityError, solve
from .lang import (
    ACTION,
    FALSE,
    INITPF,
    PF,
    REGULAR,
    STATIC,
    TRUE,
    ActionDescription,
    Atom,
    Constant,
    Formula,
    Not,
    conj,
    disj,
    ground_schematics,
    lift,
)
from .translator import translate

TOLERANCE = 1e-9


@dataclass(frozen=True, order=True)
class Assignment:
    """Value assignment to a set of untimed constants, sorted by constant name."""

    items: tuple[tuple[str, tuple[str, ...], str], ...]

    @classmethod
    def of(cls, pairs: Iterable[tuple[Constant, str]]) -> "Assignment":
        return cls(tuple(sorted((c.label, c.args, v) for c, v in pairs)))

    def formula(self) -> Formula:
        return conj(*(Atom(_base(label), args, v) for label, args, v in self.items))

    def at(self, step: int) -> Formula:
        return lift(self.formula(), step)

    def value(self, label: str) -> str:
        for lab, _, v in self.items:
            if lab == label:
                return v
        raise KeyError(label)

    def as_dict(self) -> dict[str, str]:
        return {label: v for label, _, v in self.items}

    def __str__(self) -> str:
        if not self.items:
            return "{}"
        return ", ".join(_literal(label, v) for label, _, v in self.items)


def _base(label: str) -> str:
    return label.split("(", 1)[0]


def _literal(label: str, value: str) -> str:
    if value == TRUE:
        return label
    if value == FALSE:
        return "~" + label
    return f"{label}={value}"


class State(Assignment):
    pass


class ActionProfile(Assignment):
    def true_actions(self) -> list[str]:
        return [label for label, _, v in self.items if v == TRUE]

    def __str__(self) -> str:
        names = self.true_actions()
        return " & ".join(names) if names else "none"


class PfAssignment(Assignment):
    pass


@dataclass(frozen=True)
class Edge:
    source: int
    action: int
    target: int
    probability: float
    reward: float


@dataclass
class TransitionSystem:
    states: tuple[State, ...]
    actions: tuple[ActionProfile, ...]
    edges: tuple[Edge, ...]

    def state_index(self, s: State) -> int:
        return self.states.index(s)

    def action_index(self, e: ActionProfile) -> int:
        return self.actions.index(e)


class TransitionError(Exception):
    pass


class ImpossibleConditionError(TransitionError):
    pass


class AssumptionViolationError(TransitionError):
    pass


# ---------------------------------------------------------------------------
# Compiled view of D_0 and D_1
# ---------------------------------------------------------------------------


@dataclass
class _Compiled:
    D: ActionDescription
    fluents: tuple[Constant, ...]
    actions: tuple[Constant, ...]
    pfs: tuple[Constant, ...]
    d0: list[StableModelRecord]
    d1: list[StableModelRecord]
    rows: list = field(default_factory=list)  # (s, e, pf, s2, prob, utility)


def _project(record: StableModelRecord, consts: Sequence[Constant], step: int, cls):
    I = record.interpretation
    return cls.of((c, I.value((step, c.name, c.args))) for c in consts)


@lru_cache(maxsize=16)
def _compile(D: ActionDescription) -> _Compiled:
    G = ground_schematics(D) if D.variables else D
    fluents = G.constants_of(REGULAR, STATIC)
    actions = G.constants_of(ACTION)
    pfs = G.constants_of(PF)
    d0 = solve(translate(G, 0, include_init=False))
    d1 = solve(translate(G, 1, include_init=False))
    cp = _Compiled(G, fluents, actions, pfs, d0, d1)
    for r in d1:
        cp.rows.append(
            (
                _project(r, fluents, 0, State),
                _project(r, actions, 0, ActionProfile),
                _project(r, pfs, 0, PfAssignment),
                _project(r, fluents, 1, State),
                r.probability,
                r.utility,
            )
        )
    return cp


def ground(D: ActionDescription) -> ActionDescription:
    return _compile(D).D


# ---------------------------------------------------------------------------
# States, actions, transitions
# ---------------------------------------------------------------------------


def enumerate_states(D: ActionDescription) -> list[State]:
    """Canonically ordered states (fluent projections of D_0's stable models)."""
    cp = _compile(D)
    states = sorted({_project(r, cp.fluents, 0, State) for r in cp.d0})
    if not states:
        raise TransitionError("description has no states (D_0 is inconsistent)")
    return states


def enumerate_actions(D: ActionDescription) -> list[ActionProfile]:
    """Canonically ordered action profiles occurring in D_1's stable models."""
    cp = _compile(D)
    return sorted({e for _, e, _, _, _, _ in cp.rows})


def _group(D: ActionDescription):
    cp = _compile(D)
    g = cp.__dict__.get("_groups")
    if g is None:
        g = {}
        for s, e, pf, s2, p, u in cp.rows:
            slot = g.setdefault((s, e), {"mass": 0.0, "next": {}})
            slot["mass"] += p
            nxt = slot["next"].setdefault(s2, [0.0, 0.0])
            nxt[0] += p
            nxt[1] += p * u
        cp.__dict__["_groups"] = g
    return g


def transition_probability(D: ActionDescription, s: State, e: ActionProfile, s2: State) -> float:
    """``P_{D_1}(1:s2 | 0:s & 0:e)``; zero when no stable model links them."""
    slot = _group(D).get((s, e))
    if slot is None or slot["mass"] <= 0.0:
        raise ImpossibleConditionError(f"state {{{s}}} with action {e} is impossible")
    return slot["next"].get(s2, [0.0, 0.0])[0] / slot["mass"]


def transition_reward(D: ActionDescription, s: State, e: ActionProfile, s2: State) -> float:
    """``E[U(0:s & 0:e & 1:s2)]`` over D_1; an impossible triple is an error."""
    slot = _group(D).get((s, e))
    nxt = None if slot is None else slot["next"].get(s2)
    if nxt is None or nxt[0] <= 0.0:
        raise ImpossibleConditionError(f"transition {{{s}}} --{e}--> {{{s2}}} has probability zero")
    return nxt[1] / nxt[0]


def transition_system(D: ActionDescription) -> TransitionSystem:
    states = enumerate_states(D)
    actions = enumerate_actions(D)
    s_idx = {s: i for i, s in enumerate(states)}
    a_idx = {a: i for i, a in enumerate(actions)}
    edges = []
    for (s, e), slot in _group(D).items():
        for s2, (p, pu) in slot["next"].items():
            if p <= 0.0:
                continue
            if s not in s_idx or s2 not in s_idx:
                raise TransitionError(f"transition leaves the state space: {{{s}}} -> {{{s2}}}")
            edges.append(Edge(s_idx[s], a_idx[e], s_idx[s2], p / slot["mass"], pu / p))
    edges.sort(key=lambda x: (x.source, x.action, x.target))
    return TransitionSystem(tuple(states), tuple(actions), tuple(edges))


def pf_assignments(D: ActionDescription) -> list[PfAssignment]:
    cp = _compile(D)
    return sorted(
        PfAssignment.of(zip(cp.pfs, vals)) for vals in itertools.product(*(c.domain for c in cp.pfs))
    )


def single_action_profiles(D: ActionDescription) -> list[ActionProfile]:
    """The profiles with at most one true action (the no-concurrency set)."""
    cp = _compile(D)
    out = [ActionProfile.of((c, FALSE) for c in cp.actions)]
    for a in cp.actions:
        out.append(ActionProfile.of((c, TRUE if c == a else FALSE) for c in cp.actions))
    return sorted(out)


def successors(D: ActionDescription, s: State, e: ActionProfile, pf: PfAssignment) -> list[State]:
    cp = _compile(D)
    idx = cp.__dict__.get("_succ")
    if idx is None:
        idx = {}
        for s0, e0, pf0, s1, _, _ in cp.rows:
            idx.setdefault((s0, e0, pf0), set()).add(s1)
        cp.__dict__["_succ"] = idx
    return sorted(idx.get((s, e, pf), ()))


def successor(D: ActionDescription, s: State, e: ActionProfile, pf: PfAssignment) -> State:
    """The unique state reached from ``s`` under ``e`` and ``pf``."""
    found = successors(D, s, e, pf)
    if len(found) != 1:
        raise AssumptionViolationError(
            f"assumption 2: {{{s}}} under {e} with pf {{{pf}}} has {len(found)} successors"
        )
    return found[0]


# ---------------------------------------------------------------------------
# Assumptions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AssumptionViolation:
    assumption: int
    message: str
    witness: str

    def __str__(self) -> str:
        return f"assumption {self.assumption}: {self.message} [{self.witness}]"


@dataclass(frozen=True)
class AssumptionReport:
    violations: tuple[AssumptionViolation, ...]
    notes: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def passed(self, assumption: int) -> bool:
        return all(v.assumption != assumption for v in self.violations)


def check_assumptions(D: ActionDescription) -> AssumptionReport:
    """Check no concurrency, pf-determined transitions and initpf-determined start."""
    cp = _compile(D)
    out: list[AssumptionViolation] = []

    seen = set()
    for s, e, _, _, _, _ in cp.rows:
        if len(e.true_actions()) >= 2 and (s, e) not in seen:
            seen.add((s, e))
            out.append(AssumptionViolation(1, "concurrent actions executable", f"state {{{s}}}, actions {e}"))

    states = enumerate_states(D)
    for s in states:
        for e in single_action_profiles(D):
            for pf in pf_assignments(D):
                n = len(successors(D, s, e, pf))
                if n != 1:
                    out.append(
                        AssumptionViolation(
                            2, f"{n} successor states", f"state {{{s}}}, action {e}, pf {{{pf}}}"
                        )
                    )

    initpfs = cp.D.constants_of(INITPF)
    init_models = solve(translate(cp.D, 0, include_init=True))
    starts: dict[PfAssignment, set[State]] = {}
    for r in init_models:
        key = _project(r, initpfs, 0, PfAssignment)
        starts.setdefault(key, set()).add(_project(r, cp.fluents, 0, State))
    for vals in itertools.product(*(c.domain for c in initpfs)):
        key = PfAssignment.of(zip(initpfs, vals))
        n = len(starts.get(key, ()))
        if n != 1:
            out.append(AssumptionViolation(3, f"{n} initial states", f"initpf {{{key}}}"))

    notes = []
    n_profiles = len(enumerate_actions(D))
    if n_profiles != len(cp.actions) + 1:
        notes.append(
            f"{n_profiles} executable action profiles but {len(cp.actions)} + 1 expected; "
            "action-sequence probabilities will differ from 1/(|actions|+1)^m"
        )
    return AssumptionReport(tuple(out), tuple(notes))


# ---------------------------------------------------------------------------
# History and policy formulas
# ---------------------------------------------------------------------------


def history_formula(history: Sequence[Assignment]) -> Formula:
    """Timed conjunction for ``<s0, a0, s1, ..., sm>`` (states at even positions)."""
    if len(history) % 2 != 1:
        raise ValueError("a history alternates states and actions and ends in a state")
    parts = []
    for pos, item in enumerate(history):
        parts.append(item.at(pos // 2))
    return conj(*parts)


def policy_formula(policy: Sequence[Sequence[int]], states: Sequence[State], actions: Sequence[ActionProfile],
                   m: int) -> Formula:
    """C_{pi,m}: conjunction over states and steps of ``i:s -> i:pi(s, i)``."""
    parts = []
    for i in range(m):
        for si, s in enumerate(states):
            try:
                ai = policy[si][i]
                a = actions[ai]
            except IndexError:
                raise IndexError(f"policy has no valid action for state {si} at step {i}") from None
            parts.append(disj(Not(s.at(i)), a.at(i)))
    return conj(*parts)
