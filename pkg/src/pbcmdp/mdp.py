"""The MDP M(D) of a description, its solvers, and the LP^MLN-side oracle.

Tensors are indexed ``[action, state, next_state]``.  The discounted
objective follows the convention in which the first reward is already
discounted once: sum over i of gamma**(i+1) * R(s_i, a_i, s_{i+1}).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .engine import ZeroProbabilityError, solve
from .lang import ActionDescription, conj
from .transition import (
    ActionProfile,
    State,
    check_assumptions,
    enumerate_actions,
    enumerate_states,
    ground,
    policy_formula,
    transition_system,
)
from .translator import translate

TOLERANCE = 1e-9
TIE_TOLERANCE = 1e-12
POLICY_LIMIT = 10**6
SEQUENCE_LIMIT = 10**6


class MdpError(Exception):
    pass


class ResourceGuardError(MdpError):
    pass


@dataclass
class Mdp:
    states: tuple[State, ...]
    actions: tuple[ActionProfile, ...]
    T: np.ndarray
    R: np.ndarray

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_actions(self) -> int:
        return len(self.actions)


@dataclass
class NonStationaryPolicy:
    horizon: int
    table: np.ndarray  # (states, horizon) action indices
    values: np.ndarray  # (states, horizon + 1); column i is V_i

    def action(self, state: int, step: int) -> int:
        return int(self.table[state, step])

    def value(self, state: int) -> float:
        return float(self.values[state, 0])


@dataclass
class StationaryPolicy:
    table: np.ndarray
    values: np.ndarray
    gamma: float
    residuals: list[float] = field(default_factory=list)


def build_mdp(D: ActionDescription, *, check: bool = True) -> Mdp:
    """Assemble M(D); refuses descriptions that violate the assumptions."""
    if check:
        report = check_assumptions(D)
        if not report.ok:
            from .transition import AssumptionViolationError

            raise AssumptionViolationError("; ".join(str(v) for v in report.violations[:5]))
    ts = transition_system(D)
    nS, nA = len(ts.states), len(ts.actions)
    T = np.zeros((nA, nS, nS))
    R = np.zeros((nA, nS, nS))
    for e in ts.edges:
        T[e.action, e.source, e.target] = e.probability
        R[e.action, e.source, e.target] = e.reward
    # With the assumptions unchecked, a profile that is not executable in a
    # state leaves an all-zero row; the solvers then treat it as worth 0.
    return Mdp(ts.states, ts.actions, T, R)


def _check_history(mdp: Mdp, history: Sequence[int]) -> None:
    if len(history) % 2 != 1:
        raise ValueError("history must be <s0, a0, s1, ..., sm>")
    for pos, x in enumerate(history):
        bound = mdp.n_states if pos % 2 == 0 else mdp.n_actions
        if not 0 <= x < bound:
            raise IndexError(f"index {x} out of range at position {pos}")


def history_reward(mdp: Mdp, history: Sequence[int]) -> float:
    _check_history(mdp, history)
    return math.fsum(
        mdp.R[history[i + 1], history[i], history[i + 2]] for i in range(0, len(history) - 1, 2)
    )


def history_probability(mdp: Mdp, history: Sequence[int]) -> float:
    _check_history(mdp, history)
    p = 1.0
    for i in range(0, len(history) - 1, 2):
        p *= mdp.T[history[i + 1], history[i], history[i + 2]]
    return float(p)


def _table(policy) -> np.ndarray:
    return policy.table if hasattr(policy, "table") else np.asarray(policy)


def expected_total_reward(mdp: Mdp, policy, s0: int, m: int | None = None, *, method: str = "dp") -> float:
    """Expected total reward of a non-stationary policy over horizon ``m``.

    ``method="dp"`` propagates the state distribution forward;
    ``method="enumerate"`` sums over every state sequence explicitly.
    """
    table = _table(policy)
    if m is None:
        m = table.shape[1] if table.ndim == 2 else 0
    if m == 0:
        return 0.0
    if method == "enumerate":
        if mdp.n_states ** m > SEQUENCE_LIMIT:
            raise ResourceGuardError("too many state sequences to enumerate")
        total = 0.0
        for seq in itertools.product(range(mdp.n_states), repeat=m):
            hist = [s0]
            for i, s in enumerate(seq):
                hist += [int(table[hist[-1], i]), s]
            p = history_probability(mdp, hist)
            if p:
                total += p * history_reward(mdp, hist)
        return total
    dist = np.zeros(mdp.n_states)
    dist[s0] = 1.0
    total = 0.0
    for i in range(m):
        nxt = np.zeros(mdp.n_states)
        for s in np.nonzero(dist)[0]:
            a = int(table[s, i])
            total += dist[s] * float(mdp.T[a, s] @ mdp.R[a, s])
            nxt += dist[s] * mdp.T[a, s]
        dist = nxt
    return float(total)


def _argmax(q: np.ndarray) -> int:
    """Lowest index whose value is within tolerance of the maximum."""
    best = q.max()
    return int(np.flatnonzero(q >= best - TIE_TOLERANCE * max(1.0, abs(best)))[0])


def solve_finite(mdp: Mdp, m: int) -> NonStationaryPolicy:
    """Backward induction; ties go to the lowest action index."""
    if m < 0:
        raise ValueError("horizon must be non-negative")
    nS = mdp.n_states
    values = np.zeros((nS, m + 1))
    table = np.zeros((nS, m), dtype=int)
    expected_r = np.einsum("ast,ast->as", mdp.T, mdp.R)
    for i in range(m - 1, -1, -1):
        q = expected_r + mdp.T @ values[:, i + 1]  # (actions, states)
        for s in range(nS):
            a = _argmax(q[:, s])
            table[s, i] = a
            values[s, i] = q[a, s]
    return NonStationaryPolicy(m, table, values)


def solve_infinite(mdp: Mdp, gamma: float, epsilon: float, *, max_sweeps: int = 1_000_000) -> StationaryPolicy:
    """Value iteration for the discounted objective; greedy policy at the end."""
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie strictly between 0 and 1")
    if not epsilon > 0.0:
        raise ValueError("epsilon must be positive")
    threshold = epsilon * (1.0 - gamma) / (2.0 * gamma)
    expected_r = np.einsum("ast,ast->as", mdp.T, mdp.R)
    v = np.zeros(mdp.n_states)
    residuals: list[float] = []
    for _ in range(max_sweeps):
        q = gamma * (expected_r + mdp.T @ v)
        new = q.max(axis=0)
        res = float(np.max(np.abs(new - v))) if v.size else 0.0
        residuals.append(res)
        v = new
        if res < threshold:
            break
    else:
        raise MdpError("value iteration did not converge")
    q = gamma * (expected_r + mdp.T @ v)
    table = np.array([_argmax(q[:, s]) for s in range(mdp.n_states)], dtype=int)
    return StationaryPolicy(table, v, gamma, residuals)


# ---------------------------------------------------------------------------
# LP^MLN side
# ---------------------------------------------------------------------------


@lru_cache(maxsize=32)
def _lpmln_program(G: ActionDescription, m: int):
    return translate(G, m)


def _lpmln_models(D: ActionDescription, m: int):
    G = ground(D)
    return _lpmln_program(G, m), G


def policy_value_via_lpmln(D: ActionDescription, policy, s0: State | int, m: int) -> float:
    """``E[U(C_{pi,m} & 0:s0)]`` in Tr(D, m), computed by the LP^MLN engine."""
    if m == 0:
        return 0.0
    from .engine import expected_utility

    states = enumerate_states(D)
    actions = enumerate_actions(D)
    start = states[s0] if isinstance(s0, int) else s0
    program, _ = _lpmln_models(D, m)
    cond = conj(policy_formula(_table(policy), states, actions, m), start.at(0))
    return expected_utility(program, cond)


@dataclass
class LpmlnOptimum:
    policy: np.ndarray
    value: float
    maximizers: list[np.ndarray]
    values: dict


def _trajectories(D: ActionDescription, m: int):
    """Each stable model of Tr(D, m) as (state indices, action indices, p, u)."""
    program, G = _lpmln_models(D, m)
    states = enumerate_states(D)
    actions = enumerate_actions(D)
    s_idx = {s: i for i, s in enumerate(states)}
    a_idx = {a: i for i, a in enumerate(actions)}
    from .transition import _project  # projection helper shared with transition

    fl = G.constants_of("regular", "static")
    ac = G.constants_of("action")
    out = []
    for r in solve(program):
        ss = tuple(s_idx[_project(r, fl, i, State)] for i in range(m + 1))
        aa = tuple(a_idx[_project(r, ac, i, ActionProfile)] for i in range(m))
        out.append((ss, aa, r.probability, r.utility))
    return out, states, actions


def optimal_policy_via_lpmln(D: ActionDescription, s0: State | int, m: int) -> LpmlnOptimum:
    """Exhaustive argmax of the LP^MLN policy value over all non-stationary policies.

    A stable model satisfies C_{pi,m} exactly when pi(s_i, i) = a_i for every
    step of its trajectory, which is how the policy formula is evaluated here.
    """
    states = enumerate_states(D)
    actions = enumerate_actions(D)
    nS, nA = len(states), len(actions)
    count = nA ** (nS * m)
    if count > POLICY_LIMIT:
        raise ResourceGuardError(f"{count} policies exceed the search limit of {POLICY_LIMIT}")
    start = s0 if isinstance(s0, int) else states.index(s0)
    if m == 0:
        empty = np.zeros((nS, 0), dtype=int)
        return LpmlnOptimum(empty, 0.0, [empty], {(): 0.0})
    trajs, _, _ = _trajectories(D, m)
    trajs = [t for t in trajs if t[0][0] == start]
    if not trajs:
        raise ZeroProbabilityError(f"0:{{{states[start]}}}")
    best = -math.inf
    values: dict = {}
    for flat in itertools.product(range(nA), repeat=nS * m):
        mass = 0.0
        eu = 0.0
        for ss, aa, p, u in trajs:
            if all(flat[ss[i] * m + i] == aa[i] for i in range(m)):
                mass += p
                eu += p * u
        if mass <= 0.0:
            continue
        value = eu / mass
        values[flat] = value
        best = max(best, value)
    if not values:
        raise ZeroProbabilityError("no policy is consistent with the start state")
    maxi = [np.array(f, dtype=int).reshape(nS, m) for f, v in values.items() if v >= best - TOLERANCE]
    return LpmlnOptimum(maxi[0], best, maxi, values)
