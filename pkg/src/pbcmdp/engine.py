"""Exact LP^MLN semantics: stable models, weights, probabilities, utilities.

An interpretation assigns one value to every multi-valued constant of the
signature and a truth value to every plain atom (utility atoms included).
``I`` is a stable model of a program when it satisfies every hard rule and
is the minimal model of the Ferraris reduct of the rules it satisfies.

Enumeration is a backtracking search over the signature in its declared
order (the translator emits constants step by step).  Two sound necessary
conditions prune partial assignments:

* no hard rule may be definitely violated (three-valued evaluation);
* every true atom needs a rule with that atom positively in the head whose
  body is not definitely false (supportedness of stable models).

At a leaf the reduct's least fixpoint decides stability, which also rules
out self-supporting positive loops.  Disjunctive heads fall back to an
explicit subset search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

from .lang import BOT, FALSE, TOP, TRUE, And, Atom, Bot, Choice, Formula, Not, Or, Top
from .translator import GroundProgram, UtilityAtom, program_atoms

_T, _F, _ATOM, _NOT, _AND, _OR = range(6)
_TRUE3, _FALSE3, _UNKNOWN = 1, 0, 2

DEFAULT_MODEL_LIMIT = 2_000_000
MODEL_LIMIT = DEFAULT_MODEL_LIMIT  # consulted at call time; the CLI may lower it


class EngineError(Exception):
    pass


class NoStableModelError(EngineError):
    """The program has no stable model at all."""


class ZeroProbabilityError(EngineError):
    """A conditioning formula is satisfied by no stable model."""

    def __init__(self, condition: str):
        self.condition = condition
        super().__init__(f"condition has probability zero: {condition}")


class ResourceLimitError(EngineError):
    pass


class UnknownAtomError(EngineError):
    pass


# ---------------------------------------------------------------------------
# Interpretations and records
# ---------------------------------------------------------------------------


class Interpretation:
    """Total value assignment over a program signature (immutable)."""

    __slots__ = ("_index", "_domains", "_values", "_utility")

    def __init__(self, index: Mapping[tuple, int], domains: Sequence[tuple[str, ...]], values: tuple[int, ...],
                 utility: frozenset):
        self._index = index
        self._domains = domains
        self._values = values
        self._utility = utility

    def value(self, key: tuple) -> str:
        i = self._index[key]
        return self._domains[i][self._values[i]]

    def holds(self, atom) -> bool:
        if isinstance(atom, UtilityAtom):
            return atom in self._utility
        i = self._index.get(atom.key)
        if i is None:
            raise UnknownAtomError(f"atom not in signature: {atom}")
        return self._domains[i][self._values[i]] == atom.value

    def assignment(self) -> dict[tuple, str]:
        return {k: self._domains[i][self._values[i]] for k, i in self._index.items()}

    @property
    def utility_atoms(self) -> frozenset:
        return self._utility

    @property
    def raw(self) -> tuple[int, ...]:
        return self._values

    def __eq__(self, other) -> bool:
        return isinstance(other, Interpretation) and self.assignment() == other.assignment() and (
            self._utility == other._utility
        )

    def __hash__(self) -> int:
        return hash((self._values, self._utility))

    def __repr__(self) -> str:
        return f"Interpretation({self.assignment()!r}, utility={sorted(map(str, self._utility))})"


def utility(I: Interpretation) -> float:
    """Sum of the rewards of the utility atoms true in ``I``."""
    return math.fsum(u.reward for u in I.utility_atoms)


@dataclass(frozen=True)
class StableModelRecord:
    interpretation: Interpretation
    log_weight: float
    probability: float
    utility: float


@dataclass(frozen=True)
class QueryResult:
    probability: float
    support: int


# ---------------------------------------------------------------------------
# Reduct (definitional form, used for documentation, tests and fallbacks)
# ---------------------------------------------------------------------------


def _holds(f, I: Interpretation) -> bool:
    if isinstance(f, (Atom, UtilityAtom)):
        return I.holds(f)
    if isinstance(f, Top):
        return True
    if isinstance(f, Bot):
        return False
    if isinstance(f, Not):
        return not _holds(f.arg, I)
    if isinstance(f, And):
        return all(_holds(c, I) for c in f.args)
    if isinstance(f, Or):
        return any(_holds(c, I) for c in f.args)
    raise TypeError(f"unsupported formula {f!r}")


def satisfies(I: Interpretation, f) -> bool:
    return _holds(f, I)


def reduct(f, I: Interpretation):
    """Ferraris reduct: each maximal subformula false in ``I`` becomes ``false``."""
    if not _holds(f, I):
        return BOT
    if isinstance(f, (Atom, UtilityAtom, Top)):
        return f
    if isinstance(f, Not):
        return Not(reduct(f.arg, I))
    if isinstance(f, And):
        return And(tuple(reduct(c, I) for c in f.args))
    if isinstance(f, Or):
        return Or(tuple(reduct(c, I) for c in f.args))
    raise TypeError(f"unsupported formula {f!r}")


# ---------------------------------------------------------------------------
# Compilation
# ---------------------------------------------------------------------------


class _Compiled:
    def __init__(self, program: GroundProgram):
        sig = program.signature
        self.keys: list = []
        self.domains: list[tuple[str, ...]] = []
        self.plain: list[bool] = []
        for e in sig.entries:
            self.keys.append(e.key)
            self.domains.append(e.domain)
            self.plain.append(e.plain)
        self.n_entries = len(self.keys)
        self.utility_atoms = list(sig.utility)
        self.utility_var = {}
        for u in self.utility_atoms:
            self.utility_var[u] = len(self.keys)
            self.keys.append(u.key)
            self.domains.append((FALSE, TRUE))
            self.plain.append(True)
        self.index = {k: i for i, k in enumerate(self.keys[: self.n_entries])}
        self.n = len(self.keys)

        self.heads = []
        self.bodies = []
        self.hard = []
        self.logw = []
        for r in program.rules:
            self.heads.append(self.compile(r.head))
            self.bodies.append(self.compile(r.body))
            self.hard.append(r.is_hard)
            self.logw.append(r.weight.log)
        nr = len(self.heads)

        self.watch: list[list[int]] = [[] for _ in range(self.n)]
        self.support: dict[tuple[int, int], list[int]] = {}
        self.recheck: list[list[int]] = [[] for _ in range(self.n)]
        self.head_pos: list[list[tuple[int, int]]] = []
        self.ground_hard: list[int] = []
        for r in range(nr):
            hv = _vars(self.heads[r])
            bv = _vars(self.bodies[r])
            if self.hard[r]:
                allv = hv | bv
                for v in allv:
                    self.watch[v].append(r)
                if not allv:
                    self.ground_hard.append(r)
            pos = sorted(_positive_atoms(self.heads[r]))
            self.head_pos.append(pos)
            for at in pos:
                self.support.setdefault(at, []).append(r)
            if pos:
                for v in bv:
                    self.recheck[v].append(r)
        self.soft_rules = [r for r in range(nr) if not self.hard[r]]

    def compile(self, f):
        if isinstance(f, UtilityAtom):
            if f not in self.utility_var:
                raise UnknownAtomError(f"utility atom not in signature: {f}")
            return (_ATOM, self.utility_var[f], 1)
        if isinstance(f, Atom):
            i = self.index.get(f.key)
            if i is None:
                raise UnknownAtomError(f"atom not in signature: {_label(f)}")
            if self.plain[i]:
                if f.value != TRUE:
                    raise UnknownAtomError(f"plain atom {_label(f)} only has the value true")
                return (_ATOM, i, 1)
            try:
                return (_ATOM, i, self.domains[i].index(f.value))
            except ValueError:
                raise UnknownAtomError(f"value {f.value!r} not in domain of {_label(f)}") from None
        if isinstance(f, Top):
            return (_T,)
        if isinstance(f, Bot):
            return (_F,)
        if isinstance(f, Not):
            return (_NOT, self.compile(f.arg))
        if isinstance(f, And):
            return (_AND, tuple(self.compile(c) for c in f.args))
        if isinstance(f, Or):
            return (_OR, tuple(self.compile(c) for c in f.args))
        if isinstance(f, Choice):
            raise EngineError("choice formulas must be encoded before solving")
        raise TypeError(f"unsupported formula {f!r}")


def _label(a) -> str:
    from .lang import render

    return render(a) if isinstance(a, Atom) else str(a)


def _vars(n) -> set[int]:
    op = n[0]
    if op == _ATOM:
        return {n[1]}
    if op == _NOT:
        return _vars(n[1])
    if op in (_AND, _OR):
        out: set[int] = set()
        for c in n[1]:
            out |= _vars(c)
        return out
    return set()


def _positive_atoms(n) -> set[tuple[int, int]]:
    op = n[0]
    if op == _ATOM:
        return {(n[1], n[2])}
    if op in (_AND, _OR):
        out: set[tuple[int, int]] = set()
        for c in n[1]:
            out |= _positive_atoms(c)
        return out
    return set()


def _ev3(n, a) -> int:
    op = n[0]
    if op == _ATOM:
        v = a[n[1]]
        if v < 0:
            return _UNKNOWN
        return _TRUE3 if v == n[2] else _FALSE3
    if op == _AND:
        res = _TRUE3
        for c in n[1]:
            r = _ev3(c, a)
            if r == _FALSE3:
                return _FALSE3
            if r == _UNKNOWN:
                res = _UNKNOWN
        return res
    if op == _OR:
        res = _FALSE3
        for c in n[1]:
            r = _ev3(c, a)
            if r == _TRUE3:
                return _TRUE3
            if r == _UNKNOWN:
                res = _UNKNOWN
        return res
    if op == _NOT:
        r = _ev3(n[1], a)
        return r if r == _UNKNOWN else 1 - r
    return _TRUE3 if op == _T else _FALSE3


def _ev(n, a) -> bool:
    """Classical evaluation under a total assignment."""
    op = n[0]
    if op == _ATOM:
        return a[n[1]] == n[2]
    if op == _AND:
        for c in n[1]:
            if not _ev(c, a):
                return False
        return True
    if op == _OR:
        for c in n[1]:
            if _ev(c, a):
                return True
        return False
    if op == _NOT:
        return not _ev(n[1], a)
    return op == _T


def _ev_reduct(n, a, j) -> bool:
    """Truth in ``J`` (given by ``j``) of the reduct w.r.t. ``I`` (given by ``a``).

    For ``J`` a subset of ``I`` this equals truth of the Ferraris reduct:
    negated subformulas take their value in ``I``, the rest is read in ``J``.
    """
    op = n[0]
    if op == _ATOM:
        return j[n[1]] == n[2]
    if op == _AND:
        for c in n[1]:
            if not _ev_reduct(c, a, j):
                return False
        return True
    if op == _OR:
        for c in n[1]:
            if _ev_reduct(c, a, j):
                return True
        return False
    if op == _NOT:
        return not _ev(n[1], a)
    return op == _T


def _requirements(n, a):
    """Atoms a minimal model must contain to satisfy head ``n`` (true in I).

    Returns None when the reduct head is a genuine disjunction.
    """
    op = n[0]
    if op == _ATOM:
        return [(n[1], n[2])]
    if op == _AND:
        out = []
        for c in n[1]:
            sub = _requirements(c, a)
            if sub is None:
                return None
            out.extend(sub)
        return out
    if op == _OR:
        options = [_requirements(c, a) for c in n[1] if _ev(c, a)]
        if any(o == [] for o in options):
            return []
        if len(options) == 1:
            return options[0]
        return None
    return []  # a satisfied negation reduces to a tautology; so does true


# ---------------------------------------------------------------------------
# Search
# ---------------------------------------------------------------------------


def _compiled(program: GroundProgram) -> _Compiled:
    c = program._cache.get("compiled")
    if c is None:
        c = _Compiled(program)
        program._cache["compiled"] = c
    return c


def _search(cp: _Compiled, constraint=None, limit: int | None = None) -> list[tuple[tuple[int, ...], float]]:
    if limit is None:
        limit = MODEL_LIMIT
    n = cp.n
    a = [-1] * n
    heads, bodies, watch, support, recheck, head_pos = (
        cp.heads, cp.bodies, cp.watch, cp.support, cp.recheck, cp.head_pos,
    )
    plain = cp.plain
    domains = cp.domains
    for r in cp.ground_hard:
        if _ev(bodies[r], a) and not _ev(heads[r], a):
            return []
    c_vars = _vars(constraint) if constraint is not None else set()
    if constraint is not None and not c_vars and not _ev(constraint, a):
        return []
    results: list[tuple[tuple[int, ...], float]] = []

    def is_supported(v: int, x: int) -> bool:
        rs = support.get((v, x))
        if not rs:
            return False
        for r in rs:
            if _ev3(bodies[r], a) != _FALSE3:
                return True
        return False

    def consistent(v: int) -> bool:
        for r in watch[v]:
            if _ev3(bodies[r], a) == _TRUE3 and _ev3(heads[r], a) == _FALSE3:
                return False
        x = a[v]
        if (not plain[v] or x == 1) and not is_supported(v, x):
            return False
        for r in recheck[v]:
            if _ev3(bodies[r], a) != _FALSE3:
                continue
            for (u, y) in head_pos[r]:
                if a[u] == y and not is_supported(u, y):
                    return False
        if v in c_vars and _ev3(constraint, a) == _FALSE3:
            return False
        return True

    def leaf() -> None:
        if _stable(cp, a):
            lw = 0.0
            for r in cp.soft_rules:
                if not _ev(bodies[r], a) or _ev(heads[r], a):
                    lw += cp.logw[r]
            results.append((tuple(a), lw))
            if len(results) > limit:
                raise ResourceLimitError(f"more than {limit} stable models")

    def descend(k: int) -> None:
        if k == n:
            leaf()
            return
        for x in range(len(domains[k])):
            a[k] = x
            if consistent(k):
                descend(k + 1)
        a[k] = -1

    import sys

    old = sys.getrecursionlimit()
    if old < n + 200:
        sys.setrecursionlimit(n + 200)
    try:
        descend(0)
    finally:
        sys.setrecursionlimit(old)
    return results


def _true_atoms(cp: _Compiled, a) -> list[tuple[int, int]]:
    return [(v, x) for v, x in enumerate(a) if not cp.plain[v] or x == 1]


def _stable(cp: _Compiled, a) -> bool:
    true_atoms = _true_atoms(cp, a)
    active = []
    seen = set()
    disjunctive = False
    for at in true_atoms:
        for r in cp.support.get(at, ()):
            if r in seen:
                continue
            seen.add(r)
            if not _ev(cp.bodies[r], a):
                continue
            if not cp.hard[r] and not _ev(cp.heads[r], a):
                continue  # unsatisfied soft rule is not in the reduced program
            req = _requirements(cp.heads[r], a)
            if req is None:
                disjunctive = True
                break
            active.append((cp.bodies[r], req))
        if disjunctive:
            break
    if disjunctive:
        return _stable_by_subsets(cp, a, true_atoms)
    j = [-1] * len(a)
    pending = active
    changed = True
    while changed and pending:
        changed = False
        rest = []
        for body, req in pending:
            if _ev_reduct(body, a, j):
                for v, x in req:
                    if j[v] != x:
                        j[v] = x
                        changed = True
            else:
                rest.append((body, req))
        pending = rest
    return all(j[v] == x for v, x in true_atoms)


def _stable_by_subsets(cp: _Compiled, a, true_atoms, max_atoms: int = 22) -> bool:
    """Minimality by explicit search over subsets of the true atoms."""
    if len(true_atoms) > max_atoms:
        raise ResourceLimitError("disjunctive minimality check over too many atoms")
    rules = []
    for r in range(len(cp.heads)):
        if not _ev(cp.bodies[r], a):
            continue
        if not cp.hard[r] and not _ev(cp.heads[r], a):
            continue
        rules.append(r)
    k = len(true_atoms)
    for mask in range((1 << k) - 1):
        j = [-1] * len(a)
        for bit in range(k):
            if mask >> bit & 1:
                v, x = true_atoms[bit]
                j[v] = x
        if all(
            not _ev_reduct(cp.bodies[r], a, j) or _ev_reduct(cp.heads[r], a, j) for r in rules
        ):
            return False
    return True


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------


def _interpretation(cp: _Compiled, values: tuple[int, ...]) -> Interpretation:
    util = frozenset(u for u in cp.utility_atoms if values[cp.utility_var[u]] == 1)
    return Interpretation(cp.index, cp.domains, values[: cp.n_entries], util)


def _normalise(cp: _Compiled, raw) -> list[StableModelRecord]:
    if not raw:
        return []
    top = max(lw for _, lw in raw)
    scaled = [math.exp(lw - top) for _, lw in raw]
    total = math.fsum(scaled)
    out = []
    for (values, lw), s in zip(raw, scaled):
        I = _interpretation(cp, values)
        out.append(StableModelRecord(I, lw, s / total, utility(I)))
    return out


def solve(program: GroundProgram, condition=None, *, limit: int | None = None) -> list[StableModelRecord]:
    """Stable models satisfying ``condition``, normalised among themselves.

    With no condition this is the full distribution; with a condition the
    probabilities are the conditional ones ``P(I | condition)``.  The result
    may be empty.
    """
    cp = _compiled(program)
    if condition is None or condition == TOP:
        cached = program._cache.get("models")
        if cached is None:
            cached = _normalise(cp, _search(cp, None, limit))
            program._cache["models"] = cached
        return cached
    node = cp.compile(condition)
    return _normalise(cp, _search(cp, node, limit))


def enumerate_stable_models(program: GroundProgram, *, limit: int | None = None) -> list[StableModelRecord]:
    """All stable models with probabilities; raises if there are none."""
    models = solve(program, limit=limit)
    if not models:
        raise NoStableModelError("program has no stable model")
    return models


def _describe(f) -> str:
    from .translator import render_program_formula

    return render_program_formula(f)


def query_probability(program: GroundProgram, query, evidence=TOP) -> QueryResult:
    """``P(query | evidence)`` and the number of models satisfying both."""
    models = solve(program, evidence)
    if not models:
        raise ZeroProbabilityError(_describe(evidence))
    hit = [r for r in models if satisfies(r.interpretation, query)]
    return QueryResult(min(1.0, math.fsum(r.probability for r in hit)), len(hit))


def expected_utility(program: GroundProgram, condition=TOP) -> float:
    """``E[U(A)] = sum over I |= A of U(I) * P(I | A)``."""
    models = solve(program, condition)
    if not models:
        raise ZeroProbabilityError(_describe(condition))
    return math.fsum(r.utility * r.probability for r in models)


def dump_models(models: Iterable[StableModelRecord]) -> str:
    """One model per line: assignment, log-weight, probability, utility."""
    from .lang import constant_label

    lines = []
    for r in models:
        parts = []
        for (step, name, args), value in sorted(r.interpretation.assignment().items(), key=repr):
            prefix = "" if step is None else f"{step}:"
            parts.append(f"{prefix}{constant_label(name, args)}={value}")
        parts.extend(sorted(str(u) for u in r.interpretation.utility_atoms))
        lines.append(f"{' '.join(parts)}\t{r.log_weight!r}\t{r.probability!r}\t{r.utility!r}")
    return "\n".join(lines) + ("\n" if lines else "")
