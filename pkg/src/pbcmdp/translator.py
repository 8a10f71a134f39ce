"""Translation of a ground pBC+ description into a weighted LP^MLN program.

``translate(D, m)`` emits D_init (initpf facts and initial static laws) and
D_m (every other law, replicated over the time steps 0..m).  Every rule is
tagged with the category of the law that produced it, which is what
:func:`rule_count` and the golden tests rely on.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .lang import (
    ACTION,
    BOT,
    FALSE,
    INITPF,
    PF,
    REGULAR,
    STATIC,
    TOP,
    TRUE,
    ActionDescription,
    And,
    Atom,
    Choice,
    Constant,
    FluentDynamicLaw,
    Formula,
    InitialStaticLaw,
    InitPfDeclaration,
    Not,
    Or,
    PfDeclaration,
    StaticLaw,
    UtilityLaw,
    atoms,
    conj,
    disj,
    ground_schematics,
    lift,
    render,
)

CATEGORIES = (
    "static",
    "dynamic",
    "pf",
    "initpf",
    "initial",
    "choice_fluent",
    "choice_action",
    "uniqueness",
    "existence",
    "utility",
)


@dataclass(frozen=True)
class Weight:
    """Rule weight: ``log`` is the soft log-weight, or None for a hard rule."""

    log: float | None = None

    @classmethod
    def hard(cls) -> "Weight":
        return cls(None)

    @classmethod
    def soft(cls, log: float) -> "Weight":
        if not math.isfinite(log):
            raise ValueError(f"soft log-weight must be finite, got {log!r}")
        return cls(float(log))

    @property
    def is_hard(self) -> bool:
        return self.log is None


HARD = Weight.hard()


@dataclass(frozen=True, order=True)
class UtilityAtom:
    """``utility(reward, *tag)``: a plain atom carrying a reward."""

    reward: float
    tag: tuple = ()

    @property
    def key(self) -> tuple:
        return ("utility", self.reward, self.tag)

    @property
    def value(self) -> str:
        return TRUE

    @property
    def step(self) -> None:
        return None

    def __str__(self) -> str:
        inner = ", ".join([_fmt_reward(self.reward), *map(str, self.tag)])
        return f"utility({inner})"


def _fmt_reward(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


@dataclass(frozen=True)
class WeightedRule:
    weight: Weight
    head: Formula
    body: Formula = TOP
    category: str = ""

    @property
    def is_hard(self) -> bool:
        return self.weight.is_hard


@dataclass(frozen=True)
class SignatureEntry:
    """One variable of the ground signature.

    A multi-valued constant contributes the atoms ``c=v`` for each ``v`` in
    ``domain``.  A *plain* entry is an ordinary propositional atom: it is
    either in the interpretation or not, and has no atom for falsity.
    """

    key: tuple
    domain: tuple[str, ...]
    kind: str
    step: int | None = None
    plain: bool = False
    name: str = ""
    args: tuple[str, ...] = ()

    def atom(self, value: str = TRUE):
        if self.kind == "utility":
            return self.name  # the UtilityAtom itself is stored in ``name``
        return Atom(self.name, self.args, value, self.step)


@dataclass(frozen=True)
class GroundSignature:
    entries: tuple[SignatureEntry, ...]
    utility: tuple[UtilityAtom, ...] = ()

    def index(self) -> dict[tuple, SignatureEntry]:
        return {e.key: e for e in self.entries}

    def contains(self, a) -> bool:
        if isinstance(a, UtilityAtom):
            return a in self.utility
        e = self.index().get(a.key)
        return e is not None and (a.value in e.domain)

    def of_kind(self, kind: str, step: int | None = None) -> tuple[SignatureEntry, ...]:
        return tuple(e for e in self.entries if e.kind == kind and (step is None or e.step == step))


@dataclass(eq=False)
class GroundProgram:
    signature: GroundSignature
    rules: tuple[WeightedRule, ...]
    horizon: int | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, GroundProgram)
            and self.signature == other.signature
            and self.rules == other.rules
            and self.horizon == other.horizon
        )

    __hash__ = object.__hash__


def choice_rule(head: Formula, body: Formula = TOP, category: str = "") -> WeightedRule:
    """``{head}^ch <- body`` encoded as ``head <- body & not not head``."""
    guard = Not(Not(head))
    return WeightedRule(HARD, head, guard if body == TOP else And((body, guard)), category)


def uec_rules(entry: SignatureEntry) -> list[WeightedRule]:
    out = []
    vals = entry.domain
    for v1, v2 in itertools.combinations(vals, 2):
        out.append(WeightedRule(HARD, BOT, And((entry.atom(v1), entry.atom(v2))), "uniqueness"))
    out.append(WeightedRule(HARD, BOT, Not(disj(*(entry.atom(v) for v in vals))), "existence"))
    return out


# ---------------------------------------------------------------------------
# Tr(D, m)
# ---------------------------------------------------------------------------


def _entry(c: Constant, step: int) -> SignatureEntry:
    return SignatureEntry((step, c.name, c.args), c.domain, c.kind, step, False, c.name, c.args)


def _ground(D: ActionDescription) -> ActionDescription:
    return ground_schematics(D) if D.variables else D


def build_signature_entries(D: ActionDescription, m: int, include_init: bool = True) -> list[SignatureEntry]:
    """Timed constants in search-friendly order.

    Within a step: initpf (step 0 only), regular fluents, static fluents,
    then the actions and pf constants that feed the next step.
    """
    regular = D.constants_of(REGULAR)
    static = D.constants_of(STATIC)
    actions = D.constants_of(ACTION)
    pfs = D.constants_of(PF)
    initpfs = D.constants_of(INITPF) if include_init else ()
    entries: list[SignatureEntry] = []
    for i in range(m + 1):
        if i == 0:
            entries += [_entry(c, 0) for c in initpfs]
        entries += [_entry(c, i) for c in regular]
        entries += [_entry(c, i) for c in static]
        if i < m:
            entries += [_entry(c, i) for c in actions]
            entries += [_entry(c, i) for c in pfs]
    return entries


def _head_and_body(head: Formula, body: Formula) -> tuple[Formula, Formula]:
    if isinstance(head, Choice):
        inner = head.arg
        guard = Not(Not(inner))
        return inner, guard if body == TOP else And((body, guard))
    return head, body


def translate(D: ActionDescription, m: int, *, include_init: bool = True) -> GroundProgram:
    """Tr(D, m) = D_init U D_m (or D_m alone when ``include_init`` is False)."""
    if m < 0:
        raise ValueError(f"horizon must be non-negative, got {m}")
    D = _ground(D)
    entries = build_signature_entries(D, m, include_init)
    rules: list[WeightedRule] = []
    laws = D.laws
    statics = [l for l in laws if isinstance(l, StaticLaw)]
    dynamics = [l for l in laws if isinstance(l, FluentDynamicLaw)]
    pf_decls = [l for l in laws if isinstance(l, PfDeclaration)]
    init_decls = [l for l in laws if isinstance(l, InitPfDeclaration)]
    initials = [l for l in laws if isinstance(l, InitialStaticLaw)]
    utilities = [l for l in laws if isinstance(l, UtilityLaw)]

    if include_init:
        for law in init_decls:
            for v, p in law.dist:
                rules.append(
                    WeightedRule(Weight.soft(math.log(p)), Atom(law.name, law.args, v, 0), TOP, "initpf")
                )
        for law in initials:
            body = And((Not(lift(law.head, 0)), lift(law.body, 0)))
            rules.append(WeightedRule(HARD, BOT, body, "initial"))

    for i in range(m + 1):
        for law in statics:
            h, b = _head_and_body(lift(law.head, i), lift(law.body, i))
            rules.append(WeightedRule(HARD, h, b, "static"))
    for i in range(m):
        for law in dynamics:
            body = And((lift(law.body, i + 1), lift(law.after, i)))
            h, b = _head_and_body(lift(law.head, i + 1), body)
            rules.append(WeightedRule(HARD, h, b, "dynamic"))
    for i in range(m):
        for law in pf_decls:
            for v, p in law.dist:
                rules.append(WeightedRule(Weight.soft(math.log(p)), Atom(law.name, law.args, v, i), TOP, "pf"))

    for c in D.constants_of(REGULAR):
        for v in c.domain:
            rules.append(choice_rule(c.atom(v, 0), category="choice_fluent"))
    for i in range(m):
        for c in D.constants_of(ACTION):
            for v in (TRUE, FALSE):
                rules.append(choice_rule(c.atom(v, i), category="choice_action"))

    for e in entries:
        rules.extend(uec_rules(e))

    utility_atoms: list[UtilityAtom] = []
    rid = 0
    for i in range(m):
        for law in utilities:
            u = UtilityAtom(float(law.reward), (i + 1, rid))
            rid += 1
            utility_atoms.append(u)
            body = And((lift(law.head, i + 1), lift(law.after, i)))
            rules.append(WeightedRule(HARD, u, body, "utility"))

    sig = GroundSignature(tuple(entries), tuple(utility_atoms))
    return GroundProgram(sig, tuple(rules), m)


def rule_count(D: ActionDescription, m: int, *, include_init: bool = True) -> dict[str, int]:
    """Closed-form number of rules per category that :func:`translate` emits."""
    if m < 0:
        raise ValueError(f"horizon must be non-negative, got {m}")
    D = _ground(D)
    laws = D.laws

    def count(cls) -> int:
        return sum(1 for l in laws if isinstance(l, cls))

    def entries(cls) -> int:
        return sum(len(l.dist) for l in laws if isinstance(l, cls))

    regular = D.constants_of(REGULAR)
    static = D.constants_of(STATIC)
    actions = D.constants_of(ACTION)
    pfs = D.constants_of(PF)
    initpfs = D.constants_of(INITPF) if include_init else ()

    def pairs(c: Constant) -> int:
        n = len(c.domain)
        return n * (n - 1) // 2

    fluents = list(regular) + list(static)
    timed = (
        [(c, m + 1) for c in fluents]
        + [(c, m) for c in list(actions) + list(pfs)]
        + [(c, 1) for c in initpfs]
    )
    return {
        "static": count(StaticLaw) * (m + 1),
        "dynamic": count(FluentDynamicLaw) * m,
        "pf": entries(PfDeclaration) * m,
        "initpf": entries(InitPfDeclaration) if include_init else 0,
        "initial": count(InitialStaticLaw) if include_init else 0,
        "choice_fluent": sum(len(c.domain) for c in regular),
        "choice_action": 2 * len(actions) * m,
        "uniqueness": sum(pairs(c) * n for c, n in timed),
        "existence": sum(n for _, n in timed),
        "utility": count(UtilityLaw) * m,
    }


# ---------------------------------------------------------------------------
# Hand-built programs (used by the decision-theoretic layer)
# ---------------------------------------------------------------------------


class ProgramBuilder:
    """Assemble a :class:`GroundProgram` rule by rule.

    Multi-valued constants must be declared with :meth:`constant`; every other
    atom that occurs in a rule becomes a plain propositional atom.  Utility
    atoms are collected from rule heads.
    """

    def __init__(self) -> None:
        self._entries: dict[tuple, SignatureEntry] = {}
        self._rules: list[WeightedRule] = []
        self._uec = True

    def constant(self, name: str, domain: Sequence[str], args: Sequence[str] = (), step: int | None = None,
                 kind: str = "constant") -> None:
        key = (step, name, tuple(args))
        self._entries[key] = SignatureEntry(key, tuple(domain), kind, step, False, name, tuple(args))

    def plain(self, name: str, args: Sequence[str] = ()) -> Atom:
        key = (None, name, tuple(args))
        if key not in self._entries:
            self._entries[key] = SignatureEntry(key, (FALSE, TRUE), "plain", None, True, name, tuple(args))
        return Atom(name, tuple(args))

    def hard(self, head: Formula, body: Formula = TOP) -> None:
        self._add(WeightedRule(HARD, head, body, "hard"))

    def soft(self, weight: float, head: Formula, body: Formula = TOP) -> None:
        self._add(WeightedRule(Weight.soft(weight), head, body, "soft"))

    def choice(self, head: Formula, body: Formula = TOP) -> None:
        self._add(choice_rule(head, body, "choice"))

    def _add(self, rule: WeightedRule) -> None:
        for f in (rule.head, rule.body):
            for a in _all_atoms(f):
                if isinstance(a, Atom) and a.key not in self._entries:
                    self.plain(a.name, a.args)
        self._rules.append(rule)

    def build(self) -> GroundProgram:
        entries = tuple(self._entries.values())
        rules = list(self._rules)
        for e in entries:
            if not e.plain:
                rules.extend(uec_rules(e))
        util = sorted(
            {a for r in rules for a in _all_atoms(r.head) if isinstance(a, UtilityAtom)},
            key=lambda u: (u.reward, repr(u.tag)),
        )
        return GroundProgram(GroundSignature(entries, tuple(util)), tuple(rules))


def _all_atoms(f) -> Iterable:
    if isinstance(f, UtilityAtom):
        yield f
        return
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, (Atom, UtilityAtom)):
            yield g
        elif isinstance(g, (Not, Choice)):
            stack.append(g.arg)
        elif isinstance(g, (And, Or)):
            stack.extend(g.args)


def program_atoms(f) -> Iterable:
    """Atoms of a program formula, utility atoms included."""
    return _all_atoms(f)


# ---------------------------------------------------------------------------
# Debug dump
# ---------------------------------------------------------------------------


def render_program_formula(f) -> str:
    if isinstance(f, UtilityAtom):
        return str(f)
    if isinstance(f, (And, Or)):
        sep = " & " if isinstance(f, And) else " | "
        return sep.join(
            f"({render_program_formula(c)})" if isinstance(c, (And, Or)) else render_program_formula(c)
            for c in f.args
        )
    if isinstance(f, Not):
        return f"~({render_program_formula(f.arg)})"
    return render(f)


def dump(program: GroundProgram) -> str:
    """One rule per line: ``hard: H <- B`` or ``soft(w): H <- B``."""
    lines = []
    for r in program.rules:
        prefix = "hard" if r.is_hard else f"soft({r.weight.log!r})"
        line = f"{prefix}: {render_program_formula(r.head)}"
        if r.body != TOP:
            line += f" <- {render_program_formula(r.body)}"
        lines.append(line)
    return "\n".join(lines) + ("\n" if lines else "")
