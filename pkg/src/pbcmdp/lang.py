"""Core domain model for pBC+ action descriptions.

Formulas are immutable trees over multi-valued atoms ``c=v``.  An atom may
carry a time step once it has been lifted into a translated program.  Causal
laws keep optional ``where`` guards so that schematic descriptions can be
grounded over finite sorts before translation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Iterator, Mapping, Sequence, Union

TRUE = "true"
FALSE = "false"
BOOLEAN: tuple[str, ...] = (TRUE, FALSE)
BOOLEAN_SORT = "boolean"

REGULAR = "regular"
STATIC = "static"
ACTION = "action"
PF = "pf"
INITPF = "initpf"
KINDS = (REGULAR, STATIC, ACTION, PF, INITPF)
FLUENT_KINDS = frozenset({REGULAR, STATIC})

PROBABILITY_TOLERANCE = 1e-9


# ---------------------------------------------------------------------------
# Formulas
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Top:
    def __repr__(self) -> str:
        return "Top()"


@dataclass(frozen=True)
class Bot:
    def __repr__(self) -> str:
        return "Bot()"


TOP = Top()
BOT = Bot()


@dataclass(frozen=True, order=True)
class Atom:
    """The atom ``name(args) = value``, optionally prefixed by a time step."""

    name: str
    args: tuple[str, ...] = ()
    value: str = TRUE
    step: int | None = None

    @property
    def constant(self) -> tuple[str, tuple[str, ...]]:
        return (self.name, self.args)

    @property
    def key(self) -> tuple:
        return (self.step, self.name, self.args)

    @property
    def constant_name(self) -> str:
        return constant_label(self.name, self.args)


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    args: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    args: tuple["Formula", ...]


@dataclass(frozen=True)
class Choice:
    """``{F}^ch``; legal only as the whole head of a static or dynamic law."""

    arg: "Formula"


Formula = Union[Top, Bot, Atom, Not, And, Or, Choice]


def constant_label(name: str, args: Sequence[str] = ()) -> str:
    return f"{name}({','.join(args)})" if args else name


def conj(*parts: Formula) -> Formula:
    """Conjunction of ``parts``; collapses the empty and singleton cases."""
    if not parts:
        return TOP
    if len(parts) == 1:
        return parts[0]
    return And(tuple(parts))


def disj(*parts: Formula) -> Formula:
    if not parts:
        return BOT
    if len(parts) == 1:
        return parts[0]
    return Or(tuple(parts))


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, (Not, Choice)):
        return (f.arg,)
    if isinstance(f, (And, Or)):
        return f.args
    return ()


def atoms(f: Formula) -> Iterator[Atom]:
    """Yield every atom occurrence in ``f`` (left to right)."""
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Atom):
            yield g
        else:
            stack.extend(reversed(children(g)))


def size(f: Formula) -> int:
    """Node count of ``f``."""
    return 1 + sum(size(c) for c in children(f))


def map_atoms(f: Formula, fn: Callable[[Atom], Formula]) -> Formula:
    if isinstance(f, Atom):
        return fn(f)
    if isinstance(f, Not):
        return Not(map_atoms(f.arg, fn))
    if isinstance(f, Choice):
        return Choice(map_atoms(f.arg, fn))
    if isinstance(f, And):
        return And(tuple(map_atoms(c, fn) for c in f.args))
    if isinstance(f, Or):
        return Or(tuple(map_atoms(c, fn) for c in f.args))
    return f


def lift(f: Formula, step: int) -> Formula:
    """Insert ``step:`` in front of every atom of ``f``.

    Lifting is a single application: an atom that already carries a step is
    rejected, so ``lift(lift(F, 0), 0)`` raises.
    """
    if step < 0:
        raise ValueError(f"step must be non-negative, got {step}")

    def stamp(a: Atom) -> Atom:
        if a.step is not None:
            raise ValueError(f"atom {render(a)} is already timed")
        return replace(a, step=step)

    return map_atoms(f, stamp)


def evaluate(f: Formula, holds: Callable[[Atom], bool]) -> bool:
    """Classical truth value of ``f`` given an atom oracle."""
    if isinstance(f, Atom):
        return holds(f)
    if isinstance(f, Top):
        return True
    if isinstance(f, Bot):
        return False
    if isinstance(f, Not):
        return not evaluate(f.arg, holds)
    if isinstance(f, And):
        return all(evaluate(c, holds) for c in f.args)
    if isinstance(f, Or):
        return any(evaluate(c, holds) for c in f.args)
    if isinstance(f, Choice):
        return True  # F or not F
    raise TypeError(f"not a formula: {f!r}")


def render(f: Formula) -> str:
    """Surface syntax for ``f``; the parser reads this back to an equal tree."""
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Bot):
        return "false"
    if isinstance(f, Atom):
        prefix = "" if f.step is None else f"{f.step}:"
        label = constant_label(f.name, f.args)
        if f.value == TRUE:
            return prefix + label
        if f.value == FALSE:
            return prefix + "~" + label
        return f"{prefix}{label} = {f.value}"
    if isinstance(f, Not):
        return f"~({render(f.arg)})"
    if isinstance(f, Choice):
        return "{" + render(f.arg) + "}"
    if isinstance(f, (And, Or)):
        sep = " & " if isinstance(f, And) else " | "
        return sep.join(_wrap(c) for c in f.args)
    raise TypeError(f"not a formula: {f!r}")


def _wrap(f: Formula) -> str:
    text = render(f)
    return f"({text})" if isinstance(f, (And, Or)) else text


# ---------------------------------------------------------------------------
# Signature
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Sort:
    name: str
    objects: tuple[str, ...]


@dataclass(frozen=True)
class Variable:
    name: str
    sort: str


@dataclass(frozen=True)
class ConstantDecl:
    """Declaration of a (possibly parameterised) constant.

    ``params`` lists argument sorts; ``range_sort`` remembers whether the
    domain was written as a sort name so that formatting is faithful.
    """

    name: str
    kind: str
    domain: tuple[str, ...] = BOOLEAN
    params: tuple[str, ...] = ()
    range_sort: str | None = None


@dataclass(frozen=True, order=True)
class Constant:
    """A ground constant such as ``In(B1)`` with its kind and domain."""

    name: str
    args: tuple[str, ...]
    kind: str
    domain: tuple[str, ...]

    @property
    def label(self) -> str:
        return constant_label(self.name, self.args)

    @property
    def is_boolean(self) -> bool:
        return set(self.domain) == set(BOOLEAN)

    def atom(self, value: str, step: int | None = None) -> Atom:
        return Atom(self.name, self.args, value, step)


# ---------------------------------------------------------------------------
# Causal laws
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Guard:
    """Side condition ``left != right`` (or ``=``) resolved at grounding."""

    left: str
    op: str
    right: str


@dataclass(frozen=True)
class StaticLaw:
    head: Formula
    body: Formula = TOP
    where: tuple[Guard, ...] = ()


@dataclass(frozen=True)
class FluentDynamicLaw:
    head: Formula
    body: Formula = TOP
    after: Formula = TOP
    where: tuple[Guard, ...] = ()


@dataclass(frozen=True)
class PfDeclaration:
    name: str
    args: tuple[str, ...]
    dist: tuple[tuple[str, float], ...]
    where: tuple[Guard, ...] = ()


@dataclass(frozen=True)
class InitPfDeclaration:
    name: str
    args: tuple[str, ...]
    dist: tuple[tuple[str, float], ...]
    where: tuple[Guard, ...] = ()


@dataclass(frozen=True)
class InitialStaticLaw:
    head: Formula
    body: Formula = TOP
    where: tuple[Guard, ...] = ()


@dataclass(frozen=True)
class UtilityLaw:
    reward: float
    head: Formula = TOP
    after: Formula = TOP
    where: tuple[Guard, ...] = ()


CausalLaw = Union[
    StaticLaw, FluentDynamicLaw, PfDeclaration, InitPfDeclaration, InitialStaticLaw, UtilityLaw
]


def law_formulas(law: CausalLaw) -> tuple[Formula, ...]:
    if isinstance(law, StaticLaw) or isinstance(law, InitialStaticLaw):
        return (law.head, law.body)
    if isinstance(law, FluentDynamicLaw):
        return (law.head, law.body, law.after)
    if isinstance(law, UtilityLaw):
        return (law.head, law.after)
    return ()


# ---------------------------------------------------------------------------
# Action descriptions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ActionDescription:
    sorts: tuple[Sort, ...] = ()
    variables: tuple[Variable, ...] = ()
    constants: tuple[ConstantDecl, ...] = ()
    laws: tuple[CausalLaw, ...] = ()

    def sort_objects(self, sort: str) -> tuple[str, ...]:
        if sort == BOOLEAN_SORT:
            return BOOLEAN
        for s in self.sorts:
            if s.name == sort:
                return s.objects
        raise KeyError(sort)

    def variable_sorts(self) -> dict[str, str]:
        return {v.name: v.sort for v in self.variables}

    def ground_constants(self) -> tuple[Constant, ...]:
        """Every ground constant, in declaration order then argument order."""
        out = []
        for decl in self.constants:
            pools = [self.sort_objects(p) for p in decl.params]
            for args in itertools.product(*pools):
                out.append(Constant(decl.name, tuple(args), decl.kind, decl.domain))
        return tuple(out)

    def constants_of(self, *kinds: str) -> tuple[Constant, ...]:
        return tuple(c for c in self.ground_constants() if c.kind in kinds)

    def constant_table(self) -> dict[tuple[str, tuple[str, ...]], Constant]:
        return {(c.name, c.args): c for c in self.ground_constants()}

    def decl(self, name: str) -> ConstantDecl | None:
        for d in self.constants:
            if d.name == name:
                return d
        return None


# ---------------------------------------------------------------------------
# Grounding
# ---------------------------------------------------------------------------


class GroundingError(ValueError):
    pass


def _law_terms(law: CausalLaw) -> list[str]:
    terms: list[str] = []
    for f in law_formulas(law):
        for a in atoms(f):
            terms.extend(a.args)
            terms.append(a.value)
    if isinstance(law, (PfDeclaration, InitPfDeclaration)):
        terms.extend(law.args)
    for g in law.where:
        terms.extend((g.left, g.right))
    return terms


def law_variables(law: CausalLaw, variables: Mapping[str, str]) -> list[str]:
    """Variables of ``law`` in order of first occurrence."""
    seen: dict[str, None] = {}
    for t in _law_terms(law):
        if t in variables:
            seen.setdefault(t, None)
    return list(seen)


def _substitute_law(law: CausalLaw, sub: Mapping[str, str]) -> CausalLaw:
    def term(t: str) -> str:
        return sub.get(t, t)

    def atom(a: Atom) -> Atom:
        return Atom(a.name, tuple(term(x) for x in a.args), term(a.value), a.step)

    if isinstance(law, (PfDeclaration, InitPfDeclaration)):
        return replace(law, args=tuple(term(x) for x in law.args), where=())
    updates = {}
    for fname in ("head", "body", "after"):
        if hasattr(law, fname):
            updates[fname] = map_atoms(getattr(law, fname), atom)
    return replace(law, where=(), **updates)


def _guard_holds(g: Guard, sub: Mapping[str, str]) -> bool:
    left, right = sub.get(g.left, g.left), sub.get(g.right, g.right)
    return (left != right) if g.op == "!=" else (left == right)


def ground_law(law: CausalLaw, D: ActionDescription) -> list[CausalLaw]:
    variables = D.variable_sorts()
    names = law_variables(law, variables)
    for g in law.where:
        for t in (g.left, g.right):
            if t not in variables and not _is_object(D, t):
                raise GroundingError(f"unbound term {t!r} in guard")
    if not names and not law.where:
        return [law]
    pools = []
    for n in names:
        try:
            pools.append(D.sort_objects(variables[n]))
        except KeyError:
            raise GroundingError(f"variable {n!r} has unknown sort {variables[n]!r}") from None
    out = []
    for combo in itertools.product(*pools):
        sub = dict(zip(names, combo))
        if all(_guard_holds(g, sub) for g in law.where):
            out.append(_substitute_law(law, sub))
    return out


def _is_object(D: ActionDescription, t: str) -> bool:
    return t in BOOLEAN or any(t in s.objects for s in D.sorts)


def ground_schematics(D: ActionDescription) -> ActionDescription:
    """Replace every schematic law by all of its guarded ground instances."""
    laws: list[CausalLaw] = []
    for law in D.laws:
        laws.extend(ground_law(law, D))
    return ActionDescription(D.sorts, (), D.constants, tuple(laws))


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    where: str
    message: str

    def __str__(self) -> str:
        return f"{self.where}: {self.message}"


def describe_law(law: CausalLaw) -> str:
    # imported lazily: the parser module depends on this one
    from .parser import format_law

    return format_law(law)


def _check_distribution(dist, domain, label) -> list[str]:
    problems = []
    values = [v for v, _ in dist]
    if len(set(values)) != len(values):
        problems.append(f"duplicate value in distribution of {label}")
    if set(values) != set(domain):
        problems.append(f"distribution of {label} must cover exactly its domain {list(domain)}")
    for v, p in dist:
        if not (0.0 < p < 1.0) or not math.isfinite(p):
            problems.append(f"probability not in (0,1): {label}={v} has {p!r}")
    total = math.fsum(p for _, p in dist)
    if abs(total - 1.0) > PROBABILITY_TOLERANCE:
        problems.append(f"probabilities of {label} sum to {total!r}, not 1")
    return problems


class _Checker:
    def __init__(self, D: ActionDescription):
        self.D = D
        self.variables = D.variable_sorts()
        self.decls = {d.name: d for d in D.constants}
        self.objects = {o for s in D.sorts for o in s.objects} | set(BOOLEAN)

    def term_sort_ok(self, term: str, sort: str) -> bool:
        if term in self.variables:
            return self.variables[term] == sort or set(self.D.sort_objects(self.variables[term])) <= set(
                self.D.sort_objects(sort)
            )
        return term in self.D.sort_objects(sort)

    def atom_problems(self, a: Atom) -> tuple[list[str], str | None]:
        decl = self.decls.get(a.name)
        if decl is None:
            return [f"undeclared constant {a.name!r}"], None
        out = []
        if a.step is not None:
            out.append(f"timed atom {render(a)} not allowed in a causal law")
        if len(a.args) != len(decl.params):
            out.append(f"{a.name} expects {len(decl.params)} argument(s), got {len(a.args)}")
        else:
            for t, s in zip(a.args, decl.params):
                if not self.term_sort_ok(t, s):
                    out.append(f"argument {t!r} of {a.name} is not of sort {s}")
        if a.value in self.variables:
            vals = self.D.sort_objects(self.variables[a.value])
            if not set(vals) <= set(decl.domain):
                out.append(f"variable {a.value!r} ranges outside the domain of {a.name}")
        elif a.value not in decl.domain:
            out.append(f"value {a.value!r} not in domain of {a.name}")
        return out, decl.kind

    def formula_problems(self, f: Formula, allowed: Iterable[str], role: str, choice_ok=False) -> list[str]:
        allowed = set(allowed)
        out = []
        if isinstance(f, Choice):
            if not choice_ok:
                out.append(f"choice formula only allowed as a law head ({role})")
            f = f.arg
        for sub in _subformulas(f):
            if isinstance(sub, Choice):
                out.append(f"nested choice formula in {role}")
        for a in atoms(f):
            probs, kind = self.atom_problems(a)
            out.extend(probs)
            if kind is not None and kind not in allowed:
                out.append(f"{role} may not mention {kind} constant {a.name}")
        return out


def _subformulas(f: Formula) -> Iterator[Formula]:
    yield f
    for c in children(f):
        yield from _subformulas(c)


def validate(D: ActionDescription) -> list[Violation]:
    """Return every syntactic-restriction violation of ``D`` (empty if valid)."""
    out: list[Violation] = []
    sort_names = set()
    for s in D.sorts:
        if s.name in sort_names or s.name == BOOLEAN_SORT:
            out.append(Violation(f"sort {s.name}", "sort declared twice"))
        sort_names.add(s.name)
        if not s.objects:
            out.append(Violation(f"sort {s.name}", "sort has no objects"))
        if len(set(s.objects)) != len(s.objects):
            out.append(Violation(f"sort {s.name}", "object names not unique"))
    objects = {o for s in D.sorts for o in s.objects}
    known_sorts = sort_names | {BOOLEAN_SORT}
    for v in D.variables:
        if v.sort not in known_sorts:
            out.append(Violation(f"var {v.name}", f"unknown sort {v.sort!r}"))
        if v.name in objects or v.name in BOOLEAN:
            out.append(Violation(f"var {v.name}", "variable name clashes with an object name"))
    names = set()
    for d in D.constants:
        where = f"constant {d.name}"
        if d.name in names:
            out.append(Violation(where, "constant declared twice"))
        names.add(d.name)
        if d.kind not in KINDS:
            out.append(Violation(where, f"unknown kind {d.kind!r}"))
        if not d.domain:
            out.append(Violation(where, "empty domain"))
        if len(set(d.domain)) != len(d.domain):
            out.append(Violation(where, "domain values not unique"))
        if d.kind == ACTION and set(d.domain) != set(BOOLEAN):
            out.append(Violation(where, "action constants must be Boolean"))
        for p in d.params:
            if p not in known_sorts:
                out.append(Violation(where, f"unknown argument sort {p!r}"))
    if out:
        return out  # later checks assume a sane signature

    chk = _Checker(D)
    fl = FLUENT_KINDS
    for law in D.laws:
        where = describe_law(law)
        probs: list[str] = []
        if isinstance(law, StaticLaw):
            probs += chk.formula_problems(law.head, fl, "static law head", choice_ok=True)
            probs += chk.formula_problems(law.body, fl, "static law body")
        elif isinstance(law, FluentDynamicLaw):
            probs += chk.formula_problems(law.head, {REGULAR}, "dynamic law head", choice_ok=True)
            probs += chk.formula_problems(law.body, fl, "dynamic law if-part")
            probs += chk.formula_problems(law.after, fl | {ACTION, PF}, "dynamic law after-part")
        elif isinstance(law, InitialStaticLaw):
            probs += chk.formula_problems(law.head, fl, "initial law head")
            probs += chk.formula_problems(law.body, fl | {INITPF}, "initial law body")
        elif isinstance(law, UtilityLaw):
            if not math.isfinite(law.reward):
                probs.append("reward must be finite")
            probs += chk.formula_problems(law.head, fl, "utility law if-part")
            probs += chk.formula_problems(law.after, fl | {ACTION}, "utility law after-part")
        else:
            want = PF if isinstance(law, PfDeclaration) else INITPF
            decl = chk.decls.get(law.name)
            if decl is None:
                probs.append(f"undeclared constant {law.name!r}")
            else:
                if decl.kind != want:
                    probs.append(f"{law.name} is a {decl.kind} constant, not {want}")
                if len(law.args) != len(decl.params):
                    probs.append(f"{law.name} expects {len(decl.params)} argument(s)")
                probs += _check_distribution(law.dist, decl.domain, law.name)
        for g in law.where:
            for t in (g.left, g.right):
                if t not in chk.variables and t not in chk.objects:
                    probs.append(f"guard mentions unknown term {t!r}")
            if g.op not in ("!=", "="):
                probs.append(f"unknown guard operator {g.op!r}")
        out.extend(Violation(where, p) for p in probs)

    if out:
        return out
    try:
        ground = ground_schematics(D)
    except GroundingError as exc:
        return [Violation("grounding", str(exc))]
    declared: dict[tuple, int] = {}
    for law in ground.laws:
        if isinstance(law, (PfDeclaration, InitPfDeclaration)):
            k = (law.name, law.args)
            declared[k] = declared.get(k, 0) + 1
    for c in D.constants_of(PF, INITPF):
        n = declared.get((c.name, c.args), 0)
        if n != 1:
            out.append(
                Violation(f"constant {c.label}", f"{c.kind} constant needs exactly one declaration, found {n}")
            )
    return out
