"""Concrete surface syntax for pBC+ descriptions (``.pbcp`` files).

The grammar is published in ``docs/grammar.md``.  Statements end with a
period; ``%`` starts a comment.  Sugar (``default``, ``inertial``,
``constraint``, ``causes``) is expanded while parsing, so a parsed
description only ever contains the six core law kinds.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .lang import (
    BOOLEAN,
    BOOLEAN_SORT,
    BOT,
    FALSE,
    INITPF,
    TOP,
    TRUE,
    ActionDescription,
    And,
    Atom,
    CausalLaw,
    Choice,
    ConstantDecl,
    FluentDynamicLaw,
    Formula,
    Guard,
    InitialStaticLaw,
    InitPfDeclaration,
    Not,
    Or,
    PfDeclaration,
    Sort,
    StaticLaw,
    UtilityLaw,
    Variable,
    conj,
    constant_label,
    lift,
    render,
)

KEYWORDS = frozenset(
    {
        "sort", "var", "fluent", "static", "action", "pf", "initpf", "caused", "if", "after",
        "initially", "reward", "default", "inertial", "constraint", "causes", "where", "true", "false",
    }
)

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|%[^\n]*)
  | (?P<num>\d+(?:\.\d+)?(?:[eE][-+]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>!=|[=&|~(){},:.\-])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int
    start: int
    end: int


class ParseError(Exception):
    def __init__(self, span: SourceSpan, message: str, expected: frozenset[str] = frozenset()):
        self.span = span
        self.message = message or "syntax error"
        self.expected = frozenset(expected)
        super().__init__(str(self))

    def __str__(self) -> str:
        text = f"line {self.span.line}, column {self.span.column}: {self.message}"
        if self.expected:
            text += " (expected " + ", ".join(sorted(self.expected)) + ")"
        return text


@dataclass(frozen=True)
class Token:
    kind: str  # 'num', 'ident', 'kw', 'sym', 'eof'
    text: str
    start: int
    end: int


def _tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(_span(text, pos, pos + 1), f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        if kind != "ws":
            lexeme = m.group()
            if kind == "ident" and lexeme in KEYWORDS:
                kind = "kw"
            tokens.append(Token(kind, lexeme, m.start(), m.end()))
        pos = m.end()
    tokens.append(Token("eof", "", len(text), len(text)))
    return tokens


def _span(text: str, start: int, end: int) -> SourceSpan:
    if text:
        start = min(start, len(text) - 1)
        end = max(start + 1, min(end, len(text)))
    else:
        start = end = 0
    line = text.count("\n", 0, start) + 1
    column = start - (text.rfind("\n", 0, start) + 1) + 1
    return SourceSpan(line, column, start, end)


class _Parser:
    def __init__(self, text: str, *, timed: bool = False):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.timed = timed
        self.sorts: list[Sort] = []
        self.variables: list[Variable] = []
        self.constants: list[ConstantDecl] = []
        self.laws: list[CausalLaw] = []

    # -- token helpers -----------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("kw", "sym") and t.text == text

    def error(self, message: str, expected=(), tok: Token | None = None) -> ParseError:
        t = tok or self.tok
        if t.kind == "eof":
            message = message or "unexpected end of input"
        return ParseError(_span(self.text, t.start, t.end), message, frozenset(expected))

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"unexpected {found!r}", {repr(text)})
        t = self.tok
        self.i += 1
        return t

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def ident(self, what: str = "identifier") -> str:
        t = self.tok
        if t.kind != "ident":
            raise self.error(f"unexpected {t.text or 'end of input'!r}", {what})
        self.i += 1
        return t.text

    def term(self) -> str:
        t = self.tok
        if t.kind == "ident" or (t.kind == "kw" and t.text in BOOLEAN):
            self.i += 1
            return t.text
        raise self.error(f"unexpected {t.text or 'end of input'!r}", {"term"})

    def number(self) -> float:
        neg = self.accept("-")
        t = self.tok
        if t.kind != "num":
            raise self.error(f"unexpected {t.text or 'end of input'!r}", {"number"})
        self.i += 1
        value = float(t.text)
        return -value if neg else value

    # -- formulas ------------------------------------------------------------
    def formula(self) -> Formula:
        parts = [self.conjunction()]
        while self.accept("|"):
            parts.append(self.conjunction())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def conjunction(self) -> Formula:
        parts = [self.unary()]
        while self.accept("&"):
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def unary(self) -> Formula:
        t = self.tok
        if t.kind == "num" and self.peek().text == ":" and "." not in t.text:
            if not self.timed:
                raise self.error("step prefixes are only allowed in queries")
            self.i += 2
            inner = self.unary()
            try:
                return lift(inner, int(t.text))
            except ValueError as exc:
                raise self.error(str(exc), tok=t) from None
        if self.accept("~"):
            if self.tok.kind == "ident":
                a = self.atom_ref()
                if a is not None:
                    return Not(a)  # ~ c = v is the negation of an explicit atom
                name, args = self._last_ref
                return Atom(name, args, FALSE)
            return Not(self.unary())
        return self.primary()

    def primary(self) -> Formula:
        if self.accept("true"):
            return TOP
        if self.accept("false"):
            return BOT
        if self.accept("("):
            f = self.formula()
            self.expect(")")
            return f
        if self.tok.kind == "ident":
            a = self.atom_ref()
            if a is not None:
                return a
            name, args = self._last_ref
            return Atom(name, args, TRUE)
        found = self.tok.text or "end of input"
        raise self.error(f"unexpected {found!r}", {"formula"})

    def constant_ref(self) -> tuple[str, tuple[str, ...]]:
        name = self.ident("constant")
        args: list[str] = []
        if self.accept("("):
            args.append(self.term())
            while self.accept(","):
                args.append(self.term())
            self.expect(")")
        return name, tuple(args)

    def atom_ref(self) -> Atom | None:
        """Parse ``c(args) [= v]``; returns None when no value was written."""
        name, args = self.constant_ref()
        if self.at("=") and self.peek().text != "{":
            self.i += 1
            return Atom(name, args, self.term())
        self._last_ref = (name, args)
        return None

    def guards(self) -> tuple[Guard, ...]:
        if not self.accept("where"):
            return ()
        out = [self.guard()]
        while self.accept(","):
            out.append(self.guard())
        return tuple(out)

    def guard(self) -> Guard:
        left = self.term()
        if self.accept("!="):
            op = "!="
        elif self.accept("="):
            op = "="
        else:
            raise self.error(f"unexpected {self.tok.text or 'end of input'!r}", {"'!='", "'='"})
        return Guard(left, op, self.term())

    # -- statements ----------------------------------------------------------
    def description(self) -> ActionDescription:
        while self.tok.kind != "eof":
            self.statement()
            self.expect(".")
        return ActionDescription(
            tuple(self.sorts), tuple(self.variables), tuple(self.constants), tuple(self.laws)
        )

    def statement(self) -> None:
        t = self.tok
        kw = t.text if t.kind == "kw" else None
        if kw == "sort":
            self.i += 1
            name = self.ident("sort name")
            self.expect("=")
            self.expect("{")
            objs = [self.ident("object")]
            while self.accept(","):
                objs.append(self.ident("object"))
            self.expect("}")
            self.sorts.append(Sort(name, tuple(objs)))
        elif kw == "var":
            self.i += 1
            names = [self.ident("variable")]
            while self.accept(","):
                names.append(self.ident("variable"))
            self.expect(":")
            sort = self.sort_name()
            self.variables.extend(Variable(n, sort) for n in names)
        elif kw in ("fluent", "action", "pf", "initpf"):
            self.i += 1
            kind = {"fluent": "regular", "action": "action", "pf": "pf", "initpf": "initpf"}[kw]
            if kw == "fluent" and self.accept("static"):
                kind = "static"
            self.constants.append(self.constant_decl(kind))
            while self.accept(","):
                self.constants.append(self.constant_decl(kind))
        elif kw == "caused":
            self.i += 1
            self.caused()
        elif kw == "initially":
            self.i += 1
            head = self.formula()
            body = self.formula() if self.accept("if") else TOP
            self.laws.append(InitialStaticLaw(head, body, self.guards()))
        elif kw == "reward":
            self.i += 1
            value = self.number()
            head = self.formula() if self.accept("if") else TOP
            after = self.formula() if self.accept("after") else TOP
            self.laws.append(UtilityLaw(value, head, after, self.guards()))
        elif kw == "default":
            self.i += 1
            head = Choice(self.formula())
            self.laws.append(self.law_tail(head))
        elif kw == "inertial":
            self.i += 1
            refs = [self.constant_ref_tok()]
            while self.accept(","):
                refs.append(self.constant_ref_tok())
            where = self.guards()
            for (name, args), tok in refs:
                decl = self.find_decl(name, tok)
                for v in decl.domain:
                    a = Atom(name, args, v)
                    self.laws.append(FluentDynamicLaw(Choice(a), TOP, a, where))
        elif kw == "constraint":
            self.i += 1
            f = self.formula()
            after = self.formula() if self.accept("after") else None
            where = self.guards()
            if after is None:
                self.laws.append(StaticLaw(BOT, Not(f), where))
            else:
                self.laws.append(FluentDynamicLaw(BOT, Not(f), after, where))
        elif kw in ("true", "false") or t.kind in ("ident", "sym", "num"):
            action = self.formula()
            self.expect("causes")
            head = self.formula()
            cond = self.formula() if self.accept("if") else None
            after = action if cond is None else conj(action, cond)
            self.laws.append(FluentDynamicLaw(head, TOP, after, self.guards()))
        else:
            raise self.error(
                f"unexpected {t.text or 'end of input'!r}",
                {"statement"},
            )

    def sort_name(self) -> str:
        t = self.tok
        if t.kind == "ident":
            self.i += 1
            return t.text
        raise self.error(f"unexpected {t.text or 'end of input'!r}", {"sort name"})

    def constant_ref_tok(self):
        tok = self.tok
        return self.constant_ref(), tok

    def find_decl(self, name: str, tok: Token) -> ConstantDecl:
        for d in self.constants:
            if d.name == name:
                return d
        raise self.error(f"undeclared constant {name!r}", tok=tok)

    def constant_decl(self, kind: str) -> ConstantDecl:
        name = self.ident("constant name")
        params: list[str] = []
        if self.accept("("):
            params.append(self.sort_name())
            while self.accept(","):
                params.append(self.sort_name())
            self.expect(")")
        domain, range_sort = BOOLEAN, None
        if self.accept(":"):
            if self.accept("{"):
                vals = [self.term()]
                while self.accept(","):
                    vals.append(self.term())
                self.expect("}")
                domain = tuple(vals)
            else:
                tok = self.tok
                range_sort = self.sort_name()
                if range_sort == BOOLEAN_SORT:
                    range_sort = None
                else:
                    for s in self.sorts:
                        if s.name == range_sort:
                            domain = s.objects
                            break
                    else:
                        raise self.error(f"unknown sort {range_sort!r}", tok=tok)
        return ConstantDecl(name, kind, tuple(domain), tuple(params), range_sort)

    def caused(self) -> None:
        # distribution declaration: caused c(args) = { v: p, ... }
        save = self.i
        if self.tok.kind == "ident":
            tok = self.tok
            name, args = self.constant_ref()
            if self.at("=") and self.peek().text == "{":
                self.i += 2
                dist = [self.dist_entry()]
                while self.accept(","):
                    dist.append(self.dist_entry())
                self.expect("}")
                decl = self.find_decl(name, tok)
                cls = InitPfDeclaration if decl.kind == INITPF else PfDeclaration
                self.laws.append(cls(name, args, tuple(dist), self.guards()))
                return
        self.i = save
        if self.accept("{"):
            head: Formula = Choice(self.formula())
            self.expect("}")
        else:
            head = self.formula()
        self.laws.append(self.law_tail(head))

    def dist_entry(self) -> tuple[str, float]:
        v = self.term()
        self.expect(":")
        return v, self.number()

    def law_tail(self, head: Formula) -> CausalLaw:
        body = self.formula() if self.accept("if") else TOP
        if self.accept("after"):
            after = self.formula()
            return FluentDynamicLaw(head, body, after, self.guards())
        return StaticLaw(head, body, self.guards())


def parse_description(text: str) -> ActionDescription:
    """Parse a ``.pbcp`` description; raises :class:`ParseError`."""
    return _Parser(text).description()


def parse_formula(text: str, *, timed: bool = True) -> Formula:
    """Parse a standalone formula; ``i:`` step prefixes allowed when timed."""
    p = _Parser(text, timed=timed)
    if p.tok.kind == "eof":
        raise p.error("empty formula", {"formula"})
    f = p.formula()
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.tok.text!r}", {"end of input"})
    return f


# ---------------------------------------------------------------------------
# Formatting
# ---------------------------------------------------------------------------


def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() and abs(x) < 1e15 else repr(float(x))


def _head(f: Formula) -> str:
    return render(f)


def _guards(where) -> str:
    if not where:
        return ""
    return " where " + ", ".join(f"{g.left} {g.op} {g.right}" for g in where)


def format_law(law: CausalLaw) -> str:
    if isinstance(law, StaticLaw):
        text = f"caused {_head(law.head)}"
        if law.body != TOP:
            text += f" if {render(law.body)}"
    elif isinstance(law, FluentDynamicLaw):
        text = f"caused {_head(law.head)}"
        if law.body != TOP:
            text += f" if {render(law.body)}"
        text += f" after {render(law.after)}"
    elif isinstance(law, (PfDeclaration, InitPfDeclaration)):
        entries = ", ".join(f"{v}: {_num(p)}" for v, p in law.dist)
        text = f"caused {constant_label(law.name, law.args)} = {{{entries}}}"
    elif isinstance(law, InitialStaticLaw):
        text = f"initially {render(law.head)}"
        if law.body != TOP:
            text += f" if {render(law.body)}"
    elif isinstance(law, UtilityLaw):
        text = f"reward {_num(law.reward)} if {render(law.head)} after {render(law.after)}"
    else:
        raise TypeError(f"not a causal law: {law!r}")
    return text + _guards(law.where)


def _format_decl(d: ConstantDecl) -> str:
    kw = {"regular": "fluent", "static": "fluent static", "action": "action", "pf": "pf", "initpf": "initpf"}[
        d.kind
    ]
    text = f"{kw} {d.name}"
    if d.params:
        text += "(" + ", ".join(d.params) + ")"
    if d.range_sort is not None:
        text += f" : {d.range_sort}"
    elif tuple(d.domain) != BOOLEAN:
        text += " : {" + ", ".join(d.domain) + "}"
    return text


def format_description(D: ActionDescription) -> str:
    """Render ``D`` so that ``parse_description`` returns an equal value."""
    lines = []
    for s in D.sorts:
        lines.append(f"sort {s.name} = {{{', '.join(s.objects)}}}.")
    # keep declaration order: one var statement per maximal run of equal sort
    run: list[Variable] = []
    for v in D.variables:
        if run and run[-1].sort != v.sort:
            lines.append(f"var {', '.join(x.name for x in run)} : {run[0].sort}.")
            run = []
        run.append(v)
    if run:
        lines.append(f"var {', '.join(x.name for x in run)} : {run[0].sort}.")
    for d in D.constants:
        lines.append(_format_decl(d) + ".")
    for law in D.laws:
        lines.append(format_law(law) + ".")
    return "\n".join(lines) + ("\n" if lines else "")
