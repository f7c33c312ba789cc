"""Surface syntax: definition-clause programs, goal formulas, level checks.

The concrete syntax is line-oriented ASCII.  A program is a sequence of
clauses ``head := body.`` with ``%`` line comments; ``%level name 0|1``
pins the level of one predicate.  Goals use ``true``, ``false``,
``nat(t)``, ``&``, ``=>``, ``exists X. ...`` and ``forall X. ...``, with
quantifier bodies extending as far right as possible.

Two formula classes exist.  Conjunctive goals (the only shape allowed to
the left of ``=>`` and as an induction target) contain no universal and no
implication; full goals add those two connectives plus the distinguished
``nat(X) => G`` form, which gets its own node since the interpreter treats
it by induction rather than by assumption.

Surface variables are upper-case.  Binder names are canonicalised to fresh
lower-case names at parse time so the search never deals with shadowing;
the original spelling is kept for prompts.  Occurrences written in lower
case resolve against canonical names, which makes the pretty printer's
output re-parseable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union

from pind.terms import (
    Add,
    Compound,
    Const,
    Mul,
    Nat,
    Run,
    Succ,
    Term,
    Var,
    apply,
    render_term,
)

KEYWORDS = {"true", "false", "nat", "exists", "forall"}


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int, expected: tuple[str, ...] = ()):
        self.line = line
        self.col = col
        self.expected = expected
        detail = f" (expected {', '.join(expected)})" if expected else ""
        super().__init__(f"{line}:{col}: {message}{detail}")


class GrammarViolation(ParseError):
    """Structurally valid input using a connective where it is not allowed."""


class LevelError(Exception):
    pass


# ---------------------------------------------------------------------------
# formulas


@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Bot:
    pass


@dataclass(frozen=True)
class NatAtom:
    arg: Term


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple[Term, ...]

    def as_term(self) -> Compound:
        return Compound(self.pred, self.args)


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Exists:
    var: Var
    body: "Formula"
    surface: str = field(compare=False, default="")
    # slot annotations are attached during induction set-up; displays ignore them
    wslot: Optional[int] = field(compare=False, default=None)
    locpath: Optional[tuple[int, ...]] = field(compare=False, default=None)


@dataclass(frozen=True)
class Forall:
    var: Var
    body: "Formula"
    surface: str = field(compare=False, default="")


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class NatImplies:
    arg: Term
    body: "Formula"


Formula = Union[Top, Bot, NatAtom, Atom, And, Exists, Forall, Implies, NatImplies]


@dataclass(frozen=True)
class DefinitionClause:
    head: Atom
    body: Formula


@dataclass(frozen=True)
class Program:
    clauses: tuple[DefinitionClause, ...] = ()
    pins: tuple[tuple[str, int], ...] = ()

    def pinned(self) -> dict[str, int]:
        return dict(self.pins)


def surface_name(f: Union[Exists, Forall]) -> str:
    return f.surface or f.var.name


def contains_d(f: Formula) -> bool:
    """True when the formula uses a connective beyond the conjunctive goal set."""
    if isinstance(f, (Forall, Implies, NatImplies)):
        return True
    if isinstance(f, And):
        return contains_d(f.left) or contains_d(f.right)
    if isinstance(f, Exists):
        return contains_d(f.body)
    return False


def atoms_of(f: Formula):
    if isinstance(f, Atom):
        yield f
    elif isinstance(f, And):
        yield from atoms_of(f.left)
        yield from atoms_of(f.right)
    elif isinstance(f, (Exists, Forall)):
        yield from atoms_of(f.body)
    elif isinstance(f, Implies):
        yield from atoms_of(f.left)
        yield from atoms_of(f.right)
    elif isinstance(f, NatImplies):
        yield from atoms_of(f.body)


def _drop_keys(run: Run, var: Var) -> Run:
    if var not in run:
        return run
    return Run(tuple(p for p in run.pairs if p[0] != var))


def apply_formula(run: Run, f: Formula) -> Formula:
    """Substitute through every term position; binders mask their own key."""
    if isinstance(f, (Top, Bot)):
        return f
    if isinstance(f, NatAtom):
        return NatAtom(apply(run, f.arg))
    if isinstance(f, Atom):
        return Atom(f.pred, tuple(apply(run, a) for a in f.args))
    if isinstance(f, And):
        return And(apply_formula(run, f.left), apply_formula(run, f.right))
    if isinstance(f, Exists):
        inner = _drop_keys(run, f.var)
        return Exists(f.var, apply_formula(inner, f.body), f.surface, f.wslot, f.locpath)
    if isinstance(f, Forall):
        inner = _drop_keys(run, f.var)
        return Forall(f.var, apply_formula(inner, f.body), f.surface)
    if isinstance(f, Implies):
        return Implies(apply_formula(run, f.left), apply_formula(run, f.right))
    if isinstance(f, NatImplies):
        return NatImplies(apply(run, f.arg), apply_formula(run, f.body))
    raise TypeError(f"not a formula: {f!r}")


def subst_var(f: Formula, var: Var, value: Term) -> Formula:
    return apply_formula(Run(((var, value),)), f)


# ---------------------------------------------------------------------------
# lexer

_TOKEN = re.compile(
    r"""(?P<ws>[ \t\r]+)
      | (?P<nl>\n)
      | (?P<comment>%[^\n]*)
      | (?P<ident>[A-Za-z][A-Za-z0-9_]*)
      | (?P<num>\d+)
      | (?P<coloneq>:=)
      | (?P<arrow>=>)
      | (?P<punct>[().,&*+])
    """,
    re.VERBOSE,
)

_LEVEL_DIRECTIVE = re.compile(r"\s*%level\s+([a-z][A-Za-z0-9_]*)\s+([01])\s*$")


@dataclass(frozen=True)
class _Tok:
    kind: str
    value: str
    line: int
    col: int


def _lex(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"stray character {text[pos]!r}", line, col)
        kind = m.lastgroup
        value = m.group()
        if kind == "nl":
            line += 1
            col = 1
        elif kind in ("ws", "comment"):
            col += len(value)
        else:
            name = kind if kind in ("ident", "num") else value
            toks.append(_Tok(name, value, line, col))
            col += len(value)
        pos = m.end()
    toks.append(_Tok("eof", "", line, col))
    return toks


def _collect_pins(text: str) -> list[tuple[str, int]]:
    pins: list[tuple[str, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if raw.lstrip().startswith("%level"):
            m = _LEVEL_DIRECTIVE.match(raw)
            if not m:
                raise ParseError("malformed level directive", lineno, 1)
            pins.append((m.group(1), int(m.group(2))))
    return pins


# ---------------------------------------------------------------------------
# parser


class _Parser:
    def __init__(self, toks: list[_Tok], closed: bool):
        self.toks = toks
        self.pos = 0
        self.closed = closed  # goals must not contain free variables
        self.env: list[tuple[str, Var]] = []  # (surface spelling, canonical var)
        self.used: set[str] = set()

    # -- token plumbing

    def peek(self) -> _Tok:
        return self.toks[self.pos]

    def next(self) -> _Tok:
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str) -> _Tok:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(
                f"unexpected {tok.value or 'end of input'!r}",
                tok.line,
                tok.col,
                expected=(kind,),
            )
        return self.next()

    # -- scoping

    def bind(self, surface: str, tok: _Tok) -> Var:
        if surface.lower() in KEYWORDS:
            raise GrammarViolation(f"{surface!r} cannot be a variable", tok.line, tok.col)
        base = surface.lower()
        name, n = base, 1
        while name in self.used:
            name = f"{base}{n}"
            n += 1
        self.used.add(name)
        return Var(name)

    def resolve(self, tok: _Tok) -> Term:
        name = tok.value
        if name[0].isupper():
            for surface, v in reversed(self.env):
                if surface == name:
                    return v
            if not self.closed:
                return Var(name)  # clause variable, shared with the head
            raise GrammarViolation(f"unbound variable {name}", tok.line, tok.col)
        for _, v in reversed(self.env):
            if v.name == name:
                return v
        return Const(name)  # free lower-case identifier: an uninterpreted constant

    # -- terms

    def term(self) -> Term:
        left = self.term_mul()
        while self.peek().kind == "+":
            self.next()
            right = self.term_mul()
            left = Succ(left) if right == Nat(1) else Add(left, right)
        return left

    def term_mul(self) -> Term:
        left = self.term_prim()
        while self.peek().kind == "*":
            self.next()
            left = Mul(left, self.term_prim())
        return left

    def term_prim(self) -> Term:
        tok = self.peek()
        if tok.kind == "num":
            self.next()
            return Nat(int(tok.value))
        if tok.kind == "ident":
            if tok.value in KEYWORDS:
                raise ParseError(f"{tok.value!r} is not a term", tok.line, tok.col)
            self.next()
            if self.peek().kind == "(":
                raise ParseError(
                    "function symbols are not allowed inside arguments",
                    tok.line,
                    tok.col,
                )
            return self.resolve(tok)
        if tok.kind == "(":
            self.next()
            inner = self.term()
            self.expect(")")
            return inner
        raise ParseError(
            f"unexpected {tok.value or 'end of input'!r}",
            tok.line,
            tok.col,
            expected=("term",),
        )

    def term_list(self) -> tuple[Term, ...]:
        self.expect("(")
        args = [self.term()]
        while self.peek().kind == ",":
            self.next()
            args.append(self.term())
        self.expect(")")
        return tuple(args)

    # -- formulas

    def formula(self) -> Formula:
        left = self.conjunction()
        tok = self.peek()
        if tok.kind != "=>":
            return left
        self.next()
        right = self.formula()
        if contains_d(left):
            raise GrammarViolation(
                "only a conjunctive goal may appear left of '=>'", tok.line, tok.col
            )
        if isinstance(left, NatAtom) and isinstance(left.arg, Var):
            if contains_d(right):
                raise GrammarViolation(
                    "the body of a nat(...) antecedent must be a conjunctive goal",
                    tok.line,
                    tok.col,
                )
            return NatImplies(left.arg, right)
        return Implies(left, right)

    def conjunction(self) -> Formula:
        left = self.unit()
        if self.peek().kind == "&":
            self.next()
            return And(left, self.conjunction())
        return left

    def unit(self) -> Formula:
        tok = self.peek()
        if tok.kind == "(":
            self.next()
            inner = self.formula()
            self.expect(")")
            return inner
        if tok.kind != "ident":
            raise ParseError(
                f"unexpected {tok.value or 'end of input'!r}",
                tok.line,
                tok.col,
                expected=("formula",),
            )
        if tok.value == "true":
            self.next()
            return Top()
        if tok.value == "false":
            self.next()
            return Bot()
        if tok.value == "nat":
            self.next()
            self.expect("(")
            arg = self.term()
            self.expect(")")
            return NatAtom(arg)
        if tok.value in ("exists", "forall"):
            self.next()
            binder = self.expect("ident")
            self.expect(".")
            var = self.bind(binder.value, binder)
            self.env.append((binder.value, var))
            body = self.formula()
            self.env.pop()
            if tok.value == "exists":
                return Exists(var, body, surface=binder.value)
            return Forall(var, body, surface=binder.value)
        if tok.value[0].isupper():
            raise ParseError(
                f"a formula cannot start with the variable {tok.value}",
                tok.line,
                tok.col,
            )
        self.next()
        if self.peek().kind != "(":
            nxt = self.peek()
            raise ParseError(
                f"predicate {tok.value!r} needs arguments", nxt.line, nxt.col, ("(",)
            )
        return Atom(tok.value, self.term_list())

    # -- clauses

    def clause(self) -> DefinitionClause:
        self.env = []
        self.used = set()
        tok = self.expect("ident")
        if tok.value in KEYWORDS:
            raise GrammarViolation(
                f"{tok.value!r} is reserved and cannot be defined", tok.line, tok.col
            )
        if not tok.value[0].islower():
            raise ParseError("predicate names start lower-case", tok.line, tok.col)
        head = Atom(tok.value, self.term_list())
        self.expect(":=")
        body = self.formula()
        self.expect(".")
        return DefinitionClause(head, body)


def parse_goal(text: str) -> Formula:
    p = _Parser(_lex(text), closed=True)
    f = p.formula()
    p.expect("eof")
    return f


def parse_program(text: str) -> Program:
    pins = _collect_pins(text)
    p = _Parser(_lex(text), closed=False)
    clauses = []
    while p.peek().kind != "eof":
        clauses.append(p.clause())
    return Program(tuple(clauses), tuple(pins))


# ---------------------------------------------------------------------------
# pretty printing


def _ends_open(f: Formula) -> bool:
    # would keep absorbing tokens if an operator followed it unparenthesised
    if isinstance(f, (Exists, Forall, Implies, NatImplies)):
        return True
    if isinstance(f, And):
        return _ends_open(f.right)
    return False


def formula_src(f: Formula) -> str:
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Bot):
        return "false"
    if isinstance(f, NatAtom):
        return f"nat({render_term(f.arg)})"
    if isinstance(f, Atom):
        return f"{f.pred}({','.join(render_term(a) for a in f.args)})"
    if isinstance(f, And):
        left = formula_src(f.left)
        if isinstance(f.left, And) or _ends_open(f.left):
            left = f"({left})"
        right = formula_src(f.right)
        if isinstance(f.right, (Implies, NatImplies)):
            right = f"({right})"
        return f"{left} & {right}"
    if isinstance(f, Exists):
        return f"exists {f.var.name}. {formula_src(f.body)}"
    if isinstance(f, Forall):
        return f"forall {f.var.name}. {formula_src(f.body)}"
    if isinstance(f, Implies):
        left = formula_src(f.left)
        if _ends_open(f.left):
            left = f"({left})"
        return f"{left} => {formula_src(f.right)}"
    if isinstance(f, NatImplies):
        return f"nat({render_term(f.arg)}) => {formula_src(f.body)}"
    raise TypeError(f"not a formula: {f!r}")


def clause_src(c: DefinitionClause) -> str:
    return f"{formula_src(c.head)} := {formula_src(c.body)}."


def program_src(p: Program) -> str:
    lines = [f"%level {name} {lvl}" for name, lvl in p.pins]
    lines.extend(clause_src(c) for c in p.clauses)
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# level discipline


@dataclass
class LevelReport:
    assignment: dict[str, int]


def _formula_level(f: Formula, levels: dict[str, int]) -> int:
    if contains_d(f):
        return 1
    return max((levels.get(a.pred, 0) for a in atoms_of(f)), default=0)


def _check_g_positions(f: Formula, levels: dict[str, int], where: str, in_g: bool) -> None:
    if isinstance(f, Atom):
        if in_g and levels.get(f.pred, 0) == 1:
            raise LevelError(
                f"level-1 atom {f.pred} used inside a conjunctive goal in {where}"
            )
    elif isinstance(f, And):
        _check_g_positions(f.left, levels, where, in_g)
        _check_g_positions(f.right, levels, where, in_g)
    elif isinstance(f, (Exists, Forall)):
        _check_g_positions(f.body, levels, where, in_g)
    elif isinstance(f, Implies):
        _check_g_positions(f.left, levels, where, True)
        _check_g_positions(f.right, levels, where, in_g)
    elif isinstance(f, NatImplies):
        _check_g_positions(f.body, levels, where, True)


def check_levels(program: Program, goal: Optional[Formula] = None) -> LevelReport:
    """Least level assignment consistent with every clause, or LevelError.

    A body using a universal or an implication forces its head to level 1,
    and heads must sit at or above their bodies.  Pinned predicates keep
    their pinned level; a pin below the required level is the error case.
    Level-1 atoms may not occur inside conjunctive-goal positions.
    """
    preds: set[str] = set()
    for c in program.clauses:
        preds.add(c.head.pred)
        preds.update(a.pred for a in atoms_of(c.body))
    if goal is not None:
        preds.update(a.pred for a in atoms_of(goal))
    pinned = program.pinned()
    preds.update(pinned)
    levels = {p: 0 for p in preds}
    levels.update(pinned)

    changed = True
    while changed:
        changed = False
        for c in program.clauses:
            need = _formula_level(c.body, levels)
            if need > levels[c.head.pred] and c.head.pred not in pinned:
                levels[c.head.pred] = need
                changed = True

    for idx, c in enumerate(program.clauses, start=1):
        need = _formula_level(c.body, levels)
        if need > levels[c.head.pred]:
            raise LevelError(
                f"clause {idx} ({clause_src(c)}): head is level "
                f"{levels[c.head.pred]} but the body requires level {need}"
            )
    for idx, c in enumerate(program.clauses, start=1):
        _check_g_positions(c.body, levels, f"clause {idx}", False)
    if goal is not None:
        _check_g_positions(goal, levels, "the goal", False)
    return LevelReport(assignment=levels)
