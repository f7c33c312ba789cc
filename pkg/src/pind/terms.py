"""First-order terms over naturals, and the substitution machinery on them.

Terms are immutable trees built from numeric literals, three flavours of
variable, successor/plus/times nodes and uninterpreted compounds.  The three
variable flavours exist because they play different roles during search:

* ``Var`` is a source-level name (clause variables before renaming, goal
  binders after canonicalisation).
* ``IndexedVar`` is a machine-allocated family member: ``y_k`` for clause
  renaming, ``w_r`` for witness slots produced inside an induction step.
* ``Eigen`` is a parameter introduced for a universal: it names one fixed
  but arbitrary value, so unification may only bind it during case
  analysis, never when the search is merely matching against it.

A ``Run`` is an ordered sequence of (key, term) bindings, oldest first.
Keys are variables or ``Loc`` markers (a ``Loc`` tags the witness slot of a
particular quantifier occurrence, addressed by a path of copy indices, so
the same textual binder can be bound once per unrolled induction step).
Runs are applied as a fixpoint: substitute until nothing changes, then fold
ground arithmetic.  ``shift`` and ``unshift`` re-index the witness entries
of a run when an induction step is replayed several times and the copies
are chained together.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Union


class SubstitutionCycle(Exception):
    """A run kept rewriting a term without reaching a fixed point."""


class CompositionConflict(Exception):
    """Two runs being composed disagree on the value of the same key."""


# ---------------------------------------------------------------------------
# terms


@dataclass(frozen=True)
class Nat:
    value: int


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class IndexedVar:
    family: str
    index: int


@dataclass(frozen=True)
class Eigen:
    name: str
    serial: int


@dataclass(frozen=True)
class Const:
    """Uninterpreted constant; unifies only with itself."""

    name: str


@dataclass(frozen=True)
class Succ:
    arg: "Term"


@dataclass(frozen=True)
class Add:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Mul:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Compound:
    functor: str
    args: tuple["Term", ...]


Term = Union[Nat, Var, IndexedVar, Eigen, Const, Succ, Add, Mul, Compound]

VarLike = (Var, IndexedVar, Eigen)


@dataclass(frozen=True)
class Loc:
    """Witness slot of one quantifier occurrence inside an unrolled proof.

    ``base`` is the binder's canonical variable; ``path`` starts with the
    slot position and grows by one copy index per replay of the step.
    """

    base: Var
    path: tuple[int, ...]


Key = Union[Var, IndexedVar, Eigen, Loc]


def term_vars(t: Term) -> set[Term]:
    """All Var/IndexedVar/Eigen occurrences in ``t``."""
    out: set[Term] = set()
    stack = [t]
    while stack:
        cur = stack.pop()
        if isinstance(cur, VarLike):
            out.add(cur)
        elif isinstance(cur, Succ):
            stack.append(cur.arg)
        elif isinstance(cur, (Add, Mul)):
            stack.append(cur.left)
            stack.append(cur.right)
        elif isinstance(cur, Compound):
            stack.extend(cur.args)
    return out


def is_ground(t: Term) -> bool:
    return not term_vars(t)


def eval_arith(t: Term) -> Term:
    """Fold ground arithmetic bottom-up; open structure is preserved as-is."""
    if isinstance(t, Succ):
        a = eval_arith(t.arg)
        if isinstance(a, Nat):
            return Nat(a.value + 1)
        return Succ(a)
    if isinstance(t, Add):
        left, right = eval_arith(t.left), eval_arith(t.right)
        if isinstance(left, Nat) and isinstance(right, Nat):
            return Nat(left.value + right.value)
        return Add(left, right)
    if isinstance(t, Mul):
        left, right = eval_arith(t.left), eval_arith(t.right)
        if isinstance(left, Nat) and isinstance(right, Nat):
            return Nat(left.value * right.value)
        return Mul(left, right)
    if isinstance(t, Compound):
        return Compound(t.functor, tuple(eval_arith(a) for a in t.args))
    return t


# ---------------------------------------------------------------------------
# runs


@dataclass(frozen=True)
class Run:
    """Ordered bindings, oldest first.  Keys never repeat."""

    pairs: tuple[tuple[Key, Term], ...] = ()

    def __post_init__(self) -> None:
        seen = set()
        for key, _ in self.pairs:
            if key in seen:
                raise ValueError(f"duplicate key in run: {key!r}")
            seen.add(key)

    def lookup(self, key: Key) -> Optional[Term]:
        for k, v in self.pairs:
            if k == key:
                return v
        return None

    def domain(self) -> tuple[Key, ...]:
        return tuple(k for k, _ in self.pairs)

    def __contains__(self, key: Key) -> bool:
        return any(k == key for k, _ in self.pairs)

    def __iter__(self) -> Iterator[tuple[Key, Term]]:
        return iter(self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def __bool__(self) -> bool:
        return bool(self.pairs)


def _subst_once(mapping: dict[Term, Term], t: Term) -> Term:
    if isinstance(t, VarLike):
        return mapping.get(t, t)
    if isinstance(t, Succ):
        return Succ(_subst_once(mapping, t.arg))
    if isinstance(t, Add):
        return Add(_subst_once(mapping, t.left), _subst_once(mapping, t.right))
    if isinstance(t, Mul):
        return Mul(_subst_once(mapping, t.left), _subst_once(mapping, t.right))
    if isinstance(t, Compound):
        return Compound(t.functor, tuple(_subst_once(mapping, a) for a in t.args))
    return t


def apply(run: Run, t: Term) -> Term:
    """Substitute to a fixed point, then fold ground arithmetic."""
    mapping = {k: v for k, v in run.pairs if isinstance(k, VarLike)}
    if not mapping:
        return eval_arith(t)
    cur = t
    # a chain can be at most one hop per binding; anything longer is a cycle
    for _ in range(len(mapping) + 1):
        nxt = _subst_once(mapping, cur)
        if nxt == cur:
            return eval_arith(cur)
        cur = nxt
    raise SubstitutionCycle(f"run does not terminate on {t!r}")


def compose(newer: Run, older: Run) -> Run:
    """Sequential composition: apply ``older`` first, then ``newer``.

    Older bindings keep their positions with values rewritten through the
    newer run; newer bindings are appended verbatim.  A key bound on both
    sides must agree after rewriting.
    """
    out: list[tuple[Key, Term]] = []
    dom = set()
    for k, v in older.pairs:
        out.append((k, apply(newer, v)))
        dom.add(k)
    for k, v in newer.pairs:
        if k in dom:
            prior = next(pv for pk, pv in out if pk == k)
            if prior != v:
                raise CompositionConflict(f"{k!r} bound to both {prior!r} and {v!r}")
            continue
        out.append((k, v))
        dom.add(k)
    return Run(tuple(out))


def extend(run: Run, key: Key, value: Term) -> Run:
    """Compose a single fresh binding onto ``run``."""
    return compose(Run(((key, value),)), run)


# ---------------------------------------------------------------------------
# unification


def _pref(t: Term) -> int:
    if isinstance(t, Var):
        return 3
    if isinstance(t, IndexedVar):
        return 2
    if isinstance(t, Eigen):
        return 1
    return 0


def mgu(t1: Term, t2: Term, frozen: frozenset[Eigen] = frozenset()) -> Optional[Run]:
    """Most general unifier of two terms, or None.

    Eigen parameters listed in ``frozen`` behave as constants.  When both
    sides are bindable the source-level variable wins over the machine
    families, which in turn win over eigens; ties bind the left side.
    Ground arithmetic is folded before comparison, and a successor matches
    a positive literal by peeling one.
    """
    run = Run()
    stack: list[tuple[Term, Term]] = [(t1, t2)]
    while stack:
        a, b = stack.pop()
        a = apply(run, a)
        b = apply(run, b)
        if a == b:
            continue
        a_bind = isinstance(a, VarLike) and not (isinstance(a, Eigen) and a in frozen)
        b_bind = isinstance(b, VarLike) and not (isinstance(b, Eigen) and b in frozen)
        if a_bind or b_bind:
            if a_bind and b_bind and _pref(b) > _pref(a):
                var, val = b, a
            elif a_bind:
                var, val = a, b
            else:
                var, val = b, a
            if var in term_vars(val):
                return None
            run = extend(run, var, val)
            continue
        if isinstance(a, Nat) and isinstance(b, Nat):
            return None  # unequal literals (equal handled above)
        if isinstance(a, Succ) and isinstance(b, Succ):
            stack.append((a.arg, b.arg))
            continue
        if isinstance(a, Succ) and isinstance(b, Nat):
            if b.value == 0:
                return None
            stack.append((a.arg, Nat(b.value - 1)))
            continue
        if isinstance(a, Nat) and isinstance(b, Succ):
            if a.value == 0:
                return None
            stack.append((Nat(a.value - 1), b.arg))
            continue
        if isinstance(a, Add) and isinstance(b, Add):
            stack.append((a.right, b.right))
            stack.append((a.left, b.left))  # left pair pops first
            continue
        if isinstance(a, Mul) and isinstance(b, Mul):
            stack.append((a.right, b.right))
            stack.append((a.left, b.left))
            continue
        if isinstance(a, Compound) and isinstance(b, Compound):
            if a.functor != b.functor or len(a.args) != len(b.args):
                return None
            stack.extend(reversed(list(zip(a.args, b.args))))
            continue
        return None
    # make the result idempotent: late bindings rewrite earlier values
    return Run(tuple((k, apply(run, v)) for k, v in run.pairs))


# ---------------------------------------------------------------------------
# witness re-indexing


def _rename_w(t: Term, offset: int) -> Term:
    mapping: dict[Term, Term] = {
        v: IndexedVar(v.family, v.index + offset)
        for v in term_vars(t)
        if isinstance(v, IndexedVar) and v.family == "w"
    }
    return _subst_once(mapping, t) if mapping else t


def shift(delta: Run, j: Eigen, i: int, m: int) -> Run:
    """Re-index one step's bindings as the ``i``-th copy in a chain.

    Witness slots move up by ``i*m`` (``m`` slots per copy), location paths
    gain the copy index, the step parameter ``j`` becomes the literal ``i``
    and is dropped as a key.
    """
    out: list[tuple[Key, Term]] = []
    for k, v in delta.pairs:
        if k == j:
            continue
        nk: Key = k
        if isinstance(k, IndexedVar) and k.family == "w":
            nk = IndexedVar("w", k.index + i * m)
        elif isinstance(k, Loc):
            nk = Loc(k.base, k.path + (i,))
        nv = eval_arith(_subst_once({j: Nat(i)}, _rename_w(v, i * m)))
        out.append((nk, nv))
    return Run(tuple(out))


def unshift(run: Run, k: int, m: int) -> Run:
    """Keep only the final copy's conclusion entries, re-based to 0.

    Witness slots survive when they belong to copy ``k-1``'s conclusion
    block (index at least ``k*m``) and slide down by ``(k-1)*m``; location
    entries survive when their last copy index is ``k-1``, which is then
    stripped.  Everything else is internal to the chain and dropped.
    """
    offset = (k - 1) * m

    def down(t: Term) -> Term:
        mapping: dict[Term, Term] = {
            v: IndexedVar("w", v.index - offset)
            for v in term_vars(t)
            if isinstance(v, IndexedVar) and v.family == "w" and v.index >= offset
        }
        return _subst_once(mapping, t) if mapping else t

    out: list[tuple[Key, Term]] = []
    for key, v in run.pairs:
        if isinstance(key, IndexedVar) and key.family == "w":
            if key.index >= k * m:
                out.append((IndexedVar("w", key.index - offset), down(v)))
        elif isinstance(key, Loc):
            if key.path and key.path[-1] == k - 1:
                out.append((Loc(key.base, key.path[:-1]), down(v)))
    return Run(tuple(out))


# ---------------------------------------------------------------------------
# rendering


def _atom_src(t: Term) -> bool:
    return isinstance(t, (Nat, Var, IndexedVar, Eigen, Const, Compound))


def render_term(t: Term) -> str:
    """Source-shaped rendering; parses back to the same tree."""
    if isinstance(t, Nat):
        return str(t.value)
    if isinstance(t, Var):
        return t.name
    if isinstance(t, IndexedVar):
        return f"{t.family}_{t.index}"
    if isinstance(t, Eigen):
        if t.name == "j" and t.serial == 0:
            return "j"
        return f"{t.name}_{t.serial}"
    if isinstance(t, Const):
        return t.name
    if isinstance(t, Succ):
        inner = render_term(t.arg)
        if isinstance(t.arg, Mul) or _atom_src(t.arg) or isinstance(t.arg, (Succ, Add)):
            return f"{inner}+1"
        return f"({inner})+1"
    if isinstance(t, Add):
        right = render_term(t.right)
        if isinstance(t.right, (Add, Succ)):
            right = f"({right})"
        return f"{render_term(t.left)}+{right}"
    if isinstance(t, Mul):
        left = render_term(t.left)
        if isinstance(t.left, (Add, Succ)):
            left = f"({left})"
        right = render_term(t.right)
        if isinstance(t.right, (Add, Succ, Mul)):
            right = f"({right})"
        return f"{left}*{right}"
    if isinstance(t, Compound):
        return f"{t.functor}({','.join(render_term(a) for a in t.args)})"
    raise TypeError(f"not a term: {t!r}")


def _factor(t: Term) -> Term:
    # display-only rewrite: a*b + b  ==>  (a+1)*b
    if isinstance(t, Succ):
        return Succ(_factor(t.arg))
    if isinstance(t, Add):
        left, right = _factor(t.left), _factor(t.right)
        if isinstance(left, Mul) and left.right == right:
            return Mul(eval_arith(Succ(left.left)), right)
        return Add(left, right)
    if isinstance(t, Mul):
        return Mul(_factor(t.left), _factor(t.right))
    if isinstance(t, Compound):
        return Compound(t.functor, tuple(_factor(a) for a in t.args))
    return t


def render_value(t: Term) -> str:
    """Compact rendering for run displays: factors products, juxtaposes."""
    t = _factor(t)

    def go(u: Term) -> str:
        if isinstance(u, Mul) and isinstance(u.right, VarLike):
            left = go(u.left)
            if not isinstance(u.left, (Nat, Var, IndexedVar, Eigen, Const)):
                left = f"({left})"
            return f"{left}{go(u.right)}"
        if isinstance(u, Succ):
            return f"{go(u.arg)}+1" if not isinstance(u.arg, Add) else f"({go(u.arg)})+1"
        if isinstance(u, Add):
            return f"{go(u.left)}+{go(u.right)}"
        if isinstance(u, Mul):
            return f"{go(u.left)}*{go(u.right)}"
        if isinstance(u, Compound):
            return f"{u.functor}({','.join(go(a) for a in u.args)})"
        return render_term(u)

    return go(t)


def render_key(k: Key) -> str:
    if isinstance(k, Loc):
        tail = "".join(f"@{i}" for i in k.path[1:])
        return f"loc({k.base.name}){tail}"
    return render_term(k)


def render_run(run: Run) -> str:
    body = ",".join(f"({render_key(k)},{render_value(v)})" for k, v in run.pairs)
    return "{" + body + "}"
