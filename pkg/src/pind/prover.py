"""Proof search over definition programs, in four modes.

The search walks a sequent top-down but records the tree bottom-up: each
rule application appends one node after the nodes of its subproofs, so
child links are backward index distances and the root is the last node.
Backtracking deletes the nodes of abandoned attempts, leaving exactly the
surviving derivation in the finished tree.

Modes come in two families.  The l-modes accumulate a total run: l0
decomposes premises (case analysis included), l1 decomposes the goal.
The i-modes prove one generic induction step: i0 decomposes the
hypothesis side, i1 proves the stepped goal, and both record their
witness bindings in a partial run keyed by witness slots and quantifier
locations.  Two mode switches are silent (l0 to l1 once premises are
exhausted, i0 to i1 once only atoms remain): no node is emitted for the
switch, and the first rule fired afterwards is displayed under the
calling mode.
"""

from __future__ import annotations

import itertools
import sys
from dataclasses import dataclass
from typing import Iterator, Optional

from pind.syntax import (
    And,
    Atom,
    Bot,
    DefinitionClause,
    Exists,
    Forall,
    Formula,
    Implies,
    NatAtom,
    NatImplies,
    Program,
    Top,
    apply_formula,
    formula_src,
    surface_name,
)
from pind.terms import (
    Add,
    Compound,
    Eigen,
    IndexedVar,
    Key,
    Loc,
    Mul,
    Nat,
    Run,
    Succ,
    Term,
    Var,
    _subst_once,
    apply,
    compose,
    mgu,
    render_run,
)


class ProofFailure(Exception):
    """No derivation exists, or the induction set-up cannot be used."""


class SearchLimitExceeded(Exception):
    """The rule-application budget ran out before the search settled."""


@dataclass(frozen=True)
class SearchConfig:
    budget: int = 100_000  # rule applications before giving up


@dataclass(frozen=True)
class Induction:
    """Everything a replay needs to unroll one induction to a chosen bound."""

    n: Eigen  # the variable being inducted over
    j: Eigen  # the generic step parameter
    m: int  # existential slots per copy of the goal
    psi_b: Run  # resolved base-case run
    delta: Run  # resolved step-case partial run, expressed over j
    concl: Formula  # stepped goal with renamed, slot-annotated binders
    sigma: Run  # run in force at the induction node


@dataclass(frozen=True)
class ProofNode:
    mode: str
    label: str
    kind: str  # leaf | chain | conj | forall | exists_out | defl | induction
    sigma: Run
    delta: Optional[Run]  # None outside the i-modes
    premises: tuple[Formula, ...]
    goal: Formula
    result: Optional[Run]  # None renders as Failure
    distances: tuple[int, ...]  # backward offsets to children, first child first
    witness: Optional[Term] = None  # exists_out: the stand-in variable
    surface: str = ""  # exists_out / forall: source-level binder name
    eigen: Optional[Eigen] = None  # forall
    nat_guarded: bool = False  # forall whose body is a nat guard
    thetas: tuple[Run, ...] = ()  # defl: per-child case substitution
    ind: Optional[Induction] = None


@dataclass(frozen=True)
class ProofTree:
    nodes: tuple[ProofNode, ...]

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def root(self) -> ProofNode:
        return self.nodes[-1]

    def children(self, index: int) -> tuple[int, ...]:
        return tuple(index - d for d in self.nodes[index].distances)


def validate(tree: ProofTree) -> None:
    """Structural checks: distances in range, single parent, root last."""
    count = len(tree.nodes)
    refs = [0] * count
    for i, node in enumerate(tree.nodes):
        for d in node.distances:
            if d < 1 or i - d < 0:
                raise ValueError(f"node {i}: child distance {d} out of range")
            refs[i - d] += 1
    for i in range(count - 1):
        if refs[i] != 1:
            raise ValueError(f"node {i} referenced {refs[i]} times")
    if count and refs[count - 1] != 0:
        raise ValueError("root node must not be referenced")


def dump(tree: ProofTree) -> str:
    """One node per line: index, mode, sigma, delta, sequent, result, children."""
    lines = []
    for i, n in enumerate(tree.nodes):
        left = ", ".join(formula_src(p) for p in n.premises)
        sequent = (left + " " if left else "") + "|- " + formula_src(n.goal)
        dist = "::".join(str(d) for d in n.distances) + "::nil" if n.distances else "nil"
        lines.append(
            "\t".join(
                (
                    str(i),
                    n.mode,
                    render_run(n.sigma),
                    render_run(n.delta) if n.delta is not None else "-",
                    sequent,
                    render_run(n.result) if n.result is not None else "Failure",
                    dist,
                    f"% {n.label}",
                )
            )
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# search state


class _Ctx:
    __slots__ = ("program", "budget", "used", "nodes", "hcount", "ycount", "jcount", "used_names")

    def __init__(self, program: Program, budget: int):
        self.program = program
        self.budget = budget
        self.used = 0
        self.nodes: list[ProofNode] = []
        self.hcount = itertools.count()
        self.ycount = itertools.count()
        self.jcount = itertools.count()
        self.used_names: set[str] = set()

    def tick(self) -> None:
        self.used += 1
        if self.used > self.budget:
            raise SearchLimitExceeded(f"gave up after {self.budget} rule applications")


@dataclass(frozen=True)
class _Res:
    """One solution of a subsearch: continuation run, tracked keys, root index."""

    run: Run
    skeys: tuple[Key, ...]
    dkeys: tuple[Key, ...]
    failed: bool
    root: int


def _display_run(run: Run) -> Run:
    # formulas resolve binder stand-ins and clause-variable bindings only;
    # eigenvariables and witness slots stay raw in the displayed sequent
    return Run(
        tuple(
            (k, v)
            for k, v in run.pairs
            if isinstance(k, Var) or (isinstance(k, IndexedVar) and k.family == "y")
        )
    )


def _resolve_keys(keys: tuple[Key, ...], run: Run, post: Run) -> Run:
    pairs = []
    for k in keys:
        if isinstance(k, Loc):
            inner = run.lookup(k)
            if inner is None:
                continue
            value = apply(run, inner)
        else:
            value = apply(run, k)
        pairs.append((k, apply(post, value)))
    return Run(tuple(pairs))


def _grow_skeys(skeys: tuple[Key, ...], dkeys: tuple[Key, ...], theta: Run) -> tuple[Key, ...]:
    out = skeys
    for k, _ in theta.pairs:
        if isinstance(k, IndexedVar) and k.family == "y":
            continue  # clause-renaming variables are not answer keys
        if k in out or k in dkeys:
            continue
        out = out + (k,)
    return out


def _node(
    ctx: _Ctx,
    *,
    mode: str,
    label: str,
    kind: str,
    run: Run,
    post: Run,
    skeys: tuple[Key, ...],
    dkeys: tuple[Key, ...],
    premises: tuple[Formula, ...],
    goal: Formula,
    result: Optional[Run],
    children: tuple[int, ...] = (),
    witness: Optional[Term] = None,
    surface: str = "",
    eigen: Optional[Eigen] = None,
    nat_guarded: bool = False,
    thetas: tuple[Run, ...] = (),
    ind: Optional[Induction] = None,
) -> int:
    dr = _display_run(run)
    node = ProofNode(
        mode=mode,
        label=label,
        kind=kind,
        sigma=_resolve_keys(skeys, run, post),
        delta=_resolve_keys(dkeys, run, post) if mode.startswith("i") else None,
        premises=tuple(apply_formula(dr, p) for p in premises),
        goal=apply_formula(dr, goal),
        result=result,
        distances=tuple(len(ctx.nodes) - c for c in children),
        witness=witness,
        surface=surface,
        eigen=eigen,
        nat_guarded=nat_guarded,
        thetas=thetas,
        ind=ind,
    )
    ctx.nodes.append(node)
    return len(ctx.nodes) - 1


# ---------------------------------------------------------------------------
# clause access


def _ordered_upper_vars(clause: DefinitionClause) -> tuple[Var, ...]:
    seen: set[Var] = set()
    out: list[Var] = []

    def term_walk(t: Term) -> None:
        if isinstance(t, Var):
            if t.name[0].isupper() and t not in seen:
                seen.add(t)
                out.append(t)
        elif isinstance(t, Succ):
            term_walk(t.arg)
        elif isinstance(t, (Add, Mul)):
            term_walk(t.left)
            term_walk(t.right)
        elif isinstance(t, Compound):
            for a in t.args:
                term_walk(a)

    def formula_walk(f: Formula) -> None:
        if isinstance(f, NatAtom):
            term_walk(f.arg)
        elif isinstance(f, Atom):
            for a in f.args:
                term_walk(a)
        elif isinstance(f, (And, Implies)):
            formula_walk(f.left)
            formula_walk(f.right)
        elif isinstance(f, (Exists, Forall)):
            formula_walk(f.body)
        elif isinstance(f, NatImplies):
            term_walk(f.arg)
            formula_walk(f.body)

    for a in clause.head.args:
        term_walk(a)
    formula_walk(clause.body)
    return tuple(out)


def _definitions(ctx: _Ctx, atom: Atom, run: Run, frozen: frozenset) -> list[tuple[Run, Formula]]:
    """Unifier and instantiated body for every defining clause, in program order."""
    goal_term = apply(run, atom.as_term())
    out = []
    for clause in ctx.program.clauses:
        if clause.head.pred != atom.pred or len(clause.head.args) != len(atom.args):
            continue
        ren = Run(
            tuple((v, IndexedVar("y", next(ctx.ycount))) for v in _ordered_upper_vars(clause))
        )
        theta = mgu(goal_term, apply(ren, clause.head.as_term()), frozen=frozen)
        if theta is None:
            continue
        out.append((theta, apply_formula(theta, apply_formula(ren, clause.body))))
    return out


# ---------------------------------------------------------------------------
# induction set-up


def _check_inductable(goal: Formula, whole: Formula) -> None:
    if isinstance(goal, Atom):
        return
    if isinstance(goal, And):
        _check_inductable(goal.left, whole)
        _check_inductable(goal.right, whole)
        return
    if isinstance(goal, Exists):
        _check_inductable(goal.body, whole)
        return
    raise ProofFailure(
        "induction needs a goal built from atoms, conjunction, and existentials; "
        f"{formula_src(goal)} inside {formula_src(whole)} is neither"
    )


def _slot_count(goal: Formula) -> int:
    if isinstance(goal, And):
        return _slot_count(goal.left) + _slot_count(goal.right)
    if isinstance(goal, Exists):
        return 1 + _slot_count(goal.body)
    return 0


def _mark_slots(goal: Formula, cell: list[int]) -> Formula:
    if isinstance(goal, And):
        return And(_mark_slots(goal.left, cell), _mark_slots(goal.right, cell))
    if isinstance(goal, Exists):
        slot = cell[0]
        cell[0] += 1
        return Exists(goal.var, _mark_slots(goal.body, cell), goal.surface, slot, None)
    return goal


def _next_letter(old: str, used: set[str]) -> str:
    base = ord(old[0]) - ord("a")
    for step in range(1, 27):
        cand = chr(ord("a") + (base + step) % 26)
        if cand not in used:
            used.add(cand)
            return cand
    i = 1
    while f"{old}{i}" in used:
        i += 1
    used.add(f"{old}{i}")
    return f"{old}{i}"


def _conclusion_copy(goal: Formula, cell: list[int], m: int, ctx: _Ctx) -> Formula:
    """Fresh binder names and shifted slots, so the step's witnesses get their own block."""
    if isinstance(goal, And):
        return And(_conclusion_copy(goal.left, cell, m, ctx), _conclusion_copy(goal.right, cell, m, ctx))
    if isinstance(goal, Exists):
        slot = cell[0]
        cell[0] += 1
        fresh = Var(_next_letter(goal.var.name, ctx.used_names))
        body = apply_formula(Run(((goal.var, fresh),)), goal.body)
        return Exists(fresh, _conclusion_copy(body, cell, m, ctx), goal.surface, m + slot, (slot,))
    return goal


def _stepped(goal: Formula, n: Eigen) -> Formula:
    # one pass only: a fixed-point substitution of n+1 for n would never settle
    mapping: dict = {n: Succ(n)}
    if isinstance(goal, Atom):
        return Atom(goal.pred, tuple(_subst_once(mapping, a) for a in goal.args))
    if isinstance(goal, And):
        return And(_stepped(goal.left, n), _stepped(goal.right, n))
    if isinstance(goal, Exists):
        return Exists(goal.var, _stepped(goal.body, n), goal.surface, goal.wslot, goal.locpath)
    return goal


def _collect_binders(f: Formula, acc: set[str]) -> None:
    if isinstance(f, (Exists, Forall)):
        acc.add(f.var.name)
        _collect_binders(f.body, acc)
    elif isinstance(f, (And, Implies)):
        _collect_binders(f.left, acc)
        _collect_binders(f.right, acc)
    elif isinstance(f, NatImplies):
        _collect_binders(f.body, acc)


# ---------------------------------------------------------------------------
# the four search modes
#
# Every function below is a generator of _Res values, one per solution.
# The shared discipline: take a node mark before attempting alternatives,
# emit nodes just before yielding, and delete from the mark when resumed,
# so the node list always mirrors the attempt currently on the stack.
# Deleting past the end is a no-op, which makes the child generators'
# own clean-up harmless to interleave.


def _l1(
    ctx: _Ctx,
    run: Run,
    skeys: tuple[Key, ...],
    goal: Formula,
    live: frozenset,
    post: Run,
    mode_label: Optional[str] = None,
    label_override: Optional[str] = None,
) -> Iterator[_Res]:
    ctx.tick()
    mode = mode_label or "l1"
    mark = len(ctx.nodes)
    g = goal

    if isinstance(g, Top):
        idx = _node(
            ctx, mode=mode, label=label_override or "success", kind="leaf",
            run=run, post=post, skeys=skeys, dkeys=(), premises=(), goal=g,
            result=_resolve_keys(skeys, run, post),
        )
        yield _Res(run, skeys, (), False, idx)
        del ctx.nodes[mark:]
        return

    if isinstance(g, Bot):
        return  # nothing proves absurdity on the right

    if isinstance(g, NatAtom):
        t = apply(run, g.arg)
        if isinstance(t, Nat):
            idx = _node(
                ctx, mode=mode, label=label_override or "nat-R", kind="leaf",
                run=run, post=post, skeys=skeys, dkeys=(), premises=(), goal=g,
                result=_resolve_keys(skeys, run, post),
            )
            yield _Res(run, skeys, (), False, idx)
            del ctx.nodes[mark:]
        elif isinstance(t, Succ):
            for res in _l1(ctx, run, skeys, NatAtom(t.arg), live, post):
                idx = _node(
                    ctx, mode=mode, label=label_override or "nat-R", kind="chain",
                    run=res.run, post=post, skeys=skeys, dkeys=(), premises=(), goal=g,
                    children=(res.root,),
                    result=None if res.failed else _resolve_keys(res.skeys, res.run, post),
                )
                yield _Res(res.run, res.skeys, (), res.failed, idx)
                del ctx.nodes[mark:]
        return

    if isinstance(g, Atom):
        for theta, body in _definitions(ctx, g, run, live):
            run2 = compose(theta, run)
            skeys2 = _grow_skeys(skeys, (), theta)
            for res in _l1(ctx, run2, skeys2, body, live, post):
                idx = _node(
                    ctx, mode=mode, label=label_override or "defR", kind="chain",
                    run=res.run, post=post, skeys=skeys, dkeys=(), premises=(), goal=g,
                    children=(res.root,),
                    result=None if res.failed else _resolve_keys(res.skeys, res.run, post),
                )
                yield _Res(res.run, res.skeys, (), res.failed, idx)
                del ctx.nodes[mark:]
        return

    if isinstance(g, And):
        for lres in _l1(ctx, run, skeys, g.left, live, post):
            rmark = len(ctx.nodes)
            for rres in _l1(ctx, lres.run, lres.skeys, g.right, live, post):
                failed = lres.failed or rres.failed
                idx = _node(
                    ctx, mode=mode, label=label_override or "and-R", kind="conj",
                    run=rres.run, post=post, skeys=skeys, dkeys=(), premises=(), goal=g,
                    children=(lres.root, rres.root),
                    result=None if failed else _resolve_keys(rres.skeys, rres.run, post),
                )
                yield _Res(rres.run, rres.skeys, (), failed, idx)
                del ctx.nodes[rmark:]
        return

    if isinstance(g, Exists):
        wit: Term
        if g.wslot is not None:
            wit = IndexedVar("w", g.wslot)
        else:
            wit = IndexedVar("y", next(ctx.ycount))
        skeys2 = skeys if wit in skeys else skeys + (wit,)
        body = apply_formula(Run(((g.var, wit),)), g.body)
        for res in _l1(ctx, run, skeys2, body, live, post):
            idx = _node(
                ctx, mode=mode, label=label_override or "exists-R", kind="exists_out",
                run=res.run, post=post, skeys=skeys, dkeys=(), premises=(), goal=g,
                children=(res.root,), witness=wit, surface=surface_name(g),
                result=None if res.failed else _resolve_keys(res.skeys, res.run, post),
            )
            yield _Res(res.run, res.skeys, (), res.failed, idx)
            del ctx.nodes[mark:]
        return

    if isinstance(g, Forall):
        ev = Eigen("h", next(ctx.hcount))
        body = apply_formula(Run(((g.var, ev),)), g.body)
        for res in _l1(ctx, run, skeys, body, live | {ev}, post):
            idx = _node(
                ctx, mode=mode, label=label_override or "forall-R", kind="forall",
                run=res.run, post=post, skeys=skeys, dkeys=(), premises=(), goal=g,
                children=(res.root,), eigen=ev, surface=surface_name(g),
                nat_guarded=isinstance(g.body, NatImplies),
                result=None if res.failed else _resolve_keys(res.skeys, res.run, post),
            )
            yield _Res(res.run, res.skeys, (), res.failed, idx)
            del ctx.nodes[mark:]
        return

    if isinstance(g, Implies):
        for res in _l0(ctx, run, skeys, (g.left,), g.right, live, post):
            idx = _node(
                ctx, mode=mode, label=label_override or "imp-R", kind="chain",
                run=res.run, post=post, skeys=skeys, dkeys=(), premises=(), goal=g,
                children=(res.root,),
                result=None if res.failed else _resolve_keys(res.skeys, res.run, post),
            )
            yield _Res(res.run, res.skeys, (), res.failed, idx)
            del ctx.nodes[mark:]
        return

    if isinstance(g, NatImplies):
        for res in _l0(ctx, run, skeys, (NatAtom(g.arg),), g.body, live, post):
            idx = _node(
                ctx, mode=mode, label=label_override or "nat-imp", kind="chain",
                run=res.run, post=post, skeys=skeys, dkeys=(), premises=(), goal=g,
                children=(res.root,),
                result=None if res.failed else _resolve_keys(res.skeys, res.run, post),
            )
            yield _Res(res.run, res.skeys, (), res.failed, idx)
            del ctx.nodes[mark:]
        return

    raise TypeError(f"unhandled goal: {g!r}")


def _l0(
    ctx: _Ctx,
    run: Run,
    skeys: tuple[Key, ...],
    premises: tuple[Formula, ...],
    goal: Formula,
    live: frozenset,
    post: Run,
) -> Iterator[_Res]:
    ctx.tick()
    mark = len(ctx.nodes)

    if not premises:
        yield from _l1(ctx, run, skeys, goal, live, post, mode_label="l0")
        return

    for p in premises:
        if isinstance(p, Bot):
            idx = _node(
                ctx, mode="l0", label="false-L", kind="leaf",
                run=run, post=post, skeys=skeys, dkeys=(), premises=premises, goal=goal,
                result=_resolve_keys(skeys, run, post),
            )
            yield _Res(run, skeys, (), False, idx)
            del ctx.nodes[mark:]
            return

    for i, p in enumerate(premises):
        label: Optional[str] = None
        if isinstance(p, Top):
            rest = premises[:i] + premises[i + 1 :]
            label = "true-L"
        elif isinstance(p, And):
            rest = premises[:i] + (p.left, p.right) + premises[i + 1 :]
            label = "and-L"
        elif isinstance(p, Exists):
            stand_in = IndexedVar("y", next(ctx.ycount))
            body = apply_formula(Run(((p.var, stand_in),)), p.body)
            rest = premises[:i] + (body,) + premises[i + 1 :]
            label = "exists-L"
        if label is not None:
            for res in _l0(ctx, run, skeys, rest, goal, live, post):
                idx = _node(
                    ctx, mode="l0", label=label, kind="chain",
                    run=res.run, post=post, skeys=skeys, dkeys=(), premises=premises, goal=goal,
                    children=(res.root,),
                    result=None if res.failed else _resolve_keys(res.skeys, res.run, post),
                )
                yield _Res(res.run, res.skeys, (), res.failed, idx)
                del ctx.nodes[mark:]
            return

    for i, p in enumerate(premises):
        if not isinstance(p, NatAtom):
            continue
        t = apply(run, p.arg)
        if isinstance(t, Nat):
            rest = premises[:i] + premises[i + 1 :]
            for res in _l0(ctx, run, skeys, rest, goal, live, post):
                idx = _node(
                    ctx, mode="l0", label="nat-L", kind="chain",
                    run=res.run, post=post, skeys=skeys, dkeys=(), premises=premises, goal=goal,
                    children=(res.root,),
                    result=None if res.failed else _resolve_keys(res.skeys, res.run, post),
                )
                yield _Res(res.run, res.skeys, (), res.failed, idx)
                del ctx.nodes[mark:]
            return
        if isinstance(t, Eigen):
            yield from _induction(ctx, run, skeys, premises, goal, live, post, t, mark)
            return
        return  # a numeral premise over an open, non-inductable term

    for i, p in enumerate(premises):
        if isinstance(p, Atom):
            yield from _defl(ctx, run, skeys, premises, goal, live, post, i, p, mark)
            return

    return  # leftover premises admit no left rule


def _induction(
    ctx: _Ctx,
    run: Run,
    skeys: tuple[Key, ...],
    premises: tuple[Formula, ...],
    goal: Formula,
    live: frozenset,
    post: Run,
    n: Eigen,
    mark: int,
) -> Iterator[_Res]:
    _check_inductable(goal, goal)
    m = _slot_count(goal)
    hyp = _mark_slots(goal, [0])
    base_goal = _mark_slots(goal, [0])
    concl = _stepped(_conclusion_copy(goal, [0], m, ctx), n)

    # base: the inducted variable pinned to 0; extra premises play no part here
    base_run = compose(Run(((n, Nat(0)),)), run)
    bres = next(_l1(ctx, base_run, skeys + (n,), base_goal, live, post, label_override="nat-0"), None)
    if bres is None:
        del ctx.nodes[mark:]
        return

    # step: generic parameter j; the run is untouched, displays map n to j
    j = Eigen("j", next(ctx.jcount))
    step_post = compose(post, Run(((n, j),)))
    sres = next(_i0(ctx, run, skeys + (n,), (), (hyp,), concl, live | {j}, step_post), None)
    if sres is None:
        del ctx.nodes[mark:]
        return

    ind = Induction(
        n=n,
        j=j,
        m=m,
        psi_b=_resolve_keys(bres.skeys, bres.run, Run(())),
        delta=_resolve_keys(sres.dkeys, sres.run, Run(((n, j),))),
        concl=concl,
        sigma=run,
    )
    idx = _node(
        ctx, mode="l0", label="defL", kind="induction",
        run=run, post=post, skeys=skeys, dkeys=(), premises=premises, goal=goal,
        children=(bres.root, sres.root), ind=ind,
        result=None,  # no single run closes a goal proved for every bound
    )
    yield _Res(run, skeys, (), True, idx)
    del ctx.nodes[mark:]


def _defl(
    ctx: _Ctx,
    run: Run,
    skeys: tuple[Key, ...],
    premises: tuple[Formula, ...],
    goal: Formula,
    live: frozenset,
    post: Run,
    i: int,
    atom: Atom,
    mark: int,
) -> Iterator[_Res]:
    # eigenvariables are bindable here: each unifier is one case of the analysis
    alts = _definitions(ctx, atom, run, frozenset())

    if not alts:
        idx = _node(
            ctx, mode="l0", label="defL", kind="defl",
            run=run, post=post, skeys=skeys, dkeys=(), premises=premises, goal=goal,
            result=_resolve_keys(skeys, run, post),
        )
        yield _Res(run, skeys, (), False, idx)
        del ctx.nodes[mark:]
        return

    branches: list[tuple[Run, _Res]] = []
    for theta, body in alts:
        rest = (
            tuple(apply_formula(theta, q) for q in premises[:i])
            + (body,)
            + tuple(apply_formula(theta, q) for q in premises[i + 1 :])
        )
        bres = next(
            _l0(
                ctx,
                compose(theta, run),
                _grow_skeys(skeys, (), theta),
                rest,
                apply_formula(theta, goal),
                live,
                post,
            ),
            None,
        )
        if bres is None:
            del ctx.nodes[mark:]
            return  # every case is mandatory
        branches.append((theta, bres))

    failed = any(r.failed for _, r in branches)
    thetas = tuple(
        Run(tuple((k, apply(r.run, v)) for k, v in theta.pairs)) for theta, r in branches
    )
    roots = tuple(r.root for _, r in branches)
    if len(branches) == 1:
        only = branches[0][1]
        idx = _node(
            ctx, mode="l0", label="defL", kind="defl",
            run=only.run, post=post, skeys=skeys, dkeys=(), premises=premises, goal=goal,
            children=roots, thetas=thetas,
            result=None if failed else _resolve_keys(only.skeys, only.run, post),
        )
        yield _Res(only.run, only.skeys, (), failed, idx)
    else:
        # diverging case runs: the sequent's own keys are all that remains common
        idx = _node(
            ctx, mode="l0", label="defL", kind="defl",
            run=run, post=post, skeys=skeys, dkeys=(), premises=premises, goal=goal,
            children=roots, thetas=thetas,
            result=None if failed else _resolve_keys(skeys, run, post),
        )
        yield _Res(run, skeys, (), failed, idx)
    del ctx.nodes[mark:]


def _i0(
    ctx: _Ctx,
    run: Run,
    skeys: tuple[Key, ...],
    dkeys: tuple[Key, ...],
    premises: tuple[Formula, ...],
    goal: Formula,
    live: frozenset,
    post: Run,
    mode_label: Optional[str] = None,
) -> Iterator[_Res]:
    ctx.tick()
    mode = mode_label or "i0"
    mark = len(ctx.nodes)

    for i, p in enumerate(premises):
        if isinstance(p, And):
            rest = premises[:i] + (p.left, p.right) + premises[i + 1 :]
            for res in _i0(ctx, run, skeys, dkeys, rest, goal, live, post):
                idx = _node(
                    ctx, mode=mode, label="and-L", kind="chain",
                    run=res.run, post=post, skeys=skeys, dkeys=dkeys,
                    premises=premises, goal=goal, children=(res.root,),
                    result=None if res.failed else _resolve_keys(res.dkeys, res.run, post),
                )
                yield _Res(res.run, res.skeys, res.dkeys, res.failed, idx)
                del ctx.nodes[mark:]
            return
        if isinstance(p, Exists):
            if p.wslot is not None:
                wit: Term = IndexedVar("w", p.wslot)
                dkeys2 = dkeys + (p.var,)
            else:
                wit = IndexedVar("y", next(ctx.ycount))
                dkeys2 = dkeys
            sub = Run(((p.var, wit),))
            rest = premises[:i] + (apply_formula(sub, p.body),) + premises[i + 1 :]
            for res in _i0(ctx, compose(sub, run), skeys, dkeys2, rest, goal, live, post):
                idx = _node(
                    ctx, mode=mode, label="exists-L", kind="chain",
                    run=res.run, post=post, skeys=skeys, dkeys=dkeys,
                    premises=premises, goal=goal, children=(res.root,),
                    result=None if res.failed else _resolve_keys(res.dkeys, res.run, post),
                )
                yield _Res(res.run, res.skeys, res.dkeys, res.failed, idx)
                del ctx.nodes[mark:]
            return

    yield from _i1(ctx, run, skeys, dkeys, premises, goal, live, post, mode_label=mode)


def _i1(
    ctx: _Ctx,
    run: Run,
    skeys: tuple[Key, ...],
    dkeys: tuple[Key, ...],
    premises: tuple[Formula, ...],
    goal: Formula,
    live: frozenset,
    post: Run,
    mode_label: Optional[str] = None,
) -> Iterator[_Res]:
    ctx.tick()
    mode = mode_label or "i1"
    mark = len(ctx.nodes)
    g = goal

    if isinstance(g, Atom):
        # closing against the hypothesis set comes before backchaining
        for hyp in premises:
            if not isinstance(hyp, Atom) or hyp.pred != g.pred:
                continue
            theta = mgu(apply(run, g.as_term()), apply(run, hyp.as_term()), frozen=live)
            if theta is None:
                continue
            run2 = compose(theta, run)
            idx = _node(
                ctx, mode=mode, label="success", kind="leaf",
                run=run2, post=post, skeys=skeys, dkeys=dkeys, premises=premises, goal=g,
                result=_resolve_keys(dkeys, run2, post),
            )
            yield _Res(run2, _grow_skeys(skeys, dkeys, theta), dkeys, False, idx)
            del ctx.nodes[mark:]
        for theta, body in _definitions(ctx, g, run, live):
            run2 = compose(theta, run)
            skeys2 = _grow_skeys(skeys, dkeys, theta)
            prem2 = tuple(apply_formula(theta, q) for q in premises)
            for res in _i1(ctx, run2, skeys2, dkeys, prem2, body, live, post):
                idx = _node(
                    ctx, mode=mode, label="defR", kind="chain",
                    run=res.run, post=post, skeys=skeys, dkeys=dkeys,
                    premises=premises, goal=g, children=(res.root,),
                    result=None if res.failed else _resolve_keys(res.dkeys, res.run, post),
                )
                yield _Res(res.run, res.skeys, res.dkeys, res.failed, idx)
                del ctx.nodes[mark:]
        return

    if isinstance(g, And):
        for lres in _i1(ctx, run, skeys, dkeys, premises, g.left, live, post):
            rmark = len(ctx.nodes)
            for rres in _i1(ctx, lres.run, lres.skeys, lres.dkeys, premises, g.right, live, post):
                failed = lres.failed or rres.failed
                idx = _node(
                    ctx, mode=mode, label="and-R", kind="conj",
                    run=rres.run, post=post, skeys=skeys, dkeys=dkeys,
                    premises=premises, goal=g, children=(lres.root, rres.root),
                    result=None if failed else _resolve_keys(rres.dkeys, rres.run, post),
                )
                yield _Res(rres.run, rres.skeys, rres.dkeys, failed, idx)
                del ctx.nodes[rmark:]
        return

    if isinstance(g, Exists):
        if g.wslot is not None:
            wit: Term = IndexedVar("w", g.wslot)
            loc = Loc(g.var, g.locpath or ())
            run2 = compose(Run(((loc, wit),)), run)
            dkeys2 = dkeys + (loc, wit)
        else:
            wit = IndexedVar("y", next(ctx.ycount))
            run2, dkeys2 = run, dkeys
        body = apply_formula(Run(((g.var, wit),)), g.body)
        for res in _i1(ctx, run2, skeys, dkeys2, premises, body, live, post):
            idx = _node(
                ctx, mode=mode, label="exists-L", kind="chain",
                run=res.run, post=post, skeys=skeys, dkeys=dkeys,
                premises=premises, goal=g, children=(res.root,),
                result=None if res.failed else _resolve_keys(res.dkeys, res.run, post),
            )
            yield _Res(res.run, res.skeys, res.dkeys, res.failed, idx)
            del ctx.nodes[mark:]
        return

    return  # no step rule matches this goal shape


# ---------------------------------------------------------------------------
# entry point


def prove(program: Program, goal: Formula, config: Optional[SearchConfig] = None) -> ProofTree:
    """Search for a derivation; the returned tree lists children before parents.

    Raises ProofFailure when the search space is exhausted without a
    derivation, and SearchLimitExceeded when the budget runs out first.
    A tree whose root result is Failure is still a successful outcome:
    it means the goal was proved schematically by induction and a total
    run only exists once a bound is chosen.
    """
    cfg = config or SearchConfig()
    ctx = _Ctx(program, cfg.budget)
    _collect_binders(goal, ctx.used_names)
    for clause in program.clauses:
        _collect_binders(clause.body, ctx.used_names)
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 20_000))
    try:
        res = next(_l1(ctx, Run(()), (), goal, frozenset(), Run(())), None)
    except RecursionError:
        # a runaway depth-first descent; same remedy as an exhausted budget
        raise SearchLimitExceeded("search nested past the recursion guard") from None
    finally:
        sys.setrecursionlimit(limit)
    if res is None:
        raise ProofFailure(f"no derivation for {formula_src(goal)}")
    tree = ProofTree(tuple(ctx.nodes))
    validate(tree)
    return tree
