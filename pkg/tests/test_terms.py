"""Unit and property tests for terms, runs, unification and re-indexing.

The concrete expected values in here were worked out by hand on paper
before the implementation existed; they are frozen and must not be edited
to make a failing implementation pass.
"""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pind.terms import (
    Add,
    Compound,
    CompositionConflict,
    Eigen,
    IndexedVar,
    Loc,
    Mul,
    Nat,
    Run,
    Succ,
    SubstitutionCycle,
    Var,
    apply,
    compose,
    eval_arith,
    extend,
    is_ground,
    mgu,
    render_key,
    render_run,
    render_term,
    render_value,
    shift,
    term_vars,
    unshift,
)

h0 = Eigen("h", 0)
j = Eigen("j", 0)
w0 = IndexedVar("w", 0)
w1 = IndexedVar("w", 1)
w2 = IndexedVar("w", 2)
w3 = IndexedVar("w", 3)
x = Var("x")
y = Var("y")
z = Var("z")


def fact(a, b):
    return Compound("fact", (a, b))


# ---------------------------------------------------------------------------
# arithmetic folding


def test_eval_folds_ground():
    assert eval_arith(Succ(Nat(2))) == Nat(3)
    assert eval_arith(Add(Nat(2), Nat(3))) == Nat(5)
    assert eval_arith(Mul(Nat(2), Nat(3))) == Nat(6)
    assert eval_arith(Add(Mul(Nat(2), Nat(2)), Succ(Nat(1)))) == Nat(6)


def test_eval_preserves_open_structure():
    t = Add(Mul(j, w0), w0)
    assert eval_arith(t) == t
    assert eval_arith(Mul(Nat(0), x)) == Mul(Nat(0), x)  # no algebraic shortcuts
    assert eval_arith(Succ(Add(Nat(1), x))) == Succ(Add(Nat(1), x))


def test_eval_descends_into_compounds():
    assert eval_arith(fact(Succ(Nat(0)), Add(Nat(1), Nat(1)))) == fact(Nat(1), Nat(2))


# ---------------------------------------------------------------------------
# runs and application


def test_run_rejects_duplicate_keys():
    with pytest.raises(ValueError):
        Run(((x, Nat(0)), (x, Nat(1))))


def test_apply_chases_chains_and_evaluates():
    # frozen oracle: w_2 resolves to 2 through the chained witness bindings
    r = Run(
        (
            (w2, Add(Mul(Nat(1), w1), w1)),
            (w1, Mul(Nat(1), w0)),
            (w0, Nat(1)),
        )
    )
    assert apply(r, w2) == Nat(2)
    assert apply(r, w1) == Nat(1)


def test_apply_cycle_raises():
    r = Run(((x, Succ(y)), (y, x)))
    with pytest.raises(SubstitutionCycle):
        apply(r, x)


def test_compose_keeps_old_positions_and_appends_new():
    older = Run(((x, fact(y, Nat(0))),))
    newer = Run(((y, Nat(2)),))
    assert compose(newer, older).pairs == (
        (x, fact(Nat(2), Nat(0))),
        (y, Nat(2)),
    )


def test_compose_conflict_on_disagreement():
    with pytest.raises(CompositionConflict):
        compose(Run(((x, Nat(1)),)), Run(((x, Nat(2)),)))
    # agreement is fine and keeps one copy
    r = compose(Run(((x, Nat(1)),)), Run(((x, Nat(1)),)))
    assert r.pairs == ((x, Nat(1)),)


def test_extend_appends_newest_last():
    r = extend(extend(Run(), h0, Nat(0)), w0, Nat(1))
    assert r.pairs == ((h0, Nat(0)), (w0, Nat(1)))


# ---------------------------------------------------------------------------
# unification oracles


def test_mgu_binds_parameters_of_the_open_side():
    # frozen oracle, including the binding order
    r = mgu(fact(Nat(0), Nat(1)), fact(h0, w0))
    assert r is not None
    assert r.pairs == ((h0, Nat(0)), (w0, Nat(1)))


def test_mgu_equal_terms_is_empty():
    assert mgu(fact(h0, w0), fact(h0, w0)).pairs == ()


def test_mgu_clash_fails():
    assert mgu(Nat(1), Nat(2)) is None
    assert mgu(fact(Nat(0), Nat(0)), Compound("fib", (Nat(0), Nat(0)))) is None
    assert mgu(Add(x, y), Nat(3)) is None  # open sums stay structural


def test_mgu_successor_peels_literals():
    assert mgu(Succ(x), Nat(3)).pairs == ((x, Nat(2)),)
    assert mgu(Nat(3), Succ(x)).pairs == ((x, Nat(2)),)
    assert mgu(Succ(x), Nat(0)) is None


def test_mgu_orientation_prefers_source_vars():
    assert mgu(x, h0).pairs == ((x, h0),)
    assert mgu(h0, x).pairs == ((x, h0),)
    assert mgu(w0, x).pairs == ((x, w0),)
    assert mgu(x, y).pairs == ((x, y),)  # tie binds the left side


def test_mgu_frozen_eigens_are_rigid():
    assert mgu(h0, Nat(1), frozen=frozenset([h0])) is None
    assert mgu(fact(h0, x), fact(Nat(1), Nat(2)), frozen=frozenset([h0])) is None
    assert mgu(h0, Nat(1)).pairs == ((h0, Nat(1)),)
    # frozen eigens can still be matched by a variable
    r = mgu(x, h0, frozen=frozenset([h0]))
    assert r.pairs == ((x, h0),)


def test_mgu_occurs_check():
    assert mgu(x, fact(x, Nat(0))) is None
    assert mgu(x, Succ(x)) is None


def test_mgu_evaluates_before_matching():
    assert mgu(Add(Nat(1), Nat(2)), Nat(3)).pairs == ()
    assert mgu(fact(Mul(Nat(2), Nat(2)), x), fact(Nat(4), Nat(0))) is not None


# ---------------------------------------------------------------------------
# re-indexing oracles


STEP_VALUE = Add(Mul(j, w0), w0)  # reads (j+1)w_0 in displays


def test_shift_reindexes_one_copy():
    delta = Run(((Loc(z, (0,)), STEP_VALUE), (w1, STEP_VALUE), (j, Nat(7))))
    got = shift(delta, j, 2, 1)
    want_value = Add(Mul(Nat(2), w2), w2)
    assert got.pairs == (
        (Loc(z, (0, 2)), want_value),
        (w3, want_value),
    )


def test_shift_copy_zero_keeps_slots():
    delta = Run(((Loc(z, (0,)), STEP_VALUE), (w1, STEP_VALUE)))
    got = shift(delta, j, 0, 1)
    want_value = Add(Mul(Nat(0), w0), w0)
    assert got.pairs == (
        (Loc(z, (0, 0)), want_value),
        (w1, want_value),
    )


def test_shift_evaluates_ground_values():
    delta = Run(((w1, Add(j, Nat(1))),))
    assert shift(delta, j, 4, 1).pairs == ((IndexedVar("w", 5), Nat(5)),)


def test_unshift_keeps_final_conclusion_block():
    # frozen oracle: three chained copies, one witness slot each
    run = Run(((w3, Nat(6)), (w2, Nat(2)), (w1, Nat(1)), (w0, Nat(1))))
    assert unshift(run, 3, 1).pairs == ((w1, Nat(6)),)


def test_unshift_strips_matching_loc_suffix():
    run = Run(
        (
            (Loc(z, (0, 2)), Nat(6)),
            (Loc(z, (0, 1)), Nat(2)),
            (x, Nat(9)),
            (h0, Nat(3)),
        )
    )
    assert unshift(run, 3, 1).pairs == ((Loc(z, (0,)), Nat(6)),)


# ---------------------------------------------------------------------------
# rendering


def test_render_term_shapes():
    assert render_term(Nat(4)) == "4"
    assert render_term(Succ(h0)) == "h_0+1"
    assert render_term(Eigen("j", 0)) == "j"
    assert render_term(Eigen("j", 1)) == "j_1"
    assert render_term(w1) == "w_1"
    assert render_term(Add(x, Mul(y, z))) == "x+y*z"
    assert render_term(Mul(Add(x, y), z)) == "(x+y)*z"
    assert render_term(fact(Succ(x), y)) == "fact(x+1,y)"


def test_render_value_factors_step_products():
    assert render_value(STEP_VALUE) == "(j+1)w_0"
    assert render_value(Mul(Nat(1), w0)) == "1w_0"
    assert render_value(Add(Mul(Nat(2), w2), w2)) == "3w_2"
    assert render_value(Nat(5)) == "5"


def test_render_keys_and_runs():
    assert render_key(Loc(z, (0,))) == "loc(z)"
    assert render_key(Loc(z, (0, 2))) == "loc(z)@2"
    assert render_run(Run()) == "{}"
    assert render_run(Run(((h0, Nat(0)), (w0, Nat(1))))) == "{(h_0,0),(w_0,1)}"
    assert render_run(Run(((y, w0), (Loc(z, (0,)), STEP_VALUE)))) == "{(y,w_0),(loc(z),(j+1)w_0)}"


# ---------------------------------------------------------------------------
# properties

_leaf = st.one_of(
    st.integers(0, 6).map(Nat),
    st.sampled_from("uvxyz").map(Var),
    st.integers(0, 3).map(lambda s: Eigen("h", s)),
    st.integers(0, 3).map(lambda i: IndexedVar("w", i)),
)


def _branch(child):
    return st.one_of(
        child.map(Succ),
        st.tuples(child, child).map(lambda p: Add(*p)),
        st.tuples(child, child).map(lambda p: Mul(*p)),
        st.lists(child, min_size=1, max_size=3).map(
            lambda a: Compound("f", tuple(a))
        ),
    )


terms_st = st.recursive(_leaf, _branch, max_leaves=8)


@given(terms_st, terms_st)
@settings(max_examples=300)
def test_mgu_is_a_unifier(a, b):
    r = mgu(a, b)
    if r is not None:
        assert apply(r, a) == apply(r, b)


@given(terms_st, terms_st)
@settings(max_examples=300)
def test_mgu_result_is_idempotent(a, b):
    r = mgu(a, b)
    if r is not None:
        for _, v in r.pairs:
            assert apply(r, v) == v


@given(terms_st)
@settings(max_examples=200)
def test_eval_is_idempotent(t):
    assert eval_arith(eval_arith(t)) == eval_arith(t)


def _has_compound(t):
    if isinstance(t, Compound):
        return True
    if isinstance(t, Succ):
        return _has_compound(t.arg)
    if isinstance(t, (Add, Mul)):
        return _has_compound(t.left) or _has_compound(t.right)
    return False


@given(terms_st)
@settings(max_examples=200)
def test_ground_arithmetic_folds_to_a_literal(t):
    if is_ground(t) and not _has_compound(t):
        assert isinstance(eval_arith(t), Nat)
    assert term_vars(eval_arith(t)) <= term_vars(t)


# composition agrees with sequential application on search-shaped runs:
# disjoint domains, and values that do not mention either domain.


@st.composite
def _disjoint_runs(draw):
    names = ["a", "b", "c", "d", "e", "f"]
    n_old = draw(st.integers(0, 3))
    n_new = draw(st.integers(0, 3))
    keys = [Var(n) for n in names[: n_old + n_new]]
    outside = st.one_of(
        st.integers(0, 5).map(Nat),
        st.sampled_from("pq").map(Var),
        st.integers(0, 2).map(lambda i: IndexedVar("w", i)),
    )
    values = st.recursive(outside, _branch, max_leaves=4)
    older = Run(tuple((k, draw(values)) for k in keys[:n_old]))
    newer = Run(tuple((k, draw(values)) for k in keys[n_old:]))
    return newer, older


@given(_disjoint_runs(), terms_st)
@settings(max_examples=300)
def test_compose_matches_sequential_application(runs, t):
    newer, older = runs
    both = compose(newer, older)
    assert apply(both, t) == apply(newer, apply(older, t))


# unshifting the last copy of a shifted step run recovers that step's own
# bindings, with the step parameter instantiated to the copy number.


_J = Eigen("j", 0)


@st.composite
def _step_runs(draw):
    step_values = st.recursive(
        st.one_of(
            st.integers(0, 4).map(Nat),
            st.integers(0, 5).map(lambda i: IndexedVar("w", i)),
            st.just(_J),
        ),
        _branch,
        max_leaves=5,
    )
    keys: list = [IndexedVar("w", i) for i in draw(st.sets(st.integers(0, 5)))]
    keys += [Loc(Var(n), (0,)) for n in draw(st.sets(st.sampled_from("yz")))]
    keys += [Var(n) for n in draw(st.sets(st.sampled_from("uv")))]
    if draw(st.booleans()):
        keys.append(_J)
    return Run(tuple((k, draw(step_values)) for k in keys))


@given(_step_runs(), st.integers(1, 4), st.integers(1, 3))
@settings(max_examples=300)
def test_unshift_inverts_shift_of_the_last_copy(delta, k, m):
    at_copy = Run(((_J, Nat(k - 1)),))
    got = unshift(shift(delta, _J, k - 1, m), k, m)
    expected = tuple(
        (key, apply(at_copy, v))
        for key, v in delta.pairs
        if (isinstance(key, IndexedVar) and key.index >= m) or isinstance(key, Loc)
    )
    assert got.pairs == expected
