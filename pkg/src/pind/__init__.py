"""Interpreter for a small logic language with arithmetic induction.

The package is split along the pipeline: ``terms`` (first-order terms and
substitution runs), ``syntax`` (surface parser and level checks), ``prover``
(proof search producing an explicit tree), ``executor`` (interactive replay
of a finished proof), ``protocol`` (JSON-lines event encoding) and ``cli``.
"""

from pind.terms import (
    Add,
    Compound,
    Eigen,
    IndexedVar,
    Loc,
    Mul,
    Nat,
    Run,
    Succ,
    Var,
    apply,
    compose,
    mgu,
)

__all__ = [
    "Add",
    "Compound",
    "Eigen",
    "IndexedVar",
    "Loc",
    "Mul",
    "Nat",
    "Run",
    "Succ",
    "Var",
    "apply",
    "compose",
    "mgu",
]
