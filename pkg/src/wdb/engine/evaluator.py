"""Three-valued expression evaluation.

Expressions are compiled once against a row layout (a tuple of
``(qualifier, column)`` pairs) into closures taking a row tuple. Boolean
results are always the integers 1 and 0, or ``None`` for unknown.
"""

from __future__ import annotations

import re
from functools import lru_cache
from operator import itemgetter
from typing import Callable, Mapping, Optional, Sequence

from ..errors import InternalInvariantViolation, UserError
from ..values import Value, compare, to_text, truth
from . import ast as A

Layout = tuple[tuple[Optional[str], str], ...]
Compiled = Callable[[tuple], Value]

_CMP = {
    "=": lambda c: c == 0,
    "<>": lambda c: c != 0,
    "<": lambda c: c < 0,
    "<=": lambda c: c <= 0,
    ">": lambda c: c > 0,
    ">=": lambda c: c >= 0,
}


def resolve(layout: Layout, ref: A.ColumnRef) -> int:
    hits = [
        i
        for i, (qual, col) in enumerate(layout)
        if col == ref.column and (ref.table is None or qual == ref.table)
    ]
    if not hits:
        name = f"{ref.table}.{ref.column}" if ref.table else ref.column
        raise UserError(f"no such column: {name}", kind="schema")
    if len(hits) > 1:
        raise UserError(f"ambiguous column name: {ref.column}", kind="schema")
    return hits[0]


@lru_cache(maxsize=4096)
def _like_regex(pattern: str) -> re.Pattern:
    parts = []
    for ch in pattern:
        if ch == "%":
            parts.append(".*")
        elif ch == "_":
            parts.append(".")
        else:
            parts.append(re.escape(ch))
    # re.ASCII limits IGNORECASE to ASCII letters, as SQLite does.
    return re.compile("".join(parts), re.DOTALL | re.IGNORECASE | re.ASCII)


def like(subject: Value, pattern: Value, mutant: Optional[str] = None) -> Value:
    if mutant == "M4" and None not in (subject, pattern) and (type(subject) is not str or type(pattern) is not str):
        raise InternalInvariantViolation("LIKE operand is not TEXT")
    if type(subject) is bytes or type(pattern) is bytes:
        # As in the reference shell: a BLOB operand never matches, even
        # against NULL, and this is decided before the NULL check.
        return 0
    if subject is None or pattern is None:
        return None
    return 1 if _like_regex(to_text(pattern)).fullmatch(to_text(subject)) else 0


def kleene_not(v: Value) -> Value:
    t = truth(v)
    return None if t is None else (0 if t else 1)


def kleene_and(a: Value, b: Value) -> Value:
    ta, tb = truth(a), truth(b)
    if ta is False or tb is False:
        return 0
    if ta is None or tb is None:
        return None
    return 1


def kleene_or(a: Value, b: Value) -> Value:
    ta, tb = truth(a), truth(b)
    if ta or tb:
        return 1
    if ta is None or tb is None:
        return None
    return 0


def compare_op(op: str, a: Value, b: Value) -> Value:
    if a is None or b is None:
        return None
    return 1 if _CMP[op](compare(a, b)) else 0


def compile_expr(e: A.Expression, layout: Layout, mutant: Optional[str] = None) -> Compiled:
    """Compile ``e`` for rows shaped like ``layout``.

    Column resolution happens here, so an unresolvable reference raises
    ``UserError`` even when no row is ever evaluated.
    """
    if isinstance(e, A.ColumnRef):
        return itemgetter(resolve(layout, e))
    if isinstance(e, A.Literal):
        value = e.value
        return lambda row: value
    if isinstance(e, A.Paren):
        return compile_expr(e.inner, layout, mutant)
    if isinstance(e, A.Unary):
        f = compile_expr(e.operand, layout, mutant)
        if e.op == "NOT":
            return lambda row: kleene_not(f(row))
        if e.op == "IS NULL":
            return lambda row: 1 if f(row) is None else 0
        if e.op == "IS NOT NULL":
            return lambda row: 0 if f(row) is None else 1
        raise InternalInvariantViolation(f"unknown unary operator {e.op}")
    if isinstance(e, A.Between):
        x = compile_expr(e.operand, layout, mutant)
        lo = compile_expr(e.low, layout, mutant)
        hi = compile_expr(e.high, layout, mutant)

        def between(row):
            v = x(row)
            return kleene_and(compare_op(">=", v, lo(row)), compare_op("<=", v, hi(row)))

        return between
    if isinstance(e, A.Binary):
        left = compile_expr(e.left, layout, mutant)
        right = compile_expr(e.right, layout, mutant)
        return _binary(e.op, left, right, mutant)
    raise InternalInvariantViolation(f"not an expression node: {e!r}")


def _binary(op: str, left: Compiled, right: Compiled, mutant: Optional[str]) -> Compiled:
    if op == "AND":
        if mutant == "M2":
            # M2: any NULL operand poisons the conjunction.
            def broken_and(row):
                a, b = truth(left(row)), truth(right(row))
                if a is None or b is None:
                    return None
                return 1 if a and b else 0

            return broken_and

        def and_(row):
            a = truth(left(row))
            if a is False:
                return 0
            b = truth(right(row))
            if b is False:
                return 0
            return None if a is None or b is None else 1

        return and_
    if op == "OR":
        if mutant == "M2":
            def broken_or(row):
                a, b = truth(left(row)), truth(right(row))
                if a is None or b is None:
                    return None
                return 1 if a or b else 0

            return broken_or

        def or_(row):
            a = truth(left(row))
            if a:
                return 1
            b = truth(right(row))
            if b:
                return 1
            return None if a is None or b is None else 0

        return or_
    if op == "LIKE":
        return lambda row: like(left(row), right(row), mutant)
    test = _CMP.get(op)
    if test is None:
        raise InternalInvariantViolation(f"unknown binary operator {op}")

    def cmp(row):
        a = left(row)
        if a is None:
            return None
        b = right(row)
        if b is None:
            return None
        return 1 if test(compare(a, b)) else 0

    return cmp


class Scope:
    """A single row binding: column names (optionally qualified) to values."""

    __slots__ = ("layout", "row")

    def __init__(self, layout: Sequence[tuple[Optional[str], str]] = (), row: Sequence[Value] = ()):
        if len(layout) != len(row):
            raise ValueError("layout and row widths differ")
        self.layout: Layout = tuple(layout)
        self.row = tuple(row)

    @classmethod
    def of(cls, qualifier: Optional[str], columns: Sequence[str], row: Sequence[Value]) -> "Scope":
        return cls(tuple((qualifier, c) for c in columns), row)

    @classmethod
    def from_mapping(cls, mapping: Mapping) -> "Scope":
        layout = []
        for key in mapping:
            layout.append(key if isinstance(key, tuple) else (None, key))
        return cls(tuple(layout), tuple(mapping.values()))


def eval_expr(e: A.Expression, scope: Scope | Mapping | None = None, *, mutant: Optional[str] = None) -> Value:
    if scope is None:
        scope = Scope()
    elif not isinstance(scope, Scope):
        scope = Scope.from_mapping(scope)
    return compile_expr(e, scope.layout, mutant)(scope.row)


def conjuncts(e: A.Expression) -> list[A.Expression]:
    """Split a predicate on its top-level ANDs."""
    e = A.strip_parens(e) if isinstance(e, A.Paren) else e
    if isinstance(e, A.Binary) and e.op == "AND":
        return conjuncts(e.left) + conjuncts(e.right)
    return [e]


def fold_constants(e: A.Expression, mutant: Optional[str] = None) -> A.Expression:
    """Replace column-free composite subtrees by their value."""
    if isinstance(e, (A.ColumnRef, A.Literal)):
        return e
    if A.is_constant(e):
        return A.Literal(eval_expr(e, mutant=mutant))
    if isinstance(e, A.Paren):
        return A.Paren(fold_constants(e.inner, mutant))
    if isinstance(e, A.Unary):
        return A.Unary(e.op, fold_constants(e.operand, mutant))
    if isinstance(e, A.Binary):
        return A.Binary(e.op, fold_constants(e.left, mutant), fold_constants(e.right, mutant))
    if isinstance(e, A.Between):
        return A.Between(
            fold_constants(e.operand, mutant),
            fold_constants(e.low, mutant),
            fold_constants(e.high, mutant),
        )
    raise InternalInvariantViolation(f"not an expression node: {e!r}")


def drop_constant_terms(e: A.Expression) -> Optional[A.Expression]:
    """The M1 defect: constant boolean terms are skipped instead of hoisted.

    Constant operands of AND/OR vanish and the operator collapses onto the
    remaining operand; a wholly constant predicate disappears entirely.
    """
    if A.is_constant(e):
        return None
    if isinstance(e, A.Paren):
        inner = drop_constant_terms(e.inner)
        return None if inner is None else A.Paren(inner)
    if isinstance(e, A.Binary) and e.op in ("AND", "OR"):
        left = drop_constant_terms(e.left)
        right = drop_constant_terms(e.right)
        if left is None:
            return right
        if right is None:
            return left
        return A.Binary(e.op, left, right)
    if isinstance(e, A.Unary) and e.op == "NOT":
        inner = drop_constant_terms(e.operand)
        return None if inner is None else A.Unary("NOT", inner)
    return e
