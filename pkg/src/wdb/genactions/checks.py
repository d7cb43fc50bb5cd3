"""Assertion checks that plans can name in an ``Assert`` step.

A check receives its decoded arguments, where ``{"ref": name}`` has been
replaced by the :class:`ResultRef` of that bound statement, and returns
``None`` when it holds or a failure message otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Optional

from ..engine import ast as A
from ..engine.database import ResultSet
from ..engine.evaluator import compile_expr
from ..engine.parser import parse_expr
from ..errors import IoError, ModelError
from ..shadow import ShadowState, diff, format_row, multiset, query_shadow
from ..values import row_key


@dataclass(frozen=True)
class ResultRef:
    name: str
    statement: A.Statement
    result: Any  # ResultSet, or affected-row count
    shadow: ShadowState  # state just before the statement ran

    def rows(self) -> list[tuple]:
        if not isinstance(self.result, ResultSet):
            raise ModelError(f"{self.name} is not a query result")
        return self.result.rows

    def reference(self) -> "ResultRef":
        """The same query answered by the shadow model."""
        if not isinstance(self.statement, A.Select):
            raise ModelError(f"{self.name} has no reference evaluation")
        return ResultRef(self.name, self.statement, query_shadow(self.shadow, self.statement), self.shadow)


@dataclass
class CheckEnv:
    db: Any
    shadow: ShadowState


CheckFn = Callable[[tuple, CheckEnv], Optional[str]]
CHECKS: dict[str, CheckFn] = {}
# Checks whose verdict does not depend on the engine's answers alone, so
# re-running them against reference results says nothing.
NO_REFERENCE = {"shadow_diff", "shadow_query"}


def check(name: str):
    def register(fn: CheckFn) -> CheckFn:
        CHECKS[name] = fn
        return fn

    return register


def _has(ref: ResultRef, row) -> bool:
    key = row_key(row)
    return any(row_key(r) == key for r in ref.rows())


@check("contains")
def contains(args, env):
    ref, row = args
    if _has(ref, row):
        return None
    return f"{format_row(row)} missing from {ref.name} ({len(ref.rows())} rows)"


@check("excludes")
def excludes(args, env):
    ref, row = args
    if not _has(ref, row):
        return None
    return f"{format_row(row)} present in {ref.name}"


def _is_one(v) -> bool:
    return type(v) is int and v == 1


@check("count_true_eq")
def count_true_eq(args, env):
    """|filtered| equals the number of rows of ``all`` where expr is exactly 1."""
    filtered, everything, table, expr_sql = args
    layout = tuple((table, c) for c in everything.result.columns)
    f = compile_expr(parse_expr(expr_sql), layout)
    expected = sum(1 for row in everything.rows() if _is_one(f(row)))
    got = len(filtered.rows())
    if got == expected:
        return None
    return f"|{filtered.name}| = {got} but predicate is 1 on {expected} rows of {everything.name}"


@check("multiset_eq")
def multiset_eq(args, env):
    a, b = args
    ma, mb = multiset(a.rows()), multiset(b.rows())
    if ma == mb:
        return None
    return f"{a.name} ({len(a.rows())} rows) and {b.name} ({len(b.rows())} rows) differ as multisets"


@check("card_sum")
def card_sum(args, env):
    a, b, union = args
    na, nb, nu = len(a.rows()), len(b.rows()), len(union.rows())
    if na + nb == nu:
        return None
    return f"|{a.name}| + |{b.name}| = {na} + {nb} but |{union.name}| = {nu}"


@check("shadow_diff")
def shadow_diff(args, env):
    found = diff(env.shadow, env.db)
    for d in found:
        if isinstance(d.error, IoError):
            raise d.error
    if not found:
        return None
    return "shadow and database differ:\n  " + "\n  ".join(str(d) for d in found[:8])


@check("shadow_query")
def shadow_query(args, env):
    (ref,) = args
    expected = ref.reference()
    if ref.statement.limit is not None:
        if len(ref.rows()) == len(expected.rows()):
            return None
        return f"{ref.name} returned {len(ref.rows())} rows, reference {len(expected.rows())}"
    if multiset(ref.rows()) == multiset(expected.rows()):
        return None
    return f"{ref.name} rows differ from reference evaluation"


def run_check(name: str, args: tuple, env: CheckEnv) -> Optional[str]:
    """Run a check; a failure is confirmed against reference results.

    If the check also fails when every referenced result is replaced by
    the shadow's answer, the property itself is wrong, and that is a
    harness defect rather than an engine bug.
    """
    fn = CHECKS.get(name)
    if fn is None:
        raise ModelError(f"unknown check {name}")
    message = fn(args, env)
    if message is None or name in NO_REFERENCE:
        return message
    reference_args = tuple(a.reference() if isinstance(a, ResultRef) else a for a in args)
    if fn(reference_args, env) is not None:
        raise ModelError(f"check {name} fails on reference results too: {message}")
    return message
