"""Random generators parameterized by a :class:`GenContext`."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

from ..engine import ast as A
from ..engine.evaluator import Scope, eval_expr
from ..shadow import ShadowState, TableModel
from ..values import TYPES, INT_MAX, INT_MIN, Value


class Unsatisfied(Exception):
    """A generator could not produce a value (e.g. pick from nothing)."""


@dataclass(frozen=True)
class Limits:
    max_depth: int = 3
    max_rows: int = 3
    null_prob: float = 0.1
    # Probability of drawing a literal from values already in the table.
    reuse_prob: float = 0.35


@dataclass
class GenContext:
    rng: random.Random
    shadow: ShadowState = field(default_factory=ShadowState)
    limits: Limits = field(default_factory=Limits)

    @classmethod
    def seeded(cls, seed: int, shadow: Optional[ShadowState] = None, limits: Optional[Limits] = None) -> "GenContext":
        return cls(random.Random(seed), shadow or ShadowState(), limits or Limits())


@dataclass(frozen=True)
class InScope:
    """One FROM source visible to a generated expression."""

    table: TableModel
    qualifier: Optional[str] = None  # None: refer to columns unqualified

    def refs(self) -> list[tuple[A.ColumnRef, str, int]]:
        return [
            (A.ColumnRef(self.qualifier, c), ty, i)
            for i, (c, ty) in enumerate(self.table.columns)
        ]


def pick(collection: Sequence, ctx: GenContext):
    items = list(collection)
    if not items:
        raise Unsatisfied("pick from an empty collection")
    return items[ctx.rng.randrange(len(items))]


# -- values -------------------------------------------------------------

_TEXT_ALPHABET = "abcxyzABXYZ019 %_'é"
_NUMERIC_TEXT = ("1", "0", "2.5", " 7", "1abc", ".5", "+3", "0x10", "-1", "5%", "1e3", "abc", "", "A", "Ab")
_BLOBS = (b"", b"\x00", b"1", b"ab", b"\xff\xfe", b"0", b"5")


def gen_value(column_type: str, ctx: GenContext, pool: Sequence[Value] = ()) -> Value:
    """A non-NULL value of ``column_type``, sometimes reused from ``pool``."""
    rng = ctx.rng
    if pool and rng.random() < ctx.limits.reuse_prob:
        v = pool[rng.randrange(len(pool))]
        if v is not None:
            return v
    if column_type == "INTEGER":
        r = rng.random()
        if r < 0.8:
            return rng.randint(-3, 10)
        if r < 0.9:
            return rng.randint(-1000, 1000)
        return rng.choice((INT_MIN, INT_MAX, 2**31, -(2**31)))
    if column_type == "REAL":
        r = rng.random()
        if r < 0.6:
            return rng.randint(-12, 40) / 4
        if r < 0.8:
            return float(rng.randint(-3, 10))
        return rng.choice((0.1, -0.0, 1e20, -1.5e-7, 3.141592653589793, 1e300))
    if column_type == "TEXT":
        if rng.random() < 0.4:
            return rng.choice(_NUMERIC_TEXT)
        return "".join(rng.choice(_TEXT_ALPHABET) for _ in range(rng.randint(0, 5)))
    if column_type == "BLOB":
        if rng.random() < 0.5:
            return rng.choice(_BLOBS)
        return bytes(rng.randrange(256) for _ in range(rng.randint(0, 4)))
    raise ValueError(f"unknown column type {column_type}")


def column_pool(table: TableModel, index: int, cap: int = 32) -> list[Value]:
    vals = [r[index] for r in table.rows[-cap:]]
    return [v for v in vals if v is not None]


def gen_row(schema: Sequence[tuple[str, str]] | TableModel, ctx: GenContext) -> tuple[Value, ...]:
    """One value per column, each conforming to the column's type."""
    table = schema if isinstance(schema, TableModel) else None
    columns = table.columns if table else tuple(schema)
    if not columns:
        raise ValueError("gen_row needs at least one column")
    row = []
    for i, (_, ty) in enumerate(columns):
        if ctx.rng.random() < ctx.limits.null_prob:
            row.append(None)
        else:
            row.append(gen_value(ty, ctx, column_pool(table, i) if table else ()))
    return tuple(row)


def gen_literal(ctx: GenContext, column_type: Optional[str] = None, pool: Sequence[Value] = ()) -> A.Literal:
    rng = ctx.rng
    r = rng.random()
    if r < 0.08:
        return A.NULL
    if r < 0.16:
        return A.TRUE if rng.random() < 0.5 else A.FALSE
    ty = column_type if column_type and rng.random() < 0.8 else rng.choice(TYPES)
    return A.Literal(gen_value(ty, ctx, pool if ty == column_type else ()))


# -- expressions --------------------------------------------------------

class _ExprGen:
    def __init__(self, scope: Sequence[InScope], ctx: GenContext):
        self.ctx = ctx
        self.rng = ctx.rng
        self.cols = []
        for src in scope:
            for ref, ty, i in src.refs():
                self.cols.append((ref, ty, column_pool(src.table, i)))

    def column(self):
        return self.cols[self.rng.randrange(len(self.cols))]

    def leaf(self) -> A.Expression:
        if self.cols and self.rng.random() < 0.55:
            return self.column()[0]
        return gen_literal(self.ctx)

    def operand_pair(self, depth: int) -> tuple[A.Expression, A.Expression]:
        """Two comparison operands, usually a column and a same-typed literal."""
        rng = self.rng
        if self.cols and rng.random() < 0.7:
            ref, ty, pool = self.column()
            r = rng.random()
            if r < 0.7:
                other: A.Expression = gen_literal(self.ctx, ty, pool)
            elif r < 0.85:
                other = self.column()[0]
            else:
                other = self.value(depth - 1)
            return (ref, other) if rng.random() < 0.75 else (other, ref)
        return self.value(depth - 1), self.value(depth - 1)

    def value(self, depth: int) -> A.Expression:
        if depth <= 0 or self.rng.random() < 0.6:
            return self.leaf()
        return self.boolean(depth)

    def like(self, depth: int) -> A.Expression:
        rng = self.rng
        text_cols = [c for c in self.cols if c[1] == "TEXT"]
        if text_cols and rng.random() < 0.6:
            ref, _, pool = text_cols[rng.randrange(len(text_cols))]
            subject: A.Expression = ref
        else:
            subject = self.value(depth - 1)
            pool = []
        return A.Binary("LIKE", subject, A.Literal(self.pattern(pool)) if rng.random() < 0.8 else self.value(depth - 1))

    def pattern(self, pool: Sequence[Value]) -> str:
        rng = self.rng
        texts = [v for v in pool if isinstance(v, str)]
        base = rng.choice(texts) if texts and rng.random() < 0.6 else rng.choice(_NUMERIC_TEXT + ("a", "B", "x"))
        chars = list(base)
        for _ in range(rng.randint(0, 2)):
            pos = rng.randint(0, len(chars))
            chars.insert(pos, rng.choice("%_"))
        if chars and rng.random() < 0.3:
            i = rng.randrange(len(chars))
            chars[i] = chars[i].swapcase()
        return "".join(chars)

    def boolean(self, depth: int) -> A.Expression:
        """An expression whose root always yields 1, 0 or NULL."""
        rng = self.rng
        if depth <= 0:
            kind = rng.choice(("cmp", "cmp", "cmp", "isnull", "like", "const"))
        else:
            kind = rng.choice(
                ("cmp", "cmp", "and", "and", "or", "or", "not", "isnull", "like", "between", "paren", "const")
            )
        if kind == "cmp":
            left, right = self.operand_pair(depth)
            return A.Binary(rng.choice(A.COMPARISONS), left, right)
        if kind == "const":
            return rng.choice((A.TRUE, A.FALSE))
        if kind == "isnull":
            op = "IS NULL" if rng.random() < 0.5 else "IS NOT NULL"
            return A.Unary(op, self.value(depth - 1))
        if kind == "like":
            return self.like(depth)
        if kind in ("and", "or"):
            return A.Binary(kind.upper(), self.any(depth - 1), self.any(depth - 1))
        if kind == "not":
            return A.Unary("NOT", self.any(depth - 1))
        if kind == "between":
            operand, low = self.operand_pair(depth)
            high = gen_literal(self.ctx, None) if rng.random() < 0.3 else self.operand_pair(depth)[1]
            return A.Between(operand, low, high)
        return A.Paren(self.boolean(depth - 1))

    def any(self, depth: int) -> A.Expression:
        if depth <= 0 or self.rng.random() < 0.25:
            return self.leaf() if self.rng.random() < 0.5 else self.boolean(0)
        return self.boolean(depth)


def gen_expr(
    scope: Sequence[InScope],
    ctx: GenContext,
    depth: Optional[int] = None,
    *,
    boolean: bool = False,
) -> A.Expression:
    """A well-scoped expression of at most ``depth`` nesting levels.

    With ``boolean`` the root is always a predicate (comparison, AND/OR,
    NOT, IS [NOT] NULL, LIKE, BETWEEN or TRUE/FALSE), so it evaluates to
    1, 0 or NULL on every row.
    """
    g = _ExprGen(scope, ctx)
    depth = ctx.limits.max_depth if depth is None else depth
    if boolean:
        return g.boolean(depth)
    if depth <= 0:
        return g.leaf()
    return g.any(depth)


def layout_of(scope: Sequence[InScope]) -> tuple:
    return tuple((src.qualifier or src.table.name, c) for src in scope for c in src.table.column_names)


def rectify(candidate: A.Expression, value: Value) -> A.Expression:
    """Wrap a boolean candidate so it evaluates to 1 given its current value."""
    if value is None:
        return A.Unary("IS NULL", candidate)
    if value == 1:
        return candidate
    if value == 0:
        return A.Unary("NOT", candidate)
    raise ValueError(f"candidate is not boolean-valued: {value!r}")


def gen_pivot_true_expr(
    source: InScope | TableModel,
    pivot_row: Sequence[Value],
    ctx: GenContext,
    depth: Optional[int] = None,
) -> A.Expression:
    """A predicate over ``source`` that is TRUE for ``pivot_row``."""
    scope = source if isinstance(source, InScope) else InScope(source)
    candidate = gen_expr([scope], ctx, depth, boolean=True)
    value = eval_expr(candidate, Scope(layout_of([scope]), tuple(pivot_row)))
    return rectify(candidate, value)
