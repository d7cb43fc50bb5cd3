"""Generation by execution: interaction sequences drawn from an R/W/C mix.

Every statement is generated against the shadow state, so it only
mentions tables and columns that exist at its position in the sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .engine import ast as A
from .errors import ConfigError
from .genactions.generators import (
    GenContext,
    InScope,
    column_pool,
    gen_expr,
    gen_row,
    gen_value,
)
from .shadow import ShadowState, TableModel, apply
from .values import TYPES

MAX_TABLES = 12
MAX_COLUMNS = 8
DROP_PROB = 0.05
# Cross products in generated reads stay below this many row pairs.
MAX_PRODUCT = 2500


@dataclass(frozen=True)
class WorkloadDistribution:
    read: float = 1.0
    write: float = 1.0
    create: float = 1.0

    def __post_init__(self):
        weights = (self.read, self.write, self.create)
        if any(not math.isfinite(w) or w < 0 for w in weights):
            raise ConfigError("workload weights must be finite and non-negative")
        if sum(weights) == 0:
            raise ConfigError("workload weights must not all be zero")

    @classmethod
    def parse(cls, text: str) -> "WorkloadDistribution":
        parts = text.split(",")
        if len(parts) != 3:
            raise ConfigError(f"expected R,W,C, got {text!r}")
        try:
            return cls(*(float(p) for p in parts))
        except ValueError as exc:
            raise ConfigError(f"bad weight in {text!r}") from exc

    def normalized(self) -> tuple[float, float, float]:
        total = self.read + self.write + self.create
        return self.read / total, self.write / total, self.create / total

    def __str__(self) -> str:
        return ",".join(f"{w:g}" for w in (self.read, self.write, self.create))


def draw_class(st: ShadowState, dist: WorkloadDistribution, ctx: GenContext) -> str:
    if not st.tables:
        return "create"
    r, w, _ = dist.normalized()
    x = ctx.rng.random()
    if x < r:
        return "read"
    if x < r + w:
        return "write"
    return "create"


def gen_interaction(st: ShadowState, dist: WorkloadDistribution, ctx: GenContext) -> A.Statement:
    ctx.shadow = st
    cls = draw_class(st, dist, ctx)
    if cls == "create":
        return gen_schema_change(st, ctx)
    if cls == "write":
        return gen_write(st, ctx)
    return gen_select(st, ctx)


def gen_interactions(
    n: int, dist: WorkloadDistribution, st: ShadowState, ctx: GenContext
) -> tuple[list[A.Statement], ShadowState]:
    """``n`` interactions, each well-formed after the ones before it."""
    if n < 0:
        raise ConfigError("interaction count must be non-negative")
    out = []
    for _ in range(n):
        stmt = gen_interaction(st, dist, ctx)
        st = apply(st, stmt)
        out.append(stmt)
    return out, st


# -- schema -------------------------------------------------------------

def gen_schema_change(st: ShadowState, ctx: GenContext) -> A.Statement:
    rng = ctx.rng
    if st.tables and (len(st.tables) >= MAX_TABLES or rng.random() < DROP_PROB):
        return A.DropTable(rng.choice(st.table_names()))
    return gen_create(st, ctx)


def gen_create(st: ShadowState, ctx: GenContext) -> A.CreateTable:
    n = 0
    while f"t{n}" in st.tables:
        n += 1
    width = ctx.rng.randint(1, MAX_COLUMNS)
    names = [chr(ord("a") + i) for i in range(width)]
    return A.CreateTable(f"t{n}", tuple((c, ctx.rng.choice(TYPES)) for c in names))


# -- writes -------------------------------------------------------------

def _pick_table(st: ShadowState, ctx: GenContext) -> TableModel:
    return st.tables[ctx.rng.choice(st.table_names())]


def gen_write(st: ShadowState, ctx: GenContext) -> A.Statement:
    t = _pick_table(st, ctx)
    x = ctx.rng.random()
    if x < 0.5:
        return gen_insert(t, ctx)
    if x < 0.75:
        return gen_update(t, ctx)
    return gen_delete(t, ctx)


def gen_insert(t: TableModel, ctx: GenContext) -> A.Insert:
    rng = ctx.rng
    rows = [gen_row(t, ctx) for _ in range(rng.randint(1, ctx.limits.max_rows))]
    if rng.random() < 0.3:
        idx = list(range(len(t.columns)))
        rng.shuffle(idx)
        idx = idx[: rng.randint(1, len(idx))]
        return A.Insert(
            t.name,
            tuple(t.column_names[i] for i in idx),
            tuple(tuple(r[i] for i in idx) for r in rows),
        )
    return A.Insert(t.name, None, tuple(rows))


def _where(t: TableModel, ctx: GenContext) -> A.Expression:
    return gen_expr([InScope(t)], ctx, boolean=ctx.rng.random() < 0.8)


def gen_assignment_value(t: TableModel, index: int, ctx: GenContext) -> A.Expression:
    """A SET expression whose value always fits column ``index``."""
    rng = ctx.rng
    ty = t.column_types[index]
    x = rng.random()
    same_type = [i for i, c in enumerate(t.column_types) if c == ty]
    if x < 0.3:
        return A.ColumnRef(None, t.column_names[rng.choice(same_type)])
    if ty == "INTEGER" and x < 0.5:
        return gen_expr([InScope(t)], ctx, 2, boolean=True)
    if rng.random() < ctx.limits.null_prob:
        return A.NULL
    return A.Literal(gen_value(ty, ctx, column_pool(t, index)))


def gen_update(t: TableModel, ctx: GenContext) -> A.Update:
    rng = ctx.rng
    idx = list(range(len(t.columns)))
    rng.shuffle(idx)
    sets = tuple(
        (t.column_names[i], gen_assignment_value(t, i, ctx)) for i in idx[: rng.randint(1, min(2, len(idx)))]
    )
    where = _where(t, ctx) if rng.random() < 0.8 else None
    return A.Update(t.name, sets, where)


def gen_delete(t: TableModel, ctx: GenContext) -> A.Delete:
    return A.Delete(t.name, _where(t, ctx) if ctx.rng.random() < 0.9 else None)


# -- reads --------------------------------------------------------------

def gen_select_core(
    st: ShadowState,
    ctx: GenContext,
    width: Optional[int] = None,
    tables: Optional[list[TableModel]] = None,
) -> A.Select:
    """One SELECT core; ``width`` fixes the number of result columns."""
    rng = ctx.rng
    if tables is None:
        t = _pick_table(st, ctx)
        tables = [t]
        if rng.random() < 0.2:
            u = _pick_table(st, ctx)
            if max(len(t.rows), 1) * max(len(u.rows), 1) <= MAX_PRODUCT:
                tables.append(u)
    if len(tables) == 1:
        scope = [InScope(tables[0])]
        sources: tuple[A.Source, ...] = (A.Source(tables[0].name),)
    else:
        scope = [InScope(tb, f"s{i}") for i, tb in enumerate(tables)]
        sources = tuple(A.Source(tb.name, f"s{i}") for i, tb in enumerate(tables))
    refs = [ref for src in scope for ref, _, _ in src.refs()]
    if width is None and rng.random() < 0.35:
        items: tuple = (A.Star(),)
    else:
        n = width if width is not None else rng.randint(1, 3)
        items = tuple(
            rng.choice(refs) if rng.random() < 0.8 else gen_expr(scope, ctx, 1) for _ in range(n)
        )
    where = gen_expr(scope, ctx, boolean=rng.random() < 0.8) if rng.random() < 0.7 else None
    return A.Select(items, sources, where, distinct=rng.random() < 0.15)


def select_width(core: A.Select, st: ShadowState) -> int:
    n = 0
    for item in core.items:
        if isinstance(item, A.Star):
            n += sum(len(st.tables[src.table].columns) for src in core.sources)
        else:
            n += 1
    return n


def gen_select(st: ShadowState, ctx: GenContext, allow_limit: bool = True) -> A.Select:
    rng = ctx.rng
    head = gen_select_core(st, ctx)
    compound: tuple[A.Select, ...] = ()
    if rng.random() < 0.1:
        compound = (gen_select_core(st, ctx, width=select_width(head, st)),)
    limit = rng.randint(0, 5) if allow_limit and rng.random() < 0.2 else None
    return A.Select(head.items, head.sources, head.where, head.distinct, compound, limit)
