"""Built-in property plans.

Each factory returns a :class:`PropertyPlan`; generation happens when the
plan runs, against the shadow state current at that moment.
"""

from __future__ import annotations

from typing import Callable

from .engine import ast as A
from .engine.printer import expr_sql
from .errors import ConfigError
from .genactions.generators import InScope, gen_expr, gen_pivot_true_expr, gen_row
from .genactions.plan import (
    Assert,
    Assume,
    Gen,
    Interact,
    Let,
    Pick,
    PropertyPlan,
    ReopenDatabase,
)
from .workload import MAX_PRODUCT, gen_select, gen_select_core, select_width

PQS = "PQS"
NOREC = "NoREC"
TLP = "TLP"
DELETE_SELECT = "Delete-Select"
UNION_ALL = "UnionAll"
DIFFERENTIAL = "Differential"
COMMUTATIVITY = "Commutativity"


def _tables(env, ctx):
    return [ctx.shadow.tables[n] for n in ctx.shadow.table_names()]


def _nonempty_tables(env, ctx):
    return [t for t in _tables(env, ctx) if t.rows]


def _fresh(env, ctx, name):
    """Current shadow version of a previously picked table."""
    return ctx.shadow.tables[env[name].name]


def _insert(t, row) -> A.Insert:
    return A.Insert(t.name, None, (tuple(row),))


def pqs_plan() -> PropertyPlan:
    """A query built to be true for a pivot pair must return that pair."""

    def pairs(env, ctx):
        ts = _tables(env, ctx)
        return [
            (t1, t2)
            for t1 in ts
            for t2 in ts
            if (len(t1.rows) + 2) * (len(t2.rows) + 2) <= MAX_PRODUCT
        ]

    def pivot(alias, table_key, row_key):
        def fn(env, ctx):
            return gen_pivot_true_expr(InScope(_fresh(env, ctx, table_key), alias), env[row_key], ctx)

        return fn

    def query(env):
        t1, t2 = env["t1"], env["t2"]
        items = (A.ColumnRef("a", t1.column_names[env["c1"]]), A.ColumnRef("b", t2.column_names[env["c2"]]))
        where = A.Binary("AND", env["p1"], env["p2"])
        return A.Select(items, (A.Source(t1.name, "a"), A.Source(t2.name, "b")), where)

    return PropertyPlan(PQS, [
        Pick("tables", pairs),
        Let("t1", lambda env: env["tables"][0], uses=("tables",)),
        Let("t2", lambda env: env["tables"][1], uses=("tables",)),
        Pick("c1", lambda env, ctx: range(len(env["t1"].columns)), uses=("t1",)),
        Pick("c2", lambda env, ctx: range(len(env["t2"].columns)), uses=("t2",)),
        Gen("r1", lambda env, ctx: gen_row(env["t1"], ctx), uses=("t1",)),
        Gen("r2", lambda env, ctx: gen_row(env["t2"], ctx), uses=("t2",)),
        Interact(lambda env: _insert(env["t1"], env["r1"]), uses=("t1", "r1")),
        Interact(lambda env: _insert(env["t2"], env["r2"]), uses=("t2", "r2")),
        Gen("p1", pivot("a", "t1", "r1"), uses=("t1", "r1")),
        Gen("p2", pivot("b", "t2", "r2"), uses=("t2", "r2")),
        Interact(query, bind="rs", uses=("t1", "t2", "c1", "c2", "p1", "p2")),
        Let("pivot", lambda env: (env["r1"][env["c1"]], env["r2"][env["c2"]]), uses=("r1", "r2", "c1", "c2")),
        Assert("contains", "rs", "pivot"),
    ])


def norec_plan() -> PropertyPlan:
    """Filtering in WHERE counts the same rows as evaluating the predicate per row."""
    return PropertyPlan(NOREC, [
        Pick("t", _nonempty_tables),
        Gen("p", lambda env, ctx: gen_expr([InScope(env["t"])], ctx, boolean=True), uses=("t",)),
        Interact(lambda env: A.Select((A.Star(),), (A.Source(env["t"].name),), env["p"]), bind="filtered", uses=("t", "p")),
        Interact(lambda env: A.Select((A.Star(),), (A.Source(env["t"].name),)), bind="all", uses=("t",)),
        Let("table", lambda env: env["t"].name, uses=("t",)),
        Let("expr", lambda env: expr_sql(env["p"]), uses=("p",)),
        Assert("count_true_eq", "filtered", "all", "table", "expr"),
    ])


def tlp_partitions(t: str, p: A.Expression, q: A.Expression) -> A.Select:
    def part(extra):
        return A.Select((A.Star(),), (A.Source(t),), A.Binary("AND", p, extra))

    first = part(q)
    rest = (part(A.Unary("NOT", q)), part(A.Unary("IS NULL", q)))
    return A.Select(first.items, first.sources, first.where, compound=rest)


def tlp_where_plan() -> PropertyPlan:
    """WHERE p equals the union of p split three ways by any p'."""
    return PropertyPlan(TLP, [
        Pick("t", _tables),
        Gen("p", lambda env, ctx: gen_expr([InScope(env["t"])], ctx), uses=("t",)),
        Gen("q", lambda env, ctx: gen_expr([InScope(env["t"])], ctx), uses=("t",)),
        Interact(lambda env: A.Select((A.Star(),), (A.Source(env["t"].name),), env["p"]), bind="whole", uses=("t", "p")),
        Interact(lambda env: tlp_partitions(env["t"].name, env["p"], env["q"]), bind="parts", uses=("t", "p", "q")),
        Assert("multiset_eq", "whole", "parts"),
    ])


def delete_select_plan() -> PropertyPlan:
    """Rows removed by DELETE ... WHERE p are no longer matched by p."""
    return PropertyPlan(DELETE_SELECT, [
        Pick("t", _nonempty_tables),
        Pick("r", lambda env, ctx: env["t"].rows, uses=("t",)),
        Gen("p", lambda env, ctx: gen_pivot_true_expr(env["t"], env["r"], ctx), uses=("t", "r")),
        Interact(lambda env: A.Delete(env["t"].name, env["p"]), uses=("t", "p")),
        Interact(lambda env: A.Select((A.Star(),), (A.Source(env["t"].name),), env["p"]), bind="rs", uses=("t", "p")),
        Assert("excludes", "rs", "r"),
    ])


def union_all_plan() -> PropertyPlan:
    """|s1| + |s2| = |s1 UNION ALL s2| when the arities agree."""

    def second(env, ctx):
        if ctx.rng.random() < 0.7:
            return gen_select_core(ctx.shadow, ctx, width=select_width(env["s1"], ctx.shadow))
        return gen_select_core(ctx.shadow, ctx)

    def union(env):
        s1 = env["s1"]
        return A.Select(s1.items, s1.sources, s1.where, s1.distinct, (env["s2"],))

    return PropertyPlan(UNION_ALL, [
        Pick("t", _tables),  # the shadow must have something to select from
        Gen("s1", lambda env, ctx: gen_select_core(ctx.shadow, ctx)),
        Gen("s2", second, uses=("s1",)),
        Gen("w1", lambda env, ctx: select_width(env["s1"], ctx.shadow), uses=("s1",)),
        Gen("w2", lambda env, ctx: select_width(env["s2"], ctx.shadow), uses=("s2",)),
        Assume(lambda env: env["w1"] == env["w2"], "operands differ in arity", uses=("w1", "w2")),
        Interact(lambda env: env["s1"], bind="rs1", uses=("s1",)),
        Interact(lambda env: env["s2"], bind="rs2", uses=("s2",)),
        Interact(union, bind="rs", uses=("s1", "s2")),
        Assert("card_sum", "rs1", "rs2", "rs"),
    ])


def shadow_diff_plan(reopen: bool = False) -> PropertyPlan:
    """The database holds exactly what the shadow says, before and after a reopen."""
    steps = []
    if reopen:
        steps.append(Interact(lambda env: ReopenDatabase()))
    steps += [
        Assert("shadow_diff"),
        Pick("t", _tables),
        Gen("s", lambda env, ctx: gen_select(ctx.shadow, ctx)),
        Interact(lambda env: env["s"], bind="rs", uses=("s",)),
        Assert("shadow_query", "rs"),
    ]
    return PropertyPlan(DIFFERENTIAL, steps)


def commutativity_plan() -> PropertyPlan:
    """p AND q selects the same rows as q AND p."""

    def where(a, b):
        return lambda env: A.Select((A.Star(),), (A.Source(env["t"].name),), A.Binary("AND", env[a], env[b]))

    return PropertyPlan(COMMUTATIVITY, [
        Pick("t", _tables),
        Gen("p", lambda env, ctx: gen_expr([InScope(env["t"])], ctx), uses=("t",)),
        Gen("q", lambda env, ctx: gen_expr([InScope(env["t"])], ctx), uses=("t",)),
        Interact(where("p", "q"), bind="rs1", uses=("t", "p", "q")),
        Interact(where("q", "p"), bind="rs2", uses=("t", "p", "q")),
        Assert("multiset_eq", "rs1", "rs2"),
    ])


# CLI name -> factory taking the plan's random stream.
ORACLES: dict[str, Callable] = {
    "pqs": lambda rng: pqs_plan(),
    "norec": lambda rng: norec_plan(),
    "tlp": lambda rng: tlp_where_plan(),
    "delsel": lambda rng: delete_select_plan(),
    "unionall": lambda rng: union_all_plan(),
    "shadow": lambda rng: shadow_diff_plan(reopen=rng.random() < 0.5),
    "commut": lambda rng: commutativity_plan(),
}
DEFAULT_ORACLES = ("pqs", "norec", "tlp", "delsel", "unionall", "shadow")
LABELS = {
    "pqs": PQS,
    "norec": NOREC,
    "tlp": TLP,
    "delsel": DELETE_SELECT,
    "unionall": UNION_ALL,
    "shadow": DIFFERENTIAL,
    "commut": COMMUTATIVITY,
}


def parse_oracles(text: str) -> tuple[str, ...]:
    if text.strip() in ("", "all"):
        return DEFAULT_ORACLES
    names = tuple(n.strip() for n in text.split(",") if n.strip())
    unknown = [n for n in names if n not in ORACLES]
    if unknown:
        raise ConfigError(f"unknown oracle(s) {', '.join(unknown)}; choose from {', '.join(ORACLES)}")
    return names
