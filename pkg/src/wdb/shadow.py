"""The generator's model of the database.

A :class:`ShadowState` is immutable; :func:`apply` returns a new state.
Evaluation here is deliberately naive (full cross products, every
predicate evaluated per row with no folding or pushdown) so it can serve
as the reference semantics for differential checks.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Optional

from .engine import ast as A
from .engine.database import ResultSet
from .engine.evaluator import compile_expr
from .errors import EngineError, ModelError, UserError
from .values import conforms, row_key, sql_literal, storage_class, truth


@dataclass(frozen=True)
class TableModel:
    name: str
    columns: tuple[tuple[str, str], ...]
    rows: tuple[tuple, ...] = ()

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(c for c, _ in self.columns)

    @property
    def column_types(self) -> tuple[str, ...]:
        return tuple(t for _, t in self.columns)


@dataclass(frozen=True)
class ShadowState:
    read: int = 0
    write: int = 0
    create: int = 0
    # Insertion-ordered; never mutated after construction.
    tables: dict = field(default_factory=dict)

    def table(self, name: str) -> TableModel:
        t = self.tables.get(name)
        if t is None:
            raise ModelError(f"shadow has no table {name}")
        return t

    def table_names(self) -> list[str]:
        return list(self.tables)

    def with_table(self, t: TableModel) -> dict:
        tables = dict(self.tables)
        tables[t.name] = t
        return tables


def interaction_class(s: A.Statement) -> str:
    if isinstance(s, A.Select):
        return "read"
    if isinstance(s, (A.CreateTable, A.DropTable)):
        return "create"
    return "write"


def _compile(e: A.Expression, layout):
    try:
        return compile_expr(e, layout)
    except UserError as exc:
        raise ModelError(f"ill-formed expression: {exc.message}") from exc


def _layout(t: TableModel, qualifier: Optional[str] = None):
    q = qualifier or t.name
    return tuple((q, c) for c in t.column_names)


def _check_type(t: TableModel, idx: int, v) -> None:
    if not conforms(v, t.column_types[idx]):
        raise ModelError(
            f"{storage_class(v)} value for {t.column_types[idx]} column {t.name}.{t.column_names[idx]}"
        )


def apply(st: ShadowState, i) -> ShadowState:
    """Return the state after interaction ``i``.

    Anything that is not a statement (faults, assertions) leaves the
    state untouched.
    """
    if not isinstance(i, (A.CreateTable, A.DropTable, A.Insert, A.Update, A.Delete, A.Select)):
        return st
    cls = interaction_class(i)
    bumped = replace(st, **{cls: getattr(st, cls) + 1})
    if isinstance(i, A.Select):
        _prepare_all(st, i)  # well-formedness only
        return bumped
    if isinstance(i, A.CreateTable):
        if i.name in st.tables:
            raise ModelError(f"table {i.name} already exists")
        names = [c for c, _ in i.columns]
        if not names or len(set(names)) != len(names):
            raise ModelError(f"bad column list for {i.name}")
        return replace(bumped, tables=st.with_table(TableModel(i.name, tuple(i.columns))))
    if isinstance(i, A.DropTable):
        st.table(i.name)
        tables = dict(st.tables)
        del tables[i.name]
        return replace(bumped, tables=tables)

    t = st.table(i.table)
    if isinstance(i, A.Insert):
        names = t.column_names
        if i.columns is None:
            positions = list(range(len(names)))
        else:
            if len(set(i.columns)) != len(i.columns) or any(c not in names for c in i.columns):
                raise ModelError(f"bad insert column list for {t.name}")
            positions = [names.index(c) for c in i.columns]
        new_rows = []
        for values in i.rows:
            if len(values) != len(positions):
                raise ModelError(f"insert arity mismatch on {t.name}")
            row = [None] * len(names)
            for idx, v in zip(positions, values):
                _check_type(t, idx, v)
                row[idx] = v
            new_rows.append(tuple(row))
        return replace(bumped, tables=st.with_table(replace(t, rows=t.rows + tuple(new_rows))))

    layout = _layout(t)
    pred = _compile(i.where, layout) if i.where is not None else None
    if isinstance(i, A.Delete):
        kept = tuple(r for r in t.rows if pred is not None and truth(pred(r)) is not True)
        return replace(bumped, tables=st.with_table(replace(t, rows=kept)))
    if isinstance(i, A.Update):
        names = t.column_names
        sets = []
        for col, e in i.assignments:
            if col not in names:
                raise ModelError(f"no column {col} in {t.name}")
            sets.append((names.index(col), _compile(e, layout)))
        if len({idx for idx, _ in sets}) != len(sets):
            raise ModelError("column assigned twice")
        rows = []
        for r in t.rows:
            if pred is None or truth(pred(r)) is True:
                new = list(r)
                for idx, f in sets:
                    v = f(r)
                    _check_type(t, idx, v)
                    new[idx] = v
                r = tuple(new)
            rows.append(r)
        return replace(bumped, tables=st.with_table(replace(t, rows=tuple(rows))))
    raise ModelError(f"cannot apply {i!r}")


def _prepare(st: ShadowState, core: A.Select):
    tables = [st.table(src.table) for src in core.sources]
    aliases = [src.name for src in core.sources]
    if len(set(aliases)) != len(aliases):
        raise ModelError("duplicate source name")
    layout = tuple(itertools.chain.from_iterable(_layout(t, a) for t, a in zip(tables, aliases)))
    pred = _compile(core.where, layout) if core.where is not None else None
    names: list[str] = []
    projections = []
    for item in core.items:
        if isinstance(item, A.Star):
            for k, (_, col) in enumerate(layout):
                names.append(col)
                projections.append(lambda row, k=k: row[k])
        else:
            names.append(item.column if isinstance(item, A.ColumnRef) else "?")
            projections.append(_compile(item, layout))
    return tables, pred, projections, tuple(names)


def _prepare_all(st: ShadowState, s: A.Select) -> list:
    prepared = [_prepare(st, core) for core in s.cores()]
    if len({len(p[3]) for p in prepared}) != 1:
        raise ModelError("UNION ALL operands differ in arity")
    return prepared


def query_shadow(st: ShadowState, s: A.Select) -> ResultSet:
    """Reference evaluation of a SELECT; row order is not meaningful."""
    prepared = _prepare_all(st, s)
    rows: list[tuple] = []
    for core, (tables, pred, projections, _) in zip(s.cores(), prepared):
        out = []
        for parts in itertools.product(*(t.rows for t in tables)):
            row = tuple(itertools.chain.from_iterable(parts))
            if pred is None or truth(pred(row)) is True:
                out.append(tuple(p(row) for p in projections))
        if core.distinct:
            out = list(dict.fromkeys(out))
        rows += out
    if s.limit is not None:
        rows = rows[: s.limit]
    return ResultSet(prepared[0][3], rows)


def multiset(rows) -> Counter:
    # Keyed by storage class as well as value, so 1 and 1.0 stay distinct.
    return Counter(row_key(r) for r in rows)


@dataclass(frozen=True)
class Discrepancy:
    table: Optional[str]
    kind: str  # missing_table, extra_table, schema, missing_rows, extra_rows, EngineFailure
    detail: str = ""
    rows: tuple = ()
    error: Optional[EngineError] = field(default=None, compare=False)

    def __str__(self) -> str:
        where = f"{self.table}: " if self.table else ""
        shown = "".join(f"\n    {format_row(r)}" for r in self.rows)
        return f"{where}{self.kind} {self.detail}".rstrip() + shown


def _row_diff(expected, actual) -> tuple[list, list]:
    exp, act = Counter(), Counter()
    first: dict = {}
    for r in expected:
        k = row_key(r)
        exp[k] += 1
        first.setdefault(k, r)
    for r in actual:
        k = row_key(r)
        act[k] += 1
        first.setdefault(k, r)
    missing = [first[k] for k, n in sorted((exp - act).items()) for _ in range(n)]
    extra = [first[k] for k, n in sorted((act - exp).items()) for _ in range(n)]
    return missing, extra


def diff(st: ShadowState, db) -> list[Discrepancy]:
    """Compare catalogs and table contents of the shadow and the engine."""
    out: list[Discrepancy] = []
    try:
        schema = db.schema()
    except EngineError as exc:
        return [Discrepancy(None, "EngineFailure", str(exc), error=exc)]
    for name in sorted(set(schema) - set(st.tables)):
        out.append(Discrepancy(name, "extra_table"))
    for name, t in st.tables.items():
        if name not in schema:
            out.append(Discrepancy(name, "missing_table"))
            continue
        if tuple(schema[name]) != t.columns:
            out.append(Discrepancy(name, "schema", f"engine {schema[name]} vs shadow {t.columns}"))
            continue
        try:
            rs = db.execute(A.Select((A.Star(),), (A.Source(name),)))
        except EngineError as exc:
            out.append(Discrepancy(name, "EngineFailure", str(exc), error=exc))
            continue
        missing, extra = _row_diff(t.rows, rs.rows)
        if missing:
            out.append(Discrepancy(name, "missing_rows", f"({len(missing)})", tuple(missing)))
        if extra:
            out.append(Discrepancy(name, "extra_rows", f"({len(extra)})", tuple(extra)))
    return out


def format_row(row) -> str:
    return "(" + ", ".join(sql_literal(v) for v in row) + ")"


def dump(st: ShadowState) -> str:
    """Canonical text form: tables by name, rows sorted."""
    lines = [f"counters read={st.read} write={st.write} create={st.create}"]
    for name in sorted(st.tables):
        t = st.tables[name]
        cols = ", ".join(f"{c} {ty}" for c, ty in t.columns)
        lines.append(f"table {name} ({cols}) rows={len(t.rows)}")
        for r in sorted(t.rows, key=row_key):
            lines.append(f"  {format_row(r)}")
    return "\n".join(lines) + "\n"
