"""Render ASTs back to SQL text.

Every composite operand is parenthesised, so output never depends on
operator precedence. The parser drops those parentheses again.
"""

from __future__ import annotations

from ..values import sql_literal
from .ast import (
    Between,
    Binary,
    ColumnRef,
    CreateTable,
    Delete,
    DropTable,
    Expression,
    Insert,
    Literal,
    Paren,
    Select,
    Star,
    Statement,
    Unary,
    Update,
)


def expr_sql(e: Expression) -> str:
    if isinstance(e, ColumnRef):
        return f"{e.table}.{e.column}" if e.table else e.column
    if isinstance(e, Literal):
        return e.spelling if e.spelling else sql_literal(e.value)
    if isinstance(e, Paren):
        return f"({expr_sql(e.inner)})"
    if isinstance(e, Unary):
        if e.op == "NOT":
            return f"NOT {_operand(e.operand)}"
        return f"{_operand(e.operand)} {e.op}"
    if isinstance(e, Binary):
        return f"{_operand(e.left)} {e.op} {_operand(e.right)}"
    if isinstance(e, Between):
        return f"{_operand(e.operand)} BETWEEN {_operand(e.low)} AND {_operand(e.high)}"
    raise TypeError(f"not an expression: {e!r}")


def _operand(e: Expression) -> str:
    if isinstance(e, (Unary, Binary, Between)):
        return f"({expr_sql(e)})"
    return expr_sql(e)


def _select_core(s: Select) -> str:
    items = ", ".join("*" if isinstance(i, Star) else expr_sql(i) for i in s.items)
    sources = ", ".join(
        f"{src.table} AS {src.alias}" if src.alias else src.table for src in s.sources
    )
    out = "SELECT DISTINCT " if s.distinct else "SELECT "
    out += f"{items} FROM {sources}"
    if s.where is not None:
        out += f" WHERE {expr_sql(s.where)}"
    return out


def to_sql(s: Statement) -> str:
    if isinstance(s, Select):
        out = " UNION ALL ".join(_select_core(core) for core in s.cores())
        if s.limit is not None:
            out += f" LIMIT {s.limit}"
        return out
    if isinstance(s, CreateTable):
        cols = ", ".join(f"{name} {ctype}" for name, ctype in s.columns)
        return f"CREATE TABLE {s.name} ({cols})"
    if isinstance(s, Insert):
        cols = f" ({', '.join(s.columns)})" if s.columns is not None else ""
        rows = ", ".join("(" + ", ".join(map(sql_literal, row)) + ")" for row in s.rows)
        return f"INSERT INTO {s.table}{cols} VALUES {rows}"
    if isinstance(s, Update):
        sets = ", ".join(f"{col} = {expr_sql(e)}" for col, e in s.assignments)
        out = f"UPDATE {s.table} SET {sets}"
        if s.where is not None:
            out += f" WHERE {expr_sql(s.where)}"
        return out
    if isinstance(s, Delete):
        out = f"DELETE FROM {s.table}"
        if s.where is not None:
            out += f" WHERE {expr_sql(s.where)}"
        return out
    if isinstance(s, DropTable):
        return f"DROP TABLE {s.name}"
    raise TypeError(f"not a statement: {s!r}")
