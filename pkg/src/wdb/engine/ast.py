"""Statement and expression trees.

All nodes are immutable. ``Paren`` only ever comes from generators and
reducers: the parser drops explicit parentheses, so printing and
re-parsing a parsed statement is a fixpoint.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from ..values import Value

COMPARISONS = ("=", "<>", "<", "<=", ">", ">=")
BINARY_OPS = COMPARISONS + ("AND", "OR", "LIKE")
UNARY_OPS = ("NOT", "IS NULL", "IS NOT NULL")


@dataclass(frozen=True, slots=True)
class ColumnRef:
    table: Optional[str]
    column: str


@dataclass(frozen=True, slots=True)
class Literal:
    value: Value
    # Source spelling for TRUE/FALSE; does not take part in equality.
    spelling: Optional[str] = field(default=None, compare=False)


@dataclass(frozen=True, slots=True)
class Unary:
    op: str
    operand: "Expression"


@dataclass(frozen=True, slots=True)
class Binary:
    op: str
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True, slots=True)
class Between:
    operand: "Expression"
    low: "Expression"
    high: "Expression"


@dataclass(frozen=True, slots=True)
class Paren:
    inner: "Expression"


Expression = Union[ColumnRef, Literal, Unary, Binary, Between, Paren]

TRUE = Literal(1, "TRUE")
FALSE = Literal(0, "FALSE")
NULL = Literal(None)


@dataclass(frozen=True, slots=True)
class Star:
    """``*`` in a projection list."""


@dataclass(frozen=True, slots=True)
class Source:
    table: str
    alias: Optional[str] = None

    @property
    def name(self) -> str:
        return self.alias or self.table


@dataclass(frozen=True, slots=True)
class CreateTable:
    name: str
    columns: tuple[tuple[str, str], ...]


@dataclass(frozen=True, slots=True)
class Insert:
    table: str
    columns: Optional[tuple[str, ...]]
    rows: tuple[tuple[Value, ...], ...]


@dataclass(frozen=True, slots=True)
class Select:
    items: tuple[Union[Star, Expression], ...]
    sources: tuple[Source, ...]
    where: Optional[Expression] = None
    distinct: bool = False
    compound: tuple["Select", ...] = ()  # further UNION ALL operands
    limit: Optional[int] = None

    def cores(self) -> tuple["Select", ...]:
        head = Select(self.items, self.sources, self.where, self.distinct)
        return (head,) + self.compound


@dataclass(frozen=True, slots=True)
class Update:
    table: str
    assignments: tuple[tuple[str, Expression], ...]
    where: Optional[Expression] = None


@dataclass(frozen=True, slots=True)
class Delete:
    table: str
    where: Optional[Expression] = None


@dataclass(frozen=True, slots=True)
class DropTable:
    name: str


Statement = Union[CreateTable, Insert, Select, Update, Delete, DropTable]


def children(e: Expression) -> tuple[Expression, ...]:
    if isinstance(e, Unary):
        return (e.operand,)
    if isinstance(e, Binary):
        return (e.left, e.right)
    if isinstance(e, Between):
        return (e.operand, e.low, e.high)
    if isinstance(e, Paren):
        return (e.inner,)
    return ()


def walk(e: Expression) -> Iterator[Expression]:
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def depth(e: Expression) -> int:
    kids = children(e)
    return 1 + max(map(depth, kids)) if kids else 0


def column_refs(e: Expression) -> list[ColumnRef]:
    return [n for n in walk(e) if isinstance(n, ColumnRef)]


def is_constant(e: Expression) -> bool:
    return not any(isinstance(n, ColumnRef) for n in walk(e))


def strip_parens(e: Expression) -> Expression:
    """Drop every ``Paren`` node; parens never change meaning."""
    if isinstance(e, Paren):
        return strip_parens(e.inner)
    if isinstance(e, Unary):
        return Unary(e.op, strip_parens(e.operand))
    if isinstance(e, Binary):
        return Binary(e.op, strip_parens(e.left), strip_parens(e.right))
    if isinstance(e, Between):
        return Between(strip_parens(e.operand), strip_parens(e.low), strip_parens(e.high))
    return e


def statement_tables(s: Statement) -> tuple[str, ...]:
    """Tables a statement reads or writes, in first-mention order."""
    if isinstance(s, (CreateTable, DropTable)):
        return (s.name,)
    if isinstance(s, Select):
        names: list[str] = []
        for core in s.cores():
            for src in core.sources:
                if src.table not in names:
                    names.append(src.table)
        return tuple(names)
    return (s.table,)
