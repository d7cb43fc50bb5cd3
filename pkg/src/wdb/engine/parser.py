"""Recursive-descent parser for the supported SQL subset."""

from __future__ import annotations

import math
import re
from typing import NamedTuple, Optional

from ..errors import UserError
from ..values import INT_MAX, INT_MIN, Value
from . import ast as A

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|--[^\n]*)
  | (?P<blob>[xX]'(?P<hex>[^']*)')
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<str>'(?:[^']|'')*')
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<qident>"(?:[^"]|"")+")
  | (?P<op><=|>=|<>|!=|==|[=<>(),;*.+-])
    """,
    re.VERBOSE,
)

KEYWORDS = frozenset(
    """
    SELECT DISTINCT ALL FROM WHERE AND OR NOT IS NULL ISNULL NOTNULL LIKE
    BETWEEN UNION LIMIT AS CREATE TABLE INSERT INTO VALUES UPDATE SET DELETE
    DROP TRUE FALSE
    """.split()
)

TYPE_NAMES = {
    "INTEGER": "INTEGER",
    "INT": "INTEGER",
    "REAL": "REAL",
    "FLOAT": "REAL",
    "DOUBLE": "REAL",
    "TEXT": "TEXT",
    "VARCHAR": "TEXT",
    "BLOB": "BLOB",
}


def _byte_offset(sql: str, pos: int) -> int:
    return len(sql[:pos].encode("utf-8"))


class Token(NamedTuple):
    kind: str  # kw, ident, num, str, blob, op, eof
    text: str
    pos: int
    value: object = None


def tokenize(sql: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    while pos < len(sql):
        m = _TOKEN.match(sql, pos)
        if m is None:
            raise UserError(
                f"unrecognized token near {sql[pos:pos + 10]!r}", offset=_byte_offset(sql, pos)
            )
        kind = m.lastgroup
        text = m.group(0)
        if kind == "hex":
            kind = "blob"
        if kind == "ws":
            pass
        elif kind == "ident":
            upper = text.upper()
            if upper in KEYWORDS:
                tokens.append(Token("kw", upper, pos))
            else:
                tokens.append(Token("ident", text.lower(), pos))
        elif kind == "qident":
            tokens.append(Token("ident", text[1:-1].replace('""', '"').lower(), pos))
        elif kind == "str":
            tokens.append(Token("str", text, pos, text[1:-1].replace("''", "'")))
        elif kind == "blob":
            digits = m.group("hex")
            if len(digits) % 2 or not re.fullmatch(r"[0-9a-fA-F]*", digits):
                raise UserError("malformed blob literal", offset=_byte_offset(sql, pos))
            tokens.append(Token("blob", text, pos, bytes.fromhex(digits)))
        elif kind == "num":
            tokens.append(Token("num", text, pos))
        else:
            tokens.append(Token("op", text, pos))
        pos = m.end()
    tokens.append(Token("eof", "", len(sql)))
    return tokens


class Parser:
    def __init__(self, sql: str, boolean_keywords: bool = True):
        self.sql = sql
        self.tokens = tokenize(sql)
        self.i = 0
        self.boolean_keywords = boolean_keywords

    # -- token helpers --------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def error(self, message: str, tok: Optional[Token] = None) -> UserError:
        tok = tok or self.tok
        near = tok.text or "end of input"
        offset = _byte_offset(self.sql, tok.pos)
        return UserError(f"{message} near {near!r} at offset {offset}", offset=offset)

    def accept(self, kind: str, text: Optional[str] = None) -> Optional[Token]:
        tok = self.tok
        if tok.kind == kind and (text is None or tok.text == text):
            self.i += 1
            return tok
        return None

    def kw(self, *words: str) -> bool:
        return self.tok.kind == "kw" and self.tok.text in words

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        tok = self.accept(kind, text)
        if tok is None:
            raise self.error(f"expected {text or kind}")
        return tok

    def ident(self) -> str:
        return self.expect("ident").text

    # -- statements -----------------------------------------------------

    def statement(self) -> A.Statement:
        if self.tok.kind == "eof":
            raise self.error("empty statement")
        if self.kw("SELECT"):
            stmt: A.Statement = self.select()
        elif self.kw("CREATE"):
            stmt = self.create()
        elif self.kw("INSERT"):
            stmt = self.insert()
        elif self.kw("UPDATE"):
            stmt = self.update()
        elif self.kw("DELETE"):
            stmt = self.delete()
        elif self.kw("DROP"):
            stmt = self.drop()
        else:
            raise self.error("syntax error")
        self.accept("op", ";")
        if self.tok.kind != "eof":
            raise self.error("unexpected trailing input")
        return stmt

    def select(self) -> A.Select:
        head = self.select_core()
        rest: list[A.Select] = []
        while self.accept("kw", "UNION"):
            self.expect("kw", "ALL")
            rest.append(self.select_core())
        limit = None
        if self.accept("kw", "LIMIT"):
            tok = self.expect("num")
            if not tok.text.isdigit():
                raise self.error("LIMIT requires a non-negative integer", tok)
            limit = int(tok.text)
        return A.Select(head.items, head.sources, head.where, head.distinct, tuple(rest), limit)

    def select_core(self) -> A.Select:
        self.expect("kw", "SELECT")
        distinct = bool(self.accept("kw", "DISTINCT"))
        if not distinct:
            self.accept("kw", "ALL")
        items: list = [self.select_item()]
        while self.accept("op", ","):
            items.append(self.select_item())
        self.expect("kw", "FROM")
        sources = [self.source()]
        while self.accept("op", ","):
            sources.append(self.source())
        where = self.expr() if self.accept("kw", "WHERE") else None
        return A.Select(tuple(items), tuple(sources), where, distinct)

    def select_item(self):
        if self.accept("op", "*"):
            return A.Star()
        return self.expr()

    def source(self) -> A.Source:
        table = self.ident()
        alias = None
        if self.accept("kw", "AS"):
            alias = self.ident()
        elif self.tok.kind == "ident":
            alias = self.ident()
        return A.Source(table, alias)

    def create(self) -> A.CreateTable:
        self.expect("kw", "CREATE")
        self.expect("kw", "TABLE")
        name = self.ident()
        self.expect("op", "(")
        cols = [self.column_def()]
        while self.accept("op", ","):
            cols.append(self.column_def())
        self.expect("op", ")")
        return A.CreateTable(name, tuple(cols))

    def column_def(self) -> tuple[str, str]:
        name = self.ident()
        tok = self.tok
        if tok.kind != "ident" or tok.text.upper() not in TYPE_NAMES:
            raise self.error("expected column type")
        self.i += 1
        return name, TYPE_NAMES[tok.text.upper()]

    def insert(self) -> A.Insert:
        self.expect("kw", "INSERT")
        self.expect("kw", "INTO")
        table = self.ident()
        columns = None
        if self.accept("op", "("):
            names = [self.ident()]
            while self.accept("op", ","):
                names.append(self.ident())
            self.expect("op", ")")
            columns = tuple(names)
        self.expect("kw", "VALUES")
        rows = [self.value_tuple()]
        while self.accept("op", ","):
            rows.append(self.value_tuple())
        return A.Insert(table, columns, tuple(rows))

    def value_tuple(self) -> tuple[Value, ...]:
        self.expect("op", "(")
        values = [self.literal_value()]
        while self.accept("op", ","):
            values.append(self.literal_value())
        self.expect("op", ")")
        return tuple(values)

    def literal_value(self) -> Value:
        lit = self.literal()
        if lit is None:
            raise self.error("expected literal value")
        return lit.value

    def update(self) -> A.Update:
        self.expect("kw", "UPDATE")
        table = self.ident()
        self.expect("kw", "SET")
        sets = [self.assignment()]
        while self.accept("op", ","):
            sets.append(self.assignment())
        where = self.expr() if self.accept("kw", "WHERE") else None
        return A.Update(table, tuple(sets), where)

    def assignment(self) -> tuple[str, A.Expression]:
        col = self.ident()
        self.expect("op", "=")
        return col, self.expr()

    def delete(self) -> A.Delete:
        self.expect("kw", "DELETE")
        self.expect("kw", "FROM")
        table = self.ident()
        where = self.expr() if self.accept("kw", "WHERE") else None
        return A.Delete(table, where)

    def drop(self) -> A.DropTable:
        self.expect("kw", "DROP")
        self.expect("kw", "TABLE")
        return A.DropTable(self.ident())

    # -- expressions ----------------------------------------------------

    def expr(self) -> A.Expression:
        left = self.and_expr()
        while self.accept("kw", "OR"):
            left = A.Binary("OR", left, self.and_expr())
        return left

    def and_expr(self) -> A.Expression:
        left = self.not_expr()
        while self.accept("kw", "AND"):
            left = A.Binary("AND", left, self.not_expr())
        return left

    def not_expr(self) -> A.Expression:
        if self.accept("kw", "NOT"):
            return A.Unary("NOT", self.not_expr())
        return self.eq_expr()

    def eq_expr(self) -> A.Expression:
        left = self.rel_expr()
        while True:
            tok = self.tok
            if tok.kind == "op" and tok.text in ("=", "==", "<>", "!="):
                self.i += 1
                op = "=" if tok.text in ("=", "==") else "<>"
                left = A.Binary(op, left, self.rel_expr())
            elif self.accept("kw", "LIKE"):
                left = A.Binary("LIKE", left, self.rel_expr())
            elif self.accept("kw", "IS"):
                op = "IS NOT NULL" if self.accept("kw", "NOT") else "IS NULL"
                self.expect("kw", "NULL")
                left = A.Unary(op, left)
            elif self.accept("kw", "ISNULL"):
                left = A.Unary("IS NULL", left)
            elif self.accept("kw", "NOTNULL"):
                left = A.Unary("IS NOT NULL", left)
            elif self.kw("NOT") and self.tokens[self.i + 1].text == "NULL":
                self.i += 2
                left = A.Unary("IS NOT NULL", left)
            elif self.accept("kw", "BETWEEN"):
                low = self.rel_expr()
                self.expect("kw", "AND")
                high = self.rel_expr()
                left = A.Between(left, low, high)
            else:
                return left

    def rel_expr(self) -> A.Expression:
        left = self.primary()
        while self.tok.kind == "op" and self.tok.text in ("<", "<=", ">", ">="):
            op = self.tok.text
            self.i += 1
            left = A.Binary(op, left, self.primary())
        return left

    def primary(self) -> A.Expression:
        if self.accept("op", "("):
            inner = self.expr()
            self.expect("op", ")")
            return inner
        lit = self.literal()
        if lit is not None:
            return lit
        if self.tok.kind == "ident":
            name = self.ident()
            if self.accept("op", "."):
                return A.ColumnRef(name, self.ident())
            return A.ColumnRef(None, name)
        raise self.error("syntax error")

    def literal(self) -> Optional[A.Literal]:
        tok = self.tok
        if tok.kind == "kw" and tok.text in ("TRUE", "FALSE"):
            if not self.boolean_keywords:
                # M0: boolean keywords fall through to column lookup.
                raise self.error(f"no such column: {tok.text.lower()}")
            self.i += 1
            return A.Literal(1 if tok.text == "TRUE" else 0, tok.text)
        if self.accept("kw", "NULL"):
            return A.Literal(None)
        if tok.kind == "str":
            self.i += 1
            return A.Literal(tok.value)
        if tok.kind == "blob":
            self.i += 1
            return A.Literal(tok.value)
        sign = 1
        if tok.kind == "op" and tok.text in ("-", "+"):
            if self.tokens[self.i + 1].kind != "num":
                raise self.error("sign must precede a numeric literal")
            sign = -1 if tok.text == "-" else 1
            self.i += 1
            tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return A.Literal(self.number(tok, sign))
        return None

    def number(self, tok: Token, sign: int) -> Value:
        text = tok.text
        if text.isdigit():
            v = sign * int(text)
            if not INT_MIN <= v <= INT_MAX:
                raise UserError("integer literal out of range", kind="range", offset=_byte_offset(self.sql, tok.pos))
            return v
        f = sign * float(text)
        if not math.isfinite(f):
            raise UserError("non-finite real literal", kind="range", offset=_byte_offset(self.sql, tok.pos))
        return f


def parse(sql: str, *, boolean_keywords: bool = True) -> A.Statement:
    """Parse one SQL statement.

    Raises ``UserError`` carrying the byte offset of the first failure.
    """
    return Parser(sql, boolean_keywords).statement()


def parse_expr(sql: str) -> A.Expression:
    p = Parser(sql)
    e = p.expr()
    if p.tok.kind != "eof":
        raise p.error("unexpected trailing input")
    return e
