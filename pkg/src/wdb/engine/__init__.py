"""A small SQLite-flavored relational engine over paged storage."""

from .database import Database, ResultSet
from .evaluator import Scope, eval_expr
from .parser import parse, parse_expr
from .printer import expr_sql, to_sql

__all__ = ["Database", "ResultSet", "Scope", "eval_expr", "parse", "parse_expr", "expr_sql", "to_sql"]
