"""SQL runtime values.

Values are plain Python objects: ``None`` (NULL), ``int`` (INTEGER),
``float`` (REAL), ``str`` (TEXT) and ``bytes`` (BLOB). ``bool`` is never a
valid value; booleans are the integers 1 and 0.
"""

from __future__ import annotations

import math
import re
from typing import Union

Value = Union[None, int, float, str, bytes]

TYPES = ("INTEGER", "REAL", "TEXT", "BLOB")

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1

_RANK = {type(None): 0, int: 1, float: 1, str: 2, bytes: 3}
_NUMERIC_PREFIX = re.compile(r"[ \t\n\v\f\r]*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)")


def storage_class(v: Value) -> str:
    if v is None:
        return "NULL"
    t = type(v)
    if t is int:
        return "INTEGER"
    if t is float:
        return "REAL"
    if t is str:
        return "TEXT"
    if t is bytes:
        return "BLOB"
    raise TypeError(f"not a SQL value: {v!r}")


def is_value(v: object) -> bool:
    return v is None or type(v) in (int, float, str, bytes)


def conforms(v: Value, column_type: str) -> bool:
    """Strict typing: NULL fits anywhere, otherwise the class must match."""
    return v is None or storage_class(v) == column_type


def sort_key(v: Value) -> tuple:
    """Total order: NULL < numeric < TEXT < BLOB.

    INTEGER sorts before an equal REAL, so 1 and 1.0 get distinct keys.
    """
    if v is None:
        return (0, 0, 0)
    return (_RANK[type(v)], v, type(v) is float)


def row_key(row) -> tuple:
    return tuple(sort_key(v) for v in row)


def compare(a: Value, b: Value) -> int:
    """Three-way comparison of two non-NULL values."""
    ra, rb = _RANK[type(a)], _RANK[type(b)]
    if ra != rb:
        return -1 if ra < rb else 1
    if a < b:  # type: ignore[operator]
        return -1
    if a > b:  # type: ignore[operator]
        return 1
    return 0


def format_real(x: float) -> str:
    # SQLite renders reals with 15 significant digits and always keeps a
    # decimal point in the mantissa.
    if x == 0:
        return "0.0"
    if math.isinf(x):
        return "Inf" if x > 0 else "-Inf"
    if math.isnan(x):
        return "NaN"
    s = "%.15g" % x
    mantissa, sep, exponent = s.partition("e")
    if "." not in mantissa:
        mantissa += ".0"
    return mantissa + sep + exponent


def to_text(v: Value) -> str | None:
    if v is None:
        return None
    t = type(v)
    if t is str:
        return v  # type: ignore[return-value]
    if t is int:
        return str(v)
    if t is float:
        return format_real(v)  # type: ignore[arg-type]
    return v.decode("utf-8", errors="replace")  # type: ignore[union-attr]


def _text_number(s: str) -> float:
    m = _NUMERIC_PREFIX.match(s)
    return float(m.group(1)) if m else 0.0


def truth(v: Value) -> bool | None:
    """Boolean interpretation of a value; ``None`` stands for unknown."""
    if v is None:
        return None
    t = type(v)
    if t is int or t is float:
        return v != 0
    if t is str:
        return _text_number(v) != 0  # type: ignore[arg-type]
    return _text_number(v.decode("utf-8", errors="replace")) != 0  # type: ignore[union-attr]


def sql_literal(v: Value) -> str:
    if v is None:
        return "NULL"
    t = type(v)
    if t is int:
        return str(v)
    if t is float:
        if not math.isfinite(v):  # type: ignore[arg-type]
            raise ValueError("non-finite reals have no literal form")
        return repr(v)
    if t is str:
        return "'" + v.replace("'", "''") + "'"  # type: ignore[union-attr]
    if t is bytes:
        return "X'" + v.hex().upper() + "'"  # type: ignore[union-attr]
    raise TypeError(f"not a SQL value: {v!r}")
