"""On-disk page formats.

Page 0 is the header::

    offset  size  field
    0       4     magic b"WDB1"
    4       4     page size (u32 LE)
    8       4     page count, header included (u32 LE)
    12      4     catalog length in bytes (u32 LE)
    16      n     catalog, compact UTF-8 JSON:
                  {"tables": [{"name", "columns": [[name, type], ...],
                               "pages": [page numbers in heap order]}, ...],
                   "free": [unused page numbers]}

Every other page is either free or a table heap page::

    0       1     page type, 0x0D
    1       2     record count (u16 LE)
    3       2     bytes used after the page header (u16 LE)
    5       ...   records, each a u16 LE length followed by the values

A value is a one-byte tag followed by its payload: 0 NULL (no payload),
1 INTEGER (i64 LE), 2 REAL (f64 LE), 3 TEXT (u32 LE length + UTF-8),
4 BLOB (u32 LE length + bytes).

Heap pages are never modified in place. A statement writes fresh copies
of the pages it changes and then rewrites the header; the header write
is the commit point.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

from ..errors import InternalInvariantViolation, IoError, UserError
from ..values import Value

MAGIC = b"WDB1"
HEADER = struct.Struct("<4sIII")
HEAP_TYPE = 0x0D
HEAP_HEADER = struct.Struct("<BHH")
REC_LEN = struct.Struct("<H")
I64 = struct.Struct("<q")
F64 = struct.Struct("<d")
U32 = struct.Struct("<I")

TAG_NULL, TAG_INT, TAG_REAL, TAG_TEXT, TAG_BLOB = range(5)


@dataclass(frozen=True)
class TableMeta:
    name: str
    columns: tuple[tuple[str, str], ...]
    pages: tuple[int, ...] = ()

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(c for c, _ in self.columns)

    @property
    def column_types(self) -> tuple[str, ...]:
        return tuple(t for _, t in self.columns)


@dataclass
class Catalog:
    tables: dict[str, TableMeta] = field(default_factory=dict)
    free: list[int] = field(default_factory=list)
    page_count: int = 1

    def copy(self) -> "Catalog":
        return Catalog(dict(self.tables), list(self.free), self.page_count)


def encode_header(cat: Catalog, page_size: int) -> bytes:
    body = json.dumps(
        {
            "tables": [
                {"name": t.name, "columns": [list(c) for c in t.columns], "pages": list(t.pages)}
                for t in cat.tables.values()
            ],
            "free": cat.free,
        },
        separators=(",", ":"),
    ).encode("utf-8")
    if HEADER.size + len(body) > page_size:
        raise UserError("database schema does not fit in the header page", kind="too-large")
    head = HEADER.pack(MAGIC, page_size, cat.page_count, len(body))
    return (head + body).ljust(page_size, b"\0")


def decode_header(data: bytes) -> tuple[int, Catalog]:
    magic, page_size, page_count, length = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise IoError("file is not a database", kind="corrupt")
    try:
        doc = json.loads(data[HEADER.size:HEADER.size + length].decode("utf-8"))
        tables = {}
        for t in doc["tables"]:
            cols = tuple((str(n), str(ty)) for n, ty in t["columns"])
            tables[t["name"]] = TableMeta(t["name"], cols, tuple(t["pages"]))
        return page_size, Catalog(tables, list(doc["free"]), page_count)
    except (ValueError, KeyError, TypeError) as exc:
        raise IoError(f"corrupt database header: {exc}", kind="corrupt") from exc


def encode_value(v: Value, out: bytearray) -> None:
    t = type(v)
    if v is None:
        out.append(TAG_NULL)
    elif t is int:
        out.append(TAG_INT)
        out += I64.pack(v)
    elif t is float:
        out.append(TAG_REAL)
        out += F64.pack(v)
    elif t is str:
        raw = v.encode("utf-8")
        out.append(TAG_TEXT)
        out += U32.pack(len(raw))
        out += raw
    elif t is bytes:
        out.append(TAG_BLOB)
        out += U32.pack(len(v))
        out += v
    else:
        raise InternalInvariantViolation(f"cannot encode {v!r}")


def encode_record(row: tuple) -> bytes:
    out = bytearray()
    for v in row:
        encode_value(v, out)
    return bytes(out)


def pack_rows(rows: list[tuple], page_size: int) -> list[bytes]:
    """Pack rows into as few heap pages as possible, preserving order."""
    capacity = page_size - HEAP_HEADER.size
    pages: list[bytes] = []
    body = bytearray()
    count = 0
    for row in rows:
        rec = encode_record(row)
        need = REC_LEN.size + len(rec)
        if need > capacity:
            raise UserError("row too large for a page", kind="too-large")
        if len(body) + need > capacity:
            pages.append(_heap_page(count, body, page_size))
            body = bytearray()
            count = 0
        body += REC_LEN.pack(len(rec))
        body += rec
        count += 1
    if count:
        pages.append(_heap_page(count, body, page_size))
    return pages


def _heap_page(count: int, body: bytearray, page_size: int) -> bytes:
    return (HEAP_HEADER.pack(HEAP_TYPE, count, len(body)) + bytes(body)).ljust(page_size, b"\0")


def decode_heap(data: bytes, page_no: int) -> list[tuple]:
    kind, count, used = HEAP_HEADER.unpack_from(data)
    if kind != HEAP_TYPE:
        raise InternalInvariantViolation(f"page {page_no} is not a heap page (type {kind:#x})")
    rows = []
    pos = HEAP_HEADER.size
    end = pos + used
    unpack_i64, unpack_f64, unpack_u32 = I64.unpack_from, F64.unpack_from, U32.unpack_from
    for _ in range(count):
        (length,) = REC_LEN.unpack_from(data, pos)
        pos += 2
        stop = pos + length
        if stop > end:
            raise InternalInvariantViolation(f"page {page_no}: record overruns page")
        row = []
        while pos < stop:
            tag = data[pos]
            pos += 1
            if tag == TAG_NULL:
                row.append(None)
            elif tag == TAG_INT:
                row.append(unpack_i64(data, pos)[0])
                pos += 8
            elif tag == TAG_REAL:
                row.append(unpack_f64(data, pos)[0])
                pos += 8
            elif tag == TAG_TEXT or tag == TAG_BLOB:
                (n,) = unpack_u32(data, pos)
                pos += 4
                raw = data[pos:pos + n]
                pos += n
                row.append(raw.decode("utf-8") if tag == TAG_TEXT else bytes(raw))
            else:
                raise InternalInvariantViolation(f"page {page_no}: bad value tag {tag}")
        if pos != stop:
            raise InternalInvariantViolation(f"page {page_no}: record length mismatch")
        rows.append(tuple(row))
    return rows
