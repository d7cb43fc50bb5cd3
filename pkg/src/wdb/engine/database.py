"""Database handle: catalog, page cache and statement execution."""

from __future__ import annotations

import itertools
import time
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from ..errors import (
    EngineError,
    InternalInvariantViolation,
    IoError,
    QueryInterrupted,
    UserError,
)
from .. import bugseed
from ..simio import SimStorage
from ..values import conforms, storage_class, truth
from . import ast as A
from .evaluator import compile_expr, conjuncts, drop_constant_terms, fold_constants, resolve
from .pager import Catalog, TableMeta, decode_header, decode_heap, encode_header, pack_rows
from .parser import parse
from .printer import expr_sql

DEFAULT_CACHE_PAGES = 32
# Default for ``mutant``: whatever bugseed.activate() selected.
ACTIVE = object()


@dataclass
class ResultSet:
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)

    def __post_init__(self):
        width = len(self.columns)
        for row in self.rows:
            if len(row) != width:
                raise InternalInvariantViolation("result row width differs from column count")

    def __len__(self) -> int:
        return len(self.rows)


Result = Union[ResultSet, int]


class _Txn:
    """Pending changes of one statement; nothing is visible until commit."""

    def __init__(self, committed: Catalog):
        self.cat = committed.copy()
        self.reusable = list(committed.free)
        self.freed: list[int] = []
        self.writes: dict[int, bytes] = {}

    def alloc(self) -> int:
        if self.reusable:
            n = self.reusable.pop(0)
            self.cat.free.remove(n)
            return n
        n = self.cat.page_count
        self.cat.page_count += 1
        return n

    def free(self, n: int) -> None:
        self.freed.append(n)

    def place(self, images: list[bytes]) -> list[int]:
        numbers = []
        for image in images:
            n = self.alloc()
            self.writes[n] = image
            numbers.append(n)
        return numbers


class Database:
    """A single-threaded handle on paged storage.

    ``mutant`` selects a seeded defect (see :mod:`wdb.bugseed`); it is
    read once here and never changes for the life of the handle.
    """

    def __init__(self, storage: SimStorage, mutant=ACTIVE, cache_pages: int = DEFAULT_CACHE_PAGES):
        self.storage = storage
        self.mutant: Optional[str] = bugseed.active() if mutant is ACTIVE else mutant
        self.cache_pages = cache_pages
        self.budget: Optional[float] = None  # seconds per statement
        self._deadline: Optional[float] = None
        self._interrupted = False
        self._cache: OrderedDict[int, list] = OrderedDict()
        self._cat: Optional[Catalog] = None
        self._open_snapshot: Optional[Catalog] = None
        self._load()
        self._open_snapshot = self._cat.copy()

    @classmethod
    def open(cls, path=None, *, storage: Optional[SimStorage] = None, mutant=ACTIVE,
             cache_pages: int = DEFAULT_CACHE_PAGES) -> "Database":
        if storage is None:
            storage = SimStorage.at(path)
        return cls(storage, mutant=mutant, cache_pages=cache_pages)

    # -- lifecycle ------------------------------------------------------

    @property
    def closed(self) -> bool:
        return self._cat is None

    def close(self) -> None:
        self._cat = None
        self._cache.clear()

    def reopen(self) -> None:
        """Drop every in-memory cache and rebuild from persisted bytes."""
        self.close()
        if self.mutant == "M3":
            # M3: the header captured at first open is reused as if current.
            self._cat = self._open_snapshot.copy()
            return
        self._load()

    def _load(self) -> None:
        if self.storage.is_empty():
            cat = Catalog()
            self.storage.write_page(0, encode_header(cat, self.storage.page_size))
        else:
            page_size, cat = decode_header(self.storage.read_page(0))
            if page_size != self.storage.page_size:
                raise IoError(f"page size mismatch: file {page_size}, storage {self.storage.page_size}")
        self._cat = cat

    # -- catalog access -------------------------------------------------

    def _catalog(self) -> Catalog:
        if self._cat is None:
            raise UserError("database is closed", kind="misuse")
        return self._cat

    def schema(self) -> dict[str, tuple[tuple[str, str], ...]]:
        return {name: t.columns for name, t in self._catalog().tables.items()}

    def table_names(self) -> list[str]:
        return list(self._catalog().tables)

    # -- time budget ----------------------------------------------------

    def interrupt(self) -> None:
        """Abort the running statement at its next row step."""
        self._interrupted = True

    def _tick(self) -> None:
        if self._interrupted or (self._deadline is not None and time.monotonic() > self._deadline):
            self._interrupted = False
            raise QueryInterrupted("statement exceeded its time budget")

    # -- pages ----------------------------------------------------------

    def _page(self, n: int) -> list:
        entry = self._cache.get(n)
        if entry is not None:
            self._cache.move_to_end(n)
            return entry
        entry = [self.storage.read_page(n), None]
        self._remember(n, entry)
        return entry

    def _remember(self, n: int, entry: list) -> None:
        self._cache[n] = entry
        self._cache.move_to_end(n)
        while len(self._cache) > self.cache_pages:
            self._cache.popitem(last=False)

    def _rows(self, n: int) -> list[tuple]:
        entry = self._page(n)
        if entry[1] is None:
            entry[1] = decode_heap(entry[0], n)
        return entry[1]

    def _scan(self, meta: TableMeta) -> Iterator[tuple[int, list[tuple]]]:
        for n in meta.pages:
            yield n, self._rows(n)

    def _all_rows(self, meta: TableMeta) -> list[tuple]:
        out: list[tuple] = []
        for _, rows in self._scan(meta):
            for row in rows:
                self._tick()
                out.append(row)
        return out

    def _commit(self, txn: _Txn) -> None:
        try:
            for n in sorted(txn.writes):
                self.storage.write_page(n, txn.writes[n])
            txn.cat.free.extend(txn.freed)
            header = encode_header(txn.cat, self.storage.page_size)
            self.storage.write_page(0, header)
        except EngineError:
            for n in txn.writes:
                self._cache.pop(n, None)
            raise
        for n in txn.freed:
            self._cache.pop(n, None)
        for n in sorted(txn.writes):
            self._remember(n, [txn.writes[n], None])
        self._cat = txn.cat

    # -- execution ------------------------------------------------------

    def execute(self, stmt: Union[str, A.Statement]) -> Result:
        cat = self._catalog()
        self._interrupted = False
        self._deadline = time.monotonic() + self.budget if self.budget is not None else None
        try:
            if isinstance(stmt, str):
                stmt = parse(stmt, boolean_keywords=self.mutant != "M0")
            if isinstance(stmt, A.Select):
                return self._select(cat, stmt)
            txn = _Txn(cat)
            if isinstance(stmt, A.CreateTable):
                count = self._create(txn, stmt)
            elif isinstance(stmt, A.DropTable):
                count = self._drop(txn, stmt)
            elif isinstance(stmt, A.Insert):
                count = self._insert(txn, stmt)
            elif isinstance(stmt, A.Delete):
                count = self._delete(txn, stmt)
            elif isinstance(stmt, A.Update):
                count = self._update(txn, stmt)
            else:
                raise UserError(f"unsupported statement {type(stmt).__name__}")
            self._commit(txn)
            return count
        except (EngineError, QueryInterrupted):
            raise
        except RecursionError as exc:
            raise InternalInvariantViolation("expression nesting too deep") from exc
        except Exception as exc:
            raise InternalInvariantViolation(f"{type(exc).__name__}: {exc}") from exc
        finally:
            self._deadline = None

    def _table(self, cat: Catalog, name: str) -> TableMeta:
        meta = cat.tables.get(name)
        if meta is None:
            raise UserError(f"no such table: {name}", kind="schema")
        return meta

    def _create(self, txn: _Txn, s: A.CreateTable) -> int:
        if s.name in txn.cat.tables:
            raise UserError(f"table {s.name} already exists", kind="schema")
        names = [c for c, _ in s.columns]
        if len(set(names)) != len(names):
            raise UserError(f"duplicate column name in {s.name}", kind="schema")
        txn.cat.tables[s.name] = TableMeta(s.name, tuple(s.columns))
        return 0

    def _drop(self, txn: _Txn, s: A.DropTable) -> int:
        meta = self._table(txn.cat, s.name)
        for n in meta.pages:
            txn.free(n)
        del txn.cat.tables[s.name]
        return 0

    def _insert(self, txn: _Txn, s: A.Insert) -> int:
        meta = self._table(txn.cat, s.table)
        names = meta.column_names
        if s.columns is None:
            positions = list(range(len(names)))
        else:
            positions = []
            for col in s.columns:
                if col not in names:
                    raise UserError(f"table {s.table} has no column named {col}", kind="schema")
                idx = names.index(col)
                if idx in positions:
                    raise UserError(f"column {col} specified more than once", kind="schema")
                positions.append(idx)
        types = meta.column_types
        new_rows = []
        for values in s.rows:
            if len(values) != len(positions):
                raise UserError(
                    f"{len(values)} values for {len(positions)} columns", kind="arity"
                )
            row: list = [None] * len(names)
            for idx, v in zip(positions, values):
                if not conforms(v, types[idx]):
                    raise UserError(
                        f"cannot store {storage_class(v)} in {types[idx]} column {names[idx]}", kind="type"
                    )
                row[idx] = v
            new_rows.append(tuple(row))
        pages = list(meta.pages)
        if pages:
            last = pages.pop()
            carried = list(self._rows(last))
            txn.free(last)
        else:
            carried = []
        pages += txn.place(pack_rows(carried + new_rows, self.storage.page_size))
        txn.cat.tables[s.table] = TableMeta(meta.name, meta.columns, tuple(pages))
        return len(new_rows)

    def _row_filter(self, where: Optional[A.Expression], layout, for_delete: bool = False):
        """Return (constant verdict or None, compiled predicate or None)."""
        if where is None:
            return True, None
        if for_delete and self.mutant == "M1":
            where = drop_constant_terms(where)
            if where is None:
                return True, None
        folded = fold_constants(where, self.mutant)
        if isinstance(folded, A.Literal):
            # Constant predicate: decided once, before the scan.
            return truth(folded.value) is True, None
        return None, compile_expr(folded, layout, self.mutant)

    def _delete(self, txn: _Txn, s: A.Delete) -> int:
        meta = self._table(txn.cat, s.table)
        layout = tuple((meta.name, c) for c in meta.column_names)
        constant, pred = self._row_filter(s.where, layout, for_delete=True)
        if constant is False:
            return 0
        deleted = 0
        pages: list[int] = []
        for n, rows in self._scan(meta):
            kept = []
            for row in rows:
                self._tick()
                if pred is not None and truth(pred(row)) is not True:
                    kept.append(row)
            deleted += len(rows) - len(kept)
            if len(kept) == len(rows):
                pages.append(n)
                continue
            txn.free(n)
            if kept:
                pages += txn.place(pack_rows(kept, self.storage.page_size))
        txn.cat.tables[s.table] = TableMeta(meta.name, meta.columns, tuple(pages))
        return deleted

    def _update(self, txn: _Txn, s: A.Update) -> int:
        meta = self._table(txn.cat, s.table)
        names, types = meta.column_names, meta.column_types
        layout = tuple((meta.name, c) for c in names)
        sets = []
        seen = set()
        for col, e in s.assignments:
            if col not in names:
                raise UserError(f"no such column: {col}", kind="schema")
            if col in seen:
                raise UserError(f"column {col} assigned more than once", kind="schema")
            seen.add(col)
            sets.append((names.index(col), compile_expr(fold_constants(e, self.mutant), layout, self.mutant)))
        constant, pred = self._row_filter(s.where, layout)
        if constant is False:
            return 0
        matched = 0
        pages: list[int] = []
        for n, stored in self._scan(meta):
            rows = list(stored)
            changed = False
            i = 0
            while i < len(rows):
                self._tick()
                row = rows[i]
                if pred is None or truth(pred(row)) is True:
                    new = list(row)
                    for idx, f in sets:
                        v = f(row)
                        if not conforms(v, types[idx]):
                            raise UserError(
                                f"cannot store {storage_class(v)} in {types[idx]} column {names[idx]}",
                                kind="type",
                            )
                        new[idx] = v
                    new_row = tuple(new)
                    if self.mutant == "M6" and new_row == row:
                        # M6: an unchanged cell leaves the cursor where it is.
                        continue
                    matched += 1
                    if new_row != row or any(type(a) is not type(b) for a, b in zip(new_row, row)):
                        rows[i] = new_row
                        changed = True
                i += 1
            if not changed:
                pages.append(n)
                continue
            txn.free(n)
            pages += txn.place(pack_rows(rows, self.storage.page_size))
        txn.cat.tables[s.table] = TableMeta(meta.name, meta.columns, tuple(pages))
        return matched

    # -- SELECT ---------------------------------------------------------

    def _select(self, cat: Catalog, s: A.Select) -> ResultSet:
        cores = s.cores()
        planned = [self._plan_core(cat, core) for core in cores]
        widths = {len(p[1]) for p in planned}
        if len(widths) != 1:
            raise UserError("SELECTs to the left and right of UNION ALL do not have the same number of result columns", kind="arity")
        limit = s.limit
        early_limit = limit if self.mutant == "M5" and len(cores) == 1 else None
        rows: list[tuple] = []
        for plan in planned:
            rows += self._run_core(plan, early_limit)
        if limit is not None:
            rows = rows[:limit]
        return ResultSet(planned[0][1], rows)

    def _plan_core(self, cat: Catalog, core: A.Select):
        metas = [self._table(cat, src.table) for src in core.sources]
        layouts = [tuple((src.name, c) for c in meta.column_names) for src, meta in zip(core.sources, metas)]
        full = tuple(itertools.chain.from_iterable(layouts))
        offsets = list(itertools.accumulate([0] + [len(l) for l in layouts]))

        columns: list[str] = []
        projections = []
        for item in core.items:
            if isinstance(item, A.Star):
                for i, (_, col) in enumerate(full):
                    columns.append(col)
                    projections.append(i)
            else:
                columns.append(item.column if isinstance(item, A.ColumnRef) else expr_sql(item))
                projections.append(compile_expr(item, full, self.mutant))

        pushed: list[list] = [[] for _ in metas]
        residual = []
        empty = False
        if core.where is not None:
            folded = fold_constants(core.where, self.mutant)
            for term in conjuncts(folded):
                if isinstance(term, A.Literal):
                    if truth(term.value) is not True:
                        empty = True
                    continue
                owners = {
                    next(k for k in range(len(metas)) if offsets[k] <= resolve(full, ref) < offsets[k + 1])
                    for ref in A.column_refs(term)
                }
                if len(owners) == 1:
                    k = owners.pop()
                    # Compile against the full layout first so ambiguity is still reported.
                    compile_expr(term, full, self.mutant)
                    pushed[k].append(compile_expr(term, layouts[k], self.mutant))
                else:
                    residual.append(compile_expr(term, full, self.mutant))
        where_all = compile_expr(folded, full, self.mutant) if core.where is not None and not empty else None
        return (metas, tuple(columns), projections, pushed, residual, empty, core.distinct, where_all)

    def _run_core(self, plan, early_limit: Optional[int]) -> list[tuple]:
        metas, _, projections, pushed, residual, empty, distinct, where_all = plan
        if empty:
            return []
        if early_limit is not None:
            # M5: LIMIT is applied to the raw scan, before filtering.
            candidates = itertools.islice(itertools.product(*[self._all_rows(m) for m in metas]), early_limit)
            combined = [tuple(itertools.chain.from_iterable(parts)) for parts in candidates]
            if where_all is not None:
                combined = [r for r in combined if truth(where_all(r)) is True]
        else:
            per_source = []
            for meta, preds in zip(metas, pushed):
                rows = self._all_rows(meta)
                for pred in preds:
                    kept = []
                    for row in rows:
                        self._tick()
                        if truth(pred(row)) is True:
                            kept.append(row)
                    rows = kept
                per_source.append(rows)
            if len(per_source) == 1:
                combined = per_source[0]
            else:
                combined = []
                for parts in itertools.product(*per_source):
                    self._tick()
                    combined.append(tuple(itertools.chain.from_iterable(parts)))
            for pred in residual:
                kept = []
                for row in combined:
                    self._tick()
                    if truth(pred(row)) is True:
                        kept.append(row)
                combined = kept
        out = []
        for row in combined:
            self._tick()
            out.append(tuple(row[p] if type(p) is int else p(row) for p in projections))
        if distinct:
            out = list(dict.fromkeys(out))
        return out
