"""Page storage with deterministic fault injection.

Every page read or write is one numbered I/O operation (1-based, counted
since the last :meth:`SimStorage.arm`). A :class:`FaultPlan` lists faults
keyed on those numbers. The fault vocabulary is ``read_error``,
``write_error`` and ``reopen``; the first two are this package's minimal
extension around the reopen primitive.

Plan text form, one fault per line::

    op#12 read_error
    op#40 write_error 3
    op#77 reopen

A trailing page number restricts the trigger to the first matching
operation on that page at or after the given index.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from typing import Optional

from .errors import ConfigError, IoError

READ_ERROR = "read_error"
WRITE_ERROR = "write_error"
REOPEN = "reopen"
FAULT_KINDS = (READ_ERROR, WRITE_ERROR, REOPEN)

DEFAULT_PAGE_SIZE = 4096

_LINE = re.compile(r"op#(\d+)\s+(\w+)(?:\s+(\d+))?")


@dataclass(frozen=True)
class Fault:
    op: int
    kind: str
    page: Optional[int] = None

    def __str__(self) -> str:
        tail = f" {self.page}" if self.page is not None else ""
        return f"op#{self.op} {self.kind}{tail}"


@dataclass(frozen=True)
class FaultPlan:
    faults: tuple[Fault, ...] = ()

    def __post_init__(self):
        last = 0
        for f in self.faults:
            if f.kind not in FAULT_KINDS:
                raise ConfigError(f"unknown fault kind {f.kind!r}")
            if f.op <= last:
                raise ConfigError("fault triggers must be strictly increasing operation numbers")
            last = f.op

    def __bool__(self) -> bool:
        return bool(self.faults)

    def to_text(self) -> str:
        return "".join(f"{f}\n" for f in self.faults)

    @classmethod
    def from_text(cls, text: str) -> "FaultPlan":
        faults = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            m = _LINE.fullmatch(line)
            if m is None:
                raise ConfigError(f"fault plan line {lineno}: cannot parse {line!r}")
            page = int(m.group(3)) if m.group(3) else None
            faults.append(Fault(int(m.group(1)), m.group(2), page))
        return cls(tuple(faults))

    @classmethod
    def single(cls, op: int, kind: str, page: Optional[int] = None) -> "FaultPlan":
        return cls((Fault(op, kind, page),))


class MemoryBackend:
    def __init__(self):
        self.pages: dict[int, bytes] = {}

    def read(self, n: int) -> Optional[bytes]:
        return self.pages.get(n)

    def write(self, n: int, data: bytes) -> None:
        self.pages[n] = data

    def is_empty(self) -> bool:
        return not self.pages

    def close(self) -> None:
        pass


class FileBackend:
    def __init__(self, path: str | os.PathLike, page_size: int):
        self.path = os.fspath(path)
        self.page_size = page_size
        try:
            self.fd = os.open(self.path, os.O_RDWR | os.O_CREAT, 0o644)
        except OSError as exc:
            raise IoError(f"cannot open {self.path}: {exc}") from exc

    def read(self, n: int) -> Optional[bytes]:
        data = os.pread(self.fd, self.page_size, n * self.page_size)
        return data if len(data) == self.page_size else None

    def write(self, n: int, data: bytes) -> None:
        os.pwrite(self.fd, data, n * self.page_size)

    def is_empty(self) -> bool:
        return os.fstat(self.fd).st_size == 0

    def close(self) -> None:
        if self.fd >= 0:
            os.close(self.fd)
            self.fd = -1


@dataclass
class FiredFault:
    op: int
    kind: str
    page: int

    def __str__(self) -> str:
        return f"op#{self.op} {self.kind} {self.page}"


class SimStorage:
    """The storage a database handle sits on.

    It outlives handles: closing and reopening a database keeps the same
    storage object, so only persisted bytes carry over.
    """

    def __init__(self, backend=None, page_size: int = DEFAULT_PAGE_SIZE, plan: Optional[FaultPlan] = None):
        self.backend = backend if backend is not None else MemoryBackend()
        self.page_size = page_size
        self.plan = FaultPlan()
        self.ops = 0
        self._next = 0
        self.reopen_requested = False
        self.fired: list[FiredFault] = []
        if plan is not None:
            self.arm(plan)

    @classmethod
    def at(cls, path, page_size: int = DEFAULT_PAGE_SIZE) -> "SimStorage":
        if path is None or path == ":memory:":
            return cls(page_size=page_size)
        return cls(FileBackend(path, page_size), page_size)

    def arm(self, plan: FaultPlan) -> None:
        """Replace the active plan and restart operation counting."""
        self.plan = plan
        self.ops = 0
        self._next = 0
        self.reopen_requested = False
        self.fired = []

    def is_empty(self) -> bool:
        return self.backend.is_empty()

    def _tick(self, is_write: bool, n: int) -> None:
        self.ops += 1
        if self._next >= len(self.plan.faults):
            return
        f = self.plan.faults[self._next]
        if self.ops < f.op or (f.page is not None and f.page != n):
            return
        if f.kind == READ_ERROR and is_write or f.kind == WRITE_ERROR and not is_write:
            return
        self._next += 1
        self.fired.append(FiredFault(self.ops, f.kind, n))
        if f.kind == REOPEN:
            self.reopen_requested = True
            return
        verb = "write" if is_write else "read"
        raise IoError(f"simulated {verb} error on page {n} (op#{self.ops})")

    def read_page(self, n: int) -> bytes:
        self._tick(False, n)
        data = self.backend.read(n)
        if data is None:
            raise IoError(f"short read on page {n}")
        return data

    def write_page(self, n: int, data: bytes) -> None:
        if len(data) != self.page_size:
            raise ValueError(f"page {n}: expected {self.page_size} bytes, got {len(data)}")
        self._tick(True, n)
        self.backend.write(n, bytes(data))

    def take_reopen_request(self) -> bool:
        requested, self.reopen_requested = self.reopen_requested, False
        return requested

    def close(self) -> None:
        self.backend.close()
