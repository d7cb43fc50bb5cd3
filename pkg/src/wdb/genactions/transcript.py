"""Transcripts and their ``.sql`` repro-script form.

One statement per line, terminated by ``;``. Directives are comment
lines, so the script is also plain SQL::

    CREATE TABLE t0 (a INTEGER);
    -- plan: 1 PQS
    -- bind: r1
    SELECT a.a FROM t0 AS a WHERE a.a = 1;
    -- assert: PQS contains [{"ref": "r1"}, [1]]
    -- fault: reopen
    -- end plan
    -- note: fired op#40 reopen 0

``bind`` names the result of the next statement. ``note`` lines record
faults fired by the storage fault plan; they are informational and
ignored on replay.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Optional, Union

from ..errors import ConfigError

HEADER = "-- wdb transcript v1"


@dataclass(frozen=True)
class Exec:
    sql: str
    bind: Optional[str] = None
    group: Optional[int] = None


@dataclass(frozen=True)
class FaultEntry:
    kind: str = "reopen"
    group: Optional[int] = None


@dataclass(frozen=True)
class Check:
    label: str
    name: str
    args: str  # canonical JSON list
    group: Optional[int] = None


@dataclass(frozen=True)
class Note:
    text: str
    group: Optional[int] = None


Entry = Union[Exec, FaultEntry, Check, Note]


def encode_arg(v: Any) -> Any:
    """Turn a check argument into JSON-compatible data."""
    if isinstance(v, bytes):
        return {"blob": v.hex()}
    if isinstance(v, (list, tuple)):
        return [encode_arg(x) for x in v]
    if isinstance(v, dict):
        return {k: encode_arg(x) for k, x in v.items()}
    return v


def decode_arg(v: Any) -> Any:
    if isinstance(v, dict):
        if set(v) == {"blob"}:
            return bytes.fromhex(v["blob"])
        return {k: decode_arg(x) for k, x in v.items()}
    if isinstance(v, list):
        return tuple(decode_arg(x) for x in v)
    return v


def dump_args(args) -> str:
    return json.dumps(encode_arg(list(args)), ensure_ascii=False, separators=(", ", ": "))


def load_args(text: str) -> tuple:
    return decode_arg(json.loads(text))


@dataclass(frozen=True)
class Transcript:
    entries: tuple[Entry, ...] = ()
    labels: tuple[tuple[int, str], ...] = ()  # plan group -> plan name

    def __len__(self) -> int:
        return len(self.entries)

    def label_of(self, group: Optional[int]) -> Optional[str]:
        return dict(self.labels).get(group) if group is not None else None

    def interactions(self) -> list[Entry]:
        """Entries that count as interactions (everything except notes)."""
        return [e for e in self.entries if not isinstance(e, Note)]

    def replace_entries(self, entries) -> "Transcript":
        groups = {e.group for e in entries}
        return Transcript(tuple(entries), tuple((g, l) for g, l in self.labels if g in groups))

    def to_sql(self) -> str:
        lines = [HEADER]
        labels = dict(self.labels)
        current: Optional[int] = None
        for e in self.entries:
            if e.group != current:
                if current is not None:
                    lines.append("-- end plan")
                if e.group is not None:
                    lines.append(f"-- plan: {e.group} {labels.get(e.group, '?')}")
                current = e.group
            if isinstance(e, Exec):
                if e.bind:
                    lines.append(f"-- bind: {e.bind}")
                lines.append(e.sql + ";")
            elif isinstance(e, FaultEntry):
                lines.append(f"-- fault: {e.kind}")
            elif isinstance(e, Check):
                lines.append(f"-- assert: {e.label} {e.name} {e.args}")
            elif isinstance(e, Note):
                lines.append(f"-- note: {e.text}")
        if current is not None:
            lines.append("-- end plan")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_sql(cls, text: str) -> "Transcript":
        entries: list[Entry] = []
        labels: dict[int, str] = {}
        group: Optional[int] = None
        bind: Optional[str] = None
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line == HEADER:
                continue
            if line.startswith("--"):
                body = line[2:].strip()
                key, _, rest = body.partition(":")
                rest = rest.strip()
                if body == "end plan":
                    group = None
                elif key == "plan":
                    num, _, label = rest.partition(" ")
                    group = int(num)
                    labels[group] = label
                elif key == "bind":
                    bind = rest
                elif key == "fault":
                    entries.append(FaultEntry(rest, group))
                elif key == "assert":
                    parts = rest.split(" ", 2)
                    if len(parts) != 3:
                        raise ConfigError(f"line {lineno}: malformed assert")
                    entries.append(Check(parts[0], parts[1], parts[2], group))
                elif key == "note":
                    entries.append(Note(rest, group))
                # any other comment is ignored
                continue
            if not line.endswith(";"):
                raise ConfigError(f"line {lineno}: statement must end with ';'")
            entries.append(Exec(line[:-1], bind, group))
            bind = None
        return cls(tuple(entries), tuple(sorted(labels.items())))
