"""Reduction of failing transcripts.

Candidates are subsequences of the failing transcript, optionally with
simplified expressions and literals. Each candidate must first pass a
well-formedness gate (re-simulated on a fresh shadow, every assertion's
results bound earlier) and is only then replayed on a fresh engine; it is
kept when it fails with exactly the original oracle label.
"""

from __future__ import annotations

import math
import time
from dataclasses import replace
from typing import Iterator, Sequence

from .engine import ast as A
from .engine.parser import parse
from .engine.printer import to_sql
from .errors import ModelError, NotReproducible, UserError
from .genactions.plan import classify_failure, is_failure
from .genactions.session import Runner
from .genactions.transcript import Check, Entry, Exec, Note, Transcript, load_args
from .shadow import ShadowState, apply

DEFAULT_BUDGET = 3000
DEFAULT_SECONDS = 60.0
# Replays during reduction use a short statement budget; runaway loops
# still exceed it, and passing candidates finish far below it.
SHRINK_TIMEOUT_MS = 250


def well_formed(entries: Sequence[Entry]) -> bool:
    """Statements re-simulate on a fresh shadow and assertions only use bound results."""
    st = ShadowState()
    bound: set[str] = set()
    for e in entries:
        if isinstance(e, Exec):
            try:
                st = apply(st, parse(e.sql))
            except (ModelError, UserError):
                return False
            if e.bind:
                bound.add(e.bind)
        elif isinstance(e, Check):
            for arg in load_args(e.args):
                if isinstance(arg, dict) and arg.get("ref") not in bound:
                    return False
    return True


class Reducer:
    def __init__(self, transcript: Transcript, label: str, config, budget: int = DEFAULT_BUDGET,
                 seconds: float = DEFAULT_SECONDS):
        self.original = transcript
        self.label = label
        self.config = config
        self.budget = budget
        self.deadline = time.monotonic() + seconds
        self.attempts = 0
        self._memo: dict[tuple, bool] = {}
        self.timeout_ms = min(config.timeout_ms or SHRINK_TIMEOUT_MS, SHRINK_TIMEOUT_MS)

    def exhausted(self) -> bool:
        return self.attempts >= self.budget or time.monotonic() > self.deadline

    def replay(self, entries: Sequence[Entry]):
        runner = Runner(
            mutant=self.config.mutant,
            fault_plan=self.config.fault_plan,
            timeout_ms=self.timeout_ms,
            check_every_step=self.config.check_every_step,
        )
        try:
            verdict = runner.replay(self.original.replace_entries(tuple(entries)))
        except ModelError:
            return None, runner
        return verdict, runner

    def reproduces(self, entries: Sequence[Entry]) -> bool:
        key = tuple(entries)
        if key in self._memo:
            return self._memo[key]
        if self.exhausted() or not well_formed(entries):
            return False
        self.attempts += 1
        verdict, _ = self.replay(entries)
        ok = verdict is not None and is_failure(verdict) and classify_failure(verdict) == self.label
        self._memo[key] = ok
        return ok

    # -- passes ---------------------------------------------------------

    def initial(self) -> list[Entry]:
        entries = [e for e in self.original.entries if not isinstance(e, Note)]
        verdict, runner = self.replay(entries)
        if verdict is None or not is_failure(verdict) or classify_failure(verdict) != self.label:
            got = "pass" if verdict is None or not is_failure(verdict) else classify_failure(verdict)
            raise NotReproducible(f"replay gave {got}, expected {self.label}")
        # Everything after the failing entry is irrelevant.
        done = [e for e in runner.entries if not isinstance(e, Note)]
        return entries[: len(done)]

    def drop_other_plans(self, entries: list[Entry]) -> list[Entry]:
        failing_group = entries[-1].group
        candidate = [e for e in entries if e.group is None or e.group == failing_group]
        return candidate if candidate != entries and self.reproduces(candidate) else entries

    def slice_tables(self, entries: list[Entry]) -> list[Entry]:
        """Keep only entries that touch the tables of the failing interaction."""
        failing_group = entries[-1].group
        core = [entries[-1]] if failing_group is None else [e for e in entries if e.group == failing_group]
        wanted: set[str] = set()
        for e in core:
            if isinstance(e, Exec):
                wanted.update(A.statement_tables(parse(e.sql)))
        if not wanted:
            return entries
        last = entries[-1]

        def keep(e: Entry) -> bool:
            if e is last or failing_group is not None and e.group == failing_group:
                return True
            return isinstance(e, Exec) and set(A.statement_tables(parse(e.sql))) <= wanted

        candidate = [e for e in entries if keep(e)]
        return candidate if candidate != entries and self.reproduces(candidate) else entries

    def ddmin(self, entries: list[Entry]) -> list[Entry]:
        """Delta debugging over everything before the failing entry."""
        head, last = entries[:-1], entries[-1]
        n = 2
        while len(head) >= 2 and not self.exhausted():
            chunk = math.ceil(len(head) / n)
            reduced = False
            for start in range(0, len(head), chunk):
                candidate = head[:start] + head[start + chunk:]
                if self.reproduces(candidate + [last]):
                    head = candidate
                    n = max(n - 1, 2)
                    reduced = True
                    break
            if not reduced:
                if n >= len(head):
                    break
                n = min(len(head), n * 2)
        if len(head) == 1 and self.reproduces([last]):
            head = []
        return head + [last]

    def one_minimal(self, entries: list[Entry]) -> list[Entry]:
        changed = True
        while changed and not self.exhausted():
            changed = False
            for i in reversed(range(len(entries))):
                candidate = entries[:i] + entries[i + 1:]
                if candidate and self.reproduces(candidate):
                    entries = candidate
                    changed = True
                    break
        return entries

    def drop_pairs(self, entries: list[Entry]) -> list[Entry]:
        """Remove two entries at once, e.g. a CREATE and its matching DROP."""
        if len(entries) > 40:
            return entries
        i = 0
        while i < len(entries) - 1 and not self.exhausted():
            for j in range(i + 1, len(entries) - 1):
                candidate = entries[:i] + entries[i + 1:j] + entries[j + 1:]
                if self.reproduces(candidate):
                    entries = candidate
                    break
            else:
                i += 1
        return entries

    def simplify(self, entries: list[Entry]) -> list[Entry]:
        for i in range(len(entries)):
            progress = True
            while progress and isinstance(entries[i], Exec) and not self.exhausted():
                progress = False
                e = entries[i]
                for stmt in simplified_statements(parse(e.sql)):
                    sql = to_sql(stmt)
                    if len(sql) >= len(e.sql):  # strictly shorter, so this terminates
                        continue
                    candidate = entries[:i] + [replace(e, sql=sql)] + entries[i + 1:]
                    if self.reproduces(candidate):
                        entries = candidate
                        progress = True
                        break
        return entries

    def run(self) -> list[Entry]:
        entries = self.initial()
        passes = (
            self.drop_other_plans,
            self.slice_tables,
            self.ddmin,
            self.simplify,
            self.ddmin,
            self.drop_pairs,
            self.one_minimal,
        )
        for step in passes:
            if self.exhausted():
                break
            entries = step(entries)
        return entries


def reduce(failing: Transcript, label: str, config, budget: int = DEFAULT_BUDGET,
           seconds: float = DEFAULT_SECONDS) -> Transcript:
    """Minimize ``failing`` while it keeps failing with ``label``.

    Raises :class:`NotReproducible` when the transcript does not fail
    that way to begin with.
    """
    reducer = Reducer(failing, label, config, budget, seconds)
    entries = reducer.run()
    # Record the final replay so the script carries fired-fault notes.
    _, runner = reducer.replay(entries)
    recorded = runner.transcript()
    return recorded if len(recorded.interactions()) == len(entries) else failing.replace_entries(tuple(entries))


# -- expression simplification ------------------------------------------

_SIMPLEST = {int: 0, float: 0.0, str: "", bytes: b""}


def _expr_candidates(e: A.Expression) -> Iterator[A.Expression]:
    """Simpler variants of ``e``, most aggressive first."""
    if not (isinstance(e, A.Literal) and e.value == 1):
        yield A.TRUE
    if isinstance(e, A.Paren):
        yield e.inner
    if isinstance(e, A.Literal) and e.value is not None:
        simplest = _SIMPLEST[type(e.value)]
        if e.value != simplest or e.spelling:
            yield A.Literal(simplest)
    kids = A.children(e)
    for k, child in enumerate(kids):
        for sub in _expr_candidates(child):
            yield _with_child(e, k, sub)


def _with_child(e: A.Expression, k: int, child: A.Expression) -> A.Expression:
    if isinstance(e, A.Unary):
        return A.Unary(e.op, child)
    if isinstance(e, A.Paren):
        return A.Paren(child)
    if isinstance(e, A.Binary):
        return A.Binary(e.op, child, e.right) if k == 0 else A.Binary(e.op, e.left, child)
    if isinstance(e, A.Between):
        parts = [e.operand, e.low, e.high]
        parts[k] = child
        return A.Between(*parts)
    raise ValueError(f"{e!r} has no children")


def simplified_statements(s: A.Statement, limit: int = 200) -> Iterator[A.Statement]:
    """Candidate simplifications of one statement, in a fixed order."""
    count = 0

    def emit(x):
        nonlocal count
        count += 1
        return count <= limit

    if isinstance(s, A.Insert):
        if len(s.rows) > 1:
            for k in range(len(s.rows)):
                if not emit(None):
                    return
                yield replace(s, rows=s.rows[:k] + s.rows[k + 1:])
        for r, row in enumerate(s.rows):
            for c, v in enumerate(row):
                if v is None or v == _SIMPLEST[type(v)]:
                    continue
                new_row = row[:c] + (_SIMPLEST[type(v)],) + row[c + 1:]
                if not emit(None):
                    return
                yield replace(s, rows=s.rows[:r] + (new_row,) + s.rows[r + 1:])
        return
    if isinstance(s, (A.Delete, A.Update)) and s.where is not None:
        for w in _expr_candidates(s.where):
            if not emit(None):
                return
            yield replace(s, where=w)
    if isinstance(s, A.Update):
        for k, (col, e) in enumerate(s.assignments):
            if len(s.assignments) > 1:
                yield replace(s, assignments=s.assignments[:k] + s.assignments[k + 1:])
    if isinstance(s, A.Select):
        if s.limit is not None:
            yield replace(s, limit=None)
        if s.compound:
            yield replace(s, compound=())
        if s.where is not None:
            yield replace(s, where=None)
            for w in _expr_candidates(s.where):
                if not emit(None):
                    return
                yield replace(s, where=w)
