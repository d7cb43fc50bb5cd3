"""Executing interactions against an engine and its shadow.

A :class:`Runner` owns one database handle, one shadow state and the
transcript being recorded. Live generation and replay go through the
same :meth:`Runner.run_entry`, so a recorded transcript replays to the
same bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from ..engine import ast as A
from ..engine.database import Database
from ..engine.parser import parse
from ..engine.printer import to_sql
from ..errors import (
    EngineError,
    IoError,
    ModelError,
    QueryInterrupted,
    UserError,
)
from ..shadow import ShadowState, apply
from ..simio import REOPEN, FaultPlan, SimStorage
from . import checks
from .generators import GenContext, Unsatisfied, pick
from .plan import (
    Assert,
    Assume,
    EngineCrash,
    Fail,
    Gen,
    Interact,
    Let,
    Pass,
    Pick,
    PropertyPlan,
    ReopenDatabase,
    Timeout,
    Vacuous,
    Verdict,
)
from .transcript import Check, Entry, Exec, FaultEntry, Note, Transcript, dump_args, load_args

# Errors a statement may legitimately raise. IoError of any kind is always
# acceptable (storage faults); of UserError only the listed kinds.
EXPECTED_USER_ERRORS = frozenset({"too-large"})

DIFFERENTIAL = "Differential"


def is_expected(exc: EngineError) -> bool:
    if isinstance(exc, IoError):
        return True
    return isinstance(exc, UserError) and exc.kind in EXPECTED_USER_ERRORS


class Expected(Exception):
    """An interaction hit an expected error; its plan is abandoned."""


class Failed(Exception):
    def __init__(self, verdict: Verdict):
        super().__init__(verdict)
        self.verdict = verdict


@dataclass(frozen=True)
class Ref:
    """A plan binding that stands for a recorded statement result."""

    name: str


class Runner:
    def __init__(
        self,
        *,
        mutant: Optional[str] = None,
        fault_plan: Optional[FaultPlan] = None,
        timeout_ms: Optional[int] = 1000,
        check_every_step: bool = False,
        storage: Optional[SimStorage] = None,
    ):
        self.storage = storage or SimStorage()
        self.db = Database(self.storage, mutant=mutant)
        self.db.budget = timeout_ms / 1000 if timeout_ms else None
        # Arm only after the initial header write so op numbers start at
        # the first interaction.
        self.storage.arm(fault_plan or FaultPlan())
        self.shadow = ShadowState()
        self.results: dict[str, checks.ResultRef] = {}
        self.entries: list[Entry] = []
        self.labels: dict[int, str] = {}
        self.check_every_step = check_every_step
        self._seen_fired = 0
        self._next_ref = 0
        self._next_group = 0
        self._abandoned: Optional[int] = None

    # -- transcript ----------------------------------------------------

    def transcript(self) -> Transcript:
        return Transcript(tuple(self.entries), tuple(sorted(self.labels.items())))

    def fresh_ref(self) -> str:
        self._next_ref += 1
        return f"r{self._next_ref}"

    def begin_group(self, label: str) -> int:
        self._next_group += 1
        self.labels[self._next_group] = label
        return self._next_group

    def _fail(self, verdict_cls, *args) -> Failed:
        return Failed(verdict_cls(*args, self.transcript()))

    # -- executing entries -------------------------------------------

    def run_entry(self, entry: Entry) -> None:
        """Execute one entry, recording it.

        Raises :class:`Failed` on an oracle failure and :class:`Expected`
        when the entry's plan must be abandoned.
        """
        if isinstance(entry, Note):
            return
        if entry.group is not None and entry.group == self._abandoned:
            return
        self.entries.append(entry)
        if entry.group is not None and entry.group not in self.labels:
            self.labels[entry.group] = "?"
            self._next_group = max(self._next_group, entry.group)
        try:
            if isinstance(entry, Exec):
                self._exec(entry)
            elif isinstance(entry, FaultEntry):
                if entry.kind != REOPEN:
                    raise ModelError(f"unknown fault primitive {entry.kind}")
                self._reopen()
            elif isinstance(entry, Check):
                self._check(entry)
            self._after_io()
            if self.check_every_step and isinstance(entry, Exec):
                self._diff("shadow diff after step")
        except Expected:
            self._after_io()
            if entry.group is not None:
                self._abandoned = entry.group
            raise

    def _exec(self, entry: Exec) -> None:
        try:
            stmt = parse(entry.sql)
        except UserError as exc:
            raise ModelError(f"harness emitted unparseable SQL: {exc}") from exc
        before = self.shadow
        try:
            result = self.db.execute(entry.sql)
        except QueryInterrupted as exc:
            raise self._fail(Timeout, f"{entry.sql}: {exc}")
        except EngineError as exc:
            if is_expected(exc):
                raise Expected(str(exc)) from exc
            raise self._fail(EngineCrash, exc.error_class, f"{exc.message} [{entry.sql}]")
        self.shadow = apply(before, stmt)
        if entry.bind:
            self.results[entry.bind] = checks.ResultRef(entry.bind, stmt, result, before)
            self._next_ref = max(self._next_ref, _ref_number(entry.bind))

    def _reopen(self) -> None:
        # Each planned fault fires at most once, so this terminates.
        for _ in range(len(self.storage.plan.faults) + 1):
            try:
                self.db.reopen()
                return
            except IoError:
                continue
        raise ModelError("database could not be reopened")

    def _resolve(self, arg):
        if isinstance(arg, dict) and set(arg) == {"ref"}:
            ref = self.results.get(arg["ref"])
            if ref is None:
                raise ModelError(f"assertion refers to unbound result {arg['ref']}")
            return ref
        return arg

    def _check(self, entry: Check) -> None:
        args = tuple(self._resolve(a) for a in load_args(entry.args))
        env = checks.CheckEnv(self.db, self.shadow)
        try:
            message = checks.run_check(entry.name, args, env)
        except QueryInterrupted as exc:
            raise self._fail(Timeout, f"during {entry.name}: {exc}")
        except EngineError as exc:
            if is_expected(exc):
                raise Expected(str(exc)) from exc
            raise self._fail(EngineCrash, exc.error_class, f"{exc.message} [during {entry.name}]")
        if message is not None:
            raise self._fail(Fail, entry.label, f"{entry.name}: {message}")

    def _diff(self, what: str) -> None:
        env = checks.CheckEnv(self.db, self.shadow)
        try:
            message = checks.run_check("shadow_diff", (), env)
        except QueryInterrupted as exc:
            raise self._fail(Timeout, f"during {what}: {exc}")
        except EngineError as exc:
            if is_expected(exc):
                return
            raise self._fail(EngineCrash, exc.error_class, f"{exc.message} [during {what}]")
        if message is not None:
            raise self._fail(Fail, DIFFERENTIAL, f"{what}: {message}")

    def _after_io(self) -> None:
        """Record faults fired by the storage plan and honor reopen requests."""
        fired = self.storage.fired
        while self._seen_fired < len(fired):
            self.entries.append(Note(f"fired {fired[self._seen_fired]}"))
            self._seen_fired += 1
        if self.storage.take_reopen_request():
            self._reopen()
            self._after_io()
            self._diff("shadow diff after planned reopen")

    # -- whole transcripts --------------------------------------------

    def replay(self, transcript: Transcript) -> Verdict:
        self.labels.update(dict(transcript.labels))
        for entry in transcript.entries:
            try:
                self.run_entry(entry)
            except Expected:
                continue
            except Failed as f:
                return f.verdict
        return Pass()


def _ref_number(name: str) -> int:
    return int(name[1:]) if name[:1] == "r" and name[1:].isdigit() else 0


def run_property(plan: PropertyPlan, runner: Runner, ctx: GenContext) -> Verdict:
    """Run one plan instance; failures come back as verdicts."""
    group = runner.begin_group(plan.name)
    env: dict = {}
    for step in plan.steps:
        ctx.shadow = runner.shadow
        try:
            if isinstance(step, Pick):
                env[step.name] = pick(step.source(env, ctx), ctx)
            elif isinstance(step, Gen):
                env[step.name] = step.fn(env, ctx)
            elif isinstance(step, Let):
                env[step.name] = step.fn(env)
            elif isinstance(step, Assume):
                if not step.predicate(env):
                    return Vacuous(step.description or "assumption failed")
            elif isinstance(step, Interact):
                item = step.make(env)
                if isinstance(item, ReopenDatabase):
                    runner.run_entry(FaultEntry(item.kind, group))
                else:
                    bind = runner.fresh_ref() if step.bind else None
                    runner.run_entry(Exec(to_sql(item), bind, group))
                    if step.bind:
                        env[step.bind] = Ref(bind)
            elif isinstance(step, Assert):
                args = [{"ref": env[a].name} if isinstance(env[a], Ref) else env[a] for a in step.args]
                runner.run_entry(Check(plan.name, step.check, dump_args(args), group))
            else:
                raise ModelError(f"unknown step {step!r}")
        except Unsatisfied as exc:
            return Vacuous(str(exc))
        except Expected as exc:
            return Vacuous(f"expected error: {exc}")
        except Failed as f:
            return f.verdict
    return Pass()


def execute_statement(runner: Runner, stmt: Union[A.Statement, str]) -> None:
    """Run one workload statement outside any plan."""
    sql = stmt if isinstance(stmt, str) else to_sql(stmt)
    try:
        runner.run_entry(Exec(sql))
    except Expected:
        pass
