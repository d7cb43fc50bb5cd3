"""Seeded engine defects.

Each mutant is a guarded branch in the engine, switched on by the
``mutant`` id a :class:`~wdb.engine.Database` is constructed with. The
id is read once at construction; at most one mutant is active.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import ConfigError


@dataclass(frozen=True)
class Mutant:
    id: str
    description: str
    site: str
    # Oracle labels that count as detecting this mutant.
    expected: tuple[str, ...]
    # Oracles (CLI names) a targeted campaign runs with.
    oracles: tuple[str, ...]
    bug_shape: str


MUTANTS: dict[str, Mutant] = {
    m.id: m
    for m in (
        Mutant(
            "M0",
            "parser rejects TRUE and FALSE as expressions",
            "engine.parser.Parser.literal",
            ("No Error",),
            ("pqs", "norec", "tlp", "delsel", "unionall", "shadow"),
            "TRUE not accepted as a catch-all predicate",
        ),
        Mutant(
            "M1",
            "DELETE drops constant terms of its WHERE clause; a wholly constant WHERE deletes everything",
            "engine.database.Database._row_filter",
            ("Delete-Select", "Differential"),
            ("delsel",),
            "DELETE did not emit conditional jumps for constant terms",
        ),
        Mutant(
            "M2",
            "AND/OR yield NULL whenever either operand is NULL",
            "engine.evaluator._binary",
            ("PQS", "NoREC", "TLP", "Delete-Select", "Differential"),
            ("pqs",),
            "faulty recursive binary-operator logic",
        ),
        Mutant(
            "M3",
            "reopen restores the header and schema cached at first open",
            "engine.database.Database.reopen",
            ("Differential", "No Panic", "No Error"),
            ("shadow",),
            "database header and schema not re-read from the file",
        ),
        Mutant(
            "M4",
            "LIKE with a non-TEXT operand trips an internal assertion",
            "engine.evaluator.like",
            ("No Panic",),
            ("pqs", "norec", "tlp", "delsel", "unionall", "shadow"),
            "LIKE mishandles non-text operands",
        ),
        Mutant(
            "M5",
            "LIMIT is applied to the scan before WHERE filtering",
            "engine.database.Database._run_core",
            ("Differential",),
            ("shadow",),
            "SELECT ... LIMIT returns different rows",
        ),
        Mutant(
            "M6",
            "UPDATE cursor does not advance past a row the SET leaves unchanged",
            "engine.database.Database._update",
            ("No Infinite Loop",),
            ("pqs", "norec", "tlp", "delsel", "unionall", "shadow"),
            "infinite loop in UPDATE",
        ),
    )
}


def list_mutants() -> list[Mutant]:
    return list(MUTANTS.values())


def get(mutant_id: str) -> Mutant:
    m = MUTANTS.get(mutant_id.upper())
    if m is None:
        raise ConfigError(f"unknown mutant {mutant_id!r}; choose from {', '.join(MUTANTS)}")
    return m


_active: Optional[str] = None


def activate(mutant_id: Optional[str]) -> Optional[str]:
    """Select the mutant new database handles are built with by default."""
    global _active
    _active = None if mutant_id is None else get(mutant_id).id
    return _active


def active() -> Optional[str]:
    return _active
