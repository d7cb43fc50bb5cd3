"""Property plans: a small embedded combinator language.

A plan is a list of steps run in order against a shared binding
environment::

    PropertyPlan("commutativity", [
        Pick("t", lambda env, ctx: ctx.shadow.table_names()),
        Gen("p", lambda env, ctx: gen_expr(...), uses=("t",)),
        Interact(lambda env: Select(...), bind="rs1", uses=("t", "p")),
        ...
        Assert("multiset_eq", "rs1", "rs2"),
    ])

``Pick`` and ``Gen`` draw from the plan's own random stream; ``Interact``
sends a statement or fault to the database; ``Assume`` turns the run
vacuous when false; ``Assert`` names a registered check whose arguments
are bindings.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence, Union

from ..engine import ast as A


@dataclass(frozen=True)
class ReopenDatabase:
    """Fault primitive: close every connection and open the file again."""

    kind: str = "reopen"


FaultPrimitive = ReopenDatabase


@dataclass(frozen=True)
class Pick:
    name: str
    source: Callable[[dict, Any], Sequence]
    uses: tuple[str, ...] = ()


@dataclass(frozen=True)
class Gen:
    name: str
    fn: Callable[[dict, Any], Any]
    uses: tuple[str, ...] = ()


@dataclass(frozen=True)
class Let:
    name: str
    fn: Callable[[dict], Any]
    uses: tuple[str, ...] = ()


@dataclass(frozen=True)
class Interact:
    make: Callable[[dict], Union[A.Statement, FaultPrimitive]]
    bind: Optional[str] = None
    uses: tuple[str, ...] = ()


@dataclass(frozen=True)
class Assume:
    predicate: Callable[[dict], bool]
    description: str = ""
    uses: tuple[str, ...] = ()


@dataclass(frozen=True)
class Assert:
    check: str
    args: tuple[str, ...] = ()

    def __init__(self, check: str, *args: str):
        object.__setattr__(self, "check", check)
        object.__setattr__(self, "args", tuple(args))

    @property
    def uses(self) -> tuple[str, ...]:
        return self.args


Step = Union[Pick, Gen, Let, Interact, Assume, Assert]


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class PropertyPlan:
    name: str
    steps: tuple[Step, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        defined: set[str] = set()
        for step in self.steps:
            missing = [u for u in step.uses if u not in defined]
            if missing:
                raise PlanError(f"plan {self.name}: {type(step).__name__} uses undefined {missing}")
            name = getattr(step, "name", None) or getattr(step, "bind", None)
            if name:
                if name in defined:
                    raise PlanError(f"plan {self.name}: {name} bound twice")
                defined.add(name)


# -- verdicts -----------------------------------------------------------

@dataclass(frozen=True)
class Pass:
    pass


@dataclass(frozen=True)
class Vacuous:
    reason: str = ""


@dataclass(frozen=True)
class Fail:
    label: str
    assertion: str
    transcript: Any = None

    @property
    def description(self) -> str:
        return self.assertion


@dataclass(frozen=True)
class EngineCrash:
    error_class: str
    message: str
    transcript: Any = None

    @property
    def label(self) -> str:
        return classify_failure(self)

    @property
    def description(self) -> str:
        return f"{self.error_class}: {self.message}"


@dataclass(frozen=True)
class Timeout:
    message: str = ""
    transcript: Any = None

    @property
    def label(self) -> str:
        return "No Infinite Loop"

    @property
    def description(self) -> str:
        return f"timeout: {self.message}"


Verdict = Union[Pass, Vacuous, Fail, EngineCrash, Timeout]


def classify_failure(outcome) -> str:
    """Oracle label for a non-passing outcome."""
    if isinstance(outcome, Timeout):
        return "No Infinite Loop"
    if isinstance(outcome, EngineCrash):
        if outcome.error_class == "InternalInvariantViolation":
            return "No Panic"
        return "No Error"
    if isinstance(outcome, Fail):
        return outcome.label
    raise ValueError(f"{type(outcome).__name__} is not a failure")


def is_failure(v) -> bool:
    return isinstance(v, (Fail, EngineCrash, Timeout))
