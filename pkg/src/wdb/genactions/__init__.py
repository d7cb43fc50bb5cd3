"""Generation actions: generators, property plans and their runtime."""

from .generators import (
    GenContext,
    InScope,
    Limits,
    Unsatisfied,
    gen_expr,
    gen_pivot_true_expr,
    gen_row,
    gen_value,
    pick,
)
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
    classify_failure,
)
from .session import Runner, run_property
from .transcript import Transcript

__all__ = [
    "Assert", "Assume", "EngineCrash", "Fail", "Gen", "GenContext", "InScope", "Interact", "Let",
    "Limits", "Pass", "Pick", "PropertyPlan", "ReopenDatabase", "Runner", "Timeout", "Transcript",
    "Unsatisfied", "Vacuous", "classify_failure", "gen_expr", "gen_pivot_true_expr", "gen_row",
    "gen_value", "pick", "run_property",
]
