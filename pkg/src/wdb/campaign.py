"""Campaigns: workload generation interleaved with oracle plans."""

from __future__ import annotations

import hashlib
import json
import os
import random
import time
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from . import bugseed, oracles
from .engine.printer import to_sql
from .errors import ConfigError
from .genactions.generators import GenContext, Limits
from .genactions.plan import Pass, Vacuous, Verdict, classify_failure, is_failure
from .genactions.session import Expected, Failed, Runner, run_property
from .genactions.transcript import Exec, Transcript
from .shadow import dump
from .shrink import reduce
from .simio import FaultPlan
from .workload import WorkloadDistribution, gen_interaction

DEFAULT_CADENCE = 10
DEFAULT_TIMEOUT_MS = 1000

EXIT_CLEAN = 0
EXIT_BUG = 1
EXIT_CONFIG = 2


@dataclass(frozen=True)
class Config:
    seed: int = 1
    interactions: int = 1000
    dist: WorkloadDistribution = field(default_factory=WorkloadDistribution)
    oracles: tuple[str, ...] = oracles.DEFAULT_ORACLES
    mutant: Optional[str] = None
    fault_plan: FaultPlan = field(default_factory=FaultPlan)
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    shrink: bool = True
    report_dir: Optional[str] = None
    cadence: int = DEFAULT_CADENCE
    check_every_step: bool = False

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.interactions < 0:
            raise ConfigError("interaction count must be non-negative")
        if self.cadence < 1:
            raise ConfigError("oracle cadence must be at least 1")
        if self.timeout_ms is not None and self.timeout_ms <= 0:
            raise ConfigError("timeout must be positive")
        if not self.oracles:
            raise ConfigError("at least one oracle is required")
        oracles.parse_oracles(",".join(self.oracles))
        if self.mutant is not None:
            object.__setattr__(self, "mutant", bugseed.get(self.mutant).id)

    def describe(self) -> dict:
        """The settings that determine a run's outcome."""
        return {
            "seed": self.seed,
            "interactions": self.interactions,
            "dist": str(self.dist),
            "oracles": list(self.oracles),
            "mutant": self.mutant,
            "fault_plan": self.fault_plan.to_text(),
            "timeout_ms": self.timeout_ms,
            "cadence": self.cadence,
            "check_every_step": self.check_every_step,
        }

    def fingerprint(self) -> str:
        blob = json.dumps(self.describe(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class CampaignResult:
    config: Config
    verdict: Verdict
    transcript: Transcript
    stats: dict
    shadow_text: str
    minimized: Optional[Transcript] = None
    shrink_seconds: float = 0.0
    report_path: Optional[Path] = None

    @property
    def failed(self) -> bool:
        return is_failure(self.verdict)

    @property
    def label(self) -> Optional[str]:
        return classify_failure(self.verdict) if self.failed else None

    @property
    def exit_code(self) -> int:
        return EXIT_BUG if self.failed else EXIT_CLEAN


def make_runner(config: Config, timeout_ms: Optional[int] = None) -> Runner:
    return Runner(
        mutant=config.mutant,
        fault_plan=config.fault_plan,
        timeout_ms=timeout_ms if timeout_ms is not None else config.timeout_ms,
        check_every_step=config.check_every_step,
    )


def run_campaign(config: Config, on_cadence=None) -> CampaignResult:
    """Run one campaign.

    ``on_cadence``, if given, is called with the runner at every oracle
    cadence point, before the plan for that point is chosen.
    """
    rng = random.Random(config.seed)
    runner = make_runner(config)
    wctx = GenContext(random.Random(rng.getrandbits(64)), runner.shadow, Limits())
    stats: Counter = Counter()
    verdict: Verdict = Pass()
    for n in range(config.interactions):
        stmt = gen_interaction(runner.shadow, config.dist, wctx)
        stats["interactions"] += 1
        try:
            runner.run_entry(Exec(to_sql(stmt)))
        except Expected:
            stats["expected_errors"] += 1
        except Failed as f:
            verdict = f.verdict
            break
        if (n + 1) % config.cadence:
            continue
        if on_cadence is not None:
            on_cadence(runner)
        name = config.oracles[rng.randrange(len(config.oracles))]
        prng = random.Random(rng.getrandbits(64))
        plan = oracles.ORACLES[name](prng)
        v = run_property(plan, runner, GenContext(prng, runner.shadow, wctx.limits))
        stats["plans"] += 1
        stats[f"{name}:{type(v).__name__.lower()}"] += 1
        if isinstance(v, Vacuous):
            stats["vacuous"] += 1
        elif isinstance(v, Pass):
            stats["pass"] += 1
        if is_failure(v):
            verdict = v
            break
    stats["storage_ops"] = runner.storage.ops
    transcript = runner.transcript()
    result = CampaignResult(config, verdict, transcript, dict(stats), dump(runner.shadow))
    if result.failed and config.shrink:
        start = time.monotonic()
        result.minimized = reduce(transcript, result.label, config)
        result.shrink_seconds = time.monotonic() - start
    if result.failed and config.report_dir:
        result.report_path = write_report(result, Path(config.report_dir))
    return result


def replay_transcript(transcript: Transcript, config: Config, timeout_ms: Optional[int] = None) -> tuple[Verdict, Runner]:
    runner = make_runner(config, timeout_ms)
    return runner.replay(transcript), runner


# -- reports ------------------------------------------------------------

REPORT_SCHEMA = 1


def write_report(result: CampaignResult, root: Path) -> Path:
    cfg = result.config
    out = root / f"seed-{cfg.seed}-{cfg.fingerprint()}"
    out.mkdir(parents=True, exist_ok=True)
    repro = result.minimized or result.transcript
    (out / "repro.sql").write_text(repro.to_sql(), encoding="utf-8")
    (out / "transcript.sql").write_text(result.transcript.to_sql(), encoding="utf-8")
    (out / "shadow.txt").write_text(result.shadow_text, encoding="utf-8")
    (out / "faults.txt").write_text(cfg.fault_plan.to_text(), encoding="utf-8")
    report = {
        "schema": REPORT_SCHEMA,
        "seed": cfg.seed,
        "config": cfg.describe(),
        "fingerprint": cfg.fingerprint(),
        "label": result.label,
        "verdict": type(result.verdict).__name__,
        "detail": result.verdict.description,
        "original_length": len(result.transcript.interactions()),
        "minimized_length": len(repro.interactions()),
        "repro": "repro.sql",
        "shadow": "shadow.txt",
        "faults": "faults.txt",
        "stats": result.stats,
    }
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return out


def load_report(path: str | os.PathLike) -> tuple[dict, Transcript, Config]:
    path = Path(path)
    if path.is_dir():
        path = path / "report.json"
    report = json.loads(path.read_text(encoding="utf-8"))
    repro = Transcript.from_sql((path.parent / report.get("repro", "repro.sql")).read_text(encoding="utf-8"))
    d = report["config"]
    config = Config(
        seed=d["seed"],
        interactions=d["interactions"],
        dist=WorkloadDistribution.parse(d["dist"]),
        oracles=tuple(d["oracles"]),
        mutant=d["mutant"],
        fault_plan=FaultPlan.from_text(d["fault_plan"]),
        timeout_ms=d["timeout_ms"],
        cadence=d["cadence"],
        check_every_step=d["check_every_step"],
        shrink=False,
    )
    return report, repro, config


@dataclass
class MatrixRow:
    mutant: str
    oracle_set: str
    seed: Optional[int]  # first detecting seed
    label: Optional[str]
    expected: bool
    original_length: int = 0
    minimized_length: int = 0
    shrink_seconds: float = 0.0
    clean: bool = True  # the same seeds pass with the mutant inactive
    repro: Optional[Transcript] = None

    @property
    def detected(self) -> bool:
        return self.seed is not None and self.expected and self.clean


def run_matrix(base: Config, max_seeds: int = 50, mutants=None, progress=None) -> list[MatrixRow]:
    """Detection table: every mutant, with its targeted oracles and with all of them."""
    clean_cache: dict[tuple, bool] = {}

    def clean(oracle_set: tuple[str, ...], seed: int) -> bool:
        key = (oracle_set, seed)
        if key not in clean_cache:
            cfg = replace(base, seed=seed, oracles=oracle_set, mutant=None, shrink=False, report_dir=None)
            clean_cache[key] = not run_campaign(cfg).failed
        return clean_cache[key]

    rows = []
    for m in mutants or bugseed.list_mutants():
        for set_name, oracle_set in (("targeted", m.oracles), ("all", base.oracles)):
            row = MatrixRow(m.id, set_name, None, None, False)
            for seed in range(1, max_seeds + 1):
                result = run_campaign(replace(base, seed=seed, oracles=oracle_set, mutant=m.id))
                if result.failed:
                    row.seed, row.label = seed, result.label
                    row.expected = result.label in m.expected
                    row.original_length = len(result.transcript.interactions())
                    minimized = result.minimized or result.transcript
                    row.minimized_length = len(minimized.interactions())
                    row.repro = minimized
                    row.shrink_seconds = result.shrink_seconds
                    break
            last = row.seed or max_seeds
            row.clean = all(clean(oracle_set, s) for s in range(1, last + 1))
            rows.append(row)
            if progress:
                progress(row)
    return rows


def format_matrix(rows: list[MatrixRow]) -> str:
    head = ("mutant", "oracles", "seed", "label", "expected", "length", "shrunk", "shrink_s", "clean")
    table = [head]
    for r in rows:
        table.append((
            r.mutant,
            r.oracle_set,
            str(r.seed) if r.seed else "-",
            r.label or "not detected",
            "yes" if r.expected else "no",
            str(r.original_length),
            str(r.minimized_length),
            f"{r.shrink_seconds:.1f}",
            "yes" if r.clean else "no",
        ))
    widths = [max(len(row[i]) for row in table) for i in range(len(head))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in table) + "\n"
