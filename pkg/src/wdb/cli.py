"""Command-line entry point.

Every flag can also be set through an environment variable named after
it (``--timeout-ms`` is ``WDB_TIMEOUT_MS``); a flag given on the command
line wins over the environment.

Exit status: 0 clean (or FIXED on replay), 1 bug found (or STILL-FAILING),
2 configuration error, 3 nondeterminism or harness defect.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from . import bugseed, oracles
from .campaign import (
    EXIT_BUG,
    EXIT_CLEAN,
    EXIT_CONFIG,
    Config,
    format_matrix,
    load_report,
    replay_transcript,
    run_campaign,
    run_matrix,
)
from .errors import ConfigError, ModelError, NotReproducible
from .genactions.plan import classify_failure, is_failure
from .genactions.transcript import Transcript
from .simio import FaultPlan
from .workload import WorkloadDistribution

EXIT_NONDETERMINISM = 3

FLAGS = (
    "seed", "interactions", "dist", "oracles", "mutant", "fault-plan", "timeout-ms",
    "shrink", "report-dir", "matrix", "replay", "jobs", "cadence", "max-seeds",
)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wdb", description="Property-based random testing of the wdb engine.")
    p.add_argument("--seed", type=int, help="campaign seed (unsigned 64-bit, default 1)")
    p.add_argument("--interactions", type=int, help="workload interactions per campaign (default 1000)")
    p.add_argument("--dist", help="read,write,create weights (default 1,1,1)")
    p.add_argument("--oracles", help=f"comma-separated subset of {','.join(oracles.ORACLES)} (default: all but commut)")
    p.add_argument("--mutant", help="seeded defect to activate, or 'none'")
    p.add_argument("--fault-plan", metavar="FILE", help="storage fault plan, one 'op#N kind [page]' per line")
    p.add_argument("--timeout-ms", type=int, help="per-statement time budget (default 1000)")
    p.add_argument("--shrink", choices=("on", "off"), help="minimize failing transcripts (default on)")
    p.add_argument("--report-dir", metavar="PATH", help="write a report directory per failure")
    p.add_argument("--matrix", action="store_true", default=None, help="run the mutant detection matrix")
    p.add_argument("--max-seeds", type=int, help="seeds per matrix cell (default 50)")
    p.add_argument("--replay", metavar="PATH", help="replay a report directory, report.json or .sql script")
    p.add_argument("--jobs", type=int, help="run this many campaigns with seeds seed, seed+1, ...")
    p.add_argument("--cadence", type=int, help="workload interactions between oracle plans (default 10)")
    p.add_argument("--list-mutants", action="store_true", help="list seeded defects and exit")
    return p


def _env_defaults(args: argparse.Namespace, environ) -> None:
    for flag in FLAGS:
        attr = flag.replace("-", "_")
        if getattr(args, attr) is not None:
            continue
        value = environ.get("WDB_" + attr.upper())
        if value is None:
            continue
        if attr in ("seed", "interactions", "timeout_ms", "jobs", "cadence", "max_seeds"):
            try:
                value = int(value)
            except ValueError as exc:
                raise ConfigError(f"WDB_{attr.upper()} must be an integer") from exc
        elif attr == "matrix":
            value = value.lower() in ("1", "on", "true", "yes")
        setattr(args, attr, value)


def config_from_args(args: argparse.Namespace) -> Config:
    kwargs: dict = {}
    if args.seed is not None:
        kwargs["seed"] = args.seed
    if args.interactions is not None:
        kwargs["interactions"] = args.interactions
    if args.dist is not None:
        kwargs["dist"] = WorkloadDistribution.parse(args.dist)
    if args.oracles is not None:
        kwargs["oracles"] = oracles.parse_oracles(args.oracles)
    if args.mutant is not None and args.mutant.lower() != "none":
        kwargs["mutant"] = args.mutant
    if args.fault_plan is not None:
        try:
            text = Path(args.fault_plan).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read fault plan: {exc}") from exc
        kwargs["fault_plan"] = FaultPlan.from_text(text)
    if args.timeout_ms is not None:
        kwargs["timeout_ms"] = args.timeout_ms
    if args.shrink is not None:
        if args.shrink not in ("on", "off"):
            raise ConfigError("--shrink takes on or off")
        kwargs["shrink"] = args.shrink == "on"
    if args.report_dir is not None:
        kwargs["report_dir"] = args.report_dir
    if args.cadence is not None:
        kwargs["cadence"] = args.cadence
    return Config(**kwargs)


def _summary(result) -> str:
    s = result.stats
    line = (
        f"seed {result.config.seed}: {s.get('interactions', 0)} interactions, "
        f"{s.get('plans', 0)} plans ({s.get('pass', 0)} pass, {s.get('vacuous', 0)} vacuous)"
    )
    if result.failed:
        line += f"\n  FAIL [{result.label}] {result.verdict.description}"
        if result.minimized is not None:
            line += (
                f"\n  transcript {len(result.transcript.interactions())} -> "
                f"{len(result.minimized.interactions())} interactions"
            )
        if result.report_path:
            line += f"\n  report: {result.report_path}"
    return line


def _run_one(config: Config) -> tuple[int, str, Optional[str]]:
    result = run_campaign(config)
    repro = result.minimized.to_sql() if result.minimized is not None else None
    return result.exit_code, _summary(result), repro


def cmd_campaign(config: Config, jobs: Optional[int], out) -> int:
    if jobs is not None and jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    if not jobs or jobs == 1:
        code, summary, repro = _run_one(config)
        print(summary, file=out)
        if repro and not config.report_dir:
            print(repro, end="", file=out)
        return code
    configs = [replace(config, seed=config.seed + i) for i in range(jobs)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        results = list(pool.map(_run_one, configs))
    for _, summary, _ in results:
        print(summary, file=out)
    return max(code for code, _, _ in results)


def cmd_replay(path: str, args: argparse.Namespace, out) -> int:
    p = Path(path)
    report = None
    if p.is_dir() or p.suffix == ".json":
        report, repro, config = load_report(p)
        if args.mutant is not None:
            config = replace(config, mutant=None if args.mutant.lower() == "none" else args.mutant)
        if args.timeout_ms is not None:
            config = replace(config, timeout_ms=args.timeout_ms)
    else:
        repro = Transcript.from_sql(p.read_text(encoding="utf-8"))
        config = replace(config_from_args(args), shrink=False)
    verdict, _ = replay_transcript(repro, config)
    label = classify_failure(verdict) if is_failure(verdict) else None
    if report is None:
        print(f"replay: {label or 'pass'}", file=out)
        if label:
            print(f"  {verdict.description}", file=out)
        return EXIT_BUG if label else EXIT_CLEAN

    same_engine = config.mutant == report["config"]["mutant"]
    if label == report["label"]:
        status = "STILL-FAILING"
    elif label is None:
        status = "FIXED"
    else:
        status = f"CHANGED ({label})"
    print(f"{status}: recorded {report['label']}, replay {label or 'pass'}", file=out)
    if same_engine:
        if label != report["label"]:
            raise NotReproducible(f"repro script gave {label or 'pass'} on the same engine")
        original = p / "transcript.sql" if p.is_dir() else p.parent / "transcript.sql"
        if original.exists():
            rerun = run_campaign(replace(config, shrink=False, report_dir=None))
            if rerun.transcript.to_sql() != original.read_text(encoding="utf-8"):
                raise NotReproducible("re-running the seed produced a different transcript")
            print("seed re-run: transcript byte-identical", file=out)
    return EXIT_BUG if label else EXIT_CLEAN


def cmd_matrix(config: Config, max_seeds: int, out) -> int:
    def progress(row):
        print(f"  {row.mutant} {row.oracle_set}: {row.label or 'not detected'}", file=sys.stderr)

    rows = run_matrix(replace(config, report_dir=None), max_seeds=max_seeds, progress=progress)
    print(format_matrix(rows), end="", file=out)
    # Every mutant must be caught, with an expected label, and pass cleanly when off.
    by_mutant: dict[str, bool] = {}
    for r in rows:
        by_mutant[r.mutant] = by_mutant.get(r.mutant, False) or r.detected
    missed = [m for m, ok in by_mutant.items() if not ok]
    if missed:
        print(f"undetected: {', '.join(missed)}", file=out)
        return EXIT_BUG
    return EXIT_CLEAN


def main(argv: Optional[Sequence[str]] = None, environ=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _env_defaults(args, os.environ if environ is None else environ)
        if args.list_mutants:
            for m in bugseed.list_mutants():
                print(f"{m.id}  {m.description}  [{', '.join(m.expected)}]", file=out)
            return EXIT_CLEAN
        if args.replay:
            return cmd_replay(args.replay, args, out)
        config = config_from_args(args)
        if args.matrix:
            return cmd_matrix(config, args.max_seeds or 50, out)
        return cmd_campaign(config, args.jobs, out)
    except ConfigError as exc:
        print(f"wdb: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NotReproducible as exc:
        print(f"wdb: not reproducible: {exc}", file=sys.stderr)
        return EXIT_NONDETERMINISM
    except ModelError as exc:
        print(f"wdb: harness defect: {exc}", file=sys.stderr)
        return EXIT_NONDETERMINISM


if __name__ == "__main__":
    sys.exit(main())
