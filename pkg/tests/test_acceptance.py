"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

The lines are printed as they are decided and repeated in the terminal
summary, so they show up even when pytest captures output.
"""

import random
import time
from dataclasses import replace

import pytest

from conftest import ACCEPTANCE_LINES
from wdb import bugseed
from wdb.campaign import Config, replay_transcript, run_campaign, run_matrix
from wdb.engine import Scope, eval_expr
from wdb.engine import ast as A
from wdb.genactions import GenContext, InScope, gen_expr, gen_pivot_true_expr, gen_row
from wdb.genactions.generators import layout_of
from wdb.genactions.plan import classify_failure, is_failure
from wdb.genactions.transcript import Note
from wdb.oracles import ORACLES, tlp_partitions
from wdb.shadow import ShadowState, TableModel, diff, multiset, query_shadow
from wdb.simio import FAULT_KINDS, FaultPlan
from wdb.workload import WorkloadDistribution, gen_create


def report(n: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


# -- 1 and 3: soak ------------------------------------------------------

@pytest.fixture(scope="module")
def soak():
    start = time.monotonic()
    failures, plans, vacuous, cadence_checks, diffs = [], 0, 0, 0, []

    def at_cadence(runner):
        nonlocal cadence_checks
        cadence_checks += 1
        d = diff(runner.shadow, runner.db)
        if d:
            diffs.append((runner, d))

    for seed in range(1, 101):
        r = run_campaign(Config(seed=seed, interactions=1000, shrink=False), on_cadence=at_cadence)
        if r.failed:
            failures.append((seed, r.label, r.verdict.description))
        plans += r.stats.get("plans", 0)
        vacuous += r.stats.get("vacuous", 0)
    return dict(
        failures=failures, plans=plans, vacuous=vacuous, cadence_checks=cadence_checks,
        diffs=diffs, seconds=time.monotonic() - start,
    )


def test_criterion_1_zero_false_positive_soak(soak):
    rate = soak["vacuous"] / soak["plans"]
    ok = not soak["failures"] and rate < 0.20 and soak["seconds"] < 600
    report(
        1, ok,
        f"100 seeds x 1000 interactions, {len(soak['failures'])} failures {soak['failures'][:3]}, "
        f"vacuous {soak['vacuous']}/{soak['plans']} = {rate:.1%} (< 20%), {soak['seconds']:.0f} s (< 600 s)",
    )


def test_criterion_3_shadow_fidelity(soak):
    step_failures = []
    for seed in range(1, 6):
        r = run_campaign(Config(seed=seed, interactions=1000, shrink=False, check_every_step=True))
        if r.failed:
            step_failures.append((seed, r.label, r.verdict.description))
    ok = not soak["diffs"] and not step_failures and soak["cadence_checks"] == 100 * 100
    report(
        3, ok,
        f"{soak['cadence_checks']} cadence diffs over the soak, {len(soak['diffs'])} non-empty; "
        f"per-step diff on seeds 1-5: {len(step_failures)} failures {step_failures[:3]}",
    )


# -- 2 and 7: mutant matrix ---------------------------------------------

@pytest.fixture(scope="module")
def matrix():
    start = time.monotonic()
    rows = run_matrix(Config(interactions=1000), max_seeds=50)
    return rows, time.monotonic() - start


def test_criterion_2_mutant_matrix(matrix):
    rows, seconds = matrix
    missing = [f"{r.mutant}/{r.oracle_set}" for r in rows if not r.detected]
    covered = {r.mutant for r in rows if r.detected}
    ok = not missing and covered == {m.id for m in bugseed.list_mutants()} and seconds < 900
    cells = ", ".join(f"{r.mutant}/{r.oracle_set}@{r.seed}:{r.label}" for r in rows)
    report(2, ok, f"undetected {missing or 'none'}; {seconds:.0f} s (< 900 s); {cells}")


def test_criterion_7_shrinking(matrix):
    rows, _ = matrix
    bad = []
    for r in rows:
        if r.seed is None:
            bad.append(f"{r.mutant}/{r.oracle_set}: no failure to shrink")
            continue
        bound = max(0.10 * r.original_length, 6)
        verdict, _ = replay_transcript(r.repro, Config(mutant=r.mutant))
        label = classify_failure(verdict) if is_failure(verdict) else None
        if r.minimized_length > bound or r.shrink_seconds > 60 or label != r.label:
            bad.append(f"{r.mutant}/{r.oracle_set}: {r.original_length}->{r.minimized_length} "
                       f"in {r.shrink_seconds:.1f} s, replay {label}")
    sizes = ", ".join(f"{r.mutant}/{r.oracle_set} {r.original_length}->{r.minimized_length}" for r in rows)
    worst = max(r.shrink_seconds for r in rows)
    report(7, not bad, f"violations {bad or 'none'}; slowest {worst:.1f} s (<= 60 s); {sizes}")


# -- 4: pivot rectification ---------------------------------------------

def test_criterion_4_pivot_rectification():
    rng = random.Random(4)
    ctx = GenContext(rng)
    misses = []
    for i in range(100_000):
        create = gen_create(ShadowState(), ctx)
        table = TableModel(create.name, create.columns, ())
        row = gen_row(table, ctx)
        e = gen_pivot_true_expr(table, row, ctx)
        v = eval_expr(e, Scope(layout_of([InScope(table)]), row))
        if not (type(v) is int and v == 1):
            misses.append((i, v))
    report(4, not misses, f"100000 triples, {len(misses)} not Integer 1 {misses[:3]}")


# -- 5: TLP partition identity ------------------------------------------

def test_criterion_5_tlp_partition_identity():
    rng = random.Random(5)
    ctx = GenContext(rng)
    mismatches = 0
    for _ in range(10_000):
        create = gen_create(ShadowState(), ctx)
        model = TableModel(create.name, create.columns, ())
        rows = tuple(gen_row(model, ctx) for _ in range(rng.randint(0, 8)))
        table = TableModel(create.name, create.columns, rows)
        shadow = ShadowState(tables={table.name: table})
        scope = [InScope(table)]
        p, q = gen_expr(scope, ctx, boolean=True), gen_expr(scope, ctx, boolean=True)
        whole = query_shadow(shadow, A.Select((A.Star(),), (A.Source(table.name),), p)).rows
        parts = query_shadow(shadow, tlp_partitions(table.name, p, q)).rows
        mismatches += multiset(parts) != multiset(whole)
    report(5, mismatches == 0, f"10000 instances, {mismatches} multiset mismatches")


# -- 6: determinism -----------------------------------------------------

def _random_config(rng: random.Random) -> Config:
    oracle_names = sorted(ORACLES)
    mutant = rng.choice([None] + [m.id for m in bugseed.list_mutants()])
    plan = FaultPlan()
    if rng.random() < 0.5:
        plan = FaultPlan.single(rng.randint(1, 800), rng.choice(FAULT_KINDS))
    return Config(
        seed=rng.getrandbits(64),
        interactions=rng.randint(50, 1000),
        dist=WorkloadDistribution(*(rng.randint(0, 4) + 1 for _ in range(3))),
        oracles=tuple(rng.sample(oracle_names, rng.randint(1, len(oracle_names)))),
        mutant=mutant,
        fault_plan=plan,
        cadence=rng.randint(1, 20),
    )


def test_criterion_6_determinism():
    rng = random.Random(6)
    differing, failing = [], 0
    for i in range(20):
        cfg = _random_config(rng)
        a, b = run_campaign(cfg), run_campaign(cfg)
        failing += a.failed
        same = (
            a.transcript.to_sql() == b.transcript.to_sql()
            and a.verdict == b.verdict
            and a.label == b.label
            and (a.minimized is None) == (b.minimized is None)
            and (a.minimized is None or a.minimized.to_sql() == b.minimized.to_sql())
        )
        if not same:
            differing.append(cfg.describe())
    report(6, not differing, f"20 random configs ({failing} failing), {len(differing)} not byte-identical {differing[:1]}")


# -- 8: fault robustness ------------------------------------------------

def test_criterion_8_fault_robustness():
    bad, fired, runs = [], {k: 0 for k in FAULT_KINDS}, 0
    for seed in range(1, 51):
        base = Config(seed=seed, interactions=1000, shrink=False)
        ops = run_campaign(base).stats["storage_ops"]
        rng = random.Random(seed)
        for kind in FAULT_KINDS:
            cfg = replace(base, fault_plan=FaultPlan.single(rng.randint(1, ops), kind))
            r = run_campaign(cfg)
            runs += 1
            fired[kind] += any(isinstance(e, Note) and e.text.startswith("fired") for e in r.transcript.entries)
            if r.failed:  # any failure here is a false positive, not just No Panic or Differential
                bad.append((seed, cfg.fault_plan.to_text().strip(), r.label, r.verdict.description))
    ok = not bad and all(fired.values())
    report(8, ok, f"{runs} single-fault campaigns, faults fired {fired}, failures {len(bad)} {bad[:3]}")
