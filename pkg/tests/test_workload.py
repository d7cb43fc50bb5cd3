from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from wdb.engine import Database
from wdb.engine import ast as A
from wdb.errors import ConfigError
from wdb.genactions import GenContext
from wdb.shadow import ShadowState, apply, diff, interaction_class
from wdb.simio import SimStorage
from wdb.workload import DROP_PROB, MAX_COLUMNS, MAX_TABLES, WorkloadDistribution, gen_interactions


def test_create_only_gives_schema_statements():
    for seed in range(200):
        ctx = GenContext.seeded(seed)
        out, st = gen_interactions(5, WorkloadDistribution(0, 0, 1), ShadowState(), ctx)
        assert len(out) == 5
        assert all(isinstance(s, (A.CreateTable, A.DropTable)) for s in out)
        creates = sum(isinstance(s, A.CreateTable) for s in out)
        assert len(st.tables) == creates - (5 - creates)
        if creates == 5:
            assert len(st.tables) == 5


def test_four_tables_exactly_when_nothing_dropped():
    at_least_four = 0
    for seed in range(1000):
        _, st = gen_interactions(5, WorkloadDistribution(0, 0, 1), ShadowState(), GenContext.seeded(seed))
        at_least_four += len(st.tables) >= 4
    # At least four tables means no drop among the four draws after the
    # forced create.
    assert abs(at_least_four / 1000 - (1 - DROP_PROB) ** 4) < 0.04


def test_first_interaction_forced_create():
    for seed in range(50):
        out, _ = gen_interactions(5, WorkloadDistribution(1, 0, 0), ShadowState(), GenContext.seeded(seed))
        assert isinstance(out[0], A.CreateTable)
        assert all(isinstance(s, A.Select) for s in out[1:])


def test_class_frequencies_near_uniform():
    out, _ = gen_interactions(10_000, WorkloadDistribution(1, 1, 1), ShadowState(), GenContext.seeded(11))
    counts = Counter(interaction_class(s) for s in out[1:])
    n = sum(counts.values())
    for cls in ("read", "write", "create"):
        assert abs(counts[cls] / n - 1 / 3) < 0.05


@pytest.mark.parametrize("text", ["0,0,0", "1,2", "a,b,c", "-1,1,1", "inf,1,1", "nan,1,1"])
def test_bad_distributions(text):
    with pytest.raises(ConfigError):
        WorkloadDistribution.parse(text)


def test_negative_count():
    with pytest.raises(ConfigError):
        gen_interactions(-1, WorkloadDistribution(), ShadowState(), GenContext.seeded(0))


def test_distribution_text_round_trip():
    d = WorkloadDistribution.parse("2,1,0.5")
    assert WorkloadDistribution.parse(str(d)) == d
    assert d.normalized() == pytest.approx((2 / 3.5, 1 / 3.5, 0.5 / 3.5))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from(["1,1,1", "5,1,1", "1,5,1", "1,1,5"]))
def test_sequence_runs_cleanly_and_matches_shadow(seed, dist):
    ctx = GenContext.seeded(seed)
    out, st = gen_interactions(150, WorkloadDistribution.parse(dist), ShadowState(), ctx)
    db = Database(SimStorage(), mutant=None)
    replayed = ShadowState()
    for s in out:
        db.execute(s)  # no UserError
        replayed = apply(replayed, s)  # no ModelError: well-formed at its position
    assert replayed == st
    assert diff(st, db) == []
    assert len(st.tables) <= MAX_TABLES
    assert all(1 <= len(t.columns) <= MAX_COLUMNS for t in st.tables.values())
