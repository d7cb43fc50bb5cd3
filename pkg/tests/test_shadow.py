import random

import pytest
from hypothesis import given, settings, strategies as st

from wdb.engine import Database, parse
from wdb.engine import ast as A
from wdb.errors import ModelError
from wdb.genactions import GenContext
from wdb.shadow import ShadowState, TableModel, apply, diff, dump, multiset, query_shadow
from wdb.simio import SimStorage
from wdb.workload import WorkloadDistribution, gen_interaction, gen_update


def run(st, *sqls):
    for sql in sqls:
        st = apply(st, parse(sql))
    return st


def test_create_from_empty():
    s = apply(ShadowState(), parse("CREATE TABLE t (a INTEGER)"))
    assert s.tables["t"] == TableModel("t", (("a", "INTEGER"),), ())
    assert (s.read, s.write, s.create) == (0, 0, 1)


def test_constant_false_delete_keeps_rows():
    s = run(ShadowState(), "CREATE TABLE t (a INTEGER)", "INSERT INTO t VALUES (1), (2)")
    after = apply(s, parse("DELETE FROM t WHERE 0"))
    assert after.tables["t"].rows == s.tables["t"].rows
    assert after.write == s.write + 1


def test_non_statements_leave_state_alone():
    s = run(ShadowState(), "CREATE TABLE t (a INTEGER)")
    assert apply(s, object()) is s


@pytest.mark.parametrize(
    "sql",
    ["SELECT * FROM nope", "INSERT INTO t VALUES (1, 2)", "INSERT INTO t VALUES ('x')", "UPDATE t SET z = 1",
     "DELETE FROM t WHERE z = 1", "CREATE TABLE t (a INTEGER)", "DROP TABLE nope",
     "SELECT a FROM t UNION ALL SELECT a, a FROM t"],
)
def test_ill_formed_interactions_are_model_errors(sql):
    s = run(ShadowState(), "CREATE TABLE t (a INTEGER)")
    with pytest.raises(ModelError):
        apply(s, parse(sql))


def test_update_matches_engine_on_random_rows():
    rng = random.Random(5)
    s = run(ShadowState(), "CREATE TABLE t (a INTEGER, b TEXT, c REAL, d INTEGER)")
    db = Database(SimStorage(), mutant=None)
    db.execute("CREATE TABLE t (a INTEGER, b TEXT, c REAL, d INTEGER)")
    ctx = GenContext(rng, s)
    from wdb.genactions import gen_row

    rows = [gen_row(s.tables["t"], ctx) for _ in range(100)]
    ins = A.Insert("t", None, tuple(rows))
    s = apply(s, ins)
    db.execute(ins)
    for _ in range(50):
        u = gen_update(s.tables["t"], GenContext(rng, s))
        s = apply(s, u)
        db.execute(u)
        assert diff(s, db) == []


def test_select_star_multiset():
    s = run(ShadowState(), "CREATE TABLE t (a INTEGER)", "INSERT INTO t VALUES (1), (2)")
    assert multiset(query_shadow(s, parse("SELECT * FROM t")).rows) == multiset([(1,), (2,)])


def test_union_all_of_two_and_three_rows_is_five():
    s = run(ShadowState(), "CREATE TABLE t (a INTEGER)", "INSERT INTO t VALUES (1), (2), (3)")
    q = parse("SELECT a FROM t WHERE a < 3 UNION ALL SELECT a FROM t")
    assert len(query_shadow(s, q).rows) == 5


def test_limit_and_distinct():
    s = run(ShadowState(), "CREATE TABLE t (a INTEGER)", "INSERT INTO t VALUES (1), (1), (2)")
    assert len(query_shadow(s, parse("SELECT DISTINCT a FROM t")).rows) == 2
    assert len(query_shadow(s, parse("SELECT a FROM t LIMIT 2")).rows) == 2
    assert len(query_shadow(s, parse("SELECT a FROM t LIMIT 0")).rows) == 0


def test_int_and_real_stay_distinct_in_multisets():
    assert multiset([(1,)]) != multiset([(1.0,)])


def test_fresh_db_vs_empty_shadow():
    assert diff(ShadowState(), Database(SimStorage(), mutant=None)) == []


def test_missing_row_is_reported():
    s = run(ShadowState(), "CREATE TABLE t (a INTEGER)", "INSERT INTO t VALUES (1), (2)")
    db = Database(SimStorage(), mutant=None)
    db.execute("CREATE TABLE t (a INTEGER)")
    db.execute("INSERT INTO t VALUES (1)")
    (d,) = diff(s, db)
    assert (d.table, d.kind, d.rows) == ("t", "missing_rows", ((2,),))


def test_catalog_discrepancies():
    s = run(ShadowState(), "CREATE TABLE t (a INTEGER)")
    db = Database(SimStorage(), mutant=None)
    db.execute("CREATE TABLE u (a INTEGER)")
    assert sorted(d.kind for d in diff(s, db)) == ["extra_table", "missing_table"]


def test_stale_reopen_mutant_shows_in_diff():
    storage = SimStorage()
    db = Database(storage, mutant="M3")
    s = ShadowState()
    for sql in ("CREATE TABLE t (a INTEGER)", "INSERT INTO t VALUES (1)", "CREATE TABLE u (b TEXT)"):
        db.execute(sql)
        s = apply(s, parse(sql))
    db.reopen()
    assert diff(s, db) != []


def test_dump_is_canonical():
    a = run(ShadowState(), "CREATE TABLE t (a INTEGER)", "INSERT INTO t VALUES (2), (NULL), (1)")
    b = run(ShadowState(), "CREATE TABLE t (a INTEGER)", "INSERT INTO t VALUES (1), (2), (NULL)")
    assert dump(a).splitlines()[1:] == dump(b).splitlines()[1:]
    assert dump(a) == "counters read=0 write=1 create=1\ntable t (a INTEGER) rows=3\n  (NULL)\n  (1)\n  (2)\n"


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32))
def test_apply_agrees_with_engine_every_step(seed):
    ctx = GenContext.seeded(seed)
    db = Database(SimStorage(), mutant=None)
    s = ShadowState()
    for _ in range(80):
        i = gen_interaction(s, WorkloadDistribution(), ctx)
        db.execute(i)
        s = apply(s, i)
        assert diff(s, db) == []
    assert s.read + s.write + s.create == 80


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32))
def test_apply_is_deterministic(seed):
    def go():
        ctx = GenContext.seeded(seed)
        s = ShadowState()
        for _ in range(40):
            s = apply(s, gen_interaction(s, WorkloadDistribution(), ctx))
        return dump(s)

    assert go() == go()
