import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from wdb.engine import Database, Scope, eval_expr, parse
from wdb.engine import ast as A
from wdb.engine.evaluator import resolve
from wdb.errors import ModelError, UserError
from wdb.genactions import (
    Assert,
    Assume,
    EngineCrash,
    Fail,
    Gen,
    GenContext,
    InScope,
    Interact,
    Let,
    Limits,
    Pass,
    Pick,
    PropertyPlan,
    Runner,
    Timeout,
    Unsatisfied,
    Vacuous,
    classify_failure,
    gen_expr,
    gen_pivot_true_expr,
    gen_row,
    pick,
    run_property,
)
from wdb.genactions.generators import layout_of, rectify
from wdb.genactions.plan import PlanError
from wdb.genactions.session import execute_statement
from wdb.genactions.transcript import Check, Exec, FaultEntry, Note, Transcript, dump_args, load_args
from wdb.oracles import commutativity_plan, pqs_plan, union_all_plan
from wdb.shadow import TableModel
from wdb.simio import SimStorage
from wdb.values import TYPES, conforms

WIDE = TableModel("t", tuple((c, TYPES[i % 4]) for i, c in enumerate("abcdefgh")), ())


def ctx(seed=0, **limits):
    return GenContext(random.Random(seed), limits=Limits(**limits))


# -- pick ---------------------------------------------------------------

def test_pick_singleton():
    assert pick(["a"], ctx()) == "a"


def test_pick_empty_is_unsatisfied():
    with pytest.raises(Unsatisfied):
        pick([], ctx())


def test_pick_empty_makes_plan_vacuous():
    plan = PropertyPlan("x", [Pick("t", lambda env, c: [])])
    assert isinstance(run_property(plan, Runner(), ctx()), Vacuous)


def test_pick_is_roughly_uniform():
    c = ctx(1)
    counts = Counter(pick("ab", c) for _ in range(1000))
    assert set(counts) == {"a", "b"}
    assert all(abs(n - 500) <= 50 for n in counts.values())


# -- gen_row ------------------------------------------------------------

def test_gen_row_conforms_to_types():
    c = ctx(2)
    for _ in range(1000):
        row = gen_row(WIDE, c)
        assert all(conforms(v, ty) for v, (_, ty) in zip(row, WIDE.columns))


def test_gen_row_integer_schema():
    (v,) = gen_row([("a", "INTEGER")], ctx(3, null_prob=0.0))
    assert type(v) is int


def test_no_nulls_at_zero_probability():
    c = ctx(4, null_prob=0.0)
    assert not any(None in gen_row(WIDE, c) for _ in range(1000))


def test_generated_rows_insert_cleanly():
    db = Database(SimStorage(), mutant=None)
    db.execute(A.CreateTable("t", WIDE.columns))
    c = ctx(5)
    for i in range(10_000 // 50):
        db.execute(A.Insert("t", None, tuple(gen_row(WIDE, c) for _ in range(50))))
        if i % 20 == 19:
            db.execute("DELETE FROM t")


# -- gen_expr -----------------------------------------------------------

def test_empty_scope_depth_zero_is_literal():
    for seed in range(50):
        assert isinstance(gen_expr([], ctx(seed), 0), A.Literal)


def _productions(e, out):
    for node in A.walk(e):
        if isinstance(node, (A.Binary, A.Unary)):
            out[node.op] += 1
        out[type(node).__name__] += 1


def test_expressions_are_well_scoped_and_cover_grammar():
    scope = [InScope(WIDE, "x"), InScope(TableModel("u", (("a", "TEXT"), ("z", "INTEGER")), ()), "y")]
    layout = layout_of(scope)
    seen = Counter()
    c = ctx(6)
    for _ in range(10_000):
        e = gen_expr(scope, c)
        assert A.depth(e) <= c.limits.max_depth + 1
        for ref in A.column_refs(e):
            resolve(layout, ref)
        _productions(e, seen)
    grammar = {"ColumnRef", "Literal", "Unary", "Binary", "Between", "Paren"} | set(A.BINARY_OPS) | set(A.UNARY_OPS)
    assert grammar <= set(seen)


def test_unscoped_refs_fail_to_resolve():
    e = gen_expr([InScope(WIDE)], ctx(7), boolean=True)
    refs = A.column_refs(e)
    if refs:
        with pytest.raises(UserError):
            resolve((("other", "zz"),), refs[0])


# -- pivot-true rectification ------------------------------------------

def test_rectify_rules():
    c = A.Binary("=", A.ColumnRef(None, "a"), A.Literal(5))
    assert rectify(c, 0) == A.Unary("NOT", c)
    assert rectify(c, 1) == c
    assert rectify(c, None) == A.Unary("IS NULL", c)


def test_candidate_on_row_rectifies():
    row = {"a": 3}
    c = A.Binary("=", A.ColumnRef(None, "a"), A.Literal(5))
    assert rectify(c, eval_expr(c, row)) == A.Unary("NOT", c)
    n = A.Binary("<", A.ColumnRef(None, "a"), A.NULL)
    assert rectify(n, eval_expr(n, row)) == A.Unary("IS NULL", n)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32))
def test_pivot_expression_is_true_on_pivot(seed):
    c = ctx(seed)
    row = gen_row(WIDE, c)
    e = gen_pivot_true_expr(WIDE, row, c)
    assert eval_expr(e, Scope(layout_of([InScope(WIDE)]), row)) == 1


# -- plans --------------------------------------------------------------

def test_plan_rejects_use_before_definition():
    with pytest.raises(PlanError):
        PropertyPlan("bad", [Gen("x", lambda env, c: 1, uses=("y",))])
    with pytest.raises(PlanError):
        PropertyPlan("bad", [Let("x", lambda env: 1), Let("x", lambda env: 2)])
    with pytest.raises(PlanError):
        PropertyPlan("bad", [Assert("contains", "rs", "r")])


def _with_table(runner, sql="CREATE TABLE t (a INTEGER, b TEXT)", rows="(1, 'x'), (NULL, 'y'), (3, NULL)"):
    execute_statement(runner, sql)
    execute_statement(runner, f"INSERT INTO t VALUES {rows}")


def test_commutativity_plan_passes_on_correct_engine():
    for seed in range(200):
        r = Runner()
        _with_table(r)
        assert isinstance(run_property(commutativity_plan(), r, GenContext(random.Random(seed))), Pass)


def test_union_all_arity_mismatch_is_vacuous_not_fail():
    seen = Counter()
    for seed in range(200):
        r = Runner()
        _with_table(r)
        execute_statement(r, "CREATE TABLE u (c REAL)")
        v = run_property(union_all_plan(), r, GenContext(random.Random(seed)))
        assert isinstance(v, (Pass, Vacuous))
        seen[type(v).__name__] += 1
    assert seen["Vacuous"] > 0 and seen["Pass"] > 0


def test_pqs_fails_with_broken_null_logic():
    for seed in range(10_000):
        r = Runner(mutant="M2")
        _with_table(r)
        v = run_property(pqs_plan(), r, GenContext(random.Random(seed)))
        if isinstance(v, Fail):
            assert v.label == "PQS"
            assert v.transcript.entries
            return
    pytest.fail("M2 not detected by PQS")


def test_assume_false_is_vacuous():
    plan = PropertyPlan("a", [Assume(lambda env: False, "never")])
    assert run_property(plan, Runner(), ctx()) == Vacuous("never")


def _demo_plan():
    return PropertyPlan("demo", [
        Interact(lambda env: parse("CREATE TABLE t (a INTEGER)")),
        Interact(lambda env: parse("INSERT INTO t VALUES (1)")),
        Interact(lambda env: parse("DELETE FROM t WHERE 0")),
        Interact(lambda env: parse("SELECT * FROM t"), bind="rs"),
        Let("row", lambda env: (1,)),
        Assert("contains", "rs", "row"),
    ])


def test_failed_assertion_carries_transcript():
    assert isinstance(run_property(_demo_plan(), Runner(), ctx()), Pass)
    v = run_property(_demo_plan(), Runner(mutant="M1"), ctx())
    assert isinstance(v, Fail) and v.label == "demo"
    sql = v.transcript.to_sql()
    assert "-- assert: demo contains" in sql and "DELETE FROM t WHERE 0;" in sql


def test_wrong_property_is_a_harness_defect():
    plan = PropertyPlan("wrong", [
        Interact(lambda env: parse("CREATE TABLE t (a INTEGER)")),
        Interact(lambda env: parse("SELECT * FROM t"), bind="rs"),
        Let("row", lambda env: (1,)),
        Assert("contains", "rs", "row"),
    ])
    with pytest.raises(ModelError):
        run_property(plan, Runner(), ctx())


def test_engine_crash_and_timeout_verdicts():
    r = Runner(mutant="M4")
    _with_table(r)
    plan = PropertyPlan("x", [Interact(lambda env: parse("SELECT * FROM t WHERE a LIKE '1'"))])
    v = run_property(plan, r, ctx())
    assert isinstance(v, EngineCrash) and classify_failure(v) == "No Panic"

    r = Runner(mutant="M6", timeout_ms=50)
    _with_table(r)
    v = run_property(PropertyPlan("x", [Interact(lambda env: parse("UPDATE t SET a = a"))]), r, ctx())
    assert isinstance(v, Timeout) and classify_failure(v) == "No Infinite Loop"


def test_unexpected_user_error_is_no_error():
    r = Runner(mutant="M0")
    _with_table(r)
    v = run_property(PropertyPlan("x", [Interact(lambda env: A.Select((A.Star(),), (A.Source("t"),), A.TRUE))]), r, ctx())
    assert classify_failure(v) == "No Error"


def test_classify_failure_passes_plan_name_through():
    assert classify_failure(Fail("TLP", "x")) == "TLP"
    with pytest.raises(ValueError):
        classify_failure(Pass())


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32))
def test_plan_runs_replay_identically(seed):
    def go():
        r = Runner()
        _with_table(r)
        v = run_property(pqs_plan(), r, GenContext(random.Random(seed)))
        return v, r.transcript().to_sql()

    assert go() == go()


# -- transcripts --------------------------------------------------------

def test_transcript_round_trip():
    t = Transcript(
        (
            Exec("CREATE TABLE t (a BLOB)"),
            Exec("INSERT INTO t VALUES (X'00')", None, 1),
            Exec("SELECT * FROM t", "r1", 1),
            Check("PQS", "contains", dump_args([{"ref": "r1"}, (b"\x00", None, 1.5, "it's")]), 1),
            FaultEntry("reopen", 1),
            Note("fired op#3 reopen 0", 1),
        ),
        ((1, "PQS"),),
    )
    text = t.to_sql()
    assert Transcript.from_sql(text) == t
    assert Transcript.from_sql(text).to_sql() == text


def test_args_encoding_keeps_types():
    args = [{"ref": "r1"}, (b"\x01", 1, 1.0, None, "s")]
    assert load_args(dump_args(args)) == ({"ref": "r1"}, (b"\x01", 1, 1.0, None, "s"))


def test_replay_reproduces_verdict():
    r = Runner(mutant="M2")
    _with_table(r)
    for seed in range(500):
        v = run_property(pqs_plan(), r, GenContext(random.Random(seed)))
        if isinstance(v, Fail):
            break
    again = Runner(mutant="M2").replay(Transcript.from_sql(v.transcript.to_sql()))
    assert again == Fail(v.label, v.assertion, again.transcript)
    assert again.transcript.to_sql() == v.transcript.to_sql()
