import pytest

from wdb.campaign import Config, run_campaign
from wdb.engine import ast as A
from wdb.engine import parse
from wdb.errors import ModelError, NotReproducible
from wdb.genactions import Runner
from wdb.genactions.plan import classify_failure, is_failure
from wdb.genactions.transcript import Check, Exec, Transcript
from wdb.shrink import Reducer, reduce, simplified_statements, well_formed


def fails_with(entries, label, mutant):
    try:
        v = Runner(mutant=mutant).replay(Transcript(tuple(entries)))
    except ModelError:
        return False  # the property itself no longer holds on the reference
    return is_failure(v) and classify_failure(v) == label


def test_already_minimal_two_steps_unchanged():
    t = Transcript((Exec("CREATE TABLE t (a INTEGER)"), Exec("SELECT * FROM t WHERE TRUE")))
    out = reduce(t, "No Error", Config(mutant="M0"))
    assert out.interactions() == list(t.entries)


def test_select_before_create_is_ill_formed():
    assert not well_formed([Exec("SELECT * FROM t"), Exec("CREATE TABLE t (a INTEGER)")])
    assert well_formed([Exec("CREATE TABLE t (a INTEGER)"), Exec("SELECT * FROM t")])
    assert not well_formed([Check("X", "contains", '[{"ref": "r1"}, [1]]')])


def test_not_reproducible():
    t = Transcript((Exec("CREATE TABLE t (a INTEGER)"),))
    with pytest.raises(NotReproducible):
        reduce(t, "PQS", Config())


def test_candidates_pass_gate_before_execution(monkeypatch):
    result = run_campaign(Config(seed=1, interactions=300, mutant="M1", oracles=("delsel",), shrink=False))
    executed = []
    original = Reducer.replay

    def spy(self, entries):
        executed.append(tuple(entries))
        return original(self, entries)

    monkeypatch.setattr(Reducer, "replay", spy)
    reduce(result.transcript, result.label, result.config)
    assert executed and all(well_formed(e) for e in executed)


@pytest.fixture(scope="module")
def m1_case():
    result = run_campaign(Config(seed=1, interactions=1000, mutant="M1", oracles=("delsel",), shrink=False))
    assert result.failed
    return result


def test_m1_shrinks_to_five(m1_case):
    out = reduce(m1_case.transcript, m1_case.label, m1_case.config)
    entries = out.interactions()
    assert len(entries) <= 5
    sqls = [e.sql for e in entries if isinstance(e, Exec)]
    assert sqls[0].startswith("CREATE TABLE")
    assert any(s.startswith("DELETE") for s in sqls)
    assert isinstance(entries[-1], Check)


def test_result_is_one_minimal_and_label_preserving(m1_case):
    cfg = m1_case.config
    out = reduce(m1_case.transcript, m1_case.label, cfg).interactions()
    assert fails_with(out, m1_case.label, cfg.mutant)
    for i in range(len(out)):
        cand = out[:i] + out[i + 1:]
        assert not (well_formed(cand) and fails_with(cand, m1_case.label, cfg.mutant))


def test_result_is_subsequence_with_simpler_statements(m1_case):
    out = reduce(m1_case.transcript, m1_case.label, m1_case.config).interactions()
    original = m1_case.transcript.interactions()
    j = 0
    for e in out:
        while j < len(original) and not _same_slot(original[j], e):
            j += 1
        assert j < len(original)
        j += 1


def _same_slot(orig, new):
    if type(orig) is not type(new):
        return False
    if isinstance(new, Exec):
        a, b = parse(orig.sql), parse(new.sql)
        return type(a) is type(b) and A.statement_tables(a) == A.statement_tables(b) and len(new.sql) <= len(orig.sql)
    return orig == new


def test_reduce_is_deterministic(m1_case):
    a = reduce(m1_case.transcript, m1_case.label, m1_case.config, budget=400)
    b = reduce(m1_case.transcript, m1_case.label, m1_case.config, budget=400)
    assert a.to_sql() == b.to_sql()


def test_simplifications_shrink_literals_and_subtrees():
    s = parse("DELETE FROM t WHERE (a = 5) AND (b LIKE 'xy%')")
    out = list(simplified_statements(s))
    assert A.Delete("t", A.TRUE) in out
    assert A.Delete("t", A.Binary("AND", A.TRUE, s.where.right)) in out
    assert A.Delete("t", A.Binary("AND", A.Binary("=", A.ColumnRef(None, "a"), A.Literal(0)), s.where.right)) in out
    ins = list(simplified_statements(parse("INSERT INTO t VALUES (7, 'abc'), (1, X'00')")))
    assert A.Insert("t", None, ((1, b"\x00"),)) in ins
    assert A.Insert("t", None, ((0, "abc"), (1, b"\x00"))) in ins
    assert A.Insert("t", None, ((7, ""), (1, b"\x00"))) in ins
