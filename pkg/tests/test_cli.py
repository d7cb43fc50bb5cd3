import json
from io import StringIO

import pytest

from wdb.cli import EXIT_NONDETERMINISM, main
from wdb.genactions.transcript import Exec, Transcript


def run(*argv, env=None):
    out = StringIO()
    code = main(list(argv), environ=env or {}, out=out)
    return code, out.getvalue()


@pytest.mark.parametrize(
    "argv,env",
    [
        (["--dist", "0,0,0"], {}),
        (["--mutant", "M9"], {}),
        (["--oracles", "nope"], {}),
        (["--interactions", "-1"], {}),
        ([], {"WDB_SEED": "abc"}),
        (["--fault-plan", "/nonexistent/plan"], {}),
    ],
)
def test_configuration_errors_exit_2(argv, env):
    assert run(*argv, env=env)[0] == 2


def test_clean_campaign_exits_0():
    code, out = run("--seed", "1", "--interactions", "200")
    assert code == 0
    assert out.startswith("seed 1: 200 interactions")


def test_mutant_campaign_prints_short_repro():
    code, out = run("--mutant", "M1", "--oracles", "delsel", "--seed", "1")
    assert code == 1
    assert "FAIL [Delete-Select]" in out
    repro = Transcript.from_sql(out[out.index("-- wdb transcript"):])
    assert len(repro.interactions()) <= 5
    assert [e for e in repro.interactions() if isinstance(e, Exec)][0].sql.startswith("CREATE TABLE")


def test_environment_defaults_and_flag_precedence():
    env = {"WDB_SEED": "4", "WDB_INTERACTIONS": "50"}
    assert run(env=env)[1].startswith("seed 4: 50 interactions")
    assert run("--seed", "6", env=env)[1].startswith("seed 6: 50 interactions")


def test_mutant_none_is_clean():
    assert run("--mutant", "none", "--interactions", "100")[0] == 0


@pytest.fixture(scope="module")
def report(tmp_path_factory):
    root = tmp_path_factory.mktemp("reports")
    code, out = run("--mutant", "M2", "--oracles", "pqs", "--seed", "3", "--report-dir", str(root))
    assert code == 1
    (d,) = list(root.iterdir())
    return d


def test_report_directory_contents(report):
    assert {p.name for p in report.iterdir()} == {"report.json", "repro.sql", "transcript.sql", "shadow.txt", "faults.txt"}
    data = json.loads((report / "report.json").read_text())
    assert data["schema"] == 1 and data["seed"] == 3 and data["label"] == "PQS"
    assert data["config"]["mutant"] == "M2" and data["config"]["oracles"] == ["pqs"]
    assert data["minimized_length"] <= data["original_length"]
    assert data["minimized_length"] == len(Transcript.from_sql((report / "repro.sql").read_text()).interactions())
    assert report.name == f"seed-3-{data['fingerprint']}"


def test_replay_still_failing(report):
    code, out = run("--replay", str(report))
    assert code == 1
    assert out.startswith("STILL-FAILING")
    assert "byte-identical" in out


def test_replay_fixed_when_mutant_removed(report):
    code, out = run("--replay", str(report / "report.json"), "--mutant", "none")
    assert code == 0 and out.startswith("FIXED")


def test_replay_plain_script(report):
    code, out = run("--replay", str(report / "repro.sql"), "--mutant", "M2")
    assert code == 1 and out.startswith("replay: PQS")
    assert run("--replay", str(report / "repro.sql"))[0] == 0


def test_tampered_transcript_is_nondeterminism(report, tmp_path):
    copy = tmp_path / "copy"
    copy.mkdir()
    for p in report.iterdir():
        (copy / p.name).write_bytes(p.read_bytes())
    t = copy / "transcript.sql"
    t.write_text(t.read_text() + "-- note: tampered\n")
    assert run("--replay", str(copy))[0] == EXIT_NONDETERMINISM


def test_list_mutants():
    code, out = run("--list-mutants")
    assert code == 0
    assert [line.split()[0] for line in out.splitlines()] == [f"M{i}" for i in range(7)]


def test_fault_plan_file(tmp_path):
    plan = tmp_path / "plan.txt"
    plan.write_text("op#20 read_error\n")
    code, out = run("--fault-plan", str(plan), "--interactions", "100")
    assert code == 0
    plan.write_text("op#x explode\n")
    assert run("--fault-plan", str(plan))[0] == 2


def test_parallel_jobs():
    code, out = run("--jobs", "2", "--interactions", "50")
    assert code == 0
    assert [l.split(":")[0] for l in out.splitlines()] == ["seed 1", "seed 2"]


def test_long_clean_campaign():
    code, out = run("--seed", "1", "--interactions", "10000")
    assert code == 0, out
