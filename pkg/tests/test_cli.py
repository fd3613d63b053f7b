import json
import os
from importlib import resources

from tschsim import cli

PAPER_PATH = str(resources.files("tschsim.data").joinpath("paper.json"))


def test_run_writes_traces_and_report(tmp_path, capsys):
    out = str(tmp_path / "run")
    rc = cli.main(
        ["run", "--scenario", PAPER_PATH, "--scheduler", "orchestra", "--out", out]
    )
    assert rc == 0
    for name in ("trickle.csv", "dio.csv", "energy.csv", "events.log", "report.json"):
        assert os.path.exists(os.path.join(out, name))
    text = capsys.readouterr().out
    assert "steady state" in text
    report = json.load(open(os.path.join(out, "report.json")))
    assert report["scheduler"] == "orchestra"
    assert report["negotiation_frames"] == 0


def test_steady_subcommand_reads_back_a_trace(tmp_path, capsys):
    out = str(tmp_path / "run")
    assert cli.main(
        ["run", "--scenario", PAPER_PATH, "--scheduler", "orchestra", "--out", out]
    ) == 0
    report = json.load(open(os.path.join(out, "report.json")))
    capsys.readouterr()
    rc = cli.main(["steady", "--trace", out])
    assert rc == 0
    text = capsys.readouterr().out
    assert f"steady state: {report['steady_ms']} ms" in text
    rec = report["recoveries"][0]
    assert f"recovery after node 10 removal at 180000 ms: {rec['recovery_ms']} ms" in text


def test_steady_subcommand_honors_criterion_flags(tmp_path, capsys):
    out = str(tmp_path / "run")
    assert cli.main(
        ["run", "--scenario", PAPER_PATH, "--scheduler", "orchestra", "--out", out]
    ) == 0
    capsys.readouterr()
    rc = cli.main(
        ["steady", "--trace", out, "--window-s", "600", "--interval-ms", "65536"]
    )
    assert rc == 0
    assert "steady state: none" in capsys.readouterr().out


def test_compare_subcommand_writes_comparison(tmp_path, capsys):
    out = str(tmp_path / "cmp")
    rc = cli.main(["compare", "--scenario", PAPER_PATH, "--out", out])
    assert rc == 0
    assert os.path.exists(os.path.join(out, "comparison.json"))
    assert os.path.exists(os.path.join(out, "orchestra", "trickle.csv"))
    assert os.path.exists(os.path.join(out, "minimal", "trickle.csv"))
    text = capsys.readouterr().out
    assert "transient ratio" in text


def test_run_on_open_scheduler_scenario_requires_flag(capsys, tmp_path):
    rc = cli.main(["run", "--scenario", PAPER_PATH, "--out", str(tmp_path / "x")])
    assert rc == 2
    assert "scheduler" in capsys.readouterr().err


def test_missing_scenario_file_exits_nonzero(tmp_path, capsys):
    rc = cli.main(
        ["run", "--scenario", str(tmp_path / "nope.json"), "--scheduler", "minimal",
         "--out", str(tmp_path / "x")]
    )
    assert rc == 2
    assert "error" in capsys.readouterr().err


def test_malformed_scenario_exits_nonzero(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    rc = cli.main(
        ["run", "--scenario", str(bad), "--scheduler", "minimal",
         "--out", str(tmp_path / "x")]
    )
    assert rc == 2
    assert "error" in capsys.readouterr().err


def test_seed_override_changes_the_run(tmp_path):
    out_a, out_b = str(tmp_path / "a"), str(tmp_path / "b")
    cli.main(["run", "--scenario", PAPER_PATH, "--scheduler", "orchestra",
              "--seed", "101", "--out", out_a])
    cli.main(["run", "--scenario", PAPER_PATH, "--scheduler", "orchestra",
              "--seed", "102", "--out", out_b])
    a = open(os.path.join(out_a, "dio.csv")).read()
    b = open(os.path.join(out_b, "dio.csv")).read()
    assert a != b
