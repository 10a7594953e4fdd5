import io
import json

import pandas as pd
import pytest

import mpe_cli
from check_suite import RESULT_COLUMNS
from model import Evidence
from mpe_cli import (
    EXIT_CHECK_FAILED,
    EXIT_INPUT_ERROR,
    EXIT_OK,
    CliConfig,
    parse_config,
    run_cli,
)
from sensitivity_engine import sensitivity_report


def _run(argv):
    out, err = io.StringIO(), io.StringIO()
    status = run_cli(parse_config(argv), out=out, err=err)
    return status, out.getvalue(), err.getvalue()


@pytest.fixture
def ab_path(networks_dir):
    return str(networks_dir / "ab.json")


def test_parse_config_merges_evidence(ab_path):
    config = parse_config(["mpe", ab_path, "A=a", "--evidence", "B=b", "--format", "report", "--seed", "4"])
    assert config == CliConfig(
        subcommand="mpe",
        network=ab_path,
        evidence_tokens=("A=a", "B=b"),
        output_format="report",
        seed=4,
        guard=None,
        random_networks=0,
        interval_samples=config.interval_samples,
    )


def test_unknown_subcommand_exits_through_argparse(ab_path):
    with pytest.raises(SystemExit):
        parse_config(["explain", ab_path])


def test_mpe_table(ab_path):
    status, out, _ = _run(["mpe", ab_path, "A=a"])
    assert status == EXIT_OK
    assert "b_bar" in out
    assert "MPE probability: 0.4" in out


def test_mpe_report(ab_path):
    status, out, _ = _run(["mpe", ab_path, "A=a", "--format", "report"])
    document = json.loads(out)
    assert status == EXIT_OK
    assert document["mpe"]["witness"] == {"A": "a", "B": "b_bar"}
    assert document["mpe"]["probability"] == pytest.approx(0.4, abs=1e-12)


def test_sensitivity_report_holds_interval(ab_path):
    status, out, _ = _run(["sensitivity", ab_path, "--format", "report"])
    document = json.loads(out)
    assert status == EXIT_OK
    entry = next(p for p in document["parameters"] if p["parameter"] == "B=b_bar | A=a")
    assert entry["interval"] == pytest.approx([0.6, 1.0], abs=1e-12)
    assert entry["lower_binding"] == "k(e,u)"
    assert entry["uncoupled"]["threshold"] == pytest.approx(0.6)
    assert [f["k"] for f in document["families"]] == pytest.approx([0.0, 0.3, 0.4])
    assert list(document) == ["network", "evidence", "mpe", "parameters", "families", "retraction", "multiplicity"]


def test_report_output_is_deterministic(ab_path):
    first = _run(["sensitivity", ab_path, "A=a", "--format", "report"])[1]
    second = _run(["sensitivity", ab_path, "A=a", "--format", "report"])[1]
    assert first == second


def test_sensitivity_table(ab_path):
    status, out, _ = _run(["sensitivity", ab_path])
    assert status == EXIT_OK
    assert "B=b_bar | A=a" in out
    assert "k(e,u) per family" in out


def test_retract_report(ab_path):
    status, out, _ = _run(["retract", ab_path, "A=a_bar", "--format", "report"])
    document = json.loads(out)
    assert status == EXIT_OK
    assert document["mpe"]["probability"] == pytest.approx(0.3)
    assert document["retraction"]["verdicts"] == {"A": "identity-changes"}
    assert document["multiplicity"] == {"B": "b"}
    after = document["retraction"]["witnesses"]["A"]
    assert after["witness"] == {"A": "a", "B": "b_bar"}
    assert after["probability"] == pytest.approx(0.4)


def test_retract_table_shows_witness_after_retraction(ab_path):
    status, out, _ = _run(["retract", ab_path, "A=a_bar"])
    assert status == EXIT_OK
    assert "WitnessAfterRetraction" in out
    assert "A=a B=b_bar" in out


def test_report_numbers_are_exact_doubles(ab_path, ab_circuit):
    status, out, _ = _run(["sensitivity", ab_path, "--format", "report"])
    report = sensitivity_report(ab_circuit, Evidence())
    entries = {entry["parameter"]: entry for entry in json.loads(out)["parameters"]}
    assert status == EXIT_OK
    for ref, interval in report.intervals.items():
        assert entries[ref.label()]["interval"] == [interval.lower, interval.upper]
        assert entries[ref.label()]["r"] == report.constants.r[ref]


def test_evidence_from_file(tmp_path, ab_path):
    path = tmp_path / "evidence.txt"
    path.write_text("A=a_bar\n", encoding="utf-8")
    status, out, _ = _run(["retract", ab_path, "--evidence", f"@{path}"])
    assert status == EXIT_OK
    assert "identity-changes" in out


def test_compile_stats(ab_path):
    status, out, _ = _run(["compile", ab_path, "--format", "report"])
    stats = json.loads(out)["circuit"]
    assert status == EXIT_OK
    assert stats["nodes"] == 19
    assert stats["width"] == 1
    assert stats["decomposable"] is True


def test_check_fixture_passes(ab_path):
    status, out, err = _run(["check", ab_path, "--random", "0"])
    assert status == EXIT_OK
    assert "Check complete. Passed=1, Failed=0" in err
    assert "ab" in out


@pytest.mark.slow
def test_check_with_random_networks(ab_path):
    status, out, err = _run(["check", ab_path, "--random", "3", "--seed", "11", "--samples", "5", "--format", "report"])
    cases = json.loads(out)["cases"]
    assert status == EXIT_OK
    assert len(cases) == 1 + 3 * 3
    assert all(case["Passed"] for case in cases)
    assert "Failed=0" in err


def test_missing_network_file(tmp_path):
    status, out, err = _run(["mpe", str(tmp_path / "missing.json")])
    assert status == EXIT_INPUT_ERROR
    assert out == ""
    assert "Network file not found" in err


def test_unparseable_network(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    status, _, err = _run(["mpe", str(path)])
    assert status == EXIT_INPUT_ERROR
    assert "Could not parse" in err


def test_invalid_network_lists_violations(tmp_path):
    path = tmp_path / "invalid.json"
    path.write_text(json.dumps({
        "variables": [{"name": "A", "values": ["a", "a_bar"]}],
        "cpts": [{"child": "A", "parents": [], "table": [[0.5, 0.6]]}],
    }), encoding="utf-8")
    status, _, err = _run(["mpe", str(path)])
    assert status == EXIT_INPUT_ERROR
    assert "Network failed validation" in err
    assert "row 0 sums to" in err


def test_unknown_evidence_value(ab_path):
    status, _, err = _run(["mpe", ab_path, "A=maybe"])
    assert status == EXIT_INPUT_ERROR
    assert "Evidence" in err


def test_guard_exceeded(ab_path):
    status, _, err = _run(["check", ab_path, "--guard", "2"])
    assert status == EXIT_INPUT_ERROR
    assert "Enumeration guard exceeded" in err


def test_failed_check_exits_with_two(monkeypatch, ab_path):
    failing = pd.DataFrame([dict.fromkeys(RESULT_COLUMNS, False) | {"Case": "ab", "MaxRelError": 1.0}])
    monkeypatch.setattr(mpe_cli, "run_checks", lambda *args, **kwargs: failing)
    status, _, err = _run(["check", ab_path])
    assert status == EXIT_CHECK_FAILED
    assert "Passed=0, Failed=1" in err
