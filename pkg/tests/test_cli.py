import json
import logging
from pathlib import Path

import pytest

from conftest import panel, write_csv
from src.cli.main import main
from src.cli.writers import read_belief_matrix_json, read_profiles_json, read_report_json
from src.validation.validator import get_rejected_rows

ASSESSMENT_HEADER = ["project_id", "expert_id", "criterion_id", "grade"]
RELIABILITY_HEADER = ["project_id", "expert_id", "reliability"]


def last_json(text: str) -> dict:
    return json.loads(text.strip().splitlines()[-1])


def t6_csv(tmp_path: Path) -> Path:
    rows = [(a.project_id, a.expert_id, a.criterion_id, a.grade) for a in panel("T6")]
    return write_csv(tmp_path / "t6.csv", ASSESSMENT_HEADER, rows)


def outcomes_csv(tmp_path: Path, outcomes: dict) -> Path:
    return write_csv(tmp_path / "outcomes.csv", ["project_id", "outcome"], sorted(outcomes.items()))


# ===== COMMANDS =====

@pytest.mark.integration
def test_calibrate_reproduces_belief_matrices(tmp_path, history_csv, capsys):
    out = tmp_path / "out"
    assert main(["calibrate", "--history", str(history_csv), "--out", str(out)]) == 0

    summary = last_json(capsys.readouterr().out)
    assert summary["command"] == "calibrate"
    assert summary["criteria"] == 2
    assert (out / "calibration_C1.csv").exists()

    matrices = read_belief_matrix_json(str(out / "calibration.json"))
    assert matrices["C1"].entries[0] == pytest.approx((0.0989, 0.2124, 0.5582, 0.8219), abs=5e-5)
    assert matrices["C2"].entries[0] == pytest.approx((0.2085, 0.5962, 0.8515), abs=5e-5)

    payload = json.loads((out / "calibration.json").read_text(encoding="utf-8"))
    c1 = next(c for c in payload["criteria"] if c["criterion_id"] == "C1")
    assert c1["counts"] == [[6, 51, 167, 194], [260, 900, 629, 200]]
    assert payload["metadata"]["records"] == {"history": 4814}


@pytest.mark.integration
def test_calibrate_with_round4(tmp_path, history_csv):
    out = tmp_path / "out"
    assert main(["calibrate", "--history", str(history_csv), "--out", str(out), "--round4"]) == 0
    matrices = read_belief_matrix_json(str(out / "calibration.json"))
    assert matrices["C1"].rounding == 4
    assert matrices["C1"].entries[0][3] == pytest.approx(0.8219, abs=1e-12)


@pytest.mark.integration
def test_reliability_profiles_from_history(tmp_path, history_csv, capsys):
    out = tmp_path / "out"
    assert main(["reliability", "--history", str(history_csv), "--out", str(out)]) == 0
    summary = last_json(capsys.readouterr().out)
    assert summary["experts"] == 50

    profiles = read_profiles_json(str(out / "reliability.json"))
    assert len(profiles) == 50
    for profile in profiles.values():
        if profile.positive_rate is not None:
            assert 0.0 <= profile.positive_rate <= 1.0
    header = (out / "reliability.csv").read_text(encoding="utf-8").splitlines()[0]
    assert header.startswith("expert_id,tp,fn,fp,tn")


@pytest.mark.integration
def test_profiling_is_logged_once(tmp_path, history_csv, caplog):
    with caplog.at_level(logging.INFO, logger="erfund"):
        assert main(["reliability", "--history", str(history_csv), "--out", str(tmp_path / "out")]) == 0
    events = [json.loads(r.getMessage())["event"] for r in caplog.records if r.name == "erfund"]
    assert events.count("reliability_profiled") == 1


@pytest.mark.integration
def test_evaluate_worked_project(tmp_path, history_csv, panel_reliabilities_csv):
    out = tmp_path / "out"
    argv = [
        "evaluate", "--history", str(history_csv), "--assessments", str(t6_csv(tmp_path)),
        "--reliabilities", str(panel_reliabilities_csv), "--out", str(out), "--round4",
    ]
    assert main(argv) == 0

    payload = json.loads((out / "evaluation.json").read_text(encoding="utf-8"))
    (project,) = payload["projects"]
    assert project["project_id"] == "T6"
    assert project["criteria"]["C1"]["Funded"] == pytest.approx(0.3661, abs=1e-3)
    assert project["criteria"]["C2"]["Funded"] == pytest.approx(0.3909, abs=1e-3)
    assert project["overall"]["Funded"] == pytest.approx(0.3535, abs=1e-3)
    assert project["y"] == project["overall"]["Funded"]

    lines = (out / "evaluation.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "project_id,level,proposition,mass"
    assert "T6,overall,Funded,0.35" in "\n".join(lines)


@pytest.mark.integration
def test_rank_orders_by_funding_probability(tmp_path, history_csv, panels_csv, panel_reliabilities_csv):
    out = tmp_path / "out"
    argv = [
        "rank", "--history", str(history_csv), "--assessments", str(panels_csv),
        "--reliabilities", str(panel_reliabilities_csv), "--out", str(out), "--round4",
    ]
    assert main(argv) == 0

    report = read_report_json(str(out / "report.json"))
    assert [r.project_id for r in report.rows] == ["P6", "P5", "P4"]
    assert [r.rank_y for r in report.rows] == [1, 2, 3]
    by_id = {r.project_id: r for r in report.rows}
    assert by_id["P4"].x == by_id["P5"].x == pytest.approx(4.2)
    assert by_id["P4"].tie_group_x == by_id["P5"].tie_group_x == 1
    assert by_id["P4"].tie_size_x == 2
    assert report.metadata["projects"] == 3

    header = (out / "report.csv").read_text(encoding="utf-8").splitlines()[0].split(",")
    assert header[:10] == [
        "project_id", "y", "x", "rank_y", "rank_x", "tie_group_y", "tie_size_y",
        "tie_group_x", "tie_size_x", "outcome",
    ]
    assert "C1:Funded" in header


@pytest.mark.integration
def test_compare_with_outcomes(tmp_path, history_csv, panels_csv, panel_reliabilities_csv, capsys):
    out = tmp_path / "out"
    outcomes = outcomes_csv(tmp_path, {"P4": "Unfunded", "P5": "Funded", "P6": "Funded"})
    argv = [
        "compare", "--history", str(history_csv), "--assessments", str(panels_csv),
        "--reliabilities", str(panel_reliabilities_csv), "--outcomes", str(outcomes), "--out", str(out),
    ]
    assert main(argv) == 0

    summary = last_json(capsys.readouterr().out)
    assert summary["k"] == 3
    assert summary["top_y"] == {"funded": 2, "unfunded": 1, "undifferentiated": 0}
    for name in ("comparison.csv", "comparison.json", "ranking_y.csv", "ranking_x.csv", "topk.json", "histogram.csv"):
        assert (out / name).exists()

    histogram = json.loads((out / "histogram.json").read_text(encoding="utf-8"))
    assert sum(b["funded"] + b["unfunded"] + b["unknown"] for b in histogram["bins"]) == 3
    assert sum(b["unknown"] for b in histogram["bins"]) == 0


@pytest.mark.integration
def test_compare_with_a_cut_inside_a_tie(tmp_path, history_csv, panels_csv, panel_reliabilities_csv, monkeypatch):
    runtime = tmp_path / "runtime.yaml"
    runtime.write_text("top_k: 1\n", encoding="utf-8")
    monkeypatch.setenv("ERFUND_RUNTIME_CONFIG", str(runtime))
    out = tmp_path / "out"
    argv = [
        "compare", "--history", str(history_csv), "--assessments", str(panels_csv),
        "--reliabilities", str(panel_reliabilities_csv), "--out", str(out),
    ]
    assert main(argv) == 0

    topk = json.loads((out / "topk.json").read_text(encoding="utf-8"))
    assert topk["k"] == 1
    assert topk["by"]["x"]["selected"] == []
    assert topk["by"]["x"]["undecided"] == ["P4", "P5"]
    assert topk["by"]["x"]["open_slots"] == 1
    assert topk["by"]["y"]["selected"] == ["P6"]
    assert topk["by"]["y"]["outcomes"] is None


@pytest.mark.integration
def test_compare_needs_outcome_for_every_project(tmp_path, history_csv, panels_csv, panel_reliabilities_csv, capsys):
    outcomes = outcomes_csv(tmp_path, {"P4": "Unfunded", "P5": "Funded"})
    argv = [
        "compare", "--history", str(history_csv), "--assessments", str(panels_csv),
        "--reliabilities", str(panel_reliabilities_csv), "--outcomes", str(outcomes), "--out", str(tmp_path / "out"),
    ]
    assert main(argv) == 1
    assert "P6" in last_json(capsys.readouterr().err)["value"]


# ===== ERRORS =====

@pytest.mark.integration
def test_header_only_assessments(tmp_path, history_csv, capsys):
    empty = write_csv(tmp_path / "empty.csv", ASSESSMENT_HEADER, [])
    code = main(["evaluate", "--history", str(history_csv), "--assessments", str(empty), "--out", str(tmp_path / "out")])
    assert code == 1
    error = last_json(capsys.readouterr().err)
    assert error["error"] == "ValidationFailure"
    assert "empty" in error["message"]


@pytest.mark.integration
def test_out_of_range_reliability_is_rejected(tmp_path, history_csv, capsys):
    bad = write_csv(tmp_path / "rel.csv", RELIABILITY_HEADER, [("T6", "E1", "1.2")])
    argv = [
        "evaluate", "--history", str(history_csv), "--assessments", str(t6_csv(tmp_path)),
        "--reliabilities", str(bad), "--out", str(tmp_path / "out"),
    ]
    assert main(argv) == 1
    error = last_json(capsys.readouterr().err)
    assert error["line"] == 2
    assert error["value"] == "1.2"
    (rejected,) = get_rejected_rows()
    assert rejected["line"] == 2


@pytest.mark.integration
def test_unknown_outcome_in_history(tmp_path, capsys):
    history = write_csv(
        tmp_path / "history.csv",
        ["project_id", "expert_id", "criterion_id", "grade", "outcome"],
        [("H1", "X1", "C1", "Good", "Funded"), ("H1", "X1", "C2", "Fund", "maybe")],
    )
    assert main(["calibrate", "--history", str(history), "--out", str(tmp_path / "out")]) == 1
    error = last_json(capsys.readouterr().err)
    assert error["line"] == 3
    assert error["value"] == "maybe"
    assert error["path"] == str(history)


@pytest.mark.integration
def test_duplicate_assessment(tmp_path, history_csv, capsys):
    rows = [("T6", "E1", "C1", "Good"), ("T6", "E1", "C2", "Fund"), ("T6", "E1", "C1", "Poor")]
    dup = write_csv(tmp_path / "dup.csv", ASSESSMENT_HEADER, rows)
    assert main(["evaluate", "--history", str(history_csv), "--assessments", str(dup), "--out", str(tmp_path / "out")]) == 1
    error = last_json(capsys.readouterr().err)
    assert error["line"] == 4
    assert "line 2" in error["message"]


def test_missing_history_flag(tmp_path, capsys):
    assert main(["calibrate", "--out", str(tmp_path / "out")]) == 1
    assert "--history" in last_json(capsys.readouterr().err)["message"]


@pytest.mark.integration
def test_all_zero_reliabilities_is_a_computation_error(tmp_path, history_csv, capsys):
    zeros = write_csv(tmp_path / "rel.csv", RELIABILITY_HEADER, [("T6", f"E{i}", "0") for i in range(1, 6)])
    argv = [
        "evaluate", "--history", str(history_csv), "--assessments", str(t6_csv(tmp_path)),
        "--reliabilities", str(zeros), "--out", str(tmp_path / "out"),
    ]
    assert main(argv) == 2
    assert last_json(capsys.readouterr().err)["error"] == "NoEffectiveEvidenceError"


def test_bad_config_file(tmp_path, capsys):
    config = tmp_path / "config.yaml"
    config.write_text("preset: nsfc-case-study\ntop_k: 0\n", encoding="utf-8")
    assert main(["calibrate", "--config", str(config), "--history", "x.csv", "--out", str(tmp_path / "out")]) == 1
    assert "top_k" in last_json(capsys.readouterr().err)["message"]


@pytest.mark.parametrize(
    "argv, fragment",
    [
        (["rank", "--mode", "bogus"], "--mode"),
        (["publish", "--out", "out"], "publish"),
        (["calibrate", "--no-such-flag"], "--no-such-flag"),
    ],
)
def test_usage_errors_are_structured(argv, fragment, capsys):
    assert main(argv) == 1
    error = last_json(capsys.readouterr().err)
    assert error["error"] == "ValidationFailure"
    assert error["message"].startswith("usage:")
    assert fragment in error["message"]


@pytest.mark.integration
def test_out_path_that_is_a_file(tmp_path, history_csv, capsys):
    blocker = tmp_path / "out_file"
    blocker.write_text("occupied\n", encoding="utf-8")
    assert main(["calibrate", "--history", str(history_csv), "--out", str(blocker)]) == 1
    error = last_json(capsys.readouterr().err)
    assert error["error"] == "ValidationFailure"
    assert error["path"] == str(blocker)
    assert "file system error" in error["message"]


# ===== DETERMINISM & CONFIG =====

@pytest.mark.integration
def test_outputs_are_byte_identical_across_runs(tmp_path, history_csv, panels_csv, panel_reliabilities_csv):
    for name in ("a", "b"):
        argv = [
            "compare", "--history", str(history_csv), "--assessments", str(panels_csv),
            "--reliabilities", str(panel_reliabilities_csv), "--out", str(tmp_path / name),
        ]
        assert main(argv) == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert files == sorted(p.name for p in (tmp_path / "b").iterdir())
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


@pytest.mark.integration
def test_mode_flag_changes_config_digest(tmp_path, history_csv, panels_csv, panel_reliabilities_csv, capsys):
    base = [
        "rank", "--history", str(history_csv), "--assessments", str(panels_csv),
        "--reliabilities", str(panel_reliabilities_csv),
    ]
    assert main([*base, "--out", str(tmp_path / "raw")]) == 0
    raw = last_json(capsys.readouterr().out)
    assert main([*base, "--out", str(tmp_path / "norm"), "--mode", "normalized"]) == 0
    normalized = last_json(capsys.readouterr().out)
    assert raw["config_digest"] != normalized["config_digest"]

    raw_y = {r.project_id: r.y for r in read_report_json(str(tmp_path / "raw" / "report.json")).rows}
    norm_y = {r.project_id: r.y for r in read_report_json(str(tmp_path / "norm" / "report.json")).rows}
    assert raw_y != norm_y
