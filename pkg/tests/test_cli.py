import csv
import io
import json

import pytest

from qsugawara.cli import (ConfigError, RunConfig, list_checks, main, parse_config, plan, render, run_suite,
                           strip_runtime, validate_report)

FAST = ["qnum", "apq*", "umosc"]


def test_defaults():
    cfg = parse_config([])
    assert (cfg.epsilon, cfg.D, cfg.K, cfg.M, cfg.variant) == ((0.15,), 8, 40, 2, "rederived")


def test_config_file_and_flag_precedence(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# run\nepsilon = 0.1, 0.05\ndegree=6\nmode_cutoff = 30\nchecks = qnum apq*\n")
    cfg = parse_config(["--config", str(path), "--degree", "7"])
    assert cfg.epsilon == (0.1, 0.05) and cfg.D == 7 and cfg.K == 30 and cfg.checks == ("qnum", "apq*")


@pytest.mark.parametrize("text", ["colour = red\n", "degree\n", "degree = six\n"])
def test_bad_config_file(tmp_path, text, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text(text)
    with pytest.raises(ConfigError):
        parse_config(["--config", str(path)])
    assert main(["--config", str(path)]) == 2
    assert "usage" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["--epsilon", "0"], ["--degree", "0"], ["--checks", "nothing*"],
                                  ["--variant", "maybe"], ["--degree", "x"], ["--ratio", "0.9"]])
def test_usage_errors_exit_2(argv, capsys):
    assert main(argv) == 2


def test_epsilon_zero_allowed_for_undeformed_checks():
    assert parse_config(["--epsilon", "0", "--checks", "qnum"]).epsilon == (0.0,)


def test_filtered_registry():
    cfg = parse_config(["--epsilon", "0.1", "--checks", "3superalgebra:*"])
    ids = {cid for cid, _, _ in plan(cfg)}
    assert ids and all(cid.startswith("3superalgebra:") for cid in ids)


def test_list_checks(capsys):
    rows = list_checks()
    ids = [r["id"] for r in rows]
    assert len(ids) >= 30 and len(set(ids)) == len(ids)
    assert {"umope", "apnqderivada"} <= set(ids)
    assert main(["--list"]) == 0
    assert "apnqderivada" in capsys.readouterr().out


def test_report_round_trip_and_determinism():
    cfg = RunConfig(checks=tuple(FAST))
    first, second = run_suite(cfg), run_suite(cfg)
    assert validate_report(first) == []
    text = render(first, "json")
    assert json.loads(text) == first
    assert render(strip_runtime(first), "json") == render(strip_runtime(second), "json")
    assert first["run"]["failed"] == []


def test_parallel_matches_serial():
    serial = run_suite(RunConfig(checks=tuple(FAST)))
    parallel = run_suite(RunConfig(checks=tuple(FAST), jobs=2))
    assert strip_runtime(serial) == strip_runtime(parallel)


def test_validate_report_flags_problems():
    assert validate_report({"run": {}}) != []
    good = run_suite(RunConfig(checks=("qnum",)))
    good["checks"][0].pop("max_error")
    assert any("max_error" in p for p in validate_report(good))


def test_printed_typo_variants_fail_with_notes(tmp_path, capsys):
    out = tmp_path / "r.md"
    code = main(["--checks", "3superalgebra:AG+", "--variant", "printed", "--format", "md", "--out", str(out)])
    assert code == 1
    text = out.read_text()
    assert "**FAIL**" in text and "Failures:" in text


def test_csv_and_both_variants(capsys):
    assert main(["--checks", "3superalgebra:A*", "--variant", "both", "--format", "csv"]) == 1
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    variants = {(r["id"], r["variant"]) for r in rows}
    # as_printed only runs where the two readings differ
    assert ("3superalgebra:AA", "as_printed") not in variants
    assert ("3superalgebra:AG+", "as_printed") in variants


def test_unwritable_output(tmp_path, capsys):
    assert main(["--checks", "qnum", "--out", str(tmp_path / "missing" / "r.json")]) == 2
    assert "cannot write" in capsys.readouterr().err
