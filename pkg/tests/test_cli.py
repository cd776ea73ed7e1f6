"""Tests for the bear-raid command line."""

import json
import os
from unittest.mock import patch

import pytest

from bear_raid.cli import build_parser, main
from bear_raid.const import EXIT_INPUT_ERROR, EXIT_INTERNAL_ERROR, EXIT_OK

SCENARIO = {
    "background": {"seed": 17, "n_days": 320},
    "raids": [
        {"open_day": 120, "separation": 5, "open_R": 0.8, "open_Q": 4.0, "price_drop_pct": 0.05},
        {"open_day": 240, "separation": 7, "open_R": 0.76, "open_Q": 3.7, "dividend": 0.54},
    ],
}


def _read(path) -> dict:
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)


def _outputs(directory) -> dict[str, bytes]:
    result = {}
    for name in sorted(os.listdir(directory)):
        if name == "run_metadata.json":
            continue
        with open(os.path.join(directory, name), "rb") as handle:
            result[name] = handle.read()
    return result


@pytest.fixture
def scenario_file(tmp_path) -> str:
    """A scenario spec with two planted raids."""
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(SCENARIO), encoding="utf-8")
    return str(path)


def test_parser_subcommands() -> None:
    """Test each subcommand parses its flags."""
    parser = build_parser()
    args = parser.parse_args(
        ["scan", "--price", "p.csv", "--short", "s.csv", "--out", "o", "--q-min", "2.5"]
    )
    assert args.command == "scan"
    assert args.q_min == 2.5

    args = parser.parse_args(
        ["screen-ban", "--synth", "x.json", "--out", "o", "--ban-start", "2008-09-19"]
    )
    assert args.ban_start.isoformat() == "2008-09-19"

    args = parser.parse_args(["fit", "--exclude-dates", "2008-07-15, 2008-09-19", "--out", "o"])
    assert args.exclude_dates == ["2008-07-15", "2008-09-19"]


def test_parser_rejects_bad_date() -> None:
    """Test malformed dates stop argument parsing."""
    with pytest.raises(SystemExit):
        build_parser().parse_args(["fit", "--exclude-dates", "2008-99-01", "--out", "o"])


def test_synth_then_scan(tmp_path, scenario_file) -> None:
    """Test candidates from written synthetic files match the ground truth."""
    data_dir = tmp_path / "data"
    assert main(["synth", "--spec", scenario_file, "--out", str(data_dir)]) == EXIT_OK
    truth = _read(data_dir / "ground_truth.json")

    report_dir = tmp_path / "report"
    code = main(
        [
            "scan",
            "--price",
            str(data_dir / "price.csv"),
            "--short",
            str(data_dir / "short.csv"),
            "--ticker",
            "SYN",
            "--out",
            str(report_dir),
        ]
    )
    assert code == EXIT_OK

    report = _read(report_dir / "candidates.json")
    found = {(c["open"]["date"], c["cover"]["date"]) for c in report["candidates"]}
    planted = {(e["open_date"], e["cover_date"]) for e in truth["raids"]}
    assert planted <= found

    by_open = {c["open"]["date"]: c for c in report["candidates"]}
    assert by_open[truth["raids"][1]["open_date"]]["screens"]["dividend_arbitrage"] == "excluded"


def test_scan_is_reproducible(tmp_path, scenario_file) -> None:
    """Test rerunning a scan gives byte-identical reports."""
    first, second = tmp_path / "first", tmp_path / "second"
    for out in (first, second):
        assert main(["scan", "--synth", scenario_file, "--out", str(out)]) == EXIT_OK
    assert _outputs(first) == _outputs(second)
    assert "candidates.json" in _outputs(first)


def test_seed_override_changes_background(tmp_path, scenario_file) -> None:
    """Test --seed replaces the scenario seed."""
    out = tmp_path / "synth"
    assert main(["synth", "--spec", scenario_file, "--seed", "5", "--out", str(out)]) == EXIT_OK
    assert _read(out / "ground_truth.json")["seed"] == 5


def test_fit_records_exclusions(tmp_path, scenario_file) -> None:
    """Test excluded dates are left out of the fits and recorded."""
    data_dir = tmp_path / "data"
    main(["synth", "--spec", scenario_file, "--out", str(data_dir)])
    truth = _read(data_dir / "ground_truth.json")
    excluded = [truth["raids"][0]["open_date"], truth["raids"][0]["cover_date"]]

    out = tmp_path / "fit"
    code = main(
        [
            "fit",
            "--synth",
            scenario_file,
            "--exclude-dates",
            ",".join(excluded),
            "--out",
            str(out),
        ]
    )
    assert code == EXIT_OK

    report = _read(out / "fit_report.json")
    assert report["exclude_dates"] == sorted(excluded)
    assert report["fits"]["r_negative"]["excluded"] == 2
    assert report["fits"]["r_negative"]["excluded_dates"] == sorted(excluded)


def test_fit_recovers_background_parameters(tmp_path) -> None:
    """Test fitting written synthetic files recovers the generating tails."""
    spec = tmp_path / "background.json"
    spec.write_text(
        json.dumps(
            {
                "background": {
                    "seed": 8,
                    "n_days": 5000,
                    "base_short_interest": 50_000_000_000,
                    "volume_tail_weight": 1.0,
                    "volume_body_sigma": 0.0,
                    "volume_tail_alpha": -3.34,
                    "r_laplace": [0.0, 0.048],
                }
            }
        ),
        encoding="utf-8",
    )
    data_dir = tmp_path / "data"
    assert main(["synth", "--spec", str(spec), "--out", str(data_dir)]) == EXIT_OK

    out = tmp_path / "fit"
    code = main(
        [
            "fit",
            "--price",
            str(data_dir / "price.csv"),
            "--short",
            str(data_dir / "short.csv"),
            "--out",
            str(out),
        ]
    )
    assert code == EXIT_OK

    fits = _read(out / "fit_report.json")["fits"]
    assert fits["q"]["parameters"]["alpha"] == pytest.approx(-3.34, abs=0.5)
    laplace = fits["r_negative"]["parameters"]
    assert laplace["beta"] == pytest.approx(0.0, abs=0.01)
    assert laplace["gamma"] == pytest.approx(0.048, rel=0.1)


def test_screen_ban_command(tmp_path) -> None:
    """Test the ban screen reports a lag for a planted ban."""
    spec = tmp_path / "ban.json"
    spec.write_text(
        json.dumps(
            {
                "background": {"seed": 4, "n_days": 504},
                "ban": {"start_day": 200, "end_day": 299, "lag": 2},
            }
        ),
        encoding="utf-8",
    )
    out = tmp_path / "ban"
    assert main(["screen-ban", "--synth", str(spec), "--out", str(out)]) == EXIT_OK
    report = _read(out / "ban_lag.json")
    assert report["inconclusive"] is False
    assert report["lag"] == 2
    assert len(report["scores"]) == 11


def test_input_error_exit_code(tmp_path) -> None:
    """Test invalid input exits with the input error code."""
    price = tmp_path / "price.csv"
    price.write_text("date,high,low,close,volume,dividend\n2007-11-01,1,2,1.5,10,0\n")
    short = tmp_path / "short.csv"
    short.write_text("date,total_short_interest\n2007-11-01,10\n")
    code = main(
        ["scan", "--price", str(price), "--short", str(short), "--out", str(tmp_path / "o")]
    )
    assert code == EXIT_INPUT_ERROR


def test_missing_input_exit_code(tmp_path) -> None:
    """Test a scan without input is a configuration error."""
    assert main(["scan", "--out", str(tmp_path)]) == EXIT_INPUT_ERROR


def test_synth_rejects_csv_input(tmp_path) -> None:
    """Test synth does not take price files."""
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"price": "p.csv", "short": "s.csv", "out": "o"}))
    assert main(["synth", "--config", str(config)]) == EXIT_INPUT_ERROR


def test_missing_config_file(tmp_path) -> None:
    """Test an unreadable config file is an input error."""
    code = main(["synth", "--out", str(tmp_path), "--config", str(tmp_path / "nope.json")])
    assert code == EXIT_INPUT_ERROR


def test_internal_error_exit_code(tmp_path, scenario_file) -> None:
    """Test unexpected failures exit with the internal error code."""
    with patch("bear_raid.cli.cmd_scan", side_effect=RuntimeError("boom")):
        code = main(["scan", "--synth", scenario_file, "--out", str(tmp_path)])
    assert code == EXIT_INTERNAL_ERROR
