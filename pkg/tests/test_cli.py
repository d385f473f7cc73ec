import json

import pytest

from purekit import catalog
from purekit.cli import main
from purekit.strategy import strategy_to_json


def test_purify_end_to_end(tmp_path):
    out = tmp_path / "r.json"
    assert main(["purify", "--game", "cournot", "--player", "1", "--epsilon", "0.1",
                 "--seed", "42", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["status"] == "PASS"
    assert report["config"]["seed"] == 42 and report["config"]["epsilon"] == 0.1
    assert report["certificate"]["status"] == "PASS"


def test_reports_are_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["purify", "--game", "zero-sum-signal", "--epsilon", "0.2", "--seed", "9"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_verify_and_tamper(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["purify", "--game", "zero-sum-signal", "--epsilon", "0.2", "--out", str(out)]) == 0
    assert main(["verify", str(out)]) == 0
    report = json.loads(out.read_text())
    report["pure_strategy"]["actions"][0] = 0.5
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(report))
    capsys.readouterr()
    assert main(["verify", str(bad)]) == 1
    assert "mismatch" in capsys.readouterr().err


def test_missing_game_file(tmp_path, capsys):
    path = tmp_path / "nothing.txt"
    assert main(["purify", "--game", str(path)]) == 2
    assert str(path) in capsys.readouterr().err


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as info:
        main(["purify", "--epsilon", "abc"])
    assert info.value.code == 2
    assert main(["purify", "--epsilon", "-1"]) == 2
    assert main(["purify", "--player", "3"]) == 2


def test_game_file_with_strategy(tmp_path):
    (tmp_path / "g.txt").write_text(catalog.catalog_text("zero-sum-signal"))
    strat = tmp_path / "f.json"
    strat.write_text(json.dumps(strategy_to_json(catalog.reference_strategy("zero-sum-signal", 0, 4))))
    out = tmp_path / "r.json"
    assert main(["purify", "--game", str(tmp_path / "g.txt"), "--strategy", str(strat),
                 "--epsilon", "0.2", "--out", str(out)]) == 0
    assert main(["purify", "--game", str(tmp_path / "g.txt")]) == 2  # no strategy given


def test_find_eq_nash_check_purify_eq(tmp_path):
    prof = tmp_path / "eq.json"
    assert main(["find-eq", "--game", "dominant-action", "--iterations", "50",
                 "--out", str(prof)]) == 0
    assert main(["nash-check", "--game", "dominant-action", "--profile", str(prof)]) == 0
    out = tmp_path / "e.json"
    assert main(["purify-eq", "--game", "dominant-action", "--profile", str(prof),
                 "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert len(report["certificate"]["profiles"]) == 4
    assert main(["verify", str(out)]) == 0


def test_catalog_listing(capsys):
    assert main(["catalog"]) == 0
    listing = json.loads(capsys.readouterr().out)
    assert set(listing) == set(catalog.NAMES)
    assert main(["catalog", "--show", "cournot", "--players", "3"]) == 0
    assert "players=3" in capsys.readouterr().out
