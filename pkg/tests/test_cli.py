from __future__ import annotations

import json

import pytest

from lawvere.catfile import bundled_path
from lawvere.cli import EXIT_FAIL, EXIT_INPUT, EXIT_OK, main

FINSET = str(bundled_path("finset_2.cat"))
ABELIAN = str(bundled_path("abelian_small.cat"))


def test_check_writes_report(tmp_path, capsys):
    out = tmp_path / "r.json"
    code = main(["check", "--input", FINSET, "--class", "relations", "--conditions", "C16", "--report", str(out)])
    assert code == EXIT_OK
    rep = json.loads(out.read_text())
    assert rep["oracle"]["verdict"] == "PASS"
    lines = capsys.readouterr().out.splitlines()
    assert lines[-1] == "oracle: PASS"
    assert lines[0].split() == ["C16.1", "false"]


def test_dot_from_report(tmp_path, capsys):
    out = tmp_path / "r.json"
    main(["check", "--input", FINSET, "--class", "relations", "--conditions", "C16.6", "--report", str(out)])
    capsys.readouterr()
    assert main(["dot", "--report", str(out), "--witness", "C16.6"]) == EXIT_OK
    dot = capsys.readouterr().out
    assert dot.count("->") == 2 and "1:[0,0,1]" in dot and "3:[0,1,1]" in dot
    assert main(["dot", "--report", str(out), "--witness", "T5.A"]) == EXIT_INPUT


def test_construct_groupoid(capsys):
    assert main(["construct", "--input", ABELIAN, "--what", "groupoid", "--graph", "Z2"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["valid"] and doc["pregroupoids"] == 1
    arrows = [tuple(a) for a in doc["arrows"]]
    for (f, h), m in zip(doc["composable"], doc["m"]):
        assert arrows[m] == (arrows[f][0], arrows[h][1])
    assert [arrows[i] for i in doc["i"]] == [(b, a) for a, b in arrows]


def test_construct_pregroupoid_in_finset(capsys):
    # pair graphs are relations, so their pregroupoid is forced even in sets
    code = main(["construct", "--input", FINSET, "--what", "pregroupoid", "--graph", "2"])
    doc = json.loads(capsys.readouterr().out)
    assert code == EXIT_OK and doc["unique"] and doc["valid"]


def test_signature_command(tmp_path):
    out = tmp_path / "sig.json"
    assert main(["signature", "--input", FINSET, "--output", str(out)]) == EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["count"] == len(doc["spans"]) > 0


def test_custom_class_from_signature(tmp_path, capsys):
    sig = tmp_path / "sig.json"
    main(["signature", "--input", FINSET, "--output", str(sig)])
    code = main(["check", "--input", FINSET, "--class", f"custom:{sig}", "--conditions", "T5.H"])
    captured = capsys.readouterr()
    assert code == EXIT_OK
    assert json.loads(captured.out)["conditions"][0]["verdict"] is True


@pytest.mark.parametrize("argv", [
    ["check", "--input", "/nonexistent.cat"],
    ["check", "--input", FINSET, "--class", "bogus"],
    ["check", "--input", FINSET, "--conditions", "X9.9"],
    ["construct", "--input", FINSET, "--what", "groupoid", "--graph", "nope"],
    ["frobnicate"],
])
def test_input_errors(argv, capsys):
    assert main(argv) == EXIT_INPUT


def test_bad_category_file(tmp_path):
    p = tmp_path / "bad.cat"
    p.write_text('{"signature": [], "algebras": []')
    assert main(["check", "--input", str(p)]) == EXIT_INPUT


def test_oracle_failure_exit_code(monkeypatch, capsys):
    import lawvere.cli as cli

    def fake(*args, **kwargs):
        return {"conditions": [], "oracle": {"verdict": "FAIL"}}

    monkeypatch.setattr(cli, "run_battery", fake)
    assert main(["check", "--input", FINSET]) == EXIT_FAIL
