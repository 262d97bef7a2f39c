import json
import subprocess
import sys

import pytest

from cocoa_decoding import cli
from cocoa_decoding.providers import TraceRecord, write_trace
from cocoa_decoding.strategies import StrategyConfig


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_decode_toy_happy_path(tmp_path, capsys):
    out = tmp_path / "run.jsonl"
    code, _, _ = run(["decode", "--provider", "toy", "--strategy", "cocoa", "--seed", "42", "--out", str(out)], capsys)
    assert code == 0
    lines = out.read_text().splitlines()
    head = json.loads(lines[0])
    assert head["seed"] == 42 and head["strategy"] == "cocoa" and head["n_steps"] == len(lines) - 1


def test_unknown_strategy_exit_2(capsys):
    with pytest.raises(SystemExit) as err:
        cli.main(["decode", "--strategy", "beam"])
    assert err.value.code == 2
    msg = capsys.readouterr().err
    for name in ("greedy", "cad", "coiecd", "confcd", "adacad", "cocoa"):
        assert name in msg


def test_literal_orientation_plumbs_through(tmp_path, capsys):
    trace = tmp_path / "t.jsonl"
    # a context so peaked its margin rounds to 1
    write_trace(trace, [TraceRecord(0, (0.0, 3.0, 0.0), (200.0, 0.0, 0.0))], 3)
    code, out, _ = run(["decode", "--provider", "replay", "--trace", str(trace), "--gate-orientation", "literal"], capsys)
    assert code == 0
    step = json.loads(out.splitlines()[1])
    assert step["margin"] == pytest.approx(1.0, abs=1e-11)
    assert abs(step["lambda"] - (1 - step["conflict_score"])) <= 1e-10


def test_config_file_precedence(tmp_path, capsys):
    conf = tmp_path / "run.conf"
    conf.write_text("# comment\nz = 2.0\ngamma = 3.0\nuse-peakedness = false\nstrategy = adacad\n")
    code, out, _ = run(["decode", "--config", str(conf), "--gamma", "0.5"], capsys)
    assert code == 0
    head = json.loads(out.splitlines()[0])
    assert head["strategy"] == "adacad"
    assert head["config"]["z"] == 2.0 and head["config"]["gamma"] == 0.5 and head["config"]["use_peakedness"] is False


@pytest.mark.parametrize("text", ["nonsense\n", "colour = red\n", "z = abc\n", "strategy = beam\n"])
def test_bad_config_is_usage_error(tmp_path, capsys, text):
    conf = tmp_path / "bad.conf"
    conf.write_text(text)
    code, _, err = run(["decode", "--config", str(conf)], capsys)
    assert code == 2
    assert json.loads(err.strip().splitlines()[-1])["error"] == "usage"


def test_defaults_match_published_settings():
    d = cli.DEFAULTS
    cfg = StrategyConfig()
    for k in cli.HYPER:
        assert d[k] == getattr(cfg, k)
    assert (d["renyi_order"], d["z"], d["gamma"], d["delta"], d["cad_alpha"]) == (0.5, 5.0, 1.0, 1e-8, 1.0)


def test_help_lists_defaults(capsys):
    with pytest.raises(SystemExit):
        cli.main(["decode", "--help"])
    text = capsys.readouterr().out
    for flag in ("--renyi-order", "--gamma", "--delta", "--z", "--cad-alpha", "--coiecd-threshold", "--gate-orientation"):
        assert flag in text
    assert "(default: 0.5)" in text and "(default: 5.0)" in text and "(default: 1e-08)" in text


@pytest.mark.parametrize(
    "argv",
    [
        ["decode", "--provider", "replay"],
        ["decode", "--provider", "remote"],
        ["decode", "--instance", "5000"],
        ["decode", "--max-len", "0"],
        ["decode", "--z", "inf"],
        ["analyze", "em", "--strategies", "cad,beam"],
        ["analyze", "em", "--workers", "0"],
        ["analyze", "sweep", "--zs", "a,b"],
        ["analyze", "bench", "--steps", "0"],
    ],
)
def test_usage_errors(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2
    assert json.loads(err.strip().splitlines()[-1])["error"] == "usage"


def test_runtime_errors_are_one_json_line(tmp_path, capsys):
    bad = tmp_path / "t.jsonl"
    bad.write_text('{"type": "header", "vocab_size": 2}\n{"prior_logits": [0, 0, 0], "ctx_logits": [0, 0]}\n')
    code, _, err = run(["decode", "--provider", "replay", "--trace", str(bad)], capsys)
    assert code == 1
    (line,) = err.strip().splitlines()
    assert "line 2" in json.loads(line)["message"]
    code, _, err = run(["decode", "--provider", "replay", "--trace", str(tmp_path / "missing.jsonl")], capsys)
    assert code == 1
    code, _, _ = run(["decode", "--provider", "remote", "--endpoint", "http://127.0.0.1:9", "--timeout", "2"], capsys)
    assert code == 1


def test_empty_suite_is_runtime_error(capsys):
    code, _, err = run(["analyze", "em", "--n-conflict", "0", "--n-agree", "0"], capsys)
    assert code == 1
    assert "empty" in json.loads(err)["message"]


def test_analyze_reruns_byte_identical(tmp_path, capsys):
    small = ["--n-conflict", "30", "--n-agree", "30", "--seed", "42"]
    outs = []
    for workers in ("1", "1", "4"):
        p = tmp_path / f"s{len(outs)}.jsonl"
        assert run(["analyze", "sensitivity", *small, "--workers", workers, "--out", str(p)], capsys)[0] == 0
        outs.append(p.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_analyze_each_subcommand(tmp_path, capsys):
    small = ["--n-conflict", "10", "--n-agree", "10", "--vocab", "16"]
    for sub in ("em", "sensitivity", "ablate"):
        code, out, _ = run(["analyze", sub, *small], capsys)
        assert code == 0 and json.loads(out.splitlines()[0])["kind"] == sub
    code, out, _ = run(["analyze", "sweep", *small, "--zs", "1,5", "--renyi-orders", "0.5", "--gammas", "1"], capsys)
    assert code == 0 and len(out.splitlines()) == 3
    code, out, _ = run(["analyze", "bench", "--vocab", "500", "--steps", "20", "--format", "table"], capsys)
    assert code == 0
    body = out.splitlines()
    assert body[0].startswith("# bench seed=42")
    assert [l.split()[0] for l in body[3:]] == ["cad", "adacad", "cocoa"]


def test_suite_command_round_trip(tmp_path, capsys):
    p = tmp_path / "suite.jsonl"
    assert run(["suite", "--n-conflict", "5", "--n-agree", "5", "--vocab", "16", "--out", str(p)], capsys)[0] == 0
    code, out, _ = run(["analyze", "em", "--suite", str(p), "--strategies", "greedy"], capsys)
    assert code == 0
    head = json.loads(out.splitlines()[0])
    assert head["seed"] == 42 and head["n_conflict"] == 5


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "cocoa_decoding.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "cocoa-decode" in res.stdout
