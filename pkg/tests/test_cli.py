import json
from importlib import resources

import jsonschema
import pytest

from kindred.cli import EXIT_INVALID, EXIT_OK, EXIT_SCENARIO, EXIT_USAGE, run

FASTA = ">org\n" + "ACGT" * 300 + "\n"


def schema(name):
    return json.loads(resources.files("kindred.schemas").joinpath(f"{name}.json").read_text())


@pytest.fixture
def files(tmp_path):
    profile = tmp_path / "p.json"
    assert run(["profile", "gen", "--seed", "4", "--out", str(profile)]) == EXIT_OK
    request = tmp_path / "r.json"
    assert run(["request", "build", "--profile", str(profile), "--factor", "1/1/1747", "--out", str(request)]) == EXIT_OK
    fasta = tmp_path / "o.fa"
    fasta.write_text(FASTA)
    payload = tmp_path / "leak.bin"
    payload.write_bytes(b"x" * 1024)
    return {"profile": str(profile), "request": str(request), "fasta": str(fasta), "payload": str(payload), "dir": tmp_path}


def _cases(f):
    return {
        "profile-gen": ["profile", "gen"],
        "profile-check": ["profile", "check", f["profile"], "--parent", f["profile"]],
        "request-build": ["request", "build", "--profile", f["profile"], "--factor", "x", "--hash", "H2"],
        "request-compare": ["request", "compare", f["request"], f["request"]],
        "handshake-demo": ["handshake", "demo"],
        "sim-flood": ["sim", "flood", "--topology", "tree", "--size", "2"],
        "sim-dos": ["sim", "dos", "--dropper", "n3", "--target", "n6"],
        "sim-flooding": ["sim", "flooding", "--volume", "12"],
        "sim-anonymity": ["sim", "anonymity", "--size", "6", "--monitor", "n0,n1"],
        "sim-tagging": ["sim", "tagging"],
        "whistle-derive": ["whistle", "derive", "--fasta", f["fasta"], "--sentence", "Hi.", "--address", "1 Main St"],
        "whistle-encrypt": ["whistle", "encrypt", "--fasta", f["fasta"], "--in", f["payload"]],
        "whistle-sim": ["whistle", "sim", "--size", "30"],
        "analyze-fp": ["analyze", "fp", "--trials", "10000"],
        "analyze-cost": ["analyze", "cost"],
        "cf": ["cf", "--n", "7", "--terms", "9"],
        "digits": ["digits", "GCCCT"],
    }


def test_every_subcommand_output_validates(files):
    for name, argv in _cases(files).items():
        out = files["dir"] / f"{name}.out.json"
        assert run([*argv, "--seed", "3", "--out", str(out)]) == EXIT_OK, name
        jsonschema.validate(json.loads(out.read_text()), schema(name))


def test_same_seed_same_bytes(files):
    for name in ("handshake-demo", "whistle-sim", "sim-tagging", "analyze-fp", "profile-gen"):
        argv = _cases(files)[name]
        a, b = files["dir"] / "a.json", files["dir"] / "b.json"
        run([*argv, "--seed", "8", "--out", str(a)])
        run([*argv, "--seed", "8", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes(), name


def test_cf_output(capsys):
    assert run(["cf", "--n", "7", "--terms", "9"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out) == {"head": 2, "tail": [1, 1, 1, 4, 1, 1, 1, 4], "period": [0, 4]}


def test_fp_output(capsys):
    assert run(["analyze", "fp", "--rule", "multiset", "--trials", "1000000", "--seed", "7"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["exact_fraction"] == "931/4096" and doc["mc_within_3_sigma"]


def test_usage_errors(capsys):
    assert run(["nonsense"]) == EXIT_USAGE
    assert run([]) == EXIT_USAGE
    assert run(["sim", "flood", "--ttl", "x"]) == EXIT_USAGE
    assert "usage" in capsys.readouterr().err


def test_validation_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"markers": [{"name": "TH01", "motif": "AXTG", "alleles": ["1", "2"]}]}')
    assert run(["profile", "check", str(bad)]) == EXIT_INVALID
    assert run(["cf", "--n", "7", "--terms", "0"]) == EXIT_INVALID
    assert run(["profile", "check", str(tmp_path / "missing.json")]) == EXIT_INVALID
    assert "error" in capsys.readouterr().err


def test_scenario_failure_exit_code(tmp_path, capsys):
    # a dropper cutting a path stops delivery to the far end
    graph = tmp_path / "g.json"
    graph.write_text(json.dumps({"nodes": ["a", "b", "c"], "edges": [["a", "b"], ["b", "c"]]}))
    code = run(["sim", "dos", "--graph", str(graph), "--origin", "a", "--dropper", "b", "--target", "c"])
    assert code == EXIT_SCENARIO
    assert json.loads(capsys.readouterr().out)["delivered"] is False


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"topology": {"kind": "tree", "fanout": 10, "size": 3}, "ttl": 3, "origin": "r"}))
    assert run(["sim", "flood", "--config", str(cfg)]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["coverage"] == 1111


def test_text_format_respects_no_color(monkeypatch, capsys):
    monkeypatch.setenv("KINDRED_NO_COLOR", "1")
    assert run(["handshake", "demo", "--format", "text"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "keys_equal: yes" in out and "\033[" not in out
