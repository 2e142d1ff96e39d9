import json
import math
from pathlib import Path

import pytest

from gdscap.cli import main

DATA = Path(__file__).resolve().parents[1] / "data"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_validate(capsys):
    code, out, _ = run(capsys, "validate", str(DATA / "phaseflip_bitflip.json"))
    rep = json.loads(out)
    assert code == 0 and rep["kind"] == "gds" and rep["block_structure_ok"]
    code, out, _ = run(capsys, "validate", str(DATA / "amplitude_damping.json"))
    assert code == 0 and json.loads(out)["kind"] == "channel"


def test_unequal_counts_need_pad(capsys):
    code, _, err = run(capsys, "validate", str(DATA / "unequal_counts.json"))
    assert code == 2 and "pad" in err
    code, _, _ = run(capsys, "validate", "--pad", str(DATA / "unequal_counts.json"))
    assert code == 0


def test_invalid_inputs(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    code, _, err = run(capsys, "validate", str(bad))
    assert code == 2 and "line 1" in err
    code, _, _ = run(capsys, "validate", str(tmp_path / "missing.json"))
    assert code == 2
    code, _, _ = run(capsys, "cdc", "--p", "1", "--n", "1")
    assert code == 2


def test_bounds_deterministic(capsys):
    args = ("--restarts", "4", "--seed", "7", "bounds", str(DATA / "phaseflip_bitflip.json"))
    code, first, _ = run(capsys, *args)
    _, second, _ = run(capsys, *args)
    assert code == 0 and first == second
    rep = json.loads(first)
    assert rep["q1_optimizer"] == pytest.approx(2 - (-(0.2 * math.log2(0.2) + 0.8 * math.log2(0.8))), abs=1e-4)
    assert rep["q_upper_certificate"]["feasible"]


def test_cdc_and_certificates(capsys):
    code, out, _ = run(capsys, "cdc", "--p", "4", "--n", "1", "--require-certificate")
    rep = json.loads(out)
    assert code == 0 and rep["q_upper"] == pytest.approx(math.log2(1.5), abs=1e-11)
    assert rep["c_certificate"]["feasible"]
    code, out, _ = run(capsys, "cdc", "--p", "4", "--n", "1", "--no-certify", "--require-certificate")
    assert code == 3 and json.loads(out)["q_certificate"] == "closed-form only"


def test_superadd(capsys):
    code, out, _ = run(capsys, "superadd", "--p", "16", "--n", "1", "--lambda", "0.55")
    rep = json.loads(out)
    assert code == 0 and rep["mode"] == "numeric"
    assert rep["joint_numeric"] == pytest.approx(0.45, abs=1e-9)
    assert rep["superadditive_certified"] and rep["q_erasure"] == 0
    code, out, _ = run(capsys, "superadd", "--p", "2", "--n", "6", "--lambda", "0.6")
    rep = json.loads(out)
    assert code == 4 and rep["mode"] == "closed-form only"


def test_fig1(capsys, tmp_path):
    code, out, _ = run(capsys, "fig1", "--p-rule", "n^4", "--n-max", "5")
    lines = out.strip().split("\n")
    assert code == 0 and len(lines) == 6
    assert lines[0] == "n,p,q_upper_bits,private_bits,lambda_max"
    assert lines[2].startswith("2,16,")
    target = tmp_path / "fig.csv"
    run(capsys, "--out", str(target), "fig1", "--n-max", "5")
    assert target.read_text() == out


def test_csv_format(capsys):
    code, out, _ = run(capsys, "--format", "csv", "cdc", "--p", "2", "--n", "1", "--no-certify")
    assert code == 0 and out.startswith("key,value\n")
    assert "q_upper," in out


def test_single_letter_and_oracle(capsys, tmp_path):
    cand = tmp_path / "c.json"
    cand.write_text(json.dumps([[[1, 0], [0, 0]]] * 3))
    code, out, _ = run(capsys, "single-letter", str(DATA / "amplitude_damping_triple.json"), "--candidates", str(cand))
    rep = json.loads(out)
    assert code == 0 and rep["qualifies"] and rep["capacity_bits"] == pytest.approx(math.log2(3))
    code, out, _ = run(capsys, "--restarts", "4", "oracle", str(DATA / "phaseflip_bitflip.json"))
    assert code == 0 and json.loads(out)["sandwich_ok"]
