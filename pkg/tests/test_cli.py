import csv
import json

import pytest

from keplerfock.cli import main, parse_frame, parse_int_list
from keplerfock.errors import ConfigError


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_parsers():
    assert parse_frame("e1+ie2").alpha[1] == 1j
    assert parse_frame("[[1,0,0,0],[0,0,1,0]]").im[2] == 1.0
    assert parse_int_list("8, 16,32") == [8, 16, 32]
    with pytest.raises(ConfigError):
        parse_int_list("8,x")
    with pytest.raises(ConfigError):
        parse_frame("[1,2]")


def test_converge_writes_outputs(tmp_path):
    rc = main(["converge", "--N", "8,16,32", "--output-dir", str(tmp_path)])
    assert rc == 0
    rows = read_csv(tmp_path / "converge.csv")
    assert rows[0][:2] == ["N", "value"] and len(rows) == 4
    doc = json.loads((tmp_path / "converge.json").read_text())
    assert {"config", "results", "invariant_failures", "versions"} <= set(doc)
    assert doc["config"]["N_list"] == [8, 16, 32]


def test_converge_is_deterministic(tmp_path):
    for d in ("a", "b"):
        assert main(["converge", "--N", "8,16", "--output-dir", str(tmp_path / d)]) == 0
    assert (tmp_path / "a" / "converge.csv").read_bytes() == \
        (tmp_path / "b" / "converge.csv").read_bytes()


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"frame": [[1, 0, 0, 0], [0, 0, 1, 0]], "E": -2.0,
                               "N_list": [4, 8], "symbol": {"kind": "radial-bump", "params": {}},
                               "output_dir": str(tmp_path / "out")}))
    assert main(["converge", "--config", str(cfg), "--N", "6"]) == 0
    doc = json.loads((tmp_path / "out" / "converge.json").read_text())
    assert doc["config"]["N_list"] == [6] and doc["config"]["E"] == -2.0


def test_exit_codes(tmp_path, capsys):
    out = ["--output-dir", str(tmp_path)]
    assert main(["converge", "--E", "0.5"] + out) == 2
    assert main(["converge", "--symbol", "nonsense"] + out) == 2
    assert main(["converge", "--N", "128"] + out) == 3
    assert main(["cross", "--alpha", "e1+ie2", "--beta", "e1+ie2", "--N", "8"] + out) == 3
    assert main(["hessian", "--theta0", "0.3", "--beta-samples", "5"] + out) == 0
    assert main(["bogus"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"frames": 1}))
    assert main(["converge", "--config", str(bad)] + out) == 2
    err = capsys.readouterr().err
    assert "configuration error" in err and "precondition violated" in err


def test_other_subcommands(tmp_path):
    out = ["--output-dir", str(tmp_path)]
    assert main(["orbit", "--frame", "e1+ie4", "--samples", "16"] + out) == 0
    assert main(["state", "--N", "2,4", "--residual"] + out) == 0
    assert main(["matelem", "--N", "8", "--frame2", "e1+ie3"] + out) == 0
    assert main(["cross", "--beta", "e1+ie3", "--N", "8,16"] + out) == 0
    assert main(["mixed", "--frames", "e1+ie2", "--frames", "e1+ie3", "--N", "8"] + out) == 0
    for name in ("orbit", "state", "matelem", "cross", "mixed"):
        assert (tmp_path / f"{name}.csv").exists() and (tmp_path / f"{name}.json").exists()


def test_invariants_subcommand(tmp_path, capsys):
    assert main(["invariants", "--output-dir", str(tmp_path)]) == 0
    assert "PASS" in capsys.readouterr().out
