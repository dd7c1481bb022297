import csv
import io
import json

import pytest

from drwave.cli import parse_grid, run_cli
from drwave.config import SCHEMA_VERSION, dump_config, load_config, parse_config
from drwave.errors import ConfigurationError
from drwave.rate_lab import ExperimentSpec
from drwave.tuning import REGIME_COLUMNS

SMALL = {
    "schema_version": "v1",
    "name": "small",
    "n_grid": [32, 64],
    "replications": 120,
    "seed": 5,
    "dgp": {"family": "constant", "p0": 0.5, "b0": 0.5, "rho": 0.05, "alpha": None, "beta": None},
    "estimator": {"kind": "IF", "scheme": "single"},
    "tuning": {"rule": "fixed", "k1": 8, "k2": 8},
}


def _write(tmp_path, payload, name="exp.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return path


def test_missing_config_exit_code(tmp_path, capsys) -> None:
    code = run_cli(["run", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path / "o")])
    assert code == 2
    assert "config not found" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_usage_error_exit_code(capsys) -> None:
    assert run_cli(["no-such-command"]) == 2
    assert run_cli(["regime-map", "--alpha-grid", "0.1"]) == 2
    capsys.readouterr()


def test_schema_violation_lists_errors(tmp_path, capsys) -> None:
    bad = dict(SMALL, replications=5, typo=1)
    code = run_cli(["run", "--config", str(_write(tmp_path, bad)), "--out", str(tmp_path / "o")])
    err = capsys.readouterr().err
    assert code == 2 and "replications" in err and "typo" in err
    assert not (tmp_path / "o").exists()


@pytest.mark.parametrize("where", ["root", "dgp", "estimator", "tuning"])
def test_unknown_keys_rejected(where) -> None:
    raw = json.loads(json.dumps(SMALL))
    (raw if where == "root" else raw[where])["mistyped"] = 1
    with pytest.raises(ConfigurationError):
        parse_config(raw)


def test_schema_version_required() -> None:
    with pytest.raises(ConfigurationError):
        parse_config({k: v for k, v in SMALL.items() if k != "schema_version"})
    with pytest.raises(ConfigurationError):
        parse_config(dict(SMALL, schema_version="v2"))


def test_bad_json(tmp_path) -> None:
    path = tmp_path / "x.json"
    path.write_text("{not json")
    with pytest.raises(ConfigurationError):
        load_config(path)


def test_config_round_trip(tmp_path) -> None:
    spec = parse_config(SMALL)
    text = dump_config(spec)
    again = load_config(_write(tmp_path, json.loads(text)))
    assert again == spec
    assert dump_config(again) == text
    assert json.loads(text)["schema_version"] == SCHEMA_VERSION
    assert parse_config({"schema_version": "v1"}) == ExperimentSpec()


def test_run_is_byte_identical(tmp_path, capsys) -> None:
    cfg = _write(tmp_path, SMALL)
    outs = []
    for i, threads in enumerate(("1", "3")):
        out = tmp_path / f"out{i}"
        code = run_cli(["run", "--config", str(cfg), "--out", str(out), "--threads", threads])
        assert code in (0, 1)
        outs.append(out)
    capsys.readouterr()
    for name in ("results.csv", "results.json", "config.json"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    header = (outs[0] / "results.csv").read_text().split("\n")[0]
    assert header == "n,mean,bias,var,mse,stderr"
    assert not list(outs[0].glob("*.tmp"))


def test_regime_map_filtered_grid(capsys) -> None:
    code = run_cli(["regime-map", "--alpha-grid", "0.1,0.3,0.5", "--beta-grid", "0.1:0.5:3",
                    "--d", "1", "--kind", "IF", "--scheme", "double"])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 9
    assert tuple(rows[0]) == REGIME_COLUMNS
    assert {r["achievable"] for r in rows} == {"true"}


def test_regime_map_golden_header(tmp_path, capsys) -> None:
    assert run_cli(["regime-map", "--alpha-grid", "0.2", "--beta-grid", "0.4", "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    header = (tmp_path / "regime_map.csv").read_text().split("\n")[0]
    assert header == (
        "alpha,beta,d,kind,scheme,achievable,bestExponent,minimaxExponent,predOptimalSufficient,"
        "undersmoothK1,undersmoothK2,oversmoothK1,oversmoothK2,undersmoothSome,oversmoothSome,"
        "k1Rule,k2Rule"
    )
    rows = json.loads((tmp_path / "regime_map.json").read_text())
    assert len(rows) == 12


def test_parse_grid() -> None:
    assert parse_grid("0.1, 0.2") == [0.1, 0.2]
    assert parse_grid("0:1:3") == [0.0, 0.5, 1.0]


def test_oracle_and_kernel_checks_pass(capsys) -> None:
    assert run_cli(["oracle-check"]) == 0
    assert run_cli(["kernel-check", "--k1", "2", "--k2", "8"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") > 50
