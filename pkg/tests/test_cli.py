import csv
import io
import json

import pytest

from default_delegation import __version__
from default_delegation.cli import jsonable, main
from default_delegation.config import ConfigError, RunConfig

BASE = """
delta = 0.0
theta = 1.0
[policy]
q_min = 0.0
q_max = 1.0
q_d = 0.375
c_d = 0.0
"""


def write(tmp_path, text):
    path = tmp_path / "run.toml"
    path.write_text(text)
    return str(path)


def run(tmp_path, capsys, command, text, *extra):
    code = main([command, "--config", write(tmp_path, text), *extra])
    out, err = capsys.readouterr()
    return code, out, err


def test_bargain_json(tmp_path, capsys):
    code, out, _ = run(tmp_path, capsys, "bargain", BASE)
    assert code == 0
    payload = json.loads(out)
    assert payload["result"]["q"] == 0.5
    assert payload["result"]["c"] == pytest.approx(-0.140625)
    assert payload["version"] == __version__
    assert payload["conventions"]["inequity_scale"] == 4


def test_missing_theta(tmp_path, capsys):
    code, _, err = run(tmp_path, capsys, "bargain", BASE.replace("theta = 1.0", ""))
    assert code == 2
    assert json.loads(err)["path"] == "theta"


def test_delta_out_of_range(tmp_path, capsys):
    code, _, err = run(tmp_path, capsys, "bargain", BASE.replace("delta = 0.0", "delta = 1.5"))
    assert code == 2 and "delta out of range" in json.loads(err)["error"]


def test_unknown_key_reports_path(tmp_path, capsys):
    code, _, err = run(tmp_path, capsys, "bargain", BASE + "[welfare]\nbeta = 1\nbta = 2\n")
    assert code == 2 and json.loads(err)["path"] == "welfare.bta"


def test_bad_toml_and_missing_file(tmp_path, capsys):
    assert run(tmp_path, capsys, "bargain", "delta = = 1")[0] == 2
    assert main(["bargain", "--config", str(tmp_path / "nope.toml")]) == 2


def test_solve_aligned(tmp_path, capsys):
    text = "delta = 0.5\n[welfare]\nbeta = 1.0\ngamma = 0.2\n"
    code, out, _ = run(tmp_path, capsys, "solve", text)
    pol = json.loads(out)["result"]["policy"]
    assert code == 0
    assert (pol["q_min"], pol["q_max"], pol["q_d"], pol["c_d"]) == pytest.approx((0.1, 0.5, 0.5, 0.5 - 1 / 12))


def test_check_dd(tmp_path, capsys):
    text = "delta = 0.0\n[states]\nvalues = [0.0, 1.0]\n"
    code, out, _ = run(tmp_path, capsys, "check-dd", text)
    cert = json.loads(out)["result"]["certificate"]
    assert code == 0 and cert["feasible"] and cert["q_d"] == pytest.approx(0.375)


def test_sweep_csv(tmp_path, capsys):
    text = "delta = 0.5\n[options]\naxis = \"gamma\"\ngrid = [0.0, 0.1]\n"
    code, out, _ = run(tmp_path, capsys, "sweep", text)
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0
    assert rows[0] == ["axis", "value", "q_min", "q_max", "q_d", "c_d", "welfare", "branch", "flag"]
    assert rows[2][:3] == ["gamma", "0.1", "0.05"]


def test_sweep_requires_axis(tmp_path, capsys):
    code, _, err = run(tmp_path, capsys, "sweep", "delta = 0.5\n")
    assert code == 2 and json.loads(err)["path"] == "options.axis"


def test_oracle_bargain_and_out_file(tmp_path, capsys):
    target = tmp_path / "out.json"
    code, out, _ = run(tmp_path, capsys, "oracle", BASE + "[options]\noracle = \"bargain\"\n", "--out", str(target))
    assert code == 0 and out == ""
    rep = json.loads(target.read_text())["result"]
    assert rep["method"] == "grid_bargain" and rep["discrepancy"] < 0.01


def test_oracle_mc(tmp_path, capsys):
    text = BASE.replace("theta = 1.0", "seed = 3") + "[options]\noracle = \"mc\"\nn = 20000\n"
    code, out, _ = run(tmp_path, capsys, "oracle", text)
    res = json.loads(out)["result"]
    assert code == 0 and res["estimate"]["seed"] == 3 and res["discrepancy_in_stderr"] < 4


def test_first_best_and_eval(tmp_path, capsys):
    code, out, _ = run(tmp_path, capsys, "first-best", "theta = 1.0\n")
    res = json.loads(out)["result"]
    assert code == 0 and res["contract"]["q"] == 0.5 and res["breakdown"]["total"] == 0.5
    code, out, _ = run(tmp_path, capsys, "eval", BASE.replace("q_max = 1.0", "q_max = 0.5")
                       .replace("c_d = 0.0", "c_d = 0.515625"))
    assert code == 0 and json.loads(out)["result"]["expected_welfare"] is not None


def test_maxmin_and_compare(tmp_path, capsys):
    code, out, _ = run(tmp_path, capsys, "maxmin", "delta = 0.0\n[states]\nvalues = [0.0, 0.5, 1.0]\n")
    assert code == 0 and json.loads(out)["result"]["theta_k"] == 1.0
    text = "[welfare]\ngamma = 0.4\n[prior_high]\nfamily = \"power\"\nk = 2.0\n"
    code, out, _ = run(tmp_path, capsys, "compare-fosd", text)
    assert code == 0 and json.loads(out)["result"]["ordering"]["q_d"] == "higher"


def test_csv_key_value_output(tmp_path, capsys):
    code, out, _ = run(tmp_path, capsys, "bargain", BASE, "--format", "csv")
    rows = dict(csv.reader(io.StringIO(out)))
    assert code == 0 and float(rows["q"]) == 0.5


def test_resolved_config_roundtrips(tmp_path, capsys):
    text = BASE + "[welfare]\nbeta = 2.0\n[prior]\nfamily = \"power\"\nk = 2.0\n"
    _, out, _ = run(tmp_path, capsys, "bargain", text)
    resolved = json.loads(out)["config"]
    assert RunConfig.from_dict(resolved) == RunConfig.from_toml(text)


def test_config_validation_paths():
    with pytest.raises(ConfigError) as err:
        RunConfig.from_dict({"prior": {"family": "power"}})
    assert err.value.path == "prior.k"
    with pytest.raises(ConfigError) as err:
        RunConfig.from_dict({"welfare": {"beta": -1.0}})
    assert err.value.path == "welfare"
    with pytest.raises(ConfigError) as err:
        RunConfig.from_dict({"states": {"values": [1.0, 0.0]}})
    assert err.value.path == "states.values"


def test_jsonable_conventions():
    assert jsonable({(0.5, 1.0): float("nan")}) == {"0.5|1": None}
    assert jsonable(1 / 3) == 0.333333333333
