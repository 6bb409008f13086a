import json

import numpy as np
import pytest
import yaml

from spinchaos import io as sio
from spinchaos.cli import (COMMANDS, EXIT_OK, EXIT_PARAM, EXIT_USAGE, EXIT_VERIFY, ParameterError, floats,
                           ints, main, resolve_config, sub_seed)
from spinchaos.recipes import RECIPES, UnknownRecipe, figure_recipe

IMITATION = ["ensemble-imitation", "--N", "16", "--L", "4", "--duration", "0.5", "--sample-dt", "0.1"]


def test_csv_round_trip(tmp_path):
    rows = [("a", "b, c", "q\"uote"), (1, 2.5, float("nan")), (np.float64(1e-17), np.int64(3), "x\ny")]
    p = sio.write_csv(tmp_path / "t.csv", rows)
    back = sio.read_csv(p)
    assert back[0] == ["a", "b, c", 'q"uote']
    assert float(back[2][0]) == 1e-17
    assert back[2][2] == "x\ny"
    assert back[1][2] == "nan"


def test_ndjson_round_trip(tmp_path):
    recs = [{"a": np.float64(0.1), "b": np.arange(3)}, {"c": None}]
    p = sio.write_ndjson(tmp_path / "r.ndjson", recs)
    assert sio.read_ndjson(p) == [{"a": 0.1, "b": [0, 1, 2]}, {"c": None}]


def test_value_parsers():
    np.testing.assert_allclose(floats("0:1:5"), [0, 0.25, 0.5, 0.75, 1])
    assert floats("1.5, 2") == [1.5, 2.0]
    assert floats(3) == [3.0]
    assert ints("4..7") == [4, 5, 6, 7]
    with pytest.raises(ValueError):
        floats("a:b")


def test_sub_seed_depends_only_on_seed_and_index():
    a = [sub_seed(7, i) for i in range(6)]
    assert a == [sub_seed(7, i) for i in range(6)]
    assert len(set(a)) == 6
    assert sub_seed(8, 0) != a[0]


def test_config_precedence():
    cfg = resolve_config("scar-report", {"S": 1.0, "L": 5}, {"L": "4"})
    assert cfg["S"] == 1.0 and cfg["L"] == 4 and cfg["Jt"] == 1.76
    with pytest.raises(ParameterError):
        resolve_config("scar-report", {"bogus": 1}, {})
    with pytest.raises(ParameterError):
        resolve_config("scar-report", {}, {"S": "0.75"})
    with pytest.raises(ParameterError):
        resolve_config("lyapunov-scan-J", {}, {"L": "1"})


def test_every_command_resolves_with_defaults():
    for name in COMMANDS:
        resolve_config(name, None, {})


def test_run_writes_manifest_and_verifies(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(IMITATION + ["--seed", "3", "--out", str(out)]) == EXIT_OK
    man = sio.load_manifest(out)
    assert man["seed"] == 3 and man["command"] == "ensemble-imitation"
    assert set(man["outputs"]) == {"imitation.csv", "summary.ndjson"}
    assert main(["verify", str(out)]) == EXIT_OK
    with open(out / "imitation.csv", "a") as fh:
        fh.write("tampered\n")
    assert main(["verify", str(out / "manifest.json")]) == EXIT_VERIFY
    assert "imitation.csv" in capsys.readouterr().out


def test_same_seed_gives_identical_bytes(tmp_path):
    for name in ("a", "b"):
        assert main(IMITATION + ["--seed", "42", "--out", str(tmp_path / name)]) == EXIT_OK
    assert (tmp_path / "a/imitation.csv").read_bytes() == (tmp_path / "b/imitation.csv").read_bytes()
    assert main(IMITATION + ["--seed", "43", "--out", str(tmp_path / "c")]) == EXIT_OK
    assert (tmp_path / "a/imitation.csv").read_bytes() != (tmp_path / "c/imitation.csv").read_bytes()


def test_jobs_do_not_change_results(tmp_path):
    args = ["pr-scan", "--S", "1", "--L", "4", "--Jt", "1.0:1.2:3", "--seed", "1"]
    assert main(args + ["--out", str(tmp_path / "j1")]) == EXIT_OK
    assert main(args + ["--jobs", "2", "--out", str(tmp_path / "j2")]) == EXIT_OK
    assert (tmp_path / "j1/pr.csv").read_bytes() == (tmp_path / "j2/pr.csv").read_bytes()


def test_yaml_config_overridden_by_flags(tmp_path):
    cfgfile = tmp_path / "c.yaml"
    cfgfile.write_text(yaml.safe_dump({"S": 1.0, "L": 5, "N": 8, "duration": 0.2, "sample-dt": 0.1}))
    out = tmp_path / "o"
    assert main(["ensemble-imitation", "--config", str(cfgfile), "--L", "4", "--out", str(out)]) == EXIT_OK
    cfg = sio.load_manifest(out)["config"]
    assert cfg["L"] == 4 and cfg["N"] == 8 and cfg["sample_dt"] == 0.1
    # entropy seed is recorded when none is given
    assert isinstance(sio.load_manifest(out)["seed"], int)


def test_parameter_error_exit_code(tmp_path, capsys):
    out = tmp_path / "bad"
    assert main(["scar-report", "--S", "0.3", "--out", str(out)]) == EXIT_PARAM
    rec = json.loads((out / "error.json").read_text())
    assert rec["exit_code"] == EXIT_PARAM
    assert "S must be" in json.loads(capsys.readouterr().err)["message"]


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as e:
        main(["no-such-command"])
    assert e.value.code == EXIT_USAGE


def test_recipes():
    for name in ("fig8", "fig9", "fig16"):
        r = figure_recipe(name)
        resolve_config(r["command"], None, r["params"])
    assert figure_recipe("fig8")["params"]["N"] == 1000
    with pytest.raises(UnknownRecipe):
        figure_recipe("fig99")
    for r in RECIPES.values():
        assert r["command"] in COMMANDS


def test_unknown_recipe_exit_code(tmp_path):
    assert main(["recipe", "fig99", "--out", str(tmp_path)]) == EXIT_PARAM
