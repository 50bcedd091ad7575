import json

import pytest

from modalfem.cli import ConfigError, main, parse_config


def write_cfg(tmp_path, payload, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def test_parse_config_rejects_unknown_key():
    with pytest.raises(ConfigError, match="frobnicate"):
        parse_config("solve", {"problem": "D1", "level": 3, "epsilon": 0.2, "n": 0, "frobnicate": 1})


def test_parse_config_names_list_element():
    with pytest.raises(ConfigError, match=r"epsilons\[1\]"):
        parse_config(
            "sweep",
            {"problem": "D1", "levels": [3], "epsilons": [0.2, "x"], "orders": [0]},
        )


def test_parse_config_missing_and_invalid_values():
    with pytest.raises(ConfigError, match="level"):
        parse_config("solve", {"problem": "D1", "epsilon": 0.2, "n": 0})
    with pytest.raises(ConfigError, match="D7"):
        parse_config("solve", {"problem": "D7", "level": 3, "epsilon": 0.2, "n": 0})
    with pytest.raises(ConfigError, match="solver_path"):
        parse_config(
            "solve",
            {"problem": "D1", "level": 3, "epsilon": 0.2, "n": 0, "solver_path": "qr"},
        )
    cfg = parse_config("solve", {"problem": "D1", "level": 3, "epsilon": 0.2, "n": 0})
    assert cfg["kappa"] == 0.0 and cfg["method"] == "reduced"


def test_solve_command_writes_outputs(tmp_path):
    cfg = write_cfg(
        tmp_path,
        {"problem": "D1", "level": 4, "epsilon": 0.2, "n": 0, "vtk": True},
    )
    out = tmp_path / "out"
    assert main(["solve", "--config", cfg, "--output", str(out)]) == 0
    assert (out / "results.csv").exists()
    assert (out / "solution.vtk").exists()
    echo = json.loads((out / "run.json").read_text())
    assert echo["command"] == "solve"
    assert echo["config"]["problem"] == "D1"


def test_invalid_config_exits_one(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"problem": "D1"})
    assert main(["solve", "--config", cfg, "--output", str(tmp_path / "o")]) == 1
    err = capsys.readouterr().err
    assert "configuration error" in err
    assert main(["solve", "--config", str(tmp_path / "missing.json")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["solve", "--config", str(bad)]) == 1


def test_sweep_deterministic_output(tmp_path):
    cfg = write_cfg(
        tmp_path,
        {"problem": "D1", "levels": [3, 4], "epsilons": [0.2], "orders": [0]},
    )
    o1, o2 = tmp_path / "o1", tmp_path / "o2"
    assert main(["sweep", "--config", cfg, "--output", str(o1)]) == 0
    assert main(["sweep", "--config", cfg, "--output", str(o2)]) == 0
    # identical numbers up to the wall-clock timing column
    strip = lambda p: [
        line.rsplit(",", 1)[0] for line in (p / "results.csv").read_text().splitlines()
    ]
    assert strip(o1) == strip(o2)
    assert (o1 / "fits.json").exists()


def test_sweep_partial_failure_exits_two(tmp_path, capsys):
    cfg = write_cfg(
        tmp_path,
        {"problem": "THREE_CYL", "levels": [1, 3], "epsilons": [0.2], "orders": [0]},
    )
    out = tmp_path / "out"
    assert main(["sweep", "--config", cfg, "--output", str(out)]) == 2
    errors = json.loads((out / "errors.json").read_text())
    assert len(errors) == 1
    body = (out / "results.csv").read_text()
    assert "THREE_CYL" in body


def test_infsup_command(tmp_path):
    cfg = write_cfg(
        tmp_path, {"problem": "D1", "level": 4, "epsilon": 0.2, "orders": [0, 1]}
    )
    out = tmp_path / "out"
    assert main(["infsup", "--config", cfg, "--output", str(out)]) == 0
    payload = json.loads((out / "infsup.json").read_text())
    assert len(payload) == 2
    assert payload[0]["beta"] > payload[1]["beta"] > 0


def test_robin_command(tmp_path):
    cfg = write_cfg(
        tmp_path,
        {"problem": "D1", "level": 4, "epsilon": 0.2, "n": 0, "kappas": [1e-2, 1e-4]},
    )
    out = tmp_path / "out"
    assert main(["robin", "--config", cfg, "--output", str(out)]) == 0
    payload = json.loads((out / "robin.json").read_text())
    assert payload[0]["diff_L2_vs_dirichlet"] > payload[1]["diff_L2_vs_dirichlet"]
