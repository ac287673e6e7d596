import json

import pytest

from pydbqubit.cli import EXIT_OK, EXIT_PHYSICS, EXIT_USAGE, main

TWO_PAIRS = """
layout:
  sites: [[0, 0], [7.68, 0], [0, 20], [7.68, 20]]
  pairs: [[0, 1], [2, 3]]
run:
  readout_state: '1'
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "pairs.yaml"
    path.write_text(TWO_PAIRS, encoding="utf-8")
    return path


def test_readout_run_writes_outputs(config_file, tmp_path, capsys):
    out = tmp_path / "results"
    code = main(["readout", "--config", str(config_file), "--out", str(out), "--shots", "40", "--seed", "9"])
    assert code == EXIT_OK
    assert "readout: wrote" in capsys.readouterr().out
    names = sorted(p.name for p in out.iterdir())
    assert names == ["config.yaml", "manifest.json", "readout.csv", "readout_summary.json"]
    summary = json.loads((out / "readout_summary.json").read_text())
    assert summary["seed"] == 9
    assert [q["n1"] for q in summary["qubits"]] == [40, 40]


def test_missing_config_is_a_usage_error(tmp_path, capsys):
    code = main(["rabi", "--config", str(tmp_path / "nope.yaml"), "--out", str(tmp_path)])
    assert code == EXIT_USAGE
    assert "Config not found" in capsys.readouterr().err


def test_bad_override_is_a_usage_error(config_file, tmp_path):
    code = main(["readout", "--config", str(config_file), "--out", str(tmp_path), "--override", "run.shots"])
    assert code == EXIT_USAGE
    code = main(["readout", "--config", str(config_file), "--out", str(tmp_path), "--override", "run.shots=0"])
    assert code == EXIT_USAGE


def test_wrong_layout_for_the_scenario_is_a_usage_error(config_file, tmp_path):
    assert main(["rabi", "--config", str(config_file), "--out", str(tmp_path)]) == EXIT_USAGE


def test_physics_failure_exit_code(config_file, tmp_path, capsys):
    code = main(
        [
            "entangle",
            "--config",
            str(config_file),
            "--out",
            str(tmp_path),
            "--override",
            "run.cphase_mode=echo",
            "--override",
            "run.cphase_tilt=0.1",
        ]
    )
    assert code == EXIT_PHYSICS
    assert "entangle failed" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["teleport", "--config", "x.yaml"],
        ["rabi"],
        ["rabi", "--config", "x.yaml", "--seed", "-1"],
        ["rabi", "--config", "x.yaml", "--shots", "0"],
    ],
)
def test_argument_errors_exit_with_usage(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == EXIT_USAGE
