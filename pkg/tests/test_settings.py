import pytest

from pydbqubit.errors import ConfigError
from pydbqubit.settings import apply_overrides, dump_config, load_config, read_config

SINGLE_PAIR = """
layout:
  sites: [[0, 0], [7.72, 0]]
  pairs: [[0, 1]]
"""


def test_defaults_fill_every_section():
    config = load_config(SINGLE_PAIR)
    assert config.layout.separations == pytest.approx((7.72,))
    assert config.material.eps_surface == 6.35
    assert config.qubit.splitting == 0.0887
    assert config.well.calibration == "anchor"
    assert config.noise.drift.enabled is False
    assert config.run.seed == 0
    assert config.run.cphase_mode == "ideal"


def test_dump_config_reads_back_equal():
    config = load_config(
        SINGLE_PAIR
        + """
pulses:
  segments:
    - {duration_fs: 10.0, deltav: [0.1]}
noise:
  dephasing_rate_hz: 1.0e+9
  drift: {enabled: true, eta0: 0.2}
run:
  seed: 7
"""
    )
    again = load_config(dump_config(config))
    assert again == config
    assert again.config_hash == config.config_hash


def test_config_hash_tracks_content():
    assert load_config(SINGLE_PAIR).config_hash != load_config(SINGLE_PAIR + "run: {seed: 1}\n").config_hash


@pytest.mark.parametrize(
    "extra, path",
    [
        ("run: {shots: 0}\n", "run.shots"),
        ("run: {seed: -1}\n", "run.seed"),
        ("run: {samples_per_period: 4}\n", "run.samples_per_period"),
        ("run: {s_min: 10, s_max: 5}\n", "run.s_min"),
        ("run: {readout_state: 'x'}\n", "run.readout_state"),
        ("noise: {readout_error: 0.5}\n", "noise.readout_error"),
        ("noise: {dephasing_rate_hz: -1}\n", "noise.dephasing_rate_hz"),
        ("noise: {phonon: {phonon_energy: 0.1}}\n", "noise.phonon.phonon_energy"),
        ("qubit: {zz_convention: textbook}\n", "qubit.zz_convention"),
        ("qubit: {splitting: 'big'}\n", "qubit.splitting"),
        ("well: {depth: 3}\n", "well.depth"),
        ("material: {eps_surface: 0}\n", "material.eps_surface"),
        ("surprise: 1\n", "surprise"),
    ],
)
def test_errors_carry_the_field_path(extra, path):
    with pytest.raises(ConfigError) as info:
        load_config(SINGLE_PAIR + extra)
    assert info.value.path == path


def test_layout_is_required():
    with pytest.raises(ConfigError) as info:
        load_config("run: {seed: 1}\n")
    assert info.value.path == "layout"


def test_bad_layout_structure_is_a_config_error():
    with pytest.raises(ConfigError) as info:
        load_config("layout:\n  sites: [[0, 0], [5, 0]]\n  pairs: [[0, 3]]\n")
    assert info.value.path == "layout.pairs"


def test_invalid_yaml():
    with pytest.raises(ConfigError):
        load_config("layout: [unclosed\n")


def test_apply_overrides_parses_yaml_scalars():
    doc = {"run": {"seed": 1}}
    out = apply_overrides(doc, ["run.seed=42", "noise.drift.enabled=true", "qubit.t_per_qubit=[0.04, 0.05]"])
    assert out == {
        "run": {"seed": 42},
        "noise": {"drift": {"enabled": True}},
        "qubit": {"t_per_qubit": [0.04, 0.05]},
    }
    assert doc == {"run": {"seed": 1}}
    with pytest.raises(ConfigError):
        apply_overrides(doc, ["run.seed"])
    with pytest.raises(ConfigError):
        apply_overrides(doc, ["run.seed.deeper=1"])


def test_read_config_applies_overrides(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(SINGLE_PAIR, encoding="utf-8")
    config = read_config(path, ["run.shots=123", "noise.readout_error=0.05", "noise.dephasing_rate_hz=1e9"])
    assert config.run.shots == 123
    assert config.noise.readout_error == 0.05
    assert config.noise.dephasing_rate_hz == 1e9
    with pytest.raises(FileNotFoundError):
        read_config(tmp_path / "nope.yaml")
