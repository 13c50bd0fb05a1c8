import numpy as np
import pytest

from dualtilt.config import ScenarioConfig, bundled_names, bundled_path, dump_config, \
    load_config, parse_config, resolve_config, write_config
from dualtilt.errors import ConfigError


def test_defaults_build():
    sc = parse_config("").build()
    assert sc.dt == 1e-3 and sc.duration == 30.0
    assert sc.allocator.gamma_j == 10.0
    np.testing.assert_allclose(sc.box.upper[:6], np.deg2rad(30.0))


def test_bundled_configs():
    names = bundled_names()
    for name in ("hover", "circle_gj0", "table1_gj10", "table2_jalpha", "table2_jbeta",
                 "saturation_stress"):
        assert name in names
    assert resolve_config("table2_jalpha").allocator.objective == "alpha"
    assert resolve_config("circle_gj0").allocator.gamma_j == 0.0


@pytest.mark.parametrize("name", ["hover", "circle_gj0", "table1_gj10", "table2_jalpha",
                                  "table2_jbeta", "saturation_stress"])
def test_round_trip(name, tmp_path):
    cfg = load_config(bundled_path(name))
    assert parse_config(dump_config(cfg)) == cfg
    assert load_config(write_config(cfg, tmp_path / "c.yaml")) == cfg


def test_default_round_trip():
    cfg = ScenarioConfig()
    assert parse_config(dump_config(cfg)) == cfg


def test_nonpositive_dt_names_key_and_line():
    text = "name: x\nsim:\n  duration: 1.0\n  dt: 0.0\n"
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.key == "sim.dt"
    assert info.value.line == 4
    assert "sim.dt" in str(info.value) and "line 4" in str(info.value)


def test_unknown_key_rejected():
    with pytest.raises(ConfigError) as info:
        parse_config("allocator:\n  gama_j: 3\n")
    assert info.value.key == "allocator.gama_j" and info.value.line == 2
    with pytest.raises(ConfigError):
        parse_config("allocatr: {}\n")


def test_trajectory_keys_checked_per_type():
    with pytest.raises(ConfigError) as info:
        parse_config("trajectory:\n  type: hover\n  radius: 2.0\n")
    assert info.value.key == "trajectory.radius"


def test_type_errors():
    with pytest.raises(ConfigError):
        parse_config("sim: {dt: fast}\n")
    with pytest.raises(ConfigError):
        parse_config("controller: {kp: [1, 2]}\n")
    with pytest.raises(ConfigError):
        parse_config("sim: {max_substeps: 2.5}\n")
    with pytest.raises(ConfigError):
        parse_config("sim: [1, 2\n")


def test_exponent_style_numbers_accepted():
    assert parse_config("sim: {dt: 1e-3}\n").sim.dt == 1e-3


def test_initial_state_in_degrees():
    text = ("initial:\n  alpha_deg: [10, 0, 0, 0, 0, 0]\n  beta_deg: [0, 0, 0, 0, 0, 0]\n"
            "  omega: [600, -600, 600, -600, 600, -600]\n")
    sc = parse_config(text).build()
    assert sc.initial_actuators[0] == pytest.approx(np.deg2rad(10.0))
    with pytest.raises(ConfigError):
        parse_config("initial:\n  alpha_deg: [10, 0, 0, 0, 0, 0]\n")


def test_initial_outside_box_rejected():
    text = ("initial:\n  alpha_deg: [40, 0, 0, 0, 0, 0]\n  beta_deg: [0, 0, 0, 0, 0, 0]\n"
            "  omega: [600, -600, 600, -600, 600, -600]\n")
    with pytest.raises(ConfigError):
        parse_config(text)


def test_missing_file_and_name():
    with pytest.raises(ConfigError):
        resolve_config("nope/missing.yaml")
    with pytest.raises(ConfigError):
        resolve_config("no_such_config")
