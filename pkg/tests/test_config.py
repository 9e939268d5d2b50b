import math
from pathlib import Path

import pytest

from oamlab.config import (ConfigError, parse_config, parse_config_text, parse_quantity,
                           serialize)
from oamlab.fields import AU_TIME_FS, HARTREE_EV

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def test_minimal_config():
    cfg = parse_config_text('command = "mask"\n[mask]\nm = 4\nk0 = "15 per_um"\n')
    assert cfg.command == "mask" and cfg.seed == 0
    assert cfg.get("mask", "m") == 4 and cfg.get("mask", "k0") == 15.0


@pytest.mark.parametrize("text,dim,value", [
    ("1.85 um", "length", 1.85),
    ("pi/2 rad", "angle", math.pi / 2),
    ("2*pi rad", "angle", 2 * math.pi),
    ("90 deg", "angle", math.pi / 2),
    ("-20 fs", "time", -20 / AU_TIME_FS),
    ("1 eV", "energy", 1 / HARTREE_EV),
    ("0.5 eV", "momentum", math.sqrt(1.0 / HARTREE_EV)),
    ("0.17 um2", "area", 0.17),
])
def test_quantities(text, dim, value):
    assert parse_quantity(text, dim) == pytest.approx(value, rel=1e-12)


def test_unitless_quantity_rejected():
    with pytest.raises(ConfigError) as exc:
        parse_config_text('command = "mask"\n[mask]\nk0 = 15\n')
    assert "unit" in exc.value.errors[0]


def test_wrong_unit_rejected():
    with pytest.raises(ConfigError):
        parse_config_text('command = "mask"\n[mask]\nk0 = "15 um"\n')


def test_duplicate_key_rejected():
    with pytest.raises(ConfigError):
        parse_config_text('command = "mask"\n[mask]\nm = 4\nm = 5\n')


def test_unknown_keys_and_sections_rejected():
    with pytest.raises(ConfigError) as exc:
        parse_config_text('command = "mask"\nfoo = 1\n[mask]\nbar = 2\n[nowhere]\nx = 1\n')
    joined = " ".join(exc.value.errors)
    assert "foo" in joined and "bar" in joined and "nowhere" in joined


def test_all_errors_listed_together():
    text = 'command = "mask"\n[mask]\nm = "four"\nk0 = 15\nR = "2 furlong"\n[grid]\nn = 1.5\n'
    with pytest.raises(ConfigError) as exc:
        parse_config_text(text)
    assert len(exc.value.errors) == 4


def test_choices_and_missing_command():
    with pytest.raises(ConfigError):
        parse_config_text('command = "bake"\n')
    with pytest.raises(ConfigError):
        parse_config_text('[mask]\nm = 4\n')
    with pytest.raises(ConfigError):
        parse_config_text('command = "tomo"\n[tomo]\nphantom = "cat"\n')


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "absent.toml")


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.toml")), ids=lambda p: p.name)
def test_example_configs_round_trip(path):
    cfg = parse_config(path)
    again = parse_config_text(serialize(cfg))
    assert again.normalized() == cfg.normalized()
    assert serialize(again) == serialize(cfg)
