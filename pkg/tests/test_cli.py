import json
import subprocess
import sys
from pathlib import Path

import pytest

from oamlab import recipes
from oamlab.cli import main

SMALL_MASK = """
command = "mask"
[grid]
n = 256
extent = "7.4 um"
[mask]
m = 4
n = 3
k0 = "15 per_um"
R = "1.85 um"
"""


def write(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def parse_output(text):
    return dict(line.split("=", 1) for line in text.strip().splitlines())


def test_mask_command_prints_metrics(tmp_path, capsys):
    cfg = write(tmp_path, SMALL_MASK)
    assert main(["mask", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 0
    out = parse_output(capsys.readouterr().out)
    assert out["grid_n"] == "256"
    assert out["manifest"].endswith("manifest.json")
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    names = {a["path"] for a in manifest["artifacts"]}
    assert {"mask.oamf", "mask.pgm"} <= names


def test_config_error_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, 'command = "mask"\n[mask]\nk0 = 15\nbogus = 1\n')
    assert main(["mask", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert err.count("config error") == 2


def test_missing_config_and_mismatched_command(tmp_path):
    assert main(["mask", "--out", str(tmp_path)]) == 2
    cfg = write(tmp_path, SMALL_MASK)
    assert main(["tomo", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert main(["reproduce", "fig9"]) == 2


def test_invalid_geometry_is_a_config_error(tmp_path):
    cfg = write(tmp_path, SMALL_MASK.replace('extent = "7.4 um"', 'extent = "1 um"'))
    assert main(["mask", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_numeric_failure_exit_code(tmp_path, monkeypatch, capsys):
    def broken(run, cfg):
        raise FloatingPointError("overflow in test pipeline")

    monkeypatch.setitem(recipes.PIPELINES, "mask", broken)
    cfg = write(tmp_path, SMALL_MASK)
    assert main(["mask", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3
    assert "numeric failure" in capsys.readouterr().err


def test_bad_thread_env(tmp_path, monkeypatch):
    monkeypatch.setenv("OAMLAB_THREADS", "many")
    cfg = write(tmp_path, SMALL_MASK)
    assert main(["mask", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_manifest_is_deterministic_across_threads(tmp_path, monkeypatch):
    cfg = write(tmp_path, SMALL_MASK.replace('command = "mask"', 'command = "diffract"'))
    assert main(["diffract", "--config", str(cfg), "--out", str(tmp_path / "a"),
                 "--threads", "1"]) == 0
    monkeypatch.setenv("OAMLAB_THREADS", "3")
    assert main(["diffract", "--config", str(cfg), "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "manifest.json").read_bytes()
    b = (tmp_path / "b" / "manifest.json").read_bytes()
    assert a == b


def test_reproduce_override(tmp_path, capsys):
    text = 'command = "reproduce"\n[reproduce]\nfigure = "figA2"\n[topology]\ncount = 5\n'
    cfg = write(tmp_path, text)
    assert main(["reproduce", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    out = parse_output(capsys.readouterr().out)
    assert out["sweep_points"] == "5"


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "oamlab.cli", "--help"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "reproduce" in res.stdout


@pytest.mark.parametrize("command", ["field", "topology"])
def test_example_configs_run(tmp_path, command):
    cfg = Path(__file__).resolve().parent.parent / "configs" / f"{command}.toml"
    assert main([command, "--config", str(cfg), "--out", str(tmp_path / command)]) == 0
