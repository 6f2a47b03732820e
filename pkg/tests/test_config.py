import json

import pytest

from config_manager import DEFAULTS, ConfigManager, densops_home


@pytest.fixture
def manager(tmp_path):
    return ConfigManager(str(tmp_path / "settings"))


def test_defaults_without_file(manager):
    assert manager.load() == DEFAULTS


def test_save_and_load(manager):
    manager.save({"seed": 7, "format": "json-lines"})
    settings = manager.load()
    assert settings["seed"] == 7
    assert settings["format"] == "json-lines"
    assert settings["jobs"] == DEFAULTS["jobs"]


def test_unknown_and_mistyped_settings_are_dropped(manager):
    manager.save({"seed": "seven", "colour": "blue", "jobs": 4})
    with open(manager.config_file) as f:
        stored = json.load(f)
    assert stored == {"jobs": 4}


def test_corrupt_file_falls_back_to_defaults(manager):
    manager._ensure_config_dir()
    with open(manager.config_file, "w") as f:
        f.write("[1, 2")
    assert manager.load() == DEFAULTS


def test_export_and_import(manager, tmp_path):
    manager.save({"zero_samples": 32})
    manager.export_config(str(tmp_path / "exported"))
    other = ConfigManager(str(tmp_path / "other"))
    imported = other.import_config(str(tmp_path / "exported.json"))
    assert imported["zero_samples"] == 32
    assert other.load()["zero_samples"] == 32


def test_import_of_missing_file(manager, tmp_path):
    assert manager.import_config(str(tmp_path / "absent.json")) == {}


def test_home_follows_environment(monkeypatch, tmp_path):
    monkeypatch.setenv("DENSOPS_HOME", str(tmp_path))
    assert densops_home() == str(tmp_path)
    assert ConfigManager().config_file == str(tmp_path / "config.json")
