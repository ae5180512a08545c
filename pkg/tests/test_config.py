import json
from pathlib import Path

import pytest

from app.commands.arguments import build_parser
from app.config.config_manager import DEFAULT_SETTINGS, ConfigManager
from app.config.run_config import RunConfig, build_run_config
from app.errors import ConfigurationError
from app.physics.model import RationalTime
from app.util import parallel


@pytest.fixture
def config_manager(tmp_path):
    manager = ConfigManager(str(tmp_path / "settings.json"))
    manager.initialize()
    return manager


def run_config_for(config_manager, *argv):
    return build_run_config(build_parser().parse_args(list(argv)), config_manager)


def test_defaults_without_settings_file(config_manager):
    assert config_manager.settings == DEFAULT_SETTINGS
    assert config_manager.get_setting("missing", 7) == 7


def test_settings_round_trip(tmp_path, config_manager):
    config_manager.set_setting("grid.points", 1024)
    assert config_manager.save_configuration()

    reloaded = ConfigManager(str(tmp_path / "settings.json"))
    reloaded.initialize()
    assert reloaded.get_setting("grid.points") == 1024
    assert reloaded.get_setting("series.epsilon") == DEFAULT_SETTINGS["series.epsilon"]


def test_corrupt_settings_fall_back_to_defaults(tmp_path):
    path = tmp_path / "settings.json"
    path.write_text("{not json", encoding="utf-8")
    manager = ConfigManager(str(path))
    manager.initialize()
    assert manager.settings == DEFAULT_SETTINGS


def test_settings_file_overrides_defaults(tmp_path):
    path = tmp_path / "settings.json"
    path.write_text(json.dumps({"model.lambda": "5/2", "output.format": "json"}),
                    encoding="utf-8")
    manager = ConfigManager(str(path))
    manager.initialize()
    run_config = run_config_for(manager, "snapshot", "--time", "1/4")
    assert run_config.lam == "5/2"
    assert run_config.output_format == "json"


def test_snapshot_flags(config_manager):
    run_config = run_config_for(config_manager, "snapshot", "--lambda", "3/2", "--time", "1/4",
                                "--time", "9/8", "--time-real", "0.3", "--grid", "1024",
                                "--format", "svg", "--detect", "plateaux,cusps", "--current",
                                "--out", "profile.svg", "--save-config")
    assert run_config.times == (RationalTime(1, 4), RationalTime(1, 8), 0.3)
    assert run_config.model().fraction.denominator == 2
    assert run_config.grid_points == 1024
    assert run_config.output_format == "svg"
    assert run_config.detectors == frozenset({"plateaux", "cusps"})
    assert run_config.include_current
    assert run_config.output_path == Path("profile.svg")
    assert run_config.epsilon == DEFAULT_SETTINGS["series.epsilon"]
    assert run_config.save_config
    assert not run_config_for(config_manager, "snapshot", "--time", "1/4").save_config


def test_timetrace_flags(config_manager):
    run_config = run_config_for(config_manager, "timetrace", "--lambda", "2.5", "--xi", "0.5,1.2",
                                "--samples", "50", "--mirror-xi", "1.0", "--expectations")
    assert run_config.xi_points == (0.5, 1.2)
    assert run_config.samples == 50
    assert run_config.mirror_xi == 1.0
    assert run_config.expectations


def test_scan_and_verify_lists(config_manager):
    scan = run_config_for(config_manager, "scan", "--divisor", "4", "--sweep", "2.5, 5.5")
    assert scan.divisor == 4
    assert scan.sweep == (2.5, 5.5)
    verify = run_config_for(config_manager, "verify")
    assert verify.verify_lambdas == tuple(DEFAULT_SETTINGS["verify.lambdas"])


@pytest.mark.parametrize("argv", [
    ("snapshot", "--time", "1/4", "--epsilon", "2"),
    ("snapshot", "--time", "1/4", "--epsilon", "0"),
    ("snapshot", "--time", "1/4", "--lambda", "0.5"),
    ("snapshot", "--time", "1/4", "--lambda", "1"),
    ("snapshot", "--time", "1/4", "--grid", "2"),
    ("snapshot", "--time", "1/0"),
    ("snapshot",),
    ("snapshot", "--time", "1/4", "--detect", "ridges"),
    ("timetrace", "--lambda", "1.5", "--xi", "2.0"),
    ("timetrace", "--lambda", "1.5"),
    ("timetrace", "--lambda", "1.5", "--xi", "0.5", "--samples", "1"),
    ("scan", "--sweep", "0.5,2.5"),
    ("scan", "--sweep", "2.5,x"),
])
def test_invalid_configurations(config_manager, argv):
    with pytest.raises(ConfigurationError):
        run_config_for(config_manager, *argv)


def test_run_config_validate_threads():
    with pytest.raises(ConfigurationError):
        RunConfig(command="verify", threads=-1).validate()
    assert RunConfig(command="verify", threads=2).validate().threads == 2


def test_worker_count_respects_environment(monkeypatch):
    monkeypatch.setattr(parallel.os, "cpu_count", lambda: 8)
    monkeypatch.setenv(parallel.THREADS_ENV_VAR, "3")
    assert parallel.worker_count() == 3
    parallel.configure_workers(1)
    assert parallel.worker_count() == 3

    monkeypatch.delenv(parallel.THREADS_ENV_VAR)
    assert parallel.worker_count() == 1
    parallel.configure_workers(None)
    assert parallel.worker_count() == 8


def test_parallel_map_keeps_order(monkeypatch):
    monkeypatch.setenv(parallel.THREADS_ENV_VAR, "4")
    parallel.configure_workers(None)
    assert parallel.parallel_map(lambda x: x * x, range(20)) == [x * x for x in range(20)]
