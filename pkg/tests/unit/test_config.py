"""Tests for settings, program arguments and run configuration."""

import os
from pathlib import Path

import pytest
from pydantic import ValidationError

from qiro.core.config import RunConfig, Settings, parse_program_arg
from qiro.core.constants import DEFAULT_FIXPOINT_CAP, DEFAULT_STEP_LIMIT


@pytest.fixture
def clean_env(mocker):
    """Environment without QIRO_* variables, restored after the test."""
    mocker.patch.dict(os.environ, {})
    for key in [k for k in os.environ if k.startswith("QIRO_")]:
        del os.environ[key]
    return os.environ


def test_settings_defaults(clean_env, tmp_path):
    settings = Settings.from_env(str(tmp_path / "missing.env"))
    assert settings.step_limit == DEFAULT_STEP_LIMIT
    assert settings.fixpoint_cap == DEFAULT_FIXPOINT_CAP
    assert settings.log_level == "WARNING"


def test_settings_from_environment(clean_env, tmp_path):
    clean_env["QIRO_STEP_LIMIT"] = "1000"
    clean_env["QIRO_LOG_LEVEL"] = "debug"
    settings = Settings.from_env(str(tmp_path / "missing.env"))
    assert settings.step_limit == 1000
    assert settings.log_level == "DEBUG"


def test_settings_from_dotenv_file(clean_env, tmp_path):
    env_file = tmp_path / ".env"
    env_file.write_text("QIRO_FIXPOINT_CAP=7\n")
    assert Settings.from_env(str(env_file)).fixpoint_cap == 7


def test_settings_validation():
    with pytest.raises(ValidationError):
        Settings(log_level="chatty")
    with pytest.raises(ValidationError):
        Settings(step_limit=0)


@pytest.mark.parametrize("text, expected", [
    ("n=5", ("n", 5)),
    ("N=0x10", ("N", 16)),
    ("theta=0.5", ("theta", 0.5)),
    (" a=-3 ", ("a", -3)),
])
def test_parse_program_arg(text, expected):
    assert parse_program_arg(text) == expected


@pytest.mark.parametrize("text", ["n", "=5", "n=", "n=five", "1n=2"])
def test_parse_program_arg_rejects(text):
    with pytest.raises(ValueError):
        parse_program_arg(text)


def test_run_config_from_cli():
    config = RunConfig.from_cli("prog.qiro", ["n=4", "a=2"], pipeline=["canonicalize", "affine-unroll=2"])
    assert config.input_path == Path("prog.qiro")
    assert config.args == {"n": 4, "a": 2}
    assert config.metric == "ops"


@pytest.mark.parametrize("field, value", [
    ("output_mode", "yaml"),
    ("metric", "gates"),
    ("disabled", ["everything"]),
    ("pipeline", ["bogus"]),
])
def test_run_config_validators(field, value):
    with pytest.raises(ValidationError):
        RunConfig(input_path=Path("prog.qiro"), **{field: value})
