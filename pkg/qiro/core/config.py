"""Runtime configuration models."""

import logging
import os
import re
from pathlib import Path
from typing import Dict, List, Optional, Union

from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator

from .constants import (
    DEFAULT_ENTRY,
    DEFAULT_FIXPOINT_CAP,
    DEFAULT_STEP_LIMIT,
    LOG_LEVELS,
    QUANTUM_GATE_OPT_PARTS,
)

logger = logging.getLogger(__name__)

ARG_PATTERN = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)=(.+)$")


class Settings(BaseModel):
    """Process-wide settings read from the environment (and `.env`)."""

    step_limit: int = Field(default=DEFAULT_STEP_LIMIT, ge=1)
    fixpoint_cap: int = Field(default=DEFAULT_FIXPOINT_CAP, ge=1)
    log_level: str = "WARNING"

    @field_validator("log_level")
    @classmethod
    def _check_level(cls, value: str) -> str:
        value = value.upper()
        if value not in LOG_LEVELS:
            raise ValueError(f"unknown log level {value!r}")
        return value

    @classmethod
    def from_env(cls, env_file: Optional[str] = None) -> "Settings":
        """Build settings from QIRO_* environment variables.

        Args:
            env_file: Optional dotenv file; the default lookup is used when None

        Returns:
            Settings instance
        """
        load_dotenv(env_file)
        values: Dict[str, Union[int, str]] = {}
        if os.getenv("QIRO_STEP_LIMIT"):
            values["step_limit"] = int(os.environ["QIRO_STEP_LIMIT"])
        if os.getenv("QIRO_FIXPOINT_CAP"):
            values["fixpoint_cap"] = int(os.environ["QIRO_FIXPOINT_CAP"])
        if os.getenv("QIRO_LOG_LEVEL"):
            values["log_level"] = os.environ["QIRO_LOG_LEVEL"]
        return cls(**values)


def parse_program_arg(text: str) -> tuple:
    """Split a `name=value` program argument into a typed pair."""
    match = ARG_PATTERN.match(text.strip())
    if not match:
        raise ValueError(f"program argument must look like name=value, got {text!r}")
    name, raw = match.groups()
    try:
        value: Union[int, float] = int(raw, 0)
    except ValueError:
        try:
            value = float(raw)
        except ValueError:
            raise ValueError(f"argument {name} is not numeric: {raw!r}") from None
    return name, value


class RunConfig(BaseModel):
    """Everything one `qiro run` invocation needs."""

    input_path: Path
    entry: str = DEFAULT_ENTRY
    pipeline: List[str] = Field(default_factory=list)
    args: Dict[str, Union[int, float]] = Field(default_factory=dict)
    cost_model_path: Optional[Path] = None
    metric: str = "ops"
    output_mode: str = "text"
    time_stages: bool = False
    time_compile_only: bool = False
    disabled: List[str] = Field(default_factory=list)
    verify_only: bool = False
    emit_path: Optional[Path] = None
    print_ir: bool = False

    @field_validator("output_mode")
    @classmethod
    def _check_output(cls, value: str) -> str:
        if value not in ("text", "json"):
            raise ValueError(f"output mode must be text or json, got {value!r}")
        return value

    @field_validator("metric")
    @classmethod
    def _check_metric(cls, value: str) -> str:
        if value not in ("ops", "decomposed"):
            raise ValueError(f"metric must be ops or decomposed, got {value!r}")
        return value

    @field_validator("disabled")
    @classmethod
    def _check_disabled(cls, value: List[str]) -> List[str]:
        for name in value:
            if name not in QUANTUM_GATE_OPT_PARTS:
                raise ValueError(f"cannot disable {name!r}; choose from {', '.join(QUANTUM_GATE_OPT_PARTS)}")
        return value

    @field_validator("pipeline")
    @classmethod
    def _check_pipeline(cls, value: List[str]) -> List[str]:
        # Imported lazily: the pass registry pulls in every service module.
        from ..services.pipeline import PASS_REGISTRY

        for item in value:
            name = item.split("=", 1)[0]
            if name not in PASS_REGISTRY:
                raise ValueError(f"unknown pass --{name}")
        return value

    @classmethod
    def from_cli(cls, input_path: str, raw_args: List[str], **kwargs) -> "RunConfig":
        """Build a config from CLI strings, parsing `name=value` args."""
        args = dict(parse_program_arg(a) for a in raw_args)
        return cls(input_path=Path(input_path), args=args, **kwargs)
