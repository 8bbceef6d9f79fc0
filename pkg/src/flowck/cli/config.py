import logging
import os
from enum import Enum
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, Field

logger = logging.getLogger(__name__)

COLOR_ENV = "FLOWCK_COLOR"


class OutputMode(str, Enum):
    HUMAN = "human"
    JSON = "json"


class ColorMode(str, Enum):
    NEVER = "never"
    AUTO = "auto"


def color_from_env() -> ColorMode:
    value = os.environ.get(COLOR_ENV, ColorMode.AUTO.value).strip().lower()
    try:
        return ColorMode(value)
    except ValueError:
        logger.warning("ignoring %s=%r; expected `never` or `auto`", COLOR_ENV, value)
        return ColorMode.AUTO


class RunConfig(BaseModel):
    inputs: list[Path] = Field(..., min_length=1, description="`.ifc` files to check")
    output: OutputMode = Field(OutputMode.HUMAN, description="Diagnostic output format")
    max_errors: Optional[int] = Field(None, ge=1, description="Report at most this many diagnostics")
    dump_policy: bool = Field(False, description="Write each function's policy environment to stderr")
    dump_deps: bool = Field(False, description="Write each function's dependency environment to stderr")
    io_alias: Optional[Path] = Field(None, description="File listing the functions `fn io!()` expands to")
    color: ColorMode = Field(default_factory=color_from_env)
    jobs: Optional[int] = Field(None, ge=1, description="Worker threads; defaults to the executor's choice")


def load_io_alias(path) -> frozenset:
    """Read newline-separated function names; blank lines and `#` comments are skipped."""
    with open(path, encoding="utf-8") as fp:
        names = {line.strip() for line in fp}
    names = {name for name in names if name and not name.startswith("#")}
    if not names:
        logger.warning("io alias file %s is empty; `fn io!()` expands to no function", path)
    return frozenset(names)
