from pathlib import Path

import pytest
from click.testing import CliRunner

from flowck import check_program, parse_program
from flowck.checker import FlowChecker

CORPUS_DIR = Path(__file__).resolve().parent.parent / "corpus"


@pytest.fixture
def corpus_dir() -> Path:
    return CORPUS_DIR


@pytest.fixture
def check():
    """Parse and check a program given as text."""

    def run(text: str, io_alias=None):
        return check_program(parse_program(text, "test.ifc", io_alias))

    return run


@pytest.fixture
def checked():
    """Like ``check`` but returns the checker, so tests can inspect per-function reports."""

    def run(text: str):
        checker = FlowChecker(parse_program(text, "test.ifc"))
        diagnostics = checker.check_program()
        return checker, diagnostics

    return run


@pytest.fixture
def runner() -> CliRunner:
    # keep stderr (progress bars, notes) out of the captured stdout
    try:
        return CliRunner(mix_stderr=False)
    except TypeError:
        return CliRunner()
