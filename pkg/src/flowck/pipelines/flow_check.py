import json
import logging
import os
from dataclasses import dataclass
from typing import Any, NamedTuple, Optional

from ..checker import Diagnostic, DiagnosticKind, FlowChecker, FunctionReport, Severity, Span
from ..core.program import Program
from ..parser import ParseErrors, parse_program

logger = logging.getLogger(__name__)


@dataclass
class FlowCheckConfig:
    # functions `fn io!()` expands to; None means every primitive declared `io`
    io_alias: Optional[list[str]] = None
    keep_reports: bool = False

    @classmethod
    def from_file(cls, path: str):
        with open(path, encoding="utf-8") as fp:
            data = json.load(fp)
        return cls(**data)


class CheckReport(NamedTuple):
    program: Program
    diagnostics: list[Diagnostic]
    functions: dict[str, FunctionReport]


class FileReport(NamedTuple):
    path: str
    diagnostics: list[Diagnostic]
    functions: dict[str, FunctionReport]
    # set when the file could not be read
    error: Optional[str] = None

    def dumps(self, policy: bool, deps: bool) -> list[dict[str, Any]]:
        out = []
        for name, report in self.functions.items():
            entry: dict[str, Any] = {"file": self.path, "function": name}
            if policy:
                entry["policy"] = report.psi.to_dict()
            if deps:
                entry["deps"] = report.pi.to_dict()
            out.append(entry)
        return out


def parse_error_diagnostics(err: ParseErrors) -> list[Diagnostic]:
    return [
        Diagnostic(
            severity=Severity.ERROR,
            kind=DiagnosticKind.PARSE_ERROR,
            message=e.message,
            span=Span.of(e.span),
        )
        for e in err.errors
    ]


class FlowCheckPipeline:
    """Parse, check and report on `.ifc` sources."""

    def __init__(self, config: Optional[FlowCheckConfig] = None):
        self.config = config or FlowCheckConfig()

    def preprocess(self, text: str, file: str) -> Program:
        return parse_program(text, file, self.config.io_alias)

    def _forward(self, program: Program) -> CheckReport:
        checker = FlowChecker(program)
        diagnostics = checker.check_program()
        functions = dict(checker.reports) if self.config.keep_reports else {}
        return CheckReport(program, diagnostics, functions)

    def postprocess(self, report: CheckReport) -> list[Diagnostic]:
        return report.diagnostics

    def __call__(self, text: str, file: str = "<input>") -> list[Diagnostic]:
        try:
            program = self.preprocess(text, file)
        except ParseErrors as err:
            return parse_error_diagnostics(err)
        return self.postprocess(self._forward(program))

    def check_file(self, path: str) -> FileReport:
        try:
            with open(path, encoding="utf-8") as fp:
                text = fp.read()
        except (OSError, UnicodeDecodeError) as err:
            logger.error("cannot read %s: %s", path, err)
            return FileReport(path, [], {}, f"cannot read {path}: {err}")
        logger.debug("read %s (%d bytes)", path, len(text))
        try:
            program = self.preprocess(text, path)
        except ParseErrors as err:
            return FileReport(path, parse_error_diagnostics(err), {})
        report = self._forward(program)
        return FileReport(path, self.postprocess(report), report.functions)

    @classmethod
    def from_config_file(cls, path: str):
        if os.path.isfile(path):
            return cls(FlowCheckConfig.from_file(path))
        raise FileNotFoundError(f"Expected to find a flowck config at {path} but not found.")
