from enum import Enum
from typing import Iterable, Optional

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, model_validator

from ..core.syntax import SourceSpan
from ..policy.rules import FlowRule

SCHEMA_VERSION = 1


class Severity(str, Enum):
    VIOLATION = "violation"
    ERROR = "error"
    WARNING = "warning"
    INTERNAL = "internal"


class DiagnosticKind(str, Enum):
    FLOW_VIOLATION = "flow-violation"
    FUNCTION_FLOW = "function-flow"
    CONTRACT_VIOLATION = "contract-violation"
    CAPTURE_VIOLATION = "capture-violation"
    CONTRADICTION = "contradiction"
    TYPE_ERROR = "type-error"
    MOVE_ERROR = "move-error"
    LOAN_ERROR = "loan-error"
    UNKNOWN_NAME = "unknown-name"
    EMPTY_ALIAS = "empty-alias"
    PARSE_ERROR = "parse-error"
    INTERNAL_ERROR = "internal-error"


VIOLATION_KINDS = frozenset(
    {
        DiagnosticKind.FLOW_VIOLATION,
        DiagnosticKind.FUNCTION_FLOW,
        DiagnosticKind.CONTRACT_VIOLATION,
        DiagnosticKind.CAPTURE_VIOLATION,
    }
)


class CheckError(ValueError):
    """A type, move, loan or name error; aborts checking of the current function."""

    def __init__(self, kind: DiagnosticKind, message: str, span: Optional[SourceSpan] = None):
        self.kind = kind
        self.message = message
        self.span = span
        where = f"{span}: " if span else ""
        super().__init__(f"{where}{message}")


class InternalError(RuntimeError):
    """A broken checker invariant, never a property of the checked program."""


class Span(BaseModel):
    model_config = ConfigDict(frozen=True)

    file: str
    start: int = Field(..., ge=0)
    end: int = Field(..., ge=0)
    line: int = Field(..., ge=1)
    column: int = Field(..., ge=1)

    @classmethod
    def of(cls, span: Optional[SourceSpan]) -> Optional["Span"]:
        if span is None:
            return None
        return cls(file=span.file, start=span.start, end=span.end, line=span.line, column=span.column)

    def __str__(self):
        return f"{self.file}:{self.line}:{self.column}"


class RuleWitness(BaseModel):
    """The flow rule that decided a check, as written."""

    model_config = ConfigDict(frozen=True)

    rule: str
    permit: bool
    span: Optional[Span] = None
    origin: Optional[str] = Field(None, description="Callee whose contract declared the rule")

    @classmethod
    def of(cls, rule: Optional[FlowRule]) -> Optional["RuleWitness"]:
        if rule is None:
            return None
        return cls(rule=str(rule), permit=rule.permit, span=Span.of(rule.span), origin=rule.origin)


class Diagnostic(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    schema_version: int = Field(SCHEMA_VERSION, alias="schema")
    severity: Severity
    kind: DiagnosticKind
    message: str = Field(..., min_length=1)
    span: Optional[Span] = None
    function: Optional[str] = None
    source: Optional[str] = Field(None, description="Leaf place the flow starts from")
    destination: Optional[str] = Field(None, description="Leaf place or `fn` the flow reaches")
    rule: Optional[RuleWitness] = Field(None, description="Governing rule")
    callee_rule: Optional[RuleWitness] = Field(None, description="Callee contract rule, for call checks")

    @model_validator(mode="after")
    def _violations_carry_rule(self) -> "Diagnostic":
        if self.severity == Severity.VIOLATION and self.rule is None:
            raise ValueError("a violation must name its governing rule")
        return self

    def sort_key(self) -> tuple:
        if self.span is None:
            return ("", -1, self.kind.value, self.message)
        return (self.span.file, self.span.start, self.kind.value, self.message)


_DIAGNOSTIC_LIST = TypeAdapter(list[Diagnostic])


def sort_diagnostics(diagnostics: Iterable[Diagnostic]) -> list[Diagnostic]:
    return sorted(diagnostics, key=Diagnostic.sort_key)


def dump_diagnostics(diagnostics: Iterable[Diagnostic], indent: Optional[int] = 2) -> str:
    return _DIAGNOSTIC_LIST.dump_json(list(diagnostics), by_alias=True, indent=indent).decode("utf-8")


def load_diagnostics(text: str) -> list[Diagnostic]:
    return _DIAGNOSTIC_LIST.validate_json(text)
