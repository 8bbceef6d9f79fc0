from .diagnostics import (
    SCHEMA_VERSION,
    VIOLATION_KINDS,
    CheckError,
    Diagnostic,
    DiagnosticKind,
    InternalError,
    RuleWitness,
    Severity,
    Span,
    dump_diagnostics,
    load_diagnostics,
    sort_diagnostics,
)
from .stack import Loan, StackEnv, place_expr_type, resolve_loans
from .checker import CheckState, FlowChecker, FunctionReport, Typed, check_program

__all__ = [
    "SCHEMA_VERSION",
    "VIOLATION_KINDS",
    "CheckError",
    "Diagnostic",
    "DiagnosticKind",
    "InternalError",
    "RuleWitness",
    "Severity",
    "Span",
    "dump_diagnostics",
    "load_diagnostics",
    "sort_diagnostics",
    "Loan",
    "StackEnv",
    "place_expr_type",
    "resolve_loans",
    "CheckState",
    "FlowChecker",
    "FunctionReport",
    "Typed",
    "check_program",
]
