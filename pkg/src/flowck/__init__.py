__version__ = "0.1.0"

from .checker import Diagnostic, check_program, dump_diagnostics, load_diagnostics
from .parser import format_program, parse_flow_rule, parse_program
from .pipelines.flow_check import FlowCheckConfig, FlowCheckPipeline

__all__ = [
    "Diagnostic",
    "check_program",
    "dump_diagnostics",
    "load_diagnostics",
    "format_program",
    "parse_flow_rule",
    "parse_program",
    "FlowCheckConfig",
    "FlowCheckPipeline",
]
