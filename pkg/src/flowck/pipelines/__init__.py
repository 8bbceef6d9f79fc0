from .flow_check import (
    CheckReport,
    FileReport,
    FlowCheckConfig,
    FlowCheckPipeline,
    parse_error_diagnostics,
)

__all__ = [
    "CheckReport",
    "FileReport",
    "FlowCheckConfig",
    "FlowCheckPipeline",
    "parse_error_diagnostics",
]
