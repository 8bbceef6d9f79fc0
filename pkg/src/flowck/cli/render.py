from typing import Callable, Optional

import click

from ..checker import Diagnostic, Severity

_COLORS = {
    Severity.VIOLATION: "red",
    Severity.ERROR: "red",
    Severity.WARNING: "yellow",
    Severity.INTERNAL: "magenta",
}


class SourceCache:
    def __init__(self):
        self._lines: dict[str, list[str]] = {}

    def lines(self, file: str) -> list[str]:
        if file not in self._lines:
            try:
                with open(file, encoding="utf-8") as fp:
                    self._lines[file] = fp.read().splitlines()
            except (OSError, UnicodeDecodeError):
                self._lines[file] = []
        return self._lines[file]


def _excerpt(diag: Diagnostic, lines_of: Callable[[str], list[str]]) -> list[str]:
    span = diag.span
    if span is None:
        return []
    lines = lines_of(span.file)
    if not 1 <= span.line <= len(lines):
        return []
    text = lines[span.line - 1]
    width = max(1, min(span.end - span.start, len(text) - span.column + 1))
    gutter = f"{span.line:>4} | "
    return [gutter + text, " " * (len(gutter) + span.column - 1) + "^" * width]


def render_diagnostic(
    diag: Diagnostic, lines_of: Callable[[str], list[str]], color: bool = False
) -> str:
    """One block per diagnostic: header, source excerpt, the flow and the governing rule."""
    where = f"{diag.span}: " if diag.span else ""
    label = f"{diag.severity.value}[{diag.kind.value}]"
    if color:
        label = click.style(label, fg=_COLORS[diag.severity], bold=True)
    lines = [f"{where}{label}: {diag.message}"]
    lines.extend(_excerpt(diag, lines_of))
    if diag.source and diag.destination:
        lines.append(f"  flow: {diag.source} -> {diag.destination}")
    if diag.rule is not None:
        lines.append(_rule_line("rule", diag.rule))
    if diag.callee_rule is not None:
        lines.append(_rule_line("callee rule", diag.callee_rule))
    if diag.function:
        lines.append(f"  in function `{diag.function}`")
    return "\n".join(lines)


def _rule_line(title: str, witness) -> str:
    where = f" declared at {witness.span}" if witness.span else ""
    origin = f" (contract of `{witness.origin}`)" if witness.origin else ""
    return f"  {title}: `{witness.rule}`{where}{origin}"


def render_summary(count: int, color: bool = False) -> Optional[str]:
    if count == 0:
        return None
    noun = "diagnostic" if count == 1 else "diagnostics"
    text = f"{count} {noun}"
    return click.style(text, bold=True) if color else text
