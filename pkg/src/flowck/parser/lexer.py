import bisect
import re
from dataclasses import dataclass
from typing import Optional

from ply import lex

from ..core.syntax import SourceSpan

KEYWORDS = frozenset(
    {
        "allow", "bool", "copy", "else", "false", "flow", "fn", "if", "let", "move",
        "shrd", "struct", "sum", "true", "u32", "uniq", "with",
    }
)

RESERVED = {word: word.upper() for word in KEYWORDS}

# token type -> source text, for messages
SYMBOLS = {
    "ARROW_DENY": "->!",
    "ARROW": "->",
    "ASSIGN": ":=",
    "DCOLON": "::",
    "COLON": ":",
    "LBRACE": "{",
    "RBRACE": "}",
    "LPAREN": "(",
    "RPAREN": ")",
    "COMMA": ",",
    "SEMI": ";",
    "DOT": ".",
    "LT": "<",
    "GT": ">",
    "EQ": "=",
    "AMP": "&",
    "STAR": "*",
    "PIPE": "|",
    "BANG": "!",
}


class ParseError(ValueError):
    def __init__(self, message: str, span: Optional[SourceSpan] = None, expected: str = ""):
        if not message:
            raise ValueError("parse errors need a message")
        self.message = message
        self.span = span
        self.expected = expected
        where = f"{span}: " if span else ""
        super().__init__(f"{where}{message}")


class ParseErrors(ValueError):
    """Every syntax error found in one file, in source order."""

    def __init__(self, errors: list[ParseError]):
        self.errors = errors
        super().__init__("\n".join(str(e) for e in errors))


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    span: SourceSpan

    def __str__(self):
        return "end of input" if self.kind == "EOF" else f"`{self.text}`"


class SourceMap:
    def __init__(self, text: str, file: str):
        self.text = text
        self.file = file
        self._line_starts = [0] + [m.end() for m in re.finditer(r"\n", text)]

    def span(self, start: int, end: int) -> SourceSpan:
        line = bisect.bisect_right(self._line_starts, start) - 1
        return SourceSpan(self.file, start, end, line + 1, start - self._line_starts[line] + 1)


# ---- ply token rules ----

tokens = ("INT", "IDENT") + tuple(sorted(RESERVED.values())) + tuple(SYMBOLS)

t_ignore = " \t\r\n\f\v"

# string rules are tried longest regex first
t_ARROW_DENY = r"->!"
t_ARROW = r"->"
t_ASSIGN = r":="
t_DCOLON = r"::"
t_COLON = r":"
t_LBRACE = r"\{"
t_RBRACE = r"\}"
t_LPAREN = r"\("
t_RPAREN = r"\)"
t_COMMA = r","
t_SEMI = r";"
t_DOT = r"\."
t_LT = r"<"
t_GT = r">"
t_EQ = r"="
t_AMP = r"&"
t_STAR = r"\*"
t_PIPE = r"\|"
t_BANG = r"!"


def t_COMMENT(t):
    r"//[^\n]*"


def t_INT(t):
    r"\d+"
    return t


def t_IDENT(t):
    r"[A-Za-z_][A-Za-z0-9_]*"
    t.type = RESERVED.get(t.value, "IDENT")
    return t


def t_error(t):
    span = t.lexer.source.span(t.lexpos, t.lexpos + 1)
    raise ParseError(f"unexpected character {t.value[0]!r}", span)


_LEXER = lex.lex()


def tokenize(text: str, file: str = "<input>") -> list[Token]:
    """Split ``text`` into tokens; the list always ends with an EOF token."""
    source = SourceMap(text, file)
    # the built lexer is shared; each call scans with its own clone
    lexer = _LEXER.clone()
    lexer.source = source
    lexer.input(text)
    out: list[Token] = []
    for tok in lexer:
        end = tok.lexpos + len(tok.value)
        out.append(Token(tok.type, tok.value, source.span(tok.lexpos, end)))
    out.append(Token("EOF", "", source.span(len(text), len(text))))
    return out
