from .lexer import ParseError, ParseErrors, Token, tokenize
from .parser import Parser, parse_flow_rule, parse_flow_rules, parse_program
from .printer import format_expr, format_function, format_program, format_type

__all__ = [
    "ParseError",
    "ParseErrors",
    "Token",
    "tokenize",
    "Parser",
    "parse_flow_rule",
    "parse_flow_rules",
    "parse_program",
    "format_expr",
    "format_function",
    "format_program",
    "format_type",
]
