import copy
import logging
from typing import Iterable, Optional

from ply import lex, yacc

from ..core.program import (
    Allow,
    Assign,
    Block,
    Borrow,
    Call,
    Closure,
    Const,
    Copy,
    Expr,
    FlowDecl,
    FuncDef,
    If,
    Inject,
    Let,
    Move,
    Param,
    ParseWarning,
    Program,
    Seq,
    StructDef,
    StructLit,
    TupleExpr,
)
from ..core.syntax import DEREF, FnDest, PlaceExpr, SourceSpan, Wildcard
from ..core.types import (
    BOOL,
    U32,
    UNIT,
    ClosureType,
    Omega,
    RefType,
    StructType,
    SumType,
    TupleType,
    Type,
)
from ..policy.rules import FlowRule
from .lexer import SYMBOLS, ParseError, ParseErrors, Token, tokenize
from .lexer import tokens as _lexer_tokens

logger = logging.getLogger(__name__)

# destination marker for `fn io!()` before expansion
_IO_ALIAS = object()

# STRUCT_NAME replaces IDENT for declared struct names, RULE_INPUT selects
# the single-rule entry and EOF closes every token feed
tokens = _lexer_tokens + ("STRUCT_NAME", "EOF", "RULE_INPUT")

# `(x)` in value position is a parenthesised place, not a parenthesised read
precedence = (
    ("left", "READ"),
    ("left", "RPAREN"),
)


# ---- grammar; productions reach the per-file state through p.lexer ----


def p_unit_program(p):
    """unit : items EOF"""
    p[0] = p[1]


def p_unit_rule(p):
    """unit : RULE_INPUT rule EOF"""
    p[0] = p[2]


def p_empty(p):
    """empty :"""


def p_items(p):
    """items : items item
             | empty"""
    if len(p) == 2:
        p[0] = []
        return
    if p[2] is not None:
        p[1].append(p[2])
    p[0] = p[1]


def p_item(p):
    """item : struct_item
            | fn_item"""
    p[0] = p[1]


def p_item_error(p):
    """item : error SEMI
            | error RBRACE"""


# ---- declarations ----


def p_struct_item(p):
    """struct_item : STRUCT STRUCT_NAME LBRACE field_decls RBRACE"""
    p.lexer.declare_struct(p[2], p[4], p.lexer.span(p))


def p_field_decls(p):
    """field_decls : empty
                   | field_decl_list
                   | field_decl_list COMMA"""
    p[0] = p[1] or []


def p_field_decl_list(p):
    """field_decl_list : field_decl
                       | field_decl_list COMMA field_decl"""
    if len(p) == 2:
        p[0] = [p[1]]
    else:
        p[1].append(p[3])
        p[0] = p[1]


def p_field_decl(p):
    """field_decl : member COLON type"""
    p[0] = (p[1], p[3])


def p_member(p):
    """member : IDENT
              | IDENT LPAREN RPAREN"""
    if len(p) == 2:
        p[0] = p[1]
    else:
        p[0] = Token(p[1].kind, p[1].text + "()", p.lexer.span(p))


def p_fn_item_primitive(p):
    """fn_item : FN IDENT LPAREN params RPAREN SEMI
               | FN IDENT LPAREN params RPAREN IDENT SEMI"""
    io_effect = len(p) == 8
    if io_effect and p[6].text != "io":
        p.lexer.report(f"expected `;`, `io` or a body, found {p[6]}", p[6].span, "`;`")
    p[0] = FuncDef(p[2].text, p[4], (), None, io_effect, p.lexer.span(p))


def p_fn_item(p):
    """fn_item : FN IDENT LPAREN params RPAREN block"""
    block = p[6]
    body = block.body
    contract: list[FlowRule] = []
    # leading flow declarations are the contract
    while isinstance(body, Seq) and isinstance(body.first, FlowDecl):
        contract.append(body.first.rule)
        body = body.rest
    p[0] = FuncDef(p[2].text, p[4], tuple(contract), Block(body, block.span), False, p.lexer.span(p))


def p_params(p):
    """params : empty
              | param_list
              | param_list COMMA"""
    p[0] = tuple(p[1] or ())


def p_param_list(p):
    """param_list : param
                  | param_list COMMA param"""
    if len(p) == 2:
        p[0] = [p[1]]
        return
    param = p[3]
    if any(other.name == param.name for other in p[1]):
        p.lexer.report(f"parameter `{param.name}` is declared twice", param.span)
    p[1].append(param)
    p[0] = p[1]


def p_param(p):
    """param : IDENT COLON type"""
    p[0] = Param(p[1].text, p[3], p.lexer.span(p))


# ---- types ----


def p_type_base(p):
    """type : U32
            | BOOL"""
    p[0] = U32 if p[1].kind == "U32" else BOOL


def p_type_paren(p):
    """type : LPAREN type_seq RPAREN"""
    elements, trailing = p[2]
    if not elements:
        p[0] = UNIT
    elif len(elements) == 1 and not trailing:
        p[0] = elements[0]
    else:
        p[0] = TupleType(tuple(elements))


def p_type_seq(p):
    """type_seq : empty
                | type_list
                | type_list COMMA"""
    p[0] = (p[1] or [], len(p) == 3)


def p_type_list(p):
    """type_list : type
                 | type_list COMMA type"""
    if len(p) == 2:
        p[0] = [p[1]]
    else:
        p[1].append(p[3])
        p[0] = p[1]


def p_type_ref(p):
    """type : AMP omega type"""
    p[0] = RefType(p[2], p[3])


def p_type_sum(p):
    """type : SUM LT type COMMA type GT"""
    p[0] = SumType(p[3], p[5])


def p_type_closure(p):
    """type : FN LPAREN type_seq RPAREN"""
    p[0] = ClosureType(tuple(p[3][0]))


def p_type_struct(p):
    """type : STRUCT_NAME"""
    p[0] = p.lexer.struct_type(p[1].text)


def p_type_unknown(p):
    """type : IDENT"""
    p.lexer.report(f"unknown type `{p[1].text}`", p[1].span, "a type")
    p[0] = StructType(p[1].text)


def p_omega(p):
    """omega : SHRD
             | UNIQ"""
    p[0] = Omega.SHRD if p[1].kind == "SHRD" else Omega.UNIQ


# ---- flow rules ----


def p_rules(p):
    """rules : rule
             | rules COMMA rule"""
    p[0] = p[1] if len(p) == 2 else p[1] + p[3]


def p_rule(p):
    """rule : access ARROW access
            | access ARROW_DENY access"""
    p[0] = p.lexer.make_rules(p[1], p[2].kind == "ARROW", p[3], p.lexer.span(p))


def p_access_place(p):
    """access : place"""
    p[0] = p[1]


def p_access_wildcard(p):
    """access : STAR"""
    p[0] = Wildcard(p[1].span)


def p_access_fn(p):
    """access : FN IDENT"""
    p[0] = FnDest(p[2].text, p.lexer.span(p))


def p_access_alias(p):
    """access : FN IDENT BANG LPAREN RPAREN"""
    if p[2].text == "io":
        p[0] = _IO_ALIAS
    else:
        p.lexer.report(f"unknown rule alias `{p[2].text}!()`", p[2].span, "`io!()`")


# ---- places ----


def p_place(p):
    """place : path"""
    p[0] = p[1]


def p_place_deref(p):
    """place : STAR place"""
    p[0] = PlaceExpr(p[2].root, p[2].ops + (DEREF,), p.lexer.span(p))


def p_path_root(p):
    """path : IDENT"""
    p[0] = PlaceExpr(p[1].text, (), p[1].span)


def p_path_paren(p):
    """path : LPAREN place RPAREN"""
    p[0] = PlaceExpr(p[2].root, p[2].ops, p.lexer.span(p))


def p_path_project(p):
    """path : path DOT selector"""
    p[0] = PlaceExpr(p[1].root, p[1].ops + (p[3],), p.lexer.span(p))


def p_selector(p):
    """selector : INT
                | IDENT
                | IDENT LPAREN RPAREN"""
    if p[1].kind == "INT":
        p[0] = int(p[1].text)
    else:
        p[0] = p[1].text if len(p) == 2 else p[1].text + "()"


# ---- blocks and statements ----


def p_block(p):
    """block : LBRACE seq RBRACE"""
    p[0] = Block(p[2], p.lexer.span(p))


def p_seq(p):
    """seq : stmts"""
    p[0] = p[1]


def p_seq_empty(p):
    """seq : empty"""
    p[0] = Const(None, implicit=True, span=p.lexer.last_span)


def p_stmts_tail(p):
    """stmts : expr"""
    p[0] = p[1]


def p_stmts_expr(p):
    """stmts : expr SEMI seq"""
    p[0] = Seq(p[1], p[3], p[1].span)


def p_stmts_brace(p):
    """stmts : brace_expr stmts"""
    # `if` and blocks need no `;` unless they end the sequence
    p[0] = Seq(p[1], p[2], p[1].span)


def p_stmts_let(p):
    """stmts : LET IDENT annotation EQ expr with_rules SEMI seq"""
    init = p.lexer.value(p[5])
    p[0] = Let(p[2].text, p[3], tuple(p[6]), init, p[8], p.lexer.span(p, 1, 7))


def p_annotation(p):
    """annotation : empty
                  | COLON type"""
    p[0] = p[2] if len(p) == 3 else None


def p_with_rules(p):
    """with_rules : empty
                  | WITH FLOW rules"""
    p[0] = p[3] if len(p) == 4 else []


def p_stmts_flow(p):
    """stmts : FLOW rules SEMI seq"""
    rest = p[4]
    for rule in reversed(p[2]):
        rest = Seq(FlowDecl(rule, rule.span), rest, rule.span)
    p[0] = rest


def p_stmts_assign(p):
    """stmts : place ASSIGN expr SEMI seq"""
    assign = Assign(p[1], p.lexer.value(p[3]), p.lexer.span(p, 1, 3))
    p[0] = Seq(assign, p[5], assign.span)


def p_stmts_error(p):
    """stmts : error SEMI seq
             | error"""
    p[0] = p[3] if len(p) == 4 else Const(None, implicit=True, span=p.lexer.last_span)


def p_if_expr(p):
    """if_expr : IF expr block
               | IF expr block ELSE block
               | IF expr block ELSE if_expr"""
    then = p[3]
    if len(p) == 4:
        orelse = Block(Const(None, implicit=True, span=then.span), then.span)
    elif isinstance(p[5], If):
        orelse = Block(p[5], p[5].span)
    else:
        orelse = p[5]
    p[0] = If(p.lexer.value(p[2]), then, orelse, p.lexer.span(p))


def p_brace_expr(p):
    """brace_expr : block
                  | if_expr"""
    p[0] = p[1]


# ---- expressions ----


def p_expr_brace(p):
    """expr : brace_expr"""
    p[0] = p[1]


def p_expr_read(p):
    """expr : place %prec READ"""
    place = p[1]
    if place.has_deref:
        p[0] = Copy(place, place.span)
    else:
        p[0] = Move(place.as_place(), place.span)


def p_expr_allow(p):
    """expr : ALLOW expr"""
    p[0] = Allow(p.lexer.value(p[2]), p.lexer.span(p))


def p_expr_copy(p):
    """expr : COPY place"""
    p[0] = Copy(p[2], p.lexer.span(p))


def p_expr_move(p):
    """expr : MOVE place"""
    place = p[2]
    if place.has_deref:
        p.lexer.report("cannot move out of a dereference; use `copy`", place.span)
        p[0] = Copy(place, p.lexer.span(p))
    else:
        p[0] = Move(place.as_place(), p.lexer.span(p))


def p_expr_borrow(p):
    """expr : AMP omega place"""
    p[0] = Borrow(p[2], p[3], p.lexer.span(p))


def p_expr_closure(p):
    """expr : PIPE params PIPE block"""
    p[0] = Closure(p[2], p[4], p.lexer.span(p))


def p_expr_bool(p):
    """expr : TRUE
            | FALSE"""
    p[0] = Const(p[1].kind == "TRUE", span=p[1].span)


def p_expr_int(p):
    """expr : INT"""
    p[0] = Const(int(p[1].text), span=p[1].span)


def p_expr_unit(p):
    """expr : LPAREN RPAREN"""
    p[0] = Const(None, span=p.lexer.span(p))


def p_expr_paren(p):
    """expr : LPAREN expr RPAREN"""
    p[0] = p.lexer.value(p[2])


def p_expr_tuple(p):
    """expr : LPAREN expr COMMA RPAREN
            | LPAREN expr COMMA expr_list RPAREN
            | LPAREN expr COMMA expr_list COMMA RPAREN"""
    elements = [p[2]] + (p[4] if len(p) > 5 else [])
    p[0] = TupleExpr(tuple(p.lexer.value(e) for e in elements), p.lexer.span(p))


def p_expr_list(p):
    """expr_list : expr
                 | expr_list COMMA expr"""
    if len(p) == 2:
        p[0] = [p[1]]
    else:
        p[1].append(p[3])
        p[0] = p[1]


def p_expr_inject(p):
    """expr : SUM LT type COMMA type GT DCOLON IDENT LPAREN expr RPAREN"""
    side = p[8]
    if side.text not in ("left", "right"):
        p.lexer.report(f"sums have `left` and `right` variants, not `{side.text}`", side.span)
    p[0] = Inject(SumType(p[3], p[5]), side.text, p.lexer.value(p[10]), p.lexer.span(p))


def p_expr_struct(p):
    """expr : STRUCT_NAME LBRACE field_inits RBRACE"""
    p[0] = StructLit(p[1].text, tuple(p[3]), p.lexer.span(p))


def p_field_inits(p):
    """field_inits : empty
                   | field_init_list
                   | field_init_list COMMA"""
    p[0] = p[1] or []


def p_field_init_list(p):
    """field_init_list : field_init
                       | field_init_list COMMA field_init"""
    if len(p) == 2:
        p[0] = [p[1]]
    else:
        p[1].append(p[3])
        p[0] = p[1]


def p_field_init(p):
    """field_init : member COLON expr"""
    p[0] = (p[1].text, p.lexer.value(p[3]))


def p_expr_call(p):
    """expr : IDENT LPAREN args RPAREN"""
    args = tuple(p.lexer.value(a) for a in p[3])
    p[0] = Call(p[1].text, args, p.lexer.span(p))


def p_args(p):
    """args : empty
            | expr_list
            | expr_list COMMA"""
    p[0] = p[1] or []


def p_error(tok):
    # with the explicit EOF token every error has a lookahead
    if tok is not None:
        tok.lexer.syntax_error(tok.value)


_PARSER = yacc.yacc(start="unit", debug=False, write_tables=False)

_TERMINALS = tuple(t for t in tokens if t != "RULE_INPUT")

_LABELS = {
    "IDENT": "an identifier",
    "INT": "a number",
    "STRUCT_NAME": "a struct name",
    "EOF": "end of input",
}

_GROUPS = (
    (
        "an expression",
        frozenset(
            {
                "ALLOW", "COPY", "MOVE", "AMP", "IF", "PIPE", "TRUE", "FALSE", "INT",
                "SUM", "LPAREN", "LBRACE", "STAR", "IDENT", "STRUCT_NAME",
            }
        ),
    ),
    ("a type", frozenset({"U32", "BOOL", "LPAREN", "AMP", "SUM", "FN", "STRUCT_NAME", "IDENT"})),
)


def _label(kind: str) -> str:
    if kind in _LABELS:
        return _LABELS[kind]
    if kind in SYMBOLS:
        return f"`{SYMBOLS[kind]}`"
    return f"`{kind.lower()}`"


def _describe(kinds: list[str]) -> list[str]:
    words: list[str] = []
    for label, group in _GROUPS:
        if group <= set(kinds):
            words.append(label)
            kinds = [k for k in kinds if k not in group]
    return words + [_label(k) for k in kinds]


def _join(words: list[str]) -> str:
    if len(words) < 2:
        return "".join(words)
    return ", ".join(words[:-1]) + " or " + words[-1]


class Parser:
    """Per-file parse state around the shared LALR tables.

    A file is parsed in two runs: struct items first, so that type names can
    be expanded, then everything else. `fn io!()` expands to the io
    primitives found by a scan of the token list before either run.
    """

    def __init__(self, text: str, file: str = "<input>", io_alias: Optional[Iterable[str]] = None):
        self.text = text
        self.file = file
        self.tokens: list[Token] = tokenize(text, file)
        self.errors: list[ParseError] = []
        self.warnings: list[ParseWarning] = []
        self.io_alias = tuple(io_alias) if io_alias is not None else None
        self.io_functions: tuple[str, ...] = ()
        self.struct_names: frozenset[str] = frozenset()
        self.last_span: SourceSpan = self.tokens[-1].span
        # ply reads these when it reduces an empty production
        self.lineno = 1
        self.lexpos = 0
        self._by_start = {tok.span.start: tok for tok in self.tokens}
        self._raw_structs: dict[str, tuple[tuple[str, Type], ...]] = {}
        self._struct_spans: dict[str, SourceSpan] = {}
        self._expanded: dict[str, StructType] = {}
        self._resolving = True
        self._feed: Iterable[Token] = iter(())
        self._parser: Optional[yacc.LRParser] = None

    # ---- token feed ----

    def token(self) -> Optional[lex.LexToken]:
        tok = next(self._feed, None)
        if tok is None:
            return None
        out = lex.LexToken()
        out.type = tok.kind
        out.value = tok
        out.lineno = tok.span.line
        out.lexpos = tok.span.start
        out.lexer = self
        self.lineno, self.lexpos = out.lineno, out.lexpos
        self.last_span = tok.span
        return out

    def _run(self, feed: list[Token]):
        self._feed = iter(feed)
        # the tables are shared; every run gets its own parser stacks
        self._parser = copy.copy(_PARSER)
        result = self._parser.parse(lexer=self, tracking=True)
        if result is None and not self.errors:
            self.report("unexpected end of input", self.tokens[-1].span)
        return result

    def span(self, p, first: int = 1, last: Optional[int] = None) -> SourceSpan:
        """Source span of production symbols ``first`` through ``last``."""
        last = len(p) - 1 if last is None else last
        start = self._by_start[p.lexpos(first)].span
        end = self._by_start[p.lexspan(last)[1]].span
        return start.merge(end)

    # ---- diagnostics ----

    def report(self, message: str, span: Optional[SourceSpan], expected: str = ""):
        self.errors.append(ParseError(message, span, expected))

    def syntax_error(self, tok: Token):
        words = _describe(self._expected())
        expected = _join(words)
        if words and len(words) <= 5:
            self.report(f"expected {expected}, found {tok}", tok.span, expected)
        else:
            self.report(f"unexpected {tok}", tok.span, expected)

    def _expected(self) -> list[str]:
        """Terminals the parser could shift next, found by replaying reductions."""
        parser = self._parser
        valid: list[str] = []
        for term in _TERMINALS:
            stack = list(parser.statestack)
            for _ in range(64):
                action = parser.action[stack[-1]].get(term)
                if not action:
                    break
                if action > 0:
                    valid.append(term)
                    break
                prod = parser.productions[-action]
                if prod.len:
                    del stack[-prod.len:]
                target = parser.goto[stack[-1]].get(prod.name)
                if target is None:
                    break
                stack.append(target)
        return valid

    def value(self, expr: Expr) -> Expr:
        """Check ``expr`` for use where a value is needed."""
        if isinstance(expr, Call):
            self.report(
                f"`{expr.func}(...)` has no value; call functions as statements and "
                "return data through `&uniq` arguments",
                expr.span,
            )
        return expr

    # ---- program ----

    def parse_program(self) -> Program:
        struct_feed, item_feed = self._scan_declarations()
        self._resolving = False
        self._run(struct_feed)
        self._resolving = True
        items = self._run(item_feed) or []
        functions = [item for item in items if isinstance(item, FuncDef)]
        seen: set[str] = set()
        for func in functions:
            if func.name in seen:
                self.report(f"function `{func.name}` is defined twice", func.span)
            seen.add(func.name)
        if not functions and not self.errors:
            self.report("program defines no function", self.tokens[-1].span, "`fn`")
        if self.errors:
            raise ParseErrors(sorted(self.errors, key=lambda e: e.span.start if e.span else 0))
        names = [f.name for f in functions]
        entry = "main" if "main" in names else names[-1]
        structs = tuple(
            StructDef(name, self._expand(name), self._struct_spans[name]) for name in self._raw_structs
        )
        return Program(tuple(functions), structs, entry, self.file, tuple(self.warnings))

    def parse_rule(self) -> list[FlowRule]:
        start = Token("RULE_INPUT", "", self.tokens[0].span)
        rules = self._run([start] + self.tokens)
        if self.errors:
            raise self.errors[0]
        return rules

    def _scan_declarations(self) -> tuple[list[Token], list[Token]]:
        """Split struct items from the rest and note struct and io names."""
        toks, eof = self.tokens[:-1], self.tokens[-1]
        self.struct_names = frozenset(
            toks[i + 1].text
            for i in range(len(toks) - 1)
            if toks[i].kind == "STRUCT" and toks[i + 1].kind == "IDENT"
        )
        struct_feed: list[Token] = []
        item_feed: list[Token] = []
        io_functions: list[str] = []
        i = 0
        while i < len(toks):
            if toks[i].kind == "STRUCT":
                end = _braced_end(toks, i)
                struct_feed.extend(toks[i:end])
                i = end
                continue
            if toks[i].kind == "FN" and _is_io_primitive(toks, i):
                io_functions.append(toks[i + 1].text)
            item_feed.append(toks[i])
            i += 1
        self.io_functions = tuple(io_functions)
        return self._retype(struct_feed) + [eof], self._retype(item_feed) + [eof]

    def _retype(self, feed: list[Token]) -> list[Token]:
        out: list[Token] = []
        for tok in feed:
            after_dot = bool(out) and out[-1].kind == "DOT"
            if tok.kind == "IDENT" and tok.text in self.struct_names and not after_dot:
                tok = Token("STRUCT_NAME", tok.text, tok.span)
            out.append(tok)
        return out

    # ---- structs ----

    def declare_struct(self, name_tok: Token, fields: list[tuple[Token, Type]], span: SourceSpan):
        names: set[str] = set()
        for member, _ in fields:
            if member.text in names:
                self.report(f"field `{member.text}` is declared twice", member.span)
            names.add(member.text)
        if name_tok.text in self._raw_structs:
            self.report(f"struct `{name_tok.text}` is defined twice", name_tok.span)
            return
        self._raw_structs[name_tok.text] = tuple((m.text, ty) for m, ty in fields)
        self._struct_spans[name_tok.text] = span

    def struct_type(self, name: str) -> StructType:
        if not self._resolving or name not in self._raw_structs:
            return StructType(name)
        return self._expand(name)

    def _expand(self, name: str, visiting: frozenset = frozenset()) -> StructType:
        if name in visiting:
            return StructType(name)
        if not visiting and name in self._expanded:
            return self._expanded[name]
        inner = visiting | {name}
        fields = tuple((f, self._expand_type(t, inner)) for f, t in self._raw_structs[name])
        expanded = StructType(name, fields)
        if not visiting:
            self._expanded[name] = expanded
        return expanded

    def _expand_type(self, ty: Type, visiting: frozenset) -> Type:
        if isinstance(ty, StructType):
            if ty.name not in self._raw_structs:
                return ty
            return self._expand(ty.name, visiting)
        if isinstance(ty, TupleType):
            return TupleType(tuple(self._expand_type(t, visiting) for t in ty.elements))
        if isinstance(ty, SumType):
            return SumType(self._expand_type(ty.left, visiting), self._expand_type(ty.right, visiting))
        if isinstance(ty, RefType):
            return RefType(ty.omega, self._expand_type(ty.referent, visiting))
        if isinstance(ty, ClosureType):
            return ClosureType(tuple(self._expand_type(t, visiting) for t in ty.params))
        return ty

    # ---- flow rules ----

    def _io_set(self) -> tuple[str, ...]:
        return self.io_alias if self.io_alias is not None else self.io_functions

    def make_rules(self, source, permit: bool, dest, span: SourceSpan) -> list[FlowRule]:
        if source is None or dest is None:
            return []
        if not isinstance(source, PlaceExpr):
            self.report("the source of a flow rule must be a place", span, "a place")
            return []
        if dest is not _IO_ALIAS:
            return [FlowRule(source, dest, permit, span)]
        names = self._io_set()
        if not names:
            arrow = "->" if permit else "->!"
            message = f"`{source} {arrow} fn io!()` expands to no function"
            logger.warning("%s: %s", span, message)
            self.warnings.append(ParseWarning(message, span))
        else:
            logger.debug("%s: fn io!() expands to %s", span, ", ".join(names))
        return [FlowRule(source, FnDest(name, span), permit, span) for name in names]


def _braced_end(toks: list[Token], start: int) -> int:
    """Index just past the brace group that closes the item at ``start``."""
    depth = 0
    for i in range(start + 1, len(toks)):
        if toks[i].kind == "LBRACE":
            depth += 1
        elif toks[i].kind == "RBRACE":
            depth -= 1
            if depth <= 0:
                return i + 1
    return len(toks)


def _is_io_primitive(toks: list[Token], start: int) -> bool:
    if start + 2 >= len(toks) or toks[start + 1].kind != "IDENT" or toks[start + 2].kind != "LPAREN":
        return False
    depth = 0
    for i in range(start + 2, len(toks)):
        if toks[i].kind == "LPAREN":
            depth += 1
        elif toks[i].kind == "RPAREN":
            depth -= 1
            if depth == 0:
                break
    else:
        return False
    tail = toks[i + 1 : i + 3]
    return len(tail) == 2 and tail[0].text == "io" and tail[0].kind == "IDENT" and tail[1].kind == "SEMI"


def parse_program(
    text: str, file: str = "<input>", io_alias: Optional[Iterable[str]] = None
) -> Program:
    """Parse one `.ifc` file.

    ``io_alias`` overrides the functions `fn io!()` expands to; by default
    it expands to every primitive declared `io`. Raises ``ParseErrors``
    listing every syntax error found.
    """
    try:
        parser = Parser(text, file, io_alias)
    except ParseError as err:
        raise ParseErrors([err]) from err
    program = parser.parse_program()
    logger.debug("parsed %s: %d functions, %d structs", file, len(program.functions), len(program.structs))
    return program


def parse_flow_rules(text: str, io_alias: Optional[Iterable[str]] = None) -> list[FlowRule]:
    return Parser(text, "<rule>", io_alias).parse_rule()


def parse_flow_rule(text: str, io_alias: Optional[Iterable[str]] = None) -> FlowRule:
    """Parse a single rule such as ``s ->! *`` or ``key -> fn write``."""
    rules = parse_flow_rules(text, io_alias)
    if len(rules) != 1:
        raise ParseError(f"`{text.strip()}` expands to {len(rules)} rules, expected one")
    return rules[0]
