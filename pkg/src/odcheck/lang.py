"""The toy concurrent imperative language: AST, parser, renderer, validation.

Programs declare security-labelled integer variables and then give one or
more threads, each a statement sequence over the shared variables:

    decl    ::= ("low" | "high") NAME "=" ["-"] INT ";"
    thread  ::= "thread" "{" stmt* "}"
    stmt    ::= "skip" ";"
              | NAME ":=" expr ";"
              | "if" "(" expr ")" block ["else" block]
              | "while" "(" expr ")" block
    block   ::= "{" stmt* "}"
    expr    ::= ints, variables, unary - !, binary + - * == != < <= && ||

Booleans are integers: 0 is false, anything else is true. `//` starts a
line comment. Low variables receive ids 1..|L| in declaration order, high
variables continue from |L|+1; the low-store tuple is ordered by those ids.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterator, Optional

from .errors import ParseError, ValidationError

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1


class SecurityLabel(Enum):
    LOW = "low"
    HIGH = "high"


@dataclass(frozen=True)
class VarDecl:
    name: str
    label: SecurityLabel
    var_id: int
    init: int


class Expr:
    pass


@dataclass(frozen=True)
class IntLit(Expr):
    value: int
    pos: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Var(Expr):
    name: str
    pos: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Unary(Expr):
    op: str  # "-" or "!"
    operand: Expr
    pos: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Binary(Expr):
    op: str  # + - * == != < <= && ||
    left: Expr
    right: Expr
    pos: tuple[int, int] = field(default=(0, 0), compare=False)


class Stmt:
    pass


@dataclass(frozen=True)
class Skip(Stmt):
    pos: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Assign(Stmt):
    target: str
    rhs: Expr
    pos: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class If(Stmt):
    guard: Expr
    then_body: tuple[Stmt, ...]
    else_body: tuple[Stmt, ...]
    pos: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class While(Stmt):
    guard: Expr
    body: tuple[Stmt, ...]
    pos: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass
class Program:
    decls: tuple[VarDecl, ...]
    threads: tuple[tuple[Stmt, ...], ...]

    @cached_property
    def by_name(self) -> dict[str, VarDecl]:
        return {d.name: d for d in self.decls}

    @cached_property
    def by_id(self) -> dict[int, VarDecl]:
        return {d.var_id: d for d in self.decls}

    @cached_property
    def low_count(self) -> int:
        return sum(1 for d in self.decls if d.label is SecurityLabel.LOW)

    @cached_property
    def low_ids(self) -> tuple[int, ...]:
        return tuple(range(1, self.low_count + 1))

    @cached_property
    def high_ids(self) -> tuple[int, ...]:
        return tuple(range(self.low_count + 1, len(self.decls) + 1))

    def declared_store(self) -> dict[int, int]:
        """Store holding every variable at its declared initial value."""
        return {d.var_id: d.init for d in self.decls}


def label_of(program: Program, var_id: int) -> SecurityLabel:
    """Security label of a declared variable, by id."""
    decl = program.by_id.get(var_id)
    if decl is None:
        raise ValidationError(f"unknown variable id {var_id}")
    return decl.label


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

KEYWORDS = {"low", "high", "thread", "skip", "if", "else", "while"}

# Longest first so "<=" wins over "<" and ":=" over ":".
_SYMBOLS = ("==", "!=", "<=", ":=", "&&", "||", "<", "=", ";", "{", "}", "(", ")", "+", "-", "*", "!")


@dataclass(frozen=True)
class _Token:
    kind: str  # NAME, INT, KW, SYM, EOF
    text: str
    line: int
    col: int


def _lex(source: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    i, n = 0, len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if source.startswith("//", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        if ch.isdigit():
            start = i
            while i < n and source[i].isdigit():
                i += 1
            tokens.append(_Token("INT", source[start:i], line, col))
            col += i - start
            continue
        if ch.isalpha() or ch == "_":
            start = i
            while i < n and (source[i].isalnum() or source[i] == "_"):
                i += 1
            text = source[start:i]
            tokens.append(_Token("KW" if text in KEYWORDS else "NAME", text, line, col))
            col += i - start
            continue
        for sym in _SYMBOLS:
            if source.startswith(sym, i):
                tokens.append(_Token("SYM", sym, line, col))
                i += len(sym)
                col += len(sym)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(_Token("EOF", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# Parser (recursive descent)
# ---------------------------------------------------------------------------

_BIN_PREC = {
    "||": 1,
    "&&": 2,
    "==": 3, "!=": 3, "<": 3, "<=": 3,
    "+": 4, "-": 4,
    "*": 5,
}
_UNARY_PREC = 6


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def next(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message: str, tok: Optional[_Token] = None) -> ParseError:
        tok = tok or self.peek()
        return ParseError(message, tok.line, tok.col)

    def expect(self, kind: str, text: Optional[str] = None) -> _Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text if text is not None else kind
            got = tok.text if tok.kind != "EOF" else "end of input"
            raise self.error(f"expected {want!r}, found {got!r}")
        return self.next()

    def parse_program(self) -> Program:
        decls: list[tuple[_Token, SecurityLabel, int]] = []
        while self.peek().kind == "KW" and self.peek().text in ("low", "high"):
            decls.append(self.parse_decl())

        seen: dict[str, _Token] = {}
        for name_tok, _, _ in decls:
            if name_tok.text in seen:
                raise self.error(f"duplicate declaration of {name_tok.text!r}", name_tok)
            seen[name_tok.text] = name_tok

        # Lows take ids 1..|L| in declaration order, highs continue after.
        lows = [d for d in decls if d[1] is SecurityLabel.LOW]
        highs = [d for d in decls if d[1] is SecurityLabel.HIGH]
        var_decls = []
        for i, (tok, label, init) in enumerate(lows + highs, start=1):
            var_decls.append(VarDecl(tok.text, label, i, init))
        self.declared = {d.name for d in var_decls}

        threads: list[tuple[Stmt, ...]] = []
        while self.peek().kind == "KW" and self.peek().text == "thread":
            self.next()
            self.expect("SYM", "{")
            threads.append(tuple(self.parse_stmts()))
            self.expect("SYM", "}")
        if not threads:
            raise self.error("expected at least one 'thread' block")
        if self.peek().kind != "EOF":
            raise self.error(f"unexpected {self.peek().text!r} after last thread")
        return Program(tuple(var_decls), tuple(threads))

    def parse_decl(self) -> tuple[_Token, SecurityLabel, int]:
        label = SecurityLabel.LOW if self.next().text == "low" else SecurityLabel.HIGH
        name = self.expect("NAME")
        self.expect("SYM", "=")
        negate = False
        if self.peek().kind == "SYM" and self.peek().text == "-":
            self.next()
            negate = True
        lit = self.expect("INT")
        value = -int(lit.text) if negate else int(lit.text)
        if not INT64_MIN <= value <= INT64_MAX:
            raise self.error("initializer outside the 64-bit signed range", lit)
        self.expect("SYM", ";")
        return name, label, value

    def parse_stmts(self) -> list[Stmt]:
        stmts: list[Stmt] = []
        while True:
            tok = self.peek()
            if tok.kind == "SYM" and tok.text == "}":
                return stmts
            if tok.kind == "EOF":
                return stmts
            stmts.append(self.parse_stmt())

    def parse_stmt(self) -> Stmt:
        tok = self.peek()
        pos = (tok.line, tok.col)
        if tok.kind == "KW" and tok.text == "skip":
            self.next()
            self.expect("SYM", ";")
            return Skip(pos)
        if tok.kind == "KW" and tok.text == "if":
            self.next()
            self.expect("SYM", "(")
            guard = self.parse_expr()
            self.expect("SYM", ")")
            self.expect("SYM", "{")
            then_body = tuple(self.parse_stmts())
            self.expect("SYM", "}")
            else_body: tuple[Stmt, ...] = ()
            if self.peek().kind == "KW" and self.peek().text == "else":
                self.next()
                self.expect("SYM", "{")
                else_body = tuple(self.parse_stmts())
                self.expect("SYM", "}")
            return If(guard, then_body, else_body, pos)
        if tok.kind == "KW" and tok.text == "while":
            self.next()
            self.expect("SYM", "(")
            guard = self.parse_expr()
            self.expect("SYM", ")")
            self.expect("SYM", "{")
            body = tuple(self.parse_stmts())
            self.expect("SYM", "}")
            return While(guard, body, pos)
        if tok.kind == "NAME":
            self.next()
            if tok.text not in self.declared:
                raise self.error(f"undeclared variable {tok.text!r}", tok)
            self.expect("SYM", ":=")
            rhs = self.parse_expr()
            self.expect("SYM", ";")
            return Assign(tok.text, rhs, pos)
        got = tok.text if tok.kind != "EOF" else "end of input"
        raise self.error(f"expected a statement, found {got!r}")

    def parse_expr(self, min_prec: int = 1) -> Expr:
        left = self.parse_unary()
        while True:
            tok = self.peek()
            prec = _BIN_PREC.get(tok.text) if tok.kind == "SYM" else None
            if prec is None or prec < min_prec:
                return left
            self.next()
            right = self.parse_expr(prec + 1)  # left-associative
            left = Binary(tok.text, left, right, (tok.line, tok.col))

    def parse_unary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "SYM" and tok.text in ("-", "!"):
            self.next()
            return Unary(tok.text, self.parse_unary(), (tok.line, tok.col))
        return self.parse_primary()

    def parse_primary(self) -> Expr:
        tok = self.next()
        if tok.kind == "INT":
            value = int(tok.text)
            if value > INT64_MAX:
                raise self.error("literal outside the 64-bit signed range", tok)
            return IntLit(value, (tok.line, tok.col))
        if tok.kind == "NAME":
            if tok.text not in self.declared:
                raise self.error(f"undeclared variable {tok.text!r}", tok)
            return Var(tok.text, (tok.line, tok.col))
        if tok.kind == "SYM" and tok.text == "(":
            expr = self.parse_expr()
            self.expect("SYM", ")")
            return expr
        got = tok.text if tok.kind != "EOF" else "end of input"
        raise self.error(f"expected an expression, found {got!r}", tok)


def parse(source: str) -> Program:
    """Parse program source into a validated Program."""
    program = _Parser(_lex(source)).parse_program()
    validate(program)
    return program


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def _walk_stmts(stmts: tuple[Stmt, ...]) -> Iterator[Stmt]:
    for s in stmts:
        yield s
        if isinstance(s, If):
            yield from _walk_stmts(s.then_body)
            yield from _walk_stmts(s.else_body)
        elif isinstance(s, While):
            yield from _walk_stmts(s.body)


def _walk_exprs(e: Expr) -> Iterator[Expr]:
    yield e
    if isinstance(e, Unary):
        yield from _walk_exprs(e.operand)
    elif isinstance(e, Binary):
        yield from _walk_exprs(e.left)
        yield from _walk_exprs(e.right)


def _stmt_exprs(s: Stmt) -> Iterator[Expr]:
    if isinstance(s, Assign):
        yield from _walk_exprs(s.rhs)
    elif isinstance(s, (If, While)):
        yield from _walk_exprs(s.guard)


def validate(program: Program) -> None:
    """Check every structural invariant of a Program; no-op when fine."""
    if not program.threads:
        raise ValidationError("a program needs at least one thread")

    names = [d.name for d in program.decls]
    if len(set(names)) != len(names):
        dup = next(n for n in names if names.count(n) > 1)
        raise ValidationError(f"duplicate declaration of {dup!r}")

    lows = [d for d in program.decls if d.label is SecurityLabel.LOW]
    highs = [d for d in program.decls if d.label is SecurityLabel.HIGH]
    expected_ids = {d.name: i for i, d in enumerate(lows + highs, start=1)}
    for d in program.decls:
        if d.var_id != expected_ids[d.name]:
            raise ValidationError(
                f"variable {d.name!r} has id {d.var_id}, expected {expected_ids[d.name]}"
                " (lows are numbered 1..|L| in declaration order, then highs)"
            )
        if not INT64_MIN <= d.init <= INT64_MAX:
            raise ValidationError(f"initializer of {d.name!r} outside the 64-bit signed range")

    declared = set(names)
    for tid, thread in enumerate(program.threads):
        for stmt in _walk_stmts(thread):
            if isinstance(stmt, Assign) and stmt.target not in declared:
                raise ValidationError(
                    f"thread {tid} assigns undeclared variable {stmt.target!r} at {stmt.pos}"
                )
            for e in _stmt_exprs(stmt):
                if isinstance(e, Var) and e.name not in declared:
                    raise ValidationError(
                        f"thread {tid} reads undeclared variable {e.name!r} at {e.pos}"
                    )
                if isinstance(e, IntLit) and not 0 <= e.value <= INT64_MAX:
                    raise ValidationError(f"literal {e.value} outside the representable range")


# ---------------------------------------------------------------------------
# Renderer
# ---------------------------------------------------------------------------

def _render_expr(e: Expr, parent_prec: int = 0, right_slot: bool = False) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        inner = _render_expr(e.operand)
        if isinstance(e.operand, (Unary, Binary)):
            inner = f"({inner})"
        text = f"{e.op}{inner}"
        prec = _UNARY_PREC
    else:
        assert isinstance(e, Binary)
        prec = _BIN_PREC[e.op]
        lhs = _render_expr(e.left, prec, False)
        rhs = _render_expr(e.right, prec, True)
        text = f"{lhs} {e.op} {rhs}"
    if prec < parent_prec or (prec == parent_prec and right_slot):
        return f"({text})"
    return text


def _render_stmts(stmts: tuple[Stmt, ...], indent: int, out: list[str]) -> None:
    pad = "  " * indent
    for s in stmts:
        if isinstance(s, Skip):
            out.append(f"{pad}skip;")
        elif isinstance(s, Assign):
            out.append(f"{pad}{s.target} := {_render_expr(s.rhs)};")
        elif isinstance(s, If):
            out.append(f"{pad}if ({_render_expr(s.guard)}) {{")
            _render_stmts(s.then_body, indent + 1, out)
            if s.else_body:
                out.append(f"{pad}}} else {{")
                _render_stmts(s.else_body, indent + 1, out)
            out.append(f"{pad}}}")
        elif isinstance(s, While):
            out.append(f"{pad}while ({_render_expr(s.guard)}) {{")
            _render_stmts(s.body, indent + 1, out)
            out.append(f"{pad}}}")
        else:
            raise TypeError(f"unknown statement {s!r}")


def render(program: Program) -> str:
    """Canonical source text; parse(render(p)) is structurally equal to p."""
    out: list[str] = []
    for d in program.decls:
        out.append(f"{d.label.value} {d.name} = {d.init};")
    for thread in program.threads:
        out.append("")
        out.append("thread {")
        _render_stmts(thread, 1, out)
        out.append("}")
    return "\n".join(out) + "\n"
