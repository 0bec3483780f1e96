"""Lexer and recursive-descent parser for MiniLang.

The grammar is documented in ``docs/grammar.md``. Loop updates written as
``i++``, ``i--``, ``i += p`` or ``i -= p`` are normalized to ``i = i + p`` /
``i = i - p`` so every counted loop carries its update in canonical form.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from nvgen.minilang import ast as A


class MiniSyntaxError(Exception):
    def __init__(self, message: str, line: int, col: int, expected: tuple[str, ...] = ()):
        self.line = line
        self.col = col
        self.expected = expected
        detail = f" (expected {', '.join(expected)})" if expected else ""
        super().__init__(f"{line}:{col}: {message}{detail}")


KEYWORDS = {
    "class", "interface", "implements", "public", "private", "static", "void",
    "if", "else", "while", "for", "try", "catch", "throw", "return", "break",
    "continue", "new", "this", "true", "false", "null", "test",
}

# longest operators first
OPERATORS = [
    ">>>=", "<<=", ">>=", ">>>",
    "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=", "-=", "*=", "/=",
    "%=", "&=", "|=", "^=", "<<", ">>",
    "+", "-", "*", "/", "%", "<", ">", "=", "!", "~", "&", "|", "^", "?", ":",
    "(", ")", "{", "}", ";", ",", ".",
]

_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<comment>//[^\n]*|/\*.*?\*/)"
    r"|(?P<hex>0[xX][0-9a-fA-F]+)"
    r"|(?P<int>\d+)"
    r"|(?P<str>\"(?:\\.|[^\"\\\n])*\")"
    r"|(?P<id>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>" + "|".join(re.escape(o) for o in OPERATORS) + r")",
    re.DOTALL,
)

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\", "r": "\r"}


@dataclass
class Token:
    kind: str  # "int", "str", "id", "kw", "op", "eof"
    text: str
    line: int
    col: int
    value: object = None


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise MiniSyntaxError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        col = pos - line_start + 1
        if kind == "hex":
            tokens.append(Token("int", text, line, col, int(text, 16)))
        elif kind == "int":
            tokens.append(Token("int", text, line, col, int(text)))
        elif kind == "str":
            tokens.append(Token("str", text, line, col, _unescape(text[1:-1], line, col)))
        elif kind == "id":
            tokens.append(Token("kw" if text in KEYWORDS else "id", text, line, col))
        elif kind == "op":
            tokens.append(Token("op", text, line, col))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


def _unescape(body: str, line: int, col: int) -> str:
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            nxt = body[i + 1]
            if nxt not in _ESCAPES:
                raise MiniSyntaxError(f"bad escape \\{nxt}", line, col)
            out.append(_ESCAPES[nxt])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


COMPOUND_OPS = {"+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>="}

_BINARY_LEVELS: list[tuple[str, ...]] = [
    ("||",),
    ("&&",),
    ("|",),
    ("^",),
    ("&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("<<", ">>", ">>>"),
    ("+", "-"),
    ("*", "/", "%"),
]


class Parser:
    def __init__(self, source: str):
        self.tokens = tokenize(source)
        self.pos = 0

    # ---------------------------------------------------------- token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("op", "kw") and t.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"unexpected {self.tok.text or 'end of input'!r}", (repr(text),))
        t = self.tok
        self.pos += 1
        return t

    def expect_id(self) -> str:
        t = self.tok
        if t.kind != "id":
            self.error(f"unexpected {t.text or 'end of input'!r}", ("identifier",))
        self.pos += 1
        return t.text

    def error(self, message: str, expected: tuple[str, ...] = ()):
        raise MiniSyntaxError(message, self.tok.line, self.tok.col, expected)

    def span(self) -> A.Span:
        return A.Span(self.tok.line, self.tok.col)

    # ---------------------------------------------------------- declarations

    def parse_program(self) -> A.Program:
        prog = A.Program()
        while self.tok.kind != "eof":
            if self.at("interface"):
                prog.interfaces.append(self.parse_interface())
            elif self.at("class"):
                prog.classes.append(self.parse_class())
            elif self.at("test"):
                self.pos += 1
                name = self.expect_id()
                prog.tests.append(A.TestDecl(name, self.parse_block()))
            else:
                self.error(f"unexpected {self.tok.text!r}", ("'class'", "'interface'", "'test'"))
        return A.number_statements(prog)

    def parse_interface(self) -> A.InterfaceDecl:
        self.expect("interface")
        name = self.expect_id()
        self.expect("{")
        sigs = []
        while not self.accept("}"):
            self.accept("public")
            ret = self.parse_return_type()
            mname = self.expect_id()
            params = self.parse_params()
            self.expect(";")
            sigs.append(A.MethodSig(mname, params, ret))
        return A.InterfaceDecl(name, sigs)

    def parse_class(self) -> A.ClassDecl:
        self.expect("class")
        name = self.expect_id()
        interfaces = []
        if self.accept("implements"):
            interfaces.append(self.expect_id())
            while self.accept(","):
                interfaces.append(self.expect_id())
        self.expect("{")
        cls = A.ClassDecl(name, interfaces, [], [])
        while not self.accept("}"):
            visibility = "public"
            static = False
            while self.at("public") or self.at("private") or self.at("static"):
                word = self.tok.text
                self.pos += 1
                if word == "static":
                    static = True
                else:
                    visibility = word
            if self.tok.kind == "id" and self.tok.text == name and self.peek().text == "(":
                self.pos += 1
                params = self.parse_params()
                body = self.parse_block()
                cls.methods.append(
                    A.MethodDecl(name, params, None, body, static=False, visibility=visibility, constructor=True)
                )
                continue
            ret = self.parse_return_type()
            member = self.expect_id()
            if self.at("("):
                params = self.parse_params()
                body = self.parse_block()
                cls.methods.append(A.MethodDecl(member, params, ret, body, static=static, visibility=visibility))
            else:
                if ret is None:
                    self.error("field cannot be void")
                init = None
                if self.accept("="):
                    init = self.parse_expr()
                self.expect(";")
                cls.fields.append(A.FieldDecl(member, ret, static, visibility, init))
        return cls

    def parse_params(self) -> list[A.Param]:
        self.expect("(")
        params: list[A.Param] = []
        if not self.accept(")"):
            while True:
                ptype = self.parse_type()
                params.append(A.Param(self.expect_id(), ptype))
                if self.accept(")"):
                    break
                self.expect(",")
        return params

    def parse_return_type(self) -> Optional[A.TypeRef]:
        if self.accept("void"):
            return None
        return self.parse_type()

    def parse_type(self) -> A.TypeRef:
        name = self.expect_id()
        if not self.at("<"):
            return A.TypeRef(name)
        self.pos += 1
        args = [self.parse_type()]
        while self.accept(","):
            args.append(self.parse_type())
        self._close_angle()
        return A.TypeRef(name, tuple(args))

    def _close_angle(self) -> None:
        t = self.tok
        if t.kind == "op" and t.text.startswith(">"):
            if t.text == ">":
                self.pos += 1
            else:
                # split '>>' / '>>>' while closing nested type arguments
                self.tokens[self.pos] = Token("op", t.text[1:], t.line, t.col + 1)
            return
        self.error(f"unexpected {t.text!r}", ("'>'",))

    def _looks_like_decl(self) -> bool:
        """Speculatively check for ``Type ident`` at the current position."""
        if self.tok.kind != "id":
            return False
        saved_pos = self.pos
        saved_tokens = list(self.tokens)
        try:
            self.parse_type()
            return self.tok.kind == "id"
        except MiniSyntaxError:
            return False
        finally:
            self.pos = saved_pos
            self.tokens = saved_tokens

    # ---------------------------------------------------------- statements

    def parse_block(self) -> list[A.Stmt]:
        self.expect("{")
        body = []
        while not self.accept("}"):
            if self.tok.kind == "eof":
                self.error("unexpected end of input", ("'}'",))
            body.append(self.parse_stmt())
        return body

    def parse_body(self) -> list[A.Stmt]:
        if self.at("{"):
            return self.parse_block()
        return [self.parse_stmt()]

    def parse_stmt(self) -> A.Stmt:
        span = self.span()
        stmt = self._parse_stmt()
        stmt.span = span
        return stmt

    def _parse_stmt(self) -> A.Stmt:
        if self.at("{"):
            return A.Block(self.parse_block())
        if self.accept("if"):
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            then = self.parse_body()
            other = None
            if self.accept("else"):
                if self.at("if"):
                    other = [self.parse_stmt()]
                else:
                    other = self.parse_body()
            return A.If(cond, then, other)
        if self.accept("while"):
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            return A.While(cond, self.parse_body())
        if self.accept("for"):
            return self.parse_for()
        if self.accept("try"):
            body = self.parse_block()
            self.expect("catch")
            self.expect("(")
            name = self.expect_id()
            self.expect(")")
            return A.Try(body, name, self.parse_block())
        if self.accept("throw"):
            value = self.parse_expr()
            self.expect(";")
            return A.Throw(value)
        if self.accept("return"):
            value = None if self.at(";") else self.parse_expr()
            self.expect(";")
            return A.Return(value)
        if self.accept("break"):
            self.expect(";")
            return A.Break()
        if self.accept("continue"):
            self.expect(";")
            return A.Continue()
        if self._looks_like_decl():
            vtype = self.parse_type()
            name = self.expect_id()
            init = self.parse_expr() if self.accept("=") else None
            self.expect(";")
            return A.VarDecl(vtype, name, init)
        return self.parse_simple(terminator=";")

    def parse_simple(self, terminator: str) -> A.Stmt:
        expr = self.parse_expr()
        t = self.tok
        if t.kind == "op" and (t.text == "=" or t.text in COMPOUND_OPS):
            self.pos += 1
            self._check_lvalue(expr)
            value = self.parse_expr()
            self.expect(terminator)
            return A.Assign(expr, t.text, value)
        if t.kind == "op" and t.text in ("++", "--"):
            self.pos += 1
            self._check_lvalue(expr)
            self.expect(terminator)
            return A.Assign(expr, "+=" if t.text == "++" else "-=", A.IntLit(1))
        self.expect(terminator)
        if isinstance(expr, A.Call):
            return A.InvocationStmt(expr)
        if isinstance(expr, A.New):
            return A.ConstructorCallStmt(expr)
        raise MiniSyntaxError("expression statement must be a call or 'new'", t.line, t.col)

    def _check_lvalue(self, expr: A.Expr) -> None:
        if not isinstance(expr, (A.Name, A.FieldAccess)):
            self.error("invalid assignment target")

    def parse_for(self) -> A.Stmt:
        self.expect("(")
        # for-each: Type name ':' expr
        if self._looks_like_decl():
            save = self.pos
            saved_tokens = list(self.tokens)
            vtype = self.parse_type()
            name = self.expect_id()
            if self.accept(":"):
                iterable = self.parse_expr()
                self.expect(")")
                return A.ForEach(vtype, name, iterable, self.parse_body())
            self.pos = save
            self.tokens = saved_tokens
        declares = False
        if self._looks_like_decl():
            vtype = self.parse_type()
            if vtype != A.INT:
                self.error("counted loop counter must be int")
            declares = True
        counter = self.expect_id()
        self.expect("=")
        init = self.parse_expr()
        self.expect(";")
        cond = self.parse_expr()
        self.expect(";")
        update = self._parse_update(counter)
        self.expect(")")
        return A.ForCounted(counter, declares, init, cond, update, self.parse_body())

    def _parse_update(self, counter: str) -> A.Expr:
        # prefix ++i / --i
        if self.at("++") or self.at("--"):
            op = "+" if self.tok.text == "++" else "-"
            self.pos += 1
            self._expect_counter(counter)
            return A.Binary(op, A.Name(counter), A.IntLit(1))
        self._expect_counter(counter)
        t = self.tok
        self.pos += 1
        if t.text in ("++", "--"):
            return A.Binary("+" if t.text == "++" else "-", A.Name(counter), A.IntLit(1))
        if t.text == "=":
            return self.parse_expr()
        if t.text in COMPOUND_OPS:
            return A.Binary(t.text[:-1], A.Name(counter), self.parse_expr())
        raise MiniSyntaxError(f"unexpected {t.text!r} in loop update", t.line, t.col, ("'='", "'++'", "'--'"))

    def _expect_counter(self, counter: str) -> None:
        name = self.expect_id()
        if name != counter:
            self.error(f"loop update must assign the counter {counter!r}")

    # ---------------------------------------------------------- expressions

    def parse_expr(self) -> A.Expr:
        span = self.span()
        cond = self.parse_binary(0)
        if self.accept("?"):
            then = self.parse_expr()
            self.expect(":")
            other = self.parse_expr()
            return A.Ternary(cond, then, other, span=span)
        return cond

    def parse_binary(self, level: int) -> A.Expr:
        if level == len(_BINARY_LEVELS):
            return self.parse_unary()
        span = self.span()
        left = self.parse_binary(level + 1)
        ops = _BINARY_LEVELS[level]
        while self.tok.kind == "op" and self.tok.text in ops:
            op = self.tok.text
            self.pos += 1
            right = self.parse_binary(level + 1)
            left = A.Binary(op, left, right, span=span)
        return left

    def parse_unary(self) -> A.Expr:
        span = self.span()
        if self.tok.kind == "op" and self.tok.text in ("-", "!", "~"):
            op = self.tok.text
            self.pos += 1
            return A.Unary(op, self.parse_unary(), span=span)
        return self.parse_postfix()

    def parse_postfix(self) -> A.Expr:
        expr = self.parse_primary()
        while self.at("."):
            self.pos += 1
            span = self.span()
            name = self.expect_id()
            if self.at("("):
                expr = A.Call(expr, name, self.parse_args(), span=span)
            else:
                expr = A.FieldAccess(expr, name, span=span)
        return expr

    def parse_args(self) -> list[A.Expr]:
        self.expect("(")
        args: list[A.Expr] = []
        if self.accept(")"):
            return args
        while True:
            args.append(self.parse_expr())
            if self.accept(")"):
                return args
            self.expect(",")

    def parse_primary(self) -> A.Expr:
        t = self.tok
        span = A.Span(t.line, t.col)
        if t.kind == "int":
            self.pos += 1
            if t.value > 2**31:
                raise MiniSyntaxError("integer literal out of range", t.line, t.col)
            return A.IntLit(t.value, span=span)
        if t.kind == "str":
            self.pos += 1
            return A.StrLit(t.value, span=span)
        if t.kind == "id":
            self.pos += 1
            if self.at("("):
                return A.Call(None, t.text, self.parse_args(), span=span)
            return A.Name(t.text, span=span)
        if self.accept("true"):
            return A.BoolLit(True, span=span)
        if self.accept("false"):
            return A.BoolLit(False, span=span)
        if self.accept("null"):
            return A.NullLit(span=span)
        if self.accept("this"):
            return A.This(span=span)
        if self.accept("new"):
            ntype = self.parse_type()
            return A.New(ntype, self.parse_args(), span=span)
        if self.accept("("):
            inner = self.parse_expr()
            self.expect(")")
            return inner
        self.error(f"unexpected {t.text or 'end of input'!r}", ("expression",))


def parse(source: str) -> A.Program:
    """Parse a MiniLang compilation unit. Raises MiniSyntaxError with line/column."""
    return Parser(source).parse_program()


def parse_stmt(source: str) -> A.Stmt:
    p = Parser(source)
    stmt = p.parse_stmt()
    if p.tok.kind != "eof":
        p.error(f"unexpected {p.tok.text!r}", ("end of input",))
    return stmt


def parse_expr(source: str) -> A.Expr:
    p = Parser(source)
    expr = p.parse_expr()
    if p.tok.kind != "eof":
        p.error(f"unexpected {p.tok.text!r}", ("end of input",))
    return expr
