"""Syntax tree for MiniLang compilation units.

Nodes are plain dataclasses. Structural equality ignores source spans and
statement ids, so a tree compares equal to the reparse of its pretty-printed
form. Trees are treated as immutable once built: transformations deep-copy a
program before editing it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union


@dataclass(frozen=True)
class Span:
    line: int
    col: int


# ============================================================
# TYPES
# ============================================================


@dataclass(frozen=True)
class TypeRef:
    """A type name with optional type arguments (only builtin collections take them)."""

    name: str
    args: tuple["TypeRef", ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return self.name
        return f"{self.name}<{', '.join(str(a) for a in self.args)}>"


INT = TypeRef("int")
BOOL = TypeRef("bool")
STRING = TypeRef("string")
NULL = TypeRef("null")


# ============================================================
# EXPRESSIONS
# ============================================================


@dataclass(kw_only=True)
class Expr:
    span: Optional[Span] = field(default=None, compare=False, repr=False)


@dataclass
class IntLit(Expr):
    value: int


def int_expr(value: int) -> Expr:
    """Integer literal expression; negatives become unary minus so they round-trip."""
    if value < 0:
        return Unary("-", IntLit(-value))
    return IntLit(value)


@dataclass
class BoolLit(Expr):
    value: bool


@dataclass
class StrLit(Expr):
    value: str


@dataclass
class NullLit(Expr):
    pass


@dataclass
class Name(Expr):
    id: str


@dataclass
class This(Expr):
    pass


@dataclass
class FieldAccess(Expr):
    target: Expr
    name: str


@dataclass
class Call(Expr):
    target: Optional[Expr]  # None: implicit receiver (this, or the current class)
    name: str
    args: list[Expr]


@dataclass
class New(Expr):
    type: TypeRef
    args: list[Expr]


@dataclass
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass
class Unary(Expr):
    op: str
    operand: Expr


@dataclass
class Ternary(Expr):
    cond: Expr
    then: Expr
    other: Expr


# ============================================================
# STATEMENTS
# ============================================================

NODE_KINDS = (
    "Invocation",
    "Assignment",
    "VarDecl",
    "Return",
    "If",
    "While",
    "ForCounted",
    "ForEach",
    "Try",
    "Throw",
    "Break",
    "Continue",
    "Block",
    "ConstructorCall",
)


@dataclass(kw_only=True)
class Stmt:
    span: Optional[Span] = field(default=None, compare=False, repr=False)
    # structural path "class/method/preorder"; assigned by number_statements
    sid: str = field(default="", compare=False, repr=False)

    kind = ""

    def child_bodies(self) -> list[list["Stmt"]]:
        return []


@dataclass
class InvocationStmt(Stmt):
    call: Call
    kind = "Invocation"


@dataclass
class ConstructorCallStmt(Stmt):
    new: New
    kind = "ConstructorCall"


@dataclass
class Assign(Stmt):
    target: Expr
    op: str  # "=", "+=", "-=", ...
    value: Expr
    kind = "Assignment"


@dataclass
class VarDecl(Stmt):
    type: TypeRef
    name: str
    init: Optional[Expr]
    kind = "VarDecl"


@dataclass
class Return(Stmt):
    value: Optional[Expr]
    kind = "Return"


@dataclass
class If(Stmt):
    cond: Expr
    then: list[Stmt]
    other: Optional[list[Stmt]]
    kind = "If"

    def child_bodies(self) -> list[list[Stmt]]:
        return [self.then] if self.other is None else [self.then, self.other]


@dataclass
class While(Stmt):
    cond: Expr
    body: list[Stmt]
    kind = "While"

    def child_bodies(self) -> list[list[Stmt]]:
        return [self.body]


@dataclass
class ForCounted(Stmt):
    """``for ([int] i = init; cond; i = update) { body }``.

    The update is always held in the normalized form ``i = <expr>``; the
    parser rewrites ``i++``, ``i -= 2`` and friends.
    """

    counter: str
    declares: bool
    init: Expr
    cond: Expr
    update: Expr
    body: list[Stmt]
    kind = "ForCounted"

    def child_bodies(self) -> list[list[Stmt]]:
        return [self.body]


@dataclass
class ForEach(Stmt):
    type: TypeRef
    name: str
    iterable: Expr
    body: list[Stmt]
    kind = "ForEach"

    def child_bodies(self) -> list[list[Stmt]]:
        return [self.body]


@dataclass
class Try(Stmt):
    body: list[Stmt]
    catch_name: str
    handler: list[Stmt]
    kind = "Try"

    def child_bodies(self) -> list[list[Stmt]]:
        return [self.body, self.handler]


@dataclass
class Throw(Stmt):
    value: Expr
    kind = "Throw"


@dataclass
class Break(Stmt):
    kind = "Break"


@dataclass
class Continue(Stmt):
    kind = "Continue"


@dataclass
class Block(Stmt):
    body: list[Stmt]
    kind = "Block"

    def child_bodies(self) -> list[list[Stmt]]:
        return [self.body]


# ============================================================
# DECLARATIONS
# ============================================================


@dataclass
class Param:
    name: str
    type: TypeRef


@dataclass
class FieldDecl:
    name: str
    type: TypeRef
    static: bool = False
    visibility: str = "public"
    init: Optional[Expr] = None


@dataclass
class MethodDecl:
    name: str
    params: list[Param]
    return_type: Optional[TypeRef]  # None means void
    body: list[Stmt]
    static: bool = False
    visibility: str = "public"
    constructor: bool = False


@dataclass
class MethodSig:
    name: str
    params: list[Param]
    return_type: Optional[TypeRef]


@dataclass
class InterfaceDecl:
    name: str
    methods: list[MethodSig]


@dataclass
class ClassDecl:
    name: str
    interfaces: list[str]
    fields: list[FieldDecl]
    methods: list[MethodDecl]

    def method(self, name: str) -> Optional[MethodDecl]:
        for m in self.methods:
            if m.name == name and not m.constructor:
                return m
        return None

    def constructor(self) -> Optional[MethodDecl]:
        for m in self.methods:
            if m.constructor:
                return m
        return None

    def field(self, name: str) -> Optional[FieldDecl]:
        for f in self.fields:
            if f.name == name:
                return f
        return None


@dataclass
class TestDecl:
    name: str
    body: list[Stmt]


@dataclass
class Program:
    interfaces: list[InterfaceDecl] = field(default_factory=list)
    classes: list[ClassDecl] = field(default_factory=list)
    tests: list[TestDecl] = field(default_factory=list)

    def cls(self, name: str) -> Optional[ClassDecl]:
        for c in self.classes:
            if c.name == name:
                return c
        return None

    def interface(self, name: str) -> Optional[InterfaceDecl]:
        for i in self.interfaces:
            if i.name == name:
                return i
        return None

    def test(self, name: str) -> Optional[TestDecl]:
        for t in self.tests:
            if t.name == name:
                return t
        return None


Node = Union[Expr, Stmt]


# ============================================================
# TRAVERSAL HELPERS
# ============================================================


def iter_body(body: list[Stmt]) -> Iterator[Stmt]:
    """Pre-order walk over a statement list and every nested statement."""
    for stmt in body:
        yield stmt
        for child in stmt.child_bodies():
            yield from iter_body(child)


def stmt_exprs(stmt: Stmt) -> list[Expr]:
    """Expressions owned directly by ``stmt`` (not by nested statements)."""
    if isinstance(stmt, InvocationStmt):
        return [stmt.call]
    if isinstance(stmt, ConstructorCallStmt):
        return [stmt.new]
    if isinstance(stmt, Assign):
        return [stmt.target, stmt.value]
    if isinstance(stmt, VarDecl):
        return [] if stmt.init is None else [stmt.init]
    if isinstance(stmt, Return):
        return [] if stmt.value is None else [stmt.value]
    if isinstance(stmt, (If, While)):
        return [stmt.cond]
    if isinstance(stmt, ForCounted):
        return [stmt.init, stmt.cond, stmt.update]
    if isinstance(stmt, ForEach):
        return [stmt.iterable]
    if isinstance(stmt, Throw):
        return [stmt.value]
    return []


def sub_exprs(expr: Expr) -> list[Expr]:
    if isinstance(expr, FieldAccess):
        return [expr.target]
    if isinstance(expr, Call):
        return ([expr.target] if expr.target is not None else []) + list(expr.args)
    if isinstance(expr, New):
        return list(expr.args)
    if isinstance(expr, Binary):
        return [expr.left, expr.right]
    if isinstance(expr, Unary):
        return [expr.operand]
    if isinstance(expr, Ternary):
        return [expr.cond, expr.then, expr.other]
    return []


def walk_expr(expr: Expr) -> Iterator[Expr]:
    yield expr
    for sub in sub_exprs(expr):
        yield from walk_expr(sub)


def method_bodies(program: Program) -> Iterator[tuple[int, int, ClassDecl, MethodDecl]]:
    for ci, cls in enumerate(program.classes):
        for mi, meth in enumerate(cls.methods):
            yield ci, mi, cls, meth


def number_statements(program: Program) -> Program:
    """Assign structural ids ``"<class>/<method>/<preorder>"`` to every statement.

    Test bodies get ``"test:<name>/<preorder>"``; they are never transformation
    locations.
    """
    for ci, mi, _cls, meth in method_bodies(program):
        for k, stmt in enumerate(iter_body(meth.body)):
            stmt.sid = f"{ci}/{mi}/{k}"
    for test in program.tests:
        for k, stmt in enumerate(iter_body(test.body)):
            stmt.sid = f"test:{test.name}/{k}"
    return program
