"""Static checking for MiniLang programs.

``type_check`` stands in for "the variant compiles": it returns every
error it can find instead of stopping at the first one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from nvgen.minilang import ast as A
from nvgen.minilang import types as T
from nvgen.minilang.ast import BOOL, INT, NULL, STRING, TypeRef

ERR = TypeRef("<error>")
VOID = TypeRef("void")


@dataclass(frozen=True)
class TypeErr:
    kind: str  # UndeclaredName, TypeMismatch, BadReturnType, InterfaceNotSatisfied, ...
    message: str
    where: str = ""

    def __str__(self) -> str:
        prefix = f"{self.where}: " if self.where else ""
        return f"{prefix}{self.kind}: {self.message}"


@dataclass
class CheckResult:
    errors: list[TypeErr] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def kinds(self) -> set[str]:
        return {e.kind for e in self.errors}


@dataclass
class Ctx:
    """Static context of a statement: enclosing class/method and visible locals."""

    cls: Optional[A.ClassDecl]
    static: bool
    ret: Optional[TypeRef]  # method return type; None for void
    scopes: list[dict[str, TypeRef]]
    in_test: bool = False
    loop_depth: int = 0
    where: str = ""

    def lookup_local(self, name: str) -> Optional[TypeRef]:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return None

    def push(self) -> None:
        self.scopes.append({})

    def pop(self) -> None:
        self.scopes.pop()


class Checker:
    def __init__(self, program: A.Program):
        self.program = program
        self.errors: list[TypeErr] = []
        self.classes = {c.name: c for c in program.classes}
        self.interfaces = {i.name: i for i in program.interfaces}

    def err(self, kind: str, message: str, ctx: Optional[Ctx] = None, where: str = "") -> None:
        self.errors.append(TypeErr(kind, message, where or (ctx.where if ctx else "")))

    # ------------------------------------------------------------ type relations

    def type_exists(self, t: TypeRef) -> bool:
        if t.name in T.PRIMITIVES or t.name in self.classes or t.name in self.interfaces:
            return not t.args
        iface = T.collection_interface(t)
        if iface is None:
            return False
        if len(t.args) != T.COLLECTION_INTERFACES[iface]:
            return False
        if iface in ("Set", "Map") and t.args[0].name not in T.KEY_TYPES:
            return False
        return all(self.type_exists(a) for a in t.args)

    def implements(self, cls_name: str, iface: str) -> bool:
        cls = self.classes.get(cls_name)
        return cls is not None and iface in cls.interfaces

    def assignable(self, src: Optional[TypeRef], dst: Optional[TypeRef]) -> bool:
        if src is ERR or dst is ERR:
            return True
        if src is None or dst is None:
            return False
        if src == dst:
            return True
        if src == NULL:
            return T.is_reference(dst)
        if dst.name in self.interfaces and not dst.args:
            return self.implements(src.name, dst.name)
        src_iface = T.collection_interface(src)
        if src_iface is not None and dst.name == src_iface:
            return src.args == dst.args
        return False

    # ------------------------------------------------------------ member lookup

    def _accessible(self, owner: A.ClassDecl, visibility: str, ctx: Ctx, member: str = "field") -> bool:
        return visibility == "public" or (ctx.cls is not None and ctx.cls.name == owner.name)

    def is_class_name(self, expr: A.Expr, ctx: Ctx) -> bool:
        """A bare name that denotes a class rather than a variable."""
        if not isinstance(expr, A.Name):
            return False
        if ctx.lookup_local(expr.id) is not None:
            return False
        if ctx.cls is not None and ctx.cls.field(expr.id) is not None:
            return False
        return expr.id in self.classes

    def method_signature(
        self, recv: TypeRef, name: str
    ) -> Optional[tuple[list[TypeRef], Optional[TypeRef]]]:
        if recv == STRING:
            return T.string_method(name)
        if T.collection_interface(recv) is not None:
            return T.collection_method(recv, name)
        iface = self.interfaces.get(recv.name)
        if iface is not None:
            for sig in iface.methods:
                if sig.name == name:
                    return [p.type for p in sig.params], sig.return_type
        return None

    # ------------------------------------------------------------ expressions

    def expr_type(self, expr: A.Expr, ctx: Ctx) -> Optional[TypeRef]:
        """Type of ``expr``; None means void. Errors are recorded, ERR returned."""
        if isinstance(expr, A.IntLit):
            return INT
        if isinstance(expr, A.BoolLit):
            return BOOL
        if isinstance(expr, A.StrLit):
            return STRING
        if isinstance(expr, A.NullLit):
            return NULL
        if isinstance(expr, A.Name):
            return self._name_type(expr, ctx)
        if isinstance(expr, A.This):
            if ctx.cls is None or ctx.static:
                self.err("StaticContext", "'this' used in a static context", ctx)
                return ERR
            return TypeRef(ctx.cls.name)
        if isinstance(expr, A.FieldAccess):
            return self._field_type(expr, ctx)
        if isinstance(expr, A.Call):
            return self._call_type(expr, ctx)
        if isinstance(expr, A.New):
            return self._new_type(expr, ctx)
        if isinstance(expr, A.Unary):
            inner = self.value_type(expr.operand, ctx)
            want = BOOL if expr.op == "!" else INT
            if not self.assignable(inner, want) or inner == NULL:
                self.err("TypeMismatch", f"operator {expr.op} expects {want}, got {inner}", ctx)
                return ERR
            return want
        if isinstance(expr, A.Binary):
            return self._binary_type(expr, ctx)
        if isinstance(expr, A.Ternary):
            cond = self.value_type(expr.cond, ctx)
            if not self.assignable(cond, BOOL) or cond == NULL:
                self.err("TypeMismatch", f"condition must be bool, got {cond}", ctx)
            a = self.value_type(expr.then, ctx)
            b = self.value_type(expr.other, ctx)
            if a is ERR or b is ERR:
                return ERR
            if a == b:
                return a
            if a == NULL and T.is_reference(b):
                return b
            if b == NULL and T.is_reference(a):
                return a
            self.err("TypeMismatch", f"ternary branches differ: {a} vs {b}", ctx)
            return ERR
        raise TypeError(f"unknown expression {expr!r}")

    def value_type(self, expr: A.Expr, ctx: Ctx) -> TypeRef:
        t = self.expr_type(expr, ctx)
        if t is None:
            self.err("TypeMismatch", "void value used in an expression", ctx)
            return ERR
        return t

    def _name_type(self, expr: A.Name, ctx: Ctx) -> TypeRef:
        local = ctx.lookup_local(expr.id)
        if local is not None:
            return local
        if ctx.cls is not None:
            f = ctx.cls.field(expr.id)
            if f is not None:
                if not f.static and ctx.static:
                    self.err("StaticContext", f"instance field {expr.id!r} used in a static context", ctx)
                    return ERR
                return f.type
        self.err("UndeclaredName", f"undeclared variable {expr.id!r}", ctx)
        return ERR

    def _field_type(self, expr: A.FieldAccess, ctx: Ctx) -> TypeRef:
        if self.is_class_name(expr.target, ctx):
            owner = self.classes[expr.target.id]
            f = owner.field(expr.name)
            if f is None or not f.static:
                self.err("UndeclaredName", f"no static field {owner.name}.{expr.name}", ctx)
                return ERR
            if not self._accessible(owner, f.visibility, ctx):
                self.err("BadAccess", f"field {owner.name}.{expr.name} is private", ctx)
            return f.type
        recv = self.value_type(expr.target, ctx)
        if recv is ERR:
            return ERR
        owner = self.classes.get(recv.name)
        if owner is None or recv.args:
            self.err("UndeclaredName", f"type {recv} has no field {expr.name!r}", ctx)
            return ERR
        f = owner.field(expr.name)
        if f is None or f.static:
            self.err("UndeclaredName", f"no instance field {owner.name}.{expr.name}", ctx)
            return ERR
        if not self._accessible(owner, f.visibility, ctx):
            self.err("BadAccess", f"field {owner.name}.{expr.name} is private", ctx)
        return f.type

    def _check_args(self, what: str, params: list[TypeRef], args: list[A.Expr], ctx: Ctx) -> None:
        arg_types = [self.value_type(a, ctx) for a in args]
        if len(params) != len(args):
            self.err("BadCall", f"{what} expects {len(params)} arguments, got {len(args)}", ctx)
            return
        for i, (p, a) in enumerate(zip(params, arg_types)):
            if not self.assignable(a, p):
                self.err("TypeMismatch", f"argument {i + 1} of {what}: expected {p}, got {a}", ctx)

    def _call_type(self, expr: A.Call, ctx: Ctx) -> Optional[TypeRef]:
        if expr.target is None:
            if ctx.in_test and expr.name in T.ASSERTIONS:
                arity = T.ASSERTIONS[expr.name]
                types = [self.value_type(a, ctx) for a in expr.args]
                if len(types) != arity:
                    self.err("BadCall", f"{expr.name} expects {arity} arguments", ctx)
                elif expr.name == "assertEquals":
                    a, b = types
                    if not (self.assignable(a, b) or self.assignable(b, a)):
                        self.err("TypeMismatch", f"assertEquals compares {a} with {b}", ctx)
                elif not self.assignable(types[0], BOOL) or types[0] == NULL:
                    self.err("TypeMismatch", f"{expr.name} expects bool", ctx)
                return None
            if ctx.cls is None:
                self.err("UndeclaredName", f"unknown function {expr.name!r}", ctx)
                return ERR
            meth = ctx.cls.method(expr.name)
            if meth is None:
                self.err("UndeclaredName", f"no method {ctx.cls.name}.{expr.name}", ctx)
                for a in expr.args:
                    self.expr_type(a, ctx)
                return ERR
            if not meth.static and ctx.static:
                self.err("StaticContext", f"instance method {expr.name!r} called from a static context", ctx)
            self._check_args(f"{ctx.cls.name}.{meth.name}", [p.type for p in meth.params], expr.args, ctx)
            return meth.return_type
        if self.is_class_name(expr.target, ctx):
            owner = self.classes[expr.target.id]
            meth = owner.method(expr.name)
            if meth is None or not meth.static:
                self.err("UndeclaredName", f"no static method {owner.name}.{expr.name}", ctx)
                return ERR
            if not self._accessible(owner, meth.visibility, ctx, "method"):
                self.err("BadAccess", f"method {owner.name}.{expr.name} is private", ctx)
            self._check_args(f"{owner.name}.{meth.name}", [p.type for p in meth.params], expr.args, ctx)
            return meth.return_type
        recv = self.value_type(expr.target, ctx)
        if recv is ERR:
            for a in expr.args:
                self.expr_type(a, ctx)
            return ERR
        owner = self.classes.get(recv.name)
        if owner is not None and not recv.args:
            meth = owner.method(expr.name)
            if meth is None or meth.static:
                self.err("UndeclaredName", f"no instance method {owner.name}.{expr.name}", ctx)
                return ERR
            if not self._accessible(owner, meth.visibility, ctx, "method"):
                self.err("BadAccess", f"method {owner.name}.{expr.name} is private", ctx)
            self._check_args(f"{owner.name}.{meth.name}", [p.type for p in meth.params], expr.args, ctx)
            return meth.return_type
        sig = self.method_signature(recv, expr.name)
        if sig is None:
            self.err("UndeclaredName", f"type {recv} has no method {expr.name!r}", ctx)
            return ERR
        params, ret = sig
        self._check_args(f"{recv}.{expr.name}", params, expr.args, ctx)
        return ret

    def _new_type(self, expr: A.New, ctx: Ctx) -> TypeRef:
        t = expr.type
        if t.name in self.classes and not t.args:
            ctor = self.classes[t.name].constructor()
            params = [] if ctor is None else [p.type for p in ctor.params]
            if ctor is not None and not self._accessible(self.classes[t.name], ctor.visibility, ctx, "constructor"):
                self.err("BadAccess", f"constructor of {t.name} is private", ctx)
            self._check_args(f"new {t.name}", params, expr.args, ctx)
            return t
        if t.name in T.COLLECTION_IMPLS:
            if not self.type_exists(t):
                self.err("UnknownType", f"bad collection type {t}", ctx)
                return ERR
            self._check_args(f"new {t}", [], expr.args, ctx)
            return t
        self.err("TypeMismatch", f"cannot instantiate {t}", ctx)
        return ERR

    def _binary_type(self, expr: A.Binary, ctx: Ctx) -> TypeRef:
        a = self.value_type(expr.left, ctx)
        b = self.value_type(expr.right, ctx)
        op = expr.op
        if a is ERR or b is ERR:
            return BOOL if op in ("==", "!=", "<", "<=", ">", ">=", "&&", "||") else ERR
        if op == "+" and (a == STRING or b == STRING):
            return STRING
        if op in ("&&", "||"):
            if a == BOOL and b == BOOL:
                return BOOL
        elif op in ("&", "|", "^"):
            if a == b and a in (INT, BOOL):
                return a
        elif op in ("==", "!="):
            if self.assignable(a, b) or self.assignable(b, a):
                return BOOL
        elif op in ("<", "<=", ">", ">="):
            if a == INT and b == INT:
                return BOOL
        elif a == INT and b == INT:
            return INT
        self.err("TypeMismatch", f"operator {op} not defined for {a} and {b}", ctx)
        return ERR

    # ------------------------------------------------------------ statements

    def check_body(self, body: list[A.Stmt], ctx: Ctx) -> None:
        ctx.push()
        for stmt in body:
            self.check_stmt(stmt, ctx)
        ctx.pop()

    def declare(self, name: str, t: TypeRef, ctx: Ctx) -> None:
        if ctx.lookup_local(name) is not None:
            self.err("DuplicateName", f"variable {name!r} already declared", ctx)
        ctx.scopes[-1][name] = t

    def check_stmt(self, stmt: A.Stmt, ctx: Ctx) -> None:
        if isinstance(stmt, A.InvocationStmt):
            self.expr_type(stmt.call, ctx)
        elif isinstance(stmt, A.ConstructorCallStmt):
            self.expr_type(stmt.new, ctx)
        elif isinstance(stmt, A.VarDecl):
            if not self.type_exists(stmt.type):
                self.err("UnknownType", f"unknown type {stmt.type}", ctx)
            if stmt.init is not None:
                t = self.value_type(stmt.init, ctx)
                if not self.assignable(t, stmt.type):
                    self.err("TypeMismatch", f"cannot initialize {stmt.type} {stmt.name} with {t}", ctx)
            self.declare(stmt.name, stmt.type, ctx)
        elif isinstance(stmt, A.Assign):
            self._check_assign(stmt, ctx)
        elif isinstance(stmt, A.Return):
            self._check_return(stmt, ctx)
        elif isinstance(stmt, A.If):
            self._cond(stmt.cond, ctx)
            self.check_body(stmt.then, ctx)
            if stmt.other is not None:
                self.check_body(stmt.other, ctx)
        elif isinstance(stmt, A.While):
            self._cond(stmt.cond, ctx)
            ctx.loop_depth += 1
            self.check_body(stmt.body, ctx)
            ctx.loop_depth -= 1
        elif isinstance(stmt, A.ForCounted):
            ctx.push()
            init = self.value_type(stmt.init, ctx)
            if stmt.declares:
                self.declare(stmt.counter, INT, ctx)
            else:
                counter = self.value_type(A.Name(stmt.counter), ctx)
                if counter is not ERR and counter != INT:
                    self.err("TypeMismatch", f"loop counter {stmt.counter!r} must be int", ctx)
            if not self.assignable(init, INT) or init == NULL:
                self.err("TypeMismatch", f"loop init must be int, got {init}", ctx)
            self._cond(stmt.cond, ctx)
            upd = self.value_type(stmt.update, ctx)
            if not self.assignable(upd, INT) or upd == NULL:
                self.err("TypeMismatch", f"loop update must be int, got {upd}", ctx)
            ctx.loop_depth += 1
            self.check_body(stmt.body, ctx)
            ctx.loop_depth -= 1
            ctx.pop()
        elif isinstance(stmt, A.ForEach):
            it = self.value_type(stmt.iterable, ctx)
            elem = T.element_type(it) if it is not ERR else ERR
            if elem is None:
                self.err("TypeMismatch", f"cannot iterate over {it}", ctx)
            elif not self.assignable(elem, stmt.type):
                self.err("TypeMismatch", f"for-each variable {stmt.type} cannot hold {elem}", ctx)
            ctx.push()
            self.declare(stmt.name, stmt.type, ctx)
            ctx.loop_depth += 1
            self.check_body(stmt.body, ctx)
            ctx.loop_depth -= 1
            ctx.pop()
        elif isinstance(stmt, A.Try):
            self.check_body(stmt.body, ctx)
            ctx.push()
            self.declare(stmt.catch_name, STRING, ctx)
            self.check_body(stmt.handler, ctx)
            ctx.pop()
        elif isinstance(stmt, A.Throw):
            t = self.value_type(stmt.value, ctx)
            if not self.assignable(t, STRING):
                self.err("TypeMismatch", f"throw expects a string message, got {t}", ctx)
        elif isinstance(stmt, (A.Break, A.Continue)):
            if ctx.loop_depth == 0:
                self.err("NotInLoop", f"{stmt.kind.lower()} outside of a loop", ctx)
        elif isinstance(stmt, A.Block):
            self.check_body(stmt.body, ctx)
        else:
            raise TypeError(f"unknown statement {stmt!r}")

    def _cond(self, expr: A.Expr, ctx: Ctx) -> None:
        t = self.value_type(expr, ctx)
        if t is not ERR and t != BOOL:
            self.err("TypeMismatch", f"condition must be bool, got {t}", ctx)

    def _check_assign(self, stmt: A.Assign, ctx: Ctx) -> None:
        target = self.value_type(stmt.target, ctx)
        value = self.value_type(stmt.value, ctx)
        if stmt.op == "=":
            if not self.assignable(value, target):
                self.err("TypeMismatch", f"cannot assign {value} to {target}", ctx)
            return
        if target is ERR or value is ERR:
            return
        op = stmt.op[:-1]
        if op == "+" and target == STRING:
            return
        if op in ("&", "|", "^") and target == BOOL and value == BOOL:
            return
        if target != INT or value != INT:
            self.err("TypeMismatch", f"operator {stmt.op} not defined for {target} and {value}", ctx)

    def _check_return(self, stmt: A.Return, ctx: Ctx) -> None:
        if ctx.in_test:
            if stmt.value is not None:
                self.err("BadReturnType", "tests cannot return a value", ctx)
            return
        if stmt.value is None:
            if ctx.ret is not None:
                self.err("BadReturnType", f"missing return value of type {ctx.ret}", ctx)
            return
        t = self.value_type(stmt.value, ctx)
        if ctx.ret is None:
            self.err("BadReturnType", "void method returns a value", ctx)
        elif not self.assignable(t, ctx.ret):
            self.err("BadReturnType", f"returns {t}, expected {ctx.ret}", ctx)

    # ------------------------------------------------------------ declarations

    def check(self) -> CheckResult:
        prog = self.program
        seen: set[str] = set()
        for name in [i.name for i in prog.interfaces] + [c.name for c in prog.classes]:
            if name in seen or name in T.BUILTIN_TYPE_NAMES:
                self.err("DuplicateName", f"type {name!r} declared twice or shadows a builtin", where=name)
            seen.add(name)
        tests_seen: set[str] = set()
        for t in prog.tests:
            if t.name in tests_seen:
                self.err("DuplicateName", f"test {t.name!r} declared twice", where=f"test {t.name}")
            tests_seen.add(t.name)
        for iface in prog.interfaces:
            for sig in iface.methods:
                for p in sig.params:
                    if not self.type_exists(p.type):
                        self.err("UnknownType", f"unknown type {p.type}", where=iface.name)
                if sig.return_type is not None and not self.type_exists(sig.return_type):
                    self.err("UnknownType", f"unknown type {sig.return_type}", where=iface.name)
        for cls in prog.classes:
            self._check_class(cls)
        for test in prog.tests:
            ctx = Ctx(None, True, None, [{}], in_test=True, where=f"test {test.name}")
            self.check_body(test.body, ctx)
        return CheckResult(self.errors)

    def _check_class(self, cls: A.ClassDecl) -> None:
        names: set[str] = set()
        for f in cls.fields:
            if f.name in names:
                self.err("DuplicateName", f"field {f.name!r} declared twice", where=cls.name)
            names.add(f.name)
            if not self.type_exists(f.type):
                self.err("UnknownType", f"unknown type {f.type}", where=f"{cls.name}.{f.name}")
            if f.init is not None:
                ctx = Ctx(cls, True, None, [{}], where=f"{cls.name}.{f.name}")
                t = self.value_type(f.init, ctx)
                if not self.assignable(t, f.type):
                    self.err("TypeMismatch", f"cannot initialize {f.type} {f.name} with {t}", ctx)
        mnames: set[str] = set()
        ctors = 0
        for m in cls.methods:
            if m.constructor:
                ctors += 1
            elif m.name in mnames:
                self.err("DuplicateName", f"method {m.name!r} declared twice", where=cls.name)
            mnames.add(m.name)
            self._check_method(cls, m)
        if ctors > 1:
            self.err("DuplicateName", "more than one constructor", where=cls.name)
        for iname in cls.interfaces:
            iface = self.interfaces.get(iname)
            if iface is None:
                self.err("UnknownType", f"unknown interface {iname!r}", where=cls.name)
                continue
            for sig in iface.methods:
                m = cls.method(sig.name)
                if (
                    m is None
                    or m.static
                    or m.visibility != "public"
                    or [p.type for p in m.params] != [p.type for p in sig.params]
                    or m.return_type != sig.return_type
                ):
                    self.err(
                        "InterfaceNotSatisfied",
                        f"{cls.name} does not implement {iname}.{sig.name}",
                        where=cls.name,
                    )

    def _check_method(self, cls: A.ClassDecl, m: A.MethodDecl) -> None:
        where = f"{cls.name}.{m.name}"
        params: dict[str, TypeRef] = {}
        for p in m.params:
            if not self.type_exists(p.type):
                self.err("UnknownType", f"unknown type {p.type}", where=where)
            if p.name in params:
                self.err("DuplicateName", f"parameter {p.name!r} declared twice", where=where)
            params[p.name] = p.type
        if m.return_type is not None and not self.type_exists(m.return_type):
            self.err("UnknownType", f"unknown type {m.return_type}", where=where)
        ctx = Ctx(cls, m.static, m.return_type, [params], where=where)
        self.check_body(m.body, ctx)
        if m.return_type is not None and can_complete(m.body):
            self.err("MissingReturn", "method can finish without returning a value", where=where)


def can_complete(body: list[A.Stmt]) -> bool:
    """Whether control can fall off the end of ``body`` (simplified JLS rule)."""
    for stmt in body:
        if not _stmt_completes(stmt):
            return False
    return True


def _stmt_completes(stmt: A.Stmt) -> bool:
    if isinstance(stmt, (A.Return, A.Throw, A.Break, A.Continue)):
        return False
    if isinstance(stmt, A.Block):
        return can_complete(stmt.body)
    if isinstance(stmt, A.If):
        if stmt.other is None:
            return True
        return can_complete(stmt.then) or can_complete(stmt.other)
    if isinstance(stmt, A.While):
        infinite = isinstance(stmt.cond, A.BoolLit) and stmt.cond.value
        return not infinite or _has_break(stmt.body)
    if isinstance(stmt, A.Try):
        return can_complete(stmt.body) or can_complete(stmt.handler)
    return True


def _has_break(body: list[A.Stmt]) -> bool:
    for stmt in body:
        if isinstance(stmt, A.Break):
            return True
        if isinstance(stmt, (A.While, A.ForCounted, A.ForEach)):
            continue  # a nested break targets the nested loop
        if any(_has_break(b) for b in stmt.child_bodies()):
            return True
    return False


def type_check(program: A.Program) -> CheckResult:
    return Checker(program).check()
