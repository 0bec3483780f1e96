"""Structural queries on typechecked programs.

Everything the transformations need to know about a statement lives here:
where it sits, which variables are visible at it, which variables it reads
or writes from outside itself, and its type signature.
"""

from __future__ import annotations

import copy
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Optional

from nvgen.minilang import ast as A
from nvgen.minilang.ast import INT, STRING, TypeRef
from nvgen.minilang.printer import expr_str
from nvgen.minilang.typecheck import ERR, Checker, Ctx


class UnknownStatement(KeyError):
    pass


@dataclass(frozen=True)
class StmtInfo:
    sid: str
    kind: str
    class_name: str
    method_name: str


@dataclass
class StmtPath:
    """Position of a statement: its host method and the list that holds it."""

    cls: A.ClassDecl
    method: A.MethodDecl
    body: list[A.Stmt]
    index: int
    loop_depth: int

    @property
    def stmt(self) -> A.Stmt:
        return self.body[self.index]


@dataclass(frozen=True)
class Binding:
    name: str
    type: TypeRef
    origin: str  # local | param | field | staticField | this

    def expr(self, class_name: str) -> A.Expr:
        """Expression that reads this variable at the location."""
        if self.origin in ("local", "param"):
            return A.Name(self.name)
        if self.origin == "field":
            return A.FieldAccess(A.This(), self.name)
        if self.origin == "staticField":
            return A.FieldAccess(A.Name(class_name), self.name)
        return A.This()


@dataclass
class Scope:
    bindings: list[Binding]
    class_name: str
    method_name: str
    static: bool
    loop_depth: int = 0
    # every local or parameter name used anywhere in the host method
    method_names: frozenset[str] = frozenset()

    def of_type(self, t: TypeRef) -> list[Binding]:
        return [b for b in self.bindings if b.type == t]

    def names(self) -> set[str]:
        return {b.name for b in self.bindings}

    def locals_dict(self) -> dict[str, TypeRef]:
        return {b.name: b.type for b in self.bindings if b.origin in ("local", "param")}


@dataclass(frozen=True)
class TypeSignature:
    used_var_types: tuple[TypeRef, ...]  # sorted multiset, one entry per distinct free variable
    return_type: Optional[TypeRef]  # None is void

    def type_counts(self) -> Counter:
        return Counter(str(t) for t in self.used_var_types)


# ============================================================
# ENUMERATION AND LOOKUP
# ============================================================


def enumerate_statements(program: A.Program) -> list[StmtInfo]:
    """Pre-order list of every statement in every method, in declaration order."""
    out = []
    for _ci, _mi, cls, meth in A.method_bodies(program):
        for stmt in A.iter_body(meth.body):
            out.append(StmtInfo(stmt.sid, stmt.kind, cls.name, meth.name))
    return out


def _split_sid(sid: str) -> tuple[int, int, int]:
    try:
        ci, mi, k = (int(p) for p in sid.split("/"))
    except ValueError:
        raise UnknownStatement(sid) from None
    return ci, mi, k


def locate(program: A.Program, sid: str) -> StmtPath:
    ci, mi, _k = _split_sid(sid)
    if not (0 <= ci < len(program.classes)) or not (0 <= mi < len(program.classes[ci].methods)):
        raise UnknownStatement(sid)
    cls = program.classes[ci]
    meth = cls.methods[mi]

    def search(body: list[A.Stmt], depth: int) -> Optional[StmtPath]:
        for i, stmt in enumerate(body):
            if stmt.sid == sid:
                return StmtPath(cls, meth, body, i, depth)
            inner = depth + 1 if isinstance(stmt, (A.While, A.ForCounted, A.ForEach)) else depth
            for child in stmt.child_bodies():
                found = search(child, inner)
                if found is not None:
                    return found
        return None

    found = search(meth.body, 0)
    if found is None:
        raise UnknownStatement(sid)
    return found


def statement(program: A.Program, sid: str) -> A.Stmt:
    return locate(program, sid).stmt


# ============================================================
# SCOPE
# ============================================================


def _declared_names(body: list[A.Stmt]) -> set[str]:
    names = set()
    for stmt in A.iter_body(body):
        if isinstance(stmt, A.VarDecl):
            names.add(stmt.name)
        elif isinstance(stmt, A.ForCounted) and stmt.declares:
            names.add(stmt.counter)
        elif isinstance(stmt, A.ForEach):
            names.add(stmt.name)
        elif isinstance(stmt, A.Try):
            names.add(stmt.catch_name)
    return names


def scope_at(program: A.Program, sid: str) -> Scope:
    """Variables visible immediately before statement ``sid``.

    Order: parameters, locals (declaration order), fields (declaration order),
    ``this``. A static method sees static fields only and no ``this``.
    """
    path = locate(program, sid)
    cls, meth = path.cls, path.method
    visible: Optional[list[Binding]] = None

    def walk(body: list[A.Stmt], env: list[Binding]) -> bool:
        nonlocal visible
        env = list(env)
        for stmt in body:
            if stmt.sid == sid:
                visible = env
                return True
            if isinstance(stmt, A.ForCounted):
                inner = env + ([Binding(stmt.counter, INT, "local")] if stmt.declares else [])
                if walk(stmt.body, inner):
                    return True
            elif isinstance(stmt, A.ForEach):
                if walk(stmt.body, env + [Binding(stmt.name, stmt.type, "local")]):
                    return True
            elif isinstance(stmt, A.Try):
                if walk(stmt.body, env):
                    return True
                if walk(stmt.handler, env + [Binding(stmt.catch_name, STRING, "local")]):
                    return True
            else:
                for child in stmt.child_bodies():
                    if walk(child, env):
                        return True
            if isinstance(stmt, A.VarDecl):
                env.append(Binding(stmt.name, stmt.type, "local"))
        return False

    walk(meth.body, [])
    assert visible is not None
    static = meth.static
    bindings = [Binding(p.name, p.type, "param") for p in meth.params]
    bindings += visible
    for f in cls.fields:
        if f.static:
            bindings.append(Binding(f.name, f.type, "staticField"))
        elif not static:
            bindings.append(Binding(f.name, f.type, "field"))
    if not static:
        bindings.append(Binding("this", TypeRef(cls.name), "this"))
    method_names = frozenset({p.name for p in meth.params} | _declared_names(meth.body))
    return Scope(bindings, cls.name, meth.name, static, path.loop_depth, method_names)


def scope_ctx(program: A.Program, scope: Scope, checker: Optional[Checker] = None) -> Ctx:
    cls = program.cls(scope.class_name)
    meth = cls.method(scope.method_name) if cls is not None else None
    if meth is None and cls is not None:
        meth = cls.constructor()
    ret = meth.return_type if meth is not None else None
    return Ctx(cls, scope.static, ret, [scope.locals_dict()], loop_depth=scope.loop_depth)


# ============================================================
# VARIABLE ACCESSES
# ============================================================


@dataclass
class FreeVar:
    key: tuple
    type: TypeRef
    text: str
    written: bool = False
    name_only: bool = False  # must stay a plain identifier (loop counter position)


OnAccess = Callable[[A.Expr, tuple, bool, bool], Optional[A.Expr]]


class AccessWalker:
    """Walks a statement and reports every access to a variable declared outside it.

    ``on_access(expr, key, written, name_only)`` may return a replacement
    expression. Names declared inside the statement are passed through
    ``rename``; references to them follow the rename.
    """

    def __init__(
        self,
        program: A.Program,
        ctx: Ctx,
        on_access: OnAccess,
        rename: Optional[Callable[[str], str]] = None,
    ):
        self.program = program
        self.ctx = ctx
        self.on_access = on_access
        self.rename = rename
        self.bound: list[dict[str, str]] = [{}]

    # -- name classification

    def _bound(self, name: str) -> Optional[str]:
        for frame in reversed(self.bound):
            if name in frame:
                return frame[name]
        return None

    def _bind(self, name: str) -> str:
        new = self.rename(name) if self.rename else name
        self.bound[-1][name] = new
        return new

    def _is_class(self, name: str) -> bool:
        if self._bound(name) is not None or self.ctx.lookup_local(name) is not None:
            return False
        cls = self.ctx.cls
        if cls is not None and cls.field(name) is not None:
            return False
        return self.program.cls(name) is not None

    def key_of(self, e: A.Expr) -> Optional[tuple]:
        if isinstance(e, A.Name):
            if self._bound(e.id) is not None:
                return ("bound", e.id)
            if self.ctx.lookup_local(e.id) is not None:
                return ("var", e.id)
            if self.ctx.cls is not None and self.ctx.cls.field(e.id) is not None:
                return ("field", e.id)
            return None
        if isinstance(e, A.This):
            return ("this",)
        if isinstance(e, A.FieldAccess):
            if isinstance(e.target, A.Name) and self._is_class(e.target.id):
                return ("static", e.target.id, e.name)
            inner = self.key_of(e.target)
            if inner is None:
                return None
            if inner[0] == "bound":
                return ("bound",)
            if inner == ("this",):
                return ("field", e.name)
            return ("path", expr_str(e))
        return None

    # -- expressions

    def expr(self, e: A.Expr, written: bool = False) -> A.Expr:
        key = self.key_of(e)
        if key is not None:
            if key[0] == "bound":
                self._rename_bound(e)
                return e
            repl = self.on_access(e, key, written, False)
            return e if repl is None else repl
        if isinstance(e, A.FieldAccess):
            e.target = self.expr(e.target)
        elif isinstance(e, A.Call):
            if e.target is not None and not (isinstance(e.target, A.Name) and self._is_class(e.target.id)):
                e.target = self.expr(e.target)
            e.args = [self.expr(a) for a in e.args]
        elif isinstance(e, A.New):
            e.args = [self.expr(a) for a in e.args]
        elif isinstance(e, A.Binary):
            e.left = self.expr(e.left)
            e.right = self.expr(e.right)
        elif isinstance(e, A.Unary):
            e.operand = self.expr(e.operand)
        elif isinstance(e, A.Ternary):
            e.cond = self.expr(e.cond)
            e.then = self.expr(e.then)
            e.other = self.expr(e.other)
        return e

    def _rename_bound(self, e: A.Expr) -> None:
        if isinstance(e, A.Name):
            e.id = self._bound(e.id)
        elif isinstance(e, A.FieldAccess):
            self._rename_bound(e.target)

    # -- statements

    def body(self, body: list[A.Stmt]) -> None:
        self.bound.append({})
        for s in body:
            self.stmt(s)
        self.bound.pop()

    def stmt(self, s: A.Stmt) -> None:
        if isinstance(s, A.InvocationStmt):
            s.call = self.expr(s.call)
        elif isinstance(s, A.ConstructorCallStmt):
            s.new = self.expr(s.new)
        elif isinstance(s, A.Assign):
            s.value = self.expr(s.value)
            s.target = self.expr(s.target, written=True)
        elif isinstance(s, A.VarDecl):
            if s.init is not None:
                s.init = self.expr(s.init)
            s.name = self._bind(s.name)
        elif isinstance(s, A.Return):
            if s.value is not None:
                s.value = self.expr(s.value)
        elif isinstance(s, A.Throw):
            s.value = self.expr(s.value)
        elif isinstance(s, A.If):
            s.cond = self.expr(s.cond)
            self.body(s.then)
            if s.other is not None:
                self.body(s.other)
        elif isinstance(s, A.While):
            s.cond = self.expr(s.cond)
            self.body(s.body)
        elif isinstance(s, A.ForCounted):
            self.bound.append({})
            s.init = self.expr(s.init)
            if s.declares:
                s.counter = self._bind(s.counter)
            else:
                s.counter = self._counter_access(s.counter)
            s.cond = self.expr(s.cond)
            s.update = self.expr(s.update)
            self.body(s.body)
            self.bound.pop()
        elif isinstance(s, A.ForEach):
            s.iterable = self.expr(s.iterable)
            self.bound.append({})
            s.name = self._bind(s.name)
            self.body(s.body)
            self.bound.pop()
        elif isinstance(s, A.Try):
            self.body(s.body)
            self.bound.append({})
            s.catch_name = self._bind(s.catch_name)
            self.body(s.handler)
            self.bound.pop()
        elif isinstance(s, A.Block):
            self.body(s.body)

    def _counter_access(self, name: str) -> str:
        probe = A.Name(name)
        key = self.key_of(probe)
        if key is None:
            return name
        if key[0] == "bound":
            return self._bound(name)
        repl = self.on_access(probe, key, True, True)
        if repl is None:
            return name
        assert isinstance(repl, A.Name)
        return repl.id


def qualify_implicit_calls(stmt: A.Stmt, cls: A.ClassDecl) -> A.Stmt:
    """Make implicit receivers explicit (``m()`` -> ``this.m()`` or ``C.m()``), in place."""

    def fix(e: A.Expr) -> None:
        for sub in A.walk_expr(e):
            if isinstance(sub, A.Call) and sub.target is None:
                meth = cls.method(sub.name)
                if meth is not None:
                    sub.target = A.Name(cls.name) if meth.static else A.This()

    for s in A.iter_body([stmt]):
        for e in A.stmt_exprs(s):
            fix(e)
    return stmt


def free_variables(program: A.Program, stmt: A.Stmt, scope: Scope) -> list[FreeVar]:
    """Distinct variables read or written by ``stmt`` but declared outside it."""
    ctx = scope_ctx(program, scope)
    checker = Checker(program)
    found: dict[tuple, FreeVar] = {}

    def record(e: A.Expr, key: tuple, written: bool, name_only: bool) -> None:
        fv = found.get(key)
        if fv is None:
            t = checker.expr_type(e, ctx)
            fv = FreeVar(key, t if t is not None else ERR, expr_str(e))
            found[key] = fv
        fv.written = fv.written or written
        fv.name_only = fv.name_only or name_only
        return None

    AccessWalker(program, ctx, record).stmt(copy.deepcopy(stmt))
    return list(found.values())


# ============================================================
# SIGNATURE AND HISTOGRAM
# ============================================================


def signature_of(program: A.Program, sid: str) -> TypeSignature:
    path = locate(program, sid)
    scope = scope_at(program, sid)
    stmt = qualify_implicit_calls(_copy(path.stmt), path.cls)
    fvs = free_variables(program, stmt, scope)
    types = tuple(sorted((fv.type for fv in fvs), key=str))
    ret: Optional[TypeRef] = None
    if isinstance(stmt, A.Return) and stmt.value is not None:
        ret = Checker(program).expr_type(stmt.value, scope_ctx(program, scope))
    return TypeSignature(types, ret)


def _copy(stmt: A.Stmt) -> A.Stmt:
    return copy.deepcopy(stmt)


def node_type_histogram(program: A.Program) -> dict[str, float]:
    counts = Counter(info.kind for info in enumerate_statements(program))
    total = sum(counts.values())
    if total == 0:
        return {}
    return {kind: counts[kind] / total for kind in A.NODE_KINDS if counts[kind]}
