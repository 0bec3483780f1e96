"""Tree-walking evaluator for typechecked MiniLang programs.

Every executed statement, loop test and method call costs one step of fuel.
Control flow (return/break/continue) travels as return values of ``exec_body``
rather than Python exceptions; only subject exceptions, assertion failures,
fuel exhaustion and stack overflow unwind through Python.
"""

from __future__ import annotations

import sys
from typing import Any, Callable, Optional

from nvgen.minilang import ast as A
from nvgen.minilang import types as T
from nvgen.interpreter.probes import ProbeConfig, ProbeEvent
from nvgen.interpreter.values import (
    COLLECTION_CLASSES,
    ListValue,
    MapValue,
    Obj,
    SetValue,
    SubjectException,
    int_div,
    int_mod,
    string_call,
    to_display,
    values_equal,
    wrap32,
)

DEFAULT_FUEL = 1_000_000
MAX_CALL_DEPTH = 150

sys.setrecursionlimit(max(sys.getrecursionlimit(), 20_000))


class FuelExhausted(Exception):
    pass


class StackOverflow(Exception):
    pass


class AssertionFailure(Exception):
    pass


_BREAK = object()
_CONTINUE = object()


class _Return:
    __slots__ = ("value",)

    def __init__(self, value: Any):
        self.value = value


class Frame:
    __slots__ = ("cls", "this", "locals", "name")

    def __init__(self, cls: Optional[A.ClassDecl], this: Optional[Obj], name: str):
        self.cls = cls
        self.this = this
        self.locals: dict[str, Any] = {}
        self.name = name


class Interpreter:
    def __init__(
        self,
        program: A.Program,
        fuel: int = DEFAULT_FUEL,
        probes: Optional[ProbeConfig] = None,
        sink: Optional[Callable[[ProbeEvent], None]] = None,
    ):
        self.program = program
        self.classes = {c.name: c for c in program.classes}
        self.fuel = fuel
        self.steps = 0
        self.probes = probes or ProbeConfig()
        self.sink = sink
        self.covered: set[str] = set()
        self.statics: dict[str, dict[str, Any]] = {}
        self.depth = 0
        self.next_ident = 0
        self._emit_enabled = True

    # ------------------------------------------------------------ bookkeeping

    def tick(self) -> None:
        if self.steps >= self.fuel:
            raise FuelExhausted()
        self.steps += 1

    def emit(self, kind: str, caller, callee, sid, value) -> None:
        if self.sink is not None and self._emit_enabled:
            self.sink(ProbeEvent(kind, caller, callee, sid, value))

    # ------------------------------------------------------------ program state

    def init_statics(self) -> None:
        self._emit_enabled = False
        try:
            for cls in self.program.classes:
                self.statics[cls.name] = {f.name: T.default_value(f.type) for f in cls.fields if f.static}
            for cls in self.program.classes:
                frame = Frame(cls, None, f"{cls.name}.<clinit>")
                for f in cls.fields:
                    if f.static and f.init is not None:
                        self.statics[cls.name][f.name] = self.eval(f.init, frame)
        finally:
            self._emit_enabled = True

    def new_object(self, cls: A.ClassDecl, args: list, caller: Frame) -> Obj:
        self.next_ident += 1
        obj = Obj(cls.name, self.next_ident)
        for f in cls.fields:
            if not f.static:
                obj.fields[f.name] = T.default_value(f.type)
        init_frame = Frame(cls, obj, f"{cls.name}.<init>")
        for f in cls.fields:
            if not f.static and f.init is not None:
                obj.fields[f.name] = self.eval(f.init, init_frame)
        ctor = cls.constructor()
        if ctor is not None:
            self.invoke(cls, ctor, obj, args, caller, "<init>")
        return obj

    # ------------------------------------------------------------ calls

    def invoke(self, cls: A.ClassDecl, meth: A.MethodDecl, this: Optional[Obj], args: list, caller: Frame, label: Optional[str] = None) -> Any:
        self.tick()
        callee = f"{cls.name}.{label or meth.name}"
        if self.depth >= MAX_CALL_DEPTH:
            raise StackOverflow(callee)
        self.depth += 1
        if self.probes.calls:
            self.emit("call", caller.name, callee, None, None)
        frame = Frame(cls, this, callee)
        for p, v in zip(meth.params, args):
            frame.locals[p.name] = v
        try:
            result = self.exec_body(meth.body, frame)
        finally:
            # exceptional exits also close the call so traces stay balanced
            if self.probes.calls:
                self.emit("return", caller.name, callee, None, None)
            self.depth -= 1
        if isinstance(result, _Return):
            return result.value
        return None

    def call(self, e: A.Call, frame: Frame) -> Any:
        target = e.target
        if target is None:
            if frame.cls is None:
                return self.assertion(e, frame)
            meth = frame.cls.method(e.name)
            args = [self.eval(a, frame) for a in e.args]
            return self.invoke(frame.cls, meth, None if meth.static else frame.this, args, frame)
        if isinstance(target, A.Name) and self._is_class_ref(target.id, frame):
            cls = self.classes[target.id]
            args = [self.eval(a, frame) for a in e.args]
            return self.invoke(cls, cls.method(e.name), None, args, frame)
        recv = self.eval(target, frame)
        args = [self.eval(a, frame) for a in e.args]
        if recv is None:
            raise SubjectException(f"NullPointerException: call {e.name} on null")
        if isinstance(recv, Obj):
            cls = self.classes[recv.cls]
            return self.invoke(cls, cls.method(e.name), recv, args, frame)
        if isinstance(recv, str):
            return string_call(recv, e.name, args)
        self.tick()
        if self.probes.builtin_calls:
            callee = f"{recv.impl}.{e.name}"
            self.emit("call", frame.name, callee, None, None)
            try:
                return recv.call(e.name, args)
            finally:
                self.emit("return", frame.name, callee, None, None)
        return recv.call(e.name, args)

    def assertion(self, e: A.Call, frame: Frame) -> None:
        args = [self.eval(a, frame) for a in e.args]
        if e.name == "assertEquals":
            if not values_equal(args[0], args[1]):
                raise AssertionFailure(f"expected {to_display(args[0])} but was {to_display(args[1])}")
        elif e.name == "assertTrue":
            if args[0] is not True:
                raise AssertionFailure("expected true")
        elif e.name == "assertFalse":
            if args[0] is not False:
                raise AssertionFailure("expected false")
        return None

    def _is_class_ref(self, name: str, frame: Frame) -> bool:
        if name in frame.locals:
            return False
        if frame.cls is not None and frame.cls.field(name) is not None:
            return False
        return name in self.classes

    # ------------------------------------------------------------ variables

    def lookup(self, name: str, frame: Frame) -> Any:
        locals_ = frame.locals
        if name in locals_:
            return locals_[name]
        if frame.this is not None and name in frame.this.fields:
            return frame.this.fields[name]
        return self.statics[frame.cls.name][name]

    def store(self, target: A.Expr, value: Any, frame: Frame) -> None:
        if isinstance(target, A.Name):
            name = target.id
            if name in frame.locals:
                frame.locals[name] = value
            elif frame.this is not None and name in frame.this.fields:
                frame.this.fields[name] = value
            else:
                self.statics[frame.cls.name][name] = value
            return
        assert isinstance(target, A.FieldAccess)
        if isinstance(target.target, A.Name) and self._is_class_ref(target.target.id, frame):
            self.statics[target.target.id][target.name] = value
            return
        obj = self.eval(target.target, frame)
        if obj is None:
            raise SubjectException(f"NullPointerException: write field {target.name} of null")
        obj.fields[target.name] = value

    # ------------------------------------------------------------ expressions

    def eval(self, e: A.Expr, frame: Frame) -> Any:
        t = type(e)
        if t is A.IntLit or t is A.BoolLit or t is A.StrLit:
            return e.value
        if t is A.Name:
            return self.lookup(e.id, frame)
        if t is A.Binary:
            return self.binary(e, frame)
        if t is A.FieldAccess:
            if isinstance(e.target, A.Name) and self._is_class_ref(e.target.id, frame):
                return self.statics[e.target.id][e.name]
            obj = self.eval(e.target, frame)
            if obj is None:
                raise SubjectException(f"NullPointerException: read field {e.name} of null")
            return obj.fields[e.name]
        if t is A.Call:
            return self.call(e, frame)
        if t is A.This:
            return frame.this
        if t is A.NullLit:
            return None
        if t is A.Unary:
            v = self.eval(e.operand, frame)
            if e.op == "!":
                return not v
            if e.op == "-":
                return wrap32(-v)
            return ~v
        if t is A.Ternary:
            return self.eval(e.then if self.eval(e.cond, frame) else e.other, frame)
        if t is A.New:
            args = [self.eval(a, frame) for a in e.args]
            factory = COLLECTION_CLASSES.get(e.type.name)
            if factory is not None:
                return factory(e.type.name)
            return self.new_object(self.classes[e.type.name], args, frame)
        raise TypeError(f"unknown expression {e!r}")

    def binary(self, e: A.Binary, frame: Frame) -> Any:
        op = e.op
        if op == "&&":
            return bool(self.eval(e.left, frame)) and bool(self.eval(e.right, frame))
        if op == "||":
            return bool(self.eval(e.left, frame)) or bool(self.eval(e.right, frame))
        return apply_op(op, self.eval(e.left, frame), self.eval(e.right, frame))

    # ------------------------------------------------------------ statements

    def exec_body(self, body: list[A.Stmt], frame: Frame) -> Any:
        declared: list[str] = []
        try:
            for stmt in body:
                if type(stmt) is A.VarDecl:
                    declared.append(stmt.name)
                signal = self.exec(stmt, frame)
                if signal is not None:
                    return signal
            return None
        finally:
            for name in declared:
                frame.locals.pop(name, None)

    def exec(self, s: A.Stmt, frame: Frame) -> Any:
        self.tick()
        self.covered.add(s.sid)
        t = type(s)
        if t is A.Assign:
            if s.op == "=":
                value = self.eval(s.value, frame)
            else:
                value = apply_op(s.op[:-1], self.eval(s.target, frame), self.eval(s.value, frame))
            self.store(s.target, value, frame)
            return None
        if t is A.InvocationStmt:
            self.call(s.call, frame)
            return None
        if t is A.VarDecl:
            frame.locals[s.name] = self.eval(s.init, frame) if s.init is not None else T.default_value(s.type)
            return None
        if t is A.If:
            taken = self.eval(s.cond, frame)
            if self.probes.branches:
                self.emit("branch", frame.name, None, s.sid, 1 if taken else 0)
            if taken:
                return self.exec_body(s.then, frame)
            if s.other is not None:
                return self.exec_body(s.other, frame)
            return None
        if t is A.Return:
            return _Return(None if s.value is None else self.eval(s.value, frame))
        if t is A.ForCounted:
            return self.exec_for(s, frame)
        if t is A.While:
            while True:
                self.tick()
                if not self.eval(s.cond, frame):
                    return None
                signal = self.exec_body(s.body, frame)
                if signal is _BREAK:
                    return None
                if signal is not None and signal is not _CONTINUE:
                    return signal
        if t is A.ForEach:
            coll = self.eval(s.iterable, frame)
            if coll is None:
                raise SubjectException("NullPointerException: iterate over null")
            items = coll.iterate()
            try:
                for item in items:
                    self.tick()
                    frame.locals[s.name] = item
                    signal = self.exec_body(s.body, frame)
                    if signal is _BREAK:
                        return None
                    if signal is not None and signal is not _CONTINUE:
                        return signal
            finally:
                frame.locals.pop(s.name, None)
            return None
        if t is A.Try:
            try:
                return self.exec_body(s.body, frame)
            except SubjectException as exc:
                frame.locals[s.catch_name] = exc.message
                try:
                    return self.exec_body(s.handler, frame)
                finally:
                    frame.locals.pop(s.catch_name, None)
        if t is A.Throw:
            raise SubjectException(self.eval(s.value, frame))
        if t is A.Break:
            return _BREAK
        if t is A.Continue:
            return _CONTINUE
        if t is A.Block:
            return self.exec_body(s.body, frame)
        if t is A.ConstructorCallStmt:
            self.eval(s.new, frame)
            return None
        raise TypeError(f"unknown statement {s!r}")

    def exec_for(self, s: A.ForCounted, frame: Frame) -> Any:
        counter = A.Name(s.counter)
        watch = s.sid in self.probes.loop_index
        value = self.eval(s.init, frame)
        if s.declares:
            frame.locals[s.counter] = value
        else:
            self.store(counter, value, frame)
        if watch:
            self.emit("loopIndex", frame.name, None, s.sid, None)
        try:
            while True:
                self.tick()
                if not self.eval(s.cond, frame):
                    return None
                if watch:
                    self.emit("loopIndex", frame.name, None, s.sid, self.lookup(s.counter, frame))
                signal = self.exec_body(s.body, frame)
                if signal is _BREAK:
                    return None
                if signal is not None and signal is not _CONTINUE:
                    return signal
                self.store(counter, self.eval(s.update, frame), frame)
        finally:
            if s.declares:
                frame.locals.pop(s.counter, None)

    # ------------------------------------------------------------ tests

    def run_test_body(self, test: A.TestDecl) -> None:
        self.init_statics()
        frame = Frame(None, None, f"test:{test.name}")
        self.exec_body(test.body, frame)


def apply_op(op: str, a: Any, b: Any) -> Any:
    if op == "+":
        if isinstance(a, str) or isinstance(b, str) or a is None or b is None:
            return to_display(a) + to_display(b)
        return wrap32(a + b)
    if op == "-":
        return wrap32(a - b)
    if op == "*":
        return wrap32(a * b)
    if op == "/":
        return int_div(a, b)
    if op == "%":
        return int_mod(a, b)
    if op == "==":
        return values_equal(a, b)
    if op == "!=":
        return not values_equal(a, b)
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    if op == "&":
        return (a and b) if isinstance(a, bool) else a & b
    if op == "|":
        return (a or b) if isinstance(a, bool) else a | b
    if op == "^":
        return (a != b) if isinstance(a, bool) else a ^ b
    if op == "<<":
        return wrap32(a << (b & 31))
    if op == ">>":
        return a >> (b & 31)
    if op == ">>>":
        return wrap32((a & 0xFFFFFFFF) >> (b & 31))
    raise ValueError(f"unknown operator {op}")
