"""Reverse the iteration order of counted loops.

A loop ``for (i = i0; i comp iend; i = i op p)`` visits an arithmetic
progression of indices. The flipped loop starts at the last index of that
progression, walks back with the mirrored step, and stops after ``i0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from nvgen.minilang import ast as A
from nvgen.minilang.analysis import locate, scope_at
from nvgen.minilang.printer import expr_str
from nvgen.minilang.types import PURE_COLLECTION_METHODS, collection_interface
from nvgen.transform.base import NotCounted, Variant, clone, finish

_MIRROR = {"<": ">=", "<=": ">=", ">": "<=", ">=": "<="}
_STEP_FOR = {"<": "+", "<=": "+", ">": "-", ">=": "-"}
_HEADER_OPS = {"+", "-", "*"}
_SIZE_METHODS = {"size", "length"}


@dataclass(frozen=True)
class LoopHeader:
    counter: str
    init: A.Expr
    comp: str
    bound: A.Expr
    op: str
    step: int

    def __str__(self) -> str:
        return (
            f"{self.counter} = {expr_str(self.init)}; {self.counter} {self.comp} {expr_str(self.bound)}; "
            f"{self.counter} = {self.counter} {self.op} {self.step}"
        )


# ============================================================
# RECOGNITION
# ============================================================


def header_of(loop: A.ForCounted) -> Optional[LoopHeader]:
    """Canonical header of ``loop``, or None when it does not have the counted form."""
    cond, upd, i = loop.cond, loop.update, loop.counter
    if not (isinstance(cond, A.Binary) and cond.op in _MIRROR):
        return None
    if not (isinstance(cond.left, A.Name) and cond.left.id == i):
        return None
    if not (isinstance(upd, A.Binary) and upd.op in ("+", "-")):
        return None
    if not (isinstance(upd.left, A.Name) and upd.left.id == i):
        return None
    if not (isinstance(upd.right, A.IntLit) and upd.right.value > 0):
        return None
    if _STEP_FOR[cond.op] != upd.op:
        return None
    return LoopHeader(i, loop.init, cond.op, cond.right, upd.op, upd.right.value)


def _header_expr_ok(e: A.Expr) -> bool:
    """Side-effect free integer expression built from literals, variables and sizes."""
    if isinstance(e, (A.IntLit, A.Name, A.This)):
        return True
    if isinstance(e, A.FieldAccess):
        return _header_expr_ok(e.target)
    if isinstance(e, A.Unary):
        return e.op == "-" and _header_expr_ok(e.operand)
    if isinstance(e, A.Binary):
        return e.op in _HEADER_OPS and _header_expr_ok(e.left) and _header_expr_ok(e.right)
    if isinstance(e, A.Call):
        return e.name in _SIZE_METHODS and not e.args and e.target is not None and _header_expr_ok(e.target)
    return False


def _names_in(e: A.Expr) -> set[str]:
    out = set()
    for sub in A.walk_expr(e):
        if isinstance(sub, A.Name):
            out.add(sub.id)
        elif isinstance(sub, A.FieldAccess):
            out.add(sub.name)
    return out


def _written_names(body: list[A.Stmt]) -> set[str]:
    out = set()
    for stmt in A.iter_body(body):
        if isinstance(stmt, A.Assign):
            t = stmt.target
            out.add(t.id if isinstance(t, A.Name) else t.name)
        elif isinstance(stmt, A.ForCounted):
            out.add(stmt.counter)
        elif isinstance(stmt, A.VarDecl):
            out.add(stmt.name)
        elif isinstance(stmt, A.ForEach):
            out.add(stmt.name)
    return out


def _calls_in(body: list[A.Stmt]) -> list[A.Call]:
    out = []
    for stmt in A.iter_body(body):
        for e in A.stmt_exprs(stmt):
            out.extend(sub for sub in A.walk_expr(e) if isinstance(sub, A.Call))
        if isinstance(stmt, A.ConstructorCallStmt) or any(
            isinstance(sub, A.New) for e in A.stmt_exprs(stmt) for sub in A.walk_expr(e)
        ):
            out.append(A.Call(None, "<init>", []))  # constructors run user code
    return out


def _breaks_out(body: list[A.Stmt]) -> bool:
    for stmt in body:
        if isinstance(stmt, A.Break):
            return True
        if isinstance(stmt, (A.While, A.ForCounted, A.ForEach)):
            continue  # a nested break leaves the nested loop only
        if any(_breaks_out(b) for b in stmt.child_bodies()):
            return True
    return False


def _exits_early(body: list[A.Stmt]) -> bool:
    """Break/return/throw that would cut the loop's iteration short."""
    if any(isinstance(s, (A.Return, A.Throw)) for s in A.iter_body(body)):
        return True
    return _breaks_out(body)


def loop_exclusion(program: A.Program, loop: A.ForCounted) -> Optional[str]:
    """Why ``loop`` cannot be flipped safely; None when it can."""
    h = header_of(loop)
    if h is None:
        return "NotCountedForm"
    if not loop.declares:
        origin = {b.name: b.origin for b in scope_at(program, loop.sid).bindings}.get(loop.counter)
        if origin not in ("local", "param"):
            return "CounterNotLocal"
    if not (_header_expr_ok(h.init) and _header_expr_ok(h.bound)):
        return "HeaderNotPure"
    header_names = _names_in(h.init) | _names_in(h.bound)
    if h.counter in header_names:
        return "HeaderUsesCounter"
    written = _written_names(loop.body)
    if h.counter in written:
        return "CounterWritten"
    if header_names & written:
        return "HeaderNotInvariant"
    calls = _calls_in(loop.body)
    if _may_resize(program, loop, h, calls):
        return "HeaderNotInvariant"
    types = _local_types(program, loop)
    if _reads_fields(program, loop, header_names) and any(_is_user_call(program, c, types) for c in calls):
        return "HeaderNotInvariant"
    if _exits_early(loop.body):
        return "EarlyExit"
    return None


def _local_types(program: A.Program, loop: A.ForCounted) -> dict[str, A.TypeRef]:
    types = {b.name: b.type for b in scope_at(program, loop.sid).bindings}
    for stmt in A.iter_body(loop.body):
        if isinstance(stmt, (A.VarDecl, A.ForEach)):
            types[stmt.name] = stmt.type
    return types


def _collection_of(e: Optional[A.Expr], types: dict[str, A.TypeRef]) -> Optional[str]:
    """Collection interface of a variable or field receiver; None when unknown."""
    name = None
    if isinstance(e, A.Name):
        name = e.id
    elif isinstance(e, A.FieldAccess) and isinstance(e.target, A.This):
        name = e.name
    t = types.get(name) if name else None
    return collection_interface(t) if t is not None else None


def _may_resize(program: A.Program, loop: A.ForCounted, h: LoopHeader, calls: list[A.Call]) -> bool:
    """Whether the body may change a collection whose size the header reads.

    Any user call counts (it could reach the collection); a mutating builtin
    call counts unless its receiver is a different kind of collection.
    """
    types = _local_types(program, loop)
    sized = set()
    for e in (h.init, h.bound):
        for sub in A.walk_expr(e):
            if isinstance(sub, A.Call) and sub.name in _SIZE_METHODS:
                t = types.get(sub.target.id) if isinstance(sub.target, A.Name) else None
                if t is not None and t.name == "string":
                    continue  # strings are immutable
                sized.add(_collection_of(sub.target, types))
    if not sized:
        return False
    for c in calls:
        if _is_user_call(program, c, types):
            return True
        if c.name in PURE_COLLECTION_METHODS or c.name in _SIZE_METHODS:
            continue
        kind = _collection_of(c.target, types)
        if kind is None or None in sized or kind in sized:
            return True
    return False


def _reads_fields(program: A.Program, loop: A.ForCounted, header_names: set[str]) -> bool:
    scope = scope_at(program, loop.sid)
    locals_ = {b.name for b in scope.bindings if b.origin in ("local", "param")}
    return bool(header_names - locals_)


def _is_user_call(program: A.Program, call: A.Call, types: Optional[dict] = None) -> bool:
    if call.name == "<init>" or call.target is None:
        return True
    if types is not None:
        if _collection_of(call.target, types) is not None:
            return False
        if isinstance(call.target, A.Name) and getattr(types.get(call.target.id), "name", None) == "string":
            return False
    return any(call.name == m.name for c in program.classes for m in c.methods)


def enumerate_counted_loops(program: A.Program) -> list[tuple[str, LoopHeader]]:
    out = []
    for _ci, _mi, _cls, meth in A.method_bodies(program):
        for stmt in A.iter_body(meth.body):
            if isinstance(stmt, A.ForCounted) and loop_exclusion(program, stmt) is None:
                out.append((stmt.sid, header_of(stmt)))
    return out


# ============================================================
# FLIPPING
# ============================================================


def _literal(e: A.Expr) -> Optional[int]:
    if isinstance(e, A.IntLit):
        return e.value
    if isinstance(e, A.Unary) and e.op == "-" and isinstance(e.operand, A.IntLit):
        return -e.operand.value
    return None


def java_mod(a: int, b: int) -> int:
    r = abs(a) % abs(b)
    return -r if a < 0 else r


def last_index(i0: int, comp: str, iend: int, p: int) -> Optional[int]:
    """Last index of the progression, or None when the loop runs zero times."""
    if comp == "<":
        return iend - (p if java_mod(iend - i0, p) == 0 else java_mod(iend - i0, p)) if iend > i0 else None
    if comp == "<=":
        return iend - java_mod(iend - i0, p) if iend >= i0 else None
    if comp == ">":
        return iend + (p if java_mod(i0 - iend, p) == 0 else java_mod(i0 - iend, p)) if iend < i0 else None
    return iend + java_mod(i0 - iend, p) if iend <= i0 else None


def _bin(op: str, a: A.Expr, b: A.Expr) -> A.Expr:
    return A.Binary(op, a, b)


def _lit(v: int) -> A.Expr:
    return A.int_expr(v)


def start_expression(h: LoopHeader) -> A.Expr:
    """Initial value of the flipped counter."""
    i0, iend, p = _literal(h.init), _literal(h.bound), h.step
    if i0 is not None and iend is not None:
        last = last_index(i0, h.comp, iend, p)
        if last is None:
            last = i0 - p if h.op == "+" else i0 + p
        return _lit(last)
    init, bound = h.init, h.bound
    if p == 1:
        if h.comp == "<":
            return _bin("-", bound, A.IntLit(1))
        if h.comp == ">":
            return _bin("+", bound, A.IntLit(1))
        return bound
    P = A.IntLit(p)
    if h.op == "+":
        span = _bin("-", bound, init)
        residual = _bin("%", span, P)
        if h.comp == "<":
            adjust = A.Ternary(_bin("==", residual, A.IntLit(0)), P, _bin("%", span, P))
            guard = _bin(">", bound, init)
        else:
            adjust = residual
            guard = _bin(">=", bound, init)
        formula = _bin("-", bound, adjust)
        empty = _bin("-", init, P)
    else:
        span = _bin("-", init, bound)
        residual = _bin("%", span, P)
        if h.comp == ">":
            adjust = A.Ternary(_bin("==", residual, A.IntLit(0)), P, _bin("%", span, P))
            guard = _bin("<", bound, init)
        else:
            adjust = residual
            guard = _bin("<=", bound, init)
        formula = _bin("+", bound, adjust)
        empty = _bin("+", init, P)
    # without the guard a zero-iteration loop could run once: Java % keeps the sign
    return A.Ternary(guard, formula, empty)


def flip_loop(program: A.Program, sid: str) -> Variant:
    loop = locate(program, sid).stmt
    if not isinstance(loop, A.ForCounted):
        raise NotCounted(f"{sid} is not a counted loop")
    reason = loop_exclusion(program, loop)
    if reason is not None:
        raise NotCounted(f"{sid}: {reason}", reason)
    h = header_of(loop)
    out = clone(program)
    target = locate(out, sid).stmt
    mirrored_op = "-" if h.op == "+" else "+"
    target.init = start_expression(h)
    target.cond = A.Binary(_MIRROR[h.comp], A.Name(h.counter), h.init)
    target.update = A.Binary(mirrored_op, A.Name(h.counter), A.IntLit(h.step))
    return Variant(
        finish(out), "loopFlip", sid, "ForCounted",
        f"flip loop {sid}: ({h}) -> ({h.counter} = {expr_str(target.init)}; {expr_str(target.cond)}; "
        f"{h.counter} = {expr_str(target.update)})",
        details={"header": str(h)},
    )
