"""Insert a call to an existing method before a statement.

The call is wrapped in a catch-all ``try`` so that exceptions raised by the
callee cannot escape, and a non-void result is stored in a synthesized public
"well" field so the call has an observable sink.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

from nvgen.minilang import ast as A
from nvgen.minilang.analysis import Binding, Scope, locate
from nvgen.minilang.printer import stmt_str
from nvgen.transform.base import (
    Location,
    NoArgBinding,
    NoReceiver,
    Variant,
    clone,
    finish,
    mark_inserted,
)

DEFAULT_CAP = 10
WELL_PREFIX = "__well_"


@dataclass(frozen=True)
class MethodRef:
    class_name: str
    name: str
    static: bool
    param_types: tuple[A.TypeRef, ...]
    return_type: Optional[A.TypeRef]
    internal: bool  # declared in the location's own class

    @property
    def qualified_name(self) -> str:
        return f"{self.class_name}.{self.name}"


@dataclass
class MethodCandidateSet:
    location: Location
    candidates: list[MethodRef]


def receivers(ref: MethodRef, scope: Scope) -> list[Binding]:
    """In-scope variables whose static type is the method's declaring class."""
    if ref.static:
        return []
    want = A.TypeRef(ref.class_name)
    return [b for b in scope.bindings if b.type == want]


def accessible_methods(program: A.Program, location: Location) -> MethodCandidateSet:
    """Methods callable at ``location``: visible, with a receiver and bindable arguments."""
    scope = location.scope
    out = []
    for cls in program.classes:
        internal = cls.name == location.host_class
        for m in cls.methods:
            if m.constructor:
                continue
            if internal and m.name == location.host_method:
                continue  # calling the host method would recurse
            if m.visibility != "public" and not internal:
                continue
            ref = MethodRef(cls.name, m.name, m.static, tuple(p.type for p in m.params), m.return_type, internal)
            if not m.static and not receivers(ref, scope):
                continue
            if any(not scope.of_type(t) for t in ref.param_types):
                continue
            out.append(ref)
    return MethodCandidateSet(location, out)


def sample_methods(cands: MethodCandidateSet, rng: random.Random, cap: int = DEFAULT_CAP) -> list[MethodRef]:
    """Up to ``cap`` distinct candidates, uniformly without replacement, in candidate order."""
    pool = cands.candidates
    if len(pool) <= cap:
        return list(pool)
    picked = set(rng.sample(range(len(pool)), cap))
    return [m for i, m in enumerate(pool) if i in picked]


def _fresh(base: str, taken: set[str]) -> str:
    name, k = base, 0
    while name in taken:
        k += 1
        name = f"{base}_{k}"
    return name


def apply_add_method_invocation(
    program: A.Program, location: Location, ref: MethodRef, rng: random.Random
) -> Variant:
    scope = location.scope
    if ref.static:
        target: A.Expr = A.Name(ref.class_name)
        receiver_name = ref.class_name
    else:
        recvs = receivers(ref, scope)
        if not recvs:
            raise NoReceiver(f"no receiver of type {ref.class_name} at {location.sid}")
        recv = rng.choice(recvs)
        target = recv.expr(scope.class_name)
        receiver_name = recv.name
    args = []
    for t in ref.param_types:
        cands = scope.of_type(t)
        if not cands:
            raise NoArgBinding(f"no argument of type {t} at {location.sid}")
        args.append(rng.choice(cands).expr(scope.class_name))
    call = A.Call(target, ref.name, args)

    out = clone(program)
    host = out.cls(location.host_class)
    well = None
    if ref.return_type is not None:
        taken = {f.name for f in host.fields}
        k = 0
        while f"{WELL_PREFIX}{k}" in taken:
            k += 1
        well = f"{WELL_PREFIX}{k}"
        host.fields.append(
            A.FieldDecl(well, ref.return_type, static=location.static, visibility="public", init=None)
        )
        owner: A.Expr = A.Name(host.name) if location.static else A.This()
        inner: A.Stmt = A.Assign(A.FieldAccess(owner, well), "=", call)
    else:
        inner = A.InvocationStmt(call)
    catch = _fresh("e", set(scope.method_names) | scope.names())
    wrapper = A.Try([inner], catch, [])

    path = locate(out, location.sid)
    host_label = f"{host.name}.<init>" if path.method.constructor else f"{host.name}.{path.method.name}"
    path.body.insert(path.index, mark_inserted(wrapper, location.sid))
    return Variant(
        finish(out), "ami", location.sid, location.kind,
        f"invoke {ref.qualified_name} before {location.sid}: {stmt_str(inner)}",
        details={
            "method": ref.qualified_name,
            "host": host_label,
            "receiver": receiver_name,
            "well": well,
            "static": ref.static,
        },
    )
