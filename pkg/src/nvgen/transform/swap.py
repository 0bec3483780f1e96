"""Replace the class instantiated for an interface-typed variable by another implementation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from nvgen.minilang import ast as A
from nvgen.minilang import types as T
from nvgen.minilang.analysis import locate, scope_at, scope_ctx
from nvgen.minilang.typecheck import Checker
from nvgen.transform.base import NotInRegistry, PreconditionViolated, Variant, clone, finish

BUILTIN_REGISTRY = {
    "List": ["ArrayListImpl", "LinkedListImpl"],
    "Set": ["HashSetImpl", "TreeSetImpl"],
    "Map": ["HashMapImpl", "LinkedMapImpl", "TreeMapImpl"],
}


def _zero_arg(cls: A.ClassDecl) -> bool:
    ctor = cls.constructor()
    return ctor is None or (not ctor.params and ctor.visibility == "public")


@dataclass
class SwapRegistry:
    interfaces: dict[str, list[str]] = field(default_factory=dict)

    @classmethod
    def for_program(cls, program: A.Program, extra: Optional[dict[str, list[str]]] = None) -> "SwapRegistry":
        """Builtin collections plus user classes implementing user interfaces."""
        reg = {k: list(v) for k, v in BUILTIN_REGISTRY.items()}
        for iface in program.interfaces:
            impls = [c.name for c in program.classes if iface.name in c.interfaces and _zero_arg(c)]
            if impls:
                reg[iface.name] = impls
        for iface, impls in (extra or {}).items():
            for name in impls:
                c = program.cls(name)
                if c is None or iface not in c.interfaces or not _zero_arg(c):
                    raise ValueError(f"{name} is not a 0-arg implementation of {iface}")
                reg.setdefault(iface, [])
                if name not in reg[iface]:
                    reg[iface].append(name)
        return cls(reg)

    @staticmethod
    def load_extension(path: str | Path) -> dict[str, list[str]]:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, dict) or not all(isinstance(v, list) for v in data.values()):
            raise ValueError("swap registry must map interface names to lists of class names")
        return data

    def alternatives(self, iface: str, current: str) -> list[str]:
        return [c for c in self.interfaces.get(iface, []) if c != current]


@dataclass(frozen=True)
class SwapCandidate:
    sid: str
    interface: str
    current: str


def _new_of(stmt: A.Stmt) -> Optional[A.New]:
    if isinstance(stmt, A.VarDecl) and isinstance(stmt.init, A.New):
        return stmt.init
    if isinstance(stmt, A.Assign) and stmt.op == "=" and isinstance(stmt.value, A.New):
        return stmt.value
    return None


def _interface_name(program: A.Program, t: Optional[A.TypeRef]) -> Optional[str]:
    if t is None:
        return None
    if t.name in T.COLLECTION_INTERFACES or program.interface(t.name) is not None:
        return t.name
    return None


def enumerate_swap_candidates(program: A.Program) -> list[SwapCandidate]:
    """Declarations/assignments storing ``new C(...)`` into an interface-typed variable."""
    out = []
    for _ci, _mi, _cls, meth in A.method_bodies(program):
        for stmt in A.iter_body(meth.body):
            new = _new_of(stmt)
            if new is None:
                continue
            if isinstance(stmt, A.VarDecl):
                lhs = stmt.type
            else:
                ctx = scope_ctx(program, scope_at(program, stmt.sid))
                lhs = Checker(program).expr_type(stmt.target, ctx)
            iface = _interface_name(program, lhs)
            if iface is not None:
                out.append(SwapCandidate(stmt.sid, iface, new.type.name))
    return out


def apply_swap_subtype(
    program: A.Program, candidate: SwapCandidate, target_class: str, registry: SwapRegistry
) -> Variant:
    if target_class == candidate.current:
        raise PreconditionViolated("swap to the same class", "SameClass")
    if target_class not in registry.interfaces.get(candidate.interface, []):
        raise NotInRegistry(f"{target_class} is not a registered implementation of {candidate.interface}")
    out = clone(program)
    path = locate(out, candidate.sid)
    new = _new_of(path.stmt)
    if new.args and target_class not in T.COLLECTION_IMPLS:
        raise PreconditionViolated("replacement constructor takes no arguments", "ConstructorMismatch")
    new.type = A.TypeRef(target_class, new.type.args)
    return Variant(
        finish(out), "swapSubtype", candidate.sid, path.stmt.kind,
        f"swap {candidate.current} -> {target_class} at {candidate.sid}",
        details={"interface": candidate.interface, "from": candidate.current, "to": target_class},
    )
