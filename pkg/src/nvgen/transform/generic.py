"""Add, delete and replace a statement, with transplants taken from the same program.

A transplant is a copy of an existing statement. Its free variables are
renamed to variables of the same type visible at the location, each chosen
uniformly at random.
"""

from __future__ import annotations

import copy
import random
from dataclasses import dataclass, field
from typing import Optional

from nvgen.minilang import ast as A
from nvgen.minilang.analysis import (
    AccessWalker,
    Binding,
    FreeVar,
    Scope,
    TypeSignature,
    enumerate_statements,
    free_variables,
    locate,
    qualify_implicit_calls,
    scope_at,
    scope_ctx,
)
from nvgen.minilang.printer import stmt_str
from nvgen.minilang.typecheck import Checker
from nvgen.interpreter.harness import CoverageMap
from nvgen.transform.base import (
    Location,
    NoBinding,
    NoCoveredStatements,
    PreconditionViolated,
    Variant,
    WouldBreakScope,
    clone,
    finish,
    make_location,
    mark_inserted,
)

# Statement kinds that may only be exchanged with a statement of the same kind.
SAME_KIND_ONLY = ("VarDecl", "Return", "Throw")


@dataclass
class Transplant:
    source_sid: str
    stmt: A.Stmt  # copy with implicit receivers made explicit
    source_scope: Scope
    free_vars: list[FreeVar]
    signature: TypeSignature
    source_return: Optional[A.TypeRef]  # return type of the source host method
    private_owners: frozenset = frozenset()  # classes whose private methods it calls
    binding: dict[str, str] = field(default_factory=dict)  # free variable text -> location variable


# ============================================================
# LOCATION
# ============================================================


def select_location(program: A.Program, coverage: CoverageMap, rng: random.Random) -> Location:
    """Uniformly random statement among those covered by at least one test."""
    covered = coverage.covered_statements()
    if not covered:
        raise NoCoveredStatements("no statement is covered by the test suite")
    return make_location(program, rng.choice(covered), coverage)


# ============================================================
# TRANSPLANTS
# ============================================================


def prepare_transplant(program: A.Program, source_sid: str) -> Transplant:
    path = locate(program, source_sid)
    stmt = qualify_implicit_calls(copy.deepcopy(path.stmt), path.cls)
    scope = scope_at(program, source_sid)
    fvs = free_variables(program, stmt, scope)
    ret = None
    if isinstance(stmt, A.Return) and stmt.value is not None:
        ret = path.method.return_type
    sig = TypeSignature(tuple(sorted((fv.type for fv in fvs), key=str)), ret)
    t = Transplant(source_sid, stmt, scope, fvs, sig, path.method.return_type)
    t.private_owners = frozenset(_private_owners(program, t))
    return t


def prepare_all(program: A.Program) -> list[Transplant]:
    return [prepare_transplant(program, info.sid) for info in enumerate_statements(program)]


def binding_candidates(fv: FreeVar, scope: Scope) -> list[Binding]:
    """Location variables a free variable may be renamed to."""
    out = []
    for b in scope.of_type(fv.type):
        if fv.written and b.origin == "this":
            continue
        if fv.name_only and b.origin not in ("local", "param"):
            continue
        out.append(b)
    return out


def _has_loose_jump(body: list[A.Stmt]) -> bool:
    """A break/continue that would escape ``body`` (not enclosed by a loop inside it)."""
    for stmt in body:
        if isinstance(stmt, (A.Break, A.Continue)):
            return True
        if isinstance(stmt, (A.While, A.ForCounted, A.ForEach)):
            continue
        if any(_has_loose_jump(b) for b in stmt.child_bodies()):
            return True
    return False


def _contains_return(stmt: A.Stmt) -> bool:
    return any(isinstance(s, A.Return) for s in A.iter_body([stmt]))


class _PrivateAccessRecorder(Checker):
    def __init__(self, program: A.Program):
        super().__init__(program)
        self.owners: set[str] = set()

    def _accessible(self, owner, visibility, ctx, member="field") -> bool:
        # fields are free variables and get rebound; only calls keep their target
        if visibility == "private" and member != "field":
            self.owners.add(owner.name)
        return True


def _private_owners(program: A.Program, t: Transplant) -> set[str]:
    """Classes whose private methods or constructors the transplant calls."""
    rec = _PrivateAccessRecorder(program)
    ctx = scope_ctx(program, t.source_scope)
    rec.check_stmt(copy.deepcopy(t.stmt), ctx)
    return rec.owners


def _host_return(program: A.Program, location: Location) -> Optional[A.TypeRef]:
    return locate(program, location.sid).method.return_type


def incompatibility(program: A.Program, location: Location, t: Transplant, mode: str) -> Optional[str]:
    """Why ``t`` cannot be used at ``location`` in ``mode`` (add | replace); None if it can."""
    kind = t.stmt.kind
    if mode == "replace" and t.source_sid == location.sid:
        return "SelfReplacement"
    if (kind in SAME_KIND_ONLY or location.kind in SAME_KIND_ONLY) and kind != location.kind:
        return "KindMismatch"
    if _contains_return(t.stmt) and t.source_return != _host_return(program, location):
        return "ReturnTypeMismatch"
    for fv in t.free_vars:
        if not binding_candidates(fv, location.scope):
            return "NoCompatibleVariable"
    if location.scope.loop_depth == 0 and _has_loose_jump([t.stmt]):
        return "JumpOutsideLoop"
    if t.private_owners - {location.host_class}:
        return "PrivateAccess"
    return None


def find_compatible_transplants(
    program: A.Program,
    location: Location,
    mode: str = "add",
    prepared: Optional[list[Transplant]] = None,
) -> list[str]:
    """Source statement ids usable as transplants at ``location``, in enumeration order."""
    if prepared is None:
        prepared = prepare_all(program)
    return [t.source_sid for t in prepared if incompatibility(program, location, t, mode) is None]


def bind_transplant(
    program: A.Program,
    t: Transplant,
    location: Location,
    rng: random.Random,
    declared_name: Optional[str] = None,
) -> tuple[A.Stmt, int]:
    """Rename the transplant's free variables into the location scope.

    Returns the renamed statement and the number of distinct renamings that
    were possible. Names declared inside the transplant are made fresh for the
    host method; ``declared_name`` forces the name of a top-level declaration.
    """
    scope = location.scope
    chosen: dict[tuple, Binding] = {}
    count = 1
    for fv in t.free_vars:
        cands = binding_candidates(fv, scope)
        if not cands:
            raise NoBinding(f"no variable of type {fv.type} for {fv.text}")
        count *= len(cands)
        chosen[fv.key] = rng.choice(cands)
    t.binding = {fv.text: chosen[fv.key].name for fv in t.free_vars}

    taken = set(scope.method_names) | scope.names()
    top = t.stmt

    def fresh(name: str) -> str:
        if declared_name is not None and top_decl[0]:
            top_decl[0] = False
            return declared_name
        new, k = name, 0
        while new in taken:
            k += 1
            new = f"{name}_{k}"
        taken.add(new)
        return new

    top_decl = [isinstance(top, A.VarDecl)]

    def replace(expr: A.Expr, key: tuple, written: bool, name_only: bool) -> A.Expr:
        return chosen[key].expr(scope.class_name)

    stmt = copy.deepcopy(t.stmt)
    ctx = scope_ctx(program, t.source_scope)
    AccessWalker(program, ctx, replace, rename=fresh).stmt(stmt)
    return stmt, count


# ============================================================
# APPLICATION
# ============================================================


def _variant_path(variant_program: A.Program, sid: str):
    return locate(variant_program, sid)


def apply_add(program: A.Program, location: Location, stmt: A.Stmt, source_sid: str = "") -> Variant:
    """Insert ``stmt`` immediately before the location statement."""
    out = clone(program)
    path = _variant_path(out, location.sid)
    path.body.insert(path.index, mark_inserted(copy.deepcopy(stmt), location.sid))
    return Variant(
        finish(out), "add", location.sid, stmt.kind,
        f"add before {location.sid}: {stmt_str(stmt)}", transplant=source_sid or None,
    )


def _used_after(body: list[A.Stmt], index: int, name: str) -> bool:
    for stmt in A.iter_body(body[index + 1:]):
        for e in A.stmt_exprs(stmt):
            for sub in A.walk_expr(e):
                if isinstance(sub, A.Name) and sub.id == name:
                    return True
        if isinstance(stmt, A.ForCounted) and not stmt.declares and stmt.counter == name:
            return True
    return False


def apply_delete(program: A.Program, location: Location) -> Variant:
    """Remove the location statement and its subtree."""
    out = clone(program)
    path = _variant_path(out, location.sid)
    target = path.stmt
    if isinstance(target, A.VarDecl) and _used_after(path.body, path.index, target.name):
        raise WouldBreakScope(f"{target.name!r} is used after its declaration")
    del path.body[path.index]
    return Variant(finish(out), "delete", location.sid, location.kind, f"delete {location.sid}: {stmt_str(target)}")


def apply_replace(program: A.Program, location: Location, stmt: A.Stmt, source_sid: str) -> Variant:
    """Swap the location statement for ``stmt``."""
    if source_sid == location.sid:
        raise PreconditionViolated("a statement cannot be replaced by itself", "SelfReplacement")
    if (stmt.kind in SAME_KIND_ONLY or location.kind in SAME_KIND_ONLY) and stmt.kind != location.kind:
        raise PreconditionViolated(f"{location.kind} can only be replaced by {location.kind}", "KindMismatch")
    out = clone(program)
    path = _variant_path(out, location.sid)
    if isinstance(stmt, A.Return) and isinstance(path.stmt, A.Return):
        checker = Checker(program)
        ret = path.method.return_type
        new_t = None if stmt.value is None else checker.expr_type(stmt.value, scope_ctx(program, location.scope))
        if (new_t is None) != (ret is None) or (ret is not None and not checker.assignable(new_t, ret)):
            raise PreconditionViolated("return types differ", "ReturnTypeMismatch")
    old = path.stmt
    if stmt == old:
        raise PreconditionViolated("the bound transplant equals the replaced statement", "SelfReplacement")
    path.body[path.index] = mark_inserted(copy.deepcopy(stmt), location.sid)
    return Variant(
        finish(out), "replace", location.sid, location.kind,
        f"replace {location.sid}: {stmt_str(old)} -> {stmt_str(stmt)}", transplant=source_sid,
    )


def synthesize(
    program: A.Program,
    coverage: CoverageMap,
    kind: str,
    rng: random.Random,
    location: Optional[Location] = None,
    prepared: Optional[list[Transplant]] = None,
) -> Variant:
    """One random add/delete/replace attempt; raises NotApplicable when nothing fits."""
    if location is None:
        location = select_location(program, coverage, rng)
    if kind == "delete":
        return apply_delete(program, location)
    mode = "replace" if kind == "replace" else "add"
    sources = find_compatible_transplants(program, location, mode, prepared)
    if not sources:
        raise PreconditionViolated(f"no compatible transplant for {location.sid}", "NoTransplant")
    source = rng.choice(sources)
    t = copy.copy(next(p for p in prepared if p.source_sid == source)) if prepared else prepare_transplant(program, source)
    declared = None
    if mode == "replace" and isinstance(t.stmt, A.VarDecl):
        declared = locate(program, location.sid).stmt.name
    stmt, count = bind_transplant(program, t, location, rng, declared)
    if mode == "replace":
        v = apply_replace(program, location, stmt, source)
    else:
        v = apply_add(program, location, stmt, source)
    v.details.update({"rewritingCount": count, "binding": dict(t.binding), "candidates": len(sources)})
    return v
