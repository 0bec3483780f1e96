"""Canonical pretty printer. ``parse(pretty(p))`` is structurally equal to ``p``."""

from __future__ import annotations

from nvgen.minilang import ast as A

_PREC = {
    "||": 1, "&&": 2, "|": 3, "^": 4, "&": 5,
    "==": 6, "!=": 6,
    "<": 7, "<=": 7, ">": 7, ">=": 7,
    "<<": 8, ">>": 8, ">>>": 8,
    "+": 9, "-": 9,
    "*": 10, "/": 10, "%": 10,
}
_TERNARY_PREC = 0
_UNARY_PREC = 11
_ATOM_PREC = 12

INDENT = "  "


def _escape(value: str) -> str:
    return (
        value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t").replace("\r", "\\r")
    )


def _prec(expr: A.Expr) -> int:
    if isinstance(expr, A.Binary):
        return _PREC[expr.op]
    if isinstance(expr, A.Ternary):
        return _TERNARY_PREC
    if isinstance(expr, A.Unary):
        return _UNARY_PREC
    return _ATOM_PREC


def expr_str(expr: A.Expr) -> str:
    if isinstance(expr, A.IntLit):
        return str(expr.value)
    if isinstance(expr, A.BoolLit):
        return "true" if expr.value else "false"
    if isinstance(expr, A.StrLit):
        return f'"{_escape(expr.value)}"'
    if isinstance(expr, A.NullLit):
        return "null"
    if isinstance(expr, A.Name):
        return expr.id
    if isinstance(expr, A.This):
        return "this"
    if isinstance(expr, A.FieldAccess):
        return f"{_postfix_target(expr.target)}.{expr.name}"
    if isinstance(expr, A.Call):
        args = ", ".join(expr_str(a) for a in expr.args)
        if expr.target is None:
            return f"{expr.name}({args})"
        return f"{_postfix_target(expr.target)}.{expr.name}({args})"
    if isinstance(expr, A.New):
        return f"new {expr.type}({', '.join(expr_str(a) for a in expr.args)})"
    if isinstance(expr, A.Binary):
        p = _PREC[expr.op]
        left = _wrap(expr.left, _prec(expr.left) < p)
        right = _wrap(expr.right, _prec(expr.right) <= p)
        return f"{left} {expr.op} {right}"
    if isinstance(expr, A.Unary):
        inner = _wrap(expr.operand, _prec(expr.operand) <= _UNARY_PREC)
        return f"{expr.op}{inner}"
    if isinstance(expr, A.Ternary):
        cond = _wrap(expr.cond, _prec(expr.cond) <= _TERNARY_PREC)
        return f"{cond} ? {expr_str(expr.then)} : {expr_str(expr.other)}"
    raise TypeError(f"unknown expression {expr!r}")


def _wrap(expr: A.Expr, needed: bool) -> str:
    text = expr_str(expr)
    return f"({text})" if needed else text


def _postfix_target(expr: A.Expr) -> str:
    return _wrap(expr, _prec(expr) < _ATOM_PREC)


def stmt_lines(stmt: A.Stmt, depth: int = 0) -> list[str]:
    pad = INDENT * depth
    if isinstance(stmt, A.InvocationStmt):
        return [f"{pad}{expr_str(stmt.call)};"]
    if isinstance(stmt, A.ConstructorCallStmt):
        return [f"{pad}{expr_str(stmt.new)};"]
    if isinstance(stmt, A.Assign):
        return [f"{pad}{expr_str(stmt.target)} {stmt.op} {expr_str(stmt.value)};"]
    if isinstance(stmt, A.VarDecl):
        if stmt.init is None:
            return [f"{pad}{stmt.type} {stmt.name};"]
        return [f"{pad}{stmt.type} {stmt.name} = {expr_str(stmt.init)};"]
    if isinstance(stmt, A.Return):
        if stmt.value is None:
            return [f"{pad}return;"]
        return [f"{pad}return {expr_str(stmt.value)};"]
    if isinstance(stmt, A.Throw):
        return [f"{pad}throw {expr_str(stmt.value)};"]
    if isinstance(stmt, A.Break):
        return [f"{pad}break;"]
    if isinstance(stmt, A.Continue):
        return [f"{pad}continue;"]
    if isinstance(stmt, A.Block):
        return [f"{pad}{{", *body_lines(stmt.body, depth + 1), f"{pad}}}"]
    if isinstance(stmt, A.If):
        lines = [f"{pad}if ({expr_str(stmt.cond)}) {{", *body_lines(stmt.then, depth + 1)]
        other = stmt.other
        while other is not None:
            if len(other) == 1 and isinstance(other[0], A.If):
                nested = other[0]
                lines.append(f"{pad}}} else if ({expr_str(nested.cond)}) {{")
                lines.extend(body_lines(nested.then, depth + 1))
                other = nested.other
            else:
                lines.append(f"{pad}}} else {{")
                lines.extend(body_lines(other, depth + 1))
                other = None
        lines.append(f"{pad}}}")
        return lines
    if isinstance(stmt, A.While):
        return [f"{pad}while ({expr_str(stmt.cond)}) {{", *body_lines(stmt.body, depth + 1), f"{pad}}}"]
    if isinstance(stmt, A.ForCounted):
        decl = "int " if stmt.declares else ""
        head = (
            f"for ({decl}{stmt.counter} = {expr_str(stmt.init)}; {expr_str(stmt.cond)}; "
            f"{stmt.counter} = {expr_str(stmt.update)})"
        )
        return [f"{pad}{head} {{", *body_lines(stmt.body, depth + 1), f"{pad}}}"]
    if isinstance(stmt, A.ForEach):
        head = f"for ({stmt.type} {stmt.name} : {expr_str(stmt.iterable)})"
        return [f"{pad}{head} {{", *body_lines(stmt.body, depth + 1), f"{pad}}}"]
    if isinstance(stmt, A.Try):
        return [
            f"{pad}try {{",
            *body_lines(stmt.body, depth + 1),
            f"{pad}}} catch ({stmt.catch_name}) {{",
            *body_lines(stmt.handler, depth + 1),
            f"{pad}}}",
        ]
    raise TypeError(f"unknown statement {stmt!r}")


def body_lines(body: list[A.Stmt], depth: int) -> list[str]:
    lines: list[str] = []
    for stmt in body:
        lines.extend(stmt_lines(stmt, depth))
    return lines


def stmt_str(stmt: A.Stmt) -> str:
    return "\n".join(stmt_lines(stmt))


def _params(params: list[A.Param]) -> str:
    return ", ".join(f"{p.type} {p.name}" for p in params)


def _ret(t) -> str:
    return "void" if t is None else str(t)


def pretty(program: A.Program) -> str:
    out: list[str] = []
    for iface in program.interfaces:
        out.append(f"interface {iface.name} {{")
        for sig in iface.methods:
            out.append(f"{INDENT}{_ret(sig.return_type)} {sig.name}({_params(sig.params)});")
        out.append("}")
        out.append("")
    for cls in program.classes:
        impl = f" implements {', '.join(cls.interfaces)}" if cls.interfaces else ""
        out.append(f"class {cls.name}{impl} {{")
        for f in cls.fields:
            mods = f.visibility + (" static" if f.static else "")
            init = f" = {expr_str(f.init)}" if f.init is not None else ""
            out.append(f"{INDENT}{mods} {f.type} {f.name}{init};")
        for m in cls.methods:
            if m.constructor:
                out.append(f"{INDENT}{m.visibility} {cls.name}({_params(m.params)}) {{")
            else:
                mods = m.visibility + (" static" if m.static else "")
                out.append(f"{INDENT}{mods} {_ret(m.return_type)} {m.name}({_params(m.params)}) {{")
            out.extend(body_lines(m.body, 2))
            out.append(f"{INDENT}}}")
        out.append("}")
        out.append("")
    for test in program.tests:
        out.append(f"test {test.name} {{")
        out.extend(body_lines(test.body, 1))
        out.append("}")
        out.append("")
    return "\n".join(out)
