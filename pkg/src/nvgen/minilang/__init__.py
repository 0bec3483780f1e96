from nvgen.minilang.parser import MiniSyntaxError, parse, parse_expr, parse_stmt
from nvgen.minilang.printer import expr_str, pretty, stmt_str
from nvgen.minilang.typecheck import CheckResult, type_check

__all__ = [
    "MiniSyntaxError", "parse", "parse_expr", "parse_stmt", "expr_str", "pretty",
    "stmt_str", "CheckResult", "type_check",
]
