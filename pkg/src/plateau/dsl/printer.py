"""Pretty-printer producing source that reparses to an equal ``ModelAST``."""
from __future__ import annotations

from .ast import ModelAST, format_expr


def to_source(ast: ModelAST) -> str:
    params = ", ".join(f"{p.name}: {p.type}" for p in ast.hyperparams)
    head = f"model {ast.name}" if ast.name else "model"
    lines = [f"{head}({params}) {{"]
    open_loops: tuple = ()
    for d in ast.decls:
        # close loops that are not a prefix of this declaration's context
        keep = 0
        while (keep < len(open_loops) and keep < len(d.loops)
               and open_loops[keep] == d.loops[keep]):
            keep += 1
        for depth in range(len(open_loops), keep, -1):
            lines.append("  " * depth + "}")
        for depth in range(keep, len(d.loops)):
            lp = d.loops[depth]
            lines.append("  " * (depth + 1) + f"for {lp.index} in 0..{format_expr(lp.upper)} {{")
        open_loops = d.loops
        pad = "  " * (len(d.loops) + 1)
        lhs = d.name + "".join(f"[{lp.index}]" for lp in d.loops)
        if d.is_random:
            args = ", ".join(format_expr(a) for a in d.dist.args)
            count = format_expr(d.sample_count) if d.sample_count is not None else ""
            lines.append(f"{pad}{lhs} = {d.dist.family}({args}).sample({count})")
        else:
            lines.append(f"{pad}{lhs} = {format_expr(d.expr)}")
    for depth in range(len(open_loops), 0, -1):
        lines.append("  " * depth + "}")
    if ast.observed:
        lines.append(f"  observe({', '.join(ast.observed)})")
    lines.append("}")
    return "\n".join(lines) + "\n"
