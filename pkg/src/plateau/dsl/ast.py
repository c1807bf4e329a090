"""Syntax tree for the model language.

Nodes are frozen dataclasses so that structural equality and hashing come for
free; source positions are carried outside the comparison.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class Num(Expr):
    value: Union[int, float]

    def __repr__(self):
        return f"Num({self.value!r})"


@dataclass(frozen=True)
class Name(Expr):
    id: str

    def __repr__(self):
        return f"Name({self.id})"


@dataclass(frozen=True)
class Index(Expr):
    base: str
    indices: tuple

    def __repr__(self):
        return f"Index({self.base}, {list(self.indices)})"


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr


@dataclass(frozen=True)
class Call(Expr):
    func: str
    args: tuple


@dataclass(frozen=True)
class SumExpr(Expr):
    """``sum(j in 0..upper, body)``"""
    index: str
    upper: Expr
    body: Expr


BUILTINS = {"vector": 2, "pow": 2, "max": 2, "min": 2, "exp": 1, "log": 1, "sqrt": 1}


@dataclass(frozen=True)
class DistRef:
    family: str
    args: tuple


@dataclass(frozen=True)
class Loop:
    index: str
    upper: Expr


@dataclass(frozen=True)
class Param:
    name: str
    type: str  # int | real | int[] | real[]


@dataclass(frozen=True)
class Decl:
    name: str
    kind: str                          # "random" | "deterministic"
    loops: tuple = ()                  # enclosing Loop nodes, outermost first
    dist: Optional[DistRef] = None
    sample_count: Optional[Expr] = None  # the n in .sample(n)
    expr: Optional[Expr] = None        # deterministic value
    line: int = field(default=0, compare=False)

    @property
    def is_random(self) -> bool:
        return self.kind == "random"


@dataclass(frozen=True)
class ModelAST:
    name: Optional[str]
    hyperparams: tuple
    decls: tuple
    observed: tuple

    @property
    def observed_set(self) -> frozenset:
        return frozenset(self.observed)

    def decl(self, name: str) -> Decl:
        for d in self.decls:
            if d.name == name:
                return d
        raise KeyError(name)

    @property
    def random_decls(self) -> tuple:
        return tuple(d for d in self.decls if d.is_random)


def walk(expr):
    """Pre-order traversal of an expression."""
    yield expr
    if isinstance(expr, Index):
        for e in expr.indices:
            yield from walk(e)
    elif isinstance(expr, BinOp):
        yield from walk(expr.left)
        yield from walk(expr.right)
    elif isinstance(expr, Neg):
        yield from walk(expr.operand)
    elif isinstance(expr, Call):
        for e in expr.args:
            yield from walk(e)
    elif isinstance(expr, SumExpr):
        yield from walk(expr.upper)
        yield from walk(expr.body)


def referenced_names(expr, bound=frozenset()) -> set:
    """Free identifiers of ``expr`` (array bases included)."""
    out: set = set()

    def go(e, bound):
        if isinstance(e, Name):
            if e.id not in bound:
                out.add(e.id)
        elif isinstance(e, Index):
            if e.base not in bound:
                out.add(e.base)
            for i in e.indices:
                go(i, bound)
        elif isinstance(e, BinOp):
            go(e.left, bound)
            go(e.right, bound)
        elif isinstance(e, Neg):
            go(e.operand, bound)
        elif isinstance(e, Call):
            for a in e.args:
                go(a, bound)
        elif isinstance(e, SumExpr):
            go(e.upper, bound)
            go(e.body, bound | {e.index})

    go(expr, frozenset(bound))
    return out


def substitute(expr, mapping: dict):
    """Replace free ``Name`` nodes according to ``mapping`` (name -> Expr)."""
    if not mapping:
        return expr
    if isinstance(expr, Name):
        return mapping.get(expr.id, expr)
    if isinstance(expr, Num):
        return expr
    if isinstance(expr, Index):
        return Index(expr.base, tuple(substitute(i, mapping) for i in expr.indices))
    if isinstance(expr, BinOp):
        return BinOp(expr.op, substitute(expr.left, mapping), substitute(expr.right, mapping))
    if isinstance(expr, Neg):
        return Neg(substitute(expr.operand, mapping))
    if isinstance(expr, Call):
        return Call(expr.func, tuple(substitute(a, mapping) for a in expr.args))
    if isinstance(expr, SumExpr):
        inner = {k: v for k, v in mapping.items() if k != expr.index}
        return SumExpr(expr.index, substitute(expr.upper, mapping), substitute(expr.body, inner))
    raise TypeError(f"not an expression: {expr!r}")


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def format_expr(e, prec: int = 0) -> str:
    """Source-level rendering that reparses to the same tree."""
    if isinstance(e, Num):
        v = e.value
        if isinstance(v, float):
            return repr(v)
        return str(v)
    if isinstance(e, Name):
        return e.id
    if isinstance(e, Index):
        return e.base + "".join(f"[{format_expr(i)}]" for i in e.indices)
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        s = f"{format_expr(e.left, p)} {e.op} {format_expr(e.right, p + 1)}"
        return f"({s})" if p < prec else s
    if isinstance(e, Neg):
        return f"-{format_expr(e.operand, 3)}"
    if isinstance(e, Call):
        return f"{e.func}({', '.join(format_expr(a) for a in e.args)})"
    if isinstance(e, SumExpr):
        return f"sum({e.index} in 0..{format_expr(e.upper)}, {format_expr(e.body)})"
    raise TypeError(f"not an expression: {e!r}")
