"""Symbolic density terms.

A density is built from atoms ``p(x | args)``, products, indexed products
over a plate, reciprocals, integrals and guarded terms ``{P}_c`` whose
factors only count where the predicate ``c`` holds.
"""
from __future__ import annotations

from dataclasses import dataclass

from ..dsl.ast import DistRef, Expr, Index, Name, format_expr, referenced_names, substitute


class Density:
    __slots__ = ()


@dataclass(frozen=True)
class Atom(Density):
    """``p(var[index] | dist)``; ``given`` names the random variables the
    distribution arguments read."""

    var: str
    index: tuple
    dist: DistRef
    given: frozenset = frozenset()

    @property
    def ref(self) -> Expr:
        return Index(self.var, self.index) if self.index else Name(self.var)


@dataclass(frozen=True)
class Product(Density):
    factors: tuple


@dataclass(frozen=True)
class IndexedProduct(Density):
    index: str
    upper: Expr
    body: Density


@dataclass(frozen=True)
class Recip(Density):
    body: Density


@dataclass(frozen=True)
class Integral(Density):
    var: str
    index: tuple
    body: Density


@dataclass(frozen=True)
class Cond:
    """``lhs op rhs`` over integer index expressions; op is ``=``, ``!=``
    or ``<``."""

    lhs: Expr
    op: str
    rhs: Expr

    def negate(self) -> "Cond":
        if self.op == "<":
            raise ValueError("range conditions are never negated")
        return Cond(self.lhs, "!=" if self.op == "=" else "=", self.rhs)


@dataclass(frozen=True)
class Guarded(Density):
    conds: tuple
    body: Density


ONE = Product(())


def children(d: Density) -> tuple:
    if isinstance(d, Product):
        return d.factors
    if isinstance(d, (IndexedProduct, Recip, Integral, Guarded)):
        return (d.body,)
    return ()


def atoms(d: Density):
    if isinstance(d, Atom):
        yield d
    for c in children(d):
        yield from atoms(c)


def node_count(d: Density) -> int:
    return 1 + sum(node_count(c) for c in children(d))


def free_vars(d: Density) -> set:
    """Random variables occurring in ``d``, distribution arguments included."""
    out: set = set()
    for a in atoms(d):
        out.add(a.var)
        out.update(a.given)
    return out


def map_exprs(d: Density, fn) -> Density:
    """Apply ``fn`` to every embedded index/argument expression."""
    if isinstance(d, Atom):
        return Atom(d.var, tuple(fn(e) for e in d.index),
                    DistRef(d.dist.family, tuple(fn(e) for e in d.dist.args)), d.given)
    if isinstance(d, Product):
        return Product(tuple(map_exprs(f, fn) for f in d.factors))
    if isinstance(d, IndexedProduct):
        return IndexedProduct(d.index, fn(d.upper), map_exprs(d.body, fn))
    if isinstance(d, Recip):
        return Recip(map_exprs(d.body, fn))
    if isinstance(d, Integral):
        return Integral(d.var, tuple(fn(e) for e in d.index), map_exprs(d.body, fn))
    if isinstance(d, Guarded):
        return Guarded(tuple(Cond(fn(c.lhs), c.op, fn(c.rhs)) for c in d.conds),
                       map_exprs(d.body, fn))
    raise TypeError(d)


def subst_density(d: Density, mapping: dict) -> Density:
    """Substitute free index names; products rebinding a name shadow it."""
    if not mapping:
        return d
    if isinstance(d, IndexedProduct):
        inner = {k: v for k, v in mapping.items() if k != d.index}
        return IndexedProduct(d.index, substitute(d.upper, mapping), subst_density(d.body, inner))
    if isinstance(d, Product):
        return Product(tuple(subst_density(f, mapping) for f in d.factors))
    if isinstance(d, Atom):
        return map_exprs(d, lambda e: substitute(e, mapping))
    if isinstance(d, Recip):
        return Recip(subst_density(d.body, mapping))
    if isinstance(d, Integral):
        return Integral(d.var, tuple(substitute(e, mapping) for e in d.index),
                        subst_density(d.body, mapping))
    if isinstance(d, Guarded):
        return Guarded(tuple(Cond(substitute(c.lhs, mapping), c.op, substitute(c.rhs, mapping))
                             for c in d.conds), subst_density(d.body, mapping))
    raise TypeError(d)


def expr_names(d: Density) -> set:
    """Every identifier appearing free in ``d``'s expressions."""
    out: set = set()

    def go(x, bound):
        if isinstance(x, Atom):
            for e in x.index + x.dist.args:
                out.update(referenced_names(e, bound))
        elif isinstance(x, IndexedProduct):
            out.update(referenced_names(x.upper, bound))
            go(x.body, bound | {x.index})
        elif isinstance(x, Guarded):
            for c in x.conds:
                out.update(referenced_names(c.lhs, bound))
                out.update(referenced_names(c.rhs, bound))
            go(x.body, bound)
        elif isinstance(x, Integral):
            for e in x.index:
                out.update(referenced_names(e, bound))
            go(x.body, bound)
        else:
            for c in children(x):
                go(c, bound)

    go(d, frozenset())
    return out


# -- canonical text --------------------------------------------------------------

def _ref(var, index) -> str:
    return format_expr(Index(var, tuple(index)) if index else Name(var))


def render(d: Density) -> str:
    """Deterministic one-line rendering used by golden files and ``describe``."""
    if isinstance(d, Atom):
        args = d.dist.args
        return f"{d.dist.family}({_ref(d.var, d.index)} | {', '.join(format_expr(a) for a in args)})"
    if isinstance(d, Product):
        if not d.factors:
            return "1"
        return " * ".join(render(f) for f in d.factors)
    if isinstance(d, IndexedProduct):
        return f"prod[{d.index} < {format_expr(d.upper)}]({render(d.body)})"
    if isinstance(d, Recip):
        return f"1/({render(d.body)})"
    if isinstance(d, Integral):
        return f"int[d {_ref(d.var, d.index)}]({render(d.body)})"
    if isinstance(d, Guarded):
        conds = " & ".join(f"{format_expr(c.lhs)} {c.op} {format_expr(c.rhs)}" for c in d.conds)
        return f"{{{render(d.body)}}}[{conds}]"
    raise TypeError(d)
