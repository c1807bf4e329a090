"""Chain normal form and target-reference analysis.

After normalisation a product is a list of *chains*: nested indexed products
ending in a single, possibly guarded, atom.  The rewrite rules and the
runtime both work on chains.
"""
from __future__ import annotations

from dataclasses import dataclass

from ..dsl.ast import (BinOp, Call, Index, Name, Neg, Num, SumExpr, referenced_names,
                       substitute)
from ..ir.nodes import Atom, Cond, Density, Guarded, IndexedProduct, Product, Recip, Integral

PRIME = "'"


@dataclass(frozen=True)
class Target:
    """An arbitrary element ``var[t0', t1', ...]`` of a random variable."""

    var: str
    symbols: tuple
    uppers: tuple   # plate bounds of the variable, written over the symbols

    @property
    def ref(self):
        return Index(self.var, tuple(Name(s) for s in self.symbols)) if self.symbols else Name(self.var)

    @property
    def index(self) -> tuple:
        return tuple(Name(s) for s in self.symbols)


@dataclass(frozen=True)
class Chain:
    levels: tuple   # ((index, upper), ...) outermost first
    conds: tuple
    atom: Atom

    def to_density(self) -> Density:
        d: Density = Guarded(self.conds, self.atom) if self.conds else self.atom
        for name, upper in reversed(self.levels):
            d = IndexedProduct(name, upper, d)
        return d

    @property
    def level_names(self) -> tuple:
        return tuple(n for n, _ in self.levels)


def to_chains(d: Density, levels=(), conds=()) -> list:
    """Distribute products and guards down to atoms."""
    if isinstance(d, Atom):
        return [Chain(tuple(levels), tuple(conds), d)]
    if isinstance(d, Product):
        out = []
        for f in d.factors:
            out.extend(to_chains(f, levels, conds))
        return out
    if isinstance(d, IndexedProduct):
        return to_chains(d.body, levels + ((d.index, d.upper),), conds)
    if isinstance(d, Guarded):
        merged = tuple(conds) + tuple(c for c in d.conds if c not in conds)
        return to_chains(d.body, levels, merged)
    raise TypeError(f"not a product of atoms: {type(d).__name__}")


def from_chains(chains) -> Density:
    ds = tuple(c.to_density() for c in chains)
    return ds[0] if len(ds) == 1 else Product(ds)


def is_chain_density(d: Density) -> bool:
    return not isinstance(d, (Product, Recip, Integral))


def target_of(joint, var: str) -> Target:
    for ch in to_chains(joint.expr):
        if ch.atom.var == var:
            names = tuple(e.id for e in ch.atom.index)
            syms = tuple(n + PRIME for n in names)
            uppers = dict(ch.levels)
            mapping = {n: Name(s) for n, s in zip(names, syms)}
            return Target(var, syms, tuple(substitute(uppers[n], mapping) for n in names))
    raise KeyError(f"{var} is not a random variable of the model")


# -- references to the target -----------------------------------------------------

@dataclass(frozen=True)
class Ref:
    indices: tuple
    bound: frozenset   # sum indices in scope at the reference


def _refs_in_expr(e, var, bound, out):
    if isinstance(e, Name):
        if e.id == var and e.id not in bound:
            out.append(Ref((), frozenset(bound)))
    elif isinstance(e, Index):
        if e.base == var:
            out.append(Ref(tuple(e.indices), frozenset(bound)))
        for i in e.indices:
            _refs_in_expr(i, var, bound, out)
    elif isinstance(e, BinOp):
        _refs_in_expr(e.left, var, bound, out)
        _refs_in_expr(e.right, var, bound, out)
    elif isinstance(e, Neg):
        _refs_in_expr(e.operand, var, bound, out)
    elif isinstance(e, Call):
        for a in e.args:
            _refs_in_expr(a, var, bound, out)
    elif isinstance(e, SumExpr):
        _refs_in_expr(e.upper, var, bound, out)
        _refs_in_expr(e.body, var, bound | {e.index}, out)


def expr_refs(e, var) -> list:
    out: list = []
    _refs_in_expr(e, var, frozenset(), out)
    return out


def chain_refs(ch: Chain, var: str) -> list:
    out: list = []
    if ch.atom.var == var:
        out.append(Ref(tuple(ch.atom.index), frozenset()))
    for e in ch.atom.index:
        _refs_in_expr(e, var, frozenset(), out)
    for a in ch.atom.dist.args:
        _refs_in_expr(a, var, frozenset(), out)
    for c in ch.conds:
        _refs_in_expr(c.lhs, var, frozenset(), out)
        _refs_in_expr(c.rhs, var, frozenset(), out)
    return out


EQUAL, DISJOINT, UNKNOWN = "equal", "disjoint", "unknown"


def ref_relation(ref: Ref, conds, target: Target):
    """Classify a reference against the target under ``conds``.

    Returns ``(relation, position)`` where position is the first index
    position that is still undecided.
    """
    undecided = None
    for p, sym in enumerate(target.symbols):
        if p >= len(ref.indices):
            # a whole-row reference covers the target; never partitioned
            return UNKNOWN, None
        e = ref.indices[p]
        t = Name(sym)
        if e == t or Cond(t, "=", e) in conds:
            continue
        if Cond(t, "!=", e) in conds:
            return DISJOINT, None
        if undecided is None:
            undecided = p
    if undecided is None:
        return EQUAL, None
    return UNKNOWN, undecided


def dependence(ch: Chain, target: Target) -> str:
    """``equal`` if some reference surely hits the target, ``disjoint`` if
    none can, ``unknown`` otherwise."""
    rels = [ref_relation(r, ch.conds, target)[0] for r in chain_refs(ch, target.var)]
    if EQUAL in rels:
        return EQUAL
    if UNKNOWN in rels:
        return UNKNOWN
    return DISJOINT


def cond_truth(c: Cond):
    """True/False when decidable syntactically, else None."""
    if c.op == "<":
        if isinstance(c.lhs, Num) and isinstance(c.rhs, Num):
            return c.lhs.value < c.rhs.value
        return None
    same = c.lhs == c.rhs
    if same:
        return c.op == "="
    if isinstance(c.lhs, Num) and isinstance(c.rhs, Num):
        return c.op == "!="
    return None


def names_of(e) -> set:
    return referenced_names(e)
