"""Lowering a checked model to its joint density."""
from __future__ import annotations

from dataclasses import dataclass

from ..dsl.ast import (BinOp, Call, DistRef, Index, Name, Neg, SumExpr, referenced_names,
                       substitute)
from ..dsl.check import CheckedModel
from .nodes import Atom, Density, IndexedProduct, Product


@dataclass(frozen=True)
class JointDensity:
    expr: Density
    var_order: tuple
    random: frozenset


def _inliner(model: CheckedModel):
    randoms = set(model.vars)
    inline_consts = {}
    for name, d in model.consts.items():
        if referenced_names(d.expr) & (randoms | set(inline_consts) | set(model.locals)):
            inline_consts[name] = d

    def inline(e):
        changed = True
        while changed:
            changed = False
            e2 = _inline_once(e, model.locals, inline_consts)
            if e2 != e:
                e, changed = e2, True
        return e

    return inline


def _inline_once(e, locals_, consts):
    if isinstance(e, Name) and e.id in consts:
        return consts[e.id].expr
    if isinstance(e, Index) and e.base in locals_:
        d = locals_[e.base]
        mapping = {lp.index: ix for lp, ix in zip(d.loops, e.indices)}
        body = substitute(d.expr, mapping)
        if len(e.indices) != len(d.loops):
            raise ValueError(f"cannot inline partially indexed {e.base}")
        return body
    if isinstance(e, Index):
        return Index(e.base, tuple(_inline_once(i, locals_, consts) for i in e.indices))
    if isinstance(e, BinOp):
        return BinOp(e.op, _inline_once(e.left, locals_, consts), _inline_once(e.right, locals_, consts))
    if isinstance(e, Neg):
        return Neg(_inline_once(e.operand, locals_, consts))
    if isinstance(e, Call):
        return Call(e.func, tuple(_inline_once(a, locals_, consts) for a in e.args))
    if isinstance(e, SumExpr):
        return SumExpr(e.index, _inline_once(e.upper, locals_, consts),
                       _inline_once(e.body, locals_, consts))
    return e


def atom_for(model: CheckedModel, name: str, inline=None) -> Atom:
    inline = inline or _inliner(model)
    v = model.vars[name]
    args = tuple(inline(a) for a in v.decl.dist.args)
    given = set()
    for a in args:
        given |= referenced_names(a) & set(model.vars)
    return Atom(name, tuple(Name(lp.index) for lp in v.dims),
                DistRef(v.family, args), frozenset(given))


def lower(model: CheckedModel) -> JointDensity:
    """One factor per random declaration, plates kept as indexed products.

    Consecutive declarations sharing a loop context share the loop's
    products, mirroring the source layout.
    """
    inline = _inliner(model)
    groups: list = []
    for name, v in model.vars.items():
        loops = v.decl.loops
        atom = atom_for(model, name, inline)
        term: Density = atom
        for lp in reversed(v.dims[len(loops):]):
            term = IndexedProduct(lp.index, lp.upper, term)
        if groups and loops and groups[-1][0] == loops:
            groups[-1][1].append(term)
        else:
            groups.append((loops, [term]))
    factors = []
    for loops, terms in groups:
        body = terms[0] if len(terms) == 1 else Product(tuple(terms))
        for lp in reversed(loops):
            body = IndexedProduct(lp.index, lp.upper, body)
        factors.append(body)
    return JointDensity(Product(tuple(factors)), model.var_order, frozenset(model.vars))
