"""The four rewrite rules and the driver that derives a full conditional.

An expression under rewriting is a product whose factors are chains,
reciprocals of chains, or the reciprocal of one integral over the target.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from ..dsl.ast import Name, referenced_names, substitute
from ..ir.nodes import Cond, Density, Integral, Product, Recip, render, subst_density
from .chains import (DISJOINT, EQUAL, UNKNOWN, Chain, Target, chain_refs, cond_truth,
                     dependence, from_chains, is_chain_density, ref_relation, target_of,
                     to_chains)

MAX_STEPS = 10_000


@dataclass(frozen=True)
class RewriteRule:
    name: str
    matcher: Callable      # (expr, ctx) -> match or None
    producer: Callable     # (expr, ctx, match) -> expr

    def apply(self, expr: Density, ctx) -> Optional[Density]:
        m = self.matcher(expr, ctx)
        return None if m is None else self.producer(expr, ctx, m)


@dataclass(frozen=True)
class Context:
    target: Target
    randoms: frozenset
    constants: frozenset   # hyperparameters and top-level deterministic names


# -- factor bookkeeping ------------------------------------------------------------

def _factors(expr: Density) -> list:
    return list(expr.factors) if isinstance(expr, Product) else [expr]


def _integral_pos(fs) -> Optional[int]:
    for i, f in enumerate(fs):
        if isinstance(f, Recip) and isinstance(f.body, Integral):
            return i
    return None


def _product(fs) -> Density:
    return fs[0] if len(fs) == 1 else Product(tuple(fs))


def _tidy_chain(ch: Chain) -> Optional[Chain]:
    """Drop decided guards; None when the chain is the constant 1."""
    conds = []
    for c in ch.conds:
        truth = cond_truth(c)
        if truth is False:
            return None
        if truth is None and c not in conds:
            conds.append(c)
    for c in conds:
        if c.op != "<" and c.negate() in conds:
            return None
    return Chain(ch.levels, tuple(conds), ch.atom)


def normalize(expr: Density) -> Density:
    """Flatten to chain normal form, keeping the integral as one factor."""
    out = []
    for f in _factors(expr):
        if isinstance(f, Recip) and isinstance(f.body, Integral):
            body = [c for c in (_tidy_chain(c) for c in to_chains(f.body.body)) if c]
            out.append(Recip(Integral(f.body.var, f.body.index, from_chains(body) if body else Product(()))))
        elif isinstance(f, Recip):
            for c in to_chains(f.body):
                c = _tidy_chain(c)
                if c:
                    out.append(Recip(c.to_density()))
        else:
            for c in to_chains(f):
                c = _tidy_chain(c)
                if c:
                    out.append(c.to_density())
    return _product(out) if out else Product(())


# -- (d) product-sum: p(x | rest) = p(x, rest) / int p(x, rest) dx --------------

def _match_intro(expr, ctx):
    return None if _integral_pos(_factors(expr)) is not None else True


def _produce_intro(expr, ctx, _):
    t = ctx.target
    body = normalize(expr)
    return Product(tuple(_factors(body)) + (Recip(Integral(t.var, t.index, body)),))


PRODUCT_SUM = RewriteRule("product-sum", _match_intro, _produce_intro)


# -- (a) cancel like terms ----------------------------------------------------------

def _match_cancel(expr, ctx):
    fs = _factors(expr)
    for i, f in enumerate(fs):
        if isinstance(f, Recip) and not isinstance(f.body, Integral):
            for j, g in enumerate(fs):
                if g == f.body:
                    return (j, i)
    return None


def _produce_cancel(expr, ctx, m):
    fs = [f for k, f in enumerate(_factors(expr)) if k not in m]
    return _product(fs) if fs else Product(())


CANCEL = RewriteRule("cancel", _match_cancel, _produce_cancel)


# -- (c) partition a product on an index equality -----------------------------------

def _partition_site(ch: Chain, ctx: Context):
    """The first (position, expr) along which ``ch`` can be split."""
    if dependence(ch, ctx.target) != UNKNOWN:
        return None
    allowed = set(ch.level_names) | set(ctx.target.symbols) | ctx.randoms | ctx.constants
    for ref in chain_refs(ch, ctx.target.var):
        rel, p = ref_relation(ref, ch.conds, ctx.target)
        if rel != UNKNOWN or p is None:
            continue
        e = ref.indices[p]
        names = referenced_names(e)
        if names & ref.bound or not names <= allowed:
            continue
        return p, e
    return None


def _eliminate(ch: Chain, sym: str, level: str, ctx: Context) -> Chain:
    """Collapse the product over ``level`` onto the single term ``level = sym``."""
    mapping = {level: Name(sym)}
    pos = ch.level_names.index(level)
    upper = substitute(ch.levels[pos][1], mapping)
    levels = ch.levels[:pos] + tuple((n, substitute(u, mapping)) for n, u in ch.levels[pos + 1:])
    conds = []
    for c in ch.conds:
        c2 = Cond(substitute(c.lhs, mapping), c.op, substitute(c.rhs, mapping))
        if c2 not in conds:
            conds.append(c2)
    p = ctx.target.symbols.index(sym)
    if upper != ctx.target.uppers[p]:
        conds.append(Cond(Name(sym), "<", upper))
    atom = ch.atom
    atom = subst_density(atom, mapping)
    return Chain(levels, tuple(conds), atom)


def _split(ch: Chain, site, ctx: Context) -> list:
    p, e = site
    sym = ctx.target.symbols[p]
    eq = Cond(Name(sym), "=", e)
    yes = Chain(ch.levels, ch.conds + (eq,), ch.atom)
    no = Chain(ch.levels, ch.conds + (eq.negate(),), ch.atom)
    if isinstance(e, Name) and e.id in ch.level_names:
        yes = _eliminate(yes, sym, e.id, ctx)
    return [c for c in (_tidy_chain(yes), _tidy_chain(no)) if c]


def _match_partition(expr, ctx):
    fs = _factors(expr)
    for i, f in enumerate(fs):
        if is_chain_density(f):
            for ch in to_chains(f):
                site = _partition_site(ch, ctx)
                if site:
                    return ("top", i, ch, site)
    k = _integral_pos(fs)
    if k is not None:
        for j, ch in enumerate(to_chains(fs[k].body.body)):
            site = _partition_site(ch, ctx)
            if site:
                return ("int", j, ch, site)
    return None


def _produce_partition(expr, ctx, m):
    where, i, ch, site = m
    parts = [c.to_density() for c in _split(ch, site, ctx)]
    fs = _factors(expr)
    if where == "top":
        fs = fs[:i] + parts + fs[i + 1:]
    else:
        k = _integral_pos(fs)
        integral = fs[k].body
        body = [c.to_density() for c in to_chains(integral.body)]
        body = body[:i] + parts + body[i + 1:]
        fs[k] = Recip(Integral(integral.var, integral.index, _product(body) if body else Product(())))
    return _product(fs)


PARTITION = RewriteRule("partition-product", _match_partition, _produce_partition)


# -- (b) pull factors independent of the target out of the integral ---------------

def _match_pull(expr, ctx):
    fs = _factors(expr)
    k = _integral_pos(fs)
    if k is None:
        return None
    for j, ch in enumerate(to_chains(fs[k].body.body)):
        if dependence(ch, ctx.target) == DISJOINT:
            return (k, j, ch)
    return None


def _produce_pull(expr, ctx, m):
    k, j, ch = m
    fs = _factors(expr)
    integral = fs[k].body
    rest = [c.to_density() for n, c in enumerate(to_chains(integral.body)) if n != j]
    fs[k] = Recip(Integral(integral.var, integral.index, _product(rest) if rest else Product(())))
    fs.append(Recip(ch.to_density()))
    return _product(fs)


PULL_OUT = RewriteRule("pull-out-of-integral", _match_pull, _produce_pull)

RULES = (CANCEL, PULL_OUT, PARTITION, PRODUCT_SUM)


# -- derivation driver ---------------------------------------------------------------

@dataclass(frozen=True)
class ConditionalForm:
    target: Target
    numerator: Density
    normalizer: Density       # Integral over the target
    steps: tuple              # names of the rules applied, in order

    @property
    def chains(self) -> list:
        return to_chains(self.numerator)

    def render(self) -> str:
        return f"{render(self.numerator)} / {render(self.normalizer)}"


def derive_conditional(joint, var: str, model=None) -> ConditionalForm:
    """Rewrite ``joint`` into the full conditional of one element of ``var``.

    Rule order: introduce the fraction once, then repeat {cancel to
    exhaustion, partition to exhaustion, pull-out to exhaustion} until no
    rule applies.
    """
    target = target_of(joint, var)
    constants = frozenset()
    if model is not None:
        constants = frozenset(model.hyper) | frozenset(model.consts)
    ctx = Context(target, frozenset(joint.random), constants)
    steps = []
    expr = PRODUCT_SUM.apply(normalize(joint.expr), ctx)
    steps.append(PRODUCT_SUM.name)
    changed = True
    while changed:
        changed = False
        for rule in (CANCEL, PARTITION, PULL_OUT):
            while True:
                nxt = rule.apply(expr, ctx)
                if nxt is None:
                    break
                expr = normalize(nxt)
                steps.append(rule.name)
                changed = True
                if len(steps) > MAX_STEPS:
                    raise RuntimeError(f"rewrite of {var} exceeded {MAX_STEPS} steps")
    fs = _factors(expr)
    k = _integral_pos(fs)
    leftover = [f for f in fs if isinstance(f, Recip) and f is not fs[k]]
    if leftover:
        raise RuntimeError(f"uncancelled reciprocal in conditional of {var}: {render(leftover[0])}")
    numer = [f for f in fs if not isinstance(f, Recip)]
    return ConditionalForm(target, _product(numer) if numer else Product(()), fs[k].body, tuple(steps))


def neighbor_references(cond: ConditionalForm) -> bool:
    """True when the numerator may read target elements other than the one
    being updated."""
    t = cond.target
    for ch in cond.chains:
        for ref in chain_refs(ch, t.var):
            if ref_relation(ref, ch.conds, t)[0] != EQUAL:
                return True
    return False
