"""Recognising closed-form posteriors in derived conditionals."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..dsl.ast import BinOp, Index, Name, Num, format_expr
from .chains import EQUAL, Chain, chain_refs, expr_refs, ref_relation
from .rules import ConditionalForm


@dataclass(frozen=True)
class ConjugateDraw:
    family: str          # posterior family
    kind: str            # table entry
    prior: Chain
    likelihood: tuple    # chains contributing sufficient statistics
    recipe: str


def _is_target_ref(e, ch: Chain, target) -> bool:
    if isinstance(e, Index) and e.base == target.var:
        refs = expr_refs(e, target.var)
    elif isinstance(e, Name) and e.id == target.var:
        refs = expr_refs(e, target.var)
    else:
        return False
    return ref_relation(refs[0], ch.conds, target)[0] == EQUAL and len(refs) == 1


def _free_of(exprs, var) -> bool:
    return all(not expr_refs(e, var) for e in exprs)


def _obs_text(ch: Chain) -> str:
    conds = [c for c in ch.conds if c.op != "<"]
    text = format_expr(ch.atom.ref)
    if conds:
        text += " where " + " & ".join(f"{format_expr(c.lhs)} {c.op} {format_expr(c.rhs)}"
                                        for c in conds)
    return text


# Each entry: (prior family, likelihood family, kind, posterior family, matcher)
def _dirichlet_categorical(ch, t):
    a = ch.atom.dist.args
    return _is_target_ref(a[1], ch, t) and _free_of(a[:1], t.var)


def _beta_bernoulli(ch, t):
    return _is_target_ref(ch.atom.dist.args[0], ch, t)


def _gaussian_mean(ch, t):
    a = ch.atom.dist.args
    return _is_target_ref(a[0], ch, t) and _free_of(a[1:], t.var)


def _gaussian_variance(ch, t):
    a = ch.atom.dist.args
    return _is_target_ref(a[1], ch, t) and _free_of(a[:1], t.var)


def _gaussian_precision(ch, t):
    a = ch.atom.dist.args
    v = a[1]
    return (isinstance(v, BinOp) and v.op == "/" and v.left == Num(1)
            and _is_target_ref(v.right, ch, t) and _free_of(a[:1], t.var))


TABLE = (
    ("Dirichlet", "Categorical", "dirichlet-categorical", "Dirichlet", _dirichlet_categorical),
    ("Beta", "Bernoulli", "beta-bernoulli", "Beta", _beta_bernoulli),
    ("Gaussian", "Gaussian", "gaussian-mean", "Gaussian", _gaussian_mean),
    ("InverseGamma", "Gaussian", "inverse-gamma-variance", "InverseGamma", _gaussian_variance),
    ("Gamma", "Gaussian", "gamma-precision", "Gamma", _gaussian_precision),
)


def _recipe(kind: str, prior: Chain, lik: tuple) -> str:
    pa = prior.atom.dist.args
    p = [format_expr(a) for a in pa]
    obs = "; ".join(_obs_text(c) for c in lik) or "no observations"
    if len(lik) == 1:
        la = lik[0].atom.dist.args
    else:
        la = (Name("mean"), Name("variance"))
    dev = format_expr(BinOp("-", Name("y"), la[0]))

    def ratio(a, b):
        return format_expr(BinOp("/", a, b))
    if kind == "dirichlet-categorical":
        return f"Dirichlet({p[1]} + counts), counts = value counts of {obs}"
    if kind == "beta-bernoulli":
        return f"Beta({p[0]} + ones, {p[1]} + zeros), counting {obs}"
    if kind == "gaussian-mean":
        return (f"Gaussian(mean', var'), 1/var' = {ratio(Num(1), pa[1])} + sum "
                f"{ratio(Num(1), la[1])}, mean' = var' * ({ratio(pa[0], pa[1])} + sum "
                f"{ratio(Name('y'), la[1])}), y = {obs}")
    if kind == "inverse-gamma-variance":
        return f"InverseGamma({p[0]} + n/2, {p[1]} + sum ({dev})^2 / 2), y = {obs}"
    return (f"Gamma({p[0]} + n/2, 1 / ({ratio(Num(1), pa[1])} + sum ({dev})^2 / 2)), "
            f"y = {obs}")


def detect_conjugacy(cond: ConditionalForm) -> Optional[ConjugateDraw]:
    """First matching entry of the conjugacy table, or None."""
    t = cond.target
    chains = cond.chains
    priors = [c for c in chains if c.atom.var == t.var]
    if len(priors) != 1:
        return None
    prior = priors[0]
    if prior.levels or [r for r in chain_refs(prior, t.var)
                        if ref_relation(r, prior.conds, t)[0] != EQUAL]:
        return None
    if not _free_of(prior.atom.dist.args, t.var):
        return None
    lik = tuple(c for c in chains if c is not prior)
    for prior_family, lik_family, kind, post, match in TABLE:
        if prior.atom.dist.family != prior_family:
            continue
        if all(c.atom.dist.family == lik_family and c.atom.var != t.var and match(c, t)
               for c in lik):
            return ConjugateDraw(post, kind, prior, lik, _recipe(kind, prior, lik))
    return None
