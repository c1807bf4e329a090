"""Numeric evaluation of density terms.

Every density is flattened to chains (nested plates over one guarded atom).
A compiled term enumerates its plate rows once; each evaluation then reads
the current variable values, applies the guards and sums log densities.
Conditional numerators are evaluated *keyed*: every row is attributed to
the element of the target variable it belongs to.
"""
from __future__ import annotations

import numpy as np

from ..distributions import family_logpdf
from ..dsl.ast import Index, Name, Num, referenced_names, substitute
from ..errors import ModelError
from ..ir.nodes import (Atom, Cond, Density, Guarded, IndexedProduct, Integral, Product, Recip,
                        map_exprs, subst_density)
from ..parallel import chunk_slices, serial, tree_sum
from ..rewrite.chains import Chain
from .compile import Compiler, Env, as_rows
from .layout import expand_levels

_OPS = {"=": np.equal, "!=": np.not_equal, "<": np.less}


def flatten(d: Density, sign=1, levels=(), conds=()) -> list:
    """(sign, Chain) pairs; integrals cannot be evaluated."""
    if isinstance(d, Atom):
        return [(sign, Chain(tuple(levels), tuple(conds), d))]
    if isinstance(d, Product):
        out = []
        for f in d.factors:
            out.extend(flatten(f, sign, levels, conds))
        return out
    if isinstance(d, IndexedProduct):
        return flatten(d.body, sign, levels + ((d.index, d.upper),), conds)
    if isinstance(d, Guarded):
        return flatten(d.body, sign, levels, conds + tuple(d.conds))
    if isinstance(d, Recip):
        return flatten(d.body, -sign, levels, conds)
    if isinstance(d, Integral):
        raise ModelError("an integral reached numeric evaluation; it must be "
                         "eliminated during planning")
    raise TypeError(d)


def _check_nan(a):
    a = np.asarray(a)
    if a.dtype.kind == "f" and a.size and np.isnan(a).any():
        raise ValueError("NaN in parameter store")


class Term:
    """One chain compiled against fixed hyperparameters.

    With a target, rows are keyed by target element: either the guards pin
    every target index to an expression (the key is computed from it), or
    the target's own plate is enumerated as extra outer levels.
    """

    def __init__(self, comp: Compiler, chain: Chain, sign=1, target=None, randoms=frozenset()):
        self.sign = sign
        self.chain = chain
        self.target = target
        self.key_mode = None
        conds = list(chain.conds)
        atom = chain.atom
        levels = list(chain.levels)
        key_exprs = None
        if target is not None:
            lay = comp.layouts[target.var]
            self.target_layout = lay
            solved = {}
            for sym in target.symbols:
                for c in conds:
                    if c.op == "=" and c.lhs == Name(sym) and not (
                            referenced_names(c.rhs) & set(target.symbols)):
                        solved[sym] = c.rhs
                        break
            if not target.symbols:
                self.key_mode = "static"
            elif len(solved) == len(target.symbols):
                mapping = dict(solved)
                key_exprs = [solved[s] for s in target.symbols]
                atom = _subst_atom(atom, mapping)
                new = []
                for c in conds:
                    c2 = Cond(substitute(c.lhs, mapping), c.op, substitute(c.rhs, mapping))
                    if c2.lhs != c2.rhs or c2.op == "<":
                        new.append(c2)
                conds = new
                dynamic = any(referenced_names(e) & randoms for e in key_exprs)
                self.key_mode = "dynamic" if dynamic else "static"
            else:
                levels = list(zip(target.symbols, target.uppers)) + levels
                self.key_mode = "static"
        self.levels = levels
        idx, n, _ = expand_levels(levels, comp.size)
        self.idx, self.n = idx, n
        scope = frozenset(idx)
        self.atom, self.scope, self.comp = atom, scope, comp
        self.conds = [(comp.compile(c.lhs, scope), _OPS[c.op], comp.compile(c.rhs, scope))
                      for c in conds]
        self.logp = _compile_atom(comp, atom, scope)
        self.keys = None
        self.key_fns = None
        if target is not None:
            if key_exprs is not None:
                self.key_fns = [comp.compile(e, scope) for e in key_exprs]
            if self.key_mode == "static":
                if not target.symbols:
                    self.keys = np.zeros(n, dtype=np.int64)
                    self.valid = None
                else:
                    env = Env(idx, n, {})
                    ix = ([as_rows(f(env), n) for f in self.key_fns] if self.key_fns
                          else [idx[s] for s in target.symbols])
                    self.valid = lay.in_range(ix, n)
                    safe = [np.where(self.valid, i, 0) for i in ix]
                    self.keys = lay.positions(safe, n)
                order = np.argsort(self.keys, kind="stable")
                self._order = order
                self._starts = np.searchsorted(self.keys[order], np.arange(lay.n + 1))

    # -- evaluation ----------------------------------------------------------------

    def _select(self, env, keys, valid):
        mask = valid
        for lhs, op, rhs in self.conds:
            m = op(as_rows(lhs(env), env.n), as_rows(rhs(env), env.n))
            mask = m if mask is None else mask & m
        if mask is not None and not mask.all():
            env = env.subset(mask)
            if keys is not None:
                keys = keys[mask]
        return env, keys

    def rows(self, vals, rows=None):
        """(keys, env) for the selected table rows whose guards hold."""
        if rows is None:
            idx, n = self.idx, self.n
        else:
            idx = {k: v[rows] for k, v in self.idx.items()}
            n = len(range(*rows.indices(self.n))) if isinstance(rows, slice) else int(rows.size)
        env = Env(idx, n, vals)
        keys = valid = None
        if self.target is not None:
            if self.key_mode == "static":
                keys = self.keys if rows is None else self.keys[rows]
                if self.valid is not None:
                    valid = self.valid if rows is None else self.valid[rows]
            else:
                lay = self.target_layout
                ix = [as_rows(f(env), n) for f in self.key_fns]
                valid = lay.in_range(ix, n)
                keys = lay.positions([np.where(valid, i, 0) for i in ix], n)
        return self._select(env, keys, valid)

    def total(self, vals, rows=None) -> float:
        env, _ = self.rows(vals, rows)
        if env.n == 0:
            return 0.0
        return self.sign * float(np.sum(self.logp(env)))

    def keyed(self, vals, n_target, rows=None):
        env, keys = self.rows(vals, rows)
        if env.n == 0:
            return np.zeros(n_target)
        return self.sign * np.bincount(keys, weights=as_rows(self.logp(env), env.n),
                                       minlength=n_target)

    def element(self, vals, e: int) -> float:
        """Log density of the rows attributed to target element ``e``."""
        if self.key_mode == "static":
            rows = self._order[self._starts[e]:self._starts[e + 1]]
            if rows.size == 0:
                return 0.0
            env, _ = self.rows(vals, rows)
        else:
            env, keys = self.rows(vals)
            env = env.subset(keys == e)
        if env.n == 0:
            return 0.0
        return self.sign * float(np.sum(self.logp(env)))


def _subst_atom(atom: Atom, mapping) -> Atom:
    return map_exprs(atom, lambda e: substitute(e, mapping))


def _compile_atom(comp: Compiler, atom: Atom, scope):
    """Vectorised log density of an atom over the rows of an Env."""
    value = comp.compile(atom.ref, scope)
    family = atom.dist.family
    args = list(atom.dist.args)
    if family in ("Dirichlet", "Categorical"):
        args = args[1:]
    prob = args[0] if family == "Categorical" else None
    if (prob is not None and isinstance(prob, Index) and prob.base in comp.model.vars
            and len(prob.indices) == len(comp.layouts[prob.base].names)):
        lay = comp.layouts[prob.base]
        parts = [comp.compile(i, scope) for i in prob.indices]
        base = prob.base

        def categorical(env):
            x = as_rows(value(env), env.n)
            pos = lay.positions([p(env) for p in parts], env.n)
            table = env.vals[base]
            _check_nan(table)
            ok = (x >= 0) & (x < table.shape[1])
            p = table[pos, np.where(ok, x, 0)]
            with np.errstate(divide="ignore"):
                return np.where(ok & (p >= 0), np.log(p), -np.inf)
        return categorical
    cargs = [comp.compile(a, scope) for a in args]
    if family == "Categorical":
        probs_of = cargs[0]

        def shared_or_rows(env):
            x = as_rows(value(env), env.n)
            probs = np.asarray(probs_of(env), dtype=float)
            _check_nan(probs)
            if probs.ndim > 1:
                return family_logpdf(family, x, [probs])
            ok = (x >= 0) & (x < probs.shape[0])
            with np.errstate(divide="ignore"):
                lp = np.log(probs)
            return np.where(ok, lp[np.where(ok, x, 0)], -np.inf)
        return shared_or_rows

    def logp(env):
        x = value(env)
        _check_nan(x)
        a = [f(env) for f in cargs]
        for v in a:
            _check_nan(v)
        return family_logpdf(family, x, a)
    return logp


# -- sums over many terms -------------------------------------------------------------

def compile_terms(comp, density_or_chains, target=None, randoms=frozenset()) -> list:
    if isinstance(density_or_chains, Density):
        pairs = flatten(density_or_chains)
    else:
        pairs = [(1, c) for c in density_or_chains]
    return [Term(comp, c, s, target, randoms) for s, c in pairs]


def sum_terms(terms, vals, pool=None) -> float:
    """Sum of all term rows with a worker-count independent reduction."""
    pool = pool or serial()
    tasks = [(t, sl) for t in terms for sl in chunk_slices(t.n)]
    parts = pool.map(lambda ts: ts[0].total(vals, ts[1]), tasks)
    return tree_sum(parts)


def keyed_terms(terms, vals, n_target, pool=None) -> np.ndarray:
    """Per-target-element sums; partial arrays are added in task order."""
    pool = pool or serial()
    tasks = [(t, sl) for t in terms for sl in chunk_slices(t.n)]
    parts = pool.map(lambda ts: ts[0].keyed(vals, n_target, ts[1]), tasks)
    out = np.zeros(n_target)
    for p in parts:
        out += p
    return out


def log_density_at(expr: Density, store, hyper=None, bindings=None) -> float:
    """Numeric log of ``expr`` at the values in ``store``.

    ``bindings`` gives integer values for index names left free in ``expr``
    (the primed indices of a conditional).
    """
    hyper = store.hyper if hyper is None else hyper
    if bindings:
        mapping = {k: Num(int(v)) for k, v in bindings.items()}
        expr = subst_density(expr, mapping)
    comp = Compiler(store.model, hyper, store.layouts)
    return sum_terms(compile_terms(comp, expr), store.vals)
