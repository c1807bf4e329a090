"""Executing a sampler plan: one sweep at a time over a parameter store."""
from __future__ import annotations

import numpy as np

from ..distributions import (BatchSpec, Strategy, categorical_from_uniform, dirichlet_logpdf,
                             draw_family, sample_dirichlet_batch)
from ..dsl.ast import referenced_names
from ..errors import ModelError
from ..parallel import chunk_slices, serial
from ..rewrite.chains import target_of, to_chains
from ..rewrite.conjugacy import ConjugateDraw
from ..rewrite.plan import ExactDiscrete, MHStep
from ..rng import RngStream
from .compile import Compiler, Env, as_rows
from .init import ACCEPT, DRAW, PROPOSE, stream_id
from .terms import Term, keyed_terms, sum_terms


def _chain_names(ch) -> set:
    names = {ch.atom.var} | set(ch.atom.given)
    for c in ch.conds:
        names |= referenced_names(c.lhs) | referenced_names(c.rhs)
    for e in ch.atom.index:
        names |= referenced_names(e)
    return names


class Engine:
    """Compiled plan bound to hyperparameters, layouts and a worker pool."""

    def __init__(self, model, joint, plan, store, seed=0, pool=None):
        self.model = model
        self.plan = plan
        self.seed = seed
        self.pool = pool or serial()
        self.layouts = store.layouts
        self.comp = Compiler(model, store.hyper, store.layouts)
        self.randoms = frozenset(model.vars)
        self.joint_chains = to_chains(joint.expr)
        self.joint_terms = [Term(self.comp, c) for c in self.joint_chains]
        self.runners = [self._runner(b, joint) for b in plan.blocks]

    def _runner(self, block, joint):
        s = block.strategy
        if isinstance(s, ConjugateDraw):
            return ConjugateRunner(self, block)
        if isinstance(s, ExactDiscrete):
            return DiscreteRunner(self, block)
        if isinstance(s, MHStep):
            return MHRunner(self, block, joint)
        raise ModelError(f"unknown strategy {s!r}")

    def constant(self, e) -> int:
        return int(np.asarray(self.comp.compile(e, frozenset())(Env({}, 1, {}))))

    def rng(self, var, purpose, sweep) -> RngStream:
        return RngStream(self.seed, stream_id(self.model, var, purpose), sweep)

    def log_joint(self, vals) -> float:
        return sum_terms(self.joint_terms, vals, self.pool)

    def relevant_terms(self, vars_) -> list:
        vs = set(vars_)
        return [t for t, c in zip(self.joint_terms, self.joint_chains) if _chain_names(c) & vs]

    def sweep(self, vals: dict, sweep: int) -> float:
        for r in self.runners:
            r.run(vals, sweep)
        return self.log_joint(vals)


class _Keyed:
    """Numerator terms of one variable's conditional, keyed by element."""

    def __init__(self, engine, block):
        self.engine = engine
        self.var = block.vars[0]
        self.cond = block.conditionals[0] if block.conditionals else None
        self.layout = engine.layouts[self.var]
        self.n = self.layout.n
        if self.cond is not None:
            self.terms = [Term(engine.comp, c, 1, self.cond.target, engine.randoms)
                          for c in self.cond.chains]

    def numerator(self, vals) -> np.ndarray:
        return keyed_terms(self.terms, vals, self.n, self.engine.pool)

    def numerator_at(self, vals, e: int) -> float:
        return float(sum(t.element(vals, e) for t in self.terms))


# -- conjugate draws --------------------------------------------------------------------

class ConjugateRunner(_Keyed):
    def __init__(self, engine, block):
        super().__init__(engine, block)
        s: ConjugateDraw = block.strategy
        self.kind = s.kind
        target = self.cond.target
        prior = Term(engine.comp, s.prior, 1, target, engine.randoms)
        self.prior = prior
        comp = engine.comp
        args = list(s.prior.atom.dist.args)
        if s.prior.atom.dist.family == "Dirichlet":
            args = args[1:]
        self.prior_args = [comp.compile(a, prior.scope) for a in args]
        self.lik = []
        for ch in s.likelihood:
            t = Term(comp, ch, 1, target, engine.randoms)
            value = comp.compile(t.atom.ref, t.scope)
            largs = [comp.compile(a, t.scope) for a in t.atom.dist.args]
            self.lik.append((t, value, largs))

    def _prior_values(self, vals):
        """Prior parameters per target element, shape (n,) or (n, E)."""
        env, keys = self.prior.rows(vals)
        out = []
        for f in self.prior_args:
            v = np.asarray(f(env), dtype=float)
            per_row = v.ndim == (2 if f.vector else 1)
            if not per_row:
                out.append(np.broadcast_to(v, (self.n,) + v.shape))
                continue
            full = np.empty((self.n,) + v.shape[1:])
            full[keys] = v
            out.append(full)
        return out

    def _stats(self, vals, fn, width):
        """Sum of ``fn(keys, value, args)`` partials over likelihood rows."""
        tasks = [(t, v, a, sl) for t, v, a in self.lik for sl in chunk_slices(t.n)]

        def task(item):
            t, v, a, sl = item
            env, keys = t.rows(vals, sl)
            if env.n == 0:
                return np.zeros((width, self.n))
            return fn(keys, as_rows(v(env), env.n), [as_rows(f(env), env.n) for f in a])
        out = np.zeros((width, self.n))
        for part in self.engine.pool.map(task, tasks):
            out += part
        return out

    def posterior(self, vals):
        """Posterior family and per-element parameters at the current state."""
        n = self.n
        pa = self._prior_values(vals)
        kind = self.kind
        if kind == "dirichlet-categorical":
            E = self.layout.event
            alpha = np.array(pa[0], dtype=float).reshape(n, E)
            counts = np.zeros(n * E)
            for t, v, a in self.lik:
                for sl in chunk_slices(t.n):
                    env, keys = t.rows(vals, sl)
                    if env.n:
                        x = as_rows(v(env), env.n)
                        if x.min() < 0 or x.max() >= E:
                            raise ModelError(f"categorical value out of range for {self.var}")
                        counts += np.bincount(keys * E + x, minlength=n * E)
            return "Dirichlet", [alpha + counts.reshape(n, E)]
        if kind == "beta-bernoulli":
            st = self._stats(vals, lambda k, x, a: np.stack([
                np.bincount(k, weights=x, minlength=n), np.bincount(k, minlength=n)]), 2)
            a, b = pa
            return "Beta", [a + st[0], b + st[1] - st[0]]
        if kind == "gaussian-mean":
            st = self._stats(vals, lambda k, x, a: np.stack([
                np.bincount(k, weights=1.0 / a[1], minlength=n),
                np.bincount(k, weights=x / a[1], minlength=n)]), 2)
            m0, v0 = pa
            prec = 1.0 / v0 + st[0]
            return "Gaussian", [(m0 / v0 + st[1]) / prec, 1.0 / prec]
        if kind in ("inverse-gamma-variance", "gamma-precision"):
            st = self._stats(vals, lambda k, x, a: np.stack([
                np.bincount(k, minlength=n).astype(float),
                np.bincount(k, weights=(x - a[0]) ** 2, minlength=n)]), 2)
            a0, b0 = pa
            if kind == "gamma-precision":
                return "Gamma", [a0 + st[0] / 2, 1.0 / (1.0 / b0 + st[1] / 2)]
            return "InverseGamma", [a0 + st[0] / 2, b0 + st[1] / 2]
        raise ModelError(f"unknown conjugacy {kind}")

    def run(self, vals, sweep):
        rng = self.engine.rng(self.var, DRAW, sweep)
        family, params = self.posterior(vals)
        if family == "Dirichlet":
            conc = params[0]
            spec = BatchSpec(conc.shape[0], conc.shape[1], conc, Strategy.AUTO)
            new = sample_dirichlet_batch(spec, rng, self.engine.pool)
        else:
            new = draw_family(family, params, rng, np.arange(self.n))
        vals[self.var] = np.asarray(new, dtype=float).reshape(self.layout.shape)


# -- exact discrete ----------------------------------------------------------------------

def _log_normalize_draw(logits, u):
    top = logits.max(axis=-1, keepdims=True)
    if not np.all(np.isfinite(top)):
        raise ModelError("a discrete conditional has no state with positive probability")
    p = np.exp(logits - top)
    return categorical_from_uniform(p, u)


class DiscreteRunner(_Keyed):
    def __init__(self, engine, block):
        super().__init__(engine, block)
        s: ExactDiscrete = block.strategy
        self.k = engine.constant(s.states)
        self.sequential = s.sequential

    def run(self, vals, sweep):
        rng = self.engine.rng(self.var, DRAW, sweep)
        n, K = self.n, self.k
        if not self.sequential:
            logits = np.empty((n, K))
            for k in range(K):
                cand = {**vals, self.var: np.full(n, k, dtype=np.int64)}
                logits[:, k] = self.numerator(cand)
            vals[self.var] = _log_normalize_draw(logits, rng.uniform(np.arange(n)))
            return
        cur = vals[self.var].copy()
        work = {**vals, self.var: cur}
        u = rng.uniform(np.arange(n))
        for e in range(n):
            logits = np.empty(K)
            for k in range(K):
                cur[e] = k
                logits[k] = self.numerator_at(work, e)
            cur[e] = _log_normalize_draw(logits[None, :], u[e:e + 1])[0]
        vals[self.var] = cur


# -- Metropolis-Hastings ------------------------------------------------------------------

def mh_accept(new, delta, log_u):
    """Metropolis acceptance: proposals with non-finite log density never
    move; otherwise accept with probability min(1, exp(delta))."""
    new, delta, log_u = np.broadcast_arrays(*(np.asarray(a, dtype=float)
                                              for a in (new, delta, log_u)))
    with np.errstate(invalid="ignore"):
        return np.isfinite(new) & ((delta >= 0) | (log_u < delta))


class MHRunner:
    def __init__(self, engine, block, joint):
        self.engine = engine
        self.block = block
        self.mode = block.strategy.mode
        self.scale = block.strategy.scale
        config = engine.plan.config
        self.scales = {v: config.scale_for(v) if config is not None else self.scale
                       for v in block.vars}
        self.vars = block.vars
        if self.mode == "joint":
            self.terms = engine.relevant_terms(self.vars)
        else:
            self.keyed = _Keyed(engine, block)

    def _states(self, var) -> int:
        info = self.engine.model.vars[var]
        if info.family == "Bernoulli":
            return 2
        return self.engine.constant(info.decl.dist.args[0])

    def propose(self, var, cur, rng, elements):
        """Proposal for the given elements and its log Hastings ratio."""
        info = self.engine.model.vars[var]
        scale = self.scales[var]
        if info.discrete:
            K = self._states(var)
            u = rng.uniform(elements)
            prop = np.minimum((u * K).astype(np.int64), K - 1)
            return prop, np.zeros(elements.size)
        if info.family == "Dirichlet":
            kappa = 1.0 / (scale * scale)
            conc = 1.0 + kappa * cur
            prop = draw_family("Dirichlet", [conc], rng, elements)
            prop = np.maximum(prop, np.finfo(float).tiny)
            prop /= prop.sum(axis=1, keepdims=True)
            back = 1.0 + kappa * prop
            hastings = dirichlet_logpdf(cur, back) - dirichlet_logpdf(prop, conc)
            return prop, hastings
        return cur + scale * rng.normal(elements), np.zeros(elements.size)

    def run(self, vals, sweep):
        eng = self.engine
        if self.mode == "joint":
            prop_vals = dict(vals)
            hastings = 0.0
            for var in self.vars:
                lay = eng.layouts[var]
                el = np.arange(lay.n)
                p, h = self.propose(var, vals[var], eng.rng(var, PROPOSE, sweep), el)
                prop_vals[var] = p.reshape(lay.shape)
                hastings += float(np.sum(h))
            cur = sum_terms(self.terms, vals, eng.pool)
            new = sum_terms(self.terms, prop_vals, eng.pool)
            delta = new - cur + hastings
            u = eng.rng(self.vars[0], ACCEPT, sweep).uniform(np.zeros(1, dtype=np.int64))[0]
            if mh_accept(new, delta, np.log(u)):
                for var in self.vars:
                    vals[var] = prop_vals[var]
            return
        var = self.vars[0]
        keyed = self.keyed
        n = keyed.n
        el = np.arange(n)
        rng = eng.rng(var, PROPOSE, sweep)
        logu = np.log(eng.rng(var, ACCEPT, sweep).uniform(el))
        if self.mode == "elementwise":
            prop, h = self.propose(var, vals[var], rng, el)
            prop = prop.reshape(vals[var].shape)
            cur = keyed.numerator(vals)
            new = keyed.numerator({**vals, var: prop})
            with np.errstate(invalid="ignore"):
                delta = new - cur + h
            ok = mh_accept(new, delta, logu)
            mask = ok.reshape((n,) + (1,) * (prop.ndim - 1))
            vals[var] = np.where(mask, prop, vals[var])
            return
        # sequential: one element at a time, each seeing the latest values.
        # Element e is untouched before its visit, so proposals can be drawn
        # for all elements up front.
        x = vals[var].copy()
        work = {**vals, var: x}
        prop, h = self.propose(var, vals[var], rng, el)
        prop = prop.reshape(x.shape)
        for e in range(n):
            old = x[e].copy()
            cur = keyed.numerator_at(work, e)
            x[e] = prop[e]
            new = keyed.numerator_at(work, e)
            delta = new - cur + h[e]
            if not mh_accept(new, delta, logu[e]):
                x[e] = old
        vals[var] = x
