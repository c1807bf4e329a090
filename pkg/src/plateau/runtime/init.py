"""Building a starting store: data where given, ancestral draws elsewhere."""
from __future__ import annotations

import numpy as np

from ..distributions import draw_family
from ..dsl.ast import referenced_names
from ..errors import DataError
from ..ir.lower import _inliner
from ..rng import RngStream
from .compile import Compiler, Env
from .store import ParamStore, build_layouts, coerce_hyper

INIT, PROPOSE, ACCEPT, DRAW = range(4)
STREAMS_PER_VAR = 8


def stream_id(model, var: str, purpose: int) -> int:
    return model.var_order.index(var) * STREAMS_PER_VAR + purpose


def _draw_args(comp, info, env):
    args = list(info.decl.dist.args)
    if info.family in ("Dirichlet", "Categorical"):
        args = args[1:]
    scope = frozenset(env.idx)
    out = []
    for a in args:
        c = comp.compile(_inline(comp, a), scope)
        v = np.asarray(c(env), dtype=float)
        out.append(v if c.vector or v.ndim else np.broadcast_to(v, (env.n,)))
    return out


def _inline(comp, e):
    if not hasattr(comp, "_inline_fn"):
        comp._inline_fn = _inliner(comp.model)
    return comp._inline_fn(e)


def initial_store(model, hyper, arrays=None, seed=0, observed=None) -> ParamStore:
    """Values from ``arrays`` where present, forward samples otherwise.

    Every observed variable must be supplied.  A variable whose
    distribution reads its own other elements (a Markov chain) is drawn
    element by element from a zero start.
    """
    arrays = arrays or {}
    hyper = coerce_hyper(model, hyper)
    observed = frozenset(model.observed if observed is None else observed)
    layouts = build_layouts(model, hyper)
    store = ParamStore(model, {}, hyper, layouts, observed)
    comp = Compiler(model, hyper, layouts)
    for name in model.var_order:
        info = model.vars[name]
        lay = layouts[name]
        if name in arrays:
            store.set_flat(name, arrays[name], info.discrete)
            continue
        if name in observed:
            raise DataError(f"missing array for observed variable {name}")
        rng = RngStream(seed, stream_id(model, name, INIT))
        dtype = np.int64 if info.discrete else np.float64
        store.vals[name] = np.zeros(lay.shape, dtype=dtype)
        if lay.event is not None:
            store.vals[name][:] = 1.0 / lay.event
        self_ref = name in _given(model, info)
        elements = [np.arange(lay.n)] if not self_ref else [np.array([e]) for e in range(lay.n)]
        for el in elements:
            env = Env({k: v[el] for k, v in lay.idx.items()}, int(el.size), store.vals)
            args = _draw_args(comp, info, env)
            if info.family == "Dirichlet":
                args = [np.broadcast_to(args[0], (el.size, lay.event))]
            x = draw_family(info.family, args, rng, el)
            store.vals[name][el] = np.asarray(x).reshape((el.size,) + lay.shape[1:]).astype(dtype)
    return store


def _given(model, info) -> set:
    out = set()
    for a in info.decl.dist.args:
        out |= referenced_names(_inline_expr(model, a))
    return out


def _inline_expr(model, e):
    return _inliner(model)(e)
