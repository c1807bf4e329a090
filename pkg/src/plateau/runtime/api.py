"""Library entry points: ``sample`` for a trace and ``map`` for a point estimate."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from ..errors import DataError, ModelError
from ..ir.lower import lower
from ..parallel import ParallelExecutor
from ..rewrite.plan import PlanConfig, plan_inference
from .engine import Engine
from .init import initial_store
from .store import ParamStore, coerce_hyper, state_json


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    threads: int = 1
    thin: int = 1
    burnin: int = 0
    proposal_scale: Union[float, dict] = 0.5
    parallel_mh_states: bool = False

    def plan_config(self) -> PlanConfig:
        return PlanConfig(self.proposal_scale, self.parallel_mh_states)


@dataclass
class Trace:
    model: str
    method: str
    seed: int
    samples: list = field(default_factory=list)      # thinned state snapshots
    log_joint: list = field(default_factory=list)    # every recorded iteration
    map_state: Optional[dict] = None
    map_log_joint: float = -np.inf
    timing_ms: list = field(default_factory=list)

    def to_json(self, model, timing: bool = False) -> dict:
        return {
            "model": self.model,
            "method": self.method,
            "seed": self.seed,
            "samples": [state_json(model, s) for s in self.samples],
            "log_joint": [float(v) for v in self.log_joint],
            "map_state": state_json(model, self.map_state) if self.map_state else {},
            "timing_ms": list(self.timing_ms) if timing else [],
        }


def _prepare(model, hyper, init, method, config, observed):
    hyper = coerce_hyper(model, hyper)
    joint = lower(model)
    plan = plan_inference(model, joint, method, hyper, observed, config.plan_config())
    if init is None:
        store = initial_store(model, hyper, {}, config.seed, plan.observed)
    else:
        store = init.copy()
        store.hyper = hyper
        store.observed = plan.observed
    store.check()
    return joint, plan, store


def run(model, hyper, init: Optional[ParamStore], n: int, method: str = "gibbs",
        config: Optional[RunConfig] = None, observed=None):
    """Run ``burnin + n`` sweeps; returns (trace, final store)."""
    config = config or RunConfig()
    if n < 1:
        raise ModelError("number of samples must be at least 1")
    if config.thin < 1 or config.burnin < 0:
        raise ModelError("thin must be >= 1 and burnin >= 0")
    joint, plan, store = _prepare(model, hyper, init, method, config, observed)
    trace = Trace(model.ast.name or "", plan.method, config.seed)
    with ParallelExecutor(config.threads) as pool:
        engine = Engine(model, joint, plan, store, config.seed, pool)
        vals = store.vals
        for it in range(config.burnin + n):
            t0 = time.perf_counter()
            lj = engine.sweep(vals, it)
            if np.isnan(lj):
                raise ModelError("log joint evaluated to NaN")
            ms = (time.perf_counter() - t0) * 1e3
            if it < config.burnin:
                continue
            k = it - config.burnin
            trace.log_joint.append(lj)
            trace.timing_ms.append(ms)
            if k % config.thin == 0:
                trace.samples.append({v: vals[v].copy() for v in vals})
            if trace.map_state is None or lj > trace.map_log_joint:
                trace.map_log_joint = lj
                trace.map_state = {v: vals[v].copy() for v in vals}
    return trace, store


def sample(model, hyper, init: Optional[ParamStore], n: int, method: str = "gibbs",
           config: Optional[RunConfig] = None, observed=None) -> Trace:
    """``n`` sweeps of the planned sampler from ``init`` (forward draws if None)."""
    return run(model, hyper, init, n, method, config, observed)[0]


def map(model, observe_extra, hyper, store: ParamStore, n: int, method: str = "gibbs",
        config: Optional[RunConfig] = None) -> ParamStore:
    """Maximum a posteriori estimate over ``n`` sweeps, written into ``store``.

    Variables in ``observe_extra`` keep their values in ``store``; the plan
    is rebuilt with them observed.
    """
    extra = set(observe_extra or ())
    unknown = extra - set(model.vars)
    if unknown:
        raise ModelError(f"cannot observe unknown variable {sorted(unknown)[0]}")
    observed = frozenset(model.observed) | extra
    trace, _ = run(model, hyper, store, n, method, config, observed)
    for v, a in trace.map_state.items():
        if v not in observed:
            store.vals[v] = a
    return store


def log_joint_of(model, store: ParamStore, threads: int = 1) -> float:
    joint = lower(model)
    plan = plan_inference(model, joint, "mh", store.hyper, model.var_order)
    with ParallelExecutor(threads) as pool:
        return Engine(model, joint, plan, store, 0, pool).log_joint(store.vals)


__all__ = ["RunConfig", "Trace", "sample", "map", "run", "log_joint_of", "DataError"]
