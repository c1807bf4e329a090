"""Evaluation protocols shared by the CLI and the benchmarks."""
from __future__ import annotations

import numpy as np

from .data import DataFile
from .errors import ModelError
from .ir.lower import atom_for
from .metrics import log_predictive_probability
from .runtime import RunConfig, initial_store, map as map_estimate
from .runtime.compile import Compiler, Env, as_rows
from .runtime.store import coerce_hyper
from .synth import documents


def lda_heldout_lpp(model, phi, test: DataFile, sweeps=20, seed=0, threads=1) -> float:
    """Plug-in log10 predictive probability of held-out documents.

    Topic proportions of the test documents are fitted by ``map`` with
    ``phi`` clamped, then scored with that same ``phi``.
    """
    phi = np.asarray(phi, dtype=float)
    arrays = {"w": test.arrays["w"], "phi": phi.ravel().tolist()}
    observed = frozenset(model.observed) | {"phi"}
    store = initial_store(model, test.hyper, arrays, seed, observed)
    store = map_estimate(model, {"phi"}, test.hyper, store, sweeps, "gibbs",
                         RunConfig(seed=seed, threads=threads))
    return log_predictive_probability(phi, store.vals["theta"], documents(test))


def predictive_mean(model, var: str, hyper: dict, arrays: dict, params: dict) -> np.ndarray:
    """Mean of ``var``'s Gaussian at every element, given parent values."""
    info = model.vars[var]
    if info.family != "Gaussian":
        raise ModelError(f"{var} is not Gaussian; no predictive mean")
    hyper = coerce_hyper(model, hyper)
    merged = dict(arrays)
    merged.update({k: np.asarray(v).ravel().tolist() for k, v in params.items()})
    store = initial_store(model, hyper, merged, 0, frozenset(merged))
    atom = atom_for(model, var)
    lay = store.layouts[var]
    comp = Compiler(model, hyper, store.layouts)
    env = Env(dict(lay.idx), lay.n, store.vals)
    mean = comp.compile(atom.dist.args[0], frozenset(lay.idx))
    return np.asarray(as_rows(mean(env), lay.n), dtype=float)
