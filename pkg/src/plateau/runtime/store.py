"""Parameter store: one flat array per random variable."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError
from .compile import Compiler, Env
from .layout import Layout, expand_levels


def coerce_hyper(model, raw: dict) -> dict:
    """Validate and convert hyperparameter values by their declared types."""
    out = {}
    for name, typ in model.hyper.items():
        if name not in raw:
            raise DataError(f"missing hyperparameter {name}")
        v = raw[name]
        try:
            if typ == "int":
                if isinstance(v, bool) or int(v) != v:
                    raise ValueError
                out[name] = np.int64(v)
            elif typ == "real":
                out[name] = np.float64(v)
            elif typ == "int[]":
                a = np.asarray(v)
                if a.ndim != 1 or (a.size and not np.all(np.asarray(a, dtype=float) % 1 == 0)):
                    raise ValueError
                out[name] = a.astype(np.int64)
            else:
                a = np.asarray(v, dtype=np.float64)
                if a.ndim != 1:
                    raise ValueError
                out[name] = a
        except (TypeError, ValueError):
            raise DataError(f"hyperparameter {name} is not a valid {typ}") from None
    return out


def build_layouts(model, hyper: dict) -> dict:
    comp = Compiler(model, hyper, {})
    layouts = {}
    for name, info in model.vars.items():
        levels = [(lp.index, lp.upper) for lp in info.dims]
        idx, n, parents = expand_levels(levels, comp.size)
        event = None
        if info.event is not None:
            event = int(np.asarray(comp.compile(info.event, frozenset())(Env({}, 1, {}))))
            if event < 1:
                raise DataError(f"{name} has non-positive dimension {event}")
        layouts[name] = Layout([lp.index for lp in info.dims], idx, n, parents, event)
    return layouts


@dataclass
class ParamStore:
    """Current values of every random variable.

    Scalars-per-element live in arrays of shape ``(n,)``; vector-valued
    variables (Dirichlet draws) in ``(n, E)``.  Variables in ``observed``
    are never written by a sampler.
    """

    model: object
    vals: dict
    hyper: dict
    layouts: dict
    observed: frozenset = field(default_factory=frozenset)

    def copy(self) -> "ParamStore":
        return ParamStore(self.model, {k: v.copy() for k, v in self.vals.items()}, self.hyper,
                          self.layouts, self.observed)

    def snapshot(self) -> dict:
        return {k: v.copy() for k, v in self.vals.items()}

    def check(self):
        for name, lay in self.layouts.items():
            if name not in self.vals:
                raise DataError(f"store has no values for {name}")
            v = self.vals[name]
            if v.shape != lay.shape:
                raise DataError(f"{name}: expected {int(np.prod(lay.shape))} values, "
                                f"got {int(v.size)}")

    def set_flat(self, name: str, values, discrete: bool):
        lay = self.layouts[name]
        a = np.asarray(values, dtype=np.float64 if not discrete else None)
        expected = int(np.prod(lay.shape))
        if a.size != expected:
            raise DataError(f"{name}: expected {expected} values, got {a.size}")
        if discrete:
            if a.size and not np.all(np.asarray(a, dtype=float) % 1 == 0):
                raise DataError(f"{name} must hold integers")
            a = a.astype(np.int64)
        self.vals[name] = a.reshape(lay.shape).copy()


def state_json(model, vals: dict) -> dict:
    """Flat lists in declaration order."""
    out = {}
    for name in model.var_order:
        v = vals[name]
        out[name] = v.ravel().tolist()
    return out
