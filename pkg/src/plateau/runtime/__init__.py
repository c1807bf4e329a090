from .api import RunConfig, Trace, log_joint_of, map, run, sample
from .engine import Engine
from .init import initial_store
from .store import ParamStore, build_layouts, coerce_hyper, state_json
from .terms import log_density_at

__all__ = ["RunConfig", "Trace", "log_joint_of", "map", "run", "sample", "Engine",
           "initial_store", "ParamStore", "build_layouts", "coerce_hyper", "state_json",
           "log_density_at"]
