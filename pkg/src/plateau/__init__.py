"""Compile Bayesian-network model descriptions into data-parallel MCMC samplers."""
from .dsl import load_model, parse_model, validate_model
from .ir import lower, render
from .rewrite import derive_conditional, detect_conjugacy, plan_inference
from .runtime import RunConfig, Trace, initial_store, log_density_at, map, sample

__all__ = ["load_model", "parse_model", "validate_model", "lower", "render",
           "derive_conditional", "detect_conjugacy", "plan_inference", "RunConfig", "Trace",
           "initial_store", "log_density_at", "map", "sample"]
