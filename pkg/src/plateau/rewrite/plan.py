"""Turning derived conditionals into a sampler plan."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from ..dsl.ast import Expr, Num, format_expr
from ..errors import ModelError
from ..ir.nodes import render
from .conjugacy import ConjugateDraw, detect_conjugacy
from .rules import ConditionalForm, derive_conditional, neighbor_references

METHODS = ("mh", "gibbs", "mwg")


@dataclass(frozen=True)
class ExactDiscrete:
    states: Expr          # number of values, a hyperparameter expression
    sequential: bool = False

    def describe(self) -> str:
        scan = ", sequential scan" if self.sequential else ""
        return f"ExactDiscrete over {format_expr(self.states)} states{scan}"


@dataclass(frozen=True)
class MHStep:
    """Random-walk Metropolis-Hastings.

    ``joint`` proposes every element at once and accepts or rejects the lot,
    ``elementwise`` accepts each element separately (valid when elements are
    conditionally independent), ``sequential`` visits elements one at a time.
    """
    mode: str
    scale: float = 0.5

    def describe(self) -> str:
        return f"MHStep({self.mode}, scale {self.scale:g})"


Strategy = Union[ConjugateDraw, ExactDiscrete, MHStep]


@dataclass(frozen=True)
class Block:
    vars: tuple
    strategy: Strategy
    parallelizable: bool
    conditionals: tuple = ()

    def describe_strategy(self) -> str:
        s = self.strategy
        if isinstance(s, ConjugateDraw):
            return f"ConjugateDraw {s.recipe}"
        return s.describe()


@dataclass(frozen=True)
class PlanConfig:
    proposal_scale: Union[float, dict] = 0.5
    parallel_mh_states: bool = False   # MH over whole state chains instead of a scan

    def scale_for(self, var: str) -> float:
        if isinstance(self.proposal_scale, dict):
            return float(self.proposal_scale.get(var, 0.5))
        return float(self.proposal_scale)


@dataclass(frozen=True)
class SamplerPlan:
    method: str
    blocks: tuple
    observed: frozenset
    diagnostics: tuple = ()
    hyper: Optional[dict] = field(default=None, compare=False)
    config: Optional[PlanConfig] = field(default=None, compare=False)

    @property
    def vars(self) -> tuple:
        return tuple(v for b in self.blocks for v in b.vars)


def _states(model, var) -> Expr:
    info = model.vars[var]
    if info.family == "Bernoulli":
        return Num(2)
    return info.decl.dist.args[0]


def plan_inference(model, joint, method: str, hyper=None, observed=None,
                   config: Optional[PlanConfig] = None) -> SamplerPlan:
    """Choose a strategy per latent variable.

    ``observed`` defaults to the model's observe statement; callers add
    call-time observations by passing a larger set.
    """
    method = method.lower()
    if method not in METHODS:
        raise ModelError(f"unknown method {method!r} (expected one of {', '.join(METHODS)})")
    config = config or PlanConfig()
    observed = frozenset(model.observed if observed is None else observed)
    unknown = observed - set(model.vars)
    if unknown:
        raise ModelError(f"cannot observe unknown variable {sorted(unknown)[0]}")
    latent = tuple(v for v in model.var_order if v not in observed)
    if method == "mh":
        blocks = ()
        if latent:
            blocks = (Block(latent, MHStep("joint", config.scale_for(latent[0])), True),)
        return SamplerPlan(method, blocks, observed, (), hyper, config)
    blocks, diags = [], []
    for var in latent:
        cond = derive_conditional(joint, var, model)
        independent = not neighbor_references(cond)
        conj = detect_conjugacy(cond)
        if conj is not None:
            blocks.append(Block((var,), conj, independent, (cond,)))
        elif model.vars[var].discrete:
            if independent:
                blocks.append(Block((var,), ExactDiscrete(_states(model, var)), True, (cond,)))
            elif config.parallel_mh_states:
                blocks.append(Block((var,), MHStep("joint", config.scale_for(var)), True, (cond,)))
            else:
                blocks.append(Block((var,), ExactDiscrete(_states(model, var), True), False, (cond,)))
        else:
            diags.append(f"{var}: no conjugacy, MH fallback")
            if method == "mwg":
                mode = "sequential"
            else:
                mode = "elementwise" if independent else "joint"
            blocks.append(Block((var,), MHStep(mode, config.scale_for(var)), independent, (cond,)))
    return SamplerPlan(method, tuple(blocks), observed, tuple(diags), hyper, config)


def describe_plan(model, joint, plan: SamplerPlan) -> str:
    """Text report: the joint, then each block's conditional and strategy."""
    lines = [f"model {model.ast.name or '(anonymous)'}", f"joint: {render(joint.expr)}",
             f"method: {plan.method}"]
    if plan.observed:
        lines.append(f"observed: {', '.join(v for v in model.var_order if v in plan.observed)}")
    for b in plan.blocks:
        par = "parallel" if b.parallelizable else "not parallelizable"
        lines.append(f"block {', '.join(b.vars)} [{par}]")
        for c in b.conditionals:
            lines.append(f"  conditional {format_expr(c.target.ref)}: {c.render()}")
        lines.append(f"  strategy: {b.describe_strategy()}")
    for d in plan.diagnostics:
        lines.append(f"diagnostic: {d}")
    return "\n".join(lines) + "\n"
