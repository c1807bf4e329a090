from .chains import Chain, Target, target_of, to_chains
from .conjugacy import ConjugateDraw, detect_conjugacy
from .plan import (Block, ExactDiscrete, MHStep, PlanConfig, SamplerPlan, describe_plan,
                   plan_inference)
from .rules import RULES, ConditionalForm, RewriteRule, derive_conditional, neighbor_references

__all__ = ["Chain", "Target", "target_of", "to_chains", "ConjugateDraw", "detect_conjugacy",
           "Block", "ExactDiscrete", "MHStep", "PlanConfig", "SamplerPlan", "describe_plan",
           "plan_inference", "RULES", "ConditionalForm", "RewriteRule", "derive_conditional",
           "neighbor_references"]
