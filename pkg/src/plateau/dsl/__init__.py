from .ast import ModelAST, Decl, DistRef, Loop, Param
from .check import CheckedModel, VarInfo, validate_model
from .parser import parse_model
from .printer import to_source

__all__ = ["ModelAST", "Decl", "DistRef", "Loop", "Param", "CheckedModel", "VarInfo",
           "parse_model", "validate_model", "to_source", "load_model"]


def load_model(path) -> CheckedModel:
    with open(path, encoding="utf-8") as fh:
        return validate_model(parse_model(fh.read()))
