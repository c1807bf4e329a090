"""Scope and type checking for parsed models."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..distributions import FAMILIES
from ..errors import ValidationError
from .ast import (BinOp, Call, Decl, Expr, Index, Loop, ModelAST, Name, Neg,
                  Num, SumExpr, referenced_names, walk)


@dataclass(frozen=True)
class VarInfo:
    """Shape and type of one random variable.

    ``dims`` lists the plate levels (loop context followed by the extra level
    introduced by ``.sample(n)``); ``event`` is the vector length of
    Dirichlet-valued variables.
    """

    name: str
    decl: Decl
    dims: tuple
    event: Optional[Expr]
    dtype: str

    @property
    def family(self) -> str:
        return self.decl.dist.family

    @property
    def index_names(self) -> tuple:
        return tuple(lp.index for lp in self.dims)

    @property
    def discrete(self) -> bool:
        return FAMILIES[self.family].discrete


@dataclass
class CheckedModel:
    ast: ModelAST
    hyper: dict                        # name -> declared type
    vars: dict                         # random variable name -> VarInfo
    consts: dict                       # top-level deterministic name -> Decl
    locals: dict                       # loop-level deterministic name -> Decl
    categorical_index_uses: frozenset  # (indexing variable, indexed array)
    observed: frozenset = field(default_factory=frozenset)

    @property
    def var_order(self) -> tuple:
        return tuple(self.vars)

    @property
    def latent(self) -> tuple:
        return tuple(v for v in self.vars if v not in self.observed)


def _synthetic_index(count: Expr, owner: str, used: set) -> str:
    cand = None
    if isinstance(count, Name) and count.id.lower() != count.id:
        cand = count.id.lower()
    if cand is None or cand in used:
        cand = f"{owner}_i"
    while cand in used:
        cand += "_"
    return cand


def _all_names(ast: ModelAST) -> set:
    used = {p.name for p in ast.hyperparams} | {d.name for d in ast.decls}
    for d in ast.decls:
        exprs = list(d.dist.args) if d.dist else [d.expr]
        if d.sample_count is not None:
            exprs.append(d.sample_count)
        for e in exprs:
            for node in walk(e):
                if isinstance(node, SumExpr):
                    used.add(node.index)
    return used


class _Checker:
    def __init__(self, ast: ModelAST):
        self.ast = ast
        self.hyper = {p.name: p.type for p in ast.hyperparams}
        self.vars: dict = {}
        self.consts: dict = {}
        self.locals: dict = {}
        self.det_types: dict = {}
        self.uses: set = set()
        self.used_names = _all_names(ast)

    def fail(self, msg, decl=None):
        where = f" (line {decl.line})" if decl is not None and decl.line else ""
        raise ValidationError(msg + where)

    def run(self) -> CheckedModel:
        seen = set()
        for p in self.ast.hyperparams:
            if p.name in seen:
                self.fail(f"duplicate hyperparameter {p.name}")
            seen.add(p.name)
        for d in self.ast.decls:
            if d.name in seen:
                self.fail(f"duplicate definition of {d.name}", d)
            self.check_decl(d)
            seen.add(d.name)
        for name in self.ast.observed:
            if name not in self.vars:
                if name in self.consts or name in self.locals or name in self.hyper:
                    self.fail(f"observed name {name} is not a random variable")
                self.fail(f"undefined name {name}")
        return CheckedModel(self.ast, dict(self.hyper), dict(self.vars), dict(self.consts),
                            dict(self.locals), frozenset(self.uses),
                            frozenset(self.ast.observed))

    # -- declarations
    def check_decl(self, d: Decl):
        indices: dict = {}
        for lp in d.loops:
            if lp.index in indices or lp.index in self.hyper or lp.index in self.vars:
                self.fail(f"loop index {lp.index} shadows another name", d)
            self.check_bound(lp.upper, indices, d)
            indices[lp.index] = "int"
        if d.is_random:
            dims = tuple(d.loops)
            if d.sample_count is not None:
                self.check_bound(d.sample_count, indices, d)
                used = self.used_names | set(indices)
                dims = dims + (Loop(_synthetic_index(d.sample_count, d.name, used),
                                    d.sample_count),)
            fam = d.dist.family
            event = d.dist.args[0] if FAMILIES[fam].vector else None
            dtype = "int" if FAMILIES[fam].discrete else "real"
            # the variable may refer to itself (e.g. a Markov chain's previous state)
            self.vars[d.name] = VarInfo(d.name, d, dims, event, dtype)
            self.check_dist(d, indices)
        else:
            t = self.typeof(d.expr, indices, d)
            self.det_types[d.name] = (t, len(d.loops))
            if d.loops:
                self.locals[d.name] = d
            else:
                self.consts[d.name] = d
            self.record_uses(d.expr)

    def check_bound(self, e, indices, d):
        for n in referenced_names(e):
            if n not in self.hyper and n not in indices:
                if self.known(n):
                    self.fail(f"plate bound may only use hyperparameters and enclosing "
                              f"indices, found {n}", d)
                self.fail(f"undefined name {n}", d)
        if self.typeof(e, indices, d) != "int":
            self.fail("plate bound is not integer-typed", d)

    def check_dist(self, d: Decl, indices):
        fam = d.dist.family
        args = d.dist.args
        types = [self.typeof(a, indices, d) for a in args]
        for a in args:
            self.record_uses(a)
        if FAMILIES[fam].vector or fam == "Categorical":
            if types[0] != "int":
                self.fail(f"{fam} dimension must be an integer", d)
            if fam == "Categorical" and types[1] != "vec":
                self.fail("Categorical probabilities must be a vector", d)
            if fam == "Dirichlet" and types[1] not in ("vec", "int", "real"):
                self.fail("Dirichlet concentration must be a vector or scalar", d)
        else:
            for t in types:
                if t not in ("int", "real"):
                    self.fail(f"{fam} parameters must be scalars", d)

    def record_uses(self, e):
        for node in walk(e):
            if isinstance(node, Index):
                for ix in node.indices:
                    for n in referenced_names(ix):
                        if n in self.vars and self.vars[n].discrete:
                            self.uses.add((n, node.base))

    def known(self, n) -> bool:
        return n in self.vars or n in self.det_types

    # -- expression typing: "int", "real", "vec"
    def typeof(self, e, indices, d) -> str:
        if isinstance(e, Num):
            return "int" if isinstance(e.value, int) else "real"
        if isinstance(e, Name):
            n = e.id
            if n in indices:
                return indices[n]
            if n in self.hyper:
                t = self.hyper[n]
                if t.endswith("[]"):
                    self.fail(f"array {n} used without an index", d)
                return t
            if n in self.vars:
                v = self.vars[n]
                if v.dims:
                    self.fail(f"array {n} used without an index", d)
                return "vec" if v.event is not None else v.dtype
            if n in self.det_types:
                t, nloops = self.det_types[n]
                if nloops:
                    self.fail(f"array {n} used without an index", d)
                return t
            self.fail(f"undefined name {n}", d)
        if isinstance(e, Index):
            for ix in e.indices:
                if self.typeof(ix, indices, d) != "int":
                    self.fail(f"index expression into {e.base} is not integer-typed", d)
            n, k = e.base, len(e.indices)
            if n in self.hyper:
                t = self.hyper[n]
                if not t.endswith("[]") or k != 1:
                    self.fail(f"bad indexing of hyperparameter {n}", d)
                return t[:-2]
            if n in self.vars:
                v = self.vars[n]
                nd = len(v.dims)
                if k == nd:
                    return "vec" if v.event is not None else v.dtype
                if k == nd + 1 and v.event is not None:
                    return "real"
                self.fail(f"{n} has {nd} plate dimension(s) but is indexed with {k}", d)
            if n in self.det_types:
                t, nloops = self.det_types[n]
                if k == nloops:
                    return t
                if k == nloops + 1 and t == "vec":
                    return "real"
                self.fail(f"bad indexing of {n}", d)
            self.fail(f"undefined name {n}", d)
        if isinstance(e, BinOp):
            a = self.typeof(e.left, indices, d)
            b = self.typeof(e.right, indices, d)
            if "vec" in (a, b):
                return "vec"
            if e.op == "/":
                return "real"
            return "int" if a == b == "int" else "real"
        if isinstance(e, Neg):
            return self.typeof(e.operand, indices, d)
        if isinstance(e, Call):
            ts = [self.typeof(a, indices, d) for a in e.args]
            if e.func == "vector":
                if ts[0] != "int":
                    self.fail("vector length must be an integer", d)
                return "vec"
            if e.func in ("max", "min"):
                return "int" if ts == ["int", "int"] else "real"
            return "real"
        if isinstance(e, SumExpr):
            if self.typeof(e.upper, indices, d) != "int":
                self.fail("sum bound is not integer-typed", d)
            inner = dict(indices)
            inner[e.index] = "int"
            t = self.typeof(e.body, inner, d)
            return "int" if t == "int" else "real"
        raise ValidationError(f"unsupported expression {e!r}")


def validate_model(ast: ModelAST) -> CheckedModel:
    """Check scoping and typing and record categorical index sites."""
    return _Checker(ast).run()
