"""Compiling model expressions to vectorised closures.

A compiled expression takes an ``Env`` holding one row per plate element
being evaluated: index arrays for every bound plate index and the current
variable values.  Scalars evaluate to shape ``(n,)`` or ``()``; vector
expressions carry their components on a trailing axis.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dsl.ast import BinOp, Call, Index, Name, Neg, Num, SumExpr, format_expr
from ..errors import DataError, ModelError
from .layout import expand_levels


class Env:
    __slots__ = ("idx", "n", "vals")

    def __init__(self, idx, n, vals):
        self.idx = idx
        self.n = n
        self.vals = vals

    def subset(self, rows) -> "Env":
        """Restrict to the rows selected by an integer or boolean array."""
        n = int(rows.sum()) if rows.dtype == bool else int(rows.size)
        return Env({k: v[rows] for k, v in self.idx.items()}, n, self.vals)


@dataclass(frozen=True)
class Compiled:
    fn: object
    vector: bool

    def __call__(self, env):
        return self.fn(env)


def as_rows(v, n):
    """Broadcast a scalar-per-row value to shape (n,)."""
    v = np.asarray(v)
    if v.ndim == 0:
        return np.broadcast_to(v, (n,))
    return v


def _arith(op, a, b):
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.true_divide(a, b)


_FUNCS = {"pow": np.power, "max": np.maximum, "min": np.minimum,
          "exp": np.exp, "log": np.log, "sqrt": np.sqrt}


class Compiler:
    """Compiles expressions of one model against fixed hyperparameters."""

    def __init__(self, model, hyper: dict, layouts: dict):
        self.model = model
        self.hyper = hyper
        self.layouts = layouts
        self._consts = {}

    # -- constants -------------------------------------------------------------------

    def const_value(self, name):
        if name in self._consts:
            return self._consts[name]
        decl = self.model.consts[name]
        v = self.compile(decl.expr, frozenset())(Env({}, 1, {}))
        v = np.asarray(v)
        self._consts[name] = v
        return v

    def size(self, upper, idx, n):
        return self.compile(upper, frozenset(idx))(Env(idx, n, {}))

    # -- expressions ------------------------------------------------------------------

    def compile(self, e, scope: frozenset) -> Compiled:
        if isinstance(e, Num):
            v = np.int64(e.value) if isinstance(e.value, int) else np.float64(e.value)
            return Compiled(lambda env: v, False)
        if isinstance(e, Name):
            return self._name(e.id, scope)
        if isinstance(e, Index):
            return self._index(e, scope)
        if isinstance(e, BinOp):
            a, b = self.compile(e.left, scope), self.compile(e.right, scope)
            op = e.op
            if a.vector == b.vector:
                return Compiled(lambda env: _arith(op, a(env), b(env)), a.vector)

            def mixed(env):
                x, y = a(env), b(env)
                if not a.vector:
                    x = np.asarray(x)[..., None]
                else:
                    y = np.asarray(y)[..., None]
                return _arith(op, x, y)
            return Compiled(mixed, True)
        if isinstance(e, Neg):
            a = self.compile(e.operand, scope)
            return Compiled(lambda env: -a(env), a.vector)
        if isinstance(e, Call):
            return self._call(e, scope)
        if isinstance(e, SumExpr):
            return self._sum(e, scope)
        raise ModelError(f"cannot evaluate {e!r}")

    def _name(self, name, scope) -> Compiled:
        if name in scope:
            return Compiled(lambda env: env.idx[name], False)
        if name in self.model.vars:
            info = self.model.vars[name]
            if info.dims:
                raise ModelError(f"{name} is used without its plate indices")
            vector = info.event is not None
            if vector:
                return Compiled(lambda env: env.vals[name][0], True)
            return Compiled(lambda env: env.vals[name][0], False)
        if name in self.hyper:
            v = self.hyper[name]
            return Compiled(lambda env: v, np.ndim(v) > 0)
        if name in self.model.consts:
            v = self.const_value(name)
            return Compiled(lambda env: v, v.ndim > 0)
        raise ModelError(f"undefined name {name}")

    def _index(self, e: Index, scope) -> Compiled:
        parts = [self.compile(i, scope) for i in e.indices]
        base = e.base
        if base in self.model.vars:
            lay = self.layouts[base]
            r = len(lay.names)
            dims = parts[:r]
            extra = parts[r:]
            if len(extra) > 1 or (extra and lay.event is None):
                raise ModelError(f"too many indices for {base}")
            if extra:
                comp = extra[0]

                def elem(env):
                    pos = lay.positions([p(env) for p in dims], env.n)
                    k = as_rows(comp(env), env.n)
                    if env.n and (k.min() < 0 or k.max() >= lay.event):
                        raise DataError(f"component index out of range for {base}")
                    return env.vals[base][pos, k]
                return Compiled(elem, False)

            def row(env):
                return env.vals[base][lay.positions([p(env) for p in dims], env.n)]
            return Compiled(row, lay.event is not None)
        if base in self.hyper or base in self.model.consts:
            if len(parts) != 1:
                raise ModelError(f"{base} takes a single index")
            p = parts[0]

            def arr_value():
                return np.asarray(self.hyper[base] if base in self.hyper else self.const_value(base))

            arr = arr_value()
            if arr.ndim != 1:
                raise ModelError(f"{base} is not an array")

            def lookup(env):
                k = np.asarray(p(env))
                if k.size and (k.min() < 0 or k.max() >= arr.shape[0]):
                    raise DataError(f"index out of range for {base}")
                return arr[k]
            return Compiled(lookup, False)
        raise ModelError(f"undefined name {base}")

    def _call(self, e: Call, scope) -> Compiled:
        args = [self.compile(a, scope) for a in e.args]
        if e.func == "vector":
            n, c = args

            def vec(env):
                length = int(np.asarray(n(env)).reshape(-1)[0])
                return np.full(length, c(env), dtype=float)
            return Compiled(vec, True)
        fn = _FUNCS[e.func]
        vector = any(a.vector for a in args)
        if len(args) == 1:
            a = args[0]

            def unary(env):
                with np.errstate(divide="ignore", invalid="ignore"):
                    return fn(a(env))
            return Compiled(unary, vector)
        a, b = args

        def binary(env):
            x, y = a(env), b(env)
            if e.func == "pow":
                x = np.asarray(x, dtype=float)
            return fn(x, y)
        return Compiled(binary, vector)

    def _sum(self, e: SumExpr, scope) -> Compiled:
        upper = self.compile(e.upper, scope)
        body = self.compile(e.body, scope | {e.index})
        if body.vector:
            raise ModelError(f"sum over a vector expression: {format_expr(e)}")
        name = e.index

        def total(env):
            size = np.asarray(upper(env))
            if size.ndim == 0:
                k = int(size)
                if k <= 0:
                    return np.zeros(env.n)
                idx = {key: np.repeat(v, k) for key, v in env.idx.items()}
                idx[name] = np.tile(np.arange(k, dtype=np.int64), env.n)
                vals = as_rows(body(Env(idx, env.n * k, env.vals)), env.n * k)
                return np.asarray(vals, dtype=float).reshape(env.n, k).sum(axis=1)
            idx, m, parents = expand_levels([(name, None)], lambda u, i, n: size, env.idx, env.n)
            vals = as_rows(body(Env(idx, m, env.vals)), m)
            parent = np.repeat(np.arange(env.n), parents[0][0])
            return np.bincount(parent, weights=vals, minlength=env.n)
        return Compiled(total, False)
