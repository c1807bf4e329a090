"""Distribution primitives and data-parallel variate generation.

All routines are vectorised: parameters and values are numpy arrays that
broadcast against each other, one entry per plate element.  Vector-valued
families (Dirichlet, and the probability argument of Categorical) carry the
event dimension on the last axis.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betaln, gammaln, xlog1py, xlogy

from .parallel import ParallelExecutor, chunk_slices, serial
from numba import njit

from .rng import RngStream, philox_uniform_pair

LOG_2PI = float(np.log(2.0 * np.pi))
SIMPLEX_TOL = 1e-9

# Slot reserved for the shape < 1 boost uniform of the gamma sampler.
_BOOST_SLOT = 0x00FFFFFF


class ParameterError(ValueError):
    """Distribution parameters outside their domain."""


@dataclass(frozen=True)
class FamilyInfo:
    name: str
    arity: int
    support: str          # real | positive | unit | simplex | index | binary | interval
    discrete: bool = False
    vector: bool = False  # first argument is the event dimension


FAMILIES = {
    "Dirichlet": FamilyInfo("Dirichlet", 2, "simplex", vector=True),
    "Categorical": FamilyInfo("Categorical", 2, "index", discrete=True),
    "Gaussian": FamilyInfo("Gaussian", 2, "real"),
    "InverseGamma": FamilyInfo("InverseGamma", 2, "positive"),
    "Gamma": FamilyInfo("Gamma", 2, "positive"),
    "Beta": FamilyInfo("Beta", 2, "unit"),
    "Bernoulli": FamilyInfo("Bernoulli", 1, "binary", discrete=True),
    "Uniform": FamilyInfo("Uniform", 2, "interval"),
}


def _check_nan(*arrays):
    for a in arrays:
        a = np.asarray(a)
        if a.dtype.kind == "f" and np.isnan(a).any():
            raise ValueError("NaN passed to a log density")


# -- log densities -----------------------------------------------------------

def gaussian_logpdf(x, mean, var):
    x, mean, var = (np.asarray(a, dtype=float) for a in (x, mean, var))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -0.5 * (LOG_2PI + np.log(var)) - 0.5 * (x - mean) ** 2 / var
    return np.where(var > 0, out, -np.inf)


def gamma_logpdf(x, shape, scale):
    x, shape, scale = (np.asarray(a, dtype=float) for a in (x, shape, scale))
    ok = (x >= 0) & (shape > 0) & (scale > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = xlogy(shape - 1.0, x) - x / scale - gammaln(shape) - shape * np.log(scale)
    return np.where(ok, out, -np.inf)


def inverse_gamma_logpdf(x, shape, scale):
    x, shape, scale = (np.asarray(a, dtype=float) for a in (x, shape, scale))
    ok = (x > 0) & (shape > 0) & (scale > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = shape * np.log(scale) - gammaln(shape) - (shape + 1.0) * np.log(x) - scale / x
    return np.where(ok, out, -np.inf)


def beta_logpdf(x, a, b):
    x, a, b = (np.asarray(v, dtype=float) for v in (x, a, b))
    ok = (x >= 0) & (x <= 1) & (a > 0) & (b > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = xlogy(a - 1.0, x) + xlog1py(b - 1.0, -x) - betaln(a, b)
    return np.where(ok, out, -np.inf)


def uniform_logpdf(x, lo, hi):
    x, lo, hi = (np.asarray(v, dtype=float) for v in (x, lo, hi))
    ok = (x >= lo) & (x <= hi) & (hi > lo)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -np.log(hi - lo)
    return np.where(ok, out, -np.inf)


def bernoulli_logpmf(x, p):
    x = np.asarray(x)
    p = np.asarray(p, dtype=float)
    ok = ((x == 0) | (x == 1)) & (p >= 0) & (p <= 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(x == 1, np.log(p), np.log1p(-p))
    return np.where(ok, out, -np.inf)


def categorical_logpmf(x, probs):
    """``probs`` has the categories on its last axis."""
    x = np.asarray(x)
    probs = np.asarray(probs, dtype=float)
    k = probs.shape[-1]
    ok = (x >= 0) & (x < k)
    xi = np.where(ok, x, 0).astype(np.intp)
    p = np.take_along_axis(np.broadcast_to(probs, xi.shape + (k,)),
                           xi[..., None], axis=-1)[..., 0]
    with np.errstate(divide="ignore"):
        out = np.log(p)
    return np.where(ok & (p >= 0), out, -np.inf)


def dirichlet_logpdf(x, alpha):
    """Log density of simplex rows ``x`` under concentrations ``alpha``."""
    x = np.asarray(x, dtype=float)
    alpha = np.broadcast_to(np.asarray(alpha, dtype=float), x.shape)
    ok = (np.all(x >= 0, axis=-1) & (np.abs(x.sum(axis=-1) - 1.0) <= 1e-8)
          & np.all(alpha > 0, axis=-1))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (gammaln(alpha.sum(axis=-1)) - gammaln(alpha).sum(axis=-1)
               + xlogy(alpha - 1.0, x).sum(axis=-1))
    return np.where(ok, out, -np.inf)


def family_logpdf(family: str, x, args):
    """Vectorised log density; ``args`` exclude Dirichlet/Categorical dims."""
    if family == "Gaussian":
        return gaussian_logpdf(x, *args)
    if family == "Categorical":
        return categorical_logpmf(x, args[0])
    if family == "Dirichlet":
        return dirichlet_logpdf(x, args[0])
    if family == "Bernoulli":
        return bernoulli_logpmf(x, args[0])
    if family == "Beta":
        return beta_logpdf(x, *args)
    if family == "Gamma":
        return gamma_logpdf(x, *args)
    if family == "InverseGamma":
        return inverse_gamma_logpdf(x, *args)
    if family == "Uniform":
        return uniform_logpdf(x, *args)
    raise ValueError(f"unknown distribution family {family}")


# -- variate generation --------------------------------------------------------

@njit(cache=True, nogil=True)
def _gamma_kernel(shape, element, counter, stream, k0, k1, boost_slot, out):
    for i in range(shape.size):
        s = shape[i]
        el = element[i]
        a = s + 1.0 if s < 1.0 else s
        d = a - 1.0 / 3.0
        c = 1.0 / np.sqrt(9.0 * d)
        t = np.uint64(0)
        while True:
            u1, u2 = philox_uniform_pair(el, counter, stream, np.uint64(2) * t, k0, k1)
            z = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
            u, _ = philox_uniform_pair(el, counter, stream, np.uint64(2) * t + np.uint64(1), k0, k1)
            v = (1.0 + c * z) ** 3
            if v > 0 and np.log(u) < 0.5 * z * z + d - d * v + d * np.log(v):
                out[i] = d * v
                break
            t += np.uint64(1)
        if s < 1.0:
            ub, _ = philox_uniform_pair(el, counter, stream, boost_slot, k0, k1)
            out[i] *= ub ** (1.0 / s)


def gamma_variates(shape, rng: RngStream, element):
    """Gamma(shape, 1) variates by Marsaglia and Tsang's squeeze method.

    Attempt ``t`` for an element consumes slots ``2t`` (Box-Muller normal)
    and ``2t+1`` (acceptance uniform); shapes below one take one extra
    uniform from a reserved slot for the ``U**(1/shape)`` boost.
    """
    shape = np.asarray(shape, dtype=float)
    element = np.asarray(element, dtype=np.uint64)
    shape, element = np.broadcast_arrays(shape, element)
    shape = np.ascontiguousarray(shape).ravel()
    element = np.ascontiguousarray(element).ravel()
    if np.any(~(shape > 0)) or np.any(~np.isfinite(shape)):
        raise ParameterError("gamma shape must be positive and finite")
    out = np.empty(shape.size)
    k0, k1 = rng.key
    _gamma_kernel(shape, element, np.uint64(rng.counter), np.uint64(rng.stream), k0, k1,
                  np.uint64(_BOOST_SLOT), out)
    return out


def draw_family(family: str, args, rng: RngStream, element):
    """Draw one variate per entry of ``element`` (vectorised).

    Dirichlet rows of dimension ``E`` key their gamma components by
    ``element * E + c``; Beta keys its two gammas by ``2 * element`` and
    ``2 * element + 1``.  Every other family consumes slot 0 only.
    """
    element = np.asarray(element, dtype=np.uint64)
    if family == "Gaussian":
        mean, var = (np.asarray(a, dtype=float) for a in args)
        return mean + np.sqrt(var) * rng.normal(element)
    if family == "Uniform":
        lo, hi = (np.asarray(a, dtype=float) for a in args)
        return lo + (hi - lo) * rng.uniform(element)
    if family == "Bernoulli":
        return (rng.uniform(element) < np.asarray(args[0], dtype=float)).astype(np.int64)
    if family == "Categorical":
        return categorical_from_uniform(args[0], rng.uniform(element))
    if family == "Gamma":
        shape, scale = (np.asarray(a, dtype=float) for a in args)
        shape, element_b = np.broadcast_arrays(shape, element)
        return gamma_variates(shape, rng, element_b).reshape(shape.shape) * scale
    if family == "InverseGamma":
        shape, scale = (np.asarray(a, dtype=float) for a in args)
        shape, element_b = np.broadcast_arrays(shape, element)
        return scale / gamma_variates(shape, rng, element_b).reshape(shape.shape)
    if family == "Beta":
        a, b = (np.asarray(v, dtype=float) for v in args)
        a, b, el = np.broadcast_arrays(a, b, element)
        x = gamma_variates(a, rng, 2 * el).reshape(a.shape)
        y = gamma_variates(b, rng, 2 * el + np.uint64(1)).reshape(a.shape)
        return x / (x + y)
    if family == "Dirichlet":
        alpha = np.atleast_2d(np.asarray(args[0], dtype=float))
        alpha = np.broadcast_to(alpha, (element.size, alpha.shape[-1]))
        return dirichlet_rows(alpha, rng, element)
    raise ValueError(f"unknown distribution family {family}")


def categorical_from_uniform(probs, u):
    """Inverse-CDF categorical draw; rows of ``probs`` need not be normalised."""
    probs = np.asarray(probs, dtype=float)
    u = np.asarray(u, dtype=float)
    probs = np.broadcast_to(probs, u.shape + probs.shape[-1:])
    cdf = np.cumsum(probs, axis=-1)
    target = u * cdf[..., -1]
    idx = (cdf <= target[..., None]).sum(axis=-1)
    return np.minimum(idx, probs.shape[-1] - 1).astype(np.int64)


def dirichlet_rows(alpha, rng: RngStream, rows, cols=None):
    """Gamma draws for ``alpha[r, c]`` normalised per row; see ``draw_family``."""
    alpha = np.asarray(alpha, dtype=float)
    width = alpha.shape[1]
    g = _gamma_block(alpha, rng, np.asarray(rows, dtype=np.uint64), width)
    return _normalize_rows(g)


def _gamma_block(alpha, rng, rows, width, cols=None):
    if cols is None:
        cols = np.arange(width, dtype=np.uint64)
    el = rows[:, None] * np.uint64(width) + cols[None, :]
    return gamma_variates(alpha, rng, el).reshape(alpha.shape)


def _normalize_rows(g):
    return g / g.sum(axis=1, keepdims=True)


# -- single distribution objects ----------------------------------------------

@dataclass(frozen=True)
class Distribution:
    """A concrete distribution with validated numeric parameters.

    ``params`` exclude the event dimension for Dirichlet and Categorical,
    which is implied by the length of the vector parameter.
    """

    family: str
    params: tuple = field(default=())

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown distribution family {self.family}")
        p = [np.asarray(v, dtype=float) for v in self.params]
        f = self.family
        if f in ("Dirichlet", "Categorical"):
            if len(p) != 1 or p[0].ndim != 1:
                raise ParameterError(f"{f} takes one parameter vector")
            v = p[0]
            if f == "Dirichlet" and np.any(~(v > 0)):
                raise ParameterError("Dirichlet concentrations must be positive")
            if f == "Categorical" and (np.any(v < 0) or abs(v.sum() - 1.0) > SIMPLEX_TOL):
                raise ParameterError("Categorical probabilities must sum to 1")
        elif f == "Bernoulli":
            if len(p) != 1 or not 0.0 <= float(p[0]) <= 1.0:
                raise ParameterError("Bernoulli probability must lie in [0, 1]")
        else:
            if len(p) != 2:
                raise ParameterError(f"{f} takes two parameters")
            a, b = float(p[0]), float(p[1])
            if f == "Gaussian" and not b > 0:
                raise ParameterError("Gaussian variance must be positive")
            if f in ("Gamma", "InverseGamma", "Beta") and not (a > 0 and b > 0):
                raise ParameterError(f"{f} parameters must be positive")
            if f == "Uniform" and not b > a:
                raise ParameterError("Uniform needs lower < upper")


def log_pdf(d: Distribution, x) -> float:
    _check_nan(x)
    val = family_logpdf(d.family, np.asarray(x), [np.asarray(p, dtype=float) for p in d.params])
    return float(val)


def draw(d: Distribution, rng: RngStream, element: int = 0):
    """One variate; consumes the counters documented in ``draw_family``."""
    args = [np.asarray(p, dtype=float) for p in d.params]
    if d.family == "Dirichlet":
        return draw_family("Dirichlet", args, rng, np.array([element]))[0]
    if d.family == "Categorical":
        return int(draw_family("Categorical", args, rng, np.array(element)))
    out = draw_family(d.family, args, rng, np.array(element))
    if d.family == "Bernoulli":
        return int(out)
    return float(out)


# -- batched Dirichlet ---------------------------------------------------------

class Strategy(enum.Enum):
    ROW_PARALLEL = "row"
    COLUMN_PARALLEL = "column"
    AUTO = "auto"


def resolve_strategy(rows: int, cols: int, workers: int, ratio: int = 4) -> Strategy:
    """Column-wise generation when there are too few rows to occupy the
    workers and each row is wide."""
    if rows < workers and cols >= ratio * rows:
        return Strategy.COLUMN_PARALLEL
    return Strategy.ROW_PARALLEL


@dataclass
class BatchSpec:
    rows: int
    cols: int
    concentration: np.ndarray   # (rows, cols) or shared (cols,)
    strategy: Strategy = Strategy.AUTO
    row_ids: np.ndarray | None = None  # rng element ids, default arange(rows)

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ParameterError("batch needs at least one row and one column")
        conc = np.asarray(self.concentration, dtype=float)
        conc = np.broadcast_to(conc, (self.rows, self.cols))
        if np.any(~(conc > 0)):
            raise ParameterError("Dirichlet concentrations must be positive")
        self.concentration = conc


ROW_CHUNK = 256


def sample_dirichlet_batch(spec: BatchSpec, rng: RngStream,
                           pool: ParallelExecutor | None = None) -> np.ndarray:
    """Draw ``spec.rows`` Dirichlet variates of dimension ``spec.cols``.

    Row-parallel: each task generates and normalises whole rows.
    Column-parallel: tasks fill the gamma matrix a block of columns at a time,
    then a separate pass normalises rows by their sums.  Gamma variates are
    keyed by (row, column), so both strategies return identical matrices.
    """
    pool = pool or serial()
    strategy = spec.strategy
    if strategy is Strategy.AUTO:
        strategy = resolve_strategy(spec.rows, spec.cols, pool.workers)
    rows = (np.arange(spec.rows, dtype=np.uint64) if spec.row_ids is None
            else np.asarray(spec.row_ids, dtype=np.uint64))
    conc = spec.concentration
    out = np.empty((spec.rows, spec.cols))
    row_chunks = chunk_slices(spec.rows, ROW_CHUNK)

    if strategy is Strategy.ROW_PARALLEL:
        def row_task(sl):
            g = _gamma_block(conc[sl], rng, rows[sl], spec.cols)
            out[sl] = _normalize_rows(g)
        pool.map(row_task, row_chunks)
        return out

    col_chunks = chunk_slices(spec.cols, max(1, -(-spec.cols // max(pool.workers, 1))))
    col_ids = np.arange(spec.cols, dtype=np.uint64)

    def col_task(sl):
        out[:, sl] = _gamma_block(conc[:, sl], rng, rows, spec.cols, col_ids[sl])
    pool.map(col_task, col_chunks)

    def norm_task(sl):
        out[sl] = _normalize_rows(out[sl])
    pool.map(norm_task, row_chunks)
    return out
