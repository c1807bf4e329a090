"""Evaluation metrics."""
from __future__ import annotations

import numpy as np

from .errors import DataError


def log_predictive_probability(phi, theta, heldout) -> float:
    """Sum over held-out tokens of log10 sum_k theta[d, k] * phi[k, w].

    ``heldout`` holds one sequence of word ids per document (row of theta).
    """
    phi = np.asarray(phi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if phi.ndim != 2 or theta.ndim != 2 or theta.shape[1] != phi.shape[0]:
        raise DataError("theta must be docs x topics and phi topics x words")
    if len(heldout) != theta.shape[0]:
        raise DataError(f"expected {theta.shape[0]} held-out documents, got {len(heldout)}")
    total = 0.0
    V = phi.shape[1]
    for d, words in enumerate(heldout):
        words = np.asarray(words, dtype=np.int64)
        if words.size == 0:
            continue
        if words.min() < 0 or words.max() >= V:
            raise DataError(f"token id out of vocabulary in document {d}")
        p = theta[d] @ phi[:, words]
        total += float(np.sum(np.log10(p)))
    return total


def rmse(predictions, targets) -> float:
    p = np.asarray(predictions, dtype=float).ravel()
    t = np.asarray(targets, dtype=float).ravel()
    if p.size != t.size:
        raise DataError(f"length mismatch: {p.size} predictions, {t.size} targets")
    if p.size == 0:
        raise DataError("rmse needs at least one value")
    return float(np.sqrt(np.mean((p - t) ** 2)))
