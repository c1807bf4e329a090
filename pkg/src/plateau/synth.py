"""Synthetic data sets with known generating parameters."""
from __future__ import annotations

import numpy as np

from .data import DataFile


def lda_corpus(M=200, V=500, K=10, doc_len=100, alpha=0.1, beta=0.05, seed=0):
    """Documents drawn from the LDA generative process.

    Returns ``(data, truth)`` where ``truth`` holds phi, theta and z.
    """
    rng = np.random.default_rng(seed)
    phi = rng.dirichlet(np.full(V, beta), K)
    theta = rng.dirichlet(np.full(K, alpha), M)
    lengths = np.full(M, doc_len, dtype=np.int64) if np.isscalar(doc_len) else np.asarray(doc_len)
    z = np.concatenate([rng.choice(K, n, p=theta[d]) for d, n in enumerate(lengths)])
    u = rng.random(z.size)
    w = (phi.cumsum(axis=1)[z] < u[:, None]).sum(axis=1).clip(max=V - 1)
    data = DataFile({"K": K, "V": V, "M": M, "N": lengths.tolist()}, {"w": w.tolist()})
    return data, {"phi": phi, "theta": theta, "z": z}


def split_documents(data: DataFile, test_fraction=0.1, seed=0):
    """Hold out whole documents; the test set keeps the same K and V."""
    rng = np.random.default_rng(seed)
    lengths = np.asarray(data.hyper["N"])
    M = lengths.size
    n_test = max(1, int(round(M * test_fraction)))
    test_docs = np.sort(rng.choice(M, n_test, replace=False))
    offsets = np.concatenate([[0], np.cumsum(lengths)])
    w = np.asarray(data.arrays["w"])

    def subset(docs):
        words = [w[offsets[d]:offsets[d + 1]] for d in docs]
        hyper = dict(data.hyper, M=len(docs), N=[len(x) for x in words])
        return DataFile(hyper, {"w": np.concatenate(words).tolist() if words else []})

    train_docs = np.setdiff1d(np.arange(M), test_docs)
    return subset(train_docs), subset(test_docs)


def documents(data: DataFile) -> list:
    lengths = np.asarray(data.hyper["N"])
    offsets = np.concatenate([[0], np.cumsum(lengths)])
    w = np.asarray(data.arrays["w"])
    return [w[offsets[d]:offsets[d + 1]] for d in range(lengths.size)]


def gmm_points(N=10_000, centers=(-5.0, 0.0, 5.0), std=0.1, seed=0):
    rng = np.random.default_rng(seed)
    centers = np.asarray(centers, dtype=float)
    labels = rng.integers(0, centers.size, N)
    x = centers[labels] + std * rng.standard_normal(N)
    return DataFile({"N": N, "K": int(centers.size)}, {"x": x.tolist()}), {"labels": labels}


def regression_points(N=500, K=3, w=None, b=0.5, noise_var=0.1, low=-1.0, high=1.0, seed=0):
    """Rows of ``x`` uniform on [low, high]; ``y = x.w + b + noise``."""
    rng = np.random.default_rng(seed)
    w = rng.normal(0.0, 2.0, K) if w is None else np.asarray(w, dtype=float)
    x = rng.uniform(low, high, (N, K))
    y = x @ w + b + np.sqrt(noise_var) * rng.standard_normal(N)
    data = DataFile({"K": K, "N": N, "l": low, "u": high},
                    {"x": x.ravel().tolist(), "y": y.tolist()})
    return data, {"w": w, "b": b, "tau": noise_var}


def split_rows(data: DataFile, test_fraction=0.1, seed=0):
    """90/10 style split of a regression data set by row."""
    rng = np.random.default_rng(seed)
    N, K = int(data.hyper["N"]), int(data.hyper["K"])
    perm = rng.permutation(N)
    n_test = max(1, int(round(N * test_fraction)))
    x = np.asarray(data.arrays["x"]).reshape(N, K)
    y = np.asarray(data.arrays["y"])

    def subset(rows):
        return DataFile(dict(data.hyper, N=int(rows.size)),
                        {"x": x[rows].ravel().tolist(), "y": y[rows].tolist()})

    return subset(np.sort(perm[n_test:])), subset(np.sort(perm[:n_test]))
