"""Scaling runs that emit ``x,value,seconds`` rows for external plotting."""
from __future__ import annotations

import csv
import io
import time

from .dsl import load_model
from .models import fixture_path
from .runtime import RunConfig, initial_store, run
from .synth import gmm_points, lda_corpus

HEADER = ("x", "value", "seconds")


def _timed(model, data, sweeps, seed, threads):
    store = initial_store(model, data.hyper, data.arrays, seed)
    t0 = time.perf_counter()
    trace, _ = run(model, data.hyper, store, sweeps, "gibbs", RunConfig(seed=seed, threads=threads))
    return trace.log_joint[-1], (time.perf_counter() - t0) / sweeps


def gmm_sizes(sizes, sweeps=10, seed=0, threads=1) -> list:
    """Seconds per Gibbs sweep of the mixture model against data size."""
    model = load_model(fixture_path("gmm"))
    rows = []
    for n in sizes:
        data, _ = gmm_points(N=int(n), seed=seed)
        value, secs = _timed(model, data, sweeps, seed, threads)
        rows.append((int(n), value, secs))
    return rows


def lda_topics(topics, sweeps=5, seed=0, threads=1, M=200, V=500, doc_len=100) -> list:
    """Seconds per LDA Gibbs sweep against the number of topics."""
    model = load_model(fixture_path("lda"))
    rows = []
    for k in topics:
        data, _ = lda_corpus(M=M, V=V, K=int(k), doc_len=doc_len, seed=seed)
        value, secs = _timed(model, data, sweeps, seed, threads)
        rows.append((int(k), value, secs))
    return rows


def to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for x, value, secs in rows:
        w.writerow([x, repr(float(value)), repr(float(secs))])
    return buf.getvalue()
