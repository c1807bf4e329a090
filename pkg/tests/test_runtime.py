import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plateau import (RunConfig, initial_store, log_density_at, lower, map, parse_model, sample,
                     validate_model)
from plateau.errors import DataError, ModelError
from plateau.models import FIXTURES
from plateau.runtime import log_joint_of, run
from plateau.runtime.engine import mh_accept
from plateau.runtime.layout import expand_levels
from plateau.synth import lda_corpus, regression_points

from conftest import SMALL_HYPER, fixture_model


def model_of(source):
    return validate_model(parse_model(source))


def trace_json(model, trace):
    return trace.to_json(model)


# -- layouts -----------------------------------------------------------------------

@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 6), min_size=1, max_size=8))
def test_ragged_layout_offsets_are_prefix_sums(lengths):
    lengths = np.array(lengths)
    idx, n, parents = expand_levels(
        [("i", "M"), ("j", "N")],
        lambda upper, ix, rows: len(lengths) if upper == "M" else lengths[ix["i"]])
    assert n == lengths.sum()
    sizes, starts = parents[1]
    assert np.array_equal(starts, np.cumsum(lengths) - lengths)
    assert np.array_equal(idx["i"], np.repeat(np.arange(len(lengths)), lengths))
    assert np.array_equal(idx["j"], np.concatenate([np.arange(k) for k in lengths] + [[]]))


# -- stores and data checks -----------------------------------------------------------

def test_missing_and_misshapen_observed_arrays():
    m = fixture_model("lda")
    hyper = SMALL_HYPER["lda"]
    with pytest.raises(DataError, match="missing array for observed variable w"):
        initial_store(m, hyper, {})
    with pytest.raises(DataError, match="w: expected 6 values, got 5"):
        initial_store(m, hyper, {"w": [0, 1, 2, 3, 0]})
    with pytest.raises(DataError, match="missing hyperparameter"):
        initial_store(m, {"K": 2}, {"w": []})


def test_out_of_range_observation_detected():
    m = fixture_model("lda")
    store = initial_store(m, SMALL_HYPER["lda"], {"w": [0, 1, 2, 3, 9, 0]})
    assert log_joint_of(m, store) == -np.inf


def test_nan_in_store_fails():
    m = fixture_model("gmm")
    store = initial_store(m, SMALL_HYPER["gmm"], {"x": [0.0, 1.0, np.nan, 2.0, 3.0]})
    with pytest.raises(ValueError):
        log_joint_of(m, store)


# -- log joint -------------------------------------------------------------------------

GAUSS = "model(N: int) { x = Gaussian(1.0, 2.0).sample(N)\n observe(x) }"


def test_log_joint_two_gaussians_closed_form():
    m = model_of(GAUSS)
    store = initial_store(m, {"N": 2}, {"x": [0.3, -1.2]})
    want = sum(-0.5 * math.log(2 * math.pi * 2.0) - (x - 1.0) ** 2 / 4.0 for x in (0.3, -1.2))
    assert abs(log_joint_of(m, store) - want) < 1e-12


def test_empty_data_gives_prior_only():
    m = fixture_model("gmm")
    store = initial_store(m, {"N": 0, "K": 2}, {"x": []})
    # Factors are phi, mu, sigma, then the (empty) plate over the data.
    want = sum(log_density_at(f, store) for f in lower(m).expr.factors[:3])
    assert log_joint_of(m, store) == pytest.approx(want, abs=1e-12)


def test_log_joint_independent_of_workers():
    data, _ = lda_corpus(M=60, V=80, K=5, doc_len=40, seed=3)
    m = fixture_model("lda")
    store = initial_store(m, data.hyper, data.arrays, seed=1)
    values = {log_joint_of(m, store, threads=t) for t in (1, 2, 8)}
    assert len(values) == 1


# -- Metropolis-Hastings ------------------------------------------------------------------

def test_mh_accept_rule():
    assert mh_accept(-3.0, 0.0, math.log(0.999999))
    assert not mh_accept(-np.inf, -np.inf, -10.0)
    assert not mh_accept(np.nan, np.nan, -10.0)
    assert mh_accept(-1.0, -0.5, math.log(0.5))
    assert not mh_accept(-1.0, -0.5, math.log(0.7))


def test_mh_never_accepts_nonpositive_variance():
    data, _ = regression_points(N=50, K=3, seed=2)
    m = fixture_model("regression")
    init = initial_store(m, data.hyper, data.arrays, seed=0)
    trace = sample(m, data.hyper, init, 400, "mh", RunConfig(seed=4, proposal_scale=5.0))
    taus = [s["tau"][0] for s in trace.samples]
    assert min(taus) > 0
    assert np.all(np.isfinite(trace.log_joint))


def _batch_means_se(x, batches=50):
    b = np.asarray(x)[: len(x) // batches * batches].reshape(batches, -1).mean(axis=1)
    return b.std(ddof=1) / math.sqrt(batches)


def test_mh_gaussian_smoke():
    m = model_of("model() { x = Gaussian(1.0, 4.0).sample() }")
    trace = sample(m, {}, None, 100_000, "mh", RunConfig(seed=8, proposal_scale=4.0))
    x = np.array([s["x"][0] for s in trace.samples])
    assert abs(x.mean() - 1.0) < 4 * _batch_means_se(x)
    assert abs(x.var() - 4.0) < 4 * _batch_means_se((x - 1.0) ** 2)


# -- Gibbs ---------------------------------------------------------------------------------

BETA_BERNOULLI = """model BetaBernoulli(N: int) {
  p = Beta(2.0, 3.0).sample()
  x = Bernoulli(p).sample(N)
  observe(x)
}"""


def test_beta_bernoulli_posterior_mean():
    m = model_of(BETA_BERNOULLI)
    init = initial_store(m, {"N": 2}, {"x": [1, 1]})
    trace = sample(m, {"N": 2}, init, 20_000, "gibbs", RunConfig(seed=3))
    p = np.array([s["p"][0] for s in trace.samples])
    a, b = 2.0 + 2, 3.0 + 0
    exact_mean = a / (a + b)
    exact_sd = math.sqrt(a * b / ((a + b) ** 2 * (a + b + 1)))
    assert abs(p.mean() - exact_mean) < 3 * exact_sd / math.sqrt(p.size)


def test_everything_observed_gives_constant_trace():
    m = model_of(GAUSS)
    init = initial_store(m, {"N": 3}, {"x": [0.1, 0.2, 0.3]})
    trace = sample(m, {"N": 3}, init, 5, "gibbs")
    assert len(set(trace.log_joint)) == 1
    assert all(np.array_equal(s["x"], init.vals["x"]) for s in trace.samples)
    out = map(m, set(), {"N": 3}, init.copy(), 1)
    assert np.array_equal(out.vals["x"], init.vals["x"])


def test_single_topic_lda_is_degenerate():
    data, _ = lda_corpus(M=5, V=6, K=1, doc_len=7, seed=0)
    m = fixture_model("lda")
    init = initial_store(m, data.hyper, data.arrays, seed=0)
    trace = sample(m, data.hyper, init, 10, "gibbs", RunConfig(seed=1))
    for s in trace.samples:
        assert np.all(s["theta"] == 1.0)
        assert np.all(s["z"] == 0)
        assert np.allclose(s["phi"].sum(axis=1), 1.0)


@pytest.mark.parametrize("name", FIXTURES)
@pytest.mark.parametrize("method", ["gibbs", "mwg", "mh"])
def test_thread_count_does_not_change_trace(name, method):
    m = fixture_model(name)
    hyper = SMALL_HYPER[name]
    arrays = initial_store(m, hyper, {}, seed=99, observed=()).vals
    data = {v: arrays[v] for v in m.observed}
    outs = []
    for threads in (1, 2, 8):
        init = initial_store(m, hyper, data, seed=5)
        trace = sample(m, hyper, init, 15, method, RunConfig(seed=11, threads=threads))
        outs.append(trace_json(m, trace))
    assert outs[0] == outs[1] == outs[2]
    for s in outs[0]["samples"]:
        for v in m.observed:
            assert s[v] == data[v].ravel().tolist()


def test_map_is_running_maximum():
    m = fixture_model("gmm")
    hyper = SMALL_HYPER["gmm"]
    init = initial_store(m, hyper, {"x": [-2.0, -1.9, 0.1, 2.0, 2.2]}, seed=0)
    trace, _ = run(m, hyper, init, 50, "gibbs", RunConfig(seed=2))
    assert trace.map_log_joint == max(trace.log_joint)
    best = init.copy()
    best.vals = {k: v.copy() for k, v in trace.map_state.items()}
    assert log_joint_of(m, best) == trace.map_log_joint
    out = map(m, set(), hyper, init.copy(), 50, "gibbs", RunConfig(seed=2))
    assert log_joint_of(m, out) == trace.map_log_joint


def test_map_with_observed_phi_leaves_phi_untouched():
    data, _ = lda_corpus(M=20, V=30, K=3, doc_len=20, seed=0)
    m = fixture_model("lda")
    store = initial_store(m, data.hyper, data.arrays, seed=0)
    phi = store.vals["phi"].copy()
    out = map(m, {"phi"}, data.hyper, store, 10, "gibbs", RunConfig(seed=1))
    assert out.vals["phi"].tobytes() == phi.tobytes()
    with pytest.raises(ModelError):
        map(m, {"psi"}, data.hyper, store, 1)


def test_run_argument_errors():
    m = fixture_model("gmm")
    init = initial_store(m, SMALL_HYPER["gmm"], {"x": [0.0] * 5})
    with pytest.raises(ModelError):
        sample(m, SMALL_HYPER["gmm"], init, 5, "nuts")
    with pytest.raises(ModelError):
        sample(m, SMALL_HYPER["gmm"], init, 0)


def test_thinning_and_burnin():
    m = fixture_model("gmm")
    init = initial_store(m, SMALL_HYPER["gmm"], {"x": [0.0, 1, 2, 3, 4]})
    trace = sample(m, SMALL_HYPER["gmm"], init, 10, "gibbs", RunConfig(thin=3, burnin=4))
    assert len(trace.log_joint) == 10 and len(trace.samples) == 4
    full = sample(m, SMALL_HYPER["gmm"], init, 14, "gibbs", RunConfig())
    assert trace.log_joint == full.log_joint[4:]
