import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plateau.cli import main
from plateau.data import DataFile, canonical_json, parse_data, read_data, write_data
from plateau.errors import DataError
from plateau.metrics import log_predictive_probability, rmse

GOLDEN = Path(__file__).parent / "golden"


@pytest.mark.parametrize("name", ["lda", "gmm", "naive_bayes", "hmm"])
def test_describe_golden(name, capsys):
    assert main(["describe", name]) == 0
    assert capsys.readouterr().out == (GOLDEN / f"describe_{name}.txt").read_text()


def test_describe_lda_strategies(capsys):
    main(["describe", "lda"])
    out = capsys.readouterr().out
    assert "ConjugateDraw Dirichlet(alpha + counts)" in out
    assert "ConjugateDraw Dirichlet(beta + counts)" in out
    assert "ExactDiscrete over K states" in out


def test_describe_regression_diagnostic(capsys):
    assert main(["describe", "regression", "--method", "gibbs"]) == 0
    assert "diagnostic: w: no conjugacy, MH fallback" in capsys.readouterr().out


def test_describe_errors(tmp_path, capsys):
    bad = tmp_path / "bad.bn"
    bad.write_text("model() { x = Frobnitz(1).sample() }")
    assert main(["describe", str(bad)]) == 2
    assert "unknown distribution family" in capsys.readouterr().err
    assert main(["describe", str(tmp_path / "missing.bn")]) == 2


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    d = tmp_path_factory.mktemp("corpus")
    assert main(["synth", "lda", "--out", str(d / "c.json"), "--test-out", str(d / "t.json"),
                 "--size", "30", "--vocab", "40", "--topics", "3", "--doc-len", "20"]) == 0
    return d


def _infer(corpus, out, *extra):
    return main(["infer", "--model", "lda", "--data", str(corpus / "c.json"), "--method",
                 "gibbs", "--samples", "16", "--seed", "42", "--observe", "", "--out",
                 str(out), *extra])


def test_infer_trace_and_determinism(corpus, tmp_path, capsys):
    assert _infer(corpus, tmp_path / "t8.json", "--threads", "8") == 0
    assert "seed=42 method=gibbs" in capsys.readouterr().out
    assert _infer(corpus, tmp_path / "t1.json", "--threads", "1") == 0
    a = (tmp_path / "t8.json").read_bytes()
    assert a == (tmp_path / "t1.json").read_bytes()
    doc = json.loads(a)
    assert set(doc) == {"model", "method", "seed", "samples", "log_joint", "map_state",
                        "timing_ms"}
    assert len(doc["log_joint"]) == 16 and len(doc["samples"]) == 16
    assert doc["map_state"] and doc["timing_ms"] == []


def test_infer_observe_phi(corpus, tmp_path):
    data = read_data(corpus / "c.json")
    K, V = data.hyper["K"], data.hyper["V"]
    phi = np.random.default_rng(0).dirichlet(np.ones(V), K)
    data.arrays["phi"] = phi.ravel().tolist()
    write_data(tmp_path / "with_phi.json", data)
    assert main(["infer", "--model", "lda", "--data", str(tmp_path / "with_phi.json"),
                 "--samples", "8", "--observe", "phi", "--out", str(tmp_path / "o.json")]) == 0
    doc = json.loads((tmp_path / "o.json").read_text())
    assert all(s["phi"] == data.arrays["phi"] for s in doc["samples"])


def test_infer_metric_csv(corpus, tmp_path):
    out = tmp_path / "t.json"
    assert _infer(corpus, out, "--metric", "lpp", "--test", str(corpus / "t.json"),
                  "--timing") == 0
    lines = Path(str(out) + ".metrics.csv").read_text().splitlines()
    assert lines[0] == "x,value,seconds"
    xs = [int(r.split(",")[0]) for r in lines[1:]]
    assert xs == sorted(xs) and xs[-1] == 16
    assert len(json.loads(out.read_text())["timing_ms"]) == 16


def test_infer_data_errors(corpus, tmp_path, capsys):
    data = read_data(corpus / "c.json")
    data.arrays["w"] = data.arrays["w"][:-1]
    write_data(tmp_path / "short.json", data)
    assert main(["infer", "--model", "lda", "--data", str(tmp_path / "absent.json")]) == 2
    assert main(["infer", "--model", "lda", "--data", str(tmp_path / "short.json"),
                 "--out", str(tmp_path / "o.json")]) == 2
    err = capsys.readouterr().err
    assert "w: expected" in err and "got" in err
    del data.arrays["w"]
    write_data(tmp_path / "none.json", data)
    assert main(["infer", "--model", "lda", "--data", str(tmp_path / "none.json")]) == 2
    assert "missing array for observed variable w" in capsys.readouterr().err
    assert main(["infer", "--model", "lda", "--data", str(corpus / "c.json"),
                 "--observe", "psi"]) == 2


@pytest.mark.parametrize("argv", [
    [], ["frobnicate"], ["infer", "--model", "lda"], ["infer", "--samples", "x"],
    ["describe", "lda", "--method", "hmc"], ["bench", "gmm", "--sizes", "a,b"],
])
def test_usage_errors(argv, capsys):
    assert main(argv) == 1


def test_metric_needs_test_file(corpus, tmp_path):
    assert _infer(corpus, tmp_path / "o.json", "--metric", "rmse") == 1


def test_bench_csv(tmp_path, capsys):
    assert main(["bench", "gmm", "--sizes", ""]) == 0
    assert capsys.readouterr().out == "x,value,seconds\n"
    out = tmp_path / "b.csv"
    assert main(["bench", "lda", "--sizes", "2,4", "--samples", "1", "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "x,value,seconds" and [r.split(",")[0] for r in rows[1:]] == ["2", "4"]


# -- data files ------------------------------------------------------------------

def test_data_round_trip(corpus, tmp_path):
    src = (corpus / "c.json").read_bytes()
    write_data(tmp_path / "copy.json", read_data(corpus / "c.json"))
    assert (tmp_path / "copy.json").read_bytes() == src


@settings(max_examples=50, deadline=None)
@given(st.dictionaries(st.text("abcxyz", min_size=1, max_size=3), st.integers(0, 99)),
       st.dictionaries(st.text("uvw", min_size=1, max_size=3),
                       st.lists(st.one_of(st.integers(-5, 5),
                                          st.floats(-1e6, 1e6, allow_nan=False)), max_size=6)))
def test_canonical_json_round_trip(hyper, arrays):
    text = canonical_json(DataFile(hyper, arrays).to_json())
    assert canonical_json(parse_data(text).to_json()) == text


def test_malformed_data():
    for text in ["[1]", "{", '{"arrays": {"w": 3}}', '{"hyper": [], "arrays": {}}']:
        with pytest.raises(DataError):
            parse_data(text)


# -- metrics ---------------------------------------------------------------------

def test_lpp_examples():
    phi = np.array([[0.1, 0.2, 0.7]])
    assert log_predictive_probability(phi, [[1.0]], [[2]]) == pytest.approx(math.log10(0.7))
    uniform = np.full((2, 10), 0.1)
    theta = np.full((3, 2), 0.5)
    held = [[0, 1, 2], [9], [4, 4]]
    assert log_predictive_probability(uniform, theta, held) == pytest.approx(-6.0)
    with pytest.raises(DataError):
        log_predictive_probability(uniform, theta, [[0], [10], []])


def test_rmse_examples():
    assert rmse([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0
    assert rmse([0, 0], [3, 4]) == pytest.approx(math.sqrt(12.5))
    with pytest.raises(DataError):
        rmse([1, 2], [1])


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=20), st.integers(0, 10))
def test_metrics_are_pure(values, seed):
    targets = np.random.default_rng(seed).normal(size=len(values))
    assert rmse(values, targets) == rmse(list(values), targets.copy())
