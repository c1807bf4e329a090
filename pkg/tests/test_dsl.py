import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plateau import parse_model, validate_model
from plateau.dsl.ast import BinOp, Name, Num, format_expr
from plateau.dsl.printer import to_source
from plateau.errors import ParseError, ValidationError
from plateau.models import FIXTURES, fixture_path


def fixture_source(name):
    return fixture_path(name).read_text(encoding="utf-8")


def test_lda_ast():
    ast = parse_model(fixture_source("lda"))
    det = [d.name for d in ast.decls if not d.is_random]
    rnd = [d.name for d in ast.random_decls]
    assert det == ["alpha", "beta"]
    assert rnd == ["phi", "theta", "z", "w"]
    assert ast.observed_set == {"w"}


def test_minimal_model():
    ast = parse_model("model(N:int){ x = Gaussian(0,1).sample(N); observe(x) }")
    assert len(ast.decls) == 1 and ast.observed_set == {"x"}


@pytest.mark.parametrize("source,message", [
    ("model(){ x = Frobnitz(1).sample() }", "unknown distribution family"),
    ("model(){ x = Gaussian(0).sample() }", "arity mismatch"),
    ("model(){ x = Dirichlet(3).sample() }", "arity mismatch"),
    ("model(){ x = Gaussian(0,1).sample( }", "syntax error"),
])
def test_parse_errors(source, message):
    with pytest.raises(ParseError) as err:
        parse_model(source)
    assert message in str(err.value)
    assert err.value.line == 1 and err.value.column > 0


def test_parse_error_position_on_later_line():
    with pytest.raises(ParseError) as err:
        parse_model("model(N: int) {\n  x = Gaussian(0, 1).sample(N)\n  y = @\n}")
    assert err.value.line == 3 and err.value.column == 7


@pytest.mark.parametrize("source,message", [
    ("model(N:int){ x = Gaussian(q,1).sample(N) }", "undefined name q"),
    ("model(N:int){ x = Gaussian(0,1).sample(N)\n observe(y) }", "undefined name y"),
    ("model(N:int){ a = vector(N, 1.0)\n x = Gaussian(0,1).sample(N)\n observe(a) }",
     "not a random variable"),
    ("model(N:int, r: real){ x = Gaussian(0,1).sample(N)\n y = Gaussian(x[r], 1).sample() }",
     "not integer-typed"),
    ("model(N:int){ for i in 0..N { x[i] = Gaussian(i, 1).sample() }\n"
     " for j in 0..x[0] { y[j] = Gaussian(0, 1).sample() } }", "plate bound"),
])
def test_validation_errors(source, message):
    with pytest.raises(ValidationError) as err:
        validate_model(parse_model(source))
    assert message in str(err.value)


def test_categorical_index_uses():
    lda = validate_model(parse_model(fixture_source("lda")))
    assert ("z", "phi") in lda.categorical_index_uses
    gmm = validate_model(parse_model(fixture_source("gmm")))
    assert {("z", "mu"), ("z", "sigma")} <= gmm.categorical_index_uses


def test_multiple_observe_arguments():
    reg = validate_model(parse_model(fixture_source("regression")))
    assert reg.observed == {"x", "y"}


@pytest.mark.parametrize("name", FIXTURES)
def test_fixture_round_trip(name):
    ast = parse_model(fixture_source(name))
    validate_model(ast)
    again = parse_model(to_source(ast))
    assert again == ast
    assert parse_model(fixture_source(name)) == ast


_leaf = st.one_of(st.integers(0, 50).map(Num), st.sampled_from(["N", "a", "b"]).map(Name))
_expr = st.recursive(_leaf, lambda sub: st.builds(BinOp, st.sampled_from("+-*/"), sub, sub),
                     max_leaves=12)


@settings(max_examples=100, deadline=None)
@given(_expr)
def test_expression_round_trip(e):
    src = f"model(N: int, a: real, b: real) {{ x = Gaussian({format_expr(e)}, 1).sample(N) }}"
    again = parse_model(to_source(parse_model(src)))
    assert again.decls[0].dist.args[0] == e
