import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exmeas.dsl import (BinOp, DomainError, DSLFunction, Neg, Num, ParseError, UnboundVariableError, Var,
                        as_function, evaluate, free_variables, parse, pretty_print)
from helpers import random_tree, tree_depth

CE = "ind(x,0,1)*ind(mod(floor(y),2),0,0)"


def test_exp_at_origin():
    assert evaluate(parse("exp(-x-y)"), {"x": 0, "y": 0}) == 1.0


def test_counterexample_values():
    e = parse(CE)
    assert evaluate(e, {"x": 0.5, "y": 2.5}) == 1.0
    assert evaluate(e, {"x": 0.5, "y": 1.5}) == 0.0
    assert evaluate(e, {"x": 1.5, "y": 2.5}) == 0.0


def test_unbalanced_paren_offset():
    with pytest.raises(ParseError) as info:
        parse("1/(1+x")
    assert info.value.position == 6


@pytest.mark.parametrize("text,pos", [("", 0), ("x +", 3), ("foo(x)", 0), ("x $ y", 2), ("ind(x,1)", 0),
                                      ("(x))", 3)])
def test_parse_error_positions(text, pos):
    with pytest.raises(ParseError) as info:
        parse(text)
    assert info.value.position == pos
    assert 0 <= info.value.position <= len(text)


def test_hat_and_power():
    assert evaluate(parse("min(x,1)"), {"x": 3}) == 1.0
    assert evaluate(parse("x^2"), {"x": -2}) == 4.0


def test_domain_errors():
    with pytest.raises(DomainError):
        evaluate(parse("log(x)"), {"x": 0})
    with pytest.raises(DomainError):
        evaluate(parse("1/x"), {"x": 0})
    with pytest.raises(DomainError):
        evaluate(parse("mod(x,0)"), {"x": 1})
    with pytest.raises(UnboundVariableError):
        evaluate(parse("x+y"), {"x": 1})


def test_precedence():
    # ^ binds tighter than unary minus, which binds tighter than * and /
    assert parse("-x^2") == Neg(BinOp("^", Var("x"), Num(2.0)))
    assert parse("x^y^z") == BinOp("^", Var("x"), BinOp("^", Var("y"), Var("z")))
    assert parse("x-y-z") == BinOp("-", BinOp("-", Var("x"), Var("y")), Var("z"))
    assert parse("x/y*z") == BinOp("*", BinOp("/", Var("x"), Var("y")), Var("z"))
    assert evaluate(parse("-x^2"), {"x": 3}) == -9.0
    assert evaluate(parse("2^-1"), {}) == 0.5


def test_mod_and_ind_semantics():
    assert evaluate(parse("mod(x,2)"), {"x": -1}) == 1.0
    assert evaluate(parse("ind(x,0,1)"), {"x": 1}) == 1.0
    assert evaluate(parse("ind(x,0,1)"), {"x": 0}) == 1.0
    assert evaluate(parse("ind(x,0,1)"), {"x": 1 + 1e-12}) == 0.0


def test_piecewise_guards_branches():
    e = parse("piecewise(ind(x,0,0), 5, log(x))")
    out = evaluate(e, {"x": np.array([0.0, 1.0, np.e])})
    assert np.allclose(out, [5.0, 0.0, 1.0])


def test_vectorised_evaluation_broadcasts():
    out = evaluate(parse("x+y"), {"x": np.arange(3)[:, None], "y": [0.0, 10.0]})
    assert out.shape == (3, 2)
    assert out[2, 1] == 12.0


@pytest.mark.parametrize("text", ["1.5", "(x+y)*z", CE, "x^-y", "-(x+1)", "--x", "(x^y)^z", "x-(y-z)",
                                  "piecewise(x, 1, y, 2, 3)", "1e+20*k", "v/(k*2)"])
def test_round_trip_examples(text):
    e = parse(text)
    assert parse(pretty_print(e)) == e


def test_literal_prints_plainly():
    assert pretty_print(parse("1.5")) == "1.5"


def test_round_trip_random_trees():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        e = random_tree(rng, 6)
        assert tree_depth(e) <= 6
        assert parse(pretty_print(e)) == e


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_round_trip_property(seed):
    e = random_tree(np.random.default_rng(seed), 6)
    assert parse(pretty_print(e)) == e


def test_free_variables():
    assert free_variables(parse(CE)) == {"x", "y"}
    assert free_variables(parse("3")) == frozenset()


def test_dsl_function_arity_and_zero():
    g = DSLFunction(CE, ("x", "y"))
    assert g(0.5, 2.5) == 1.0
    assert g.depends_on("y") and not g.depends_on("z")
    with pytest.raises(ValueError):
        DSLFunction("x+z", ("x", "y"))
    assert as_function("0", ("x",)).is_zero
    assert as_function(None, ("x", "y")).is_zero
    assert not as_function(lambda x: x, ("x",)).is_zero


def test_dsl_function_equality():
    assert DSLFunction("x+1", ("x",)) == DSLFunction("x + 1", ("x",))
    assert DSLFunction("x+1", ("x",)) != DSLFunction("x+2", ("x",))


def test_evaluation_is_deterministic():
    e = parse("exp(-x)*abs(y-3)+floor(z)")
    env = {"x": 0.3, "y": 1.0, "z": 2.7}
    assert evaluate(e, env) == evaluate(e, env)
