import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from folijet.errors import (
    DomainError,
    ExprSyntaxError,
    UnboundVariable,
    UnknownFunction,
)
from folijet.expr import Binary, Call, Num, Var, is_variable_name, parse
from folijet.scalars import DualQuadScalar, TaylorScalar


def test_parse_structure():
    prog = parse("sin(x1)^2 + 1")
    ast = prog.ast
    assert isinstance(ast, Binary) and ast.op == "+"
    assert isinstance(ast.left, Binary) and ast.left.op == "^"
    assert isinstance(ast.left.left, Call) and ast.left.left.fn == "sin"
    assert isinstance(ast.left.left.arg, Var)
    assert isinstance(ast.right, Num)


def test_syntax_error_position():
    with pytest.raises(ExprSyntaxError) as err:
        parse("x1 * (")
    assert err.value.column == 7


def test_free_variables():
    assert parse("y2_1 - 3*y1_1^2").free_variables() == {"y2_1", "y1_1"}
    assert parse("x1*y1_2").free_variables() == {"x1", "y1_2"}
    assert parse("3.5").free_variables() == set()
    assert parse("u1 + x1").free_variables() == {"u1", "x1"}
    assert parse("p_1^2 + p_2^2").free_variables() == {"p_1", "p_2"}


def test_variable_name_grammar():
    for good in ("x1", "x12", "u3", "y1_1", "y10_2", "p_1"):
        assert is_variable_name(good)
    for bad in ("x0", "y0_1", "y1_0", "p1", "xy", "foo"):
        assert not is_variable_name(bad)


def test_eval_reals():
    assert parse("x1 + x2").eval({"x1": 2.0, "x2": 3.0}) == 5.0
    assert parse("2^3^2").eval({}) == 512.0  # right-associative
    # unary minus binds tighter than ^: -x1^2 means (-x1)^2
    assert parse("-x1^2").eval({"x1": 3.0}) == 9.0
    assert parse("-(x1^2)").eval({"x1": 3.0}) == -9.0


def test_eval_taylor_cubic():
    out = parse("x1^3").eval({"x1": TaylorScalar((1.0, 1.0, 0.0, 0.0))})
    assert np.allclose(out.coeffs, (1.0, 3.0, 3.0, 1.0))


def test_eval_errors():
    with pytest.raises(UnboundVariable):
        parse("x1 + x2").eval({"x1": 1.0})
    with pytest.raises(DomainError):
        parse("log(x1)").eval({"x1": -1.0})
    with pytest.raises(UnknownFunction):
        parse("sinh(x1)")


def test_print_parse_idempotence_examples():
    for text in ("sin(x1)^2 + 1", "-x1^2 * (x2 - 3) / 7",
                 "exp(y1_1) - sqrt(x1 + 2)", "1/(9*x1^(4/3))",
                 "2^3^2", "-(x1 + x2)"):
        prog = parse(text)
        again = parse(prog.to_text())
        assert again.ast == prog.ast
        env = {name: 1.3 for name in prog.free_variables()}
        assert again.eval(env) == pytest.approx(prog.eval(env), rel=1e-14)


@given(st.floats(min_value=0.2, max_value=4.0),
       st.floats(min_value=0.2, max_value=4.0))
def test_eval_kinds_agree(a, b):
    prog = parse("x1^2 * sin(x2) + exp(x1/x2) - log(x1)")
    env_f = {"x1": a, "x2": b}
    plain = prog.eval(env_f)
    taylor = prog.eval({k: TaylorScalar((v,)) for k, v in env_f.items()})
    quad = prog.eval({
        "x1": DualQuadScalar(a, np.zeros(2), np.zeros((2, 2))),
        "x2": DualQuadScalar(b, np.zeros(2), np.zeros((2, 2))),
    })
    assert taylor.coeffs[0] == pytest.approx(plain, rel=1e-14)
    assert quad.value == pytest.approx(plain, rel=1e-14)


def test_non_integer_power_requires_positive_base():
    prog = parse("x1^(1/3)")
    assert prog.eval({"x1": 8.0}) == pytest.approx(2.0)
    with pytest.raises(DomainError):
        prog.eval({"x1": -8.0})
