import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from folijet.errors import DomainError, OrderMismatch
from folijet.scalars import (
    DualQuadScalar,
    DualScalar,
    TaylorScalar,
    cos,
    exp,
    log,
    power,
    seed_gradient,
    sin,
    sqrt,
    tan,
)
from oracles import (
    central_difference,
    central_hessian,
    convolve_series,
    sympy_series_coeffs,
)

coeff = st.floats(min_value=-10, max_value=10, allow_nan=False,
                  allow_infinity=False)


@given(st.lists(coeff, min_size=1, max_size=6),
       st.lists(coeff, min_size=1, max_size=6))
def test_taylor_product_matches_convolution(a, b):
    n = min(len(a), len(b))
    got = (TaylorScalar(a[:n]) * TaylorScalar(b[:n])).coeffs
    want = convolve_series(a[:n], b[:n])
    assert np.allclose(got, want, rtol=1e-12, atol=1e-12)


@given(st.lists(coeff, min_size=1, max_size=5))
def test_taylor_add_sub_roundtrip(a):
    x = TaylorScalar(a)
    y = TaylorScalar([c + 1 for c in a])
    back = (x + y) - y
    assert np.allclose(back.coeffs, x.coeffs, atol=1e-12)


@pytest.mark.parametrize("fn_name,fn", [
    ("exp", exp), ("sin", sin), ("cos", cos), ("tan", tan),
])
def test_taylor_functions_match_sympy_series(fn_name, fn):
    coeffs = (0.3, 1.2, -0.7, 0.4, 0.05)
    got = fn(TaylorScalar(coeffs)).coeffs
    want = sympy_series_coeffs(fn_name, coeffs)
    assert np.allclose(got, want, rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("fn_name,fn", [("log", log), ("sqrt", sqrt)])
def test_taylor_positive_base_functions(fn_name, fn):
    coeffs = (1.7, 0.9, -0.4, 0.2)
    got = fn(TaylorScalar(coeffs)).coeffs
    want = sympy_series_coeffs(fn_name, coeffs)
    assert np.allclose(got, want, rtol=1e-10, atol=1e-12)


def test_taylor_order_mismatch():
    with pytest.raises(OrderMismatch):
        TaylorScalar((1.0, 2.0)) * TaylorScalar((1.0, 2.0, 3.0))


def test_log_negative_raises():
    with pytest.raises(DomainError):
        log(TaylorScalar((-1.0, 1.0)))


def test_taylor_variable_derivative_of_composite():
    x = TaylorScalar((2.0, 1.0, 0.0, 0.0, 0.0))
    out = exp(sin(x) * x)
    f = lambda v: math.exp(math.sin(v) * v)  # noqa: E731
    h = 1e-5
    first = (f(2.0 + h) - f(2.0 - h)) / (2 * h)
    assert out.coeffs[0] == pytest.approx(f(2.0), rel=1e-12)
    assert out.coeffs[1] == pytest.approx(first, rel=1e-6)


def test_dual_gradient_matches_finite_differences():
    def f(v):
        return math.sin(v[0]) * v[1] ** 2 + math.exp(v[0] * v[1])

    x0 = np.array([0.4, 1.3])
    a = seed_gradient(0, x0[0], 2)
    b = seed_gradient(1, x0[1], 2)
    out = sin(a) * b * b + exp(a * b)
    want = central_difference(lambda v: f(v), x0)
    assert np.allclose(out.grad, want, rtol=1e-7)


def test_dual_quad_hessian_matches_finite_differences():
    def f(v):
        return math.log(v[0] + 2.0) * v[1] ** 3 + v[0] * v[1]

    x0 = np.array([0.5, 0.8])

    def seed(i, v):
        g = np.zeros(2)
        g[i] = 1.0
        return DualQuadScalar(v, g, np.zeros((2, 2)))

    a, b = seed(0, x0[0]), seed(1, x0[1])
    out = log(a + 2.0) * b * b * b + a * b
    want = central_hessian(f, x0)
    assert np.allclose(out.hess.astype(float), want, atol=1e-5)


def test_power_non_integer_requires_positive_base():
    with pytest.raises(DomainError):
        power(TaylorScalar((-2.0, 1.0)), 0.5)


def test_nested_dual_in_taylor_coefficients():
    # Taylor coefficients carrying first-order duals: d/dy of (x + y t)^2
    y = DualScalar(3.0, np.array([1.0]))
    series = TaylorScalar([2.0, y]) * TaylorScalar([2.0, y])
    assert series.coeffs[0] == pytest.approx(4.0)
    assert series.coeffs[1].value == pytest.approx(12.0)
    assert series.coeffs[1].grad[0] == pytest.approx(4.0)
