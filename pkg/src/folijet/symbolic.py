"""Closed-form lagrangian lifts via symbolic algebra.

The recursive lift L^(k) = L^(k-1) + g(y^(k) - S^(k-1), y^(k) - S^(k-1))
stays in closed form whenever the metric components do, so the recursion
is run once in sympy and the results are converted back into expression
programs.  Downstream numerics then need only a single dual layer instead
of one nested layer per recursion step.
"""

from __future__ import annotations

import sympy as sp

from . import expr as exprmod
from .errors import InvariantViolation

__all__ = [
    "to_sympy",
    "from_sympy",
    "lift_stages",
    "LiftStages",
    "prolongation_coefficients",
]

_FUNCTIONS = {
    "exp": sp.exp,
    "log": sp.log,
    "sin": sp.sin,
    "cos": sp.cos,
    "tan": sp.tan,
    "sqrt": sp.sqrt,
    "atan": sp.atan,
}

_INVERSE_FUNCTIONS = {
    sp.exp: "exp",
    sp.log: "log",
    sp.sin: "sin",
    sp.cos: "cos",
    sp.tan: "tan",
    sp.atan: "atan",
}


def to_sympy(program):
    """Convert an expression program into a sympy expression."""

    def conv(node):
        if isinstance(node, exprmod.Num):
            v = node.value
            return sp.Integer(int(v)) if float(v).is_integer() else sp.Float(v)
        if isinstance(node, exprmod.Const):
            return sp.pi if node.name == "pi" else sp.E
        if isinstance(node, exprmod.Var):
            return sp.Symbol(node.name, real=True)
        if isinstance(node, exprmod.Unary):
            return -conv(node.arg)
        if isinstance(node, exprmod.Call):
            if node.fn == "neg":
                return -conv(node.arg)
            return _FUNCTIONS[node.fn](conv(node.arg))
        if isinstance(node, exprmod.Binary):
            left, right = conv(node.left), conv(node.right)
            if node.op == "+":
                return left + right
            if node.op == "-":
                return left - right
            if node.op == "*":
                return left * right
            if node.op == "/":
                return left / right
            if node.op == "^":
                return left ** right
        raise TypeError(f"unknown AST node {node!r}")

    return conv(program.ast)


def from_sympy(expression):
    """Convert a sympy expression back into an expression program."""

    def fold(op, parts):
        node = parts[0]
        for part in parts[1:]:
            node = exprmod.Binary(op, node, part)
        return node

    def conv(e):
        if e is sp.pi:
            return exprmod.Const("pi")
        if e is sp.E:
            return exprmod.Const("e")
        if e.is_Symbol:
            name = str(e)
            if not exprmod.is_variable_name(name):
                raise InvariantViolation(f"symbol {name!r} is not a coordinate")
            return exprmod.Var(name)
        if e.is_Integer:
            return exprmod.Num(float(int(e)))
        if e.is_Rational:
            return exprmod.Binary("/", exprmod.Num(float(e.p)),
                                  exprmod.Num(float(e.q)))
        if e.is_Float:
            return exprmod.Num(float(e))
        if e.is_Add:
            return fold("+", [conv(a) for a in e.args])
        if e.is_Mul:
            return fold("*", [conv(a) for a in e.args])
        if e.is_Pow:
            base, ex = e.args
            if ex == sp.Rational(1, 2):
                return exprmod.Call("sqrt", conv(base))
            if ex == sp.Rational(-1, 2):
                return exprmod.Binary("/", exprmod.Num(1.0),
                                      exprmod.Call("sqrt", conv(base)))
            if ex.is_Integer and int(ex) < 0:
                denom = conv(base) if int(ex) == -1 else \
                    exprmod.Binary("^", conv(base), exprmod.Num(float(-int(ex))))
                return exprmod.Binary("/", exprmod.Num(1.0), denom)
            return exprmod.Binary("^", conv(base), conv(ex))
        if e.func in _INVERSE_FUNCTIONS:
            return exprmod.Call(_INVERSE_FUNCTIONS[e.func], conv(e.args[0]))
        raise InvariantViolation(f"cannot convert sympy node {e!r}")

    ast = conv(sp.sympify(expression))
    return exprmod.ExprProgram(ast, exprmod._print(ast))


def _x(i):
    return sp.Symbol(f"x{i+1}", real=True)


def _y(k, i):
    return sp.Symbol(f"y{k}_{i+1}", real=True)


def _gamma(f, k, q):
    """The derivation Gamma at order k, symbolically."""
    out = sp.Integer(0)
    for i in range(q):
        out += _y(1, i) * sp.diff(f, _x(i))
    for j in range(2, k + 1):
        for i in range(q):
            out += j * _y(j, i) * sp.diff(f, _y(j - 1, i))
    return out


def _stage_spray(L, k, q, ginv):
    """Semi-spray components of an order-k lagrangian in the lift recursion.

    Every stage of the recursion has vertical Hessian exactly 2g (each step
    adds g(y^(k) - S^(k-1), ...) in the top variable only), so the Hessian
    solve reduces to one multiplication by the precomputed inverse metric.
    """
    top = [_y(k, i) for i in range(q)]
    lower = [_x(i) for i in range(q)] if k == 1 else [_y(k - 1, i) for i in range(q)]
    rhs = sp.Matrix(q, 1, lambda v, _:
                    _gamma(sp.diff(L, top[v]), k, q) - sp.diff(L, lower[v]))
    sol = (ginv * rhs) / (4 * (k + 1))
    # stage 1 stays small and benefits from a normal form; later stages
    # blow up under expansion, so their trees are kept as built
    if k == 1:
        return [sp.cancel(sp.expand(sol[i, 0])) for i in range(q)]
    return [sol[i, 0] for i in range(q)]


class LiftStages:
    """All stages of the recursive lift of a metric to order r.

    lagrangians[k-1] is L^(k) as an expression program; sprays[k-1] holds
    the q semi-spray components of L^(k).
    """

    def __init__(self, lagrangians, sprays, lagrangians_sympy, sprays_sympy):
        self.lagrangians = lagrangians
        self.sprays = sprays
        self.lagrangians_sympy = lagrangians_sympy
        self.sprays_sympy = sprays_sympy


def prolongation_coefficients(metric_programs, r, q):
    """Connection coefficients of the jet prolongation of a Levi-Civita metric.

    Returns r matrices M_(1..r), each q x q of expression programs over
    (x, y^(1..r)).  M_(1) is the linear Christoffel form Gamma(x) y^(1);
    higher coefficients follow the recursion

        M_(k+1) = (Gamma M_(k) + M_(1) M_(k)) / (k + 1),

    where Gamma is the jet derivation.  Each M_(k) vanishes on the zero
    section and reduces to zero for a flat metric, and the coframe rows
    delta y^(k) = dy^(k) + sum_j M_(j) dy^(k-j) transform tensorially
    under prolonged coordinate changes.
    """
    g = sp.Matrix(q, q, lambda i, j: to_sympy(metric_programs[i][j]))
    ginv = g.inv()
    gamma = [[[sp.S(0)] * q for _ in range(q)] for _ in range(q)]
    for a in range(q):
        for b in range(q):
            for c in range(q):
                s = sp.S(0)
                for d in range(q):
                    s += ginv[a, d] * (sp.diff(g[d, c], _x(b))
                                       + sp.diff(g[b, d], _x(c))
                                       - sp.diff(g[b, c], _x(d)))
                gamma[a][b][c] = sp.cancel(s / 2)

    m1 = sp.Matrix(q, q, lambda a, b:
                   sum(gamma[a][b][m] * _y(1, m) for m in range(q)))
    matrices = [m1]
    for k in range(1, r):
        prev = matrices[-1]
        step = prev.applyfunc(lambda f: _gamma(f, k + 1, q)) + m1 * prev
        matrices.append((step / (k + 1)).applyfunc(
            lambda f: sp.cancel(sp.expand(f))))
    return [
        tuple(tuple(from_sympy(mat[i, j]) for j in range(q)) for i in range(q))
        for mat in matrices
    ]


def lift_stages(metric_programs, r, q) -> LiftStages:
    """Run the lift recursion L^(k) = L^(k-1) + g(y^(k)-S^(k-1), ...)."""
    g = sp.Matrix(q, q, lambda i, j: to_sympy(metric_programs[i][j]))
    ginv = g.inv().applyfunc(sp.cancel)

    def quad(vec):
        col = sp.Matrix(q, 1, lambda i, _: vec[i])
        return (col.T * g * col)[0, 0]

    stages = [sp.expand(quad([_y(1, i) for i in range(q)]))]
    sprays = [_stage_spray(stages[0], 1, q, ginv)]
    for k in range(2, r + 1):
        shifted = [_y(k, i) - sprays[k - 2][i] for i in range(q)]
        stages.append(stages[-1] + quad(shifted))
        sprays.append(_stage_spray(stages[-1], k, q, ginv))
    return LiftStages(
        [from_sympy(L) for L in stages],
        [tuple(from_sympy(s) for s in spray) for spray in sprays],
        stages,
        sprays,
    )
