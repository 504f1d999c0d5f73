"""Independent reference implementations used only by the tests.

Everything here deliberately avoids the library's own Taylor/dual
arithmetic: jet transport is recomputed with sympy power series, products
with literal polynomial convolution, and derivatives with central finite
differences.
"""

import numpy as np
import sympy as sp


def convolve_series(a, b):
    """Cauchy product of two truncated coefficient tuples."""
    n = min(len(a), len(b))
    return tuple(
        sum(a[i] * b[k - i] for i in range(k + 1)) for k in range(n)
    )


def sympy_series_coeffs(fn_name, coeffs):
    """Coefficients of fn(series) through sympy, same truncation order."""
    t = sp.Symbol("t")
    series = sum(sp.Float(c, 30) * t**k for k, c in enumerate(coeffs))
    fn = getattr(sp, fn_name)
    expanded = sp.series(fn(series), t, 0, len(coeffs)).removeO()
    return tuple(float(sp.expand(expanded).coeff(t, k))
                 for k in range(len(coeffs)))


def sympy_prolong(transverse_texts, base, jets):
    """Jet transport recomputed with sympy series composition.

    `transverse_texts` are the transition's transverse expressions as
    text; returns (new_base, new_jets) with the same shapes as the input.
    """
    q = len(base)
    r = len(jets)
    t = sp.Symbol("t")
    subs = {}
    for i in range(q):
        curve = sp.Float(base[i], 30) + sum(
            sp.Float(jets[k][i], 30) * t**(k + 1) for k in range(r)
        )
        subs[sp.Symbol(f"x{i+1}", real=True)] = curve
        subs[sp.Symbol(f"x{i+1}")] = curve
    new_base = []
    new_jets = [[0.0] * q for _ in range(r)]
    for i, text in enumerate(transverse_texts):
        expr = sp.sympify(text.replace("^", "**"))
        composed = sp.series(expr.subs(subs, simultaneous=True), t, 0,
                             r + 1).removeO()
        composed = sp.expand(composed)
        new_base.append(float(composed.coeff(t, 0)))
        for k in range(1, r + 1):
            new_jets[k - 1][i] = float(composed.coeff(t, k))
    return tuple(new_base), tuple(tuple(row) for row in new_jets)


def central_difference(fn, x, h=1e-6):
    """Gradient of fn: R^n -> R by central differences."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.size)
    for i in range(x.size):
        e = np.zeros(x.size)
        e[i] = h
        out[i] = (fn(x + e) - fn(x - e)) / (2 * h)
    return out


def central_difference_vector(fn, x, h=1e-6):
    """Jacobian of fn: R^n -> R^m by central differences."""
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        e = np.zeros(x.size)
        e[i] = h
        cols.append((np.asarray(fn(x + e)) - np.asarray(fn(x - e))) / (2 * h))
    return np.stack(cols, axis=-1)


def central_hessian(fn, x, h=1e-4):
    """Hessian of fn: R^n -> R by second-order central differences."""
    x = np.asarray(x, dtype=float)
    n = x.size
    out = np.zeros((n, n))
    f0 = fn(x)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h
        out[i, i] = (fn(x + ei) - 2 * f0 + fn(x - ei)) / h**2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h
            out[i, j] = out[j, i] = (
                fn(x + ei + ej) - fn(x + ei - ej)
                - fn(x - ei + ej) + fn(x - ei - ej)
            ) / (4 * h**2)
    return out
