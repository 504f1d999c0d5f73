"""Higher order transverse jets: transport, inclusions and fiber structures.

A jet point stores the transverse Taylor coefficients y^(1..r) of a curve
class; transport across a foliated transition is therefore literal truncated
Taylor composition.  The shift endomorphism J and its dual act on fiber
vectors grouped as (X, Y^(1), ..., Y^(r)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .atlas import box_contains
from .errors import (
    InvariantViolation,
    OrderError,
    OutsideOverlap,
    ShapeError,
)
from .scalars import DualScalar, TaylorScalar, value_of

__all__ = [
    "TransverseJetPoint",
    "TransverseFiberVector",
    "zero_section",
    "prolong_transition",
    "prolong_jacobian",
    "include_jet",
    "apply_J",
    "apply_J_dual",
    "j_matrix",
    "restrict_to_zero_section",
]


def _finite_tuple(values, what):
    out = tuple(float(v) for v in values)
    if not all(math.isfinite(v) for v in out):
        raise InvariantViolation(f"non-finite entry in {what}")
    return out


@dataclass(frozen=True)
class TransverseJetPoint:
    """A point of the order-r transverse bundle in one chart.

    jets[k-1] holds y^(k), the k-th transverse Taylor coefficient row.
    """

    chart: str
    order: int
    leaf: tuple
    base: tuple
    jets: tuple  # r rows of q entries

    def __post_init__(self):
        if self.order < 1:
            raise OrderError(f"jet order must be >= 1, got {self.order}")
        object.__setattr__(self, "leaf", _finite_tuple(self.leaf, "leaf"))
        base = _finite_tuple(self.base, "base")
        object.__setattr__(self, "base", base)
        jets = tuple(_finite_tuple(row, "jets") for row in self.jets)
        if len(jets) != self.order:
            raise ShapeError(
                f"expected {self.order} jet rows, got {len(jets)}"
            )
        if any(len(row) != len(base) for row in jets):
            raise ShapeError("jet rows must match the transverse dimension")
        object.__setattr__(self, "jets", jets)

    @property
    def qdim(self):
        return len(self.base)

    def jet(self, k):
        """y^(k) for 1 <= k <= r; y^(0) is the base point."""
        if k == 0:
            return self.base
        return self.jets[k - 1]

    def to_dict(self):
        return {
            "chart": self.chart,
            "leaf": list(self.leaf),
            "base": list(self.base),
            "jets": [list(row) for row in self.jets],
        }


@dataclass(frozen=True)
class TransverseFiberVector:
    """A fiber vector over a jet point, grouped (X, Y^(1), ..., Y^(r))."""

    basepoint: TransverseJetPoint
    components: tuple

    def __post_init__(self):
        comps = _finite_tuple(self.components, "components")
        expected = (self.basepoint.order + 1) * self.basepoint.qdim
        if len(comps) != expected:
            raise ShapeError(
                f"expected {expected} components, got {len(comps)}"
            )
        object.__setattr__(self, "components", comps)

    @property
    def order(self):
        return self.basepoint.order

    @property
    def qdim(self):
        return self.basepoint.qdim

    def block(self, k):
        q = self.qdim
        return self.components[k * q:(k + 1) * q]


def zero_section(r, leaf, base, chart=""):
    """The zero jet over (leaf, base)."""
    if r < 1:
        raise OrderError(f"need r >= 1, got {r}")
    q = len(base)
    return TransverseJetPoint(chart, r, tuple(leaf), tuple(base),
                              tuple((0.0,) * q for _ in range(r)))


def _taylor_env(point, q, seeds=None):
    """TaylorScalar environment carrying the jet curve x(t).

    With `seeds`, coefficient slots become first-order duals over the
    (r+1)q fiber coordinates, ordered (x, y^(1), ..., y^(r)).
    """
    r = point.order
    env = {}
    for i in range(q):
        coeffs = [point.base[i]] + [point.jets[k][i] for k in range(r)]
        if seeds is not None:
            coeffs = [seeds(b * q + i, coeffs[b]) for b in range(r + 1)]
        env[f"x{i+1}"] = TaylorScalar(coeffs)
    return env


def _check_in_overlap(transition, point):
    if point.chart != transition.from_chart:
        raise InvariantViolation(
            f"point lives in chart {point.chart!r}, transition starts at "
            f"{transition.from_chart!r}"
        )
    if not box_contains(transition.overlap, point.leaf + point.base):
        raise OutsideOverlap(
            f"point {point.leaf + point.base} outside overlap of "
            f"{transition.name}"
        )


def prolong_transition(atlas, transition, point):
    """Transport an r-jet across a foliated transition.

    The transverse transition maps are evaluated on the truncated Taylor
    curve through the point; the image coefficients are the new jets.
    """
    _check_in_overlap(transition, point)
    p, q = atlas.p, atlas.q
    r = point.order
    env = _taylor_env(point, q)
    new_base = []
    new_jets = [[0.0] * q for _ in range(r)]
    for i, e in enumerate(transition.transverse_exprs):
        out = e.eval(env)
        coeffs = out.coeffs if isinstance(out, TaylorScalar) else \
            (float(out),) + (0.0,) * r
        new_base.append(float(coeffs[0]))
        for k in range(r):
            new_jets[k][i] = float(coeffs[k + 1])
    flat_env = {f"u{i+1}": point.leaf[i] for i in range(p)}
    flat_env.update({f"x{i+1}": point.base[i] for i in range(q)})
    new_leaf = tuple(float(e.eval(flat_env)) for e in transition.leaf_exprs)
    return TransverseJetPoint(transition.to_chart, r, new_leaf,
                              tuple(new_base), tuple(tuple(row) for row in new_jets))


def prolong_jacobian(atlas, transition, point):
    """Fiber Jacobian of the prolongation: blocks d y'^(g) / d y^(b).

    Returned as a dense ((r+1)q, (r+1)q) float matrix with y^(0) = x.
    Strictly upper blocks (b > g) vanish identically; diagonal blocks all
    equal the base transverse Jacobian.
    """
    _check_in_overlap(transition, point)
    q = atlas.q
    r = point.order
    n = (r + 1) * q

    def seed(index, value):
        grad = np.zeros(n)
        grad[index] = 1.0
        return DualScalar(value, grad)

    env = _taylor_env(point, q, seeds=seed)
    out = np.zeros((n, n))
    for i, e in enumerate(transition.transverse_exprs):
        series = e.eval(env)
        for g in range(r + 1):
            c = series.coeffs[g]
            if isinstance(c, DualScalar):
                out[g * q + i, :] = c.grad
    return out


def include_jet(r_low, r_high, point):
    """Canonical inclusion of an order-r_low jet into order r_high.

    The first r_high - r_low jet rows are zero; row d + j is the integer
    multiple (d+j)!/j! of y^(j), with d = r_high - r_low.  Exact integer
    arithmetic, identity when the orders agree.
    """
    if r_low < 1 or r_low > r_high:
        raise OrderError(f"need 1 <= r_low <= r_high, got {r_low}, {r_high}")
    if point.order != r_low:
        raise OrderError(
            f"point has order {point.order}, expected {r_low}"
        )
    if r_low == r_high:
        return point
    d = r_high - r_low
    q = point.qdim
    jets = [(0.0,) * q for _ in range(d)]
    for j in range(1, r_low + 1):
        factor = math.factorial(d + j) // math.factorial(j)
        jets.append(tuple(factor * v for v in point.jets[j - 1]))
    return TransverseJetPoint(point.chart, r_high, point.leaf, point.base,
                              tuple(jets))


def j_matrix(r, q):
    """The shift endomorphism J as an ((r+1)q) square matrix."""
    n = (r + 1) * q
    out = np.zeros((n, n))
    for k in range(r):
        for i in range(q):
            out[(k + 1) * q + i, k * q + i] = 1.0
    return out


def apply_J(vector, k=1):
    """k-fold shift (X, Y^(1), ..., Y^(r)) -> (0, ..., 0, X, ..., Y^(r-k))."""
    if k < 1:
        raise OrderError(f"need k >= 1, got {k}")
    q = vector.qdim
    r = vector.order
    comps = list(vector.components)
    shifted = [0.0] * (k * q) + comps[:max(0, (r + 1 - k)) * q]
    return TransverseFiberVector(vector.basepoint, tuple(shifted[:(r + 1) * q]))


def apply_J_dual(vector, k=1):
    """k-fold dual shift: the transpose of apply_J in coordinates."""
    if k < 1:
        raise OrderError(f"need k >= 1, got {k}")
    q = vector.qdim
    r = vector.order
    comps = list(vector.components)
    shifted = comps[k * q:] + [0.0] * min(k * q, (r + 1) * q)
    return TransverseFiberVector(vector.basepoint, tuple(shifted[:(r + 1) * q]))


def restrict_to_zero_section(metric_eval, r, leaf, base, chart=""):
    """The (X, X) block of a lifted fiber metric along the zero section."""
    q = len(base)
    point = zero_section(r, leaf, base, chart)
    full = np.asarray(metric_eval(point), dtype=float)
    if full.shape != ((r + 1) * q, (r + 1) * q):
        raise ShapeError(
            f"metric evaluator returned shape {full.shape}, expected "
            f"{((r + 1) * q, (r + 1) * q)}"
        )
    return full[:q, :q]
