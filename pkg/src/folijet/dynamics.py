"""Lagrangian dynamics on jet bundles: sprays, connections, projectors.

Conventions used throughout:

* fiber coordinates are ordered (x, y^(1), ..., y^(r)), giving n = (r+1)q
  scalar slots; y^(0) means x.
* the derivation Gamma acts as
  Gamma f = sum_u y^(1)u df/dx^u + sum_{k=2..r} sum_u k y^(k)u df/dy^(k-1)u.
* a semi-spray derived from a regular lagrangian L has components
  S^u = (1/(2(r+1))) h^{uv} (Gamma(dL/dy^(r)v) - dL/dy^(r-1)v)
  with h the vertical Hessian; the associated fiber vector field is
  Gamma_S = (y^(1), 2 y^(2), ..., r y^(r), (r+1) S).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import (
    ExcludedPoint,
    InvariantViolation,
    OrderError,
    ShapeError,
    SingularHessian,
)
from .expr import ExprProgram
from .jets import TransverseJetPoint, j_matrix
from .scalars import DualQuadScalar, DualScalar, value_of

__all__ = [
    "LagrangianField",
    "SemiSprayField",
    "ConnectionCoefficients",
    "HessianInfo",
    "gamma_apply",
    "vertical_hessian",
    "semispray",
    "semispray_section",
    "spray_vector",
    "dual_coefficients",
    "projectors",
    "horizontal_coefficients",
]

HESSIAN_DET_TOLERANCE = 1e-9
HESSIAN_EIG_TOLERANCE = 1e-9


def coordinate_names(r, q):
    """Fiber coordinate names in slot order (x, y^(1), ..., y^(r))."""
    names = [f"x{i+1}" for i in range(q)]
    for k in range(1, r + 1):
        names.extend(f"y{k}_{i+1}" for i in range(q))
    return names


def coordinate_values(point):
    vals = list(point.base)
    for row in point.jets:
        vals.extend(row)
    return vals


def point_env(point, seed=None):
    """Environment binding fiber coordinates, optionally through `seed`.

    seed(index, value) may wrap each coordinate in a dual scalar; without
    it the environment holds plain floats.
    """
    names = coordinate_names(point.order, point.qdim)
    vals = coordinate_values(point)
    if seed is None:
        return dict(zip(names, vals))
    return {name: seed(i, v) for i, (name, v) in enumerate(zip(names, vals))}


def _grad_of(x, n):
    if isinstance(x, DualScalar):
        return x.grad
    return np.zeros(n)


@dataclass(frozen=True)
class LagrangianField:
    """A field L(x, y^(1..r)) over transverse jet coordinates.

    Slashed fields are smooth only away from the zero set of `excluded`
    (excluded <= 0 means the point is outside the smooth locus).
    """

    order: int
    qdim: int
    program: ExprProgram
    slashed: bool = False
    excluded: ExprProgram | None = None
    name: str = ""

    @classmethod
    def from_program(cls, program, *, order, qdim, slashed=False,
                     excluded=None, name=""):
        if order < 1:
            raise OrderError(f"lagrangian order must be >= 1, got {order}")
        allowed = set(coordinate_names(order, qdim))
        extra = program.free_variables() - allowed
        if extra:
            raise InvariantViolation(
                f"lagrangian {name or program.to_text()!r} uses "
                f"{sorted(extra)}; only transverse jet coordinates up to "
                f"order {order} are allowed"
            )
        if slashed and excluded is None:
            raise InvariantViolation(
                f"slashed lagrangian {name!r} needs an excluded expression"
            )
        if excluded is not None:
            extra = excluded.free_variables() - allowed
            if extra:
                raise InvariantViolation(
                    f"excluded expression of {name!r} uses {sorted(extra)}"
                )
        return cls(order, qdim, program, slashed, excluded, name)

    def check_point(self, point):
        if point.order != self.order:
            raise OrderError(
                f"point order {point.order} != lagrangian order {self.order}"
            )
        if point.qdim != self.qdim:
            raise ShapeError(
                f"point dimension {point.qdim} != lagrangian dimension "
                f"{self.qdim}"
            )
        if self.excluded is not None:
            if float(self.excluded.eval(point_env(point))) <= 0.0:
                raise ExcludedPoint(
                    f"point excluded from the smooth locus of {self.name!r}"
                )

    def value(self, point) -> float:
        self.check_point(point)
        return float(self.program.eval(point_env(point)))


@dataclass(frozen=True)
class HessianInfo:
    matrix: np.ndarray
    det: float
    min_eigenvalue: float
    regular: bool
    positive_definite: bool


def gamma_apply(f, point):
    """Apply the derivation Gamma to an expression at a jet point."""
    r, q = point.order, point.qdim
    n = (r + 1) * q

    def seed(i, v):
        grad = np.zeros(n)
        grad[i] = 1.0
        return DualScalar(v, grad)

    out = f.eval(point_env(point, seed))
    grad = _grad_of(out, n)
    total = 0.0
    for k in range(1, r + 1):
        yk = point.jets[k - 1]
        for i in range(q):
            total += k * yk[i] * grad[(k - 1) * q + i]
    return float(total)


def vertical_hessian(L, point, *, det_tol=HESSIAN_DET_TOLERANCE,
                     eig_tol=HESSIAN_EIG_TOLERANCE) -> HessianInfo:
    """Second partials of L in its top-order jet variables."""
    L.check_point(point)
    r, q = L.order, L.qdim

    def seed(i, v):
        # only the top q coordinates carry derivative seeds
        grad = np.zeros(q)
        if i >= r * q:
            grad[i - r * q] = 1.0
        return DualQuadScalar(v, grad, np.zeros((q, q)))

    out = L.program.eval(point_env(point, seed))
    hess = out.hess.astype(float) if isinstance(out, DualQuadScalar) \
        else np.zeros((q, q))
    det = float(np.linalg.det(hess))
    eigs = np.linalg.eigvalsh(hess)
    return HessianInfo(hess, det, float(eigs.min()),
                       regular=abs(det) > det_tol,
                       positive_definite=float(eigs.min()) > eig_tol)


def _semispray_scalars(L, point, lift=None):
    """Semi-spray components with generic scalar entries.

    One second-order dual evaluation of L over all fiber coordinates gives
    the vertical Hessian (top block), the Gamma term (mixed Hessian rows)
    and the lower gradient.  `lift(index, value)` may wrap coordinate
    values in a further dual layer; the returned components then carry
    derivatives with respect to all fiber coordinates.
    """
    L.check_point(point)
    r, q = L.order, L.qdim
    n = (r + 1) * q

    def seed(i, v):
        grad = np.zeros(n)
        grad[i] = 1.0
        if lift is not None:
            v = lift(i, v)
        return DualQuadScalar(v, grad, np.zeros((n, n)))

    out = L.program.eval(point_env(point, seed))
    if not isinstance(out, DualQuadScalar):
        out = DualQuadScalar.constant(out, n)
    hess, grad = out.hess, out.grad

    h = [[hess[r * q + i, r * q + j] for j in range(q)] for i in range(q)]
    rhs = []
    for v in range(q):
        gamma_term = 0.0
        for k in range(1, r + 1):
            yk = point.jets[k - 1]
            for i in range(q):
                y_val = yk[i] if lift is None else lift(k * q + i, yk[i])
                gamma_term = gamma_term + k * y_val * hess[r * q + v, (k - 1) * q + i]
        lower = grad[(r - 1) * q + v]
        rhs.append([gamma_term - lower])
    try:
        sol, _ = linalg.solve_with_det(h, rhs,
                                       singular_tol=HESSIAN_DET_TOLERANCE)
    except SingularHessian as err:
        raise SingularHessian(
            f"vertical hessian of {L.name or L.program.to_text()!r} is "
            f"singular: {err}"
        ) from None
    scale = 1.0 / (2.0 * (r + 1))
    return [scale * sol[u, 0] for u in range(q)]


def semispray(L, point):
    """Semi-spray components S^u at a jet point (plain floats)."""
    return np.array([value_of(s) for s in _semispray_scalars(L, point)])


def semispray_section(L, point) -> TransverseJetPoint:
    """The order r+1 jet point the semi-spray assigns to `point`.

    Lower jets are copied verbatim, the new top row is S.
    """
    s = semispray(L, point)
    return TransverseJetPoint(point.chart, point.order + 1, point.leaf,
                              point.base, point.jets + (tuple(s),))


@dataclass(frozen=True)
class SemiSprayField:
    """Semi-spray components as a reusable field.

    Backed either by closed-form expressions in the fiber coordinates or
    by a lagrangian (components derived on demand).
    """

    order: int
    qdim: int
    programs: tuple | None = None
    lagrangian: LagrangianField | None = None

    @classmethod
    def from_programs(cls, programs, *, order, qdim):
        programs = tuple(programs)
        if len(programs) != qdim:
            raise ShapeError(f"need {qdim} components, got {len(programs)}")
        allowed = set(coordinate_names(order, qdim))
        for prog in programs:
            extra = prog.free_variables() - allowed
            if extra:
                raise InvariantViolation(
                    f"spray component uses {sorted(extra)}"
                )
        return cls(order, qdim, programs=programs)

    @classmethod
    def from_lagrangian(cls, L):
        return cls(L.order, L.qdim, lagrangian=L)

    def components(self, point):
        self._check(point)
        if self.programs is not None:
            env = point_env(point)
            return np.array([float(p.eval(env)) for p in self.programs])
        return semispray(self.lagrangian, point)

    def components_dual(self, point):
        """Components as first-order duals over all fiber coordinates."""
        self._check(point)
        r, q = self.order, self.qdim
        n = (r + 1) * q
        if self.programs is not None:
            def seed(i, v):
                grad = np.zeros(n)
                grad[i] = 1.0
                return DualScalar(v, grad)

            env = point_env(point, seed)
            out = []
            for prog in self.programs:
                val = prog.eval(env)
                if not isinstance(val, DualScalar):
                    val = DualScalar.constant(val, n)
                out.append(val)
            return out

        def lift(i, v):
            grad = np.zeros(n)
            grad[i] = 1.0
            return DualScalar(v, grad)

        out = []
        for s in _semispray_scalars(self.lagrangian, point, lift=lift):
            if not isinstance(s, DualScalar):
                s = DualScalar.constant(value_of(s), n)
            out.append(s)
        return out

    def _check(self, point):
        if point.order != self.order or point.qdim != self.qdim:
            raise OrderError(
                f"point of order {point.order}, dim {point.qdim} fed to a "
                f"spray of order {self.order}, dim {self.qdim}"
            )


def spray_vector(S, point):
    """Fiber components of Gamma_S: (y^(1), 2 y^(2), ..., (r+1) S)."""
    r, q = S.order, S.qdim
    comps = []
    for k in range(1, r + 1):
        comps.extend(k * v for v in point.jets[k - 1])
    comps.extend((r + 1) * v for v in S.components(point))
    return np.array(comps)


@dataclass(frozen=True)
class ConnectionCoefficients:
    """Connection data at a point: M (dual form) and/or N (horizontal form).

    Each is a tuple of r matrices, indexed so that entry k-1 is the
    coefficient written M_(k) or N_(k)."""

    order: int
    M: tuple | None = None
    N: tuple | None = None


def _spray_jacobian(S, point):
    """d Gamma_S / d(fiber coordinates) as a dense (r+1)q square matrix."""
    r, q = S.order, S.qdim
    n = (r + 1) * q
    A = np.zeros((n, n))
    # shift rows are analytic: block b of Gamma_S is (b+1) y^(b+1)
    for b in range(r):
        for i in range(q):
            A[b * q + i, (b + 1) * q + i] = b + 1
    duals = S.components_dual(point)
    for u in range(q):
        A[r * q + u, :] = (r + 1) * _grad_of(duals[u], n)
    return A


def dual_coefficients(S, point) -> ConnectionCoefficients:
    """Dual connection coefficients M_(k) = -dS/dy^(r+1-k)."""
    r, q = S.order, S.qdim
    n = (r + 1) * q
    duals = S.components_dual(point)
    grads = np.array([_grad_of(d, n) for d in duals])
    M = []
    for k in range(1, r + 1):
        j = r + 1 - k  # M_(k) differentiates against y^(j)
        M.append(-grads[:, j * q:(j + 1) * q].copy())
    return ConnectionCoefficients(r, M=tuple(M))


def projectors(S, point):
    """Horizontal/vertical projector pair on the fiber at a point.

    Built from the Lie derivative of the shift endomorphism J along the
    spray vector field: with A = d Gamma_S / d(coords) and constant J,
    L_S J = J A - A J, then h = (r I - L_S J)/(r+1), v = (I + L_S J)/(r+1).
    """
    r, q = S.order, S.qdim
    n = (r + 1) * q
    A = _spray_jacobian(S, point)
    J = j_matrix(r, q)
    lie = J @ A - A @ J
    h = (r * np.eye(n) - lie) / (r + 1)
    v = (np.eye(n) + lie) / (r + 1)
    return h, v


def horizontal_coefficients(h, r, q) -> ConnectionCoefficients:
    """Read N_(k) off the first block row of a horizontal projector."""
    h = np.asarray(h, dtype=float)
    n = (r + 1) * q
    if h.shape != (n, n):
        raise ShapeError(f"projector shape {h.shape}, expected {(n, n)}")
    N = tuple(h[:q, k * q:(k + 1) * q].copy() for k in range(1, r + 1))
    return ConnectionCoefficients(r, N=N)
