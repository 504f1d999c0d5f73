"""Legendre maps, pseudo-hamiltonians and admissibility checks.

The Legendre map trades the top-order jet row for the momentum
p = dL/dy^(r); its inverse is a damped Newton solve against the vertical
Hessian.  Composing the map stagewise down to order zero and restricting
to equal momenta yields the diagonal hamiltonian H(x, p); for the
recursive metric lifts this reproduces the dual hamiltonian of the
first-order stage.

Convention: the diagonal hamiltonian carries a 1/r normalization, so the
flat lift gives H(x, p) = |p|^2 / 4 at every order.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass

import numpy as np

from . import linalg
from .dynamics import point_env, vertical_hessian
from .errors import (
    InvariantViolation,
    NoConvergence,
    ShapeError,
    SingularHessian,
)
from .jets import TransverseJetPoint
from .report import Report
from .scalars import DualQuadScalar, value_of

__all__ = [
    "CotangentJetPoint",
    "HamiltonianValue",
    "legendre_map",
    "legendre_inverse",
    "pseudo_hamiltonian",
    "legendre_chain",
    "admissibility_check",
]

NEWTON_TOLERANCE = 1e-10
NEWTON_MAX_ITERATIONS = 50
CONDITION_LIMIT = 1e12
RAY_TOLERANCE = 1e-8
ZERO_SECTION_TOLERANCE = 1e-12
EIG_TOLERANCE = 1e-9


def _finite_tuple(values, what):
    out = tuple(float(v) for v in values)
    if not all(math.isfinite(v) for v in out):
        raise InvariantViolation(f"non-finite entry in {what}")
    return out


@dataclass(frozen=True)
class CotangentJetPoint:
    """A momentum-replaced jet point: (x, y^(1..r-1), p).

    `order` is the order r of the jet point it came from; `jets` holds the
    r-1 lower rows, `momentum` the top-order momentum covector.
    """

    chart: str
    order: int
    leaf: tuple
    base: tuple
    jets: tuple  # r-1 rows of q entries
    momentum: tuple  # q entries

    def __post_init__(self):
        if self.order < 1:
            raise ShapeError(f"order must be >= 1, got {self.order}")
        object.__setattr__(self, "leaf", _finite_tuple(self.leaf, "leaf"))
        base = _finite_tuple(self.base, "base")
        object.__setattr__(self, "base", base)
        jets = tuple(_finite_tuple(row, "jets") for row in self.jets)
        if len(jets) != self.order - 1:
            raise ShapeError(
                f"expected {self.order - 1} jet rows, got {len(jets)}"
            )
        if any(len(row) != len(base) for row in jets):
            raise ShapeError("jet rows must match the transverse dimension")
        object.__setattr__(self, "jets", jets)
        momentum = _finite_tuple(self.momentum, "momentum")
        if len(momentum) != len(base):
            raise ShapeError("momentum must match the transverse dimension")
        object.__setattr__(self, "momentum", momentum)

    @property
    def qdim(self):
        return len(self.base)

    def to_dict(self):
        return {
            "chart": self.chart,
            "leaf": list(self.leaf),
            "base": list(self.base),
            "jets": [list(row) for row in self.jets],
            "momentum": list(self.momentum),
        }


@dataclass(frozen=True)
class HamiltonianValue:
    value: float
    at: CotangentJetPoint

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise InvariantViolation("non-finite hamiltonian value")


def legendre_map(L, point) -> CotangentJetPoint:
    """(x, y^(1..r)) -> (x, y^(1..r-1), dL/dy^(r))."""
    L.check_point(point)
    r, q = L.order, L.qdim

    def seed(i, v):
        grad = np.zeros(q)
        if i >= r * q:
            grad[i - r * q] = 1.0
        return DualQuadScalar(v, grad, np.zeros((q, q)))

    out = L.program.eval(point_env(point, seed))
    momentum = out.grad.astype(float) if isinstance(out, DualQuadScalar) \
        else np.zeros(q)
    return CotangentJetPoint(point.chart, r, point.leaf, point.base,
                             point.jets[:-1], tuple(momentum))


def _top_gradient_quad(L, cpoint, top):
    """L with dual seeds on a candidate top row; value/grad/hess out."""
    q = L.qdim
    env = {f"x{i+1}": DualQuadScalar.constant(cpoint.base[i], q)
           for i in range(q)}
    for k in range(1, L.order):
        row = cpoint.jets[k - 1]
        env.update({f"y{k}_{i+1}": DualQuadScalar.constant(row[i], q)
                    for i in range(q)})
    for i in range(q):
        grad = np.zeros(q)
        grad[i] = 1.0
        env[f"y{L.order}_{i+1}"] = DualQuadScalar(top[i], grad,
                                                  np.zeros((q, q)))
    out = L.program.eval(env)
    if not isinstance(out, DualQuadScalar):
        out = DualQuadScalar.constant(out, q)
    return out


def _newton_top_row(quad_at, target, guess, q, *, stage=None,
                    tol=NEWTON_TOLERANCE, max_iterations=NEWTON_MAX_ITERATIONS,
                    condition_limit=CONDITION_LIMIT, polish=0):
    """Solve grad(quad_at(top)) = target for the top row by damped Newton.

    `quad_at(top)` must return a second-order dual seeded on the top row.
    Entries may be generic scalars; convergence and damping decisions use
    the underlying float values.  Returns (top_row, stage_value, stats).
    """
    where = f"stage {stage}: " if stage is not None else ""
    top = list(guess)
    if len(top) != q:
        raise ShapeError(f"guess must have {q} entries")

    def residual(out):
        return [out.grad[i] - target[i] for i in range(q)]

    out = quad_at(top)
    F = residual(out)
    norm = max(abs(value_of(f)) for f in F)
    iterations = 0
    extra = polish
    while True:
        if norm <= tol:
            if extra <= 0:
                break
            extra -= 1
        elif iterations >= max_iterations:
            raise NoConvergence(
                f"{where}residual {norm:.3e} after {iterations} iterations"
            )
        hess_values = np.array([[value_of(out.hess[i, j]) for j in range(q)]
                                for i in range(q)])
        cond = float(np.linalg.cond(hess_values))
        if not np.isfinite(cond) or cond > condition_limit:
            raise SingularHessian(
                f"{where}vertical hessian condition estimate {cond:.3e}"
            )
        hess = [[out.hess[i, j] for j in range(q)] for i in range(q)]
        step = linalg.solve(hess, [[-f] for f in F])
        scale = 1.0
        while True:
            trial = [top[i] + scale * step[i][0] for i in range(q)]
            trial_out = quad_at(trial)
            trial_F = residual(trial_out)
            trial_norm = max(abs(value_of(f)) for f in trial_F)
            if trial_norm < norm or scale < 1e-8 or norm <= tol:
                break
            scale *= 0.5
        top, out, F, norm = trial, trial_out, trial_F, trial_norm
        iterations += 1
    stats = {"iterations": iterations, "residual": norm}
    return top, out.value, stats


def legendre_inverse(L, cpoint, guess=None, *, return_stats=False):
    """Recover the jet point with momentum `cpoint.momentum` under L."""
    if cpoint.order != L.order or cpoint.qdim != L.qdim:
        raise ShapeError("cotangent point does not match the lagrangian")
    q = L.qdim
    if guess is None:
        guess = (0.0,) * q
    top, _, stats = _newton_top_row(
        lambda t: _top_gradient_quad(L, cpoint, t),
        list(cpoint.momentum), guess, q,
    )
    point = TransverseJetPoint(cpoint.chart, L.order, cpoint.leaf,
                               cpoint.base, cpoint.jets + (tuple(top),))
    L.check_point(point)
    if return_stats:
        return point, stats
    return point


def pseudo_hamiltonian(L, cpoint, guess=None) -> HamiltonianValue:
    """H = L composed with the inverse Legendre map."""
    point = legendre_inverse(L, cpoint, guess)
    return HamiltonianValue(L.value(point), cpoint)


def _stage_value(L, j, lower, momenta):
    """Value of the j-th chain stage with generic scalar entries.

    `lower` binds x and y^(1..j); `momenta[k]` is the momentum covector
    traded for y^(k+1).  Stage r is L itself; lower stages solve the
    top-variable Legendre map of the stage above by Newton, with one
    polishing iteration so that any derivative payload the entries carry
    converges along with the values.
    """
    q = L.qdim
    if j == L.order:
        return L.program.eval(lower)

    def quad_at(top):
        env = {name: DualQuadScalar.constant(v, q)
               for name, v in lower.items()}
        for i in range(q):
            grad = np.zeros(q)
            grad[i] = 1.0
            env[f"y{j+1}_{i+1}"] = DualQuadScalar(top[i], grad,
                                                  np.zeros((q, q)))
        out = _stage_value(L, j + 1, env, momenta)
        if not isinstance(out, DualQuadScalar):
            out = DualQuadScalar.constant(out, q)
        return out

    _, value, _ = _newton_top_row(quad_at, list(momenta[j]), [0.0] * q, q,
                                  stage=j + 1, polish=1)
    return value


def legendre_chain(L):
    """Diagonal hamiltonian evaluator of the full Legendre chain.

    Returns H(base, momentum) -> float, where every stage momentum is set
    to the same covector and the order-zero stage value is divided by r.
    Stage failures raise SingularHessian / NoConvergence tagged with the
    stage index.
    """
    r, q = L.order, L.qdim
    if L.slashed:
        raise InvariantViolation(
            "the chain evaluator needs a lagrangian smooth on the whole fiber"
        )

    def evaluate(base, momentum):
        base = _finite_tuple(base, "base")
        momentum = _finite_tuple(momentum, "momentum")
        if len(base) != q or len(momentum) != q:
            raise ShapeError(f"base and momentum must have {q} entries")
        lower = {f"x{i+1}": base[i] for i in range(q)}
        momenta = [momentum] * r
        return float(value_of(_stage_value(L, 0, lower, momenta))) / r

    return evaluate


def _ray_level(L, env_base, direction, phi_value, r, q, *,
               tol=RAY_TOLERANCE):
    """Bisection along t -> L(x, t*direction jets) for the level phi."""

    def value_at(t):
        env = dict(env_base)
        for k in range(1, r + 1):
            for i in range(q):
                env[f"y{k}_{i+1}"] = t * direction[(k - 1) * q + i]
        return float(L.program.eval(env))

    hi = 1.0
    for _ in range(60):
        if value_at(hi) >= phi_value:
            break
        hi *= 2.0
    else:
        return None
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        v = value_at(mid)
        if abs(v - phi_value) <= tol:
            return abs(v - phi_value)
        if v < phi_value:
            lo = mid
        else:
            hi = mid
    return abs(value_at(0.5 * (lo + hi)) - phi_value)


def admissibility_check(L, phi=None, samples=25, seed=0, *, base_box,
                        jet_scale=1.0) -> Report:
    """The four admissible-lagrangian conditions as a report.

    (a) positive-definite vertical Hessian, (b) nonnegativity with zero on
    the zero section, (c) projectability (no leaf-coordinate dependence),
    (d) a prescribed basic level phi (default 1) attained along random
    fiber rays.
    """
    r, q = L.order, L.qdim
    report = Report(seed=int(seed))
    rng = np.random.default_rng([int(seed), zlib.crc32(b"admissible")])
    box = np.asarray(base_box, dtype=float)
    if box.shape != (q, 2):
        raise ShapeError("base_box must have one interval per coordinate")

    leaf_vars = {v for v in L.program.free_variables() if v.startswith("u")}
    projectable = not leaf_vars
    report.add("projectable", L.name or "L", float(len(leaf_vars)), 0.0)

    def env_at(base, jets):
        env = {v: 0.0 for v in leaf_vars}
        env.update({f"x{i+1}": base[i] for i in range(q)})
        for k in range(1, r + 1):
            env.update({f"y{k}_{i+1}": jets[(k - 1) * q + i]
                        for i in range(q)})
        return env

    min_eig = np.inf
    min_value = np.inf
    zero_dev = 0.0
    ray_dev = 0.0
    ray_failures = 0
    for _ in range(samples):
        base = box[:, 0] + rng.random(q) * (box[:, 1] - box[:, 0])
        jets = rng.uniform(-jet_scale, jet_scale, r * q)
        if L.excluded is not None:
            for _ in range(50):
                if float(L.excluded.eval(env_at(base, jets))) > 0.0:
                    break
                jets = rng.uniform(-jet_scale, jet_scale, r * q)
        if projectable:
            point = TransverseJetPoint(L.name, r, (), tuple(base),
                                       tuple(tuple(jets[k * q:(k + 1) * q])
                                             for k in range(r)))
            min_eig = min(min_eig, vertical_hessian(L, point).min_eigenvalue)
        else:
            min_eig = min(min_eig, -np.inf)
        min_value = min(min_value, float(L.program.eval(env_at(base, jets))))
        if not L.slashed:
            zero_dev = max(zero_dev,
                           abs(float(L.program.eval(env_at(base,
                                                           [0.0] * (r * q))))))
        direction = rng.standard_normal(r * q)
        direction /= np.linalg.norm(direction)
        phi_value = float(phi.eval(env_at(base, [0.0] * (r * q)))) \
            if phi is not None else 1.0
        dev = _ray_level(L, {k: v for k, v in env_at(base, [0.0] * (r * q)).items()
                             if not k.startswith("y")},
                         direction, phi_value, r, q)
        if dev is None:
            ray_failures += 1
        else:
            ray_dev = max(ray_dev, dev)

    report.add("hessian_positive_definite", L.name or "L",
               float(min_eig), EIG_TOLERANCE, direction=">")
    report.add("nonnegative", L.name or "L", max(0.0, -float(min_value)),
               ZERO_SECTION_TOLERANCE)
    context = "skipped (slashed)" if L.slashed else (L.name or "L")
    report.add("zero_at_zero_section", context, zero_dev,
               ZERO_SECTION_TOLERANCE)
    metric = float(ray_failures) if ray_failures else ray_dev
    report.add("basic_level_attained",
               f"{L.name or 'L'} ({ray_failures} unbracketed rays)"
               if ray_failures else (L.name or "L"),
               metric, RAY_TOLERANCE)
    return report
