"""Transverse metrics, their lagrangian lifts and riemannian-foliation checks.

The central constructions: a transverse metric g lifts recursively to a
lagrangian L^(r) with vertical Hessian 2g, and g's Levi-Civita data
prolongs to a nonlinear connection on the order-r jet fiber; copying g
onto each summand of the resulting horizontal/vertical splitting
(summands declared orthogonal) yields a fiber metric G on the full jet
fiber.  `holonomy_check` then verifies chart-invariance of G and
`vertical_exactness_check` verifies G_top against the vertical Hessian.

Convention: the top vertical block of G equals g, i.e. half the vertical
Hessian of L^(r).
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping

import numpy as np

from . import symbolic
from .dynamics import LagrangianField, semispray, vertical_hessian
from .errors import InvariantViolation, ShapeError, SingularMetric
from .expr import ExprProgram, parse
from .jets import TransverseJetPoint
from .report import Report
from .scalars import DualScalar, seed_gradient

__all__ = [
    "MetricField",
    "LiftedMetric",
    "christoffel",
    "geodesic_spray",
    "lift_lagrangian",
    "lift_metric",
    "holonomy_check",
    "vertical_exactness_check",
    "sample_jets",
]

HOLONOMY_TOLERANCE = 1e-7
EXACTNESS_TOLERANCE = 1e-8
SPRAY_CROSSCHECK_TOLERANCE = 1e-9
EIG_TOLERANCE = 1e-9


@dataclass(frozen=True)
class MetricField:
    """A symmetric positive-definite q x q field over transverse coordinates."""

    components: tuple  # q rows of q ExprPrograms
    name: str = ""
    chart: str = ""

    @classmethod
    def from_components(cls, entries, q, *, name="", chart=""):
        if len(entries) != q or any(len(row) != q for row in entries):
            raise ShapeError(f"metric {name!r}: need a {q} x {q} matrix")
        parsed = [[None] * q for _ in range(q)]
        allowed = {f"x{i+1}" for i in range(q)}
        for i in range(q):
            for j in range(i, q):
                prog = entries[i][j]
                if not isinstance(prog, ExprProgram):
                    prog = parse(str(prog))
                extra = prog.free_variables() - allowed
                if extra:
                    raise InvariantViolation(
                        f"metric {name!r} entry ({i},{j}) uses {sorted(extra)}"
                    )
                # lower triangle mirrors the upper one
                parsed[i][j] = prog
                parsed[j][i] = prog
        return cls(tuple(tuple(row) for row in parsed), name, chart)

    @property
    def qdim(self):
        return len(self.components)

    def _env(self, base):
        return {f"x{i+1}": base[i] for i in range(self.qdim)}

    def evaluate(self, base):
        env = self._env(base)
        q = self.qdim
        out = np.empty((q, q))
        for i in range(q):
            for j in range(q):
                out[i, j] = float(self.components[i][j].eval(env))
        return (out + out.T) / 2.0

    def evaluate_with_partials(self, base):
        """(values, partials) with partials[a][i][j] = d g_ij / d x_a."""
        q = self.qdim
        env = {f"x{i+1}": seed_gradient(i, float(base[i]), q) for i in range(q)}
        vals = np.empty((q, q))
        partials = np.zeros((q, q, q))
        for i in range(q):
            for j in range(q):
                out = self.components[i][j].eval(env)
                if isinstance(out, DualScalar):
                    vals[i, j] = out.value
                    partials[:, i, j] = out.grad
                else:
                    vals[i, j] = float(out)
        return (vals + vals.T) / 2.0, (partials + partials.transpose(0, 2, 1)) / 2.0

    def check_positive_definite(self, box, samples=25, seed=0, *,
                                eig_tol=EIG_TOLERANCE):
        key = zlib.crc32(f"metric:{self.name}:{self.chart}".encode())
        rng = np.random.default_rng([int(seed), key])
        box = np.asarray(box, dtype=float)
        if box.shape != (self.qdim, 2):
            raise ShapeError("domain box must have one interval per coordinate")
        pts = box[:, 0] + rng.random((samples, self.qdim)) * (box[:, 1] - box[:, 0])
        for pt in pts:
            eig = float(np.linalg.eigvalsh(self.evaluate(pt)).min())
            if eig <= eig_tol:
                raise SingularMetric(
                    f"metric {self.name!r} has eigenvalue {eig:.3e} at "
                    f"{pt.tolist()}"
                )


def christoffel(g, base):
    """Levi-Civita symbols C[a][b][c] of g at a base point (duals inside)."""
    vals, partials = g.evaluate_with_partials(base)
    det = float(np.linalg.det(vals))
    if abs(det) <= 1e-12:
        raise SingularMetric(f"metric determinant {det:.3e} at {list(base)}")
    ginv = np.linalg.inv(vals)
    q = g.qdim
    out = np.zeros((q, q, q))
    for a in range(q):
        for b in range(q):
            for c in range(q):
                s = 0.0
                for d in range(q):
                    s += ginv[a, d] * (partials[b, d, c] + partials[c, b, d]
                                       - partials[d, b, c])
                out[a, b, c] = 0.5 * s
    return out


def _quadratic_lagrangian(g):
    """L^(1)(x, y) = g_x(y, y) as a LagrangianField."""
    stages = _lift_cached(g, 1)
    return LagrangianField.from_program(
        stages.lagrangians[0], order=1, qdim=g.qdim,
        name=f"lift({g.name or 'g'},1)",
    )


def geodesic_spray(g, point):
    """Spray of the metric lagrangian, cross-checked via Christoffel symbols."""
    if point.order != 1:
        raise ShapeError("geodesic spray wants an order-1 jet point")
    gamma = christoffel(g, point.base)
    y = np.asarray(point.jets[0])
    via_christoffel = 0.25 * np.einsum("abc,b,c->a", gamma, y, y)
    via_lagrangian = semispray(_quadratic_lagrangian(g), point)
    dev = float(np.max(np.abs(via_christoffel - via_lagrangian)))
    if dev > SPRAY_CROSSCHECK_TOLERANCE:
        raise InvariantViolation(
            f"geodesic spray cross-check deviates by {dev:.3e}"
        )
    return via_lagrangian


@lru_cache(maxsize=64)
def _lift_cached(g, r):
    return symbolic.lift_stages(g.components, r, g.qdim)


def lift_lagrangian(g, r) -> LagrangianField:
    """The recursive metric lift L^(r); smooth, vertical Hessian 2g."""
    if r < 1:
        raise ShapeError(f"need r >= 1, got {r}")
    stages = _lift_cached(g, r)
    return LagrangianField.from_program(
        stages.lagrangians[r - 1], order=r, qdim=g.qdim,
        name=f"lift({g.name or 'g'},{r})",
    )


@dataclass
class LiftedMetric:
    """The fiber metric G on the order-r jet fiber, per source chart.

    `connections` holds, per chart, the r prolonged connection-coefficient
    matrices M_(1..r) (each q x q of expression programs over the jet
    coordinates).
    """

    order: int
    sources: Mapping[str, MetricField]
    connections: Mapping[str, tuple] = field(default_factory=dict)

    @property
    def qdim(self):
        return next(iter(self.sources.values())).qdim

    def _key(self, chart):
        if chart in self.sources:
            return chart
        if len(self.sources) == 1:
            return next(iter(self.sources))
        raise InvariantViolation(
            f"no metric presentation for chart {chart!r}"
        )

    def evaluate(self, point) -> np.ndarray:
        key = self._key(point.chart)
        return _assemble_metric(self.sources[key], self.connections[key],
                                self.order, point)

    def __call__(self, point):
        return self.evaluate(point)


def _coefficient_env(point, q):
    env = {f"x{i+1}": point.base[i] for i in range(q)}
    for k in range(1, point.order + 1):
        row = point.jet(k)
        env.update({f"y{k}_{i+1}": row[i] for i in range(q)})
    return env


def _assemble_metric(g, coefficients, r, point):
    q = g.qdim
    n = (r + 1) * q
    env = _coefficient_env(point, q)
    m = [np.array([[float(prog.eval(env)) for prog in row] for row in mat])
         for mat in coefficients]
    # coframe rows delta y^(k) = dy^(k) + sum_j M_(j) dy^(k-j); each row
    # carries an orthogonal copy of g
    R = np.eye(n)
    for k in range(1, r + 1):
        for j in range(1, k + 1):
            R[k * q:(k + 1) * q, (k - j) * q:(k - j + 1) * q] = m[j - 1]
    gb = g.evaluate(point.base)
    G = np.zeros((n, n))
    for k in range(r + 1):
        row = R[k * q:(k + 1) * q, :]
        G += row.T @ gb @ row
    return (G + G.T) / 2.0


@lru_cache(maxsize=64)
def _connection_cached(g, r):
    return tuple(symbolic.prolongation_coefficients(g.components, r, g.qdim))


def lift_metric(g, r) -> LiftedMetric:
    """Lift a metric (or a per-chart family) to the order-r jet fiber."""
    if r < 1:
        raise ShapeError(f"need r >= 1, got {r}")
    if isinstance(g, MetricField):
        fields = {g.chart: g}
    else:
        fields = dict(g)
    connections = {chart: _connection_cached(fld, r)
                   for chart, fld in fields.items()}
    return LiftedMetric(r, fields, connections)


def sample_jets(rng, r, q, scale=1.0):
    return tuple(tuple(rng.uniform(-scale, scale, q)) for _ in range(r))


def holonomy_check(atlas, lifted, samples=25, seed=0, *,
                   tol=HOLONOMY_TOLERANCE) -> Report:
    """Transition-invariance of the lifted metric: DPhi^T G' DPhi == G."""
    from .atlas import sample_overlap
    from .jets import prolong_jacobian, prolong_transition

    report = Report(seed=int(seed))
    r, p = lifted.order, atlas.p
    q = lifted.qdim
    for t in atlas.transitions.values():
        if (t.from_chart not in lifted.sources
                or t.to_chart not in lifted.sources):
            continue
        pts = sample_overlap(t, samples, seed)
        rng = np.random.default_rng(
            [int(seed), zlib.crc32(t.name.encode()), 7]
        )
        dev_max = 0.0
        for pt in pts:
            point = TransverseJetPoint(t.from_chart, r, tuple(pt[:p]),
                                       tuple(pt[p:]), sample_jets(rng, r, q))
            image = prolong_transition(atlas, t, point)
            dphi = prolong_jacobian(atlas, t, point)
            left = dphi.T @ lifted.evaluate(image) @ dphi
            dev_max = max(dev_max,
                          float(np.max(np.abs(left - lifted.evaluate(point)))))
        report.add("holonomy", t.name, dev_max, tol)
    return report


def vertical_exactness_check(lifted, L, samples=25, seed=0, *, base_box,
                             chart=None, jet_scale=1.0,
                             tol=EXACTNESS_TOLERANCE) -> Report:
    """Top vertical block of G against half the vertical Hessian of L."""
    report = Report(seed=int(seed))
    r = lifted.order
    q = lifted.qdim
    if L.order != r or L.qdim != q:
        raise ShapeError("lagrangian and lifted metric orders differ")
    if chart is None:
        chart = next(iter(lifted.sources))
    rng = np.random.default_rng([int(seed), zlib.crc32(b"vexact"), 3])
    box = np.asarray(base_box, dtype=float)
    dev_max = 0.0
    for _ in range(samples):
        base = box[:, 0] + rng.random(q) * (box[:, 1] - box[:, 0])
        point = TransverseJetPoint(chart, r, (), tuple(base),
                                   sample_jets(rng, r, q, jet_scale))
        g_top = lifted.evaluate(point)[r * q:, r * q:]
        half_hess = 0.5 * vertical_hessian(L, point).matrix
        dev_max = max(dev_max, float(np.max(np.abs(g_top - half_hess))))
    report.add("vertical_exactness", L.name or "L", dev_max, tol)
    return report
