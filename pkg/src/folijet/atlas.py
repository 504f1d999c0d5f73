"""Foliated atlases: charts, foliated transitions and their validation.

An atlas document is a single JSON object (see `load_atlas`).  Transition
maps have the foliated pseudogroup form: leaf expressions may use leaf and
transverse coordinates, transverse expressions only transverse ones.  That
restriction is enforced syntactically at load time and double-checked
numerically during validation.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import expr as exprmod
from .errors import InvariantViolation, SchemaError
from .report import Report
from .scalars import DualScalar, seed_gradient, value_of

__all__ = [
    "Chart",
    "Transition",
    "TripleOverlap",
    "FoliatedAtlas",
    "load_atlas",
    "load_atlas_file",
    "validate_foliated",
    "sample_overlap",
    "apply_transition",
    "transverse_jacobian",
    "box_contains",
]

DET_TOLERANCE = 1e-9
ROUNDTRIP_TOLERANCE = 1e-9
COCYCLE_TOLERANCE = 1e-8


def _check_box(box, what):
    out = []
    for pair in box:
        if len(pair) != 2:
            raise SchemaError(f"{what}: interval must be [lo, hi]")
        lo, hi = float(pair[0]), float(pair[1])
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise InvariantViolation(f"{what}: non-finite interval bound")
        if hi < lo:
            raise InvariantViolation(f"{what}: empty interval [{lo}, {hi}]")
        out.append((lo, hi))
    return tuple(out)


def box_contains(box, point, slack=0.0) -> bool:
    return all(lo - slack <= p <= hi + slack for (lo, hi), p in zip(box, point))


def _box_subset(inner, outer) -> bool:
    return all(olo <= ilo and ihi <= ohi
               for (ilo, ihi), (olo, ohi) in zip(inner, outer))


@dataclass(frozen=True)
class Chart:
    name: str
    domain: tuple  # (p+q) closed intervals

    @property
    def dim(self):
        return len(self.domain)


@dataclass(frozen=True)
class Transition:
    name: str
    from_chart: str
    to_chart: str
    leaf_exprs: tuple  # p ExprPrograms
    transverse_exprs: tuple  # q ExprPrograms
    overlap: tuple  # (p+q) intervals, subset of the source domain
    inverse_of: str | None = None


@dataclass(frozen=True)
class TripleOverlap:
    first: str
    second: str
    composite: str  # should equal second o first
    overlap: tuple


@dataclass(frozen=True)
class FoliatedAtlas:
    leaf_dim: int
    transverse_dim: int
    charts: Mapping[str, Chart]
    transitions: Mapping[str, Transition]
    triples: tuple = ()
    metrics: Mapping[str, Mapping[str, object]] = field(default_factory=dict)
    lagrangians: Mapping[str, object] = field(default_factory=dict)

    @property
    def p(self):
        return self.leaf_dim

    @property
    def q(self):
        return self.transverse_dim


def _leaf_vars(p):
    return {f"u{i+1}" for i in range(p)}


def _transverse_vars(q):
    return {f"x{i+1}" for i in range(q)}


def _parse_exprs(texts, where):
    out = []
    for i, text in enumerate(texts):
        try:
            out.append(exprmod.parse(str(text)))
        except Exception as err:
            raise SchemaError(f"{where}[{i}]: {err}") from err
    return tuple(out)


def load_atlas(document) -> "FoliatedAtlas":
    """Load and validate an atlas from a JSON string or a parsed dict."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as err:
            raise SchemaError(f"invalid JSON: {err}") from err
    if not isinstance(document, dict):
        raise SchemaError("atlas document must be a single JSON object")

    try:
        p = int(document["leaf_dim"])
        q = int(document["transverse_dim"])
    except KeyError as err:
        raise SchemaError(f"missing top-level key {err}") from err
    if p < 0 or q < 1:
        raise InvariantViolation("need leaf_dim >= 0 and transverse_dim >= 1")

    charts: dict[str, Chart] = {}
    for entry in document.get("charts", []):
        name = str(entry["name"])
        domain = _check_box(entry["domain"], f"chart {name} domain")
        if len(domain) != p + q:
            raise SchemaError(f"chart {name}: domain must have {p + q} intervals")
        if name in charts:
            raise SchemaError(f"duplicate chart name {name!r}")
        charts[name] = Chart(name, domain)
    if not charts:
        raise SchemaError("atlas needs at least one chart")

    leafs, transverses = _leaf_vars(p), _transverse_vars(q)
    transitions: dict[str, Transition] = {}
    for entry in document.get("transitions", []):
        src, dst = str(entry["from"]), str(entry["to"])
        name = str(entry.get("name", f"{src}->{dst}"))
        if name in transitions:
            raise SchemaError(f"duplicate transition name {name!r}")
        if src not in charts or dst not in charts:
            raise SchemaError(f"transition {name}: unknown chart")
        if src == dst:
            raise InvariantViolation(
                f"transition {name}: must reference two distinct charts"
            )
        leaf_exprs = _parse_exprs(entry.get("leaf_exprs", []),
                                  f"transition {name} leaf_exprs")
        transverse_exprs = _parse_exprs(entry["transverse_exprs"],
                                        f"transition {name} transverse_exprs")
        if len(leaf_exprs) != p or len(transverse_exprs) != q:
            raise SchemaError(
                f"transition {name}: need {p} leaf and {q} transverse expressions"
            )
        for i, e in enumerate(transverse_exprs):
            extra = e.free_variables() - transverses
            if extra:
                raise InvariantViolation(
                    f"transition {name}: transverse expression {i} is not "
                    f"foliated (uses {sorted(extra)})"
                )
        for i, e in enumerate(leaf_exprs):
            extra = e.free_variables() - leafs - transverses
            if extra:
                raise InvariantViolation(
                    f"transition {name}: leaf expression {i} uses {sorted(extra)}"
                )
        overlap = _check_box(entry["overlap"], f"transition {name} overlap")
        if len(overlap) != p + q:
            raise SchemaError(f"transition {name}: overlap must have {p + q} intervals")
        if not _box_subset(overlap, charts[src].domain):
            raise InvariantViolation(
                f"transition {name}: overlap is not inside the source domain"
            )
        inverse_of = entry.get("inverse_of")
        transitions[name] = Transition(
            name, src, dst, leaf_exprs, transverse_exprs, overlap,
            str(inverse_of) if inverse_of is not None else None,
        )
    for t in transitions.values():
        if t.inverse_of is not None:
            other = transitions.get(t.inverse_of)
            if other is None:
                raise SchemaError(
                    f"transition {t.name}: inverse_of references unknown "
                    f"transition {t.inverse_of!r}"
                )
            if other.from_chart != t.to_chart or other.to_chart != t.from_chart:
                raise InvariantViolation(
                    f"transition {t.name}: inverse_of chart mismatch"
                )

    triples = []
    for entry in document.get("triples", []):
        via = entry["via"]
        if len(via) != 3:
            raise SchemaError("triple: 'via' must list three transition names")
        t1, t2, t3 = (str(v) for v in via)
        for v in (t1, t2, t3):
            if v not in transitions:
                raise SchemaError(f"triple: unknown transition {v!r}")
        if transitions[t1].to_chart != transitions[t2].from_chart:
            raise InvariantViolation(f"triple ({t1}, {t2}, {t3}): charts do not chain")
        if (transitions[t3].from_chart != transitions[t1].from_chart
                or transitions[t3].to_chart != transitions[t2].to_chart):
            raise InvariantViolation(f"triple ({t1}, {t2}, {t3}): composite mismatch")
        overlap = _check_box(entry["overlap"], "triple overlap")
        triples.append(TripleOverlap(t1, t2, t3, overlap))

    # metrics and lagrangians are owned by the riemann/dynamics modules;
    # imported here lazily to keep the module graph acyclic
    metrics: dict[str, dict[str, object]] = {}
    if document.get("metrics"):
        from .riemann import MetricField

        for entry in document["metrics"]:
            name, chart = str(entry["name"]), str(entry["chart"])
            if chart not in charts:
                raise SchemaError(f"metric {name}: unknown chart {chart!r}")
            fld = MetricField.from_components(entry["components"], q, name=name,
                                              chart=chart)
            fld.check_positive_definite(charts[chart].domain[p:], samples=25,
                                        seed=0)
            metrics.setdefault(name, {})[chart] = fld

    lagrangians: dict[str, object] = {}
    if document.get("lagrangians"):
        from .dynamics import LagrangianField

        for entry in document["lagrangians"]:
            name, chart = str(entry["name"]), str(entry["chart"])
            if chart not in charts:
                raise SchemaError(f"lagrangian {name}: unknown chart {chart!r}")
            order = int(entry["order"])
            program = exprmod.parse(str(entry["expr"]))
            excluded = entry.get("excluded")
            fld = LagrangianField.from_program(
                program,
                order=order,
                qdim=q,
                slashed=bool(entry.get("slashed", False)),
                excluded=exprmod.parse(str(excluded)) if excluded else None,
                name=name,
            )
            if name in lagrangians:
                raise SchemaError(f"duplicate lagrangian name {name!r}")
            lagrangians[name] = fld

    return FoliatedAtlas(p, q, charts, transitions, tuple(triples), metrics,
                         lagrangians)


def load_atlas_file(path) -> "FoliatedAtlas":
    with open(path, "r", encoding="utf-8") as handle:
        return load_atlas(handle.read())


# ---------------------------------------------------------------------------
# evaluation helpers
# ---------------------------------------------------------------------------


def point_env(p, q, leaf, base):
    env = {f"u{i+1}": leaf[i] for i in range(p)}
    env.update({f"x{i+1}": base[i] for i in range(q)})
    return env


def apply_transition(atlas, transition, leaf, base):
    """Map a (leaf, transverse) point through a transition; plain floats."""
    env = point_env(atlas.p, atlas.q, leaf, base)
    new_leaf = tuple(float(e.eval(env)) for e in transition.leaf_exprs)
    new_base = tuple(float(e.eval(env)) for e in transition.transverse_exprs)
    return new_leaf, new_base


def transverse_jacobian(atlas, transition, base):
    """q x q Jacobian of the transverse part, computed with dual seeds."""
    q = atlas.q
    env = {f"x{i+1}": seed_gradient(i, float(base[i]), q) for i in range(q)}
    rows = []
    for e in transition.transverse_exprs:
        val = e.eval(env)
        rows.append(val.grad if isinstance(val, DualScalar) else np.zeros(q))
    return np.asarray(rows, dtype=float)


def sample_overlap(transition, n, seed):
    """Deterministic pseudo-random points inside the overlap box."""
    if n < 1:
        raise ValueError("need n >= 1")
    key = zlib.crc32(transition.name.encode("utf-8"))
    rng = np.random.default_rng([int(seed), key])
    box = np.asarray(transition.overlap, dtype=float)
    u = rng.random((n, box.shape[0]))
    return box[:, 0] + u * (box[:, 1] - box[:, 0])


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def validate_foliated(atlas, samples=50, seed=0, *, det_tol=DET_TOLERANCE,
                      roundtrip_tol=ROUNDTRIP_TOLERANCE,
                      cocycle_tol=COCYCLE_TOLERANCE) -> Report:
    """Numerically check pseudogroup structure at sampled overlap points.

    Failures are report entries, never exceptions.
    """
    if samples < 1:
        raise ValueError("need samples >= 1")
    report = Report(seed=int(seed))
    p, q = atlas.p, atlas.q

    for t in atlas.transitions.values():
        pts = sample_overlap(t, samples, seed)
        min_det = np.inf
        mixed_max = 0.0
        roundtrip_max = 0.0
        inverse = atlas.transitions.get(t.inverse_of) if t.inverse_of else None
        for pt in pts:
            leaf, base = tuple(pt[:p]), tuple(pt[p:])
            jac = transverse_jacobian(atlas, t, base)
            min_det = min(min_det, abs(float(np.linalg.det(jac))))
            # mixed block dx'/du via duals over all p+q source coordinates
            env = {f"u{i+1}": seed_gradient(i, leaf[i], p + q) for i in range(p)}
            env.update({f"x{i+1}": seed_gradient(p + i, base[i], p + q)
                        for i in range(q)})
            for e in t.transverse_exprs:
                val = e.eval(env)
                if isinstance(val, DualScalar) and p:
                    mixed_max = max(mixed_max, float(np.max(np.abs(val.grad[:p]))))
            if inverse is not None:
                image = apply_transition(atlas, t, leaf, base)
                back = apply_transition(atlas, inverse, *image)
                dev = max(
                    max((abs(a - b) for a, b in zip(back[0], leaf)), default=0.0),
                    max(abs(a - b) for a, b in zip(back[1], base)),
                )
                roundtrip_max = max(roundtrip_max, dev)
        report.add("transverse_jacobian_invertible", t.name, min_det, det_tol,
                   direction=">")
        report.add("mixed_block_zero", t.name, mixed_max, 0.0)
        if inverse is not None:
            report.add("inverse_round_trip", t.name, roundtrip_max, roundtrip_tol)

    for triple in atlas.triples:
        t1 = atlas.transitions[triple.first]
        t2 = atlas.transitions[triple.second]
        t3 = atlas.transitions[triple.composite]
        probe = Transition(f"triple:{t1.name}|{t2.name}|{t3.name}",
                           t1.from_chart, t2.to_chart, t1.leaf_exprs,
                           t1.transverse_exprs, triple.overlap)
        pts = sample_overlap(probe, samples, seed)
        dev_max = 0.0
        for pt in pts:
            leaf, base = tuple(pt[:p]), tuple(pt[p:])
            via = apply_transition(atlas, t2, *apply_transition(atlas, t1, leaf, base))
            direct = apply_transition(atlas, t3, leaf, base)
            dev = max(
                max((abs(a - b) for a, b in zip(via[0], direct[0])), default=0.0),
                max(abs(a - b) for a, b in zip(via[1], direct[1])),
            )
            dev_max = max(dev_max, dev)
        report.add("cocycle", f"{t2.name} o {t1.name} == {t3.name}", dev_max,
                   cocycle_tol)

    return report
