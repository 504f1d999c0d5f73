"""Command-line front end: validate atlases, run computations, certify.

Verbs:

* ``validate`` — pseudogroup checks of a foliated atlas.
* ``prolong``  — transport a jet point across a named transition.
* ``semispray`` — semi-spray components of a lagrangian at a jet point.
* ``lift``     — the recursive lagrangian lift and prolonged connection
  coefficients of a named metric.
* ``certify``  — the full pipeline: validation, lift, projector
  identities, holonomy, vertical exactness, admissibility and the
  diagonal-hamiltonian identity, aggregated into one report.

Exit codes: 0 all checks pass, 1 at least one check failed, 2 setup or
input error.  Reports are deterministic JSON for fixed seeds.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import zlib

import numpy as np

from . import __version__
from .atlas import load_atlas_file, validate_foliated
from .dynamics import SemiSprayField, projectors, semispray
from .errors import FolijetError
from .jets import TransverseJetPoint, prolong_transition, zero_section
from .legendre import (
    CotangentJetPoint,
    admissibility_check,
    legendre_chain,
    pseudo_hamiltonian,
)
from .report import Report
from .riemann import (
    holonomy_check,
    lift_lagrangian,
    lift_metric,
    sample_jets,
    vertical_exactness_check,
)

__all__ = ["main", "build_parser"]

PROJECTOR_SUM_TOLERANCE = 1e-14
PROJECTOR_TOLERANCE = 1e-9
HAMILTONIAN_TOLERANCE = 1e-8


def _default_seed():
    try:
        return int(os.environ.get("FOLIJET_SEED", "0"))
    except ValueError:
        return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="folijet",
        description="transverse jet bundles: validation and certification",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, samples=True):
        p.add_argument("atlas", help="path to an atlas JSON file")
        p.add_argument("--seed", type=int, default=_default_seed())
        if samples:
            p.add_argument("--samples", type=int, default=25)
        p.add_argument("--out", help="write the JSON report here instead of stdout")

    p = sub.add_parser("validate", help="check the pseudogroup structure")
    common(p)
    p.add_argument("--tol-det", type=float, default=1e-9)
    p.add_argument("--tol-roundtrip", type=float, default=1e-9)
    p.add_argument("--tol-cocycle", type=float, default=1e-8)
    p.set_defaults(run=cmd_validate)

    p = sub.add_parser("prolong", help="transport a jet across a transition")
    common(p, samples=False)
    p.add_argument("--transition", required=True)
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--jet", required=True,
                   help='point spec, e.g. "u=0;x=1;y1=1;y2=0"')
    p.set_defaults(run=cmd_prolong)

    p = sub.add_parser("semispray", help="semi-spray components at a point")
    common(p, samples=False)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--lagrangian", help="named lagrangian from the atlas")
    group.add_argument("--metric", help="lift this metric instead")
    p.add_argument("--chart", help="chart of the metric presentation")
    p.add_argument("--order", type=int, help="lift order when using --metric")
    p.add_argument("--jet", required=True)
    p.set_defaults(run=cmd_semispray)

    p = sub.add_parser("lift", help="recursive lagrangian/metric lift")
    common(p, samples=False)
    p.add_argument("--metric", required=True)
    p.add_argument("--order", type=int, required=True)
    p.set_defaults(run=cmd_lift)

    p = sub.add_parser("certify", help="run the full certification pipeline")
    common(p)
    p.add_argument("--metric", required=True)
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--tol-det", type=float, default=1e-9)
    p.add_argument("--tol-roundtrip", type=float, default=1e-9)
    p.add_argument("--tol-cocycle", type=float, default=1e-8)
    p.add_argument("--tol-projector", type=float, default=PROJECTOR_TOLERANCE)
    p.add_argument("--tol-holonomy", type=float, default=1e-7)
    p.add_argument("--tol-exactness", type=float, default=1e-8)
    p.add_argument("--tol-hamiltonian", type=float,
                   default=HAMILTONIAN_TOLERANCE)
    p.set_defaults(run=cmd_certify)
    return parser


def _emit(payload, out_path):
    text = payload if isinstance(payload, str) else json.dumps(
        payload, indent=2, sort_keys=True)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as handle:
            handle.write(text + "\n")
    else:
        print(text)


def _parse_jet(spec, atlas, order):
    """Parse "u=...;x=...;y1=...;..." into (leaf, base, jets)."""
    fields = {}
    for chunk in spec.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "=" not in chunk:
            raise ValueError(f"jet spec entry {chunk!r} is not key=values")
        key, _, values = chunk.partition("=")
        fields[key.strip()] = tuple(float(v) for v in values.split(","))
    leaf = fields.pop("u", (0.0,) * atlas.p)
    base = fields.pop("x", None)
    if base is None:
        raise ValueError("jet spec needs an x=... entry")
    jets = []
    for k in range(1, order + 1):
        jets.append(fields.pop(f"y{k}", (0.0,) * atlas.q))
    if fields:
        raise ValueError(f"unknown jet spec keys {sorted(fields)}")
    if len(leaf) != atlas.p or len(base) != atlas.q \
            or any(len(row) != atlas.q for row in jets):
        raise ValueError("jet spec entries do not match the atlas dimensions")
    return leaf, base, tuple(jets)


def _metric_family(atlas, name):
    family = atlas.metrics.get(name)
    if not family:
        raise ValueError(f"atlas declares no metric named {name!r}")
    return family


def cmd_validate(args):
    atlas = load_atlas_file(args.atlas)
    report = validate_foliated(atlas, samples=args.samples, seed=args.seed,
                               det_tol=args.tol_det,
                               roundtrip_tol=args.tol_roundtrip,
                               cocycle_tol=args.tol_cocycle)
    _emit(report.to_json(), args.out)
    return 0 if report.passed else 1


def cmd_prolong(args):
    atlas = load_atlas_file(args.atlas)
    transition = atlas.transitions.get(args.transition)
    if transition is None:
        raise ValueError(f"unknown transition {args.transition!r}")
    leaf, base, jets = _parse_jet(args.jet, atlas, args.order)
    point = TransverseJetPoint(transition.from_chart, args.order, leaf, base,
                               jets)
    image = prolong_transition(atlas, transition, point)
    _emit(image.to_dict(), args.out)
    return 0


def cmd_semispray(args):
    atlas = load_atlas_file(args.atlas)
    if args.lagrangian:
        L = atlas.lagrangians.get(args.lagrangian)
        if L is None:
            raise ValueError(f"unknown lagrangian {args.lagrangian!r}")
        chart = args.chart or ""
    else:
        if args.order is None:
            raise ValueError("--metric needs --order")
        family = _metric_family(atlas, args.metric)
        chart = args.chart or next(iter(family))
        if chart not in family:
            raise ValueError(
                f"metric {args.metric!r} has no presentation in chart "
                f"{chart!r}"
            )
        L = lift_lagrangian(family[chart], args.order)
    leaf, base, jets = _parse_jet(args.jet, atlas, L.order)
    point = TransverseJetPoint(chart, L.order, leaf, base, jets)
    s = semispray(L, point)
    _emit({"lagrangian": L.name, "point": point.to_dict(),
           "components": [float(v) for v in s]}, args.out)
    return 0


def cmd_lift(args):
    atlas = load_atlas_file(args.atlas)
    family = _metric_family(atlas, args.metric)
    lifted = lift_metric(family, args.order)
    charts = {}
    for chart, fld in family.items():
        L = lift_lagrangian(fld, args.order)
        coeffs = lifted.connections[chart]
        charts[chart] = {
            "lagrangian": L.program.to_text(),
            "connection": [[[prog.to_text() for prog in row] for row in mat]
                           for mat in coeffs],
        }
    _emit({"metric": args.metric, "order": args.order, "charts": charts},
          args.out)
    return 0


def _projector_checks(report, atlas, family, order, samples, seed, tol):
    for chart, fld in family.items():
        L = lift_lagrangian(fld, order)
        S = SemiSprayField.from_lagrangian(L)
        domain = np.asarray(atlas.charts[chart].domain[atlas.p:], dtype=float)
        rng = np.random.default_rng(
            [int(seed), zlib.crc32(chart.encode()), 11]
        )
        n = (order + 1) * fld.qdim
        eye = np.eye(n)
        dev_sum = dev_idem = 0.0
        for _ in range(samples):
            base = domain[:, 0] + rng.random(fld.qdim) * (domain[:, 1]
                                                          - domain[:, 0])
            point = TransverseJetPoint(chart, order, (), tuple(base),
                                       sample_jets(rng, order, fld.qdim))
            h, v = projectors(S, point)
            dev_sum = max(dev_sum, float(np.max(np.abs(h + v - eye))))
            dev_idem = max(dev_idem, float(np.max(np.abs(h @ h - h))),
                           float(np.max(np.abs(v @ v - v))),
                           float(np.max(np.abs(h @ v))))
        report.add("projector_sum", chart, dev_sum, PROJECTOR_SUM_TOLERANCE)
        report.add("projector_idempotence", chart, dev_idem, tol)


def _hamiltonian_checks(report, atlas, family, order, samples, seed, tol):
    for chart, fld in family.items():
        L = lift_lagrangian(fld, order)
        L1 = lift_lagrangian(fld, 1)
        chain = legendre_chain(L)
        domain = np.asarray(atlas.charts[chart].domain[atlas.p:], dtype=float)
        rng = np.random.default_rng(
            [int(seed), zlib.crc32(chart.encode()), 13]
        )
        dev = 0.0
        for _ in range(samples):
            base = domain[:, 0] + rng.random(fld.qdim) * (domain[:, 1]
                                                          - domain[:, 0])
            momentum = rng.uniform(-2.0, 2.0, fld.qdim)
            cpoint = CotangentJetPoint(chart, 1, (), tuple(base), (),
                                       tuple(momentum))
            want = pseudo_hamiltonian(L1, cpoint).value
            dev = max(dev, abs(chain(base, momentum) - want))
        report.add("diagonal_hamiltonian", chart, dev, tol)
        report.extend(admissibility_check(L, samples=samples, seed=seed,
                                          base_box=domain))


def cmd_certify(args):
    atlas = load_atlas_file(args.atlas)
    family = _metric_family(atlas, args.metric)
    report = Report(seed=int(args.seed))
    report.extend(validate_foliated(atlas, samples=args.samples,
                                    seed=args.seed, det_tol=args.tol_det,
                                    roundtrip_tol=args.tol_roundtrip,
                                    cocycle_tol=args.tol_cocycle))
    lifted = lift_metric(family, args.order)
    for chart, fld in family.items():
        domain = np.asarray(atlas.charts[chart].domain[atlas.p:], dtype=float)
        point = zero_section(args.order,
                             (0.0,) * atlas.p, domain.mean(axis=1), chart)
        got = lifted.evaluate(point)[:fld.qdim, :fld.qdim]
        report.add("zero_section_restriction", chart,
                   float(np.max(np.abs(got - fld.evaluate(point.base)))),
                   args.tol_exactness)
    _projector_checks(report, atlas, family, args.order, args.samples,
                      args.seed, args.tol_projector)
    report.extend(holonomy_check(atlas, lifted, samples=args.samples,
                                 seed=args.seed, tol=args.tol_holonomy))
    for chart, fld in family.items():
        L = lift_lagrangian(fld, args.order)
        domain = atlas.charts[chart].domain[atlas.p:]
        report.extend(vertical_exactness_check(
            lifted, L, samples=args.samples, seed=args.seed,
            base_box=domain, chart=chart, tol=args.tol_exactness))
    _hamiltonian_checks(report, atlas, family, args.order, args.samples,
                        args.seed, args.tol_hamiltonian)
    _emit(report.to_json(), args.out)
    return 0 if report.passed else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.run(args)
    except (FolijetError, OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
