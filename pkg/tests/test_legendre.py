import numpy as np
import pytest

from folijet.dynamics import LagrangianField
from folijet.errors import (
    InvariantViolation,
    ShapeError,
    SingularHessian,
)
from folijet.expr import parse
from folijet.jets import TransverseJetPoint
from folijet.legendre import (
    CotangentJetPoint,
    legendre_chain,
    legendre_inverse,
    legendre_map,
    pseudo_hamiltonian,
    admissibility_check,
)
from folijet.riemann import lift_lagrangian


def jet_point(base, jets, chart=""):
    return TransverseJetPoint(chart, len(jets), (), tuple(base),
                              tuple(tuple(row) for row in jets))


def lagrangian(text, order, qdim=1, **kw):
    return LagrangianField.from_program(parse(text), order=order, qdim=qdim,
                                        **kw)


# ------------------------------------------------------------ legendre map


def test_legendre_map_quadratic():
    L = lagrangian("y1_1^2", 1)
    cp = legendre_map(L, jet_point([0.5], [[3.0]]))
    assert cp.momentum == (6.0,)
    assert cp.jets == ()
    assert cp.base == (0.5,)


def test_legendre_map_flat_lift_second_order(flat_metric):
    L = lift_lagrangian(flat_metric, 2)
    pt = jet_point([0.2], [[1.1], [0.7]])
    cp = legendre_map(L, pt)
    assert cp.momentum[0] == pytest.approx(2 * 0.7, abs=1e-12)
    assert cp.jets == ((1.1,),)  # lower rows copied verbatim


def test_legendre_map_momentum_scales_with_top_row(exp_metric):
    # 2-homogeneous stage: scaling the top row scales the momentum linearly
    L = lift_lagrangian(exp_metric, 1)
    for lam in (0.5, 2.0, 5.0):
        p1 = legendre_map(L, jet_point([0.3], [[0.8]])).momentum[0]
        p2 = legendre_map(L, jet_point([0.3], [[lam * 0.8]])).momentum[0]
        assert p2 == pytest.approx(lam * p1, rel=1e-9)


# -------------------------------------------------------------- inversion


def test_legendre_inverse_linear_system_one_step():
    L = lagrangian("y1_1^2", 1)
    cp = CotangentJetPoint("", 1, (), (0.5,), (), (6.0,))
    point, stats = legendre_inverse(L, cp, return_stats=True)
    assert point.jets[0][0] == pytest.approx(3.0, abs=1e-12)
    assert stats["iterations"] == 1


def test_legendre_inverse_quadratic_flat_lift_one_step(flat_metric):
    L = lift_lagrangian(flat_metric, 2)
    cp = CotangentJetPoint("", 2, (), (0.2,), ((1.1,),), (-0.9,))
    point, stats = legendre_inverse(L, cp, return_stats=True)
    assert stats["iterations"] == 1
    assert legendre_map(L, point).momentum[0] == pytest.approx(-0.9,
                                                               abs=1e-10)


@pytest.mark.parametrize("r", [1, 2, 3])
def test_legendre_round_trip(exp_metric, r):
    L = lift_lagrangian(exp_metric, r)
    rng = np.random.default_rng(100 + r)
    for _ in range(100):
        pt = jet_point(rng.uniform(-0.5, 0.8, 1),
                       [rng.uniform(-1.5, 1.5, 1) for _ in range(r)])
        back = legendre_inverse(L, legendre_map(L, pt))
        assert np.allclose(back.jets, pt.jets, atol=1e-9)


def test_legendre_inverse_singular_guard():
    # quartic well: hessian 12 y^2 vanishes at the zero guess
    L = lagrangian("y1_1^4", 1)
    cp = CotangentJetPoint("", 1, (), (0.5,), (), (1.0,))
    with pytest.raises(SingularHessian):
        legendre_inverse(L, cp)


def test_legendre_inverse_shape_mismatch(flat_metric):
    L = lift_lagrangian(flat_metric, 2)
    cp = CotangentJetPoint("", 1, (), (0.2,), (), (1.0,))
    with pytest.raises(ShapeError):
        legendre_inverse(L, cp)


# ------------------------------------------------------ pseudo-hamiltonian


def test_pseudo_hamiltonian_quadratic():
    L = lagrangian("y1_1^2", 1)
    cp = CotangentJetPoint("", 1, (), (0.1,), (), (1.6,))
    assert pseudo_hamiltonian(L, cp).value == pytest.approx(1.6 ** 2 / 4.0,
                                                            abs=1e-12)


def test_pseudo_hamiltonian_flat_two_dim():
    L = lagrangian("y1_1^2 + y1_2^2", 1, qdim=2)
    cp = CotangentJetPoint("", 1, (), (0.1, 0.2), (), (1.0, -2.0))
    assert pseudo_hamiltonian(L, cp).value == pytest.approx(
        (1.0 + 4.0) / 4.0, abs=1e-12)


def test_pseudo_hamiltonian_two_homogeneous_in_momentum(exp_metric):
    L = lift_lagrangian(exp_metric, 1)
    for lam in (0.5, 3.0):
        h1 = pseudo_hamiltonian(
            L, CotangentJetPoint("", 1, (), (0.4,), (), (0.9,))).value
        h2 = pseudo_hamiltonian(
            L, CotangentJetPoint("", 1, (), (0.4,), (), (lam * 0.9,))).value
        assert h2 == pytest.approx(lam ** 2 * h1, rel=1e-9)


# ---------------------------------------------------------------- chain


def test_chain_flat_is_quarter_momentum_squared(flat_metric):
    for r in (1, 2, 3):
        H = legendre_chain(lift_lagrangian(flat_metric, r))
        for p in (-1.4, 0.3, 2.0):
            assert H((0.7,), (p,)) == pytest.approx(p * p / 4.0, abs=1e-12)


def test_chain_single_stage_equals_pseudo_hamiltonian(exp_metric):
    L = lift_lagrangian(exp_metric, 1)
    H = legendre_chain(L)
    for x, p in ((0.2, 1.1), (-0.4, -0.7)):
        want = pseudo_hamiltonian(
            L, CotangentJetPoint("", 1, (), (x,), (), (p,))).value
        assert H((x,), (p,)) == pytest.approx(want, abs=1e-12)


@pytest.mark.parametrize("metric_name,r,samples", [
    ("exp", 2, 50), ("exp", 3, 10), ("wavy", 2, 50), ("wavy", 3, 10),
])
def test_chain_reduces_to_first_stage_hamiltonian(exp_metric, wavy_metric,
                                                  metric_name, r, samples):
    g = {"exp": exp_metric, "wavy": wavy_metric}[metric_name]
    L1 = lift_lagrangian(g, 1)
    H = legendre_chain(lift_lagrangian(g, r))
    rng = np.random.default_rng(200 + r)
    for _ in range(samples):
        x = float(rng.uniform(-0.5, 0.8))
        p = float(rng.uniform(-2.0, 2.0))
        want = pseudo_hamiltonian(
            L1, CotangentJetPoint("", 1, (), (x,), (), (p,))).value
        assert H((x,), (p,)) == pytest.approx(want, abs=1e-8)


def test_chain_rejects_slashed():
    L = lagrangian("y1_1^2", 1, slashed=True, excluded=parse("y1_1^2 - 1"))
    with pytest.raises(InvariantViolation):
        legendre_chain(L)


def test_chain_shape_validation(flat_metric):
    H = legendre_chain(lift_lagrangian(flat_metric, 2))
    with pytest.raises(ShapeError):
        H((0.1, 0.2), (1.0,))


# ------------------------------------------------------------ admissibility


def test_admissibility_flat_lift_passes(flat_metric):
    L = lift_lagrangian(flat_metric, 2)
    report = admissibility_check(L, samples=25, seed=0,
                                 base_box=[[0.0, 1.0]])
    assert report.passed, report.to_json()
    names = {c.name for c in report.checks}
    assert names == {"projectable", "hessian_positive_definite",
                     "nonnegative", "zero_at_zero_section",
                     "basic_level_attained"}


def test_admissibility_exponential_lift_passes(exp_metric):
    L = lift_lagrangian(exp_metric, 2)
    report = admissibility_check(L, samples=25, seed=0,
                                 base_box=[[-0.5, 0.8]])
    assert report.passed, report.to_json()


def test_admissibility_negative_quadratic_fails():
    L = lagrangian("-(y2_1^2) - y1_1^2", 2)
    report = admissibility_check(L, samples=10, seed=0,
                                 base_box=[[0.0, 1.0]])
    failing = {c.name for c in report.checks if not c.passed}
    assert "hessian_positive_definite" in failing
    assert "nonnegative" in failing


def test_admissibility_leaf_dependence_fails():
    # constructed directly: from_program would reject the leaf variable
    L = LagrangianField(order=1, qdim=1, program=parse("y1_1^2 + u1^2"),
                        name="leafy")
    report = admissibility_check(L, samples=5, seed=0,
                                 base_box=[[0.0, 1.0]])
    failing = {c.name for c in report.checks if not c.passed}
    assert "projectable" in failing


def test_admissibility_slashed_skips_zero_section():
    L = lagrangian("y1_1^2", 1, slashed=True,
                    excluded=parse("y1_1^2 - 1/10000"))
    report = admissibility_check(L, samples=10, seed=0,
                                 base_box=[[0.0, 1.0]])
    zero = [c for c in report.checks if c.name == "zero_at_zero_section"]
    assert zero[0].context == "skipped (slashed)"
    assert report.passed, report.to_json()
