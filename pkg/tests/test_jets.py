import numpy as np
import pytest

from folijet.atlas import load_atlas
from folijet.errors import OrderError, OutsideOverlap, ShapeError
from folijet.jets import (
    TransverseFiberVector,
    TransverseJetPoint,
    apply_J,
    apply_J_dual,
    include_jet,
    j_matrix,
    prolong_jacobian,
    prolong_transition,
    zero_section,
)
from oracles import central_difference_vector, sympy_prolong


def make_atlas(q, exprs, lo=0.2, hi=1.8):
    return load_atlas({
        "leaf_dim": 0,
        "transverse_dim": q,
        "charts": [
            {"name": "A", "domain": [[lo, hi]] * q},
            {"name": "B", "domain": [[-100.0, 100.0]] * q},
        ],
        "transitions": [{
            "name": "A->B", "from": "A", "to": "B",
            "leaf_exprs": [], "transverse_exprs": exprs,
            "overlap": [[lo, hi]] * q,
        }],
    })


TRANSITIONS = {
    1: ["x1^3"],
    2: ["x1 + x2^2", "x2 * exp(x1/4)"],
    3: ["x1*x2", "x2 + sin(x3)", "x3^2 + x1"],
}


def test_cubic_hand_values():
    atlas = make_atlas(1, ["x1^3"], 0.5, 2.0)
    t = atlas.transitions["A->B"]
    point = TransverseJetPoint("A", 3, (), (1.0,), ((1.0,), (0.0,), (0.0,)))
    image = prolong_transition(atlas, t, point)
    assert image.base == (1.0,)
    assert image.jets == ((3.0,), (3.0,), (1.0,))


@pytest.mark.parametrize("q", [1, 2, 3])
@pytest.mark.parametrize("r", [1, 2, 3])
def test_prolongation_matches_sympy_oracle(q, r):
    atlas = make_atlas(q, TRANSITIONS[q])
    t = atlas.transitions["A->B"]
    rng = np.random.default_rng(100 * q + r)
    for _ in range(10):
        base = rng.uniform(0.3, 1.5, q)
        jets = tuple(tuple(rng.uniform(-1, 1, q)) for _ in range(r))
        point = TransverseJetPoint("A", r, (), tuple(base), jets)
        image = prolong_transition(atlas, t, point)
        want_base, want_jets = sympy_prolong(TRANSITIONS[q], base, jets)
        assert np.allclose(image.base, want_base, atol=1e-10)
        assert np.allclose(image.jets, want_jets, atol=1e-10)


def test_prolong_requires_overlap_and_chart():
    atlas = make_atlas(1, ["x1^3"], 0.5, 2.0)
    t = atlas.transitions["A->B"]
    outside = TransverseJetPoint("A", 1, (), (3.0,), ((1.0,),))
    with pytest.raises(OutsideOverlap):
        prolong_transition(atlas, t, outside)


def test_zero_section_prolongs_to_zero_section():
    atlas = make_atlas(2, TRANSITIONS[2])
    t = atlas.transitions["A->B"]
    image = prolong_transition(atlas, t, zero_section(3, (), (0.6, 0.9), "A"))
    assert all(v == 0.0 for row in image.jets for v in row)


@pytest.mark.parametrize("q,r", [(1, 3), (2, 2)])
def test_prolong_jacobian_matches_finite_differences(q, r):
    atlas = make_atlas(q, TRANSITIONS[q])
    t = atlas.transitions["A->B"]
    rng = np.random.default_rng(5)
    base = rng.uniform(0.4, 1.4, q)
    jets = tuple(tuple(rng.uniform(-1, 1, q)) for _ in range(r))
    point = TransverseJetPoint("A", r, (), tuple(base), jets)
    got = prolong_jacobian(atlas, t, point)

    def transport(flat):
        p = TransverseJetPoint("A", r, (), tuple(flat[:q]),
                               tuple(tuple(flat[(k + 1) * q:(k + 2) * q])
                                     for k in range(r)))
        image = prolong_transition(atlas, t, p)
        return np.concatenate([image.base] + [np.asarray(row)
                                              for row in image.jets])

    flat = np.concatenate([base] + [np.asarray(row) for row in jets])
    want = central_difference_vector(transport, flat)
    assert np.allclose(got, want, atol=1e-6)


def test_prolong_jacobian_shift_structure():
    atlas = make_atlas(1, ["x1^3"], 0.5, 2.0)
    t = atlas.transitions["A->B"]
    point = TransverseJetPoint("A", 3, (), (1.1,), ((0.7,), (-0.2,), (0.4,)))
    jac = prolong_jacobian(atlas, t, point)
    # strictly upper blocks vanish; shifted blocks repeat; diagonal = dx'/dx
    for g in range(4):
        for b in range(g + 1, 4):
            assert jac[g, b] == 0.0
    for g in range(1, 4):
        for b in range(1, g + 1):
            assert jac[g, b] == pytest.approx(jac[g - 1, b - 1], abs=1e-10)
        assert jac[g, g] == pytest.approx(3 * 1.1**2, abs=1e-10)


def test_include_jet_factors_and_identity():
    point = TransverseJetPoint("A", 2, (), (0.5,), ((2.0,), (3.0,)))
    assert include_jet(2, 2, point) is point
    up = include_jet(2, 4, point)
    # d = 2: row d+j carries (d+j)!/j! * y^(j)
    assert up.jets == ((0.0,), (0.0,), (6 * 2.0,), (12 * 3.0,))
    with pytest.raises(OrderError):
        include_jet(3, 2, point)
    with pytest.raises(OrderError):
        include_jet(1, 2, point)  # order mismatch with the point


def test_inclusion_composition_exact():
    point = TransverseJetPoint("A", 1, (), (0.5,), ((1.5,),))
    via = include_jet(2, 4, include_jet(1, 2, point))
    direct = include_jet(1, 4, point)
    assert via.jets == direct.jets


def test_inclusion_commutes_with_prolongation():
    # The coordinate form of the inclusion is transition-independent exactly
    # when the source order is 1 (the only nonzero jet row sits at the top,
    # so transport acts on it purely linearly).  Higher source orders only
    # give an inclusion of submanifolds, checked separately below.
    atlas = make_atlas(1, ["x1^3"], 0.5, 2.0)
    t = atlas.transitions["A->B"]
    rng = np.random.default_rng(11)
    for r_low, r_high in ((1, 2), (1, 3), (1, 4), (3, 3)):
        base = rng.uniform(0.6, 1.8, 1)
        jets = tuple(tuple(rng.uniform(-1, 1, 1)) for _ in range(r_low))
        point = TransverseJetPoint("A", r_low, (), tuple(base), jets)
        a = prolong_transition(atlas, t, include_jet(r_low, r_high, point))
        b = include_jet(r_low, r_high, prolong_transition(atlas, t, point))
        assert np.allclose(a.jets, b.jets, atol=1e-9)
        assert np.allclose(a.base, b.base, atol=1e-12)


def test_inclusion_image_invariant_under_prolongation():
    # For source order >= 2 the included image is preserved as a set: jet
    # transport never repopulates the leading zero rows, because the lowest
    # nonzero Taylor degree of the included curve exceeds them.
    atlas = make_atlas(2, TRANSITIONS[2])
    t = atlas.transitions["A->B"]
    rng = np.random.default_rng(17)
    for r_low, r_high in ((2, 4), (2, 5), (3, 5)):
        base = rng.uniform(0.4, 1.4, 2)
        jets = tuple(tuple(rng.uniform(-1, 1, 2)) for _ in range(r_low))
        point = TransverseJetPoint("A", r_low, (), tuple(base), jets)
        image = prolong_transition(atlas, t, include_jet(r_low, r_high, point))
        for k in range(r_high - r_low):
            assert image.jets[k] == (0.0, 0.0)


def test_j_shift_and_dual():
    point = TransverseJetPoint("A", 2, (), (1.0, 2.0),
                               ((3.0, 4.0), (5.0, 6.0)))
    vec = TransverseFiberVector(point, (1.0, 2.0, 3.0, 4.0, 5.0, 6.0))
    assert apply_J(vec).components == (0.0, 0.0, 1.0, 2.0, 3.0, 4.0)
    assert apply_J(vec, 2).components == (0.0, 0.0, 0.0, 0.0, 1.0, 2.0)
    assert apply_J(apply_J(vec, 2)).components == (0.0,) * 6  # J^(r+1) = 0
    assert apply_J_dual(vec).components == (3.0, 4.0, 5.0, 6.0, 0.0, 0.0)
    J = j_matrix(2, 2)
    assert np.allclose(J @ np.array(vec.components),
                       apply_J(vec).components)
    assert np.allclose(J.T @ np.array(vec.components),
                       apply_J_dual(vec).components)


def test_shape_validation():
    with pytest.raises(ShapeError):
        TransverseJetPoint("A", 2, (), (1.0,), ((1.0,),))
    with pytest.raises(OrderError):
        zero_section(0, (), (1.0,))
    point = zero_section(1, (), (1.0, 2.0))
    with pytest.raises(ShapeError):
        TransverseFiberVector(point, (1.0, 2.0, 3.0))
