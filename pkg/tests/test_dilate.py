import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hyperfact.dilate import (
    canonical_pi,
    default_degree,
    dilation_residuals,
    douglas_dilation,
    general_factor_dilation,
    intertwine_residual,
)
from hyperfact.errors import PreconditionError
from hyperfact.factors import make_pair, szego_counterexample
from hyperfact.generators import generate_fm_pair, random_hypercontraction
from hyperfact.hyper import f_r
from hyperfact.matcore import adj, opnorm, random_unitary
from hyperfact.weights import build_weight_table


def t_r(r):
    return np.array([[0, r], [0, 0]], dtype=complex)


def test_zero_operator():
    dil = canonical_pi(np.zeros((3, 3)), 2, 5)
    # block 0 is D = I written in an orthonormal basis of its range
    b0 = dil.block(0)
    np.testing.assert_allclose(adj(b0) @ b0, np.eye(3), atol=1e-15)
    np.testing.assert_allclose(dil.pi[3:], 0)
    assert dil.isometry_defect < 1e-15
    assert intertwine_residual(dil, np.zeros((3, 3))) == 0


def test_nilpotent_exact_isometry():
    t = t_r(0.7)
    for n in (1, 2, 6):
        dil = canonical_pi(t, 2, n)
        assert dil.isometry_defect < 1e-14
        if n > 1:
            np.testing.assert_allclose(dil.pi[2 * dil.defect_dim:], 0, atol=1e-16)
    dil = canonical_pi(t, 2, 6)
    # nilpotent tail is exactly zero, so row N is exact as well
    from hyperfact.schur import apply_model, shift_pencil
    full = apply_model(shift_pencil(dil.defect_dim), 2, 6, dil.pi, adjoint=True) - dil.pi @ adj(t)
    assert opnorm(full) < 1e-12


def test_geometric_isometry_defect():
    dil = canonical_pi(np.diag([0.9]), 1, 200)
    assert dil.isometry_defect == pytest.approx(0.9 ** 402, rel=1e-6)
    assert dil.isometry_defect < 1e-18
    assert opnorm(adj(dil.pi) @ dil.pi - np.eye(1)) < 1e-15


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.integers(1, 4), st.integers(0, 30), st.integers(0, 10**6))
def test_isometry_defect_agrees_with_direct_gram(m, dim, n, seed):
    t = random_hypercontraction(np.random.default_rng(seed), dim, m, unitary_dim=seed % 2)
    dil = canonical_pi(t, m, n)
    direct = opnorm(adj(dil.pi) @ dil.pi - np.eye(t.shape[0]))
    assert abs(dil.isometry_defect - direct) < 1e-10


def test_errors():
    with pytest.raises(PreconditionError):
        canonical_pi(t_r(0.72), 2, 4)
    with pytest.raises(IndexError):
        canonical_pi(t_r(0.5), 2, 10, build_weight_table(2, 5))
    with pytest.raises(ValueError):
        canonical_pi(t_r(0.5), 2, -1)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.integers(1, 6), st.integers(1, 40), st.integers(0, 10**6),
       st.integers(0, 2))
def test_telescoping_identity_and_intertwining(m, dim, n, seed, udim):
    t = random_hypercontraction(np.random.default_rng(seed), dim, m, unitary_dim=udim)
    dil = canonical_pi(t, m, n)
    gram = adj(dil.pi) @ dil.pi
    assert opnorm(gram - (np.eye(t.shape[0]) - f_r(t, m, n + 1))) < 1e-10
    assert intertwine_residual(dil, t) < 1e-10


def test_norm_gap_decreases_to_q_squared():
    rng = np.random.default_rng(12)
    t = random_hypercontraction(rng, 3, 2, unitary_dim=1)
    h = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    pack = douglas_dilation(t, 2)
    target = np.vdot(h, pack.q @ pack.q @ h).real
    gaps = []
    for n in (10, 20, 40):
        pi = canonical_pi(t, 2, n).pi
        gaps.append(np.vdot(h, h).real - np.linalg.norm(pi @ h) ** 2)
    assert gaps[0] >= gaps[1] >= gaps[2] >= target - 1e-12
    big = canonical_pi(t, 2, pack.degree).pi
    assert abs(np.vdot(h, h).real - np.linalg.norm(big @ h) ** 2 - target) < 1e-6


def test_douglas_dilation_pure():
    t = random_hypercontraction(np.random.default_rng(1), 3, 2)
    pack = douglas_dilation(t, 2)
    assert pack.r_dim == 0
    np.testing.assert_allclose(pack.bergman, canonical_pi(t, 2, pack.degree).pi)
    assert pack.residuals["isometry"] < 1e-7


def test_douglas_dilation_unitary():
    w = random_unitary(3, np.random.default_rng(2))
    pack = douglas_dilation(w, 2)
    assert pack.block_dim == 0 and pack.r_dim == 3
    np.testing.assert_allclose(pack.q, np.eye(3), atol=1e-12)
    basis = pack.q_basis
    np.testing.assert_allclose(basis @ pack.w @ adj(basis), w, atol=1e-12)


def test_douglas_dilation_diagonal():
    pack = douglas_dilation(np.diag([1.0, 0.5]), 1, 60)
    np.testing.assert_allclose(pack.q, np.diag([1, 0]), atol=1e-10)
    np.testing.assert_allclose(pack.w, [[1]], atol=1e-12)
    assert pack.residuals["isometry"] < 1e-8
    for key in ("intertwine_bergman", "intertwine_residual_space", "compression", "douglas"):
        assert pack.residuals[key] < 1e-10


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.integers(1, 5), st.integers(0, 10**6), st.integers(0, 2))
def test_douglas_dilation_residuals(m, dim, seed, udim):
    t = random_hypercontraction(np.random.default_rng(seed), dim, m, unitary_dim=udim)
    pack = douglas_dilation(t, m)
    r = pack.residuals
    assert r["fixed_point"] <= 1e-7
    assert r["douglas"] <= 1e-8
    assert r["isometry"] <= 1e-7
    assert r["compression"] <= 1e-7
    assert r["intertwine_bergman"] <= 1e-8
    assert r["intertwine_residual_space"] <= 1e-8
    assert r["w_unitarity"] <= 1e-8


def test_dilation_residuals_round_trip():
    t = random_hypercontraction(np.random.default_rng(5), 3, 2, unitary_dim=1)
    pack = douglas_dilation(t, 2)
    again = dilation_residuals(t, 2, pack.bergman, pack.q, pack.w, pack.degree)
    for key, val in again.items():
        assert val == pack.residuals[key]


def test_default_degree_floor_and_growth():
    assert default_degree(np.zeros((2, 2)), 2) == 40
    assert default_degree(np.zeros((15, 15)), 1) == 60
    assert default_degree(np.diag([0.97]), 2) > 40


def test_general_dilation_commuting_unitaries():
    rng = np.random.default_rng(6)
    w = random_unitary(3, rng)
    d1, d2 = np.exp(1j * rng.random(3)), np.exp(1j * rng.random(3))
    t1, t2 = w @ np.diag(d1) @ adj(w), w @ np.diag(d2) @ adj(w)
    pack = general_factor_dilation(make_pair(t1, t2), 2)
    assert pack.bergman.shape[0] == 0 and pack.r_dim == 3
    b = pack.q_basis
    np.testing.assert_allclose(b @ pack.w1 @ adj(b), t1, atol=1e-10)
    np.testing.assert_allclose(b @ pack.w2 @ adj(b), t2, atol=1e-10)
    assert max(pack.residuals.values()) < 1e-10


def test_general_dilation_pure_product_has_trivial_residual_space():
    pair, _ = szego_counterexample(0.5, 0.9, 0.1)
    pack = general_factor_dilation(pair, 2)
    assert pack.r_dim == 0
    assert max(pack.residuals.values()) < 1e-10


def test_general_dilation_rejects_non_members():
    pair, _ = szego_counterexample(2 ** -0.5, 2 ** -0.5, 0.5)
    with pytest.raises(PreconditionError):
        general_factor_dilation(pair, 2)


@settings(max_examples=12, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 3), st.integers(1, 2))
def test_general_dilation_with_unitary_summand(seed, m, udim):
    gen = generate_fm_pair(seed, 2, m, unitary_dim=udim)
    pack = general_factor_dilation(gen.pair, m, 40)
    assert pack.r_dim == udim
    assert all(c.is_psd for c in pack.certificates.values())
    assert max(pack.residuals.values()) < 1e-7
    for key in ("x1_isometry", "x2_isometry", "x_product_12", "x_product_21"):
        assert pack.residuals[key] < 1e-8
    assert pack.residuals["w_product"] < 1e-10 and pack.residuals["w_commute"] < 1e-10
