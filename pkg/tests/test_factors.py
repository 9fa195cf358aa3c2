import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hyperfact.errors import PreconditionError
from hyperfact.factors import (
    check_fm,
    first_defect_closed_form,
    make_pair,
    pair_defect,
    product_hyper_from_membership,
    szego_counterexample,
    szego_matrix,
    szego_min_eigenvalue,
)
from hyperfact.generators import generate_fm_pair, random_commuting_pair
from hyperfact.hyper import hereditary_k_inverse
from hyperfact.matcore import adj, opnorm, psd_check, random_unitary

S2 = 1 / math.sqrt(2)


def test_make_pair_validation():
    with pytest.raises(PreconditionError, match="commute"):
        make_pair([[0, 1], [0, 0]], [[0, 0], [1, 0]])
    with pytest.raises(PreconditionError, match="contraction"):
        make_pair(1.5 * np.eye(2), np.eye(2))
    pair = make_pair(1.5 * np.eye(2), np.eye(2), check=False)
    assert pair.commutator_norm == 0
    with pytest.raises(ValueError):
        pair.factor(3)


def test_pair_defect_order_one_is_ordinary_defect(rng):
    pair = random_commuting_pair(rng, 3)
    for i in (1, 2):
        ti = pair.factor(i)
        np.testing.assert_allclose(pair_defect(pair, 1, i), np.eye(3) - ti @ adj(ti), atol=1e-14)
    with pytest.raises(ValueError):
        pair_defect(pair, 0, 1)


def test_counterexample_pair_defect_values():
    pair, closed = szego_counterexample(S2, S2, 0.5)
    expected = np.array([[0, -1 / (2 * math.sqrt(2))], [-1 / (2 * math.sqrt(2)), 0.5]])
    np.testing.assert_allclose(pair_defect(pair, 2, 2), expected, atol=1e-12)
    np.testing.assert_allclose(closed, expected, atol=1e-15)
    assert szego_min_eigenvalue(S2, S2, 0.5) == pytest.approx(0.25 - math.sqrt(0.1875), abs=1e-14)


def test_counterexample_commutes_and_is_outside_f2():
    pair, _ = szego_counterexample(S2, S2, 0.5)
    t_r = np.array([[0, S2], [0, 0]])
    np.testing.assert_allclose(t_r @ pair.t2, pair.t2 @ t_r, atol=1e-15)
    np.testing.assert_allclose(pair.product, t_r, atol=1e-15)
    rep = check_fm(pair, 2)
    assert not rep.is_member
    assert rep.product_hyper.is_hypercontraction(2)
    i, cert = rep.failing_certificate()
    assert i == 1 and cert.min_eigenvalue == pytest.approx(-0.5)
    assert rep.pair_defects_psd[1].min_eigenvalue == pytest.approx(-0.1830127, abs=1e-7)
    with pytest.raises(PreconditionError, match="not in F_2"):
        product_hyper_from_membership(pair, 2)


def test_counterexample_precondition_messages():
    with pytest.raises(PreconditionError, match=r"r\^2 <= 1/2"):
        szego_counterexample(0.72, S2, 0.5)
    with pytest.raises(PreconditionError, match="b <= 1 - a"):
        szego_counterexample(0.5, 0.9, 0.3)
    with pytest.raises(PreconditionError) as info:
        szego_counterexample(0.72, 0.9, 0.3)
    assert "r^2" in str(info.value) and "b <=" in str(info.value)


def test_b_zero_makes_second_defect_diagonal_but_first_may_fail():
    # second defect becomes diag((1-r^2)(1-a^2), 1-a^2) >= 0
    pair, closed = szego_counterexample(S2, S2, 0.0)
    np.testing.assert_allclose(closed, np.diag([0.25, 0.5]))
    rep = check_fm(pair, 2)
    assert rep.pair_defects_psd[1].is_psd
    # the first defect diag(1 - r^2 - r^2/a^2, 1) is negative at these values
    np.testing.assert_allclose(pair_defect(pair, 2, 1), first_defect_closed_form(S2, S2), atol=1e-14)
    assert not rep.is_member
    member, _ = szego_counterexample(0.5, 0.9, 0.1)
    assert check_fm(member, 2).is_member


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, S2), st.floats(0.1, 0.999), st.floats(0, 1))
def test_family_membership_matches_closed_forms(r, a, frac):
    b = frac * (1 - a * a)
    pair, closed = szego_counterexample(r, a, b)
    np.testing.assert_allclose(pair_defect(pair, 2, 2), closed, atol=1e-12)
    np.testing.assert_allclose(pair_defect(pair, 2, 1), first_defect_closed_form(r, a), atol=1e-12)
    rep = check_fm(pair, 2)
    d2_ok = szego_min_eigenvalue(r, a, b) >= -1e-9 * max(1, opnorm(closed))
    d1_ok = 1 - r * r - (r / a) ** 2 >= -1e-9
    contractive = r / a <= 1 + 1e-9
    assert rep.is_member == (d1_ok and d2_ok and contractive)


def test_commuting_unitaries_are_members():
    rng = np.random.default_rng(5)
    w = random_unitary(3, rng)
    d1, d2 = np.exp(1j * rng.random(3)), np.exp(1j * rng.random(3))
    pair = make_pair(w @ np.diag(d1) @ adj(w), w @ np.diag(d2) @ adj(w))
    for m in (1, 2, 4):
        assert check_fm(pair, m).is_member


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 6), st.integers(0, 10**6))
def test_m1_always_member(dim, seed):
    pair = random_commuting_pair(np.random.default_rng(seed), dim)
    assert check_fm(pair, 1).is_member
    rep = product_hyper_from_membership(pair, 1)
    assert rep.decomposition_residuals[1] < 1e-12


def test_non_commuting_pair_rejected():
    pair = make_pair([[0, 1], [0, 0]], [[0, 0], [1, 0]], check=False)
    with pytest.raises(PreconditionError):
        check_fm(pair, 2)


def test_truncated_model_pair_is_member():
    gen = generate_fm_pair(11, 2, 2, full_space=True, degree=6)
    assert gen.pair.dim == 14
    rep = check_fm(gen.pair, 2)
    assert rep.is_member and rep.intermediate_consistent


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4), st.integers(1, 3), st.integers(0, 2))
def test_generated_members_properties(seed, m, base_dim, udim):
    gen = generate_fm_pair(seed, base_dim, m, unitary_dim=udim)
    pair = gen.pair
    assert pair.dim <= 8 + udim
    assert pair.commutator_norm < 1e-9
    rep = check_fm(pair, m)
    assert rep.is_member and rep.intermediate_consistent
    hyp = product_hyper_from_membership(pair, m)
    assert hyp.is_hypercontraction(m)
    assert max(hyp.decomposition_residuals.values()) < 1e-10
    t = pair.product
    for n in range(1, m + 1):
        for i in (1, 2):
            lhs = pair_defect(pair, n, i) - t @ pair_defect(pair, n, i) @ adj(t)
            assert opnorm(lhs - pair_defect(pair, n + 1, i)) < 1e-10


def test_decomposition_identity_m1_expanded(rng):
    pair = random_commuting_pair(rng, 4)
    t1, t2, t = pair.t1, pair.t2, pair.product
    lhs = np.eye(4) - t @ adj(t)
    rhs = (np.eye(4) - t1 @ adj(t1)) + t1 @ (np.eye(4) - t2 @ adj(t2)) @ adj(t1)
    np.testing.assert_allclose(lhs, rhs, atol=1e-13)
    np.testing.assert_allclose(hereditary_k_inverse(t, 1), lhs, atol=1e-13)


def test_szego_matrix_formula():
    r, a, b = 0.3, 0.6, 0.2
    pair, _ = szego_counterexample(r, a, b)
    k1 = hereditary_k_inverse(pair.product, 1)
    s = pair.t2
    np.testing.assert_allclose(k1 - s @ k1 @ adj(s), szego_matrix(r, a, b), atol=1e-14)
    assert psd_check(szego_matrix(r, a, b)).is_psd == (szego_min_eigenvalue(r, a, b) >= 0)
