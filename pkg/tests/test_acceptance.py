"""Acceptance suite: one group of tests per criterion, tagged with ``criterion(n)``.

A pass/fail line per criterion is printed in the terminal summary.
"""

import math
from functools import lru_cache

import numpy as np
import pytest

from hyperfact.dilate import canonical_pi, douglas_dilation
from hyperfact.factors import (
    check_fm,
    pair_defect,
    szego_counterexample,
    szego_min_eigenvalue,
)
from hyperfact.generators import generate_fm_pair, random_hypercontraction, random_projection
from hyperfact.hyper import classify, f_r, hereditary_k_inverse
from hyperfact.matcore import adj, opnorm, random_unitary
from hyperfact.schur import canonical_pencils, transfer_function, transfer_unitaries
from hyperfact.verify import verify_factorization
from hyperfact.weights import build_weight_table, weight

SQRT_HALF = 1 / math.sqrt(2)


def min_eig(a):
    return float(np.linalg.eigvalsh((a + adj(a)) / 2)[0])


@lru_cache(maxsize=None)
def hyper_instances():
    """Random m-hypercontractions, m <= 3, dim <= 6, some with a unitary summand."""
    rng = np.random.default_rng(5)
    out = []
    for i in range(30):
        m = 1 + i % 3
        dim = 1 + i % 5
        udim = (i // 3) % 2
        out.append((random_hypercontraction(rng, dim, m, unitary_dim=udim), m))
    return tuple(out)


@lru_cache(maxsize=None)
def pure_members():
    out = []
    for seed in range(25):
        m = 1 + seed % 3
        gen = generate_fm_pair(seed, 1 + seed % 2, m)
        out.append((gen.pair, m))
    return tuple(out)


@lru_cache(maxsize=None)
def mixed_members():
    out = []
    for seed in range(100, 115):
        m = 1 + seed % 3
        gen = generate_fm_pair(seed, 1 + seed % 2, m, unitary_dim=1 + seed % 2)
        out.append((gen.pair, m))
    return tuple(out)


@lru_cache(maxsize=None)
def reports(kind):
    members = pure_members() if kind == "pure" else mixed_members()
    return tuple(verify_factorization(pair, m) for pair, m in members)


# ---------------------------------------------------------------- 1

@pytest.mark.criterion(1)
def test_weight_recurrence_exact():
    table = build_weight_table(8, 64)
    for n in range(1, 9):
        for k in range(1, 65):
            assert weight(n, k) - weight(n, k - 1) == weight(n - 1, k)
            assert table.get(n, k) - table.get(n, k - 1) == weight(n - 1, k)


# ---------------------------------------------------------------- 2

@pytest.mark.criterion(2)
def test_counterexample_end_to_end():
    r = a = SQRT_HALF
    b = 0.5
    t_r = np.array([[0, r], [0, 0]], dtype=complex)
    assert classify(t_r, 2).is_hypercontraction(2)
    assert abs(min_eig(hereditary_k_inverse(t_r, 2))) <= 1e-12
    pair, _ = szego_counterexample(r, a, b)
    assert opnorm(pair.t2) <= 1 + 1e-12
    assert opnorm(pair.t1) <= 1 + 1e-12
    expected = np.array([[0, -1 / (2 * math.sqrt(2))], [-1 / (2 * math.sqrt(2)), 0.5]])
    np.testing.assert_allclose(pair_defect(pair, 2, 2), expected, rtol=0, atol=1e-12)
    lam = min_eig(pair_defect(pair, 2, 2))
    assert lam == pytest.approx(szego_min_eigenvalue(r, a, b), abs=1e-10)
    assert lam == pytest.approx((1 - math.sqrt(3)) / 4, abs=1e-10)
    assert round(lam, 5) == -0.18301
    assert not check_fm(pair, 2).is_member


# ---------------------------------------------------------------- 3

@pytest.mark.criterion(3)
def test_pencil_identities():
    rng = np.random.default_rng(3)
    for i in range(100):
        e = 1 + i % 10
        phi, psi, _ = canonical_pencils(random_unitary(e, rng), random_projection(e, rng))
        eye = np.eye(e)
        for left, right in ((phi, psi), (psi, phi)):
            c0, c1, c2 = left.times(right)
            assert opnorm(c0) <= 1e-12
            assert opnorm(c1 - eye) <= 1e-12
            assert opnorm(c2) <= 1e-12


# ---------------------------------------------------------------- 4

@pytest.mark.criterion(4)
def test_transfer_functions_match_pencils():
    found = 0
    seed = 0
    while found < 25:
        gen = generate_fm_pair(1000 + seed, 1 + seed % 2, 2, unitary_dim=seed % 3)
        seed += 1
        if not 2 <= gen.pair.dim <= 5:
            continue
        found += 1
        rep = verify_factorization(gen.pair, 2, degree=20)
        cf = rep.pack.factorization
        u1, u2, _ = transfer_unitaries(gen.pair, 2, geometry=cf.geometry, u=cf.u, v=cf.v)
        e = cf.geometry.e_dim
        phi, psi, _ = canonical_pencils(cf.u, cf.projection)
        for colligation, pencil in ((u1, phi), (u2, psi)):
            tf = transfer_function(colligation, e)
            assert opnorm(tf.coef0 - pencil.coef0) <= 1e-10
            assert opnorm(tf.coef1 - pencil.coef1) <= 1e-10


# ---------------------------------------------------------------- 5, 6

@pytest.mark.criterion(5)
@pytest.mark.parametrize("degree", [0, 1, 7, 40])
def test_telescoping_isometry(degree):
    for t, m in hyper_instances():
        pi = canonical_pi(t, m, degree).pi
        gram = adj(pi) @ pi
        assert opnorm(gram - (np.eye(t.shape[0]) - f_r(t, m, degree + 1))) <= 1e-10


@pytest.mark.criterion(6)
def test_monotone_positivity():
    for t, m in hyper_instances():
        for r in range(0, 25):
            assert min_eig(f_r(t, m, r) - f_r(t, m, r + 1)) >= -1e-9
            for n in range(2, m + 1):
                assert min_eig(f_r(t, n, r) - f_r(t, n - 1, r)) >= -1e-9


# ---------------------------------------------------------------- 7

@pytest.mark.criterion(7)
def test_fixed_point_and_douglas_step():
    for t, m in hyper_instances():
        res = douglas_dilation(t, m).residuals
        assert res["fixed_point"] <= 1e-7
        assert res["douglas"] <= 1e-8
        assert res["isometry"] <= 1e-7
        assert res["compression"] <= 1e-7
        assert res["intertwine_bergman"] <= 1e-7


# ---------------------------------------------------------------- 8

@pytest.mark.criterion(8)
def test_pure_factor_dilation():
    for (pair, m), rep in zip(pure_members(), reports("pure")):
        assert classify(pair.product, m).is_pure
        assert rep.observations["residual_space_dim"] == 0
        for name in ("phi", "psi", "z"):
            assert rep.residuals[f"intertwine_{name}"] <= 1e-7
            assert rep.residuals[f"coinvariant_{name}"] <= 1e-7


# ---------------------------------------------------------------- 9

@pytest.mark.criterion(9)
def test_general_factor_dilation():
    for (pair, m), rep in zip(mixed_members(), reports("mixed")):
        pack = rep.pack
        assert pack.r_dim >= 1
        assert all(c.is_psd for c in pack.certificates.values())
        res = rep.residuals
        for key in ("x1_isometry", "x2_isometry", "w1_unitarity", "w2_unitarity",
                    "x_product_12", "x_product_21"):
            assert res[key] <= 1e-8, key
        for name in ("phi", "psi", "z"):
            assert res[f"intertwine_{name}"] <= 1e-7
            assert res[f"intertwine_{name}_residual_space"] <= 1e-7
            assert res[f"coinvariant_{name}"] <= 1e-7


# ---------------------------------------------------------------- 10

@pytest.mark.criterion(10)
@pytest.mark.parametrize("kind", ["pure", "mixed"])
def test_compressed_symbols(kind):
    for rep in reports(kind):
        assert rep.residuals["symbol_compression_phi_psi"] <= 1e-7
        assert rep.residuals["symbol_compression_psi_phi"] <= 1e-7


@pytest.mark.criterion(10)
def test_compressed_symbols_do_not_commute(record_property):
    pair, _ = szego_counterexample(0.5, 0.9, 0.1)
    assert check_fm(pair, 2).is_member
    rep = verify_factorization(pair, 2)
    assert rep.residuals["symbol_compression_phi_psi"] <= 1e-7
    assert rep.residuals["symbol_compression_psi_phi"] <= 1e-7
    gap = rep.observations["compressed_noncommutation"]
    record_property("noncommutation_witness", gap)
    print(f"witness: Phi~ Psi~ deviates from z I by {gap:.6g}")
    assert gap > 1e-3


# ---------------------------------------------------------------- 11

@pytest.mark.criterion(11)
def test_sufficiency_decomposition():
    member, _ = szego_counterexample(0.5, 0.9, 0.1)
    instances = list(pure_members()) + list(mixed_members()) + [(member, 2)]
    for pair, m in instances:
        k = hereditary_k_inverse(pair.product, m)
        rhs = pair_defect(pair, m, 1) + pair.t1 @ pair_defect(pair, m, 2) @ adj(pair.t1)
        assert opnorm(k - rhs) <= 1e-10
        assert classify(pair.product, m).is_hypercontraction(m)


@pytest.mark.criterion(11)
def test_converse_fails():
    pair, _ = szego_counterexample(SQRT_HALF, SQRT_HALF, 0.5)
    assert classify(pair.product, 2).is_hypercontraction(2)
    assert not check_fm(pair, 2).is_member
