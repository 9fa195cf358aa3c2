"""Truncated dilations of hypercontractions and of ``F_m`` pairs.

The canonical dilation map sends ``h`` to the coefficients of
``D_{m,T} (I - z T*)^{-m} h`` in the orthonormal basis ``sqrt(w[m][k]) z^k``
of ``A^2_m(D_{m,T})``; degree block ``k`` is ``sqrt(w[m][k]) D T*^k``.  Only
degrees ``0..N`` are kept.  Adjoints of multiplication operators pull data
from degree ``k + 1`` into degree ``k``, so identities of the form
``M* Pi = Pi T*`` are checked on block rows ``0..N-1`` only.

For non-pure ``T`` the missing norm is carried by ``Q`` (the limit of the
``f_r`` sequence) on the residual space ``R = ran Q``, where ``T*`` acts
isometrically through the Douglas factor ``X*`` with ``X* Q = Q T*``.  In
finite dimension that isometry of ``ran Q`` is already unitary, so
``W = X`` restricted to ``ran Q`` and no further extension is needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ClaimError, ConvergenceError, NotPSDError, PreconditionError
from .factors import FactorPair, check_fm
from .hyper import classify, f_r_factored, q_limit
from .matcore import PSD_TOL, adj, as_cmatrix, douglas_solve, opnorm, PsdCertificate, psd_check, psd_factor
from .schur import (
    CanonicalFactorization,
    apply_model,
    canonical_factorization,
    defect_coordinates,
    shift_pencil,
)
from .weights import WeightTable, build_weight_table

Q_RANK_TOL = 1e-6


MAX_DEGREE = 2000


def default_degree(t, m: int, tail_tol: float = 1e-12, tol: float = PSD_TOL) -> int:
    """Truncation degree large enough that the omitted ``f_r`` steps are negligible.

    At least ``max(4 dim, 40)``; raised to the number of ``f_r`` steps needed
    before a single step drops below ``tail_tol``, capped at ``MAX_DEGREE``.
    """
    t = as_cmatrix(t, "T")
    base = max(4 * t.shape[0], 40)
    ql = q_limit(t, m, tol_conv=tail_tol, r_max=MAX_DEGREE, tol=tol)
    return max(base, min(ql.iterations, MAX_DEGREE))


def stack_blocks(d: np.ndarray, t: np.ndarray, m: int, degree: int,
                 weights: WeightTable) -> np.ndarray:
    """Rows ``sqrt(w[m][k]) d T*^k`` for ``k = 0..degree`` stacked vertically."""
    blocks = []
    cur = d
    ta = adj(t)
    for k in range(degree + 1):
        blocks.append(np.sqrt(weights.get(m, k)) * cur)
        cur = cur @ ta
    return np.vstack(blocks) if blocks else d[:0]


def tensor_embed(v: np.ndarray, stacked: np.ndarray, degree: int) -> np.ndarray:
    """Apply ``I (x) V`` blockwise to a stacked map."""
    d = v.shape[1]
    return np.vstack([v @ stacked[k * d:(k + 1) * d] for k in range(degree + 1)])


def top_rows(x: np.ndarray, degree: int, block_dim: int) -> np.ndarray:
    """Block rows ``0..degree-1`` of a stacked matrix."""
    return x[:degree * block_dim]


def isometry_defect(t, m: int, degree: int) -> float:
    """``||I - Pi_N* Pi_N||`` through the identity ``I - Pi_N* Pi_N = f_{N+1}``.

    Forming ``Pi* Pi - I`` directly cannot resolve defects below about
    ``1e-16``; the factored ``f_{N+1}`` keeps full relative accuracy.
    """
    return opnorm(f_r_factored(t, m, degree + 1))


@dataclass
class TruncatedDilation:
    pi: np.ndarray
    degree: int
    order: int
    defect_dim: int
    isometry_defect: float
    d: np.ndarray = field(repr=False)
    d_basis: np.ndarray = field(repr=False)

    def block(self, k: int) -> np.ndarray:
        return self.pi[k * self.defect_dim:(k + 1) * self.defect_dim]


def canonical_pi(t, m: int, degree: int, weights: WeightTable | None = None,
                 tol: float = PSD_TOL) -> TruncatedDilation:
    """Canonical dilation map of an m-hypercontraction truncated to degrees ``0..degree``."""
    t = as_cmatrix(t, "T")
    if degree < 0:
        raise ValueError(f"degree must be >= 0, got {degree}")
    if weights is None:
        weights = build_weight_table(m, degree + 1)
    if not weights.covers(m, degree):
        raise IndexError(f"weight table does not cover (m={m}, k={degree})")
    report = classify(t, m, tol)
    if not report.is_hypercontraction(m):
        raise PreconditionError(f"operator is not a {m}-hypercontraction")
    d, basis, _ = defect_coordinates(t, m, tol)
    pi = stack_blocks(d, t, m, degree, weights)
    return TruncatedDilation(pi, degree, m, d.shape[0], isometry_defect(t, m, degree), d, basis)


def intertwine_residual(dil: TruncatedDilation, t) -> float:
    """``||M_z* Pi - Pi T*||`` on block rows ``0..N-1``."""
    t = as_cmatrix(t, "T")
    if dil.degree == 0 or dil.defect_dim == 0:
        return 0.0
    shift = shift_pencil(dil.defect_dim)
    lhs = apply_model(shift, dil.order, dil.degree, dil.pi, adjoint=True) - dil.pi @ adj(t)
    return opnorm(top_rows(lhs, dil.degree, dil.defect_dim))


def q_coordinates(q: np.ndarray, tol: float = PSD_TOL) -> np.ndarray:
    """Orthonormal basis of ``ran Q`` used as coordinates on the residual space."""
    _, basis = psd_factor(q, tol, Q_RANK_TOL)
    return basis


@dataclass
class DilationPack:
    """Combined dilation ``h -> (Pi_V h, Q h)`` and the unitaries on ``R = ran Q``.

    ``w``, ``w1`` and ``w2`` are written in the coordinates ``q_basis`` of
    ``ran Q``; ``r_part`` is ``q_basis* Q``.
    """

    bergman: np.ndarray
    r_part: np.ndarray
    q: np.ndarray
    q_basis: np.ndarray
    w: np.ndarray
    degree: int
    order: int
    block_dim: int
    residuals: dict[str, float]
    canonical: TruncatedDilation
    certificates: dict[str, PsdCertificate] = field(default_factory=dict)
    w1: np.ndarray | None = None
    w2: np.ndarray | None = None
    factorization: CanonicalFactorization | None = None

    @property
    def pi(self) -> np.ndarray:
        return np.vstack([self.bergman, self.r_part])

    @property
    def r_dim(self) -> int:
        return self.q_basis.shape[1]


def _residual_coordinates(t, ql, tol):
    q = ql.q
    basis = q_coordinates(q, tol)
    return q, basis, adj(basis) @ q


def _douglas_adjoint(ti, q, tol, claim):
    """``X*`` with ``X* Q = Q Ti*``, from the Douglas factor of ``Ti Q = Q X``."""
    try:
        x = douglas_solve(ti @ q, q, tol)
    except NotPSDError as exc:
        raise ClaimError(claim, str(exc), exc.certificate) from exc
    return adj(x)


def dilation_residuals(t, m: int, bergman: np.ndarray, q: np.ndarray, w: np.ndarray,
                       degree: int, tol: float = PSD_TOL) -> dict[str, float]:
    """Residuals of a dilation of ``T`` given as raw matrices.

    ``bergman`` is the stacked map into ``A^2_m`` (block size inferred from
    ``degree``), ``q`` the positive operator on ``H`` and ``w`` the unitary on
    ``ran Q`` in :func:`q_coordinates`.
    """
    t = as_cmatrix(t, "T")
    n = t.shape[0]
    block = bergman.shape[0] // (degree + 1)
    basis = q_coordinates(q, tol)
    r = adj(basis) @ q
    shift = shift_pencil(block)
    ta = adj(t)
    inter = opnorm(top_rows(apply_model(shift, m, degree, bergman, adjoint=True) - bergman @ ta,
                            degree, block))
    inter_r = opnorm(adj(w) @ r - r @ ta) if r.size else 0.0
    pi = np.vstack([bergman, r])
    compress = adj(bergman) @ apply_model(shift, m, degree, bergman) + adj(r) @ w @ r
    return {
        "isometry": opnorm(adj(pi) @ pi - np.eye(n)),
        "intertwine_bergman": inter,
        "intertwine_residual_space": inter_r,
        "compression": opnorm(compress - t),
        "w_unitarity": opnorm(adj(w) @ w - np.eye(w.shape[0])) if w.size else 0.0,
    }


def douglas_dilation(t, m: int, degree: int | None = None, tol: float = PSD_TOL,
                     tol_conv: float = 1e-10, r_max: int = 10_000) -> DilationPack:
    """Isometric dilation of an m-hypercontraction to ``M_z (+) W``.

    Raises
    ------
    ConvergenceError
        If the ``f_r`` iteration does not settle within ``r_max`` steps.
    """
    t = as_cmatrix(t, "T")
    n = t.shape[0]
    if degree is None:
        degree = default_degree(t, m, tol=tol)
    dil = canonical_pi(t, m, degree, tol=tol)
    ql = q_limit(t, m, tol_conv=tol_conv, r_max=r_max, tol=tol)
    if not ql.converged:
        raise ConvergenceError(
            f"f_r iteration stopped after {ql.iterations} steps (last step {ql.final_step_norm:.3e})")
    q, basis, r = _residual_coordinates(t, ql, tol)
    x_star = _douglas_adjoint(t, q, tol, "fixed point of Q^2")
    w = adj(adj(basis) @ x_star @ basis)
    res = dilation_residuals(t, m, dil.pi, q, w, degree, tol)
    res["fixed_point"] = ql.fixed_point_residual
    res["douglas"] = opnorm(x_star @ q - q @ adj(t))
    return DilationPack(dil.pi, r, q, basis, w, degree, m, dil.defect_dim, res, dil)


def general_factor_dilation(pair: FactorPair, m: int, degree: int | None = None,
                            tol: float = PSD_TOL, ancilla_dim: int = 0,
                            tol_conv: float = 1e-10) -> DilationPack:
    """Joint dilation of ``(T1, T2, T1 T2)`` to ``(M_Phi + W1, M_Psi + W2, M_z + W)``.

    The residual dictionary names every checked claim: positivity of
    ``Q^2 - Ti Q^2 Ti*`` (as minimum eigenvalues), isometry of ``Xi*`` on
    ``ran Q``, ``X* = X1* X2* = X2* X1*``, the three intertwinings on block
    rows ``0..N-1`` and on ``R``, and isometry of the combined map.

    Raises
    ------
    PreconditionError
        If the pair is not in ``F_m``.
    ClaimError
        If a positivity claim needed for the Douglas step fails.
    """
    fm = check_fm(pair, m, tol)
    if not fm.is_member:
        raise PreconditionError(f"pair is not in F_{m}")
    t, t1, t2 = pair.product, pair.t1, pair.t2
    n = pair.dim
    if degree is None:
        degree = default_degree(t, m, tol=tol)
    weights = build_weight_table(m, degree + 1)
    cf = canonical_factorization(pair, m, ancilla_dim, tol)
    d = cf.geometry.d
    pi = stack_blocks(d, t, m, degree, weights)
    canonical = TruncatedDilation(pi, degree, m, d.shape[0], isometry_defect(t, m, degree),
                                  d, cf.geometry.d_basis)
    pi_v = tensor_embed(cf.v, pi, degree) if d.shape[0] else np.zeros((0, n), dtype=complex)
    e = cf.geometry.e_dim
    if pi_v.shape[0] != (degree + 1) * e:
        pi_v = np.zeros(((degree + 1) * e, n), dtype=complex)

    ql = q_limit(t, m, tol_conv=tol_conv, tol=tol)
    if not ql.converged:
        raise ConvergenceError(f"f_r iteration stopped after {ql.iterations} steps")
    q, basis, r = _residual_coordinates(t, ql, tol)
    q2 = q @ q
    res: dict[str, float] = {"fixed_point": ql.fixed_point_residual}
    certs: dict[str, PsdCertificate] = {}
    for i, ti in ((1, t1), (2, t2)):
        cert = psd_check(q2 - ti @ q2 @ adj(ti), tol)
        certs[f"q_square_dominates_t{i}"] = cert
        if not cert.is_psd:
            raise ClaimError(f"Q^2 >= T{i} Q^2 T{i}*", "positivity fails", cert)
    x1s = _douglas_adjoint(t1, q, tol, "Q^2 >= T1 Q^2 T1*")
    x2s = _douglas_adjoint(t2, q, tol, "Q^2 >= T2 Q^2 T2*")
    xs = _douglas_adjoint(t, q, tol, "Q^2 = T Q^2 T*")
    k = basis.shape[1]
    eye_k = np.eye(k)
    for i, xi in ((1, x1s), (2, x2s)):
        res[f"x{i}_isometry"] = opnorm(adj(basis) @ adj(xi) @ xi @ basis - eye_k) if k else 0.0
        res[f"x{i}_douglas"] = opnorm(xi @ q - q @ adj(pair.factor(i)))
    res["x_product_12"] = opnorm(xs - x1s @ x2s)
    res["x_product_21"] = opnorm(xs - x2s @ x1s)
    w1 = adj(adj(basis) @ x1s @ basis)
    w2 = adj(adj(basis) @ x2s @ basis)
    w = adj(adj(basis) @ xs @ basis)
    res["w_product"] = opnorm(w - w1 @ w2) if k else 0.0
    res["w_commute"] = opnorm(w1 @ w2 - w2 @ w1) if k else 0.0
    for name, wi in (("w", w), ("w1", w1), ("w2", w2)):
        res[f"{name}_unitarity"] = opnorm(adj(wi) @ wi - eye_k) if k else 0.0

    for name, pen, ti, wi in (("phi", cf.phi, t1, w1), ("psi", cf.psi, t2, w2),
                              ("z", shift_pencil(e), t, w)):
        lhs = apply_model(pen, m, degree, pi_v, weights, adjoint=True) - pi_v @ adj(ti)
        res[f"intertwine_{name}"] = opnorm(top_rows(lhs, degree, e)) if e else 0.0
        res[f"intertwine_{name}_residual_space"] = opnorm(adj(wi) @ r - r @ adj(ti)) if k else 0.0
    full = np.vstack([pi_v, r])
    res["isometry"] = opnorm(adj(full) @ full - np.eye(n))
    return DilationPack(pi_v, r, q, basis, w, degree, m, e, res, canonical, certs,
                        w1=w1, w2=w2, factorization=cf)
