"""Commuting contractive pairs whose pair defects are positive.

A commuting pair of contractions ``(T1, T2)`` with product ``T = T1 T2``
belongs to the class ``F_m`` when both pair defects

    D_{m,T,Ti}^2 = K_{m-1}^{-1}(T, T*) - Ti K_{m-1}^{-1}(T, T*) Ti*

are positive semidefinite (``K_0^{-1} = I``).  Membership forces ``T`` to be
an m-hypercontraction through the decomposition

    K_m^{-1}(T, T*) = D_{m,T,T1}^2 + T1 D_{m,T,T2}^2 T1*,

but not conversely; :func:`szego_counterexample` produces the standard 2x2
witness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InconsistencyError, PreconditionError
from .hyper import HyperReport, classify, hereditary_k_inverse
from .matcore import PSD_TOL, PsdCertificate, adj, as_cmatrix, hermitian_part, opnorm, psd_check

COMMUTE_TOL = 1e-10
DECOMPOSITION_TOL = 1e-10


@dataclass(frozen=True)
class FactorPair:
    t1: np.ndarray
    t2: np.ndarray
    product: np.ndarray
    commutator_norm: float

    @property
    def dim(self) -> int:
        return self.t1.shape[0]

    def factor(self, i: int) -> np.ndarray:
        if i == 1:
            return self.t1
        if i == 2:
            return self.t2
        raise ValueError(f"factor index must be 1 or 2, got {i}")


def make_pair(t1, t2, tol: float = PSD_TOL, tol_commute: float = COMMUTE_TOL,
              check: bool = True) -> FactorPair:
    """Build a :class:`FactorPair`, rejecting non-commuting or non-contractive input.

    ``check=False`` skips the rejection (the commutator is still recorded);
    useful for negative tests.
    """
    t1 = as_cmatrix(t1, "T1")
    t2 = as_cmatrix(t2, "T2")
    if t1.shape != t2.shape or t1.shape[0] != t1.shape[1]:
        raise DimensionError(f"factors must be square of equal size; got {t1.shape}, {t2.shape}")
    comm = opnorm(t1 @ t2 - t2 @ t1)
    if check:
        n1, n2 = opnorm(t1), opnorm(t2)
        if comm > tol_commute * max(1.0, n1 * n2):
            raise PreconditionError(f"factors do not commute: ||T1 T2 - T2 T1|| = {comm:.3e}")
        for name, nrm in (("T1", n1), ("T2", n2)):
            if nrm > 1.0 + tol:
                raise PreconditionError(f"{name} is not a contraction: norm {nrm:.12f}")
    return FactorPair(t1=t1, t2=t2, product=t1 @ t2, commutator_norm=comm)


def pair_defect(pair: FactorPair, n: int, i: int) -> np.ndarray:
    """``K_{n-1}^{-1}(T,T*) - Ti K_{n-1}^{-1}(T,T*) Ti*`` for the product ``T``."""
    if n < 1:
        raise ValueError(f"order must be >= 1, got {n}")
    ti = pair.factor(i)
    k = hereditary_k_inverse(pair.product, n - 1)
    return hermitian_part(k - ti @ k @ adj(ti))


@dataclass
class FmReport:
    m: int
    pair_defects_psd: tuple[PsdCertificate, PsdCertificate]
    orders_checked: list[int]
    chain: dict[int, tuple[PsdCertificate, PsdCertificate]]
    product_hyper: HyperReport
    factor_norms: tuple[float, float]
    commutator_norm: float
    tol: float
    defect_matrices: tuple[np.ndarray, np.ndarray] = field(repr=False, default=None)

    @property
    def factors_contractive(self) -> bool:
        return all(nrm <= 1.0 + self.tol for nrm in self.factor_norms)

    @property
    def is_member(self) -> bool:
        return self.factors_contractive and all(c.is_psd for c in self.pair_defects_psd)

    def chain_positive(self, n: int) -> bool:
        return all(c.is_psd for c in self.chain[n])

    @property
    def intermediate_consistent(self) -> bool:
        """Membership at order m implies membership at every lower order."""
        if not self.is_member:
            return True
        return all(self.chain_positive(n) for n in self.orders_checked)

    def failing_certificate(self) -> tuple[int, PsdCertificate] | None:
        for i, cert in enumerate(self.pair_defects_psd, start=1):
            if not cert.is_psd:
                return i, cert
        return None


def check_fm(pair: FactorPair, m: int, tol: float = PSD_TOL) -> FmReport:
    """Decide membership of ``pair`` in ``F_m``.

    The pair defects are certified at every order ``1..m``; the report keeps
    the whole chain so that the lower-order consequence of membership is
    checked rather than assumed.  The product is classified up to order ``m``.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if pair.commutator_norm > COMMUTE_TOL * max(1.0, opnorm(pair.t1) * opnorm(pair.t2)):
        raise PreconditionError(
            f"factors do not commute: ||T1 T2 - T2 T1|| = {pair.commutator_norm:.3e}")
    chain = {}
    mats = None
    for n in range(1, m + 1):
        d1, d2 = pair_defect(pair, n, 1), pair_defect(pair, n, 2)
        chain[n] = (psd_check(d1, tol), psd_check(d2, tol))
        if n == m:
            mats = (d1, d2)
    return FmReport(
        m=m,
        pair_defects_psd=chain[m],
        orders_checked=list(range(1, m + 1)),
        chain=chain,
        product_hyper=classify(pair.product, m, tol),
        factor_norms=(opnorm(pair.t1), opnorm(pair.t2)),
        commutator_norm=pair.commutator_norm,
        tol=tol,
        defect_matrices=mats,
    )


def product_hyper_from_membership(pair: FactorPair, m: int, tol: float = PSD_TOL,
                                  residual_tol: float = DECOMPOSITION_TOL) -> HyperReport:
    """Certify that the product of an ``F_m`` pair is an m-hypercontraction.

    For each order ``n <= m`` the decomposition
    ``K_n^{-1} = D_{n,T,T1}^2 + T1 D_{n,T,T2}^2 T1*`` is evaluated and its
    residual recorded in ``decomposition_residuals``.

    Raises
    ------
    PreconditionError
        If the pair is not in ``F_m``.
    InconsistencyError
        If a decomposition residual exceeds ``residual_tol`` or the certified
        orders disagree with membership.
    """
    fm = check_fm(pair, m, tol)
    if not fm.is_member:
        failing = fm.failing_certificate()
        detail = "" if failing is None else (
            f" (pair defect {failing[0]} has min eigenvalue {failing[1].min_eigenvalue:.6g})")
        raise PreconditionError(f"pair is not in F_{m}{detail}")
    report = classify(pair.product, m, tol)
    t1 = pair.t1
    for n in range(1, m + 1):
        k = hereditary_k_inverse(pair.product, n)
        rhs = pair_defect(pair, n, 1) + t1 @ pair_defect(pair, n, 2) @ adj(t1)
        resid = opnorm(k - rhs)
        report.decomposition_residuals[n] = resid
        if resid > residual_tol * max(1.0, opnorm(k)):
            raise InconsistencyError(f"order-{n} decomposition residual {resid:.3e}")
    if not report.is_hypercontraction(m):
        raise InconsistencyError(
            f"F_{m} pair has a product that failed the order-{m} positivity test")
    return report


def szego_matrix(r: float, a: float, b: float) -> np.ndarray:
    """Closed form of ``K_1^{-1}(T_r) - S K_1^{-1}(T_r) S*`` for the 2x2 family."""
    return np.array([[(1 - r * r) * (1 - a * a) - b * b, -a * b],
                     [-a * b, 1 - a * a]], dtype=complex)


def szego_counterexample(r: float, a: float, b: float, tol: float = PSD_TOL):
    """The pair ``(T_r S^{-1}, S)`` with ``T_r = [[0, r], [0, 0]]`` and ``S = [[a, b], [0, a]]``.

    ``T_r`` is a 2-hypercontraction exactly when ``r**2 <= 1/2`` and ``S`` is
    a contraction exactly when ``b <= 1 - a**2``; both are required.

    Returns
    -------
    pair : FactorPair
    defect2 : ndarray
        The closed-form second pair defect, see :func:`szego_matrix`.
    """
    problems = []
    if not 0 < r <= 1:
        problems.append(f"0 < r <= 1 (r = {r})")
    if not a > 0:
        problems.append(f"a > 0 (a = {a})")
    if not b >= 0:
        problems.append(f"b >= 0 (b = {b})")
    if r * r > 0.5 + tol:
        problems.append(f"r^2 <= 1/2 (r^2 = {r * r:.6g})")
    if b > 1 - a * a + tol:
        problems.append(f"b <= 1 - a^2 (b = {b:.6g}, 1 - a^2 = {1 - a * a:.6g})")
    if problems:
        raise PreconditionError("counterexample parameters violate: " + "; ".join(problems))
    t_r = np.array([[0, r], [0, 0]], dtype=complex)
    s = np.array([[a, b], [0, a]], dtype=complex)
    s_inv = np.array([[1 / a, -b / (a * a)], [0, 1 / a]], dtype=complex)
    t1 = t_r @ s_inv
    # contractivity of T_r S^{-1} (norm r/a) is reported, not required
    pair = FactorPair(t1=t1, t2=s, product=t1 @ s, commutator_norm=opnorm(t1 @ s - s @ t1))
    return pair, szego_matrix(r, a, b)


def first_defect_closed_form(r: float, a: float) -> np.ndarray:
    """Closed form of the first pair defect ``D_{2,T,T1}^2`` in the 2x2 family."""
    return np.diag([1 - r * r - (r / a) ** 2, 1.0]).astype(complex)


def szego_min_eigenvalue(r: float, a: float, b: float) -> float:
    """Smaller root of the characteristic polynomial of :func:`szego_matrix`."""
    p = (1 - r * r) * (1 - a * a) - b * b
    q = 1 - a * a
    off = a * b
    return 0.5 * (p + q) - math.sqrt(0.25 * (p - q) ** 2 + off * off)
