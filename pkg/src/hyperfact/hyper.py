"""Hereditary functional calculus and hypercontraction classification.

For a square matrix ``T`` the hereditary polynomial

    K_n^{-1}(T, T*) = sum_{k=0}^{n} (-1)^k C(n, k) T^k T*^k

decides positivity of order ``n``; ``T`` is an m-hypercontraction when the
orders 1 and m are positive semidefinite.  The sequence

    f_r(T) = I - sum_{k<r} w[n][k] T^k K_n^{-1}(T, T*) T*^k

decreases to a positive limit ``Q^2`` which vanishes exactly for pure ``T``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NotPSDError, PreconditionError
from .matcore import (
    PSD_TOL,
    RANK_TOL,
    PsdCertificate,
    adj,
    as_cmatrix,
    hermitian_part,
    opnorm,
    psd_check,
    psd_factor,
    spectral_radius,
)
from .weights import WeightTable, binomial, weight

PURE_MARGIN = 1e-10


def _square(t, name="T") -> np.ndarray:
    t = as_cmatrix(t, name)
    if t.shape[0] != t.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {t.shape}")
    return t


def conjugation_orbit(t: np.ndarray, x: np.ndarray, count: int) -> list[np.ndarray]:
    """``[x, T x T*, T^2 x T*^2, ...]`` with ``count`` terms, computed incrementally."""
    out = [x]
    ta = adj(t)
    for _ in range(count - 1):
        out.append(t @ out[-1] @ ta)
    return out


def hereditary_k_inverse(t, n: int) -> np.ndarray:
    """``sum_k (-1)^k C(n,k) T^k T*^k``; ``n = 0`` gives the identity."""
    t = _square(t)
    if n < 0:
        raise ValueError(f"order must be non-negative, got {n}")
    d = t.shape[0]
    terms = conjugation_orbit(t, np.eye(d, dtype=complex), n + 1)
    total = np.zeros((d, d), dtype=complex)
    for k, term in enumerate(terms):
        total += (-1) ** k * binomial(n, k) * term
    return hermitian_part(total)


@dataclass
class HyperReport:
    """Positivity profile of ``T`` for orders ``1..max_order_checked``."""

    operator_dim: int
    max_order_checked: int
    orders_positive: list[int]
    is_pure: bool
    certificates: dict[int, PsdCertificate]
    norm: float
    spectral_radius: float
    is_contraction: bool
    decomposition_residuals: dict[int, float] = field(default_factory=dict)

    def is_hypercontraction(self, m: int) -> bool:
        if m > self.max_order_checked:
            raise ValueError(f"order {m} was not checked (max {self.max_order_checked})")
        return self.is_contraction and 1 in self.orders_positive and m in self.orders_positive

    def intermediate_consistent(self) -> bool:
        """Orders 1 and n positive implies every order in between is positive."""
        pos = set(self.orders_positive)
        if 1 not in pos:
            return True
        top = max(pos)
        return all(k in pos for k in range(1, top + 1))

    def to_dict(self) -> dict:
        return {
            "operator_dim": self.operator_dim,
            "max_order_checked": self.max_order_checked,
            "orders_positive": list(self.orders_positive),
            "is_pure": self.is_pure,
            "is_contraction": self.is_contraction,
            "norm": self.norm,
            "spectral_radius": self.spectral_radius,
            "min_eigenvalues": {str(n): c.min_eigenvalue for n, c in self.certificates.items()},
        }


def is_pure(t, margin: float = PURE_MARGIN, power_steps: int = 40,
            decay_tol: float = 1e-6) -> bool:
    """Finite-dimensional purity: ``T*^n -> 0`` iff the spectral radius is below 1.

    Radii within ``1e-6`` of 1 are settled by repeated squaring instead,
    testing ``||T^(2^power_steps)|| < decay_tol``.
    """
    t = _square(t)
    if t.shape[0] == 0:
        return True
    rho = spectral_radius(t)
    if rho < 1.0 - 1e-6:
        return True
    if rho > 1.0 + margin:
        return False
    p = t.copy()
    for _ in range(power_steps):
        p = p @ p
        nrm = opnorm(p)
        if nrm < decay_tol:
            return True
        if not np.isfinite(nrm):
            return False
    return False


def classify(t, m_max: int, tol: float = PSD_TOL) -> HyperReport:
    """Positivity of ``K_n^{-1}(T, T*)`` for ``n = 1..m_max`` and purity of ``T``."""
    t = _square(t)
    if m_max < 1:
        raise ValueError(f"m_max must be >= 1, got {m_max}")
    nrm = opnorm(t)
    certs = {n: psd_check(hereditary_k_inverse(t, n), tol) for n in range(1, m_max + 1)}
    return HyperReport(
        operator_dim=t.shape[0],
        max_order_checked=m_max,
        orders_positive=[n for n, c in certs.items() if c.is_psd],
        is_pure=is_pure(t),
        certificates=certs,
        norm=nrm,
        spectral_radius=spectral_radius(t),
        is_contraction=nrm <= 1.0 + tol,
    )


def defect(t, n: int, tol: float = PSD_TOL, tol_rank: float = RANK_TOL):
    """Defect operator ``D = (K_n^{-1}(T, T*))^{1/2}`` and an orthonormal basis of its range.

    Raises
    ------
    NotPSDError
        When ``K_n^{-1}(T, T*)`` is not positive semidefinite.
    """
    k = hereditary_k_inverse(t, n)
    try:
        return psd_factor(k, tol, tol_rank)
    except NotPSDError as exc:
        raise NotPSDError(f"order-{n} hereditary polynomial is not positive: {exc}",
                          exc.certificate) from exc


def f_r(t, n: int, r: int, weights: WeightTable | None = None) -> np.ndarray:
    """``I - sum_{k<r} w[n][k] T^k K_n^{-1}(T,T*) T*^k``; ``r = 0`` gives ``I``."""
    t = _square(t)
    if r < 0:
        raise ValueError(f"r must be non-negative, got {r}")
    if weights is not None and r > 0 and not weights.covers(n, r - 1):
        raise IndexError(f"weight table does not cover (n={n}, k={r - 1})")
    d = t.shape[0]
    out = np.eye(d, dtype=complex)
    if r == 0:
        return out
    k_inv = hereditary_k_inverse(t, n)
    for k, term in enumerate(conjugation_orbit(t, k_inv, r)):
        w = weights.get(n, k) if weights is not None else weight(n, k)
        out -= w * term
    return hermitian_part(out)


def f_r_factored(t, n: int, r: int) -> np.ndarray:
    """``f_r`` of order ``n`` without cancellation, for use when it is tiny.

    Unrolling the order recurrence
    ``f_r^(n) = f_r^(n-1) + w[n][r-1] T^r K_{n-1}^{-1} T*^r`` down to
    ``f_r^(1) = T^r T*^r`` gives ``T^r (I + sum_j w[j][r-1] K_{j-1}^{-1}) T*^r``.
    Summing ``I - sum_k ...`` directly loses everything below machine
    precision relative to ``I``; this form keeps full relative accuracy.
    """
    t = _square(t)
    if n < 1 or r < 0:
        raise ValueError(f"need n >= 1 and r >= 0, got n={n}, r={r}")
    d = t.shape[0]
    if r == 0:
        return np.eye(d, dtype=complex)
    inner = np.eye(d, dtype=complex)
    for j in range(2, n + 1):
        inner += weight(j, r - 1) * hereditary_k_inverse(t, j - 1)
    p = np.linalg.matrix_power(t, r)
    return hermitian_part(p @ inner @ adj(p))


@dataclass
class QLimit:
    """Limit of ``f_r`` for order ``m`` together with convergence diagnostics."""

    q_squared: np.ndarray
    q: np.ndarray
    q_basis: np.ndarray
    iterations: int
    final_step_norm: float
    converged: bool
    fixed_point_residual: float
    min_step_eigenvalue: float

    @property
    def rank(self) -> int:
        return self.q_basis.shape[1]


def q_limit(t, m: int, tol_conv: float = 1e-10, r_max: int = 10_000,
            tol: float = PSD_TOL, q_rank_tol: float = 1e-6) -> QLimit:
    """Iterate ``f_r`` of order ``m`` until successive iterates differ by less than ``tol_conv``.

    Every step ``f_r - f_{r+1} = w[m][r] T^r K_m^{-1} T*^r`` is checked to be
    positive, which certifies the monotone decrease along the way.  When
    ``r_max`` is hit first the best iterate is returned with
    ``converged=False``.
    """
    t = _square(t)
    report = classify(t, m, tol)
    if not report.is_hypercontraction(m):
        raise PreconditionError(f"operator is not a {m}-hypercontraction")
    d = t.shape[0]
    ta = adj(t)
    term = hereditary_k_inverse(t, m)
    f = np.eye(d, dtype=complex)
    step_norm = np.inf
    min_step = np.inf
    max_step = 0.0
    r = 0
    w = 1
    converged = False
    while r < r_max:
        step = w * term
        if d:
            min_step = min(min_step, float(np.linalg.eigvalsh(hermitian_part(step))[0]))
        f = f - step
        step_norm = opnorm(step)
        max_step = max(max_step, step_norm)
        r += 1
        if step_norm < tol_conv:
            converged = True
            break
        term = t @ term @ ta
        w = w * (m + r - 1) // r  # w[m][r] from w[m][r-1]
    if min_step < -tol * max(1.0, max_step):
        raise NotPSDError(f"f_r sequence is not decreasing (step eigenvalue {min_step:.3e})")
    q2 = _clamp(hermitian_part(f))
    # in finite dimension the limit is an orthogonal projection (onto the
    # unitary part of T), so a coarse rank threshold separates 0 from 1
    q, basis = psd_factor(q2, tol, q_rank_tol)
    return QLimit(
        q_squared=q2,
        q=q,
        q_basis=basis,
        iterations=r,
        final_step_norm=float(step_norm),
        converged=converged,
        fixed_point_residual=opnorm(t @ q2 @ ta - q2),
        min_step_eigenvalue=float(min_step) if d else 0.0,
    )


def _clamp(m: np.ndarray) -> np.ndarray:
    if m.shape[0] == 0:
        return m
    evals, evecs = np.linalg.eigh(m)
    return hermitian_part((evecs * np.clip(evals, 0.0, None)) @ adj(evecs))
