"""Dense complex linear algebra used throughout the package.

Operators on a finite-dimensional Hilbert space are plain ``numpy`` arrays of
dtype ``complex128``.  Positivity verdicts are relative: a Hermitian ``M`` is
accepted as positive semidefinite when its smallest eigenvalue is at least
``-tol * max(1, ||M||)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import DimensionError, IllConditionedError, NotPSDError, PreconditionError

PSD_TOL = 1e-9
RANK_TOL = 1e-10
SYM_TOL = 1e-8


def as_cmatrix(a, name="matrix") -> np.ndarray:
    """Validate and convert ``a`` to a 2-D finite ``complex128`` array."""
    arr = np.asarray(a, dtype=complex)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DimensionError(f"{name} contains NaN or Inf entries")
    return arr


def adj(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def opnorm(a: np.ndarray) -> float:
    """Spectral norm; ``0.0`` for empty matrices."""
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + adj(a))


def _require_square(m: np.ndarray, name: str) -> None:
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")


def hermitian_eig(m, tol_sym: float = SYM_TOL):
    """Eigendecomposition of a Hermitian matrix, eigenvalues in descending order.

    Parameters
    ----------
    m : array_like
        Square matrix, Hermitian up to ``tol_sym * max(1, ||m||)``.
    tol_sym : float
        Allowed relative skew part.

    Returns
    -------
    eigenvalues : ndarray of float
    eigenvectors : ndarray
        Unitary matrix whose columns are the matching eigenvectors.
    """
    m = as_cmatrix(m)
    _require_square(m, "hermitian_eig input")
    scale = max(1.0, opnorm(m))
    skew = opnorm(m - adj(m))
    if skew > tol_sym * scale:
        raise PreconditionError(
            f"matrix is not Hermitian: ||M - M*|| = {skew:.3e} exceeds {tol_sym:.1e} x {scale:.3e}")
    try:
        evals, evecs = np.linalg.eigh(hermitian_part(m))
    except np.linalg.LinAlgError as exc:
        raise IllConditionedError(
            f"Hermitian eigensolver failed on a {m.shape[0]}x{m.shape[0]} matrix: {exc}") from exc
    return evals[::-1].copy(), evecs[:, ::-1].copy()


@dataclass(frozen=True)
class PsdCertificate:
    """Outcome of a positivity test, with the eigenvector attaining the minimum."""

    is_psd: bool
    min_eigenvalue: float
    tolerance_used: float
    scale: float
    witness: np.ndarray

    def to_dict(self) -> dict:
        return {
            "is_psd": self.is_psd,
            "min_eigenvalue": self.min_eigenvalue,
            "tolerance_used": self.tolerance_used,
            "scale": self.scale,
            "witness": [[float(z.real), float(z.imag)] for z in self.witness],
        }


def psd_check(m, tol: float = PSD_TOL) -> PsdCertificate:
    """Certify ``m >= 0`` up to the relative tolerance ``tol``."""
    m = as_cmatrix(m)
    _require_square(m, "psd_check input")
    scale = max(1.0, opnorm(m))
    if m.shape[0] == 0:
        return PsdCertificate(True, 0.0, tol, scale, np.zeros(0, dtype=complex))
    evals, evecs = hermitian_eig(m)
    min_eig = float(evals[-1])
    return PsdCertificate(
        is_psd=min_eig >= -tol * scale,
        min_eigenvalue=min_eig,
        tolerance_used=tol,
        scale=scale,
        witness=evecs[:, -1].copy(),
    )


def psd_sqrt(m, tol: float = PSD_TOL) -> np.ndarray:
    """Positive square root via eigendecomposition, clamping tiny negative eigenvalues."""
    m = as_cmatrix(m)
    cert = psd_check(m, tol)
    if not cert.is_psd:
        raise NotPSDError(
            f"matrix is not positive semidefinite (min eigenvalue {cert.min_eigenvalue:.3e})", cert)
    if m.shape[0] == 0:
        return m.copy()
    evals, evecs = hermitian_eig(m)
    roots = np.sqrt(np.clip(evals, 0.0, None))
    return hermitian_part((evecs * roots) @ adj(evecs))


def psd_factor(m, tol: float = PSD_TOL, tol_rank: float = RANK_TOL):
    """Square root of a PSD matrix together with an orthonormal basis of its range.

    The rank is decided on ``m`` itself (eigenvalues above
    ``tol_rank * max(1, ||m||)``) rather than on the square root: taking the
    root lifts round-off of size 1e-16 to 1e-8, which a threshold on the
    root would mistake for range.  Eigenvalues below the threshold are
    dropped from the root as well, so ``basis`` spans exactly its range.

    Returns
    -------
    root : ndarray
    basis : ndarray
        Columns are eigenvectors of ``m`` for the retained eigenvalues.
    """
    m = as_cmatrix(m)
    cert = psd_check(m, tol)
    if not cert.is_psd:
        raise NotPSDError(
            f"matrix is not positive semidefinite (min eigenvalue {cert.min_eigenvalue:.3e})", cert)
    n = m.shape[0]
    if n == 0:
        return m.copy(), np.zeros((0, 0), dtype=complex)
    evals, evecs = hermitian_eig(m)
    keep = evals > tol_rank * cert.scale
    basis = _fix_phase(evecs[:, keep])
    roots = np.sqrt(evals[keep])
    root = hermitian_part((basis * roots) @ adj(basis))
    return root, basis


def _fix_phase(cols: np.ndarray) -> np.ndarray:
    # largest-modulus entry of each column made real positive
    out = cols.copy()
    for j in range(out.shape[1]):
        i = int(np.argmax(np.abs(out[:, j])))
        z = out[i, j]
        if abs(z) > 0:
            out[:, j] *= abs(z) / z
    return out


def range_basis(m, tol_rank: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the column space of ``m``.

    The numerical rank counts singular values above ``tol_rank * sigma_max``.
    A zero (or empty) matrix yields a basis with no columns.
    """
    m = as_cmatrix(m)
    rows = m.shape[0]
    if m.size == 0:
        return np.zeros((rows, 0), dtype=complex)
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    if s[0] == 0.0:
        return np.zeros((rows, 0), dtype=complex)
    rank = int(np.sum(s > tol_rank * s[0]))
    return _fix_phase(u[:, :rank])


def complement_basis(a: np.ndarray, ambient_dim: int) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of the columns of ``a``.

    Computed by column-pivoted QR of ``I - a a*``, which makes the choice
    deterministic for a given ``a``.
    """
    k = a.shape[1]
    r = ambient_dim - k
    if r == 0:
        return np.zeros((ambient_dim, 0), dtype=complex)
    proj = np.eye(ambient_dim, dtype=complex) - a @ adj(a)
    q, _, _ = sla.qr(proj, pivoting=True)
    comp = q[:, :r]
    # one re-orthogonalization pass against a
    comp = comp - a @ (adj(a) @ comp)
    comp, _ = np.linalg.qr(comp)
    return _fix_phase(comp)


def unitary_completion(a, b, ambient_dim: int, tol: float = 1e-10) -> np.ndarray:
    """Unitary ``U`` of size ``ambient_dim`` with ``U a = b``.

    Both ``a`` and ``b`` must have orthonormal columns (so the pairing of
    columns is isometric).  The orthogonal complement of ``ran a`` is sent to
    that of ``ran b`` by pairing the deterministic complement bases of
    :func:`complement_basis` column by column.
    """
    a = as_cmatrix(a, "domain basis")
    b = as_cmatrix(b, "codomain basis")
    if a.shape != b.shape or a.shape[0] != ambient_dim:
        raise DimensionError(
            f"bases must both be {ambient_dim} x k; got {a.shape} and {b.shape}")
    k = a.shape[1]
    eye = np.eye(k)
    gram_err = max(opnorm(adj(a) @ a - eye), opnorm(adj(b) @ b - eye))
    if gram_err > tol:
        raise PreconditionError(
            f"pairing is not isometric: Gram matrices deviate from I by {gram_err:.3e}")
    ca = complement_basis(a, ambient_dim)
    cb = complement_basis(b, ambient_dim)
    u = np.hstack([b, cb]) @ adj(np.hstack([a, ca]))
    return u


def douglas_solve(a, b, tol: float = PSD_TOL, tol_rank: float = RANK_TOL,
                  residual_tol: float = 1e-8) -> np.ndarray:
    """Contraction ``C`` with ``a = b @ C`` when ``a a* <= b b*``.

    ``C`` is the minimal-norm solution ``pinv(b) @ a``; it vanishes on the
    orthogonal complement of ``ran b*``.

    Raises
    ------
    NotPSDError
        If ``b b* - a a*`` fails the positivity test.
    IllConditionedError
        If the residual or the norm of ``C`` exceeds ``residual_tol``.
    """
    a = as_cmatrix(a, "A")
    b = as_cmatrix(b, "B")
    if a.shape[0] != b.shape[0]:
        raise DimensionError(f"A and B need the same row count; got {a.shape} and {b.shape}")
    cert = psd_check(b @ adj(b) - a @ adj(a), tol)
    if not cert.is_psd:
        raise NotPSDError(
            f"range inclusion fails: min eigenvalue of BB* - AA* is {cert.min_eigenvalue:.3e}",
            cert)
    if b.size == 0:
        return np.zeros((b.shape[1], a.shape[1]), dtype=complex)
    c = np.linalg.pinv(b, rcond=tol_rank) @ a
    scale = max(1.0, opnorm(a))
    resid = opnorm(b @ c - a)
    if resid > residual_tol * scale:
        raise IllConditionedError(f"Douglas factor residual {resid:.3e} exceeds tolerance")
    norm = opnorm(c)
    if norm > 1.0 + residual_tol:
        raise IllConditionedError(f"Douglas factor has norm {norm:.12f} > 1")
    return c


def spectral_radius(t: np.ndarray) -> float:
    if t.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(t))))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary (QR of a complex Ginibre matrix, phases fixed)."""
    if dim == 0:
        return np.zeros((0, 0), dtype=complex)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
