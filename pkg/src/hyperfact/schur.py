"""Canonical Schur pencils and the unitaries that realize them.

A triple ``(E, U, P)`` -- a unitary ``U`` and an orthogonal projection ``P``
on ``E`` -- gives the linear pencils

    Phi(z) = (P + z P_perp) U*,     Psi(z) = U (P_perp + z P),

with ``Phi(z) Psi(z) = Psi(z) Phi(z) = z I``.  For an ``F_m`` pair the
coefficient space is ``E = ancilla + D_{m,T,T1} + D_{m,T,T2}`` (in that
order, each defect space in range-basis coordinates) and ``P`` projects
onto the last block.

Multiplication operators act on the truncated weighted Bergman space
``A^2_m(E)`` in the orthonormal basis ``sqrt(w[m][k]) z^k``, degrees
``0..N``: block ``(k, k)`` carries the constant coefficient and block
``(k+1, k)`` carries ``sqrt(w[m][k] / w[m][k+1])`` times the linear one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InconsistencyError, PreconditionError
from .factors import FactorPair, check_fm, pair_defect
from .hyper import hereditary_k_inverse
from .matcore import (
    PSD_TOL,
    RANK_TOL,
    adj,
    as_cmatrix,
    opnorm,
    psd_factor,
    unitary_completion,
)
from .weights import WeightTable, build_weight_table

IDENTITY_TOL = 1e-10


@dataclass(frozen=True)
class Pencil:
    """Operator-valued linear polynomial ``coef0 + z coef1``."""

    coef0: np.ndarray
    coef1: np.ndarray

    @property
    def dim(self) -> int:
        return self.coef0.shape[0]

    def __call__(self, z: complex) -> np.ndarray:
        return self.coef0 + z * self.coef1

    def times(self, other: "Pencil") -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Coefficients of the quadratic ``self(z) @ other(z)``."""
        return (self.coef0 @ other.coef0,
                self.coef0 @ other.coef1 + self.coef1 @ other.coef0,
                self.coef1 @ other.coef1)

    def distance_from_z(self, other: "Pencil") -> float:
        """Largest coefficient deviation of ``self * other`` from ``z I``."""
        c0, c1, c2 = self.times(other)
        eye = np.eye(self.dim)
        return max(opnorm(c0), opnorm(c1 - eye), opnorm(c2))


@dataclass(frozen=True)
class SchurPencil(Pencil):
    unitary: np.ndarray = None
    projection: np.ndarray = None
    role: str = "phi"


def shift_pencil(dim: int) -> Pencil:
    """The symbol ``z I`` on a ``dim``-dimensional coefficient space."""
    return Pencil(np.zeros((dim, dim), dtype=complex), np.eye(dim, dtype=complex))


def canonical_pencils(unitary, projection, tol: float = IDENTITY_TOL):
    """The canonical Schur pair of a triple ``(E, U, P)``.

    Returns
    -------
    phi, psi : SchurPencil
    residual : float
        Worst deviation of the six coefficient identities behind
        ``Phi Psi = Psi Phi = z I``.
    """
    u = as_cmatrix(unitary, "U")
    p = as_cmatrix(projection, "P")
    e = u.shape[0]
    if u.shape != (e, e) or p.shape != (e, e):
        raise DimensionError(f"U and P must be square of equal size; got {u.shape}, {p.shape}")
    eye = np.eye(e, dtype=complex)
    if opnorm(adj(u) @ u - eye) > tol:
        raise PreconditionError("U is not unitary")
    if opnorm(p - adj(p)) > tol or opnorm(p @ p - p) > tol:
        raise PreconditionError("P is not an orthogonal projection")
    p_perp = eye - p
    ua = adj(u)
    phi = SchurPencil(p @ ua, p_perp @ ua, unitary=u, projection=p, role="phi")
    psi = SchurPencil(u @ p_perp, u @ p, unitary=u, projection=p, role="psi")
    residual = max(phi.distance_from_z(psi), psi.distance_from_z(phi))
    return phi, psi, residual


@dataclass
class ModelOperator:
    matrix: np.ndarray
    m: int
    degree: int
    block_dim: int
    kind: str

    def block(self, row: int, col: int) -> np.ndarray:
        e = self.block_dim
        return self.matrix[row * e:(row + 1) * e, col * e:(col + 1) * e]


def model_operator(pencil: Pencil, m: int, degree: int, weights: WeightTable | None = None,
                   kind: str = "pencil") -> ModelOperator:
    """Multiplication by ``pencil`` on ``A^2_m(E)`` truncated to degrees ``0..degree``."""
    if weights is None:
        weights = build_weight_table(m, degree + 1)
    if not weights.covers(m, degree + 1) and degree > 0:
        raise IndexError(f"weight table does not cover (m={m}, k={degree + 1})")
    e = pencil.dim
    size = (degree + 1) * e
    mat = np.zeros((size, size), dtype=complex)
    for k in range(degree + 1):
        mat[k * e:(k + 1) * e, k * e:(k + 1) * e] = pencil.coef0
        if k < degree:
            mat[(k + 1) * e:(k + 2) * e, k * e:(k + 1) * e] = \
                np.sqrt(weights.ratio(m, k)) * pencil.coef1
    return ModelOperator(mat, m, degree, e, kind)


def _ratios(m: int, degree: int, weights: WeightTable | None) -> np.ndarray:
    if weights is None:
        weights = build_weight_table(m, degree + 1)
    return np.sqrt([weights.ratio(m, k) for k in range(degree)])


def apply_model(pencil: Pencil, m: int, degree: int, x: np.ndarray,
                weights: WeightTable | None = None, adjoint: bool = False) -> np.ndarray:
    """``M x`` (or ``M* x``) for the truncated multiplication operator, blockwise.

    Equivalent to ``model_operator(...).matrix @ x`` without forming the
    ``(N+1) e`` square matrix.
    """
    e = pencil.dim
    cols = x.shape[1]
    xb = x.reshape(degree + 1, e, cols)
    s = _ratios(m, degree, weights)[:, None, None]
    if adjoint:
        out = np.einsum("ij,kjc->kic", adj(pencil.coef0), xb)
        out[:-1] += s * np.einsum("ij,kjc->kic", adj(pencil.coef1), xb[1:])
    else:
        out = np.einsum("ij,kjc->kic", pencil.coef0, xb)
        out[1:] += s * np.einsum("ij,kjc->kic", pencil.coef1, xb[:-1])
    return out.reshape((degree + 1) * e, cols)


def bergman_shift(dim: int, m: int, degree: int, weights: WeightTable | None = None):
    return model_operator(shift_pencil(dim), m, degree, weights, kind="shift")


def compressed_symbols(v, phi: Pencil, psi: Pencil) -> tuple[Pencil, Pencil]:
    """``V* Phi V`` and ``V* Psi V`` coefficientwise; these need not commute."""
    v = as_cmatrix(v, "V")
    va = adj(v)
    return (Pencil(va @ phi.coef0 @ v, va @ phi.coef1 @ v),
            Pencil(va @ psi.coef0 @ v, va @ psi.coef1 @ v))


def defect_coordinates(t, m: int, tol: float = PSD_TOL, tol_rank: float = RANK_TOL):
    """``D_{m,T}`` written in an orthonormal basis of its range.

    Returns ``(d, basis, scale)`` with ``d = diag(scale) basis*``.
    """
    k = hereditary_k_inverse(t, m)
    _, basis = psd_factor(k, tol, tol_rank)
    lam = np.real(np.einsum("ij,jk,ki->i", adj(basis), k, basis))
    return np.sqrt(lam)[:, None] * adj(basis), basis, np.sqrt(lam)


@dataclass
class PairGeometry:
    """Defect operators of an ``F_m`` pair in range-basis coordinates.

    ``d`` maps ``H`` onto the coordinates of ``ran D_{m,T}``; likewise ``d1``
    and ``d2`` for the pair defects ``D_{m,T,T1}`` and ``D_{m,T,T2}``.
    """

    pair: FactorPair
    m: int
    ancilla_dim: int
    d: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    d_basis: np.ndarray
    d_scale: np.ndarray

    @property
    def e_dim(self) -> int:
        return self.ancilla_dim + self.d1.shape[0] + self.d2.shape[0]

    @property
    def defect_dim(self) -> int:
        return self.d.shape[0]

    def embed(self, ancilla_part, first, second) -> np.ndarray:
        return np.vstack([ancilla_part, first, second])

    def zeros_ancilla(self, cols: int) -> np.ndarray:
        return np.zeros((self.ancilla_dim, cols), dtype=complex)

    def lift(self, g: np.ndarray) -> np.ndarray:
        """The map ``Y`` on ``ran D`` with ``Y (D h) = g h`` (``g`` factors through ``D``)."""
        # D in range coordinates is diag(sqrt(lambda)) basis*, so its right inverse is explicit
        return g @ (self.d_basis / self.d_scale)


def pair_geometry(pair: FactorPair, m: int, ancilla_dim: int = 0, tol: float = PSD_TOL,
                  tol_rank: float = RANK_TOL) -> PairGeometry:
    """Defect data shared by the constructions of ``V``, ``U``, ``U1`` and ``U2``."""
    fm = check_fm(pair, m, tol)
    if not fm.is_member:
        raise PreconditionError(f"pair is not in F_{m}")
    if ancilla_dim < 0:
        raise ValueError("ancilla_dim must be non-negative")
    d, basis, scale = defect_coordinates(pair.product, m, tol, tol_rank)
    coords = []
    for i in (1, 2):
        root, b = psd_factor(pair_defect(pair, m, i), tol, tol_rank)
        coords.append(adj(b) @ root)
    return PairGeometry(pair, m, ancilla_dim, d, coords[0], coords[1], basis, scale)


def _geometry(pair, m, ancilla_dim, tol, geometry):
    if geometry is not None:
        return geometry
    return pair_geometry(pair, m, ancilla_dim, tol)


def build_special_V(pair: FactorPair, m: int, ancilla_dim: int = 0, tol: float = PSD_TOL,
                    geometry: PairGeometry | None = None, isometry_tol: float = 1e-8):
    """Isometry ``V : D_{m,T} -> E`` with ``V (D h) = (0, D1 h, D2 T1* h)``.

    Returns
    -------
    v : ndarray, shape (e_dim, defect_dim)
    report : dict
        ``gram_residual`` (defect-norm identity on the standard basis of H),
        ``isometry_residual`` (``||V* V - I||``) and ``worst_witness``.

    Raises
    ------
    InconsistencyError
        When the defect-norm identity fails beyond ``isometry_tol``.
    """
    g = _geometry(pair, m, ancilla_dim, tol, geometry)
    n = pair.dim
    image = g.embed(g.zeros_ancilla(n), g.d1, g.d2 @ adj(pair.t1))
    gram_diff = adj(g.d) @ g.d - adj(image) @ image
    gram_residual = opnorm(gram_diff)
    witness_idx = int(np.argmax(np.abs(np.diag(gram_diff)))) if n else 0
    scale = max(1.0, opnorm(adj(g.d) @ g.d))
    if gram_residual > isometry_tol * scale:
        raise InconsistencyError(
            f"defect-norm identity fails by {gram_residual:.3e} (worst basis vector e_{witness_idx})")
    v = g.lift(image)
    iso = opnorm(adj(v) @ v - np.eye(v.shape[1]))
    return v, {"gram_residual": gram_residual, "isometry_residual": iso,
               "worst_witness": witness_idx}


def build_special_U(pair: FactorPair, m: int, ancilla_dim: int = 0, tol: float = PSD_TOL,
                    geometry: PairGeometry | None = None, completion_tol: float = 1e-8):
    """Unitary ``U`` on ``E`` with ``U (0, D1 T2* h, D2 h) = (0, D1 h, D2 T1* h)``.

    Both sides factor through ``D_{m,T} h``, giving two isometries out of
    ``ran D_{m,T}``; ``U`` maps one onto the other and is completed on the
    orthogonal complement by :func:`~hyperfact.matcore.unitary_completion`.

    Returns
    -------
    u : ndarray
    report : dict
        ``graph_residual`` is the worst violation of the defining relation
        over the standard basis of ``H``.
    """
    g = _geometry(pair, m, ancilla_dim, tol, geometry)
    n = pair.dim
    t1a, t2a = adj(pair.t1), adj(pair.t2)
    dom = g.embed(g.zeros_ancilla(n), g.d1 @ t2a, g.d2)
    ran = g.embed(g.zeros_ancilla(n), g.d1, g.d2 @ t1a)
    y_dom, y_ran = g.lift(dom), g.lift(ran)
    u = unitary_completion(y_dom, y_ran, g.e_dim, tol=completion_tol)
    return u, {"graph_residual": opnorm(u @ dom - ran),
               "unitarity_residual": opnorm(adj(u) @ u - np.eye(g.e_dim))}


def embedding_projection(g: PairGeometry) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Coordinate inclusions ``iota1`` (ancilla + D1), ``iota2`` (D2) and ``P = iota2 iota2*``."""
    e = g.e_dim
    first = g.ancilla_dim + g.d1.shape[0]
    eye = np.eye(e, dtype=complex)
    iota1, iota2 = eye[:, :first], eye[:, first:]
    return iota1, iota2, iota2 @ adj(iota2)


def transfer_unitaries(pair: FactorPair, m: int, ancilla_dim: int = 0, tol: float = PSD_TOL,
                       geometry: PairGeometry | None = None, u=None, v=None):
    """Colligations ``U1`` and ``U2`` whose adjoint transfer functions are ``Phi`` and ``Psi``.

    ``U1 = [[U P, U iota1], [iota1*, 0]]`` on ``E + (ancilla + D1)`` and
    ``U2 = [[P_perp U*, iota2], [iota2* U*, 0]]`` on ``E + D2``.

    Returns
    -------
    u1, u2 : ndarray
    report : dict
        Residuals of the defining actions on the standard basis of ``H``
        and of unitarity.
    """
    g = _geometry(pair, m, ancilla_dim, tol, geometry)
    if u is None:
        u, _ = build_special_U(pair, m, ancilla_dim, tol, geometry=g)
    if v is None:
        v, _ = build_special_V(pair, m, ancilla_dim, tol, geometry=g)
    iota1, iota2, p = embedding_projection(g)
    e = g.e_dim
    p_perp = np.eye(e) - p
    ua = adj(u)
    a1, a2 = iota1.shape[1], iota2.shape[1]
    u1 = np.block([[u @ p, u @ iota1], [adj(iota1), np.zeros((a1, a1))]])
    u2 = np.block([[p_perp @ ua, iota2], [adj(iota2) @ ua, np.zeros((a2, a2))]])

    n = pair.dim
    t, t1, t2 = pair.product, pair.t1, pair.t2
    vd = v @ g.d
    zeros = g.zeros_ancilla(n)
    lhs1 = u1 @ np.vstack([vd, zeros, g.d1 @ adj(t)])
    rhs1 = np.vstack([vd @ adj(t1), zeros, g.d1])
    lhs2 = u2 @ np.vstack([vd, g.d2 @ adj(t)])
    rhs2 = np.vstack([vd @ adj(t2), g.d2])
    report = {
        "u1_action_residual": opnorm(lhs1 - rhs1),
        "u2_action_residual": opnorm(lhs2 - rhs2),
        "u1_unitarity_residual": opnorm(adj(u1) @ u1 - np.eye(u1.shape[0])),
        "u2_unitarity_residual": opnorm(adj(u2) @ u2 - np.eye(u2.shape[0])),
    }
    return u1, u2, report


def transfer_function(colligation: np.ndarray, e_dim: int) -> Pencil:
    """Pencil ``A* + z C* B*`` of a colligation ``[[A, B], [C, 0]]`` split after ``e_dim``."""
    a = colligation[:e_dim, :e_dim]
    b = colligation[:e_dim, e_dim:]
    c = colligation[e_dim:, :e_dim]
    return Pencil(adj(a), adj(c) @ adj(b))


@dataclass
class CanonicalFactorization:
    """Everything built from an ``F_m`` pair on the coefficient space ``E``."""

    geometry: PairGeometry
    v: np.ndarray
    u: np.ndarray
    projection: np.ndarray
    phi: SchurPencil
    psi: SchurPencil
    phi_tilde: Pencil
    psi_tilde: Pencil
    diagnostics: dict


def canonical_factorization(pair: FactorPair, m: int, ancilla_dim: int = 0,
                            tol: float = PSD_TOL) -> CanonicalFactorization:
    """Build ``V``, ``U``, the canonical pencils and their compressions in one pass."""
    g = pair_geometry(pair, m, ancilla_dim, tol)
    v, vrep = build_special_V(pair, m, ancilla_dim, tol, geometry=g)
    u, urep = build_special_U(pair, m, ancilla_dim, tol, geometry=g)
    _, _, p = embedding_projection(g)
    phi, psi, ident = canonical_pencils(u, p, tol=1e-8)
    phi_t, psi_t = compressed_symbols(v, phi, psi)
    diagnostics = {**vrep, **urep, "pencil_identity_residual": ident,
                   "compressed_noncommutation": phi_t.distance_from_z(psi_t)}
    return CanonicalFactorization(g, v, u, p, phi, psi, phi_t, psi_t, diagnostics)
