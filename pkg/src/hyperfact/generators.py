"""Random instances: ``F_m`` pairs built from the model and m-hypercontractions.

Members of ``F_m`` are produced by compressing the model pair
``(M_Phi, M_Psi)`` on ``A^2_m(E)`` to a jointly co-invariant subspace.  The
subspace is spanned by kernel vectors ``k_lambda (x) e``, whose coordinates
``sqrt(w[m][k]) conj(lambda)^k`` are truncated at a degree where they are
below round-off, then closed under both adjoints.  An optional diagonal
pair of commuting unitaries makes the product non-pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError
from .factors import FactorPair, check_fm, make_pair
from .hyper import classify
from .matcore import PSD_TOL, adj, opnorm, random_unitary, range_basis
from .schur import canonical_pencils, model_operator
from .weights import build_weight_table

MAX_RADIUS = 0.6
KERNEL_TAIL = 1e-13
CLOSURE_TOL = 1e-10


@dataclass
class GeneratedPair:
    pair: FactorPair
    m: int
    seed: int
    base_dim: int
    degree: int
    points: np.ndarray
    unitary_dim: int
    attempts: int
    unitary: np.ndarray = field(repr=False, default=None)
    projection: np.ndarray = field(repr=False, default=None)


def kernel_degree(radius: float, m: int, tail: float = KERNEL_TAIL, cap: int = 400) -> int:
    """Smallest ``N`` with ``radius^(N+1) sqrt(w[m][N+1]) < tail``."""
    if radius == 0.0:
        return 1
    n = 1
    while n < cap:
        if radius ** (n + 1) * math.sqrt(math.comb(m + n, n + 1)) < tail:
            return n
        n += 1
    return cap


def kernel_vector(lam: complex, m: int, degree: int, vec: np.ndarray) -> np.ndarray:
    """Coordinates of ``k_lambda (x) vec`` on degrees ``0..degree``."""
    coeff = np.array([math.sqrt(math.comb(m + k - 1, k)) * np.conj(lam) ** k
                      for k in range(degree + 1)])
    return np.kron(coeff, vec)


def adjoint_closure(seeds: np.ndarray, operators: list[np.ndarray],
                    tol: float = CLOSURE_TOL, max_dim: int | None = None) -> np.ndarray:
    """Orthonormal basis of the smallest subspace containing ``seeds`` and invariant
    under the adjoints of ``operators`` (numerically, up to ``tol``)."""
    basis = range_basis(seeds, tol)
    frontier = basis
    limit = max_dim if max_dim is not None else seeds.shape[0]
    while frontier.shape[1]:
        cand = np.hstack([adj(op) @ frontier for op in operators])
        cand = cand - basis @ (adj(basis) @ cand)
        if opnorm(cand) <= tol:
            break
        new = range_basis(cand, tol)
        new = new - basis @ (adj(basis) @ new)
        new, _ = np.linalg.qr(new)
        basis = np.hstack([basis, new])
        frontier = new
        if basis.shape[1] > limit:
            raise ConvergenceError("adjoint closure exceeded the admissible dimension")
    return basis


def random_projection(e: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    if rank is None:
        rank = int(rng.integers(0, e + 1))
    if rank == 0:
        return np.zeros((e, e), dtype=complex)
    cols = random_unitary(e, rng)[:, :rank]
    return cols @ adj(cols)


def _unit_circle(rng, k):
    return np.exp(2j * np.pi * rng.random(k))


def generate_fm_pair(seed: int, base_dim: int, m: int, n_points: int | None = None,
                     radius: float | None = None, unitary_dim: int = 0,
                     full_space: bool = False, degree: int | None = None,
                     max_retries: int = 20, tol: float = PSD_TOL) -> GeneratedPair:
    """A random member of ``F_m`` obtained from the canonical model.

    Parameters
    ----------
    seed : int
        Seed for :func:`numpy.random.default_rng`; output is deterministic.
    base_dim : int
        Dimension of the coefficient space ``E``.
    m : int
        Order of the class.
    n_points : int, optional
        Number of kernel points; random in ``1..2`` by default.
    radius : float, optional
        Maximum modulus of the kernel points, at most ``0.6``.
    unitary_dim : int
        Size of the diagonal commuting unitary summand.
    full_space : bool
        Return the truncated model pair itself (degree ``degree``, default 3)
        instead of a kernel compression.
    """
    if base_dim < 1 or m < 1:
        raise ValueError("base_dim and m must be positive")
    rng = np.random.default_rng(seed)
    for attempt in range(1, max_retries + 1):
        u = random_unitary(base_dim, rng)
        p = random_projection(base_dim, rng)
        phi, psi, _ = canonical_pencils(u, p, tol=1e-8)
        if full_space:
            deg = 3 if degree is None else degree
            weights = build_weight_table(m, deg + 1)
            t1 = model_operator(phi, m, deg, weights).matrix
            t2 = model_operator(psi, m, deg, weights).matrix
            points = np.zeros(0, dtype=complex)
        else:
            rad = min(MAX_RADIUS, radius if radius is not None else rng.uniform(0.2, MAX_RADIUS))
            deg = kernel_degree(rad, m) if degree is None else degree
            weights = build_weight_table(m, deg + 1)
            mphi = model_operator(phi, m, deg, weights).matrix
            mpsi = model_operator(psi, m, deg, weights).matrix
            k = int(rng.integers(1, 3)) if n_points is None else n_points
            points = rad * np.sqrt(rng.random(k)) * _unit_circle(rng, k)
            seeds = []
            for lam in points:
                vec = rng.standard_normal(base_dim) + 1j * rng.standard_normal(base_dim)
                seeds.append(kernel_vector(lam, m, deg, vec / np.linalg.norm(vec)))
            try:
                basis = adjoint_closure(np.array(seeds).T, [mphi, mpsi],
                                        max_dim=len(points) * base_dim)
            except ConvergenceError:
                continue
            t1 = adj(basis) @ mphi @ basis
            t2 = adj(basis) @ mpsi @ basis
        if unitary_dim:
            d1, d2 = _unit_circle(rng, unitary_dim), _unit_circle(rng, unitary_dim)
            t1 = _direct_sum(t1, np.diag(d1))
            t2 = _direct_sum(t2, np.diag(d2))
        conj = random_unitary(t1.shape[0], rng)
        t1, t2 = conj @ t1 @ adj(conj), conj @ t2 @ adj(conj)
        try:
            pair = make_pair(t1, t2, tol, tol_commute=1e-9)
        except ValueError:
            continue
        if check_fm(pair, m, tol).is_member:
            return GeneratedPair(pair, m, seed, base_dim, deg, points, unitary_dim, attempt, u, p)
    raise ConvergenceError(f"no F_{m} member found in {max_retries} attempts (seed {seed})")


def _direct_sum(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros((a.shape[0] + b.shape[0],) * 2, dtype=complex)
    out[:a.shape[0], :a.shape[0]] = a
    out[a.shape[0]:, a.shape[0]:] = b
    return out


def random_hypercontraction(rng: np.random.Generator, dim: int, m: int,
                            unitary_dim: int = 0, max_tries: int = 60,
                            tol: float = PSD_TOL) -> np.ndarray:
    """A random m-hypercontraction of size ``dim + unitary_dim``.

    A Ginibre matrix is rescaled to a random norm below ``1/sqrt(m)`` and
    shrunk until :func:`~hyperfact.hyper.classify` accepts it; a diagonal
    unitary summand of size ``unitary_dim`` makes it non-pure.
    """
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    t = z / max(opnorm(z), 1e-300) * rng.uniform(0.3, 1.0) / math.sqrt(m)
    for _ in range(max_tries):
        if classify(t, m, tol).is_hypercontraction(m):
            break
        t = 0.9 * t
    else:
        raise ConvergenceError("could not shrink to an m-hypercontraction")
    if unitary_dim:
        t = _direct_sum(t, np.diag(_unit_circle(rng, unitary_dim)))
        conj = random_unitary(t.shape[0], rng)
        t = conj @ t @ adj(conj)
    return t


def random_commuting_pair(rng: np.random.Generator, dim: int, max_norm: float = 1.0) -> FactorPair:
    """Commuting contractions ``T1 = c1 A`` and ``T2 = c2 p(A)`` for a random upper-triangular ``A``.

    Meant for negative tests: the pair commutes exactly up to round-off but
    is not guaranteed to lie in any ``F_m``.
    """
    a = np.triu(rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
    coeffs = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    b = coeffs[0] * np.eye(dim) + coeffs[1] * a + coeffs[2] * a @ a
    t1 = a * rng.uniform(0.2, max_norm) / max(opnorm(a), 1e-300)
    t2 = b * rng.uniform(0.2, max_norm) / max(opnorm(b), 1e-300)
    return make_pair(t1, t2, tol_commute=1e-9)
