"""End-to-end verification of the factorization model of an ``F_m`` pair.

:func:`verify_factorization` builds the joint dilation of a pair and reports
named residuals for every identity of the model.  It never raises on a bad
residual; the verdict is carried by :attr:`VerificationReport.passed`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dilate import DilationPack, general_factor_dilation, top_rows
from .factors import FactorPair
from .matcore import PSD_TOL, adj, opnorm
from .schur import (
    apply_model,
    canonical_pencils,
    shift_pencil,
    transfer_function,
    transfer_unitaries,
)
from .weights import build_weight_table

VERIFY_TOL = 1e-7


@dataclass
class VerificationReport:
    residuals: dict[str, float]
    tol: float
    degree: int
    observations: dict[str, float] = field(default_factory=dict)
    pack: DilationPack | None = field(default=None, repr=False)

    @property
    def failed(self) -> list[str]:
        return [k for k, v in self.residuals.items() if not v <= self.tol]

    @property
    def passed(self) -> bool:
        return not self.failed

    @property
    def worst(self) -> tuple[str, float]:
        name = max(self.residuals, key=self.residuals.get)
        return name, self.residuals[name]


def coinvariance_residual(stacked: np.ndarray, images: np.ndarray) -> float:
    """Distance of the columns of ``images`` from the column space of ``stacked``.

    Computed by least squares; relative to ``max(1, ||images||)``.
    """
    if stacked.shape[0] == 0 or stacked.shape[1] == 0:
        return 0.0
    coef, *_ = np.linalg.lstsq(stacked, images, rcond=None)
    return opnorm(images - stacked @ coef) / max(1.0, opnorm(images))


def verify_factorization(pair: FactorPair, m: int, degree: int | None = None,
                         tol: float = VERIFY_TOL, psd_tol: float = PSD_TOL,
                         ancilla_dim: int = 0) -> VerificationReport:
    """Residuals of the joint model of ``(T1, T2, T1 T2)``.

    Reported groups:

    * ``intertwine_*``: ``Pi Ti* = (M + Wi)* Pi`` on block rows ``0..N-1``
      and on the residual space, for ``Phi``, ``Psi`` and ``z``;
    * ``coinvariant_*``: containment of ``(M + Wi)* ran Pi`` in ``ran Pi``;
    * ``symbol_*``: compression identities of the compressed symbols
      ``V* Phi V`` and ``V* Psi V`` on ``ran Pi_{m,T}``;
    * ``w_*`` and ``x_*``: identities of the unitary summand;
    * ``transfer_*`` and ``pencil_identity``: the colligations and pencils.

    ``observations`` holds quantities that are recorded but not judged,
    notably ``compressed_noncommutation``.
    """
    pack = general_factor_dilation(pair, m, degree, psd_tol, ancilla_dim)
    n = pair.dim
    cf = pack.factorization
    g = cf.geometry
    degree = pack.degree
    e = g.e_dim
    weights = build_weight_table(m, degree + 1)
    res = dict(pack.residuals)
    obs = {name: c.min_eigenvalue for name, c in pack.certificates.items()}

    # joint co-invariance of ran Pi, boundary row excluded
    models = (("phi", cf.phi, pack.w1, pair.t1), ("psi", cf.psi, pack.w2, pair.t2),
              ("z", shift_pencil(e), pack.w, pair.product))
    top_pi = np.vstack([top_rows(pack.bergman, degree, e), pack.r_part])
    for name, pen, w, _ in models:
        pulled = apply_model(pen, m, degree, pack.bergman, weights, adjoint=True)
        image = np.vstack([top_rows(pulled, degree, e), adj(w) @ pack.r_part])
        res[f"coinvariant_{name}"] = coinvariance_residual(top_pi, image)

    # compression back to the original operators
    for name, pen, w, ti in models:
        pushed = apply_model(pen, m, degree, pack.bergman, weights)
        comp = adj(pack.bergman) @ pushed + adj(pack.r_part) @ w @ pack.r_part
        res[f"compression_{name}"] = opnorm(comp - ti)
    res["isometry"] = pack.residuals["isometry"]

    # compressed symbols on A^2_m(D_{m,T})
    pi = pack.canonical.pi
    d = g.defect_dim
    phi_t, psi_t = cf.phi_tilde, cf.psi_tilde

    def mult(pen, x):
        return apply_model(pen, m, degree, x, weights)

    for name, pen, ti in (("phi", phi_t, pair.t1), ("psi", psi_t, pair.t2)):
        pulled = apply_model(pen, m, degree, pi, weights, adjoint=True)
        res[f"symbol_intertwine_{name}"] = opnorm(top_rows(pulled - pi @ adj(ti), degree, d))
    z_pi = mult(shift_pencil(d), pi)
    res["symbol_compression_phi_psi"] = opnorm(adj(pi) @ (z_pi - mult(phi_t, mult(psi_t, pi))))
    res["symbol_compression_psi_phi"] = opnorm(adj(pi) @ (z_pi - mult(psi_t, mult(phi_t, pi))))

    # colligations and pencils
    u1, u2, trep = transfer_unitaries(pair, m, ancilla_dim, psd_tol, geometry=g, u=cf.u, v=cf.v)
    res.update(trep)
    phi_tf, psi_tf = transfer_function(u1, e), transfer_function(u2, e)
    res["transfer_phi"] = max(opnorm(phi_tf.coef0 - cf.phi.coef0), opnorm(phi_tf.coef1 - cf.phi.coef1))
    res["transfer_psi"] = max(opnorm(psi_tf.coef0 - cf.psi.coef0), opnorm(psi_tf.coef1 - cf.psi.coef1))
    _, _, ident = canonical_pencils(cf.u, cf.projection, tol=1e-8)
    res["pencil_identity"] = ident
    res["v_isometry"] = cf.diagnostics["isometry_residual"]
    res["defect_norm_identity"] = cf.diagnostics["gram_residual"]
    res["u_graph"] = cf.diagnostics["graph_residual"]

    obs["compressed_noncommutation"] = cf.diagnostics["compressed_noncommutation"]
    obs["residual_space_dim"] = float(pack.r_dim)
    obs["defect_dim"] = float(d)
    obs["coefficient_dim"] = float(e)
    obs["operator_dim"] = float(n)
    return VerificationReport(res, tol, degree, obs, pack)
