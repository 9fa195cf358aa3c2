"""Hypercontractions, their commuting factorizations and truncated dilation models."""

from .dilate import (
    DilationPack,
    TruncatedDilation,
    canonical_pi,
    douglas_dilation,
    general_factor_dilation,
    intertwine_residual,
)
from .errors import (
    ClaimError,
    ConvergenceError,
    DimensionError,
    HyperfactError,
    IllConditionedError,
    InconsistencyError,
    NotPSDError,
    PreconditionError,
)
from .factors import FactorPair, FmReport, check_fm, make_pair, pair_defect, szego_counterexample
from .generators import generate_fm_pair, random_hypercontraction
from .hyper import HyperReport, QLimit, classify, f_r, hereditary_k_inverse, q_limit
from .matcore import PsdCertificate, douglas_solve, psd_check, psd_factor, psd_sqrt
from .schur import (
    CanonicalFactorization,
    SchurPencil,
    build_special_U,
    build_special_V,
    canonical_factorization,
    canonical_pencils,
    model_operator,
    transfer_unitaries,
)
from .verify import VerificationReport, verify_factorization
from .weights import WeightTable, build_weight_table, weight

__version__ = "0.1.0"
