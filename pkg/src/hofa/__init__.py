"""Higher-order Fourier analysis over F_p^n at desk scale.

Gowers norms, non-classical polynomials, polynomial factors, restriction
distributions and a restriction-based distance tester for affine-invariant
properties.
"""

__version__ = "0.1.0"

from .errors import (
    CapacityExceeded,
    DimensionError,
    HofaError,
    InvalidOrder,
    NonConvergence,
    NotARefinement,
    NotInjective,
    NotMeasurable,
    ParseError,
    RangeError,
    SignatureMismatch,
)
from .field import AffineMap, FieldParams, sample_affine_embedding, section_of
from .functions import FiniteFunction, restrict
from .gowers import gowers_norm, gowers_norm_estimate, gowers_norm_exact, mult_derivative
from .polynomials import NonClassicalPoly, TorsionTable, TorsionValue, enumerate_polys, verify_degree
from .factors import PolynomialFactor, atom_stats, cond_expectation, decompose, factor_rank_proxy
from .distributions import LinearFormSystem, cs_complexity, mu_estimate, mu_exact, stat_distance
from .property_testing import (
    ReedMuller,
    TesterConfig,
    TransferOperator,
    construct_psi,
    distance_tester,
    property_distance,
    rm_distance,
    soundness_pipeline,
    transfer,
)
from .rng import make_rng

__all__ = [
    "AffineMap", "CapacityExceeded", "DimensionError", "FieldParams", "FiniteFunction",
    "HofaError", "InvalidOrder", "LinearFormSystem", "NonClassicalPoly", "NonConvergence",
    "NotARefinement", "NotInjective", "NotMeasurable", "ParseError", "PolynomialFactor",
    "RangeError", "ReedMuller", "SignatureMismatch", "TesterConfig", "TorsionTable",
    "TorsionValue", "TransferOperator", "atom_stats", "cond_expectation", "construct_psi",
    "cs_complexity", "decompose", "distance_tester", "enumerate_polys", "factor_rank_proxy",
    "gowers_norm", "gowers_norm_estimate", "gowers_norm_exact", "make_rng", "mu_estimate",
    "mu_exact", "mult_derivative", "property_distance", "restrict", "rm_distance",
    "sample_affine_embedding", "section_of", "soundness_pipeline", "stat_distance",
    "transfer", "verify_degree",
]
