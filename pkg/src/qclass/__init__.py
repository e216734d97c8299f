"""Training-based binary classification of qubit states: exact error rates,
covariant-measurement optimization, and independent numerical cross-checks."""

__version__ = "0.1.0"

from .su2 import HalfInteger, as_half, clebsch_gordan, dim, multiplicity, recoupling_overlap, wigner_6j

__all__ = [
    "__version__",
    "HalfInteger",
    "as_half",
    "clebsch_gordan",
    "dim",
    "multiplicity",
    "recoupling_overlap",
    "wigner_6j",
]
