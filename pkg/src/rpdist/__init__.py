"""Eigenvector statistics of the Rosenzweig-Porter random-matrix ensemble."""
from .ensemble import EnsembleParams, SymmetricMatrix, derive_stream, sample_matrix
from .eigensolve import EigenDecomposition, eigh, tridiagonalize
from .errors import AccuracyError, ConvergenceError, DomainError, InputError, ResourceError
from .theory import (
    MomentSet,
    NormalizationMode,
    TheoryContext,
    distribution_bulk,
    distribution_center,
    distribution_general,
    distribution_tail,
    level_density,
    mean_square_component,
    moment_asymptotic,
    moment_correction,
    moment_exact,
    moment_half,
    spreading_width,
)

__version__ = "0.1.0"
