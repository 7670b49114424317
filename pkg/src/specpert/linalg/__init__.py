from .core import (
    BACKENDS,
    EUCLIDEAN,
    H_METRIC,
    EigenDecomposition,
    SymMatrix,
    as_sym,
    cholesky,
    generalized_sym_eigen,
    sym_eigen,
    sym_eigvals_bisection,
)
from .kernels import COMPILED

__all__ = [
    "BACKENDS",
    "COMPILED",
    "EUCLIDEAN",
    "H_METRIC",
    "EigenDecomposition",
    "SymMatrix",
    "as_sym",
    "cholesky",
    "generalized_sym_eigen",
    "sym_eigen",
    "sym_eigvals_bisection",
]
