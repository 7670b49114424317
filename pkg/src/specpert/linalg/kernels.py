"""Chooses the kernel implementation once, at import.

The compiled extension is used when it was built; ``SPECPERT_PURE_PYTHON=1``
forces the numpy fallback (handy for benchmarking and for checking the two
against each other).
"""
import os

from . import _kernels_py

if os.environ.get("SPECPERT_PURE_PYTHON"):
    impl = _kernels_py
    COMPILED = False
else:
    try:
        from . import _kernels as impl
        COMPILED = True
    except ImportError:
        impl = _kernels_py
        COMPILED = False

tridiagonalize = impl.tridiagonalize
tql2 = impl.tql2
sturm_count = impl.sturm_count
bisect_eigenvalues = impl.bisect_eigenvalues
cholesky_kernel = impl.cholesky
