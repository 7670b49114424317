"""Dense symmetric linear algebra: Cholesky, eigendecomposition, and the
symmetric-definite generalized problem ``A x = lam G x``.

Two backends are available for the factorizations:

``"lapack"``
    numpy/scipy LAPACK drivers (default, fast for n in the thousands).
``"native"``
    Householder tridiagonalisation plus implicit-shift QL from
    :mod:`specpert.linalg.kernels` (compiled when available).
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as sla

from ..errors import NO_CONVERGENCE, NOT_FINITE, NOT_POSITIVE_DEFINITE, SpecPertError
from . import kernels

EUCLIDEAN = "EUCLIDEAN"
H_METRIC = "H_METRIC"

DEFAULT_RTOL = 1e-10
DEFAULT_PIVOT_REL = 1e-12
DEFAULT_MAX_ITER = 64
BACKENDS = ("lapack", "native")


@dataclass(frozen=True)
class SymMatrix:
    """Real symmetric matrix, symmetrised as ``(M + M.T) / 2`` on construction."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=np.float64, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
        if not np.isfinite(a).all():
            raise SpecPertError(NOT_FINITE, "matrix has NaN or Inf entries")
        a = (a + a.T) / 2.0
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def n(self):
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def as_sym(m):
    """Return the symmetric ndarray behind ``m`` (SymMatrix or array-like)."""
    if isinstance(m, SymMatrix):
        return m.entries
    return SymMatrix(m).entries


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenpairs sorted by descending value.

    ``vectors[:, k]`` belongs to ``values[k]`` and the columns are orthonormal
    under ``metric_matrix`` (identity when ``metric == EUCLIDEAN``).
    ``vectors`` is None when only values were requested.
    """

    values: np.ndarray
    vectors: Optional[np.ndarray]
    metric: str = EUCLIDEAN
    metric_matrix: Optional[np.ndarray] = None

    def residual_norms(self, a, g=None):
        """Per-column ``||A v - lam G v||_2``."""
        a = np.asarray(a)
        av = a @ self.vectors
        gv = self.vectors if g is None else np.asarray(g) @ self.vectors
        return np.linalg.norm(av - gv * self.values, axis=0)

    def orthonormality_error(self):
        """``max |V^T G V - I|`` entrywise."""
        v = self.vectors
        gv = v if self.metric_matrix is None else self.metric_matrix @ v
        return float(np.max(np.abs(v.T @ gv - np.eye(v.shape[1]))))


def _check_backend(backend):
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")


def cholesky(m, *, pivot_floor=None, backend="lapack"):
    """Lower-triangular ``L`` with ``m = L @ L.T``.

    Raises ``NOT_POSITIVE_DEFINITE`` when a pivot is at or below
    ``pivot_floor`` (default ``1e-12 * max(diag(m))``).
    """
    _check_backend(backend)
    a = as_sym(m)
    dmax = float(np.max(np.diag(a)))
    if dmax <= 0.0:
        raise SpecPertError(NOT_POSITIVE_DEFINITE, "largest diagonal entry is not positive")
    floor = DEFAULT_PIVOT_REL * dmax if pivot_floor is None else float(pivot_floor)

    if backend == "native":
        L, info = kernels.cholesky_kernel(a, floor)
        if info >= 0:
            raise SpecPertError(NOT_POSITIVE_DEFINITE, f"pivot {info} at or below floor {floor:.3e}")
        return L

    try:
        L = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise SpecPertError(NOT_POSITIVE_DEFINITE, str(exc)) from None
    pivots = np.diag(L) ** 2
    bad = np.flatnonzero(~(pivots > floor))
    if bad.size:
        raise SpecPertError(NOT_POSITIVE_DEFINITE, f"pivot {bad[0]} at or below floor {floor:.3e}")
    return L


def _sorted_desc(values, vectors):
    # stable sort on -values keeps ascending column order among ties
    order = np.argsort(-values, kind="stable")
    values = values[order]
    if vectors is None:
        return values, None
    vectors = vectors[:, order]
    # fix the sign so the largest-magnitude component is positive
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return values, vectors * signs


def sym_eigen(m, *, backend="lapack", vectors=True, max_iter=DEFAULT_MAX_ITER):
    """Eigendecomposition of a symmetric matrix, values descending."""
    _check_backend(backend)
    a = as_sym(m)
    if backend == "native":
        d, e, q = kernels.tridiagonalize(a)
        vals, vecs, info = kernels.tql2(d, e, q, max_iter)
        if info >= 0:
            raise SpecPertError(NO_CONVERGENCE, f"QL iteration budget {max_iter} exhausted at index {info}")
        if not vectors:
            vecs = None
    else:
        try:
            if vectors:
                vals, vecs = np.linalg.eigh(a)
            else:
                vals, vecs = np.linalg.eigvalsh(a), None
        except np.linalg.LinAlgError as exc:
            raise SpecPertError(NO_CONVERGENCE, str(exc)) from None
    vals, vecs = _sorted_desc(np.asarray(vals, dtype=np.float64), vecs)
    return EigenDecomposition(vals, vecs, EUCLIDEAN, None)


def sym_eigvals_bisection(m):
    """Eigenvalues (descending) via Householder tridiagonalisation and Sturm bisection.

    Shares no code with the QL or LAPACK paths beyond the reduction, so it
    serves as an independent cross-check.
    """
    d, e, _ = kernels.tridiagonalize(as_sym(m))
    return kernels.bisect_eigenvalues(d, e)[::-1].copy()


def generalized_sym_eigen(a, g, *, backend="lapack", vectors=True, pivot_floor=None,
                          max_iter=DEFAULT_MAX_ITER):
    """Solve ``A x = lam G x`` with ``G`` positive definite.

    Reduces to ``L^{-1} A L^{-T} y = lam y`` with ``G = L L^T`` and maps
    back by ``x = L^{-T} y``; the returned vectors satisfy ``V^T G V = I``.
    """
    a = as_sym(a)
    g = as_sym(g)
    if a.shape != g.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {g.shape}")
    L = cholesky(g, pivot_floor=pivot_floor, backend=backend)
    tmp = sla.solve_triangular(L, a, lower=True, check_finite=False)
    c = sla.solve_triangular(L, tmp.T, lower=True, check_finite=False)
    dec = sym_eigen(c, backend=backend, vectors=vectors, max_iter=max_iter)
    vecs = None
    if vectors:
        vecs = sla.solve_triangular(L.T, dec.vectors, lower=False, check_finite=False)
    return EigenDecomposition(dec.values, vecs, H_METRIC, g)
