"""The perturbed problem ``K h = lam (I + B) h`` in the K-eigenbasis.

With the modified inner product ``<h, g> = ((I + B) h, g)`` the operator
``(I + B)^{-1} K`` is self-adjoint, so its spectrum comes from the
symmetric-definite solver in :mod:`specpert.linalg`.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla

from .errors import DIMENSION_MISMATCH, INVALID_INDEX, SpecPertError
from .linalg import cholesky, generalized_sym_eigen

HEAD = "HEAD"
TAIL = "TAIL"


@dataclass(frozen=True)
class HMetric:
    """``G = I + B`` with its cached lower Cholesky factor."""

    G: np.ndarray
    chol: np.ndarray = field(repr=False)

    @classmethod
    def from_perturbation(cls, B, epsilon=1.0):
        g = np.eye(B.dim) + epsilon * B.array
        return cls(g, cholesky(g))

    def inner(self, h, g):
        return float(np.asarray(h) @ self.G @ np.asarray(g))

    def norm(self, h):
        return float(np.sqrt(self.inner(h, h)))

    def solve(self, v):
        """``G^{-1} v``."""
        return sla.cho_solve((self.chol, True), v, check_finite=False)


@dataclass(frozen=True)
class Window:
    """Coordinate window ``{1..n}`` (HEAD) or ``{n..N}`` (TAIL), 1-based."""

    side: str
    n: int

    def indices(self, N):
        if not 1 <= self.n <= N:
            raise SpecPertError(INVALID_INDEX, f"window index {self.n} outside 1..{N}")
        if self.side == HEAD:
            return np.arange(self.n)
        if self.side == TAIL:
            return np.arange(self.n - 1, N)
        raise ValueError(f"unknown window side {self.side!r}")


def head(n):
    return Window(HEAD, int(n))


def tail(n):
    return Window(TAIL, int(n))


@dataclass(frozen=True)
class PerturbedSpectrum:
    """Eigenpairs of the (possibly windowed) perturbed problem, values descending.

    ``vectors`` are H-orthonormal in the window's own coordinates; use
    :meth:`embed` to lift them to the full basis.
    """

    values: np.ndarray
    vectors: Optional[np.ndarray]
    epsilon: float
    metric: Optional[np.ndarray] = field(default=None, repr=False)
    indices: Optional[np.ndarray] = None
    dim: int = 0

    def embed(self, k):
        """Column ``k`` as a vector in the full N-dimensional basis."""
        x = np.zeros(self.dim)
        x[self.indices] = self.vectors[:, k]
        return x


def _check_dims(K, B):
    if K.dim != B.dim:
        raise SpecPertError(DIMENSION_MISMATCH, f"K has {K.dim} eigenvalues but B is {B.dim}x{B.dim}")


def _solve(lams, b, epsilon, indices, dim, backend, vectors):
    g = np.eye(lams.size) + epsilon * b
    dec = generalized_sym_eigen(np.diag(lams), g, backend=backend, vectors=vectors)
    return PerturbedSpectrum(dec.values, dec.vectors, float(epsilon), g, indices, dim)


def solve_generalized(K, B, *, epsilon=1.0, backend="lapack", vectors=True):
    """All eigenpairs of ``diag(lambdas) h = lam (I + epsilon B) h``."""
    _check_dims(K, B)
    return _solve(K.lambdas, B.array, epsilon, np.arange(K.dim), K.dim, backend, vectors)


def projected_solve(K, B, window, *, backend="lapack", vectors=True):
    """The same problem restricted to the HEAD or TAIL coordinate window.

    In the K-eigenbasis the orthoprojector onto ``span{h_k}`` is a coordinate
    selection, so this solves the principal/trailing sub-block.
    """
    _check_dims(K, B)
    idx = window.indices(K.dim)
    return _solve(K.lambdas[idx], B.array[np.ix_(idx, idx)], 1.0, idx, K.dim, backend, vectors)


@dataclass(frozen=True)
class HomotopyResult:
    epsilons: np.ndarray
    spectra: list
    # paths[i, n] = lam_n(epsilons[i])
    paths: np.ndarray
    max_jumps: np.ndarray
    crossing: bool
    crossing_pairs: list


def homotopy_track(K, B, steps=11, *, workers=1, backend="lapack"):
    """Follow ``lam_n(eps)`` for ``K h = lam (I + eps B) h`` on an even grid over [0, 1].

    Eigenvalues are matched across steps by rank. Adjacent values closer
    than ``1e-14 * lambda_1`` are reported as crossings, not raised.
    """
    if steps < 2:
        raise ValueError("steps must be at least 2")
    _check_dims(K, B)
    eps = np.linspace(0.0, 1.0, steps)
    idx = np.arange(K.dim)

    def one(e):
        return _solve(K.lambdas, B.array, e, idx, K.dim, backend, False)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            spectra = list(pool.map(one, eps))
    else:
        spectra = [one(e) for e in eps]
    paths = np.vstack([s.values for s in spectra])
    jumps = np.max(np.abs(np.diff(paths, axis=0)), axis=0)
    gaps = -np.diff(paths, axis=1)
    close = np.argwhere(gaps < 1e-14 * K.lambdas[0])
    pairs = [(float(eps[i]), int(n) + 1) for i, n in close]
    return HomotopyResult(eps, spectra, paths, jumps, bool(pairs), pairs)


def homotopy_jump_bound(K, B, steps, margin=0.1):
    """First-order bound on the per-step change of each eigenvalue path.

    Uses ``|d lam_n / d eps| <= lam_n ||B||_2 / (1 - eps ||B||_2)`` with
    ``lam_n <= lambda_n``, valid for ``B >= 0`` and ``||B||_2 < 1``.
    """
    bnorm = float(np.linalg.norm(B.array, 2))
    if bnorm >= 1.0:
        raise ValueError("jump bound needs ||B||_2 < 1")
    deps = 1.0 / (steps - 1)
    return bnorm / (1.0 - bnorm) * K.lambdas * deps * (1.0 + margin)


def refine_eigenpair(lambdas, b, x, value, iters=3):
    """Newton refinement of one pair of ``diag(lambdas) x = value (I + b) x``.

    The residual is formed in extended precision (``np.longdouble``) and the
    bordered correction system is solved in double, which makes small
    components of ``x`` accurate relative to themselves rather than to
    ``||x||``. Normalisation ``x^T (I + b) x = 1`` is kept.
    """
    ld = np.longdouble
    lam = np.asarray(lambdas, dtype=ld)
    bl = np.asarray(b, dtype=ld)
    x = np.asarray(x, dtype=ld)
    J = ld(value)
    n = x.size
    eye = np.eye(n)
    for _ in range(iters):
        gx = x + bl @ x
        r = lam * x - J * gx
        gxd = gx.astype(np.float64)
        system = np.zeros((n + 1, n + 1))
        system[:n, :n] = np.diag(np.asarray(lambdas, dtype=np.float64)) - float(J) * (eye + b)
        system[:n, n] = -gxd
        system[n, :n] = gxd
        rhs = np.empty(n + 1)
        rhs[:n] = -r.astype(np.float64)
        rhs[n] = float((1 - x @ gx) / 2)
        step = np.linalg.solve(system, rhs)
        x = x + step[:n].astype(ld)
        J = J + ld(step[n])
    return x.astype(np.float64), float(J)
