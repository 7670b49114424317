"""Finite-dimensional operator models.

The unperturbed operator K is represented in its own eigenbasis, so it is just
the decreasing list ``lambdas`` and the n-th eigenfunction is the canonical
basis vector ``e_n``. A perturbation B is the symmetric matrix of entries
``b[n, m] = (B h_n, h_m)`` in that basis. Indices in formulas are 1-based;
arrays are 0-based.
"""
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    INTERLEAVE_VIOLATION,
    INVALID_LAW,
    KERNEL_NOT_PSD,
    NOT_DECREASING,
    NOT_POSITIVE_DEFINITE,
    SpecPertError,
)
from .kernel_expr import KernelSpec
from .linalg import SymMatrix, cholesky, sym_eigen

DIAGONAL = "DIAGONAL"
NYSTROM = "NYSTROM"
TWO_SEQUENCE = "TWO_SEQUENCE"

GAUSS_LEGENDRE = "GAUSS_LEGENDRE"
MIDPOINT = "MIDPOINT"

LEMMA1 = "LEMMA1"
THEOREM1 = "THEOREM1"


@dataclass(frozen=True)
class AsymptoticLaw:
    """``lambda_n = (a n + b + O(n^-delta))^(-exponent)``; ``delta = inf`` means exact."""

    a: float
    b: float
    exponent: float
    delta: float = math.inf

    def __post_init__(self):
        if not (self.a > 0 and self.exponent > 0 and self.delta > 0):
            raise SpecPertError(INVALID_LAW, f"a, exponent and delta must be positive: {self}")
        if not self.a + self.b > 0:
            raise SpecPertError(INVALID_LAW, f"a + b must be positive so lambda_1 exists: {self}")

    def mu(self, n):
        """Affine part ``a n + b`` at 1-based ``n``."""
        return self.a * np.asarray(n, dtype=np.float64) + self.b

    def values(self, n):
        return self.mu(n) ** (-self.exponent)

    def to_config(self):
        return {"a": self.a, "b": self.b, "exponent": self.exponent,
                "delta": None if math.isinf(self.delta) else self.delta}


@dataclass(frozen=True)
class Wobble:
    """Realisation of the ``O(n^-delta)`` remainder.

    ``kind`` is NONE, DETERMINISTIC (``w_n = c n^-delta``) or RANDOM
    (``w_n`` uniform on ``[-c n^-delta, c n^-delta]`` drawn with ``seed``).
    """

    kind: str = "NONE"
    c: float = 0.0
    seed: Optional[int] = None

    def draw(self, n, delta):
        n = np.asarray(n, dtype=np.float64)
        kind = self.kind.upper()
        if kind == "NONE" or self.c == 0.0:
            return np.zeros_like(n)
        if math.isinf(delta):
            raise SpecPertError(INVALID_LAW, "a wobble needs a finite delta")
        env = self.c * n ** (-delta)
        if kind == "DETERMINISTIC":
            return env
        if kind == "RANDOM":
            rng = np.random.default_rng(self.seed)
            return rng.uniform(-1.0, 1.0, size=n.shape) * env
        raise ValueError(f"unknown wobble kind {self.kind!r}")


@dataclass(frozen=True)
class NystromData:
    nodes: np.ndarray
    weights: np.ndarray
    # column k holds sqrt(w_i) * phi_k(x_i); columns are Euclidean-orthonormal
    vectors: np.ndarray
    rule: str


@dataclass(frozen=True)
class SpectralModel:
    lambdas: np.ndarray
    provenance: str
    law: Optional[AsymptoticLaw] = None
    law2: Optional[AsymptoticLaw] = None
    wobble_c: float = 0.0
    nystrom: Optional[NystromData] = field(default=None, repr=False)

    def __post_init__(self):
        lam = np.array(self.lambdas, dtype=np.float64, copy=True)
        if lam.ndim != 1 or lam.size == 0:
            raise ValueError("lambdas must be a non-empty 1-d array")
        if not np.all(lam > 0):
            raise SpecPertError(NOT_DECREASING, "eigenvalues must be positive")
        if np.any(np.diff(lam) >= 0):
            k = int(np.flatnonzero(np.diff(lam) >= 0)[0]) + 1
            raise SpecPertError(NOT_DECREASING, f"lambdas not strictly decreasing at n={k}")
        lam.setflags(write=False)
        object.__setattr__(self, "lambdas", lam)

    @property
    def dim(self):
        return self.lambdas.size

    def truncated(self, n):
        """The model restricted to its first ``n`` eigenvalues."""
        ny = self.nystrom
        if ny is not None:
            ny = NystromData(ny.nodes, ny.weights, ny.vectors[:, :n], ny.rule)
        return SpectralModel(self.lambdas[:n], self.provenance, self.law, self.law2, self.wobble_c, ny)


@dataclass(frozen=True)
class PerturbationMatrix:
    """Symmetric ``b[n, m] = (B h_n, h_m)`` with ``I + B`` positive definite."""

    entries: SymMatrix
    tag: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not isinstance(self.entries, SymMatrix):
            object.__setattr__(self, "entries", SymMatrix(self.entries))
        a = self.entries.entries
        try:
            cholesky(np.eye(a.shape[0]) + a)
        except SpecPertError as exc:
            raise SpecPertError(NOT_POSITIVE_DEFINITE, f"I + B is not positive definite ({self.tag})") from exc

    @property
    def dim(self):
        return self.entries.n

    @property
    def array(self):
        return self.entries.entries

    def scaled(self, eps):
        return PerturbationMatrix(SymMatrix(eps * self.array), {**self.tag, "epsilon": eps})

    def window(self, idx):
        return PerturbationMatrix(SymMatrix(self.array[np.ix_(idx, idx)]), self.tag)

    @classmethod
    def zero(cls, n):
        return cls(SymMatrix(np.zeros((n, n))), {"recipe": "zero"})


def _decreasing_or_raise(lam, code, what):
    bad = np.flatnonzero(np.diff(lam) >= 0)
    if bad.size:
        raise SpecPertError(code, f"{what}: not strictly decreasing at rank {bad[0] + 2}")


def build_diagonal_K(law, N, wobble=None):
    """``lambdas[n] = (a n + b + w_n)^(-B)`` for ``n = 1..N``."""
    wobble = wobble or Wobble()
    n = np.arange(1, N + 1, dtype=np.float64)
    w = wobble.draw(n, law.delta)
    mu = law.mu(n) + w
    if np.any(mu <= 0):
        k = int(np.flatnonzero(mu <= 0)[0]) + 1
        raise SpecPertError(INVALID_LAW, f"a n + b + w_n <= 0 at n={k}")
    lam = mu ** (-law.exponent)
    _decreasing_or_raise(lam, NOT_DECREASING, "wobble destroyed monotonicity")
    wc = 0.0 if wobble.kind.upper() == "NONE" else float(wobble.c)
    return SpectralModel(lam, DIAGONAL, law=law, wobble_c=wc)


def build_two_sequence_K(law1, law2, N):
    """Interleave ``((2n-1)a + b1)^-B`` (odd ranks) with ``(2na + b2)^-B`` (even ranks)."""
    if (law1.a, law1.exponent, law1.delta) != (law2.a, law2.exponent, law2.delta):
        raise SpecPertError(INVALID_LAW, "two-sequence laws must share a, exponent and delta")
    r = np.arange(1, N + 1, dtype=np.float64)
    b = np.where(r % 2 == 1, law1.b, law2.b)
    mu = law1.a * r + b
    if np.any(mu <= 0):
        raise SpecPertError(INVALID_LAW, "nonpositive affine part in two-sequence law")
    lam = mu ** (-law1.exponent)
    _decreasing_or_raise(lam, INTERLEAVE_VIOLATION, "sequences do not strictly interleave")
    return SpectralModel(lam, TWO_SEQUENCE, law=law1, law2=law2)


def quadrature(N, rule=GAUSS_LEGENDRE):
    """Nodes and weights on [0, 1]."""
    rule = rule.upper()
    if rule == GAUSS_LEGENDRE:
        t, w = np.polynomial.legendre.leggauss(N)
        return 0.5 * (t + 1.0), 0.5 * w
    if rule == MIDPOINT:
        return (np.arange(N) + 0.5) / N, np.full(N, 1.0 / N)
    raise ValueError(f"unknown quadrature rule {rule!r}")


def nystrom_model(kernel: KernelSpec, N, rule=GAUSS_LEGENDRE, *, backend="lapack"):
    """Discretise ``(Kf)(s) = int_0^1 G(s, t) f(t) dt`` on ``N`` quadrature nodes.

    Eigenvalues below ``1e-14 * lambda_1`` are dropped. More than 1% of
    negative eigenvalues beyond roundoff (``10 N eps lambda_1``) means the
    kernel is not a covariance and raises ``KERNEL_NOT_PSD``.
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    x, w = quadrature(N, rule)
    sw = np.sqrt(w)
    a = sw[:, None] * kernel.matrix(x) * sw[None, :]
    dec = sym_eigen(a, backend=backend)
    lam1 = dec.values[0]
    if not lam1 > 0:
        raise SpecPertError(KERNEL_NOT_PSD, f"largest eigenvalue {lam1:.3e} is not positive")
    keep = dec.values > 1e-14 * lam1
    negtol = max(1e-14, 10 * N * np.finfo(float).eps) * lam1
    n_neg = int(np.sum(dec.values < -negtol))
    if n_neg > 0.01 * keep.sum():
        raise SpecPertError(KERNEL_NOT_PSD, f"{n_neg} negative eigenvalues vs {int(keep.sum())} retained")
    data = NystromData(x, w, dec.vectors[:, keep], rule.upper())
    return SpectralModel(dec.values[keep], NYSTROM, nystrom=data)


def _validated(entries, tag):
    return PerturbationMatrix(SymMatrix(entries), tag)


def build_rank_one_perturbation(sigma, delta, N, mode=THEOREM1):
    """Rank-one ``sigma * u u^T`` saturating the column-norm (LEMMA1) or entrywise (THEOREM1) decay.

    THEOREM1: ``u_n = n^(-(1+delta)/2)`` so ``|b_nm| (nm)^((1+delta)/2) = |sigma|``.
    LEMMA1:   ``u_n = n^(-(1+delta))`` so ``||B h_n|| = |sigma| ||u|| n^(-(1+delta))``.
    """
    n = np.arange(1, N + 1, dtype=np.float64)
    mode = mode.upper()
    if mode == THEOREM1:
        u = n ** (-(1.0 + delta) / 2.0)
    elif mode == LEMMA1:
        u = n ** (-(1.0 + delta))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return _validated(sigma * np.outer(u, u),
                      {"recipe": "rank_one", "mode": mode, "sigma": sigma, "delta": delta})


def build_random_sign_perturbation(sigma, delta, N, seed):
    """``b_nm = sigma * eps_nm * (nm)^(-(1+delta)/2)`` with symmetric random signs."""
    rng = np.random.default_rng(seed)
    signs = rng.choice(np.array([-1.0, 1.0]), size=(N, N))
    signs = np.triu(signs) + np.triu(signs, 1).T
    u = np.arange(1, N + 1, dtype=np.float64) ** (-(1.0 + delta) / 2.0)
    return _validated(sigma * signs * np.outer(u, u),
                      {"recipe": "random_sign", "sigma": sigma, "delta": delta, "seed": seed})


def build_power_law_perturbation(sigma, decay, N):
    """``b_nm = sigma * (nm)^(-decay)``: rank one with an arbitrary entry decay."""
    u = np.arange(1, N + 1, dtype=np.float64) ** (-decay)
    return _validated(sigma * np.outer(u, u), {"recipe": "power_law", "sigma": sigma, "decay": decay})


def metric_perturbation_from_kernel(model, rho: KernelSpec):
    """Express ``(Bh)(s) = int rho(s, t) h(t) dt`` in the model's eigenbasis."""
    ny = model.nystrom
    if ny is None:
        raise ValueError("metric_perturbation_from_kernel needs a NYSTROM model")
    sw = np.sqrt(ny.weights)
    r = sw[:, None] * rho.matrix(ny.nodes) * sw[None, :]
    b = ny.vectors.T @ r @ ny.vectors
    return _validated(b, {"recipe": "kernel", "rho": rho.to_config()})


def split_sign(B, *, tol=1e-14):
    """Split ``B = B_plus + B_minus`` with ``B_plus >= 0`` and ``B_minus <= 0``.

    ``B_plus`` is the spectral projection onto the nonnegative eigenspace;
    eigenvalues within ``tol * max|eig|`` of zero count as zero, so a
    semidefinite input comes back unchanged on one side and zero on the other.
    """
    a = B.array
    n = a.shape[0]
    zero = np.zeros((n, n))
    dec = sym_eigen(a)
    w = dec.values
    scale = np.max(np.abs(w)) if w.size else 0.0
    w = np.where(np.abs(w) <= tol * scale, 0.0, w)
    tag = dict(B.tag)
    if np.all(w >= 0):
        plus, minus = a, zero
    elif np.all(w <= 0):
        plus, minus = zero, a
    else:
        v = dec.vectors
        plus = (v * np.maximum(w, 0.0)) @ v.T
        minus = a - plus
    return (PerturbationMatrix(SymMatrix(plus), {**tag, "part": "plus"}),
            PerturbationMatrix(SymMatrix(minus), {**tag, "part": "minus"}))
