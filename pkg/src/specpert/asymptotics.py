"""Two-term asymptotic fits ``lambda_n ~ (a n + b)^(-B)``.

Values are linearised as ``mu_n = lambda_n^(-1/B)`` and ``(a, b)`` come from
ordinary least squares on ``(n, mu_n)``. The remainder exponent is estimated
separately (see :func:`fit_two_term`).
"""
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import INCOMPATIBLE_FITS, NONPOSITIVE_VALUE, WINDOW_TOO_SMALL, SpecPertError

MIN_POINTS = 10
EXACT_LEVEL = 1e-10


@dataclass(frozen=True)
class FitResult:
    a_hat: float
    b_hat: float
    exponent: float
    # None when the remainder is at roundoff level (``exact`` set)
    delta_hat: Optional[float]
    c_hat: float
    window: tuple
    n: np.ndarray
    residuals: np.ndarray
    rmse: float
    exact: bool = False

    def to_dict(self):
        return {
            "a_hat": self.a_hat,
            "b_hat": self.b_hat,
            "exponent": self.exponent,
            "delta_hat": self.delta_hat,
            "c_hat": self.c_hat,
            "window": list(self.window),
            "rmse": self.rmse,
            "exact": self.exact,
        }


@dataclass(frozen=True)
class ComparisonVerdict:
    delta_a: float
    delta_b: float
    preserved: bool
    tol_a: float
    tol_b: float

    def to_dict(self):
        return {"delta_a": self.delta_a, "delta_b": self.delta_b, "preserved": self.preserved,
                "tol_a": self.tol_a, "tol_b": self.tol_b}


@dataclass(frozen=True)
class TwoSequenceFit:
    odd: FitResult
    even: FitResult

    @property
    def a_consistency(self):
        return abs(self.odd.a_hat - self.even.a_hat)


def default_window(N):
    """``(max(10, N/40), min(N/2, N-10))``: skips the pre-asymptotic head and the tail."""
    return max(10, N // 40), min(N // 2, N - 10)


def _linearise(values, exponent):
    values = np.asarray(values, dtype=np.float64)
    if np.any(~(values > 0)):
        raise SpecPertError(NONPOSITIVE_VALUE, "all values must be positive")
    if not exponent > 0:
        raise ValueError("exponent must be positive")
    return values ** (-1.0 / exponent)


def _envelope_exponent(n, remainder):
    # suffix maximum: E_n = max_{m >= n} |r_m|, nonincreasing and dominating |r|
    env = np.maximum.accumulate(np.abs(remainder)[::-1])[::-1]
    env = np.maximum(env, np.finfo(float).tiny)
    slope = np.polyfit(np.log(n), np.log(env), 1)[0]
    return float(-slope)


def _profile_remainder(n, mu):
    """Remainder of the best fit ``a n + b + C n^-d`` over d (profile least squares)."""

    def design(d):
        return np.column_stack([n, np.ones_like(n), n ** (-d)])

    def rss(d):
        coef, *_ = np.linalg.lstsq(design(d), mu, rcond=None)
        r = mu - design(d) @ coef
        return float(r @ r)

    d = minimize_scalar(rss, bounds=(0.05, 6.0), method="bounded", options={"xatol": 1e-8}).x
    coef, *_ = np.linalg.lstsq(design(d), mu, rcond=None)
    return mu - (coef[0] * n + coef[1])


def _fit_line(n, mu, exponent, window):
    if n.size < MIN_POINTS:
        raise SpecPertError(WINDOW_TOO_SMALL, f"{n.size} points in window {window}; need {MIN_POINTS}")
    design = np.column_stack([n, np.ones_like(n)])
    (a, b), *_ = np.linalg.lstsq(design, mu, rcond=None)
    res = mu - (a * n + b)
    rmse = float(np.sqrt(np.mean(res ** 2)))
    level = EXACT_LEVEL * max(1.0, float(np.max(np.abs(mu))))
    if np.max(np.abs(res)) < level:
        return FitResult(float(a), float(b), float(exponent), None, float(np.max(np.abs(res))),
                         tuple(window), n, res, rmse, True)
    delta_hat = _envelope_exponent(n, _profile_remainder(n, mu))
    c_hat = float(np.max(np.abs(res) * n ** delta_hat))
    return FitResult(float(a), float(b), float(exponent), delta_hat, c_hat, tuple(window), n, res, rmse)


def _resolve_window(window, N):
    n_min, n_max = default_window(N) if window is None else (int(window[0]), int(window[1]))
    if n_min < 2 or n_max > N or n_max < n_min:
        raise SpecPertError(WINDOW_TOO_SMALL, f"window ({n_min}, {n_max}) invalid for N={N}")
    return n_min, n_max


def fit_two_term(values, exponent, window=None):
    """Fit ``mu_n = a n + b`` on the 1-based index window ``(n_min, n_max)``.

    ``delta_hat`` is the log-log slope of the suffix-maximum envelope of the
    remainder left by the best ``a n + b + C n^-d`` fit; ``c_hat`` is then
    the smallest constant with ``|residual_n| <= c_hat n^-delta_hat`` on the
    window, so the certificate holds by construction.
    """
    mu_all = _linearise(values, exponent)
    n_min, n_max = _resolve_window(window, mu_all.size)
    n = np.arange(n_min, n_max + 1, dtype=np.float64)
    return _fit_line(n, mu_all[n_min - 1:n_max], exponent, (n_min, n_max))


def fit_two_sequence(values, exponent, window=None):
    """Separate fits of ``mu_r = a r + b_1`` (odd ranks) and ``a r + b_2`` (even ranks).

    ``(2n - 1) a + b_1`` at odd rank ``r = 2n - 1`` is just ``a r + b_1``, so
    both fits regress on the rank itself; the window is in ranks.
    """
    mu_all = _linearise(values, exponent)
    n_min, n_max = _resolve_window(window, mu_all.size)
    r = np.arange(n_min, n_max + 1)
    fits = []
    for parity in (1, 0):
        rr = r[r % 2 == parity].astype(np.float64)
        fits.append(_fit_line(rr, mu_all[rr.astype(int) - 1], exponent, (n_min, n_max)))
    return TwoSequenceFit(*fits)


def estimate_exponent(values):
    """Recover B from the log-log slope of the upper half of the sequence."""
    values = np.asarray(values, dtype=np.float64)
    if values.size < 20:
        raise ValueError("need at least 20 values")
    if np.any(~(values > 0)):
        raise SpecPertError(NONPOSITIVE_VALUE, "all values must be positive")
    N = values.size
    n = np.arange(N // 2 + 1, N + 1, dtype=np.float64)
    slope = np.polyfit(np.log(n), np.log(values[N // 2:]), 1)[0]
    return float(-slope)


def compare_fits(base, perturbed, tol_a=None, tol_b=None):
    """Preserved iff ``|da| <= tol_a`` and ``|db| <= tol_b``.

    Defaults: ``tol_a = 5e-3 a_base``, ``tol_b = 5e-2 max(1, |b_base|)``.
    """
    if not math.isclose(base.exponent, perturbed.exponent, rel_tol=1e-12):
        raise SpecPertError(INCOMPATIBLE_FITS, f"exponents {base.exponent} and {perturbed.exponent} differ")
    tol_a = 5e-3 * abs(base.a_hat) if tol_a is None else float(tol_a)
    tol_b = 5e-2 * max(1.0, abs(base.b_hat)) if tol_b is None else float(tol_b)
    da = perturbed.a_hat - base.a_hat
    db = perturbed.b_hat - base.b_hat
    return ComparisonVerdict(float(da), float(db), bool(abs(da) <= tol_a and abs(db) <= tol_b), tol_a, tol_b)
