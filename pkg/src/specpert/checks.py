"""Numerical validators for the perturbation inequalities.

Every inequality with an unspecified constant is turned into a falsifiable
test: the smallest admissible constant over the tested indices is reported,
and a log-log regression slope guards against that constant secretly growing
with n.
"""
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.integrate import quad
from scipy.special import zeta

from .errors import (
    DEGENERATE_GAP,
    INVALID_INDEX,
    WRONG_SIGN,
    ZERO_VECTOR,
    SpecPertError,
)
from .gen_eigen import HEAD, TAIL, HMetric, Window, projected_solve, refine_eigenpair
from .linalg import cholesky
from .models import AsymptoticLaw, PerturbationMatrix, SpectralModel

SLOPE_ALLOWANCE = 0.1
TAIL_FACTOR = 100
QUAD_ABSTOL = 1e-10
EPS = np.finfo(np.float64).eps


@dataclass
class CheckReport:
    """Outcome of one validator.

    ``passed`` holds iff every margin is ``>= -slack`` and every entry of
    ``criteria`` (global conditions such as decay slopes) is true.
    """

    check_name: str
    passed: bool
    fitted_constants: dict = field(default_factory=dict)
    indices: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    margins: np.ndarray = field(default_factory=lambda: np.empty(0))
    worst_index: int = 0
    notes: str = ""
    criteria: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)
    slack: float = 0.0

    def to_dict(self):
        return {
            "check_name": self.check_name,
            "passed": self.passed,
            "fitted_constants": {k: _jsonable(v) for k, v in sorted(self.fitted_constants.items())},
            "per_index_margins": [[int(n), _jsonable(m)] for n, m in zip(self.indices, self.margins)],
            "worst_index": int(self.worst_index),
            "notes": self.notes,
            "criteria": {k: bool(v) for k, v in sorted(self.criteria.items())},
            "flags": list(self.flags),
            "slack": self.slack,
        }

    def summary(self):
        state = "PASS" if self.passed else "FAIL"
        consts = ", ".join(f"{k}={_fmt(v)}" for k, v in sorted(self.fitted_constants.items()))
        return f"[{state}] {self.check_name}: {consts}" + (f" flags={self.flags}" if self.flags else "")


def _jsonable(v):
    if v is None:
        return None
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    v = float(v)
    return v if math.isfinite(v) else str(v)


def _fmt(v):
    try:
        return f"{float(v):.4g}"
    except (TypeError, ValueError):
        return str(v)


def _report(name, indices, margins, constants, criteria=None, notes="", flags=None, slack=0.0):
    indices = np.asarray(indices, dtype=int)
    margins = np.asarray(margins, dtype=np.float64)
    criteria = criteria or {}
    ok = bool(np.all(margins >= -slack)) and all(criteria.values())
    worst = int(indices[np.argmin(margins)]) if margins.size else 0
    return CheckReport(name, ok, constants, indices, margins, worst, notes, criteria, list(flags or []), slack)


def loglog_slope(n, y):
    """Least-squares slope of log y on log n over entries with y > 0; -inf if < 2 such points."""
    n = np.asarray(n, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    keep = y > 0
    if keep.sum() < 2:
        return -math.inf
    return float(np.polyfit(np.log(n[keep]), np.log(y[keep]), 1)[0])


# --- hypotheses -------------------------------------------------------------

def check_lemma1_condition(B, delta):
    """``||B h_n|| <= c n^-(1+delta)``: fitted ``c`` plus decay-slope criterion."""
    r = np.linalg.norm(B.array, axis=0)
    n = np.arange(1, B.dim + 1, dtype=np.float64)
    scaled = r * n ** (1.0 + delta)
    c_star = float(np.max(scaled))
    slope = loglog_slope(n, r)
    limit = -(1.0 + delta) + SLOPE_ALLOWANCE
    margins = 1.0 - scaled / c_star if c_star > 0 else np.ones_like(n)
    return _report("lemma1_condition", n, margins, {"c": c_star, "slope": slope, "slope_limit": limit},
                   {"decay_slope": slope <= limit})


def check_theorem1_condition(B, delta):
    """``|(B h_n, h_m)| <= c (nm)^-((1+delta)/2)``: fitted ``c`` plus row-decay slope."""
    n = np.arange(1, B.dim + 1, dtype=np.float64)
    w = n ** ((1.0 + delta) / 2.0)
    scaled = np.abs(B.array) * np.outer(w, w)
    c_star = float(np.max(scaled))
    row = np.max(np.abs(B.array) * w[None, :], axis=1)
    slope = loglog_slope(n, row)
    limit = -(1.0 + delta) / 2.0 + SLOPE_ALLOWANCE
    row_scaled = np.max(scaled, axis=1)
    margins = 1.0 - row_scaled / c_star if c_star > 0 else np.ones_like(n)
    return _report("theorem1_condition", n, margins, {"c": c_star, "slope": slope, "slope_limit": limit},
                   {"c_finite": math.isfinite(c_star), "decay_slope": slope <= limit})


# --- localisation -----------------------------------------------------------

def _check_index(n, N):
    if not 1 <= n <= N:
        raise SpecPertError(INVALID_INDEX, f"index {n} outside 1..{N}")


def residual_radius(K, B, n, delta=None, c1=None):
    """``|||Bb h_n - lambda_n h_n||| / |||h_n|||`` with ``Bb = (I+B)^{-1} K``.

    ``bound = c1 lambda_n n^-(1+delta)``; by default ``c1`` is the fitted
    column-norm constant divided by ``lambda_min(I + B)``, which makes the bound rigorous.
    """
    _check_index(n, K.dim)
    metric = HMetric.from_perturbation(B)
    e = np.zeros(K.dim)
    e[n - 1] = 1.0
    r = metric.solve(K.lambdas * e) - K.lambdas[n - 1] * e
    radius = metric.norm(r) / metric.norm(e)
    bound = math.nan
    if delta is not None:
        if c1 is None:
            c1 = _lemma1_c1(B, delta)
        bound = c1 * K.lambdas[n - 1] * n ** (-(1.0 + delta))
    return float(radius), float(bound)


def _lemma1_c1(B, delta):
    lam_min = float(sla.eigvalsh(np.eye(B.dim) + B.array, subset_by_index=[0, 0])[0])
    return check_lemma1_condition(B, delta).fitted_constants["c"] / lam_min


def residual_radii(K, B):
    """All residual radii at once: ``lambda_n ||L^{-1} B e_n|| / sqrt(1 + b_nn)`` with ``I + B = L L^T``."""
    L = cholesky(np.eye(B.dim) + B.array)
    y = sla.solve_triangular(L, B.array, lower=True, check_finite=False)
    return K.lambdas * np.linalg.norm(y, axis=0) / np.sqrt(1.0 + np.diag(B.array))


def _intervals_disjoint_from(lam, c2, delta):
    """Smallest 1-based n with Delta_k and Delta_{k+1} disjoint for every k >= n."""
    n = np.arange(1, lam.size + 1, dtype=np.float64)
    half = c2 * n ** (-(1.0 + delta))
    lower = lam * (1.0 - half)
    upper = lam * (1.0 + half)
    overlap = upper[1:] > lower[:-1]
    if not overlap.any():
        return 1
    return int(np.flatnonzero(overlap)[-1]) + 2


def localization_check(base, perturbed, delta, *, rtol=100 * EPS):
    """Each ``lambda_n`` has a perturbed eigenvalue within its residual radius;
    the intervals ``Delta_n`` with fitted ``c2`` separate from some ``n0 < N/2``.

    ``rtol * lambda_n`` is allowed on top of the radius for floating point.
    """
    if perturbed.metric is None or perturbed.values.size != base.dim:
        raise ValueError("localization_check needs a full (unwindowed) perturbed spectrum")
    B = PerturbationMatrix(perturbed.metric - np.eye(base.dim), {"recipe": "from_metric"})
    lam = base.lambdas
    pert = np.sort(perturbed.values)
    radii = residual_radii(base, B)
    pos = np.clip(np.searchsorted(pert, lam), 1, pert.size - 1)
    dist = np.minimum(np.abs(pert[pos] - lam), np.abs(pert[pos - 1] - lam))
    if pert.size == 1:
        dist = np.abs(pert[0] - lam)
    margins = (radii + rtol * lam - dist) / lam

    n = np.arange(1, base.dim + 1, dtype=np.float64)
    rel = np.abs(perturbed.values / lam - 1.0)
    c2 = float(np.max(rel * n ** (1.0 + delta)))
    n0 = _intervals_disjoint_from(lam, c2, delta) if c2 > 0 else 1
    resolved = rel > 1e-12
    slope = loglog_slope(n[resolved], rel[resolved])
    limit = -(1.0 + delta) + SLOPE_ALLOWANCE
    criteria = {"n0_below_half": n0 < base.dim / 2, "decay_slope": slope <= limit}
    notes = "slope fitted on indices with |lam_n/lambda_n - 1| > 1e-12"
    return _report("localization", n, margins, {"c2": c2, "n0": n0, "slope": slope, "slope_limit": limit},
                   criteria, notes)


# --- min-max sandwich -------------------------------------------------------

def sandwich_check(K, B, *, slack=1e-10, backend="lapack"):
    """``lam_n(B_plus) <= lam_n(B) <= lam_n(B_minus)`` at every index."""
    from .gen_eigen import solve_generalized
    from .models import split_sign

    bp, bm = split_sign(B)
    lam = solve_generalized(K, B, vectors=False, backend=backend).values
    lam_p = solve_generalized(K, bp, vectors=False, backend=backend).values
    lam_m = solve_generalized(K, bm, vectors=False, backend=backend).values
    margins = np.minimum(lam - lam_p, lam_m - lam) / lam
    n = np.arange(1, K.dim + 1)
    consts = {"max_gap_plus": float(np.max((lam - lam_p) / lam)),
              "max_gap_minus": float(np.max((lam_m - lam) / lam))}
    return _report("sandwich", n, margins, consts, slack=slack)


# --- Rayleigh quotient machinery --------------------------------------------

@dataclass(frozen=True)
class RayleighPoint:
    """Extremiser of the Rayleigh quotient over a HEAD or TAIL window."""

    x: np.ndarray
    J: float
    a_coeffs: np.ndarray
    window: Window


def rayleigh(K, B, x):
    """``J(x) = (K x, x) / ((x, x) + (B x, x))``."""
    x = np.asarray(x, dtype=np.float64)
    denom = x @ x + x @ (B.array @ x)
    if not np.any(x):
        raise SpecPertError(ZERO_VECTOR, "Rayleigh quotient of the zero vector")
    return float((K.lambdas * x) @ x / denom)


def _extremizer(K, B, window, column, refine):
    spec = projected_solve(K, B, window)
    if refine:
        idx = spec.indices
        sub, J = refine_eigenpair(K.lambdas[idx], B.array[np.ix_(idx, idx)],
                                  spec.vectors[:, column], spec.values[column])
        x = np.zeros(K.dim)
        x[idx] = sub
    else:
        x = spec.embed(column)
    return RayleighPoint(x, rayleigh(K, B, x), np.abs(x), window)


def head_extremizer(K, B, n, *, refine=True):
    """Minimiser of J over ``span{h_1..h_n}``, Newton-refined unless ``refine=False``."""
    return _extremizer(K, B, Window(HEAD, n), -1, refine)


def tail_extremizer(K, B, n, *, refine=True):
    """Maximiser of J over ``span{h_n..h_N}``, Newton-refined unless ``refine=False``."""
    return _extremizer(K, B, Window(TAIL, n), 0, refine)


def _window_ks(window, N):
    n = window.n
    if window.side == HEAD:
        return np.arange(1, n)
    return np.arange(n + 1, N + 1)


def stationarity_check(K, B, point, window=None, *, tol=1e-8, gap_floor=1e-13):
    """``(x, h_k) = J / (lambda_k - J) * (B x, h_k)`` for k < n (HEAD) or k > n (TAIL).

    Indices with ``|lambda_k - J| < gap_floor * lambda_1`` are skipped and
    flagged DEGENERATE.
    """
    window = window or point.window
    ks = _window_ks(window, K.dim)
    x, J = point.x, point.J
    bx = B.array @ x
    lam_k = K.lambdas[ks - 1]
    gap = lam_k - J
    ok = np.abs(gap) >= gap_floor * K.lambdas[0]
    flags = [] if ok.all() else ["DEGENERATE"]
    ks, gap = ks[ok], gap[ok]
    lhs = x[ks - 1]
    rhs = J / gap * bx[ks - 1]
    scale = np.maximum(np.abs(lhs), np.abs(rhs))
    resid = np.divide(np.abs(lhs - rhs), scale, out=np.zeros_like(scale), where=scale > 0)
    worst = float(resid.max()) if resid.size else 0.0
    notes = f"skipped {int((~ok).sum())} degenerate index(es)" if flags else ""
    return _report(f"stationarity_{window.side.lower()}", ks, tol - resid,
                   {"max_relative_residual": worst, "J": J}, notes=notes, flags=flags)


# --- sum bounds -------------------------------------------------------------

def _lambda_source(source, kmax, exponent=None):
    """Eigenvalues 1..kmax from a law, or from a model extended by its law if needed."""
    if isinstance(source, AsymptoticLaw):
        return source.values(np.arange(1, kmax + 1)), source.exponent, source
    if isinstance(source, SpectralModel):
        law = source.law
        B = exponent if exponent is not None else (law.exponent if law is not None else None)
        if B is None:
            raise ValueError("exponent required for a model without a law")
        if kmax <= source.dim:
            return source.lambdas[:kmax], B, law
        if law is None:
            return source.lambdas, B, None
        exact = AsymptoticLaw(law.a, law.b, law.exponent)
        ext = exact.values(np.arange(source.dim + 1, kmax + 1))
        return np.concatenate([source.lambdas, ext]), B, law
    raise TypeError(f"unsupported eigenvalue source {type(source).__name__}")


def _quad(f, lo, hi):
    val, _ = quad(f, lo, hi, epsabs=QUAD_ABSTOL, epsrel=1e-12, limit=500)
    return float(val)


@dataclass(frozen=True)
class FrakC:
    """Value of the weighted ratio sum and its quadrature-based upper bound.

    ``bound = c * kappa * (n^-delta * J + n^-min(1,B) * S)`` where ``kappa``
    is the fitted constant of the ratio estimate, ``J`` the integral plus
    endpoint corrections and ``S = sum k^-(1+delta)``; ``c_integral`` is
    ``bound * n^min(1,delta,B) / log n``.
    """

    value: float
    bound: float
    kappa: float
    integral: float
    c_integral: float
    truncated_at: int = 0

    def __iter__(self):
        return iter((self.value, self.bound))


def frak_C(source, n, delta, c=1.0, side=HEAD, *, exponent=None):
    """``sum_k c lambda_n / |lambda_k - lambda_n| k^-(1+delta)`` over k < n (HEAD) or k > n (TAIL).

    TAIL sums stop at ``k = 100 n`` (or N for a model without a law) and add
    ``rho_K K^-delta / delta`` for the rest, ``rho_K`` being the ratio at K.
    """
    n = int(n)
    if n < 1:
        raise SpecPertError(INVALID_INDEX, "n must be >= 1")
    if side == HEAD:
        lam, B, _ = _lambda_source(source, n, exponent)
        if lam.size < n:
            raise SpecPertError(INVALID_INDEX, f"n={n} beyond available eigenvalues")
        k = np.arange(1, n, dtype=np.float64)
        gaps = lam[:-1] - lam[n - 1]
    else:
        lam, B, law = _lambda_source(source, TAIL_FACTOR * n, exponent)
        if lam.size < n:
            raise SpecPertError(INVALID_INDEX, f"n={n} beyond available eigenvalues")
        k = np.arange(n + 1, lam.size + 1, dtype=np.float64)
        gaps = lam[n - 1] - lam[n:]
    if np.any(gaps == 0):
        raise SpecPertError(DEGENERATE_GAP, f"repeated eigenvalue next to index {n}")
    lam_n = lam[n - 1]
    ratio = lam_n / gaps
    terms = ratio * k ** (-(1.0 + delta))
    value = c * float(terms.sum())
    kmax = int(k[-1]) if k.size else n
    if side == TAIL and k.size:
        value += c * float(ratio[-1]) * kmax ** (-delta) / delta

    m_ab = min(1.0, B)
    p = B - 1.0 - delta
    t = k / n
    if side == HEAD:
        comparator = t ** B / (1.0 - t ** B) + n ** (-m_ab)
        f = lambda s: s ** p / (1.0 - s ** B)
        integral = 0.0
        if n >= 3:
            integral = _quad(f, 1.0 / n, 1.0 - 1.0 / n)
        if n >= 2:
            # endpoint terms: the Riemann sum of a quasi-convex f exceeds its integral by at most these
            integral += (f(1.0 / n) + f(1.0 - 1.0 / n)) / n
        zsum = float(np.sum(k ** (-(1.0 + delta))))
    else:
        comparator = t ** B / (t ** B - 1.0) + n ** (-m_ab)
        f = lambda s: s ** p / (s ** B - 1.0)
        top = float(TAIL_FACTOR)
        integral = _quad(f, 1.0 + 1.0 / n, top) + f(1.0 + 1.0 / n) / n
        integral += top ** (-delta) / (delta * (1.0 - top ** (-B)))
        zsum = float(zeta(1.0 + delta, n + 1))
    kappa = float(np.max(ratio / comparator)) if k.size else 0.0
    bound = c * kappa * (n ** (-delta) * integral + n ** (-m_ab) * zsum)
    m = min(1.0, delta, B)
    c_int = bound * n ** m / math.log(n) if n > 1 else math.inf
    return FrakC(value, bound, kappa, integral, c_int, kmax)


def _unit(point):
    norm = np.linalg.norm(point.a_coeffs)
    if norm == 0:
        raise SpecPertError(ZERO_VECTOR, "extremiser is zero")
    return point.a_coeffs / norm


def coefficient_sum_check(K, B, point, delta, window=None, *, c=None, rtol=1e-9):
    """Coefficient inequalities behind the sum bounds, on Euclidean-unit coefficients.

    Checks, for the HEAD (TAIL) window at n:
      * per-k: ``a_k <= lambda_n / |lambda_k - lambda_n| * sum_m a_m c (km)^-(1+delta)/2``
      * ``A <= A frak_C + a_n n^-(1+delta)/2`` (TAIL also with ``1`` for ``a_n``)
      * if ``frak_C < 1/2``: ``A <= a_n n^-(1+delta)/2 / (1 - frak_C)`` (TAIL: ``1`` for ``a_n``)
    ``c`` defaults to the fitted entrywise-decay constant. ``frak_C >= 1`` is
    flagged FRAK_C_TOO_LARGE and the conclusion step is skipped.
    """
    window = window or point.window
    n = window.n
    N = K.dim
    if c is None:
        c = check_theorem1_condition(B, delta).fitted_constants["c"]
    a = _unit(point)
    idx = window.indices(N)
    k_all = idx + 1.0
    w = k_all ** (-(1.0 + delta) / 2.0)
    A = float(np.sum(a[idx] * w))
    a_n = float(a[n - 1])
    wn = n ** (-(1.0 + delta) / 2.0)

    fc = frak_C(K, n, delta, c, window.side)
    flags, notes = [], []
    if window.side == HEAD and point.J > K.lambdas[n - 1] * (1 + 1e-12):
        notes.append("J exceeds lambda_n; B is not positive on this window")
    if window.side == TAIL and point.J < K.lambdas[n - 1] * (1 - 1e-12):
        notes.append("J below lambda_n; B is not negative on this window")

    ks = _window_ks(window, N)
    lam_n = K.lambdas[n - 1]
    ratio = lam_n / np.abs(K.lambdas[ks - 1] - lam_n)
    rhs_k = ratio * c * (ks ** (-(1.0 + delta) / 2.0)) * A
    per_k = (rhs_k - a[ks - 1]) + rtol * np.maximum(rhs_k, a[ks - 1])

    chain_rhs = A * fc.value + a_n * wn
    criteria = {"sum_inequality": A <= chain_rhs * (1 + rtol)}
    if window.side == TAIL:
        criteria["sum_inequality_unit"] = A <= (A * fc.value + wn) * (1 + rtol)
    consts = {"A": A, "frak_C": fc.value, "frak_C_bound": fc.bound, "a_n": a_n, "c": c}
    if fc.value >= 1.0:
        flags.append("FRAK_C_TOO_LARGE")
    elif fc.value < 0.5:
        lead = a_n if window.side == HEAD else 1.0
        conclusion = lead * wn / (1.0 - fc.value)
        consts["conclusion_rhs"] = conclusion
        consts["conclusion_constant"] = A / wn if window.side == TAIL else (A / (a_n * wn) if a_n > 0 else 0.0)
        criteria["conclusion"] = A <= conclusion * (1 + rtol)
    return _report(f"coefficient_sum_{window.side.lower()}", ks, per_k, consts, criteria,
                   "; ".join(notes), flags)


# --- extremal Rayleigh values -----------------------------------------------

def sign_of(B, tol=1e-12):
    """'POSITIVE', 'NEGATIVE', 'ZERO' or 'MIXED' from the spectrum of B."""
    w = np.linalg.eigvalsh(B.array)
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    if scale == 0.0:
        return "ZERO"
    if w.min() >= -tol * scale:
        return "POSITIVE"
    if w.max() <= tol * scale:
        return "NEGATIVE"
    return "MIXED"


def extremal_J_check(K, B, delta, ns):
    """``J(x_hat) >= lambda_n (1 - c n^-(1+delta))`` for B >= 0 (HEAD minimiser) or
    ``J(x_tilde) <= lambda_n (1 + c n^-(1+delta))`` for B <= 0 (TAIL maximiser).

    The fitted ``c`` must not grow: slope of ``|J/lambda_n - 1| n^(1+delta)``
    against n must stay below 0.1. The one-sided sign (``J <= lambda_n`` for
    the head branch, ``>=`` for the tail) is a per-index margin.
    """
    sign = sign_of(B)
    if sign == "MIXED":
        raise SpecPertError(WRONG_SIGN, "B is not sign-definite; split it first")
    ns = np.asarray(sorted(int(v) for v in ns), dtype=int)
    for v in ns:
        _check_index(int(v), K.dim)
    branch = TAIL if sign == "NEGATIVE" else HEAD
    lam = K.lambdas[ns - 1]
    if branch == HEAD:
        J = np.array([head_extremizer(K, B, int(v)).J for v in ns])
        signed = (lam - J) / lam
    else:
        J = np.array([tail_extremizer(K, B, int(v)).J for v in ns])
        signed = (J - lam) / lam
    scaled = np.abs(signed) * ns ** (1.0 + delta)
    c_fit = float(np.max(scaled))
    slope = loglog_slope(ns, scaled)
    margins = signed + 100 * EPS
    return _report(f"extremal_J_{branch.lower()}", ns, margins,
                   {"c": c_fit, "slope": slope, "slope_limit": SLOPE_ALLOWANCE},
                   {"bounded": slope <= SLOPE_ALLOWANCE}, notes=f"B sign {sign}")


# --- homotopy ---------------------------------------------------------------

def homotopy_check(K, B, steps=11, *, margin=0.1, workers=1, backend="lapack"):
    """Eigenvalue paths of ``K h = lam (I + eps B) h`` over eps in [0, 1].

    Per-index margin: ``1 - max_jump / bound`` with the first-order bound
    from :func:`homotopy_jump_bound`. For ``B >= 0`` (``<= 0``) paths must
    also be nonincreasing (nondecreasing) up to ``100 eps lambda_n``.
    Mixed-sign B gets the bound inflated by ``1 / (1 - ||B||)`` since
    ``lam_n(eps)`` may exceed ``lambda_n``.
    """
    from .gen_eigen import homotopy_jump_bound, homotopy_track

    res = homotopy_track(K, B, steps, workers=workers, backend=backend)
    sign = sign_of(B)
    bnorm = float(np.linalg.norm(B.array, 2))
    if bnorm >= 1.0:
        n = np.arange(1, K.dim + 1)
        return _report("homotopy", n, np.zeros(K.dim), {"steps": steps, "norm_B": bnorm},
                       {"bound_applicable": False}, notes="||B||_2 >= 1: no first-order jump bound")
    bound = homotopy_jump_bound(K, B, steps, margin)
    if sign == "MIXED":
        bound = bound / (1.0 - bnorm)
    diffs = np.diff(res.paths, axis=0)
    tol = 100 * EPS * K.lambdas
    criteria = {}
    if sign == "POSITIVE":
        criteria["monotone_nonincreasing"] = bool(np.all(diffs <= tol))
    elif sign == "NEGATIVE":
        criteria["monotone_nondecreasing"] = bool(np.all(diffs >= -tol))
    with np.errstate(divide="ignore", invalid="ignore"):
        margins = np.where(bound > 0, 1.0 - res.max_jumps / bound, 0.0)
    if sign == "ZERO":
        margins = np.where(res.max_jumps == 0, 0.0, -1.0)
    n = np.arange(1, K.dim + 1)
    flags = ["CROSSING"] if res.crossing else []
    return _report("homotopy", n, margins,
                   {"steps": steps, "norm_B": bnorm, "max_relative_jump": float(np.max(res.max_jumps / K.lambdas))},
                   criteria, notes=f"B sign {sign}", flags=flags)


def frak_C_check(source, delta, ns, *, c=1.0, side=HEAD, ratio_limit=10.0, exponent=None):
    """``frak_C(n) <= C_I log(n) / n^m`` on a grid, ``m = min(1, delta, B)``.

    ``C_I`` is the largest quadrature constant ``c_integral`` over the grid.
    Per-index margins are relative to that envelope; criteria require
    ``value <= bound`` everywhere and ``value n^m / log n`` to vary by at
    most ``ratio_limit`` over the grid.
    """
    ns = np.asarray(sorted(int(v) for v in ns), dtype=int)
    if ns.size == 0 or ns[0] < 2:
        raise SpecPertError(INVALID_INDEX, "frak_C grid needs indices >= 2")
    fcs = [frak_C(source, int(v), delta, c, side, exponent=exponent) for v in ns]
    law = source if isinstance(source, AsymptoticLaw) else source.law
    if exponent is None and law is None:
        raise ValueError("exponent required for a model without a law")
    B = exponent if exponent is not None else law.exponent
    m = min(1.0, delta, B)
    values = np.array([f.value for f in fcs])
    bounds = np.array([f.bound for f in fcs])
    c_I = float(max(f.c_integral for f in fcs))
    shape = np.log(ns) / ns ** m
    envelope = c_I * shape
    normalized = values / shape
    ratio = float(normalized.max() / normalized.min()) if normalized.min() > 0 else math.inf
    margins = (envelope - values) / envelope
    consts = {"C_I": c_I, "m": m, "normalized_ratio": ratio, "max_value": float(values.max())}
    criteria = {"below_quadrature_bound": bool(np.all(values <= bounds * (1 + 1e-12))),
                "normalized_bounded": ratio <= ratio_limit}
    return _report(f"frak_C_{side.lower()}", ns, margins, consts, criteria)
