"""Pure-Python/numpy fallback for the compiled kernels in ``_kernels.pyx``.

Same names, signatures and return conventions. Vectorised where numpy makes
that cheap; the scalar loops (QL sweeps, Sturm counts) stay in Python and are
only practical for n of a few hundred.
"""
import math

import numpy as np

EPS = np.finfo(np.float64).eps
TINY = np.finfo(np.float64).tiny


def tridiagonalize(a):
    """Householder reduction ``a = q @ T @ q.T``; returns ``(d, e, q)``.

    ``e[i]`` couples rows ``i - 1`` and ``i``; ``e[0] == 0``.
    """
    t = np.array(a, dtype=np.float64, copy=True)
    n = t.shape[0]
    q = np.eye(n)
    for k in range(n - 2):
        x = t[k + 1:, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        if x[0] > 0:
            alpha = -alpha
        v = x.copy()
        v[0] -= alpha
        vnorm2 = v @ v
        if vnorm2 == 0.0:
            continue
        beta = 2.0 / vnorm2
        # two-sided update of the trailing block with H = I - beta v v^T
        sub = t[k + 1:, k + 1:]
        p = beta * (sub @ v)
        w = p - (0.5 * beta * (p @ v)) * v
        sub -= np.outer(v, w) + np.outer(w, v)
        t[k + 1:, k] = 0.0
        t[k, k + 1:] = 0.0
        t[k + 1, k] = alpha
        t[k, k + 1] = alpha
        q[:, k + 1:] -= beta * np.outer(q[:, k + 1:] @ v, v)
    d = np.diag(t).copy()
    e = np.zeros(n)
    if n > 1:
        e[1:] = np.diag(t, -1)
    return d, e, q


def tql2(d, e, q, max_iter=64):
    """Implicit-shift QL; returns ``(values, vectors, info)`` with info -1 on success."""
    d = np.array(d, dtype=np.float64, copy=True)
    e = np.array(e, dtype=np.float64, copy=True)
    zt = np.ascontiguousarray(np.asarray(q, dtype=np.float64).T).copy()
    n = d.shape[0]
    if n:
        e[:-1] = e[1:]
        e[-1] = 0.0
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= EPS * dd:
                    break
                m += 1
            if m == l:
                break
            if it == max_iter:
                return d, zt.T.copy(), l
            it += 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            underflow = False
            for i in range(m - 1, l - 1, -1):
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                upper = zt[i + 1].copy()
                zt[i + 1] = s * zt[i] + c * upper
                zt[i] = c * zt[i] - s * upper
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return d, zt.T.copy(), -1


def _count_below(d, e2, x, pivmin):
    cnt = 0
    q = d[0] - x
    if abs(q) < pivmin:
        q = -pivmin
    if q < 0.0:
        cnt += 1
    for i in range(1, len(d)):
        q = d[i] - x - e2[i] / q
        if abs(q) < pivmin:
            q = -pivmin
        if q < 0.0:
            cnt += 1
    return cnt


def sturm_count(d, e, x):
    """Number of eigenvalues of the tridiagonal ``(d, e)`` strictly below ``x``."""
    d = [float(v) for v in d]
    e2 = [float(v) ** 2 for v in e]
    pivmin = TINY * max(1.0, max(e2) if e2 else 1.0)
    return _count_below(d, e2, float(x), pivmin)


def bisect_eigenvalues(d, e):
    """All eigenvalues of the tridiagonal ``(d, e)``, ascending, by Sturm bisection."""
    d = np.asarray(d, dtype=np.float64)
    e = np.asarray(e, dtype=np.float64)
    n = d.shape[0]
    if n == 0:
        return np.empty(0)
    rad = np.abs(e)
    rad[:-1] += np.abs(e[1:])
    lo0 = float((d - rad).min())
    hi0 = float((d + rad).max())
    span = max(abs(lo0), abs(hi0))
    e2 = (e * e).tolist()
    pivmin = TINY * max(1.0, max(e2))
    abstol = 2.0 * pivmin
    lo0 -= 2.0 * EPS * span + pivmin
    hi0 += 2.0 * EPS * span + pivmin
    dl = d.tolist()
    out = np.empty(n)
    for k in range(n):
        lo, hi = lo0, hi0
        while hi - lo > abstol + 2.0 * EPS * max(abs(lo), abs(hi)):
            mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:
                break
            if _count_below(dl, e2, mid, pivmin) > k:
                hi = mid
            else:
                lo = mid
        out[k] = 0.5 * (lo + hi)
    return out


def cholesky(a, floor):
    """Lower factor; returns ``(L, info)`` with info -1 on success, else failing column."""
    L = np.array(a, dtype=np.float64, copy=True)
    n = L.shape[0]
    for j in range(n):
        s = L[j, j] - L[j, :j] @ L[j, :j]
        if not s > floor:
            return L, j
        s = math.sqrt(s)
        L[j, j] = s
        L[j + 1:, j] = (L[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / s
    return np.tril(L), -1
