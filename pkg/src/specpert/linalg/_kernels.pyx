# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled dense symmetric kernels.

Mirrors ``_kernels_py`` function for function; the package picks one of the
two at import time.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, hypot, copysign

cnp.import_array()

cdef double EPS = np.finfo(np.float64).eps
cdef double TINY = np.finfo(np.float64).tiny


def tridiagonalize(a):
    """Householder reduction ``a = q @ T @ q.T``.

    Returns ``(d, e, q)`` with ``d`` the diagonal of T and ``e[i]`` the entry
    coupling rows ``i - 1`` and ``i`` (``e[0] == 0``).
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=2] za = np.array(a, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] z = za
    cdef Py_ssize_t n = z.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] da = np.zeros(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ea = np.zeros(n)
    cdef double[::1] d = da
    cdef double[::1] e = ea
    cdef Py_ssize_t i, j, k, l
    cdef double scale, h, f, g, hh

    for i in range(n - 1, 0, -1):
        l = i - 1
        h = 0.0
        scale = 0.0
        if l > 0:
            for k in range(l + 1):
                scale += fabs(z[i, k])
            if scale == 0.0:
                e[i] = z[i, l]
            else:
                for k in range(l + 1):
                    z[i, k] /= scale
                    h += z[i, k] * z[i, k]
                f = z[i, l]
                g = -sqrt(h) if f >= 0.0 else sqrt(h)
                e[i] = scale * g
                h -= f * g
                z[i, l] = f - g
                f = 0.0
                for j in range(l + 1):
                    z[j, i] = z[i, j] / h
                    g = 0.0
                    for k in range(j + 1):
                        g += z[j, k] * z[i, k]
                    for k in range(j + 1, l + 1):
                        g += z[k, j] * z[i, k]
                    e[j] = g / h
                    f += e[j] * z[i, j]
                hh = f / (h + h)
                for j in range(l + 1):
                    f = z[i, j]
                    g = e[j] - hh * f
                    e[j] = g
                    for k in range(j + 1):
                        z[j, k] -= f * e[k] + g * z[i, k]
        else:
            e[i] = z[i, l]
        d[i] = h

    d[0] = 0.0
    e[0] = 0.0
    for i in range(n):
        if d[i] != 0.0:
            for j in range(i):
                g = 0.0
                for k in range(i):
                    g += z[i, k] * z[k, j]
                for k in range(i):
                    z[k, j] -= g * z[k, i]
        d[i] = z[i, i]
        z[i, i] = 1.0
        for j in range(i):
            z[j, i] = 0.0
            z[i, j] = 0.0
    return da, ea, za


def tql2(d, e, q, int max_iter=64):
    """Implicit-shift QL on the tridiagonal ``(d, e)``.

    ``q`` holds the accumulated transform from ``tridiagonalize``. Returns
    ``(values, vectors, info)``; ``info`` is -1 on success, otherwise the
    index whose iteration budget ran out.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=1] da = np.array(d, dtype=np.float64, copy=True)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ea = np.array(e, dtype=np.float64, copy=True)
    # rows of zt are the eigenvectors, kept contiguous for the rotation loop
    cdef cnp.ndarray[cnp.float64_t, ndim=2] zta = np.ascontiguousarray(np.asarray(q, dtype=np.float64).T).copy()
    cdef double[::1] dv = da
    cdef double[::1] ev = ea
    cdef double[:, ::1] zt = zta
    cdef Py_ssize_t n = dv.shape[0]
    cdef Py_ssize_t i, k, l, m
    cdef int it
    cdef double dd, g, r, s, c, p, f, b, t
    cdef bint underflow

    for i in range(1, n):
        ev[i - 1] = ev[i]
    if n > 0:
        ev[n - 1] = 0.0

    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = fabs(dv[m]) + fabs(dv[m + 1])
                if fabs(ev[m]) <= EPS * dd:
                    break
                m += 1
            if m == l:
                break
            if it == max_iter:
                return da, zta.T.copy(), l
            it += 1
            g = (dv[l + 1] - dv[l]) / (2.0 * ev[l])
            r = hypot(g, 1.0)
            g = dv[m] - dv[l] + ev[l] / (g + copysign(r, g))
            s = 1.0
            c = 1.0
            p = 0.0
            underflow = False
            i = m - 1
            while i >= l:
                f = s * ev[i]
                b = c * ev[i]
                r = hypot(f, g)
                ev[i + 1] = r
                if r == 0.0:
                    dv[i + 1] -= p
                    ev[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = dv[i + 1] - p
                r = (dv[i] - g) * s + 2.0 * c * b
                p = s * r
                dv[i + 1] = g + p
                g = c * r - b
                for k in range(n):
                    t = zt[i + 1, k]
                    zt[i + 1, k] = s * zt[i, k] + c * t
                    zt[i, k] = c * zt[i, k] - s * t
                i -= 1
            if underflow:
                continue
            dv[l] -= p
            ev[l] = g
            ev[m] = 0.0
    return da, zta.T.copy(), -1


cdef Py_ssize_t _count_below(double[::1] d, double[::1] e2, double x, double pivmin) nogil:
    cdef Py_ssize_t i, n = d.shape[0], cnt = 0
    cdef double q = d[0] - x
    if fabs(q) < pivmin:
        q = -pivmin
    if q < 0.0:
        cnt += 1
    for i in range(1, n):
        q = d[i] - x - e2[i] / q
        if fabs(q) < pivmin:
            q = -pivmin
        if q < 0.0:
            cnt += 1
    return cnt


def sturm_count(d, e, double x):
    """Number of eigenvalues of the tridiagonal ``(d, e)`` strictly below ``x``."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] da = np.ascontiguousarray(d, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] e2 = np.ascontiguousarray(np.asarray(e, dtype=np.float64) ** 2)
    cdef double pivmin = TINY * max(1.0, float(e2.max()) if e2.shape[0] else 1.0)
    return int(_count_below(da, e2, x, pivmin))


def bisect_eigenvalues(d, e):
    """All eigenvalues of the tridiagonal ``(d, e)``, ascending, by Sturm bisection."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] da = np.ascontiguousarray(d, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ea = np.ascontiguousarray(e, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] e2 = ea * ea
    cdef Py_ssize_t n = da.shape[0], k
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n)
    if n == 0:
        return out
    cdef cnp.ndarray[cnp.float64_t, ndim=1] rad = np.abs(ea)
    rad[:-1] += np.abs(ea[1:])
    cdef double lo0 = float((da - rad).min())
    cdef double hi0 = float((da + rad).max())
    cdef double span = max(fabs(lo0), fabs(hi0))
    cdef double pivmin = TINY * max(1.0, float(e2.max()))
    cdef double abstol = 2.0 * pivmin
    cdef double lo, hi, mid
    lo0 -= 2.0 * EPS * span + pivmin
    hi0 += 2.0 * EPS * span + pivmin
    cdef double[::1] dv = da
    cdef double[::1] e2v = e2
    for k in range(n):
        lo = lo0
        hi = hi0
        while hi - lo > abstol + 2.0 * EPS * max(fabs(lo), fabs(hi)):
            mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:
                break
            if _count_below(dv, e2v, mid, pivmin) > k:
                hi = mid
            else:
                lo = mid
        out[k] = 0.5 * (lo + hi)
    return out


def cholesky(a, double floor):
    """Lower factor ``L`` with ``a = L @ L.T``.

    Returns ``(L, info)``; ``info`` is -1 on success, otherwise the first
    column whose pivot fell to ``floor`` or below.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=2] la = np.array(a, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] L = la
    cdef Py_ssize_t n = L.shape[0], i, j, k
    cdef double s, t
    for j in range(n):
        s = L[j, j]
        for k in range(j):
            s -= L[j, k] * L[j, k]
        if not (s > floor):
            return la, j
        s = sqrt(s)
        L[j, j] = s
        for i in range(j + 1, n):
            t = L[i, j]
            for k in range(j):
                t -= L[i, k] * L[j, k]
            L[i, j] = t / s
    for i in range(n):
        for j in range(i + 1, n):
            L[i, j] = 0.0
    return la, -1
