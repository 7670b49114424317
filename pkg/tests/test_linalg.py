import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import random_spd, random_sym
from specpert.errors import NO_CONVERGENCE, NOT_FINITE, NOT_POSITIVE_DEFINITE, SpecPertError
from specpert.linalg import (
    COMPILED,
    H_METRIC,
    SymMatrix,
    cholesky,
    generalized_sym_eigen,
    sym_eigen,
    sym_eigvals_bisection,
)
from specpert.linalg import _kernels_py

BACKENDS = ["lapack", "native"]


def test_symmatrix_symmetrizes_and_freezes():
    m = SymMatrix([[1.0, 2.0], [4.0, 5.0]])
    assert m.n == 2
    assert m.entries[0, 1] == m.entries[1, 0] == 3.0
    with pytest.raises(ValueError):
        m.entries[0, 0] = 7.0


def test_symmatrix_rejects_nonfinite():
    with pytest.raises(SpecPertError) as exc:
        SymMatrix([[1.0, np.nan], [np.nan, 1.0]])
    assert exc.value.code == NOT_FINITE


# --- cholesky ---------------------------------------------------------------

@pytest.mark.parametrize("backend", BACKENDS)
def test_cholesky_identity(backend):
    np.testing.assert_array_equal(cholesky(np.eye(3), backend=backend), np.eye(3))


@pytest.mark.parametrize("backend", BACKENDS)
def test_cholesky_diagonal_square_roots(backend):
    np.testing.assert_allclose(cholesky(np.diag([4.0, 9.0]), backend=backend), np.diag([2.0, 3.0]), rtol=0, atol=1e-15)


@pytest.mark.parametrize("backend", BACKENDS)
def test_cholesky_rank_one_update_closed_form(backend):
    u = np.array([1.0, 1.0]) / np.sqrt(2)
    m = np.eye(2) + np.outer(u, u)
    # explicit 2x2 factor
    l11 = np.sqrt(m[0, 0])
    l21 = m[1, 0] / l11
    l22 = np.sqrt(m[1, 1] - l21 ** 2)
    expected = np.array([[l11, 0.0], [l21, l22]])
    L = cholesky(m, backend=backend)
    np.testing.assert_allclose(L, expected, rtol=1e-15, atol=1e-15)
    np.testing.assert_allclose(L @ L.T, m, rtol=1e-15)


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("m", [np.diag([1.0, 0.0]), np.diag([1.0, -1.0]), np.array([[1.0, 2.0], [2.0, 1.0]])])
def test_cholesky_not_positive_definite(backend, m):
    with pytest.raises(SpecPertError) as exc:
        cholesky(m, backend=backend)
    assert exc.value.code == NOT_POSITIVE_DEFINITE


def test_cholesky_pivot_floor_is_relative_to_diagonal():
    # second pivot 1e-13 sits below 1e-12 * max diagonal
    with pytest.raises(SpecPertError):
        cholesky(np.diag([1.0, 1e-13]))
    cholesky(np.diag([1.0, 1e-13]), pivot_floor=0.0)


@pytest.mark.parametrize("n", [1, 10, 100, 500])
@pytest.mark.parametrize("backend", BACKENDS)
def test_cholesky_round_trip(n, backend):
    m = random_spd(n, seed=n)
    L = cholesky(m, backend=backend)
    assert np.allclose(L, np.tril(L))
    assert np.linalg.norm(L @ L.T - m) / np.linalg.norm(m) <= 1e-12


# --- standard eigenproblem --------------------------------------------------

@pytest.mark.parametrize("backend", BACKENDS)
def test_sym_eigen_diagonal(backend):
    dec = sym_eigen(np.diag([1.0, 2.0, 3.0]), backend=backend)
    np.testing.assert_allclose(dec.values, [3.0, 2.0, 1.0], rtol=1e-15)
    np.testing.assert_allclose(np.abs(dec.vectors), np.eye(3)[:, ::-1], atol=1e-15)


@pytest.mark.parametrize("backend", BACKENDS)
def test_sym_eigen_swap_matrix(backend):
    dec = sym_eigen(np.array([[0.0, 1.0], [1.0, 0.0]]), backend=backend)
    np.testing.assert_allclose(dec.values, [1.0, -1.0], atol=1e-15)
    s = 1 / np.sqrt(2)
    v0, v1 = dec.vectors[:, 0], dec.vectors[:, 1]
    np.testing.assert_allclose(v0 * np.sign(v0[0]), [s, s], atol=1e-15)
    np.testing.assert_allclose(v1 * np.sign(v1[0]), [s, -s], atol=1e-15)


@pytest.mark.parametrize("backend", BACKENDS)
def test_sym_eigen_random_50_against_bisection(backend):
    a = random_sym(50, seed=3)
    dec = sym_eigen(a, backend=backend)
    oracle = sym_eigvals_bisection(a)
    np.testing.assert_allclose(dec.values, oracle, rtol=0, atol=1e-9)
    assert np.max(dec.residual_norms(a)) <= 1e-10 * np.linalg.norm(a)
    assert dec.orthonormality_error() <= 1e-10


def test_bisection_matches_characteristic_roots_small():
    # eigenvalues of the path-graph Laplacian-like tridiagonal matrix are known
    n = 12
    a = 2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
    exact = 2 - 2 * np.cos(np.pi * np.arange(1, n + 1) / (n + 1))
    np.testing.assert_allclose(sym_eigvals_bisection(a), np.sort(exact)[::-1], atol=1e-13)


def test_ties_broken_by_column_order():
    dec = sym_eigen(np.eye(3))
    np.testing.assert_array_equal(dec.vectors, np.eye(3))


def test_native_no_convergence_with_tiny_budget():
    with pytest.raises(SpecPertError) as exc:
        sym_eigen(random_sym(40, seed=1), backend="native", max_iter=1)
    assert exc.value.code == NO_CONVERGENCE


@pytest.mark.parametrize("n", [1, 2, 7, 60])
def test_native_matches_lapack(n):
    a = random_sym(n, seed=n)
    np.testing.assert_allclose(sym_eigen(a, backend="native").values, sym_eigen(a).values, atol=1e-12)


# --- generalized problem ----------------------------------------------------

@pytest.mark.parametrize("backend", BACKENDS)
def test_generalized_identity_metric(backend):
    lam = np.array([0.3, 2.0, 1.0])
    dec = generalized_sym_eigen(np.diag(lam), np.eye(3), backend=backend)
    np.testing.assert_allclose(dec.values, [2.0, 1.0, 0.3], rtol=1e-15)
    assert dec.metric == H_METRIC


def test_generalized_commuting_diagonal():
    dec = generalized_sym_eigen(np.diag([2.0, 1.0]), np.diag([2.0, 1.0]))
    np.testing.assert_allclose(dec.values, [1.0, 1.0], rtol=1e-15)


@pytest.mark.parametrize("backend", BACKENDS)
def test_generalized_2x2_quadratic_formula(backend):
    a = np.diag([1.0, 0.25])
    g = np.eye(2) + 0.1 * np.ones((2, 2))
    # det(a - x g) = p x^2 + q x + r
    p = g[0, 0] * g[1, 1] - g[0, 1] ** 2
    q = -(a[0, 0] * g[1, 1] + a[1, 1] * g[0, 0])
    r = a[0, 0] * a[1, 1]
    disc = np.sqrt(q * q - 4 * p * r)
    roots = [(-q + disc) / (2 * p), (-q - disc) / (2 * p)]
    dec = generalized_sym_eigen(a, g, backend=backend)
    np.testing.assert_allclose(dec.values, roots, rtol=1e-12)
    assert np.max(dec.residual_norms(a, g)) <= 1e-12
    assert dec.orthonormality_error() <= 1e-12


def test_generalized_rejects_indefinite_metric():
    with pytest.raises(SpecPertError) as exc:
        generalized_sym_eigen(np.eye(2), np.diag([1.0, -0.5]))
    assert exc.value.code == NOT_POSITIVE_DEFINITE


def test_generalized_congruence_invariance():
    n = 40
    a = random_sym(n, seed=11)
    g = random_spd(n, seed=12)
    rng = np.random.default_rng(13)
    c = np.eye(n) + 0.3 * rng.standard_normal((n, n)) / np.sqrt(n)
    v1 = generalized_sym_eigen(a, g).values
    v2 = generalized_sym_eigen(c.T @ a @ c, c.T @ g @ c).values
    np.testing.assert_allclose(v2, v1, rtol=1e-9, atol=1e-9 * np.max(np.abs(v1)))


def test_generalized_graded_spectrum_relative_accuracy():
    # commuting diagonal problem over 8 decades: every value to 1e-13 relative
    lam = np.arange(1, 301, dtype=float) ** -3.0
    d = 0.3 * np.cos(np.arange(300))
    dec = generalized_sym_eigen(np.diag(lam), np.diag(1 + d))
    expected = np.sort(lam / (1 + d))[::-1]
    np.testing.assert_allclose(dec.values, expected, rtol=1e-13)


# --- compiled vs fallback ---------------------------------------------------

@pytest.mark.skipif(not COMPILED, reason="compiled kernels not built")
def test_compiled_kernels_match_fallback():
    from specpert.linalg import _kernels

    a = random_sym(30, seed=5)
    d1, e1, q1 = _kernels.tridiagonalize(a)
    d2, e2, q2 = _kernels_py.tridiagonalize(a)
    # the two reductions may differ in sweep order; compare what is invariant
    ref = np.linalg.eigvalsh(a)
    w1, _, info1 = _kernels.tql2(d1.copy(), e1.copy(), q1.copy())
    w2, _, info2 = _kernels_py.tql2(d2.copy(), e2.copy(), q2.copy())
    assert info1 == info2 == -1
    np.testing.assert_allclose(np.sort(w1), ref, atol=1e-12)
    np.testing.assert_allclose(np.sort(w2), ref, atol=1e-12)
    np.testing.assert_allclose(np.sort(_kernels.bisect_eigenvalues(d1, e1)), ref, atol=1e-12)
    np.testing.assert_allclose(np.sort(_kernels_py.bisect_eigenvalues(d2, e2)), ref, atol=1e-12)
    for x in (-1.0, 0.0, 0.7):
        assert _kernels.sturm_count(d1, e1, x) == _kernels_py.sturm_count(d2, e2, x)
    s = random_spd(30, seed=6)
    L1, i1 = _kernels.cholesky(s, 1e-12)
    L2, i2 = _kernels_py.cholesky(s, 1e-12)
    assert i1 == i2
    np.testing.assert_allclose(L1, L2, atol=1e-13)


# --- properties -------------------------------------------------------------

def _sym_strategy(max_n=8):
    return st.integers(1, max_n).flatmap(
        lambda n: arrays(np.float64, (n, n), elements=st.floats(-10, 10, allow_nan=False, width=64)))


@settings(max_examples=60, deadline=None)
@given(m=_sym_strategy())
def test_property_eigen_invariants(m):
    a = (m + m.T) / 2
    for backend in BACKENDS:
        dec = sym_eigen(a, backend=backend)
        assert dec.values.size == a.shape[0]
        assert np.all(np.isfinite(dec.values)) and np.all(np.isfinite(dec.vectors))
        assert np.all(np.diff(dec.values) <= 0)
        scale = max(np.linalg.norm(a), 1e-300)
        assert np.max(dec.residual_norms(a)) <= 1e-10 * scale + 1e-300
        assert dec.orthonormality_error() <= 1e-10
        assert np.isclose(dec.values.sum(), np.trace(a), atol=1e-9 * (1 + scale))


@settings(max_examples=40, deadline=None)
@given(m=_sym_strategy(), shift=st.floats(0.5, 5.0))
def test_property_generalized_invariants(m, shift):
    n = m.shape[0]
    a = (m + m.T) / 2
    g = m @ m.T / max(1.0, np.abs(m).max() ** 2) + shift * np.eye(n)
    dec = generalized_sym_eigen(a, g)
    scale = np.linalg.norm(a) + np.linalg.norm(g)
    assert np.max(dec.residual_norms(a, g)) <= 1e-10 * scale
    assert dec.orthonormality_error() <= 1e-10
    # Sylvester: inertia of a equals inertia of the pencil values
    assert np.sum(dec.values > 1e-9 * scale) <= np.sum(np.linalg.eigvalsh(a) > -1e-9 * scale)


@settings(max_examples=40, deadline=None)
@given(m=_sym_strategy())
def test_property_bisection_agrees_with_lapack(m):
    a = (m + m.T) / 2
    scale = max(1.0, np.abs(a).max())
    np.testing.assert_allclose(sym_eigvals_bisection(a), np.linalg.eigvalsh(a)[::-1], atol=1e-9 * scale)


def test_pure_python_fallback_selected_by_environment():
    import os
    import subprocess
    import sys

    code = "from specpert.linalg import kernels, sym_eigen; import numpy as np; " \
           "print(kernels.COMPILED, sym_eigen(np.diag([1.0, 2.0]), backend='native').values.tolist())"
    out = subprocess.run([sys.executable, "-c", code], env={**os.environ, "SPECPERT_PURE_PYTHON": "1"},
                         capture_output=True, text=True, check=True).stdout.split(maxsplit=1)
    assert out[0] == "False"
    assert out[1].strip() == "[2.0, 1.0]"
