import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from specpert.errors import DIMENSION_MISMATCH, INVALID_INDEX, NOT_POSITIVE_DEFINITE, SpecPertError
from specpert.gen_eigen import (
    HMetric,
    head,
    homotopy_jump_bound,
    homotopy_track,
    projected_solve,
    refine_eigenpair,
    solve_generalized,
    tail,
)
from specpert.linalg import SymMatrix
from specpert.models import (
    PerturbationMatrix,
    SpectralModel,
    build_random_sign_perturbation,
    build_rank_one_perturbation,
    split_sign,
)


def _pm(a):
    return PerturbationMatrix(SymMatrix(np.asarray(a, dtype=float)))


def _model(lams):
    return SpectralModel(np.asarray(lams, dtype=float), "DIAGONAL")


def test_hmetric_inner_product():
    B = _pm([[0.0, 0.1], [0.1, 0.0]])
    m = HMetric.from_perturbation(B)
    h, g = np.array([1.0, 2.0]), np.array([3.0, -1.0])
    assert m.inner(h, g) == pytest.approx(h @ g + h @ B.array @ g)
    assert m.norm(h) ** 2 == pytest.approx(m.inner(h, h))
    np.testing.assert_allclose(m.G @ m.solve(g), g)


@pytest.mark.parametrize("backend", ["lapack", "native"])
def test_zero_perturbation_returns_base(K500, backend):
    S = solve_generalized(K500, PerturbationMatrix.zero(K500.dim), backend=backend)
    assert np.max(np.abs(S.values / K500.lambdas - 1)) <= 1e-12


def test_commuting_diagonal():
    S = solve_generalized(_model([1.0, 0.25]), _pm(np.diag([0.1, -0.1])))
    np.testing.assert_allclose(S.values, [1 / 1.1, 0.25 / 0.9], rtol=1e-15)


def test_dimension_mismatch():
    with pytest.raises(SpecPertError) as exc:
        solve_generalized(_model([1.0, 0.5]), PerturbationMatrix.zero(3))
    assert exc.value.code == DIMENSION_MISMATCH


def test_against_symmetric_square_root_reduction(law):
    from specpert.models import build_diagonal_K

    K = build_diagonal_K(law, 200)
    B = build_rank_one_perturbation(0.1, 1.0, 200, "THEOREM1")
    S = solve_generalized(K, B)
    # congruence-free path: (I+B)^(-1/2) diag(lam) (I+B)^(-1/2)
    w, v = np.linalg.eigh(np.eye(200) + B.array)
    r = (v / np.sqrt(w)) @ v.T
    oracle = np.sort(np.linalg.eigvalsh(r @ np.diag(K.lambdas) @ r))[::-1]
    np.testing.assert_allclose(S.values, oracle, rtol=1e-10, atol=1e-10 * K.lambdas[0])
    # spectrum invariants
    g = np.eye(200) + B.array
    resid = np.linalg.norm(K.lambdas[:, None] * S.vectors - S.values * (g @ S.vectors), axis=0)
    assert np.max(resid) <= 1e-10 * K.lambdas[0]
    np.testing.assert_allclose(S.vectors.T @ g @ S.vectors, np.eye(200), atol=1e-10)


def test_monotone_under_sign_definite_perturbation(K500):
    B = build_rank_one_perturbation(0.2, 1.0, K500.dim, "THEOREM1")
    lam = K500.lambdas
    assert np.all(solve_generalized(K500, B, vectors=False).values <= lam * (1 + 1e-12))
    assert np.all(solve_generalized(K500, B.scaled(-1.0), vectors=False).values >= lam * (1 - 1e-12))


def test_projected_full_head_equals_full_solve(K500):
    B = build_random_sign_perturbation(0.05, 1.0, K500.dim, seed=1)
    np.testing.assert_allclose(projected_solve(K500, B, head(K500.dim)).values,
                               solve_generalized(K500, B).values, rtol=1e-14)


def test_projected_head_one(K500):
    B = build_random_sign_perturbation(0.05, 1.0, K500.dim, seed=1)
    S = projected_solve(K500, B, head(1))
    assert S.values[0] == pytest.approx(K500.lambdas[0] / (1 + B.array[0, 0]), rel=1e-15)


def test_projected_window_index_checked(K500):
    with pytest.raises(SpecPertError) as exc:
        projected_solve(K500, PerturbationMatrix.zero(K500.dim), tail(0))
    assert exc.value.code == INVALID_INDEX


def test_min_max_projection_bounds(K500):
    Bpos = build_rank_one_perturbation(0.1, 1.0, K500.dim, "THEOREM1")
    full = solve_generalized(K500, Bpos, vectors=False).values
    for n in (1, 5, 40, 200):
        # head: lam_n >= smallest value of the head problem
        assert full[n - 1] >= projected_solve(K500, Bpos, head(n), vectors=False).values[-1] * (1 - 1e-13)
        # tail on positive B: largest tail value >= lam_n
        assert projected_solve(K500, Bpos, tail(n), vectors=False).values[0] >= full[n - 1] * (1 - 1e-13)
    Bneg = Bpos.scaled(-1.0)
    full = solve_generalized(K500, Bneg, vectors=False).values
    for n in (1, 5, 40):
        tv = projected_solve(K500, Bneg, tail(n), vectors=False).values
        k = np.arange(1, tv.size + 1)
        assert np.all(full[n + k - 2] <= tv * (1 + 1e-13))


def test_homotopy_endpoints_and_zero():
    from specpert.models import AsymptoticLaw, build_diagonal_K

    K = build_diagonal_K(AsymptoticLaw(np.pi, -np.pi / 2, 2.0, 1.0), 100)
    B = build_rank_one_perturbation(0.1, 1.0, 100, "THEOREM1")
    res = homotopy_track(K, B, 2)
    np.testing.assert_allclose(res.paths[0], K.lambdas, rtol=1e-13)
    np.testing.assert_allclose(res.paths[1], solve_generalized(K, B, vectors=False).values, rtol=1e-13)
    flat = homotopy_track(K, PerturbationMatrix.zero(100), 5)
    assert np.all(flat.max_jumps <= 1e-13 * K.lambdas)


def test_homotopy_jump_bound_rank_one():
    from specpert.models import AsymptoticLaw, build_diagonal_K

    K = build_diagonal_K(AsymptoticLaw(np.pi, -np.pi / 2, 2.0, 1.0), 100)
    B = build_rank_one_perturbation(0.1, 1.0, 100, "THEOREM1")
    res = homotopy_track(K, B, 11, workers=3)
    assert np.all(res.max_jumps <= homotopy_jump_bound(K, B, 11))
    assert np.all(np.diff(res.paths, axis=0) <= 1e-15)
    serial = homotopy_track(K, B, 11)
    np.testing.assert_array_equal(serial.paths, res.paths)
    assert not res.crossing


def test_homotopy_flags_crossing():
    K = _model([1.0, 0.5])
    # eps = 1 makes both values 0.5
    res = homotopy_track(K, _pm(np.diag([1.0, 0.0])), 3)
    assert res.crossing
    assert res.crossing_pairs == [(1.0, 1)]


def test_nonpositive_metric_rejected_before_tracking():
    with pytest.raises(SpecPertError) as exc:
        homotopy_track(_model([1.0, 0.5]), _pm(np.diag([-0.5, 0.0])).scaled(2.0), 3)
    assert exc.value.code == NOT_POSITIVE_DEFINITE


def test_refine_eigenpair_improves_small_components(K500):
    B = build_random_sign_perturbation(0.05, 1.0, K500.dim, seed=3)
    idx = np.arange(60)
    S = projected_solve(K500, B, head(60))
    b = B.array[np.ix_(idx, idx)]
    x, J = refine_eigenpair(K500.lambdas[idx], b, S.vectors[:, -1], S.values[-1])
    g = np.eye(60) + b
    assert x @ g @ x == pytest.approx(1.0, abs=1e-14)
    assert J == pytest.approx(S.values[-1], rel=1e-12)
    r = K500.lambdas[idx] * x - J * (g @ x)
    assert np.linalg.norm(r) <= 1e-15 * K500.lambdas[0]


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 25), sigma=st.floats(-0.4, 0.4), seed=st.integers(0, 1000))
def test_property_sandwich_and_interlacing(n, sigma, seed):
    K = _model((np.arange(1, n + 1) + 0.5) ** -2.0)
    B = build_random_sign_perturbation(sigma, 1.0, n, seed)
    bp, bm = split_sign(B)
    lam = solve_generalized(K, B, vectors=False).values
    lp = solve_generalized(K, bp, vectors=False).values
    lm = solve_generalized(K, bm, vectors=False).values
    assert np.all(lp <= lam * (1 + 1e-10)) and np.all(lam <= lm * (1 + 1e-10))
    assert np.all(lam > 0)
    # pencil values agree with scipy's generalized solver
    ref = sla.eigh(np.diag(K.lambdas), np.eye(n) + B.array, eigvals_only=True)[::-1]
    np.testing.assert_allclose(lam, ref, rtol=1e-9, atol=1e-12)
