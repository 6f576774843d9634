import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cotrans.errors import DimensionError, SingularError
from cotrans.linalg import (
    add,
    as_mat,
    identity,
    image_basis,
    is_idempotent,
    kernel_basis,
    mul,
    op_norm,
    rank_eps,
    rank_info,
    same_kernel,
    svd,
    try_inverse,
    zero,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.integers(min_value=1, max_value=8)


def random_matrix(seed, d, rank=None):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(d, d))
    if rank is not None:
        u, s, vt = np.linalg.svd(a)
        s[rank:] = 0.0
        a = u @ np.diag(s) @ vt
    return a


# ---- arithmetic -----------------------------------------------------------


def test_mul_hand_product():
    assert np.array_equal(mul(np.array([[1.0, 1], [0, 1]]), np.array([[1.0, 0], [1, 1]])), [[2, 1], [1, 1]])


def test_identity_and_zero_are_neutral():
    a = random_matrix(1, 3)
    assert np.array_equal(mul(identity(3), a), a)
    assert np.array_equal(add(a, zero(3)), a)


def test_dimension_mismatch_rejected():
    with pytest.raises(DimensionError):
        mul(identity(2), identity(3))
    with pytest.raises(DimensionError):
        as_mat([[1, 2, 3]])


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        as_mat([[1.0, np.nan], [0, 1]])


# ---- inverse --------------------------------------------------------------


def test_inverse_examples():
    assert np.allclose(try_inverse(np.diag([2.0, 4.0])), np.diag([0.5, 0.25]))
    assert np.allclose(try_inverse([[0.0, 1], [-1, 0]]), [[0, -1], [1, 0]])
    with pytest.raises(SingularError):
        try_inverse(np.diag([1.0, 0.0]))


@given(seeds, dims)
def test_inverse_round_trip(seed, d):
    a = random_matrix(seed, d)
    if np.linalg.cond(a) > 1e6:
        return
    assert np.linalg.norm(a @ try_inverse(a) - np.eye(d), 2) <= 1e-8


# ---- svd ------------------------------------------------------------------


def test_svd_examples():
    assert np.allclose(svd(np.eye(3))[1], [1, 1, 1])
    assert np.allclose(svd(np.diag([3.0, 0.0]))[1], [3, 0])
    assert np.allclose(svd([[0.0, 2], [0, 0]])[1], [2, 0])


def _check_svd(a):
    u, s, v = svd(a)
    d = a.shape[0]
    smax = max(s[0], 1e-300)
    assert np.linalg.norm(u @ np.diag(s) @ v.T - a, 2) <= 1e-9 * max(smax, 1.0)
    assert np.linalg.norm(u.T @ u - np.eye(d)) <= 1e-10
    assert np.linalg.norm(v.T @ v - np.eye(d)) <= 1e-10
    assert np.all(np.diff(s) <= 0) and np.all(s >= 0)
    # numpy's LAPACK SVD is the independent oracle for the singular values
    assert np.allclose(s, np.linalg.svd(a, compute_uv=False), atol=1e-12 * max(smax, 1.0))


def test_svd_round_trip_thousand_seeded():
    rng = np.random.default_rng(2024)
    for i in range(1000):
        d = int(rng.integers(1, 9))
        rank = int(rng.integers(0, d + 1)) if i % 3 == 0 else None
        _check_svd(random_matrix(int(rng.integers(2**32)), d, rank))


@given(seeds, dims, st.integers(min_value=0, max_value=8))
def test_svd_rank_deficient(seed, d, r):
    _check_svd(random_matrix(seed, d, min(r, d)))


def test_svd_zero_matrix():
    u, s, v = svd(np.zeros((3, 3)))
    assert np.all(s == 0)
    assert np.allclose(u.T @ u, np.eye(3))


# ---- rank, norms, bases ---------------------------------------------------


def test_rank_examples():
    assert rank_eps(np.eye(3)) == 3
    assert rank_eps(np.diag([1.0, 1e-15])) == 1
    assert rank_eps(np.zeros((2, 2))) == 0
    for n in range(-8, 9):
        assert rank_eps(np.diag([0.0, 2.0**n])) == 1


def test_rank_borderline_flag():
    assert rank_info(np.diag([1.0, 2e-8])).borderline
    assert not rank_info(np.diag([1.0, 1e-3])).borderline


@given(seeds, dims, st.integers(0, 8), st.integers(0, 8))
def test_rank_of_product_bounded(seed, d, ra, rb):
    a = random_matrix(seed, d, min(ra, d))
    b = random_matrix(seed + 1, d, min(rb, d))
    assert rank_eps(a @ b) <= min(rank_eps(a), rank_eps(b))


def test_op_norm_examples():
    assert op_norm(np.eye(2)) == pytest.approx(1.0)
    assert op_norm(np.diag([3.0, -5.0])) == pytest.approx(5.0)
    assert op_norm([[0.0, 2], [0, 0]]) == pytest.approx(2.0)


def test_basis_examples():
    assert np.allclose(image_basis(np.diag([1.0, 0.0])).columns, [[1], [0]])
    assert np.allclose(kernel_basis(np.diag([1.0, 0.0])).columns, [[0], [1]])
    kb = kernel_basis(np.eye(3))
    assert kb.rank == 0 and kb.columns.shape == (3, 0)


def test_basis_sign_convention():
    # first component above 1e-12 is positive
    cols = image_basis(np.diag([-4.0, 0.0, 0.0])).columns
    assert cols[0, 0] > 0
    cols = kernel_basis(np.array([[0.0, 0.0], [1.0, 1.0]])).columns
    assert cols[np.flatnonzero(np.abs(cols[:, 0]) > 1e-12)[0], 0] > 0


@given(seeds, dims, st.integers(0, 8))
def test_four_subspaces(seed, d, r):
    a = random_matrix(seed, d, min(r, d))
    img = image_basis(a).columns
    ker_t = kernel_basis(a.T).columns
    assert np.linalg.norm(img.T @ ker_t) <= 1e-9
    assert img.shape[1] + ker_t.shape[1] == d
    ker = kernel_basis(a).columns
    assert np.linalg.norm(img.T @ img - np.eye(img.shape[1])) <= 1e-10
    assert np.linalg.norm(a @ ker) <= 1e-8 * max(1.0, np.linalg.norm(a, 2))


def test_idempotent_examples():
    ok, res = is_idempotent(np.eye(2))
    assert ok and res == 0
    assert is_idempotent(np.diag([1.0, 0.0]))[0]
    ok, res = is_idempotent([[1.0, 1], [0, 1]])
    assert not ok and res >= 1


def test_same_kernel_examples():
    assert same_kernel(np.diag([1.0, 0]), np.diag([5.0, 0]))
    assert not same_kernel(np.diag([1.0, 0]), np.diag([0.0, 1]))


@given(seeds, st.integers(2, 6), st.integers(1, 5))
def test_same_kernel_left_multiplication(seed, d, r):
    a = random_matrix(seed, d, min(r, d - 1))
    b = random_matrix(seed + 7, d)
    if np.linalg.cond(b) > 1e4:
        return
    assert same_kernel(a, b @ a)
