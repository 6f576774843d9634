import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cotrans.cotranslation import DifferenceSeq, from_difference_seq
from cotrans.errors import DimensionError, VerificationError
from cotrans.fixtures import (
    alternating_projector,
    counterexample,
    diag_partial,
    random_partial,
    rotating_projector,
)
from cotrans.groups import IntegerGroup
from cotrans.partial import (
    ConjugationMap,
    PartialCotranslation,
    ProjectorMap,
    as_partial,
    check_invariant_projector,
    complete,
    conjugate,
    conjugation_law,
    continuity_probe_T,
    kernel_constancy_check,
    kinematic_similarity_report,
    law_check,
    normalize_units,
    orthogonal_sum,
    rank_of,
    restrict,
    units_normalizer,
    units_projector,
    units_projector_check,
)

Z = IntegerGroup()
W3 = Z.sample_window(3)
W4 = Z.sample_window(4)


def const_partial(m):
    m = np.asarray(m, dtype=float)
    return PartialCotranslation(Z, len(m), lambda g, h: m)


def shear_conjugator():
    return ConjugationMap(Z, 2, lambda n: np.array([[1.0, n], [0.0, 1.0]]))


# ---- law, units, kernel ------------------------------------------------------


def test_counterexample_satisfies_law_exactly():
    rep = law_check(counterexample(), W4)
    assert rep.passed and rep.entries[0].max_residual == 0.0


def test_corrupted_counterexample_fails_law():
    W = counterexample()
    bad = PartialCotranslation(Z, 2, lambda g, h: W(g, h) + (np.diag([1e-3, 0]) if (g, h) == (1, 2) else 0.0))
    rep = law_check(bad, W3)
    assert not rep.passed
    assert rep.entries[0].max_residual > 1e-5


def test_units_projector_of_counterexample():
    W = counterexample()
    P = units_projector(W)
    assert np.array_equal(P(7), np.diag([0.0, 1.0]))
    rep = units_projector_check(W, W3)
    assert rep.passed and {e.law for e in rep.entries} == {"units_idempotent", "units_invariant"}


def test_units_projector_check_rejects_non_idempotent():
    rep = units_projector_check(const_partial(2 * np.eye(2)), W3)
    assert not rep.entry("units_idempotent").passed


def test_kernel_and_rank_constant_on_counterexample():
    rep = kernel_constancy_check(counterexample(), W3)
    assert rep.passed
    info = rep.entry("rank_constancy").info
    assert info["rank"] == 1 and info["status"] == "constant"
    assert rank_of(counterexample(), W3) == 1


def test_kernel_mismatch_detected():
    P = rotating_projector(theta_step=0.3)
    W = PartialCotranslation(Z, 2, lambda g, h: P(h))
    assert not kernel_constancy_check(W, W3).entry("kernel_constancy").passed


def test_non_constant_rank_detected():
    W = PartialCotranslation(Z, 2, lambda g, h: np.diag([1.0, float(h % 2)]))
    e = kernel_constancy_check(W, W3).entry("rank_constancy")
    assert not e.passed and e.info["status"] == "non-constant"
    assert rank_of(W, W3) is None


def test_borderline_rank_is_inconclusive():
    W = PartialCotranslation(Z, 2, lambda g, h: np.diag([1.0, 3e-8 if h % 2 else 0.0]))
    e = kernel_constancy_check(W, W3).entry("rank_constancy")
    assert e.passed and e.info["status"] == "inconclusive"


# ---- projectors and restriction ---------------------------------------------------


def test_alternating_projector_has_two_ranks():
    rep = check_invariant_projector(counterexample(), alternating_projector(), W4)
    assert rep.passed
    info = rep.entry("projector_invariant").info
    assert info["projector_ranks"] == [1, 2] and not info["projector_rank_constant"]


def test_complement_is_invariant_too():
    fx = random_partial(3)
    rep = check_invariant_projector(fx.Z, fx.P.complement(), W3, 1e-9, Q=fx.P)
    assert rep.passed, rep.summary()


def test_non_invariant_projector_rejected():
    Zs = from_difference_seq(DifferenceSeq.constant([[1.0, 1.0], [0.0, 1.0]]))
    P = ProjectorMap.constant(Z, np.diag([0.0, 1.0]))
    with pytest.raises(VerificationError):
        restrict(Zs, P, W3)


def test_restrict_identity_and_zero():
    Zr = from_difference_seq(DifferenceSeq.random(2, 1))
    full = restrict(Zr, ProjectorMap.constant(Z, np.eye(2)), W3)
    none = restrict(Zr, ProjectorMap.constant(Z, np.zeros((2, 2))), W3)
    for g in W3:
        for h in W3:
            assert np.array_equal(full(g, h), Zr(g, h))
            assert not none(g, h).any()


@pytest.mark.parametrize("seed", range(4))
def test_restricted_random_partial_is_a_partial_cotranslation(seed):
    fx = random_partial(seed)
    assert law_check(fx.W, W3).passed
    assert units_projector_check(fx.W, W3).passed
    assert kernel_constancy_check(fx.W, W3).passed
    assert rank_of(fx.W, W3) == fx.rank


# ---- sums and conjugation -------------------------------------------------------


def test_orthogonal_sum_of_diagonal_blocks():
    W = diag_partial([2.0, 3.0], [1.0, 0.0])
    V = diag_partial([2.0, 3.0], [0.0, 1.0])
    S = orthogonal_sum(W, V, W3)
    assert S.meta["report"].passed
    assert np.array_equal(S(1, 2), np.diag([4.0, 9.0]))


def test_non_orthogonal_sum_rejected():
    W = diag_partial([2.0, 3.0], [1.0, 0.0])
    with pytest.raises(VerificationError):
        orthogonal_sum(W, W, W3)
    with pytest.raises(DimensionError):
        orthogonal_sum(W, const_partial(np.eye(3)), W3)


def test_conjugation_by_shear():
    W = counterexample()
    T = shear_conjugator()
    Wt = conjugate(W, T)
    # T(h+g)^-1 diag(0, 2^h) T(g) worked by hand
    g, h = 2, 1
    expected = np.array([[1.0, -3.0], [0.0, 1.0]]) @ np.diag([0.0, 2.0]) @ np.array([[1.0, 2.0], [0.0, 1.0]])
    assert np.allclose(Wt(g, h), expected)
    assert law_check(Wt, W3).passed
    assert conjugation_law(W, Wt, T, W3).sweep().passed


@settings(max_examples=10)
@given(st.integers(0, 10**6))
def test_rank_invariant_under_conjugation(seed):
    fx = random_partial(seed, window_radius=2)
    rng = np.random.default_rng(seed)
    while True:
        s = rng.uniform(-1, 1, size=(fx.dim, fx.dim))
        if np.linalg.cond(s) < 10:
            break
    T = ConjugationMap(Z, fx.dim, lambda g: s)
    w = Z.sample_window(2)
    assert rank_of(conjugate(fx.W, T), w) == rank_of(fx.W, w) == fx.rank


# ---- normalization and completion -------------------------------------------------


def test_normalize_diagonal_projector():
    norm = normalize_units(counterexample(), W3)
    assert norm.report.passed and norm.rank == 1
    assert np.allclose(norm.T(0), [[0.0, 1.0], [1.0, 0.0]])
    assert np.allclose(norm.W_hat(4, 0), np.diag([1.0, 0.0]))


def test_normalize_oblique_projector():
    p0 = np.array([[1.0, 1.0], [0.0, 0.0]])
    norm = normalize_units(const_partial(p0), W3)
    assert norm.report.passed
    s = 1 / math.sqrt(2)
    assert np.allclose(norm.T(0), [[1.0, s], [0.0, -s]])
    assert norm.M == pytest.approx(math.sqrt(2))
    assert np.allclose(norm.W_hat(0, 0), np.diag([1.0, 0.0]))


def test_complete_counterexample():
    c = complete(counterexample(), W4)
    assert c.report.passed and c.rank == 1
    for n in W4:
        assert np.allclose(c.V(0, n), np.diag([1.0, 0.0]))
        assert np.allclose(c.Z_full(3, n), np.diag([1.0, 2.0**n]))


def test_complete_full_rank_branch():
    Zr = from_difference_seq(DifferenceSeq.random(3, 6))
    c = complete(as_partial(Zr), W3)
    assert c.report.passed and c.rank == 3 and c.T is None
    assert not c.V(1, 2).any()
    assert np.array_equal(c.Z_full(1, 2), Zr(1, 2))


def test_complete_zero_partial():
    c = complete(const_partial(np.zeros((2, 2))), W3)
    assert c.report.passed and c.rank == 0
    assert np.allclose(c.Z_full(2, -1), np.eye(2))


def test_complete_random_partial_reconstructs():
    fx = random_partial(11)
    c = complete(fx.W, W3)
    assert c.report.passed, c.report.summary()
    P = units_projector(fx.W)
    for g in W3:
        for h in W3:
            assert np.allclose(c.Z_full(g, h) @ P(g), fx.W(g, h), atol=1e-10)


def test_complete_failure_is_reported():
    # fails the law, so the completion cannot be a cotranslation
    bad = PartialCotranslation(Z, 2, lambda g, h: np.diag([0.0, 1.0 + 0.1 * h * h]))
    with pytest.raises(VerificationError):
        complete(bad, W3)
    c = complete(bad, W3, raise_on_failure=False)
    assert not c.report.passed


# ---- probes -------------------------------------------------------------------------


def test_continuity_probe_constant():
    T = ConjugationMap(Z, 2, lambda n: np.eye(2))
    assert continuity_probe_T(T, list(range(-3, 4)))["max_jump"] == 0.0


def test_continuity_probe_rotating_normalizer():
    T = units_normalizer(PartialCotranslation(Z, 2, lambda g, h: rotating_projector(0.05)(h + g)))
    # the angle 0.1 + 0.05 n stays positive along this path
    jump = continuity_probe_T(T, list(range(-1, 10)))["max_jump"]
    assert jump == pytest.approx(0.05, rel=0.05)
    # crossing angle 0 flips the sign normalization of the kernel column
    probe = continuity_probe_T(T, list(range(-5, 6)))
    assert probe["max_jump"] == pytest.approx(2.0) and probe["argmax"] == (-2, -1)


def test_continuity_probe_sign_flip():
    T = ConjugationMap(Z, 2, lambda n: (-1.0) ** n * np.eye(2))
    probe = continuity_probe_T(T, [0, 1, 2])
    assert probe["max_jump"] == pytest.approx(2.0)


def test_kinematic_similarity_unbounded():
    eye = const_partial(np.eye(2))
    W = diag_partial([2.0, 1.0], [1.0, 1.0])
    T = ConjugationMap(Z, 2, lambda n: np.diag([2.0**n, 1.0]))
    rep = kinematic_similarity_report(W, eye, T, W3, outer_window=Z.sample_window(8))
    assert rep.passed
    assert rep.meta["bounded"] == "unbounded"


def test_kinematic_similarity_bounded():
    fx = random_partial(2)
    c = complete(fx.W, W3)
    norm = c.normalization
    rep = kinematic_similarity_report(fx.W, norm.W_hat, norm.T, W3, outer_window=Z.sample_window(5))
    assert rep.passed
    assert rep.meta["sup_T"] <= fx.dim
