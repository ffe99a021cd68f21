from itertools import product
import math

import numpy as np
import pytest
from scipy.linalg import block_diag

from torsionstab.asymptotics import TraceConfig, classify_limit, sample_trace
from torsionstab.catalog import REMARK1, REMARK2, TWO_ROTATIONS, coupled_oscillators
from torsionstab.errors import IllConditionedSpectrumError, PreconditionError
from torsionstab.results import Limit, Verdict
from torsionstab.spectral_oracle import (canonical_blocks, classify_eigen_stability, jordan_block,
                                         jordan_structure, predict_kappa_limit_diagonal, predict_tau_limit,
                                         rotation_block, summarize, v2_degenerate)


def verdict(A):
    return classify_eigen_stability(summarize(A)).verdict


def tau_prediction(A, r0):
    s = summarize(A)
    return predict_tau_limit(A, s, jordan_structure(A, s), r0)


# ---- summarize / classify_eigen_stability

def test_nilpotent_jordan_block():
    s = summarize([[0.0, 1.0], [0.0, 0.0]])
    assert s.M == 0 and not s.invertible and not s.semisimple_critical
    assert verdict([[0.0, 1.0], [0.0, 0.0]]) is Verdict.UNSTABLE


def test_rotation_generator():
    s = summarize([[0.0, 1.0], [-1.0, 0.0]])
    assert s.M == 0 and s.invertible and s.semisimple_critical


def test_diagonal_summary():
    s = summarize(np.diag([-1.0, -2.0, -2.5]))
    assert s.M == -1 and s.invertible
    assert s.lambda_order == pytest.approx((-1, -2, -2.5), abs=1e-14)


def test_asymptotically_stable_diagonal():
    assert verdict(np.diag([-1.0, -2.0])) is Verdict.ASYMPTOTICALLY_STABLE


def test_oscillator_is_stable():
    c = classify_eigen_stability(summarize(coupled_oscillators()))
    assert c.verdict is Verdict.STABLE
    assert str(c.provenance) == "eigenvalue-oracle"


def test_sign_patterns_exhaustive():
    for n in range(1, 5):
        for signs in product((-1.0, 0.0, 1.0), repeat=n):
            lam = [s * (i + 1) for i, s in enumerate(signs)]
            v = verdict(np.diag(lam))
            assert (v is Verdict.ASYMPTOTICALLY_STABLE) == all(x < 0 for x in lam)
            if all(x <= 0 for x in lam) and any(x == 0 for x in lam):
                assert v is Verdict.STABLE  # diagonal zero eigenvalues are semisimple


def test_complex_pair_with_nontrivial_block_is_unstable():
    assert verdict(rotation_block(0.0, 1.5, 2)) is Verdict.UNSTABLE


def test_semisimple_decided_after_similarity():
    rng = np.random.default_rng(5)
    P = rng.uniform(-1, 1, (4, 4)) + 3 * np.eye(4)
    A = P @ TWO_ROTATIONS @ np.linalg.inv(P)
    assert verdict(A) is Verdict.STABLE
    B = P @ block_diag(rotation_block(0.0, 1.0, 2)) @ np.linalg.inv(P)
    assert verdict(B) is Verdict.UNSTABLE


# ---- jordan_structure and v2_degenerate

def test_remark1_structure():
    j = jordan_structure(REMARK1)
    assert j.real_blocks == ((0.0, (2,)),)
    assert len(j.complex_blocks) == 1
    a, b, sizes = j.complex_blocks[0]
    assert (a, b) == pytest.approx((-1.0, 1.0)) and sizes == (1,)


def test_diagonal_structure():
    j = jordan_structure(np.diag([-1.0, -2.0, -3.0]))
    assert [(round(l, 12), s) for l, s in j.real_blocks] == [(-1.0, (1,)), (-2.0, (1,)), (-3.0, (1,))]
    assert j.n == 3


def test_remark2_structure():
    j = jordan_structure(REMARK2)
    assert [(round(l, 6), s) for l, s in j.real_blocks] == [(0.0, (1,)), (-1.0, (3,))]


def test_mixed_block_sizes():
    A = block_diag(jordan_block(2.0, 3), jordan_block(2.0, 1), jordan_block(2.0, 2))
    j = jordan_structure(A)
    assert len(j.real_blocks) == 1
    assert sorted(j.real_blocks[0][1]) == [1, 2, 3]


def test_close_distinct_eigenvalues_rejected():
    with pytest.raises(IllConditionedSpectrumError):
        jordan_structure(np.diag([1.0, 1.0 + 1e-7]))


@pytest.mark.parametrize("A,want", [
    (3 * np.eye(4), True),
    (block_diag(jordan_block(0, 2), jordan_block(0, 2)), True),
    (np.diag([-1.0, -2.0]), False),
    (np.diag([2.0, 2.0, 0.0]), True),
    (block_diag(jordan_block(0, 2), [[0.0]]), True),
    (block_diag(jordan_block(0, 2), [[1.0]]), False),
    (rotation_block(0.0, 1.0, 1), False),
    (jordan_block(0, 3), False),
])
def test_v2_degenerate(A, want):
    assert v2_degenerate(jordan_structure(A)) is want


# ---- predict_kappa_limit_diagonal

def numeric_label(A, q):
    r0 = np.ones(A.shape[0])
    return classify_limit(sample_trace(A, r0, q, TraceConfig(t_start=10, t_end=60)), TraceConfig(t_start=10, t_end=60))


def test_trichotomy_infinity():
    A = np.diag([-1.0, -2.0, -2.5])
    assert predict_kappa_limit_diagonal(summarize(A), 2).label is Limit.INFINITY
    assert numeric_label(A, "kappa_2").label is Limit.INFINITY


def test_trichotomy_constant():
    A = np.diag([-1.0, -2.0, -3.0])
    assert predict_kappa_limit_diagonal(summarize(A), 1).label is Limit.POSITIVE_CONST
    assert numeric_label(A, "kappa_1").label is Limit.POSITIVE_CONST


@pytest.mark.parametrize("i", [1, 2])
def test_trichotomy_unstable_forces_zero(i):
    A = np.diag([1.0, -1.0, -2.0])
    assert predict_kappa_limit_diagonal(summarize(A), i).label is Limit.ZERO
    assert numeric_label(A, f"kappa_{i}").label is Limit.ZERO


def test_trichotomy_lower_dimensional_span():
    p = predict_kappa_limit_diagonal(summarize(np.diag([-1.0, -1.0, -2.0])), 2)
    assert p.label is Limit.ZERO and "lower-dimensional" in p.reason


def test_trichotomy_not_applicable():
    p = predict_kappa_limit_diagonal(summarize(rotation_block(-1.0, 1.0, 1)), 1)
    assert not p.applicable and p.label is Limit.NOT_PREDICTED


# ---- predict_tau_limit

def test_positive_abscissa_tau_zero():
    A = block_diag(jordan_block(1.0, 1), rotation_block(-1.0, 2.0, 1))
    assert tau_prediction(A, np.ones(3)).label is Limit.ZERO


def test_higher_order_rotation_tau_zero():
    A = block_diag(rotation_block(0.0, 1.0, 2), jordan_block(-1.0, 1))
    assert tau_prediction(A, np.ones(5)).label is Limit.ZERO


def rotation_tau_bruteforce(bs, r0, t):
    """Torsion of a sum of planar rotations from analytic derivatives and an explicit Gram matrix."""
    cols = []
    for k in (1, 2, 3):
        v = []
        for i, b in enumerate(bs):
            x, y = r0[2 * i], r0[2 * i + 1]
            # the k-th derivative of a rotation is a rotation by k quarter turns scaled by b^k
            ph = b * t + k * math.pi / 2
            c, s = math.cos(ph), math.sin(ph)
            v += [b ** k * (c * x + s * y), b ** k * (-s * x + c * y)]
        cols.append(v)
    W = np.array(cols).T
    g2 = np.linalg.det(W[:, :2].T @ W[:, :2])
    g3 = np.linalg.det(W.T @ W)
    return math.sqrt(g3) / g2


def test_two_rotations_positive_constant():
    p = tau_prediction(TWO_ROTATIONS, [1.0, 0.0, 1.0, 0.0])
    assert p.label is Limit.POSITIVE_CONST
    assert p.value == pytest.approx(math.sqrt(36 / 425), rel=1e-14)
    assert p.value == pytest.approx(0.291043, abs=1e-6)
    assert rotation_tau_bruteforce([1.0, 2.0], [1.0, 0.0, 1.0, 0.0], 1000.0) == pytest.approx(p.value, rel=1e-4)


def test_equal_frequency_rotations_tau_zero():
    A = block_diag(rotation_block(0.0, 1.5, 1), rotation_block(0.0, 1.5, 1))
    assert tau_prediction(A, np.ones(4)).label is Limit.ZERO


def test_rotation_without_component_violates_precondition():
    with pytest.raises(PreconditionError):
        tau_prediction(TWO_ROTATIONS, [0.0, 0.0, 1.0, 0.0])


def test_zero_coordinate_violates_precondition():
    A = block_diag(jordan_block(1.0, 1), rotation_block(-1.0, 2.0, 1))
    with pytest.raises(PreconditionError, match="S"):
        tau_prediction(A, [1.0, 0.0, 1.0])


def test_non_canonical_not_applicable():
    rng = np.random.default_rng(1)
    A = rng.uniform(-1, 1, (3, 3))
    p = tau_prediction(A, np.ones(3))
    assert p.label is Limit.NOT_PREDICTED and not p.applicable


def test_stable_spectrum_not_predicted():
    p = tau_prediction(np.diag([-1.0, -2.0, -3.0]), np.ones(3))
    assert p.label is Limit.NOT_PREDICTED and p.applicable


def test_canonical_block_parser():
    A = block_diag(jordan_block(-1.0, 2), rotation_block(0.5, 2.0, 2))
    assert canonical_blocks(A) == [("J", 0, 2, -1.0), ("C", 2, 2, 0.5, 2.0)]
    A[0, 3] = 0.1
    assert canonical_blocks(A) is None


def test_rotation_suite_values_against_bruteforce():
    rng = np.random.default_rng(42)
    for _ in range(10):
        bs = sorted(rng.uniform(0.5, 3.0, 3))
        r0 = rng.uniform(0.2, 1.0, 6) * np.where(rng.random(6) < 0.5, -1, 1)
        A = block_diag(*[rotation_block(0.0, round(b, 3), 1) for b in bs])
        p = tau_prediction(A, r0)
        ref = rotation_tau_bruteforce([round(b, 3) for b in bs], r0, 1000.0)
        assert p.value == pytest.approx(ref, rel=1e-4)
