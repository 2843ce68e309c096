import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hnmroot.metrics import (
    RankedPatient,
    modified_rbo,
    patients_from_shapley,
    rbo,
    shapley_mse,
    weighted_pair_accuracy,
)


def reference_score(est, truth, weights):
    """Weighted prefix overlap written out with an indicator matrix."""
    q = len(truth)
    p = max(est + truth) + 1
    a = np.zeros((q, p))
    b = np.zeros((q, p))
    for i in range(q):
        a[i:, est[i]] = 1 if i < len(est) else 0
        b[i:, truth[i]] = 1
    overlap = (a * b).sum(axis=1)
    return float(np.dot(weights, overlap / np.arange(1, q + 1)))


def test_identical_and_disjoint():
    same = RankedPatient([2, 0, 1], [2, 0], [0.6, 0.4])
    assert rbo([same]).value == 1.0
    disjoint = RankedPatient([3, 4, 0, 1], [0, 1], [0.5, 0.5])
    assert rbo([disjoint]).value == 0.0


def test_hand_cases():
    swapped = RankedPatient([1, 0], [0, 1], [0.7, 0.3])
    assert rbo([swapped]).value == pytest.approx(0.3, abs=1e-12)
    assert modified_rbo([swapped]).value == pytest.approx(0.5, abs=1e-12)
    assert modified_rbo([RankedPatient.uniform([0, 1], [0, 1])]).value == 1.0
    assert modified_rbo([RankedPatient.uniform([4, 1, 2], [4])]).value == 1.0


def test_patients_without_causes_are_skipped():
    res = rbo([RankedPatient.uniform([0, 1], []), RankedPatient.uniform([0], [0])])
    assert res.value == 1.0 and res.scored == 1 and res.skipped == 1
    assert np.isnan(rbo([RankedPatient.uniform([0], [])]).value)


def test_weights_validated():
    with pytest.raises(ValueError):
        RankedPatient([0, 1], [0, 1], [0.5, 0.6])
    with pytest.raises(ValueError):
        RankedPatient([0, 1], [0, 1], [1.0])
    with pytest.raises(ValueError):
        RankedPatient([0, 1], [0, 1], [1.5, -0.5])


def test_underflowing_reference_weight():
    (pt,) = patients_from_shapley(np.zeros((1, 2)), np.array([[2.0, 5e-324]]))
    assert pt.truth_ranking == [0, 1]
    assert rbo([pt]).value == 1.0


shapley_rows = st.integers(2, 7).flatmap(
    lambda p: st.lists(
        st.lists(st.floats(-3, 3, allow_subnormal=False), min_size=p, max_size=p),
        min_size=1, max_size=5,
    )
)


@settings(max_examples=60, deadline=None)
@given(shapley_rows, shapley_rows, st.floats(0.01, 100))
def test_bounds_scale_and_oracle(est_rows, truth_rows, scale):
    p = min(len(est_rows[0]), len(truth_rows[0]))
    m = min(len(est_rows), len(truth_rows))
    est = np.array(est_rows)[:m, :p]
    truth = np.array(truth_rows)[:m, :p]
    patients = patients_from_shapley(est, truth)
    r = rbo(patients).value
    mr = modified_rbo(patients).value
    if np.isnan(r):
        assert all(pt.q == 0 for pt in patients)
        return
    assert 0 <= r <= 1 + 1e-12 and 0 <= mr <= 1 + 1e-12
    assert rbo(patients_from_shapley(est, scale * truth)).value == pytest.approx(r, abs=1e-12)
    scored = [pt for pt in patients if pt.q]
    expected = np.mean([reference_score(pt.ranking, pt.truth_ranking, pt.truth_weights)
                        for pt in scored])
    assert r == pytest.approx(expected, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.permutations(range(6)), st.integers(1, 6))
def test_modified_equals_rbo_under_uniform_weights(ranking, q):
    pt = RankedPatient.uniform(ranking, list(range(q)))
    assert rbo([pt]).value == pytest.approx(modified_rbo([pt]).value, abs=1e-15)


def test_reference_uses_positive_entries_only():
    est = np.array([[0.1, 0.5, -0.2, 0.3]])
    truth = np.array([[0.2, -1.0, 0.6, 0.0]])
    (pt,) = patients_from_shapley(est, truth)
    assert pt.truth_ranking == [2, 0]
    np.testing.assert_allclose(pt.truth_weights, [0.75, 0.25])
    assert pt.ranking == [1, 3, 0, 2]


def test_estimate_ties_break_by_index():
    (pt,) = patients_from_shapley(np.zeros((1, 4)), np.array([[0, 0, 1.0, 0]]))
    assert pt.ranking == [0, 1, 2, 3]


def test_mse_cases():
    truth = np.array([[1.0, 0.0], [0.0, 1.0]])
    assert shapley_mse(truth, truth) == 0
    assert shapley_mse(np.zeros((2, 2)), truth) == 0.5
    t = np.random.default_rng(0).normal(size=(4, 3))
    assert shapley_mse(np.zeros_like(t), t) == pytest.approx(np.mean(t**2))
    assert shapley_mse(np.full_like(t, np.nan), t) == pytest.approx(np.mean(t**2))
    with pytest.raises(ValueError):
        shapley_mse(np.zeros((2, 3)), truth)


def test_weighted_pair_accuracy():
    assert weighted_pair_accuracy([True, True]) == 1
    assert weighted_pair_accuracy([(True, 1), (False, 1)]) == 0.5
    assert weighted_pair_accuracy([(True, 2), (False, 1)]) == pytest.approx(2 / 3)
    with pytest.raises(ValueError):
        weighted_pair_accuracy([])
    with pytest.raises(ValueError):
        weighted_pair_accuracy([(True, -1)])
