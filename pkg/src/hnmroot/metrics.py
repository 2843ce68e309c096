"""Scores for ranked root-cause lists, attribution error and pair accuracy."""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "RankedPatient",
    "RboResult",
    "patients_from_shapley",
    "rbo",
    "modified_rbo",
    "shapley_mse",
    "weighted_pair_accuracy",
]


@dataclass
class RankedPatient:
    """One patient's estimated ranking against a weighted reference ranking.

    ``truth_weights[i]`` is the weight of ``truth_ranking[i]``; weights are
    non-negative and sum to one.
    """

    ranking: list
    truth_ranking: list
    truth_weights: np.ndarray

    def __post_init__(self):
        self.ranking = [int(v) for v in self.ranking]
        self.truth_ranking = [int(v) for v in self.truth_ranking]
        w = np.asarray(self.truth_weights, dtype=float)
        if w.shape != (len(self.truth_ranking),):
            raise ValueError("one weight per reference variable is required")
        # a tiny positive value can normalize to exactly 0; it then simply adds nothing
        if w.size and (np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9):
            raise ValueError("weights must be non-negative and sum to one")
        self.truth_weights = w

    @property
    def q(self):
        return len(self.truth_ranking)

    @classmethod
    def uniform(cls, ranking, truth_ranking):
        q = len(truth_ranking)
        return cls(ranking, truth_ranking, np.full(q, 1.0 / q) if q else np.empty(0))


@dataclass(frozen=True)
class RboResult:
    """Mean overlap score; ``skipped`` counts patients without reference causes."""

    value: float
    scored: int
    skipped: int

    def __float__(self):
        return self.value


def _overlap_score(patient, weights):
    est, truth = patient.ranking, patient.truth_ranking
    total = 0.0
    for i in range(1, patient.q + 1):
        common = len(set(est[:i]) & set(truth[:i]))
        total += weights[i - 1] * common / i
    return total


def _mean_score(patients, uniform):
    scores = []
    skipped = 0
    for pt in patients:
        if pt.q == 0:
            skipped += 1
            continue
        w = np.full(pt.q, 1.0 / pt.q) if uniform else pt.truth_weights
        scores.append(_overlap_score(pt, w))
    value = float(np.mean(scores)) if scores else float("nan")
    return RboResult(value, len(scores), skipped)


def rbo(patients):
    """Shapley-weighted rank-biased overlap averaged over patients.

    For each patient, the overlap of the top-``i`` prefixes of the estimate and
    the reference, divided by ``i``, is weighted by the reference weight of
    position ``i`` and summed over the reference length.  Patients whose
    reference list is empty are skipped and counted in the result.
    """
    return _mean_score(patients, uniform=False)


def modified_rbo(patients):
    """As :func:`rbo` but every reference position weighs ``1 / q``."""
    return _mean_score(patients, uniform=True)


def patients_from_shapley(estimate, truth):
    """Build patients from estimated and reference attribution matrices.

    The reference ranking keeps only strictly positive entries, sorted by
    decreasing value and normalized to sum to one.  The estimate ranks every
    variable by decreasing value.  Ties are broken by column index.
    """
    estimate = np.asarray(getattr(estimate, "values", estimate), dtype=float)
    truth = np.asarray(getattr(truth, "values", truth), dtype=float)
    if estimate.shape != truth.shape:
        raise ValueError("estimate and truth must have the same shape")
    out = []
    for e_row, t_row in zip(estimate, truth):
        ranking = np.lexsort((np.arange(e_row.size), -e_row)).tolist()
        pos = np.flatnonzero(t_row > 0)
        pos = pos[np.lexsort((pos, -t_row[pos]))]
        w = t_row[pos] / t_row[pos].sum() if pos.size else np.empty(0)
        out.append(RankedPatient(ranking, pos.tolist(), w))
    return out


def shapley_mse(estimates, truth):
    """Mean squared difference over all patients and variables.

    NaN entries of ``estimates`` (variables an algorithm did not score) count
    as zero.
    """
    est = np.nan_to_num(np.asarray(getattr(estimates, "values", estimates), dtype=float), nan=0.0)
    truth = np.asarray(getattr(truth, "values", truth), dtype=float)
    if est.shape != truth.shape:
        raise ValueError("estimates and truth must have the same shape")
    return float(np.mean((est - truth) ** 2))


def weighted_pair_accuracy(decisions):
    """Weighted fraction of correct decisions.

    Parameters
    ----------
    decisions : iterable of (bool, float) or of bool
        Plain booleans weigh one each.
    """
    num = den = 0.0
    for item in decisions:
        correct, weight = item if isinstance(item, tuple) else (item, 1.0)
        if weight < 0:
            raise ValueError("weights must be non-negative")
        num += weight * bool(correct)
        den += weight
    if den == 0:
        raise ValueError("no weighted decisions")
    return num / den
