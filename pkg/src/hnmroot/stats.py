"""Nearest-neighbour mutual information and a permutation CI test."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import digamma
from scipy.stats import rankdata

from ._rng import keyed_rng
from .numkit import DegenerateColumn, dirichlet_project, fit_spline_loocv, normalize

__all__ = [
    "InsufficientSamples",
    "MiEstimate",
    "CiResult",
    "knn_mi",
    "ci_test",
    "permutation_null",
]

TIE_JITTER = 1e-10


class InsufficientSamples(ValueError):
    pass


@dataclass(frozen=True)
class MiEstimate:
    value: float
    k: int

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class CiResult:
    statistic: float
    p_value: float
    independent: bool


def _copula(ranks, u):
    # ranks are 0..n-1; jitter is looked up by rank so swapping a and b
    # swaps coordinates without changing the joint point cloud
    n = ranks.shape[0]
    return (ranks + TIE_JITTER * (n - 1) * u[ranks]) / (n - 1)


def knn_mi(a, b, k=10, rng=None):
    """KSG estimator (first variant) of I(a; b) in nats.

    Both inputs are mapped to their ranks on [0, 1] before distances are
    computed, which makes the estimate invariant to strictly monotone
    transforms of either margin.  Distance ties on the rank lattice are broken
    by a jitter of relative size 1e-10.  The estimate is not clamped at zero.

    Parameters
    ----------
    a, b : array_like of shape (n,)
    k : int
        Number of neighbours in the joint space.
    rng : numpy.random.Generator, optional
        Source of the tie-breaking jitter; a fixed stream is used if omitted.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    n = a.shape[0]
    if b.shape[0] != n:
        raise ValueError("a and b must have the same length")
    if k < 1:
        raise ValueError("k must be positive")
    if n <= k:
        raise InsufficientSamples(f"need more than k={k} samples, got {n}")
    if rng is None:
        rng = keyed_rng(0, 0x4D49)
    u = rng.uniform(size=n)
    x = _copula(rankdata(a, method="ordinal").astype(np.intp) - 1, u)
    y = _copula(rankdata(b, method="ordinal").astype(np.intp) - 1, u)
    return MiEstimate(_ksg(x, y, k), k)


def _ksg(x, y, k):
    n = x.shape[0]
    tree = cKDTree(np.column_stack([x, y]))
    dist, _ = tree.query(np.column_stack([x, y]), k=k + 1, p=np.inf)
    # coordinates lie in [0, 1]; a few ulps absorb rounding in v +- eps while
    # staying far below the 1e-10 tie jitter
    eps = dist[:, k] - 4 * np.finfo(float).eps
    nx = _strict_counts(x, eps)
    ny = _strict_counts(y, eps)
    return float(digamma(k) + digamma(n) - np.mean(digamma(nx + 1) + digamma(ny + 1)))


def _strict_counts(v, eps):
    """Number of other samples with ``|v_j - v_i| < eps_i``."""
    s = np.sort(v)
    hi = np.searchsorted(s, v + eps, side="left")
    lo = np.searchsorted(s, v - eps, side="right")
    return hi - lo - 1


@lru_cache(maxsize=64)
def _cached_null(n, k, B, seed):
    rng = keyed_rng(seed, 0x4E554C4C, n, k, B)
    ranks = np.arange(n, dtype=float)
    out = np.empty(B)
    for b in range(B):
        out[b] = knn_mi(ranks, rng.permutation(n), k, rng).value
    out.setflags(write=False)
    return out


def permutation_null(n, k=10, B=200, seed=0):
    """Null distribution of :func:`knn_mi` under independence.

    Because the estimator only sees ranks, shuffling one argument against the
    other produces a uniformly random rank pairing whatever the data, so the
    permutation distribution depends on ``(n, k)`` alone and can be shared.
    """
    return _cached_null(int(n), int(k), int(B), int(seed))


def _residualize(target, W, rng):
    z, _ = dirichlet_project(W, rng)
    return target - fit_spline_loocv(z, target).loo_predictions


def ci_test(xi, xj, W=None, alpha=0.1, B=200, rng=None, k=10, null="cached"):
    """Test ``xi`` independent of ``xj`` given the columns of ``W``.

    With a non-empty ``W`` both variables are replaced by their leave-one-out
    spline residuals on a random projection of ``W``.  The statistic is the
    KSG mutual information of the two (residual) series, and the p-value is
    ``(1 + #{null >= statistic}) / (1 + B)``.

    ``null="fresh"`` shuffles ``xj`` (or its residual) ``B`` times with
    ``rng``; ``null="cached"`` reuses a shared draw of the same permutation
    distribution (see :func:`permutation_null`).
    """
    if rng is None:
        rng = keyed_rng(0, 0xC1)
    try:
        xi, _ = normalize(xi)
        xj, _ = normalize(xj)
    except DegenerateColumn:
        return CiResult(0.0, 1.0, True)
    if W is not None:
        W = np.asarray(W, dtype=float)
        if W.ndim == 1:
            W = W[:, None]
        if W.shape[1] == 0:
            W = None
    if W is not None:
        ri = _residualize(xi, W, rng)
        rj = _residualize(xj, W, rng)
    else:
        ri, rj = xi, xj
    stat = knn_mi(ri, rj, k, rng).value
    if null == "cached":
        draws = permutation_null(len(ri), k, B)
    elif null == "fresh":
        draws = np.array([knn_mi(ri, rj[rng.permutation(len(rj))], k, rng).value for _ in range(B)])
    else:
        raise ValueError(f"unknown null mode {null!r}")
    p = (1.0 + np.count_nonzero(draws >= stat)) / (1.0 + B)
    return CiResult(stat, float(p), bool(p >= alpha))
