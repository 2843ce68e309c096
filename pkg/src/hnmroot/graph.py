"""Order-independent skeleton discovery (the adjacency phase of PC-Stable)."""

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from ._rng import as_seed, keyed_rng
from .numkit import DegenerateColumn, normalize
from .stats import ci_test

__all__ = ["Skeleton", "skeleton_stable", "normalize_columns"]


@dataclass
class Skeleton:
    """Undirected graph over ``p`` variables stored as a boolean matrix."""

    adjacency: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.adjacency, dtype=bool)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("adjacency must be square")
        if not np.array_equal(A, A.T):
            raise ValueError("adjacency must be symmetric")
        if A.diagonal().any():
            raise ValueError("self-edges are not allowed")
        self.adjacency = A.copy()

    @property
    def p(self):
        return self.adjacency.shape[0]

    @classmethod
    def complete(cls, p):
        return cls(~np.eye(p, dtype=bool))

    @classmethod
    def empty(cls, p):
        return cls(np.zeros((p, p), dtype=bool))

    @classmethod
    def from_edges(cls, p, edges):
        A = np.zeros((p, p), dtype=bool)
        for i, j in edges:
            if i == j:
                raise ValueError("self-edges are not allowed")
            A[i, j] = A[j, i] = True
        return cls(A)

    def edges(self):
        i, j = np.nonzero(np.triu(self.adjacency, 1))
        return list(zip(i.tolist(), j.tolist()))

    def neighbors(self, i):
        return np.flatnonzero(self.adjacency[i]).tolist()

    def to_edgelist(self):
        """One ``i j`` pair per line, 0-indexed, ``i < j``."""
        return "".join(f"{i} {j}\n" for i, j in self.edges())

    @classmethod
    def from_edgelist(cls, p, text):
        edges = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            i, j = line.split()
            edges.append((int(i), int(j)))
        return cls.from_edges(p, edges)


def normalize_columns(X):
    """Normalize every column to [0, 1]; constant columns become zeros."""
    X = np.asarray(X, dtype=float)
    out = np.zeros_like(X)
    for c in range(X.shape[1]):
        try:
            out[:, c] = normalize(X[:, c])[0]
        except DegenerateColumn:
            pass
    return out


def skeleton_stable(X, alpha=0.1, max_cond=3, rng=0, keys=None, B=200, k=10, null="cached"):
    """Estimate the skeleton with level-wise adjacency snapshots.

    At each conditioning level ``l`` the neighbour sets are frozen, and every
    remaining edge ``i - j`` is tested given each subset of size ``l`` of the
    frozen neighbours of ``i`` (excluding ``j``), and likewise from ``j``'s
    side.  Edges found independent are removed only after the level finishes.

    Each test draws from a stream keyed by the unordered variable pair and the
    conditioning set, so the output does not depend on the column order.
    ``keys`` assigns a stable integer label to each column for that purpose
    (default: the column index).

    Parameters
    ----------
    X : array_like of shape (n, p)
    alpha : float
        Significance level; an edge is dropped when ``p_value >= alpha``.
    max_cond : int
        Largest conditioning set size.
    rng : int or numpy.random.Generator
        Base seed.

    Returns
    -------
    Skeleton
    """
    X = normalize_columns(X)
    n, p = X.shape
    if p < 2:
        raise ValueError("need at least two variables")
    seed = as_seed(rng)
    keys = list(range(p)) if keys is None else [int(k_) for k_ in keys]
    if len(set(keys)) != p:
        raise ValueError("keys must be distinct")

    A = ~np.eye(p, dtype=bool)
    results = {}

    def independent(i, j, W):
        # canonical argument order by key keeps the test symmetric in (i, j)
        if keys[i] > keys[j]:
            i, j = j, i
        tag = (keys[i], keys[j], frozenset(keys[w] for w in W))
        if tag not in results:
            stream = keyed_rng(seed, 0x534B, (keys[i], keys[j]), sorted(tag[2]))
            Wcols = X[:, list(W)] if W else None
            results[tag] = ci_test(X[:, i], X[:, j], Wcols, alpha=alpha, B=B, rng=stream, k=k,
                                   null=null).independent
        return results[tag]

    for level in range(max_cond + 1):
        snapshot = [sorted(np.flatnonzero(A[i]).tolist(), key=lambda v: keys[v]) for i in range(p)]
        if all(len(nb) - 1 < level for nb in snapshot):
            break
        removed = set()
        for i in range(p):
            for j in snapshot[i]:
                if (j, i) in removed:
                    continue
                candidates = [v for v in snapshot[i] if v != j]
                if len(candidates) < level:
                    continue
                for W in combinations(candidates, level):
                    if independent(i, j, W):
                        removed.add((i, j))
                        break
        for i, j in removed:
            A[i, j] = A[j, i] = False
    return Skeleton(A)
