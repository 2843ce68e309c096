"""Linear-spline regression with closed-form leave-one-out cross-validation.

Predictors and responses live on [0, 1].  A curve with ``m`` knots uses the
order-1 truncated power basis ``max(0, x - k_j)`` at the knots
``0, 1/(m-1), ..., (m-2)/(m-1)``; the knot at 1 contributes nothing on [0, 1]
and is replaced by an intercept column, so every basis has exactly ``m``
columns.  Multivariate predictors are reduced to one dimension by a random
convex combination before fitting.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

__all__ = [
    "DegenerateColumn",
    "AffineScaler",
    "SplineBasis",
    "FittedCurve",
    "ProjectionVector",
    "normalize",
    "knot_grid",
    "fit_spline",
    "fit_spline_loocv",
    "dirichlet_project",
]

JITTER = 1e-8


class DegenerateColumn(ValueError):
    """Raised when a column has fewer than two distinct values."""


@dataclass(frozen=True)
class AffineScaler:
    """Map ``x -> (x - shift) * scale``; ``scale`` is ``1 / (max - min)``."""

    shift: float
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    def transform(self, x):
        return (np.asarray(x, dtype=float) - self.shift) * self.scale

    def inverse(self, z):
        return np.asarray(z, dtype=float) / self.scale + self.shift


def normalize(column):
    """Affinely rescale ``column`` so that its minimum is 0 and maximum is 1.

    Returns
    -------
    scaled : ndarray
    scaler : AffineScaler

    Raises
    ------
    DegenerateColumn
        If the column is constant.
    """
    column = np.asarray(column, dtype=float)
    lo, hi = column.min(), column.max()
    if not hi > lo:
        raise DegenerateColumn("column has zero range")
    scaler = AffineScaler(shift=float(lo), scale=float(1.0 / (hi - lo)))
    # divide rather than multiply by scale so the max lands exactly on 1
    scaled = (column - lo) / (hi - lo)
    return scaled, scaler


def knot_grid(n):
    """Candidate knot counts: 10 equispaced points on [2, sqrt(n/10)], rounded.

    Fewer than 40 samples leaves only ``m = 2`` (a straight line).
    """
    top = np.sqrt(n / 10.0)
    if n < 40 or top <= 2.0:
        return [2]
    grid = np.floor(np.linspace(2.0, top, 10) + 0.5).astype(int)
    grid = grid[(grid >= 2) & (grid <= top + 1e-12)]
    return sorted(set(int(m) for m in grid))


@dataclass(frozen=True)
class SplineBasis:
    knot_count: int

    def __post_init__(self):
        if self.knot_count < 2:
            raise ValueError("knot_count must be at least 2")

    @property
    def knots(self):
        """All ``m`` equispaced knots on [0, 1], including the dropped knot at 1."""
        return np.linspace(0.0, 1.0, self.knot_count)

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        hinges = self.knots[:-1]
        out = np.empty((x.shape[0], self.knot_count))
        out[:, 0] = 1.0
        np.maximum(x[:, None] - hinges[None, :], 0.0, out=out[:, 1:])
        return out


@dataclass
class FittedCurve:
    """A fitted linear spline with its leave-one-out diagnostics.

    ``fitted`` holds in-sample predictions; ``loo_predictions`` holds the
    prediction for each sample from the fit that excludes it.
    """

    basis: SplineBasis
    coefficients: np.ndarray
    loo_predictions: np.ndarray
    loo_sse: float
    fitted: np.ndarray
    ridge: float
    candidates: dict = field(default_factory=dict)

    @property
    def knot_count(self):
        return self.basis.knot_count

    def predict(self, x):
        return self.basis.evaluate(x) @ self.coefficients


def _ridge_for(gram, m):
    return JITTER * float(np.trace(gram)) / m


def fit_spline(x, y, knot_count, ridge=None):
    """Fit one spline with a fixed knot count and exact LOO predictions.

    ``ridge`` defaults to ``1e-8 * trace(B'B) / m``.  The hat-matrix shortcut
    ``e_i / (1 - h_ii)`` is exact for a fixed ridge value.

    Raises ``numpy.linalg.LinAlgError`` when the normal equations cannot be
    factorized.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    basis = SplineBasis(knot_count)
    design = basis.evaluate(x)
    gram = design.T @ design
    if ridge is None:
        ridge = _ridge_for(gram, knot_count)
    gram[np.diag_indices_from(gram)] += ridge
    try:
        factor = linalg.cho_factor(gram, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(str(exc)) from exc
    coef = linalg.cho_solve(factor, design.T @ y, check_finite=False)
    fitted = design @ coef
    solved = linalg.cho_solve(factor, design.T, check_finite=False)
    leverage = np.einsum("ij,ji->i", design, solved)
    if not np.all(np.isfinite(coef)) or np.any(leverage >= 1.0 - 1e-12):
        raise np.linalg.LinAlgError("ill-conditioned spline fit")
    resid = y - fitted
    loo = y - resid / (1.0 - leverage)
    sse = float(np.sum((y - loo) ** 2))
    return FittedCurve(basis, coef, loo, sse, fitted, float(ridge))


def fit_spline_loocv(x, y, grid=None):
    """Choose the knot count by exact LOOCV and return the winning curve.

    Candidates come from :func:`knot_grid`; ties go to the smaller knot count.
    A candidate whose normal equations cannot be factorized is skipped, and
    ``m = 2`` is always tried last as a fallback.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.shape[0]
    if y.shape[0] != n:
        raise ValueError("x and y must have the same length")
    if n < 4:
        raise ValueError("need at least 4 samples")
    if grid is None:
        grid = knot_grid(n)
    best = None
    scores = {}
    for m in grid:
        try:
            curve = fit_spline(x, y, m)
        except np.linalg.LinAlgError:
            continue
        scores[m] = curve.loo_sse
        if best is None or curve.loo_sse < best.loo_sse:
            best = curve
    if best is None:
        best = fit_spline(x, y, 2)
        scores[2] = best.loo_sse
    best.candidates = scores
    return best


@dataclass(frozen=True)
class ProjectionVector:
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("projection weights must lie on the simplex")


def dirichlet_project(X, rng):
    """Project the columns of ``X`` onto one predictor in [0, 1].

    Weights are uniform on the simplex (normalized standard exponentials).
    The combination is rescaled to [0, 1]; a constant combination maps to 0.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    t = X.shape[1]
    if t < 1:
        raise ValueError("need at least one predictor column")
    if t == 1:
        weights = np.ones(1)
    else:
        draws = rng.standard_exponential(t)
        weights = draws / draws.sum()
    combo = X @ weights
    try:
        projected, _ = normalize(combo)
    except DegenerateColumn:
        projected = np.zeros_like(combo)
    return projected, ProjectionVector(weights)
