"""Two-stage recovery of one heteroscedastic error term."""

from dataclasses import dataclass

import numpy as np

from .numkit import (
    DegenerateColumn,
    FittedCurve,
    ProjectionVector,
    dirichlet_project,
    fit_spline_loocv,
    normalize,
)

__all__ = ["PartialOutFit", "partial_out", "MAD_FLOOR"]

# floor on the conditional MAD, in units of the [0, 1]-normalized response
MAD_FLOOR = 1e-6


@dataclass
class PartialOutFit:
    """Result of partialling a set of predictors out of one variable.

    ``mean_fit`` and ``mad_fit`` are ``None`` when there were no predictors
    (the error is then the marginally standardized variable).
    """

    errors: np.ndarray
    mean_fit: FittedCurve | None = None
    mad_fit: FittedCurve | None = None
    projection: ProjectionVector | None = None
    degenerate: bool = False

    @property
    def conditional_mad(self):
        if self.mad_fit is None:
            return None
        return np.maximum(self.mad_fit.fitted, MAD_FLOOR)


def partial_out(V, xi, rng, stage2_target="validation"):
    """Estimate ``E = (x - m(V)) / sigma(V)`` for one variable.

    Stage one regresses ``xi`` on a random projection of ``V`` and keeps both
    the in-sample fit and the leave-one-out predictions.  Stage two regresses
    the absolute leave-one-out residuals on the same projected predictor, again
    choosing the knot count by leave-one-out error, and its in-sample fit is the
    conditional MAD.

    Parameters
    ----------
    V : array_like of shape (n, t)
        Predictors, each normalized to [0, 1]; ``t`` may be zero.
    xi : array_like of shape (n,)
        Response.  It is normalized internally, so the result does not depend
        on its location or scale.
    rng : numpy.random.Generator
        Used for the projection weights when ``t > 1``.
    stage2_target : {"validation", "insample"}
        Which stage-one residual stage two regresses on.  Only "validation" is
        correct; "insample" exists to demonstrate the difference in tests.
    """
    xi = np.asarray(xi, dtype=float)
    n = xi.shape[0]
    try:
        y, _ = normalize(xi)
    except DegenerateColumn:
        return PartialOutFit(np.zeros(n), degenerate=True)

    V = np.asarray(V, dtype=float) if V is not None else np.empty((n, 0))
    if V.ndim == 1:
        V = V[:, None]
    if V.shape[1] == 0:
        centred = y - y.mean()
        return PartialOutFit(centred / np.mean(np.abs(centred)))

    z, projection = dirichlet_project(V, rng)
    mean_fit = fit_spline_loocv(z, y)
    if stage2_target == "validation":
        spread = np.abs(y - mean_fit.loo_predictions)
    elif stage2_target == "insample":
        spread = np.abs(y - mean_fit.fitted)
    else:
        raise ValueError(f"unknown stage2_target {stage2_target!r}")
    mad_fit = fit_spline_loocv(z, spread)
    sigma = np.maximum(mad_fit.fitted, MAD_FLOOR)
    errors = (y - mean_fit.fitted) / sigma
    return PartialOutFit(errors, mean_fit, mad_fit, projection)
