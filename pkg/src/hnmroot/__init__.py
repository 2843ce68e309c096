"""Root-cause attribution of a binary label to recovered structural error terms.

The pipeline estimates an undirected skeleton with conditional independence
tests, peels off sinks to recover every variable's error term, fits a
boosted log-odds model of a binary diagnosis on those errors, and ranks the
errors of each patient by their Shapley attribution.
"""

from .graph import Skeleton, skeleton_stable
from .metrics import modified_rbo, rbo, shapley_mse, weighted_pair_accuracy
from .ordering import Direction, causal_direction, extract_errors
from .partial_out import partial_out
from .shapley import fit_logodds, root_causes, tree_shap
from .stats import ci_test, knn_mi

__version__ = "0.1.0"

__all__ = [
    "Skeleton",
    "skeleton_stable",
    "Direction",
    "causal_direction",
    "extract_errors",
    "partial_out",
    "fit_logodds",
    "tree_shap",
    "root_causes",
    "knn_mi",
    "ci_test",
    "rbo",
    "modified_rbo",
    "shapley_mse",
    "weighted_pair_accuracy",
]
