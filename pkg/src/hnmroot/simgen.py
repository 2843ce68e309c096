"""Synthetic data: bivariate cause-effect pairs and random multivariate SEMs.

Nonlinearities for the conditional mean ``f`` and for ``g - 1`` (the
conditional scale) are drawn from
``{sqrt(x^2 + 1) - 1, x * Phi(x), 1 / (1 + exp(-x))}``, with ``Phi`` the
standard normal CDF.  Post-nonlinear outer maps are drawn from
``{tanh, softplus, sigmoid}``.
"""

import io
import json
from dataclasses import dataclass
from math import gamma, sqrt, pi, exp

import numpy as np
from scipy.special import expit, log_ndtr, ndtr
from scipy.optimize import brentq

from ._rng import as_seed, keyed_rng
from .shapley import BoostConfig, ShapleyMatrix, fit_logodds, tree_shap

__all__ = [
    "FAMILIES",
    "ERROR_DISTS",
    "NON_GAUSSIAN",
    "ERROR_MAD",
    "SemSpec",
    "GeneratedData",
    "nonlinearity",
    "outer",
    "noise_scale",
    "sample_error",
    "label_logits",
    "sample_pair",
    "sample_spec",
    "generate",
    "replay",
    "ground_truth_shapley",
    "shapley_from_samples",
]

FAMILIES = ("LiNGAM", "ANM", "HNM", "PNL")
ERROR_DISTS = ("uniform", "t5", "chi2_3", "gaussian")
NON_GAUSSIAN = ("uniform", "t5", "chi2_3")

# E|E - EE| of each raw distribution, in closed form:
#   uniform[-1, 1]: 1/2
#   Student t, 5 dof: 2 sqrt(5) Gamma(3) / (sqrt(pi) (5 - 1) Gamma(5/2))
#   chi-square, 3 dof (Gamma(3/2, scale 2)): 2 * 2 * a^a e^-a / Gamma(a), a = 3/2
#   centred Gaussian, variance 1/9: (1/3) sqrt(2/pi)
ERROR_MAD = {
    "uniform": 0.5,
    "t5": 2 * sqrt(5) * gamma(3) / (sqrt(pi) * 4 * gamma(2.5)),
    "chi2_3": 4 * 1.5 ** 1.5 * exp(-1.5) / gamma(1.5),
    "gaussian": sqrt(2 / pi) / 3,
}
ERROR_MEAN = {"uniform": 0.0, "t5": 0.0, "chi2_3": 3.0, "gaussian": 0.0}


def _softplus(x):
    return np.logaddexp(0.0, x)


def _x_phi(x):
    return x * ndtr(x)


_NONLINEAR = (
    lambda x: np.sqrt(x * x + 1.0) - 1.0,
    _x_phi,
    expit,
)
_OUTER = (np.tanh, _softplus, expit)


def nonlinearity(choice, x):
    return _NONLINEAR[choice](np.asarray(x, dtype=float))


def outer(choice, x):
    return _OUTER[choice](np.asarray(x, dtype=float))


def noise_scale(dist, native=True):
    """Factor turning a unit-MAD error back into its native distribution."""
    return ERROR_MAD[dist] if native else 1.0


def sample_error(dist, n, rng):
    """Draw ``n`` errors with mean 0 and mean absolute value 1.

    Multiplying by ``noise_scale(dist)`` recovers the native distribution
    (for example uniform on [-1, 1]).
    """
    if dist == "uniform":
        e = rng.uniform(-1.0, 1.0, n)
    elif dist == "t5":
        e = rng.standard_t(5, n)
    elif dist == "chi2_3":
        e = rng.chisquare(3, n)
    elif dist == "gaussian":
        e = rng.normal(0.0, 1.0 / 3.0, n)
    else:
        raise ValueError(f"unknown error distribution {dist!r}")
    return (e - ERROR_MEAN[dist]) / ERROR_MAD[dist]


def _coef(rng, size=None):
    mag = rng.uniform(0.25, 1.0, size)
    sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
    return mag * sign


def sample_pair(family, n, rng, gaussian=None, native_scale=True):
    """Draw one cause-effect pair.

    Parameters
    ----------
    family : {"LiNGAM", "ANM", "HNM", "PNL"}
    n : int
    rng : numpy.random.Generator
    gaussian : bool or None
        Force a Gaussian (True) or non-Gaussian (False) error; ``None`` draws
        uniformly from the distributions allowed for the family.  LiNGAM never
        uses a Gaussian error.
    native_scale : bool
        Enter the error at its native spread (variance 1/9 for the Gaussian,
        [-1, 1] for the uniform); otherwise at unit mean absolute deviation.

    Returns
    -------
    x, y : ndarray
        The two variables in presentation order (randomly swapped).
    direction : str
        ``"X->Y"`` when ``x`` is the cause.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    if n < 100:
        raise ValueError("need at least 100 samples")
    if family == "LiNGAM":
        if gaussian:
            raise ValueError("LiNGAM requires a non-Gaussian error")
        dists = NON_GAUSSIAN
    elif gaussian is None:
        dists = ERROR_DISTS
    else:
        dists = ("gaussian",) if gaussian else NON_GAUSSIAN
    dist = dists[rng.integers(len(dists))]
    f = int(rng.integers(3))
    g = int(rng.integers(3))
    h = int(rng.integers(3))
    beta = float(_coef(rng))
    cause = rng.standard_normal(n)
    cause = (cause - cause.mean()) / cause.std()
    e = sample_error(dist, n, rng) * noise_scale(dist, native_scale)
    if family == "LiNGAM":
        effect = beta * cause + e
    elif family == "ANM":
        effect = nonlinearity(f, cause) + e
    elif family == "HNM":
        effect = nonlinearity(f, cause) + e * (1.0 + nonlinearity(g, cause))
    else:
        effect = outer(h, nonlinearity(f, cause) + e)
    if rng.random() < 0.5:
        return cause, effect, "X->Y"
    return effect, cause, "Y->X"


@dataclass
class SemSpec:
    """A random HNM (or PNL) structural equation model.

    Indices refer to the pre-permutation topological order, in which ``dag``
    is strictly upper triangular.  ``permutation[c]`` is the SEM variable shown
    as output column ``c``.  The ``target`` variable is replaced by the binary
    label, whose log-odds are ``label_scale * sum_j beta1[j, target] X_j +
    intercept``.
    """

    dag: np.ndarray
    beta1: np.ndarray
    beta2: np.ndarray
    f_choice: np.ndarray
    g_choice: np.ndarray
    h_choice: np.ndarray
    error_dist: list
    permutation: np.ndarray
    target: int
    intercept: float = 0.0
    label_scale: float = 1.0
    model: str = "hnm"
    native_scale: bool = True

    @property
    def p(self):
        return self.dag.shape[0]

    @property
    def feature_vars(self):
        """SEM variables in output-column order (target excluded)."""
        return [int(v) for v in self.permutation if v != self.target]

    def ancestors(self, v):
        out, stack = set(), [v]
        while stack:
            for j in np.flatnonzero(self.dag[:, stack.pop()]):
                if j not in out:
                    out.add(int(j))
                    stack.append(int(j))
        return out

    def to_dict(self):
        return {
            "p": self.p,
            "dag": self.dag.astype(int).tolist(),
            "beta1": self.beta1.tolist(),
            "beta2": self.beta2.tolist(),
            "f_choice": self.f_choice.tolist(),
            "g_choice": self.g_choice.tolist(),
            "h_choice": self.h_choice.tolist(),
            "error_dist": list(self.error_dist),
            "permutation": self.permutation.tolist(),
            "target": self.target,
            "intercept": self.intercept,
            "label_scale": self.label_scale,
            "model": self.model,
            "native_scale": self.native_scale,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(
            dag=np.array(d["dag"], dtype=bool),
            beta1=np.array(d["beta1"], dtype=float),
            beta2=np.array(d["beta2"], dtype=float),
            f_choice=np.array(d["f_choice"], dtype=int),
            g_choice=np.array(d["g_choice"], dtype=int),
            h_choice=np.array(d["h_choice"], dtype=int),
            error_dist=list(d["error_dist"]),
            permutation=np.array(d["permutation"], dtype=int),
            target=int(d["target"]),
            intercept=float(d["intercept"]),
            label_scale=float(d.get("label_scale", 1.0)),
            model=d.get("model", "hnm"),
            native_scale=bool(d.get("native_scale", True)),
        )


def sample_spec(p, expected_degree=2.0, rng=None, model="hnm", dists=NON_GAUSSIAN,
                label_scale=1.0, native_scale=True, tune_prevalence=True):
    """Draw a random SEM over ``p`` variables with the given expected degree.

    Adjacencies are independent Bernoulli(expected_degree / (p - 1)) draws in
    the upper triangle; two independent coefficient matrices share that
    support with magnitudes uniform on [0.25, 1] and random signs.  The label
    replaces the last variable (in topological order) that has a parent; an
    edge into the last variable is added when the graph has none.  The label
    intercept is tuned toward 50% prevalence on a 10^4-row pre-sample.
    """
    if p < 2:
        raise ValueError("need at least two variables")
    if rng is None:
        rng = np.random.default_rng()
    prob = min(1.0, expected_degree / (p - 1))
    dag = np.triu(rng.random((p, p)) < prob, 1)
    if not dag.any():
        dag[p - 2, p - 1] = True
    beta1 = np.where(dag, _coef(rng, (p, p)), 0.0)
    beta2 = np.where(dag, _coef(rng, (p, p)), 0.0)
    with_parents = np.flatnonzero(dag.any(axis=0))
    spec = SemSpec(
        dag=dag,
        beta1=beta1,
        beta2=beta2,
        f_choice=rng.integers(0, 3, p),
        g_choice=rng.integers(0, 3, p),
        h_choice=rng.integers(0, 3, p),
        error_dist=[dists[i] for i in rng.integers(0, len(dists), p)],
        permutation=rng.permutation(p),
        target=int(with_parents.max()),
        label_scale=label_scale,
        model=model,
        native_scale=native_scale,
    )
    if tune_prevalence:
        spec.intercept = _tune_intercept(spec, keyed_rng(as_seed(rng), 0x1C))
    return spec


def _structural(spec, errors):
    """Ancestral pass; ``errors`` is (n, p) in SEM order.  Returns X and label logits."""
    n, p = errors.shape
    X = np.zeros((n, p))
    for i in range(p):
        noise = errors[:, i] * noise_scale(spec.error_dist[i], spec.native_scale)
        parents = np.flatnonzero(spec.dag[:, i])
        a1 = X[:, parents] @ spec.beta1[parents, i] if parents.size else np.zeros(n)
        if i == spec.target:
            continue
        if spec.model == "hnm":
            a2 = X[:, parents] @ spec.beta2[parents, i] if parents.size else np.zeros(n)
            X[:, i] = (nonlinearity(spec.f_choice[i], a1)
                       + noise * (1.0 + nonlinearity(spec.g_choice[i], a2)))
        elif spec.model == "pnl":
            X[:, i] = outer(spec.h_choice[i], nonlinearity(spec.f_choice[i], a1) + noise)
        else:
            raise ValueError(f"unknown model {spec.model!r}")
    t = spec.target
    parents = np.flatnonzero(spec.dag[:, t])
    logits = spec.label_scale * (X[:, parents] @ spec.beta1[parents, t]) + spec.intercept
    return X, logits


def _draw_errors(spec, n, rng):
    E = np.zeros((n, spec.p))
    for i in range(spec.p):
        if i != spec.target:
            E[:, i] = sample_error(spec.error_dist[i], n, rng)
    return E


def _tune_intercept(spec, rng, n=10_000):
    E = _draw_errors(spec, n, rng)
    saved = spec.intercept
    spec.intercept = 0.0
    _, base = _structural(spec, E)
    spec.intercept = saved

    def gap(c):
        return float(np.mean(expit(base + c))) - 0.5

    lo, hi = -50.0, 50.0
    if gap(lo) > 0 or gap(hi) < 0:
        return 0.0
    return float(brentq(gap, lo, hi, xtol=1e-10))


@dataclass
class GeneratedData:
    """Features, label and true errors, with columns in output order."""

    X: np.ndarray
    d: np.ndarray
    true_errors: np.ndarray
    spec: SemSpec

    @property
    def names(self):
        return [f"X{v + 1}" for v in self.spec.feature_vars]

    def to_csv(self):
        buf = io.StringIO()
        names = self.names
        buf.write(",".join(names + ["D"] + [f"E.{c}" for c in names]) + "\n")
        for x, d, e in zip(self.X, self.d, self.true_errors):
            vals = [repr(float(v)) for v in x] + [str(int(d))] + [repr(float(v)) for v in e]
            buf.write(",".join(vals) + "\n")
        return buf.getvalue()


def generate(spec, n, rng):
    """Ancestral sampling from ``spec``; the label replaces the target variable."""
    E = _draw_errors(spec, n, rng)
    X, logits = _structural(spec, E)
    d = (rng.random(n) < expit(logits)).astype(int)
    cols = spec.feature_vars
    return GeneratedData(X[:, cols], d, E[:, cols], spec)


def replay(spec, true_errors):
    """Recompute the features from errors given in output-column order."""
    n = true_errors.shape[0]
    E = np.zeros((n, spec.p))
    E[:, spec.feature_vars] = true_errors
    X, _ = _structural(spec, E)
    return X[:, spec.feature_vars]


def label_logits(spec, true_errors):
    """Exact log-odds of the label given errors in output-column order."""
    n = true_errors.shape[0]
    E = np.zeros((n, spec.p))
    E[:, spec.feature_vars] = true_errors
    return _structural(spec, E)[1]


def shapley_from_samples(E_train, d_train, E_test, config=None):
    """Fit the boosted log-odds model and attribute the test rows."""
    model = fit_logodds(E_train, d_train, config)
    return tree_shap(model, np.atleast_2d(E_test))


def ground_truth_shapley(spec, test_errors, rng, n_samples=50_000, config=None):
    """Reference attributions: fit on ``n_samples`` fresh true-error draws.

    ``test_errors`` are true error vectors in output-column order.
    """
    gt = generate(spec, n_samples, rng)
    return shapley_from_samples(gt.true_errors, gt.d, test_errors, config)
