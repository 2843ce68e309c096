import numpy as np
import pytest

from hnmroot import shapley

# Every attribution matrix built in this process records its worst
# local-accuracy gap, so one test can check the whole suite at the end.
ATTRIBUTION_GAPS = []

_init = shapley.ShapleyMatrix.__init__


def _recording_init(self, *args, **kwargs):
    _init(self, *args, **kwargs)
    if self.prediction is not None and self.values.size:
        ATTRIBUTION_GAPS.append((self.values.shape[0], float(self.local_accuracy_gap().max())))


shapley.ShapleyMatrix.__init__ = _recording_init


def pytest_collection_modifyitems(items):
    # the suite-wide local accuracy check must see every other test's rows
    last = [it for it in items if it.get_closest_marker("runs_last")]
    rest = [it for it in items if not it.get_closest_marker("runs_last")]
    items[:] = rest + last


def pytest_configure(config):
    config.addinivalue_line("markers", "runs_last: run after every other collected test")


def random_ensemble(seed, p=None, n=300):
    """A small fitted ensemble on random data with a random configuration."""
    rng = np.random.default_rng(seed)
    p = p or int(rng.integers(2, 9))
    E = rng.normal(size=(n, p))
    w = rng.normal(size=p)
    logits = E @ w + np.sin(2 * E[:, 0]) * E[:, -1]
    d = (rng.random(n) < 1 / (1 + np.exp(-logits))).astype(int)
    if d.min() == d.max():
        d[0] = 1 - d[0]
    model = shapley.fit_logodds(
        E, d,
        rounds=int(rng.integers(1, 21)),
        max_depth=int(rng.integers(1, 4)),
        learning_rate=float(rng.uniform(0.05, 0.5)),
    )
    return model, E, rng


@pytest.fixture
def ensemble_factory():
    return random_ensemble


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = {}


def record_criterion(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
