import numpy as np
import pytest

from gbmcal import SynthSpec, build_feature_set, synth_generate
from gbmcal.gbm import GbmModel, RegressionTree


def random_tree_dict(rng, depth, n_features=18):
    """Nested-dict tree with random splits; independent of RegressionTree internals."""
    if depth == 0 or rng.random() < 0.2:
        return {"leaf": float(rng.normal(0, 1.5))}
    return {
        "feature": int(rng.integers(n_features)),
        "threshold": float(rng.normal(0, 1)),
        "left": random_tree_dict(rng, depth - 1, n_features),
        "right": random_tree_dict(rng, depth - 1, n_features),
    }


def random_model(rng, n_rounds=3, n_classes=3, depth=2, weight_scale=1.0):
    dicts = [[random_tree_dict(rng, depth) for _ in range(n_classes)] for _ in range(n_rounds)]
    trees = [[RegressionTree.from_dict(d) for d in row] for row in dicts]
    model = GbmModel(
        class_names=tuple(f"c{p}" for p in range(n_classes)),
        init_scores=rng.normal(0, 0.5, n_classes),
        estimators=trees,
        weights=rng.normal(0, weight_scale, (n_rounds, n_classes)),
        shrinkage=0.1,
    )
    return model, dicts


def walk_dict(node, x):
    while "leaf" not in node:
        node = node["left"] if x[node["feature"]] <= node["threshold"] else node["right"]
    return node["leaf"]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_features():
    """Three subjects, four classes, 4 segments of 5 windows each per class."""
    spec = SynthSpec(subjects=(1, 2, 3), segments_per_class=4)
    return build_feature_set(synth_generate(spec, 3))


@pytest.fixture(scope="session")
def drift_spec():
    return SynthSpec(subjects=(1, 2, 3, 4, 5, 6), segments_per_class=10, subject_scale={6: 1.5})


@pytest.fixture(scope="session")
def drift_features(drift_spec):
    return build_feature_set(synth_generate(drift_spec, 1))


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion.

    Call with the criterion label and a short detail string once the
    measured values are known; the verdict follows the test outcome.
    """
    state = {}

    def record(label, detail):
        state["label"], state["detail"] = label, detail

    yield record
    if "label" in state:
        verdict = request.node.stash.get(_OUTCOME, "PASS")
        line = f"{verdict} {state['label']}: {state['detail']}"
        ACCEPTANCE_LINES.append(line)
        print(line)


_OUTCOME = pytest.StashKey[str]()


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    if report.failed:
        item.stash[_OUTCOME] = "FAIL"
    elif report.skipped:
        item.stash[_OUTCOME] = "SKIP"
    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
