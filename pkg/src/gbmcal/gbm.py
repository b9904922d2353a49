"""Multiclass gradient-boosted regression trees with explicit estimator weights.

A model scores class ``p`` as ``init_scores[p] + sum_j weights[j, p] * phi[j, p]``
where ``phi[j, p]`` is the leaf value that input ``x`` reaches in tree
``estimators[j][p]``. Trees store raw Newton-step leaf values; shrinkage is
carried by the weights, so a freshly trained model has every weight equal to
the training shrinkage.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelLoadError, TrainingError
from .features import N_FEATURES, FeatureSet

FORMAT_NAME = "gbmcal-model"
FORMAT_VERSION = 1


class RegressionTree:
    """Binary regression tree stored as flat node arrays.

    Node 0 is the root. ``feature[i] == -1`` marks a leaf. Inputs with
    ``x[feature] <= threshold`` go left.
    """

    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=np.float64)
        for arr in (self.feature, self.threshold, self.left, self.right, self.value):
            arr.setflags(write=False)

    @classmethod
    def leaf(cls, value):
        return cls([-1], [0.0], [-1], [-1], [value])

    @property
    def n_nodes(self):
        return len(self.feature)

    @property
    def depth(self):
        def walk(i):
            if self.feature[i] < 0:
                return 0
            return 1 + max(walk(self.left[i]), walk(self.right[i]))

        return walk(0)

    def predict(self, X):
        X = np.atleast_2d(X)
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            feat = self.feature[node]
            active = feat >= 0
            if not active.any():
                break
            r = rows[active]
            n = node[active]
            go_left = X[r, feat[active]] <= self.threshold[n]
            node[active] = np.where(go_left, self.left[n], self.right[n])
        return self.value[node]

    def to_dict(self, i=0):
        if self.feature[i] < 0:
            return {"leaf": float(self.value[i])}
        return {
            "feature": int(self.feature[i]),
            "threshold": float(self.threshold[i]),
            "left": self.to_dict(int(self.left[i])),
            "right": self.to_dict(int(self.right[i])),
        }

    @classmethod
    def from_dict(cls, doc, n_features=N_FEATURES, where="tree"):
        feature, threshold, left, right, value = [], [], [], [], []

        def add(node, path):
            if not isinstance(node, dict):
                raise ModelLoadError("node must be an object", path)
            i = len(feature)
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(0.0)
            if "leaf" in node:
                value[i] = _finite(node["leaf"], f"{path}.leaf")
                return i
            for key in ("feature", "threshold", "left", "right"):
                if key not in node:
                    raise ModelLoadError(f"missing key {key!r}", path)
            f = node["feature"]
            if not isinstance(f, int) or isinstance(f, bool) or not 0 <= f < n_features:
                raise ModelLoadError(f"feature index must be an integer in [0, {n_features})", f"{path}.feature")
            feature[i] = f
            threshold[i] = _finite(node["threshold"], f"{path}.threshold")
            left[i] = add(node["left"], f"{path}.left")
            right[i] = add(node["right"], f"{path}.right")
            return i

        add(doc, where)
        return cls(feature, threshold, left, right, value)

    def __eq__(self, other):
        if not isinstance(other, RegressionTree):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, k), getattr(other, k)) for k in self.__slots__
        )

    def __repr__(self):
        return f"RegressionTree(n_nodes={self.n_nodes}, depth={self.depth})"


def _finite(v, where):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v):
        raise ModelLoadError("expected a finite number", where)
    return float(v)


@dataclass
class TrainConfig:
    n_rounds: int = 100
    max_depth: int = 3
    min_samples_leaf: int = 5
    shrinkage: float = 0.1
    subsample: float = 1.0
    seed: int = 0

    def validate(self):
        from .errors import ConfigError

        if self.n_rounds < 1:
            raise ConfigError("n_rounds must be >= 1")
        if self.max_depth < 0:
            raise ConfigError("max_depth must be >= 0")
        if self.min_samples_leaf < 1:
            raise ConfigError("min_samples_leaf must be >= 1")
        if not 0 < self.shrinkage <= 1:
            raise ConfigError("shrinkage must be in (0, 1]")
        if not 0 < self.subsample <= 1:
            raise ConfigError("subsample must be in (0, 1]")
        return self


def softmax(F):
    """Row-wise softmax with max subtraction."""
    F = np.asarray(F, dtype=np.float64)
    z = np.exp(F - F.max(axis=-1, keepdims=True))
    return z / z.sum(axis=-1, keepdims=True)


def weighted_scores(init_scores, weights, phi):
    """Class scores for a (N, n, l) stack of decision outputs.

    Accumulates estimator terms one round at a time so every row is computed
    by the same sequence of floating point operations regardless of N.
    """
    phi = np.asarray(phi, dtype=np.float64)
    F = np.broadcast_to(init_scores, (phi.shape[0], phi.shape[2])).copy()
    for j in range(phi.shape[1]):
        F += weights[j] * phi[:, j, :]
    return F


@dataclass(eq=False)
class GbmModel:
    """Trained ensemble: ``estimators[j][p]`` is round ``j``'s tree for class ``p``."""

    class_names: tuple[str, ...]
    init_scores: np.ndarray
    estimators: list[list[RegressionTree]]
    weights: np.ndarray
    shrinkage: float
    n_features: int = N_FEATURES
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.class_names = tuple(str(c) for c in self.class_names)
        self.init_scores = np.array(self.init_scores, dtype=np.float64)
        self.weights = np.array(self.weights, dtype=np.float64)
        self.estimators = [list(row) for row in self.estimators]
        l = len(self.class_names)
        n = len(self.estimators)
        if l < 2:
            raise ValueError("a model needs at least two classes")
        if self.init_scores.shape != (l,):
            raise ValueError(f"init_scores must have shape ({l},)")
        if any(len(row) != l for row in self.estimators):
            raise ValueError("every round must hold one tree per class")
        if self.weights.shape != (n, l):
            raise ValueError(f"weights must have shape ({n}, {l}), got {self.weights.shape}")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.init_scores))):
            raise ValueError("weights and init_scores must be finite")

    @property
    def n_rounds(self):
        return len(self.estimators)

    @property
    def n_classes(self):
        return len(self.class_names)

    def with_weights(self, weights):
        """A model sharing this model's trees but using ``weights``."""
        return GbmModel(
            self.class_names, self.init_scores, self.estimators, weights, self.shrinkage,
            self.n_features, dict(self.metadata),
        )

    def _check_matrix(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(f"expected inputs with {self.n_features} features, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("inputs must be finite")
        return X

    def _check_vector(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n_features,):
            raise ValueError(f"expected a vector of {self.n_features} features, got shape {x.shape}")
        return self._check_matrix(x[None, :])

    # batch API ----------------------------------------------------------

    def phi(self, X):
        """Decision outputs for every input: array of shape (N, n_rounds, n_classes)."""
        X = self._check_matrix(X)
        out = np.empty((X.shape[0], self.n_rounds, self.n_classes))
        for j, row in enumerate(self.estimators):
            for p, tree in enumerate(row):
                out[:, j, p] = tree.predict(X)
        return out

    def score_batch(self, X):
        return weighted_scores(self.init_scores, self.weights, self.phi(X))

    def proba_batch(self, X):
        return softmax(self.score_batch(X))

    def predict_batch(self, X):
        return np.argmax(self.score_batch(X), axis=1)

    # single-input API ---------------------------------------------------

    def decision_outputs(self, x):
        """Return ``(phi, init_scores)`` with ``phi`` of shape (n_rounds, n_classes)."""
        return self.phi(self._check_vector(x))[0], self.init_scores.copy()

    def score(self, x):
        return weighted_scores(self.init_scores, self.weights, self.phi(self._check_vector(x)))[0]

    def predict_proba(self, x):
        return softmax(self.score(x))

    def predict(self, x):
        # argmax of the scores; ties resolve to the lowest class index
        return int(np.argmax(self.score(x)))


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------


def _best_split(X, g, order, in_node, n, min_leaf):
    """Exact greedy split maximizing squared-sum gain of ``g``.

    ``order`` holds per-feature argsorts of the full data; the node's
    members are extracted from it in sorted order without re-sorting.
    Returns ``(feature, threshold)`` or ``None``.
    """
    if n < 2 * min_leaf or n < 2:
        return None
    n_feat = X.shape[1]
    cols = order.T
    idx = cols[in_node[cols]].reshape(n_feat, n)
    gs = g[idx]
    xs = X[idx, np.arange(n_feat)[:, None]]
    cs = np.cumsum(gs, axis=1)
    total = cs[:, -1:]
    n_left = np.arange(1, n, dtype=np.float64)
    s_left = cs[:, :-1]
    s_right = total - s_left
    gain = s_left**2 / n_left + s_right**2 / (n - n_left) - total**2 / n
    valid = xs[:, :-1] < xs[:, 1:]
    if min_leaf > 1:
        valid[:, : min_leaf - 1] = False
        valid[:, n - min_leaf:] = False
    gain = np.where(valid, gain, -np.inf)
    best = int(np.argmax(gain))
    f, i = divmod(best, n - 1)
    if not gain[f, i] > 0:
        return None
    lo, hi = xs[f, i], xs[f, i + 1]
    thr = lo + (hi - lo) / 2
    if not lo <= thr < hi:
        thr = lo
    return f, float(thr)


def _newton_leaf(g, h, in_node, n_classes):
    num = g[in_node].sum()
    den = h[in_node].sum()
    if abs(den) < 1e-150:
        return 0.0
    return (n_classes - 1) / n_classes * num / den


def fit_tree(X, g, h, order, sample_mask, max_depth, min_leaf, n_classes):
    """Fit one regression tree to residuals ``g`` with Newton leaf values.

    Only rows in ``sample_mask`` take part. ``h`` holds the per-row Hessian
    weights ``|g| (1 - |g|)`` of the multinomial deviance.
    """
    feature, threshold, left, right, value = [], [], [], [], []

    def grow(in_node, depth):
        i = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        n = int(in_node.sum())
        split = _best_split(X, g, order, in_node, n, min_leaf) if depth < max_depth else None
        if split is None:
            value[i] = _newton_leaf(g, h, in_node, n_classes)
            return i
        f, thr = split
        goes_left = X[:, f] <= thr
        feature[i] = f
        threshold[i] = thr
        left[i] = grow(in_node & goes_left, depth + 1)
        right[i] = grow(in_node & ~goes_left, depth + 1)
        return i

    grow(sample_mask.copy(), 0)
    return RegressionTree(feature, threshold, left, right, value)


def _as_feature_set(instances):
    if isinstance(instances, FeatureSet):
        return instances
    return FeatureSet.from_instances(instances)


def train(instances, config: TrainConfig | None = None, class_names=None) -> GbmModel:
    """Fit a multiclass GBM with multinomial deviance.

    Each round computes softmax probabilities once, then fits one tree per
    class to the residual ``onehot - prob``. ``class_names`` fixes the class
    order; by default it is the sorted set of labels present.
    """
    config = (config or TrainConfig()).validate()
    data = _as_feature_set(instances)
    if len(data) == 0:
        raise ValueError("cannot train on an empty instance set")
    if class_names is None:
        class_names = data.class_names()
    class_names = tuple(class_names)
    if len(class_names) < 2:
        raise TrainingError(f"training needs at least two classes, found {list(class_names)}")
    y = data.label_indices(class_names)
    K = len(class_names)
    counts = np.bincount(y, minlength=K)
    for k, c in enumerate(counts):
        if c < config.min_samples_leaf or c == 0:
            raise TrainingError(
                f"class {class_names[k]!r} has {c} instance(s); need at least "
                f"max(1, min_samples_leaf={config.min_samples_leaf})"
            )

    X = data.X
    N = len(X)
    Y = np.eye(K)[y]
    init = np.log(counts / N)
    F = np.tile(init, (N, 1))
    order = np.argsort(X, axis=0, kind="stable")
    rng = np.random.default_rng(config.seed)
    full = np.ones(N, dtype=bool)
    m = max(1, int(round(config.subsample * N)))

    estimators = []
    for _ in range(config.n_rounds):
        P = softmax(F)
        if m < N:
            mask = np.zeros(N, dtype=bool)
            mask[rng.choice(N, size=m, replace=False)] = True
        else:
            mask = full
        row = []
        for k in range(K):
            r = Y[:, k] - P[:, k]
            a = np.abs(r)
            tree = fit_tree(X, r, a * (1 - a), order, mask, config.max_depth, config.min_samples_leaf, K)
            row.append(tree)
        for k, tree in enumerate(row):
            F[:, k] += config.shrinkage * tree.predict(X)
        estimators.append(row)

    weights = np.full((config.n_rounds, K), config.shrinkage)
    return GbmModel(class_names, init, estimators, weights, config.shrinkage)


def staged_scores(model: GbmModel, X):
    """Yield the (N, l) score matrix after each boosting round."""
    phi = model.phi(X)
    F = np.broadcast_to(model.init_scores, (phi.shape[0], model.n_classes)).copy()
    for j in range(model.n_rounds):
        F = F + model.weights[j] * phi[:, j, :]
        yield F


def deviance(scores, y):
    """Mean multinomial deviance (negative log-likelihood)."""
    scores = np.asarray(scores)
    m = scores.max(axis=1, keepdims=True)
    lse = (m + np.log(np.exp(scores - m).sum(axis=1, keepdims=True)))[:, 0]
    return float(np.mean(lse - scores[np.arange(len(y)), y]))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _doc(model, include_weights=True):
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "class_names": list(model.class_names),
        "n_features": model.n_features,
        "n_rounds": model.n_rounds,
        "n_classes": model.n_classes,
        "shrinkage": float(model.shrinkage),
        "init_scores": [float(v) for v in model.init_scores],
        "estimators": [[tree.to_dict() for tree in row] for row in model.estimators],
    }
    if include_weights:
        doc["weights"] = [float(v) for v in model.weights.ravel(order="C")]
        doc["metadata"] = model.metadata
    return doc


def serialize(model: GbmModel) -> bytes:
    """Encode a model as a versioned JSON document (weights row-major)."""
    return json.dumps(_doc(model), separators=(",", ":"), allow_nan=False).encode("utf-8")


def serialize_estimators(model: GbmModel) -> bytes:
    """Encode everything except the weights; unchanged by calibration."""
    return json.dumps(_doc(model, include_weights=False), separators=(",", ":"), allow_nan=False).encode("utf-8")


def deserialize(data) -> GbmModel:
    if isinstance(data, (bytes, bytearray)):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ModelLoadError(f"not UTF-8 ({exc})", "document") from None
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ModelLoadError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
    if not isinstance(doc, dict):
        raise ModelLoadError("top level must be an object", "$")
    if doc.get("format") != FORMAT_NAME:
        raise ModelLoadError(f"format must be {FORMAT_NAME!r}", "$.format")
    if doc.get("version") != FORMAT_VERSION:
        raise ModelLoadError(
            f"unsupported schema version {doc.get('version')!r}; this reader understands {FORMAT_VERSION}",
            "$.version",
        )
    for key in ("class_names", "n_features", "n_rounds", "n_classes", "shrinkage", "init_scores",
                "estimators", "weights"):
        if key not in doc:
            raise ModelLoadError(f"missing key {key!r}", "$")
    n, l, nf = doc["n_rounds"], doc["n_classes"], doc["n_features"]
    for key, v in (("n_rounds", n), ("n_classes", l), ("n_features", nf)):
        if not isinstance(v, int) or isinstance(v, bool) or v < 0:
            raise ModelLoadError("expected a non-negative integer", f"$.{key}")
    names = doc["class_names"]
    if not isinstance(names, list) or len(names) != l or not all(isinstance(c, str) for c in names):
        raise ModelLoadError(f"expected {l} class name strings", "$.class_names")
    init = doc["init_scores"]
    if not isinstance(init, list) or len(init) != l:
        raise ModelLoadError(f"expected {l} numbers", "$.init_scores")
    init = [_finite(v, f"$.init_scores[{p}]") for p, v in enumerate(init)]
    est = doc["estimators"]
    if not isinstance(est, list) or len(est) != n:
        raise ModelLoadError(f"expected {n} rounds", "$.estimators")
    estimators = []
    for j, row in enumerate(est):
        if not isinstance(row, list) or len(row) != l:
            raise ModelLoadError(f"expected {l} trees", f"$.estimators[{j}]")
        estimators.append(
            [RegressionTree.from_dict(node, nf, f"$.estimators[{j}][{p}]") for p, node in enumerate(row)]
        )
    w = doc["weights"]
    if not isinstance(w, list) or len(w) != n * l:
        raise ModelLoadError(f"expected {n * l} numbers", "$.weights")
    weights = np.array([_finite(v, f"$.weights[{k}]") for k, v in enumerate(w)]).reshape(n, l)
    shrinkage = _finite(doc["shrinkage"], "$.shrinkage")
    metadata = doc.get("metadata", {})
    if not isinstance(metadata, dict):
        raise ModelLoadError("expected an object", "$.metadata")
    try:
        return GbmModel(tuple(names), np.array(init), estimators, weights, shrinkage, nf, metadata)
    except ValueError as exc:
        raise ModelLoadError(str(exc), "$") from None


def save_model(model, path):
    with open(path, "wb") as fh:
        fh.write(serialize(model))


def load_model(path):
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise ModelLoadError(f"cannot read model file ({exc})", str(path)) from None
    return deserialize(data)
