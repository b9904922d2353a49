"""Per-user weight calibration of a trained GBM.

Only the (n_rounds, n_classes) weight matrix is optimized. The loss for one
instance is the mean squared difference between the one-hot label and the
softmax probabilities; batches average the per-instance losses.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import CalibrationError, ConfigError
from .features import FeatureSet
from .gbm import GbmModel, serialize_estimators, softmax, weighted_scores

GRADIENT_MODES = ("full_jacobian", "paper_diagonal")


@dataclass
class CalibrationConfig:
    learning_rate: float = 1.0
    batch_size: int = 32
    max_epochs: int = 200
    validation_fraction: float = 0.2
    patience: int = 20
    seed: int = 0
    gradient_mode: str = "full_jacobian"

    def validate(self):
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.max_epochs < 0:
            raise ConfigError("max_epochs must be >= 0")
        if not 0 < self.validation_fraction < 1:
            raise ConfigError("validation_fraction must be in (0, 1)")
        if self.patience < 0:
            raise ConfigError("patience must be >= 0 (0 disables early stopping)")
        if self.gradient_mode not in GRADIENT_MODES:
            raise ConfigError(f"gradient_mode must be one of {GRADIENT_MODES}")
        return self


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_accuracy: float


@dataclass
class CalibrationResult:
    """Outcome of :func:`tune`.

    ``selected_epoch`` is 0 when no epoch beat the untouched weights on the
    validation split; ``history`` holds one record per epoch actually run.
    """

    weights: np.ndarray
    history: list[EpochRecord]
    selected_epoch: int
    initial_train_loss: float
    initial_val_accuracy: float
    n_train: int
    n_val: int
    train_ids: np.ndarray = field(repr=False, default=None)
    val_ids: np.ndarray = field(repr=False, default=None)

    @property
    def best_val_accuracy(self):
        if self.selected_epoch == 0:
            return self.initial_val_accuracy
        return self.history[self.selected_epoch - 1].val_accuracy

    def apply(self, model: GbmModel) -> GbmModel:
        return model.with_weights(self.weights)

    def same_as(self, other):
        return (
            np.array_equal(self.weights, other.weights)
            and self.history == other.history
            and self.selected_epoch == other.selected_epoch
            and self.initial_train_loss == other.initial_train_loss
            and self.initial_val_accuracy == other.initial_val_accuracy
        )


def _onehot(y, l):
    return np.eye(l)[y]


def mse_loss(P, Y):
    """Batch mean of ``mean_p (Y - P)^2``."""
    return float(np.mean(np.mean((Y - P) ** 2, axis=1)))


def mse_gradient(phi, P, Y, mode="full_jacobian"):
    """d(batch loss)/d(weights) from decision outputs, probabilities and labels.

    ``phi`` is (B, n, l). In ``full_jacobian`` mode the softmax coupling
    between classes is included; ``paper_diagonal`` keeps only the
    same-class term ``dP_q/df_q = P_q (1 - P_q)``.
    """
    l = P.shape[1]
    err = P - Y
    if mode == "full_jacobian":
        # sum_p err_p P_p (delta_pq - P_q) = P_q (err_q - sum_p err_p P_p)
        coef = P * (err - np.sum(err * P, axis=1, keepdims=True))
    elif mode == "paper_diagonal":
        coef = err * (P - P * P)
    else:
        raise ValueError(f"unknown gradient mode {mode!r}")
    coef *= 2.0 / l
    return np.einsum("bq,bjq->jq", coef, phi) / phi.shape[0]


def _batch_arrays(model, batch):
    data = batch if isinstance(batch, FeatureSet) else FeatureSet.from_instances(batch)
    if len(data) == 0:
        raise ValueError("batch must not be empty")
    y = data.label_indices(model.class_names)
    return model.phi(data.X), _onehot(y, model.n_classes)


def loss(model: GbmModel, batch) -> float:
    phi, Y = _batch_arrays(model, batch)
    P = softmax(weighted_scores(model.init_scores, model.weights, phi))
    return mse_loss(P, Y)


def gradient(model: GbmModel, batch, mode="full_jacobian"):
    phi, Y = _batch_arrays(model, batch)
    P = softmax(weighted_scores(model.init_scores, model.weights, phi))
    return mse_gradient(phi, P, Y, mode)


def sgd_step(model: GbmModel, batch, learning_rate, mode="full_jacobian"):
    """Return ``weights - learning_rate * gradient``; the model is not modified."""
    return model.weights - learning_rate * gradient(model, batch, mode)


def stratified_split(y, fraction, rng):
    """Split indices so each class contributes ``round(fraction * count)`` to the second part.

    Classes with at least two members keep at least one on each side; a
    singleton class stays in the first part.
    """
    first, second = [], []
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        idx = idx[rng.permutation(idx.size)]
        k = int(round(fraction * idx.size))
        if idx.size >= 2:
            k = min(max(k, 1), idx.size - 1)
        else:
            k = 0
        second.extend(idx[:k].tolist())
        first.extend(idx[k:].tolist())
    return np.sort(np.array(first, dtype=np.int64)), np.sort(np.array(second, dtype=np.int64))


def _estimator_digest(model):
    return hashlib.sha256(serialize_estimators(model)).hexdigest()


def tune(model: GbmModel, user_data, config: CalibrationConfig | None = None) -> CalibrationResult:
    """Fit the model's weights to one user's labeled data.

    The user data is split into train/validation parts (stratified, seeded).
    Each epoch visits the shuffled training part in mini-batches; the
    weights from the epoch with the best validation accuracy are returned,
    preferring the earliest epoch on ties and epoch 0 (untouched weights)
    over any later epoch that merely matches it.
    """
    config = (config or CalibrationConfig()).validate()
    data = user_data if isinstance(user_data, FeatureSet) else FeatureSet.from_instances(user_data)
    try:
        y = data.label_indices(model.class_names)
    except ValueError as exc:
        raise CalibrationError(str(exc)) from None
    if len(np.unique(y)) < 2:
        raise CalibrationError("calibration needs user data from at least two classes")

    rng = np.random.default_rng(config.seed)
    tr, va = stratified_split(y, config.validation_fraction, rng)
    if tr.size == 0 or va.size == 0:
        raise ConfigError(
            f"validation_fraction={config.validation_fraction} leaves an empty split "
            f"({tr.size} train / {va.size} validation instances)"
        )
    if len(np.unique(y[tr])) < 2:
        raise CalibrationError("training part of the user data holds a single class")

    digest = _estimator_digest(model)
    l = model.n_classes
    phi = model.phi(data.X)
    phi_tr, phi_va = phi[tr], phi[va]
    Y_tr = _onehot(y[tr], l)
    y_va = y[va]
    init = model.init_scores

    def evaluate(W):
        train_loss = mse_loss(softmax(weighted_scores(init, W, phi_tr)), Y_tr)
        pred = np.argmax(weighted_scores(init, W, phi_va), axis=1)
        return train_loss, float(np.mean(pred == y_va))

    W = model.weights.copy()
    init_loss, init_acc = evaluate(W)
    best_acc, best_W, best_epoch = init_acc, W.copy(), 0
    history = []
    batch = min(config.batch_size, tr.size)
    stale = 0
    for epoch in range(1, config.max_epochs + 1):
        perm = rng.permutation(tr.size)
        for start in range(0, tr.size, batch):
            b = perm[start:start + batch]
            P = softmax(weighted_scores(init, W, phi_tr[b]))
            W = W - config.learning_rate * mse_gradient(phi_tr[b], P, Y_tr[b], config.gradient_mode)
        if not np.all(np.isfinite(W)):
            raise CalibrationError(f"weights diverged at epoch {epoch}; lower the learning rate")
        train_loss, acc = evaluate(W)
        history.append(EpochRecord(epoch, train_loss, acc))
        if acc > best_acc:
            best_acc, best_W, best_epoch = acc, W.copy(), epoch
            stale = 0
        else:
            stale += 1
            if config.patience and stale >= config.patience:
                break

    assert _estimator_digest(model) == digest, "calibration must not modify estimators"
    return CalibrationResult(
        weights=best_W,
        history=history,
        selected_epoch=best_epoch,
        initial_train_loss=init_loss,
        initial_val_accuracy=init_acc,
        n_train=int(tr.size),
        n_val=int(va.size),
        train_ids=data.ids[tr],
        val_ids=data.ids[va],
    )


def write_history_csv(result: CalibrationResult, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("epoch", "train_loss", "val_accuracy"))
        for rec in result.history:
            writer.writerow((rec.epoch, repr(rec.train_loss), repr(rec.val_accuracy)))
