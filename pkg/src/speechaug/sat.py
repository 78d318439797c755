"""Training loops: speaker-adaptive training and test-time LHUC adaptation.

During training the LHUC vector of the batch's speaker is updated once per
mini-batch together with the network parameters. At test time the network
is frozen (batch norm uses its stored statistics) and only the new
speaker's LHUC vector is updated, one step per utterance.
"""

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .nnet import (
    FrameBatch,
    LhucTable,
    NetworkConfig,
    forward,
    init_params,
    is_trainable,
    loss_and_grads,
    mtl_loss,
)


class SgdOptimizer:
    def __init__(self, lr: float):
        self.lr = lr

    def update(self, key: str, value: np.ndarray, grad: np.ndarray) -> np.ndarray:
        return value - self.lr * grad


class RmsPropOptimizer:
    """Adaptive-gradient scheme with a running mean of squared gradients."""

    def __init__(self, lr: float, decay: float = 0.9, eps: float = 1e-8):
        self.lr = lr
        self.decay = decay
        self.eps = eps
        self._cache: dict[str, np.ndarray] = {}

    def update(self, key: str, value: np.ndarray, grad: np.ndarray) -> np.ndarray:
        cache = self._cache.get(key)
        if cache is None:
            cache = np.zeros_like(grad)
        cache = self.decay * cache + (1.0 - self.decay) * grad**2
        self._cache[key] = cache
        return value - self.lr * grad / (np.sqrt(cache) + self.eps)


def make_optimizer(name: str, lr: float):
    if name == "sgd":
        return SgdOptimizer(lr)
    if name == "rmsprop":
        return RmsPropOptimizer(lr)
    raise ValueError(f"unknown optimizer {name!r}, expected 'sgd' or 'rmsprop'")


@dataclass
class TrainHistory:
    epoch_loss: list = field(default_factory=list)
    lhuc_updates: list = field(default_factory=list)  # speaker id per update event


def _commit_bn_stats(params, bn_stats, momentum):
    for layer, (mu, var) in bn_stats.items():
        mean_key, var_key = f"layer{layer}.bn_mean", f"layer{layer}.bn_var"
        params[mean_key] = momentum * params[mean_key] + (1.0 - momentum) * mu
        params[var_key] = momentum * params[var_key] + (1.0 - momentum) * var


def train_sat(batches, config: NetworkConfig, epochs: int = 5, lr: float = 0.1,
              optimizer: str = "sgd", lam: float = 0.5, seed: int = 0,
              params: dict | None = None, lhuc: LhucTable | None = None,
              use_lhuc: bool = True, update_lhuc: bool = True):
    """Train network parameters and per-speaker LHUC vectors jointly.

    Each mini-batch updates the shared parameters and (when ``update_lhuc``)
    the LHUC vector of that batch's speaker only. ``use_lhuc=False`` trains
    a speaker-independent model with no LHUC scaling at all; because the
    scaling is exactly 1 at initialization, its loss trajectory is
    bit-identical to training with LHUC frozen at zero under the same seed.
    Deterministic given the seed and batch order. Returns
    ``(params, lhuc_table, history)``.
    """
    batches = list(batches)
    if not batches:
        raise ValueError("training requires at least one batch")
    for batch in batches:
        batch.validate(config)

    rng = np.random.default_rng(seed)
    if params is None:
        params = init_params(config, rng)
    else:
        params = {key: value.copy() for key, value in params.items()}
    if lhuc is None:
        lhuc = LhucTable(config.hidden_dims[0])
    if use_lhuc:
        for batch in batches:
            lhuc.ensure(batch.speaker_id)

    opt = make_optimizer(optimizer, lr)
    lhuc_opt = make_optimizer(optimizer, lr)
    dropout_rng = np.random.default_rng(rng.integers(0, 2**63))
    history = TrainHistory()

    for _ in range(epochs):
        losses = []
        for batch in batches:
            r = lhuc.get(batch.speaker_id) if use_lhuc else None
            loss, grads, lhuc_grad, bn_stats = loss_and_grads(
                batch, params, config, lam, r, mode="train", dropout_rng=dropout_rng
            )
            losses.append(loss)
            for key, grad in grads.items():
                if is_trainable(key):
                    params[key] = opt.update(key, params[key], grad)
            _commit_bn_stats(params, bn_stats, config.bn_momentum)
            if use_lhuc and update_lhuc:
                lhuc.entries[batch.speaker_id] = lhuc_opt.update(
                    f"lhuc.{batch.speaker_id}", r, lhuc_grad
                )
                history.lhuc_updates.append(batch.speaker_id)
        history.epoch_loss.append(float(np.mean(losses)))
    return params, lhuc, history


def adapt_test(utterance_batches, params: dict, config: NetworkConfig,
               lr: float = 0.2, lam: float = 0.5,
               r_init: np.ndarray | None = None):
    """Unsupervised-style test-time adaptation of one speaker's LHUC vector.

    The network is frozen (parameters untouched, batch norm in eval mode);
    the LHUC vector takes one gradient step per utterance. Returns the
    adapted vector.
    """
    utterance_batches = list(utterance_batches)
    if not utterance_batches:
        raise ValueError("adaptation requires at least one utterance")
    r = np.zeros(config.hidden_dims[0]) if r_init is None else r_init.copy()
    for batch in utterance_batches:
        batch.validate(config)
        _, _, lhuc_grad, _ = loss_and_grads(batch, params, config, lam, r, mode="eval")
        r = r - lr * lhuc_grad
    return r


def evaluate_loss(batches, params: dict, config: NetworkConfig, lam: float = 0.5,
                  lhuc_r: np.ndarray | None = None) -> float:
    """Mean eval-mode loss over batches (frozen statistics, no dropout)."""
    losses = []
    for batch in batches:
        tri, mono = forward(batch.features, params, config, lhuc_r, mode="eval")
        losses.append(mtl_loss(tri, mono, batch.triphone_labels, batch.monophone_labels, lam))
    return float(np.mean(losses))


def make_synthetic_speakers(config: NetworkConfig, speaker_gains: dict,
                            batches_per_speaker: int = 4, frames_per_batch: int = 64,
                            seed: int = 0) -> list[FrameBatch]:
    """Class-structured random frames, one feature-gain profile per speaker.

    Every speaker shares the same label-conditional class centers; a
    speaker's frames are scaled elementwise by its gain vector, mimicking
    per-speaker spectral differences. Monophone targets are a deterministic
    coarsening of the triphone targets.
    """
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((config.n_triphone_targets, config.input_dim))
    batches = []
    for speaker, gains in sorted(speaker_gains.items()):
        gains = np.asarray(gains, dtype=np.float64)
        for _ in range(batches_per_speaker):
            tri = rng.integers(0, config.n_triphone_targets, frames_per_batch)
            mono = tri % config.n_monophone_targets
            feats = centers[tri] + 0.3 * rng.standard_normal(
                (frames_per_batch, config.input_dim)
            )
            batches.append(FrameBatch(feats * gains, tri, mono, speaker))
    return batches


class HybridAcousticModel(BaseEstimator):
    """Estimator facade over the trainer: ``fit`` on FrameBatch sequences.

    Learned state lands in ``params_``, ``lhuc_`` and ``history_``.
    """

    def __init__(self, config: NetworkConfig | None = None, epochs: int = 5,
                 lr: float = 0.1, optimizer: str = "sgd", task_weight: float = 0.5,
                 seed: int = 0, update_lhuc: bool = True):
        self.config = config
        self.epochs = epochs
        self.lr = lr
        self.optimizer = optimizer
        self.task_weight = task_weight
        self.seed = seed
        self.update_lhuc = update_lhuc

    def fit(self, X, y=None):
        batches = list(X)
        config = self.config
        if config is None:
            config = NetworkConfig(input_dim=batches[0].features.shape[1])
        self.config_ = config
        self.params_, self.lhuc_, self.history_ = train_sat(
            batches, config, epochs=self.epochs, lr=self.lr,
            optimizer=self.optimizer, lam=self.task_weight, seed=self.seed,
            update_lhuc=self.update_lhuc,
        )
        return self

    def predict_proba(self, X, speaker_id: str | None = None):
        """Triphone-head posteriors for a feature matrix."""
        return self.posteriors(X, speaker_id)[0]

    def posteriors(self, X, speaker_id: str | None = None):
        if not hasattr(self, "params_"):
            raise RuntimeError("model is not fitted")
        r = None
        if speaker_id is not None:
            r = self.lhuc_.get(speaker_id)
        return forward(np.asarray(X, dtype=np.float64), self.params_, self.config_,
                       r, mode="eval")
