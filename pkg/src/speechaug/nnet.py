"""A compact feed-forward acoustic model with dual softmax heads.

Seven hidden layers; each applies, in order: an optional linear bottleneck
projection (layers 2..6, no bias), an affine transform, ReLU, optional
per-speaker LHUC scaling (layer 1 only), batch normalization, and dropout
(layers 1..6, training mode only). Two additive skip connections carry the
post-layer-1 output into layer 3's input and the post-layer-4 output into
layer 6's input. Both output heads are softmax layers; the training loss
interpolates their cross-entropies with a weight ``lam`` on the first
(triphone-state) head and ``1 - lam`` on the second (monophone) head.

LHUC scaling multiplies the ReLU output of layer 1 by ``2 * sigmoid(r)``
elementwise, so ``r = 0`` is exactly the identity. Whether the scaling sits
before or after batch normalization is configurable (default: before).

Everything is plain float64 numpy with hand-written gradients; the
``gradient_check`` routine verifies them against central differences.
"""

import io
import json
import struct
from dataclasses import dataclass, field, asdict

import numpy as np

N_HIDDEN_LAYERS = 7
MODEL_MAGIC = b"SPCHAUG1"
MODEL_VERSION = 1


@dataclass(frozen=True)
class NetworkConfig:
    input_dim: int
    hidden_dims: tuple = (64,) * 7
    bottleneck_dim: int = 16
    dropout_rate: float = 0.2
    n_triphone_targets: int = 20
    n_monophone_targets: int = 10
    skip_connections: tuple = ((1, 3), (4, 6))
    lhuc_after_batchnorm: bool = False
    bn_momentum: float = 0.9
    bn_eps: float = 1e-5

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(d) for d in self.hidden_dims))
        object.__setattr__(
            self, "skip_connections",
            tuple((int(a), int(b)) for a, b in self.skip_connections),
        )
        if len(self.hidden_dims) != N_HIDDEN_LAYERS:
            raise ValueError(
                f"expected {N_HIDDEN_LAYERS} hidden layers, got {len(self.hidden_dims)}"
            )
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        for src, dst in self.skip_connections:
            if not (1 <= src < dst <= N_HIDDEN_LAYERS):
                raise ValueError(f"invalid skip connection ({src}, {dst})")
            if self.hidden_dims[src - 1] != self.hidden_dims[dst - 2]:
                raise ValueError(
                    f"skip ({src}, {dst}) joins mismatched widths "
                    f"{self.hidden_dims[src - 1]} and {self.hidden_dims[dst - 2]}"
                )

    def layer_input_dim(self, layer: int) -> int:
        return self.input_dim if layer == 1 else self.hidden_dims[layer - 2]

    def has_bottleneck(self, layer: int) -> bool:
        return 2 <= layer <= 6


@dataclass(frozen=True)
class FrameBatch:
    """Spliced feature rows with frame-level targets for both heads."""

    features: np.ndarray = field(repr=False)
    triphone_labels: np.ndarray = field(repr=False)
    monophone_labels: np.ndarray = field(repr=False)
    speaker_id: str = ""

    def validate(self, config: NetworkConfig) -> None:
        if self.features.shape[1] != config.input_dim:
            raise ValueError(
                f"feature dim {self.features.shape[1]} != input_dim {config.input_dim}"
            )
        for name, labels, n in (
            ("triphone", self.triphone_labels, config.n_triphone_targets),
            ("monophone", self.monophone_labels, config.n_monophone_targets),
        ):
            labels = np.asarray(labels)
            if labels.shape != (self.features.shape[0],):
                raise ValueError(f"{name} labels must be one per frame")
            if labels.min(initial=0) < 0 or labels.max(initial=0) >= n:
                raise ValueError(f"{name} label outside [0, {n})")


class LhucTable:
    """Per-speaker LHUC parameter vectors (one entry per layer-1 neuron)."""

    def __init__(self, dim: int):
        self.dim = dim
        self.entries: dict[str, np.ndarray] = {}

    def ensure(self, speaker_id: str) -> np.ndarray:
        if speaker_id not in self.entries:
            self.entries[speaker_id] = np.zeros(self.dim)  # identity at init
        return self.entries[speaker_id]

    def get(self, speaker_id: str) -> np.ndarray:
        return self.entries[speaker_id]

    @staticmethod
    def amplitude(r: np.ndarray) -> np.ndarray:
        """Scaling applied to hidden activations: 2 * sigmoid(r), in (0, 2)."""
        return 2.0 / (1.0 + np.exp(-r))


def splice_context(frames: np.ndarray, context: int) -> np.ndarray:
    """Concatenate each row with its ``context`` neighbors on either side.

    Row ``t`` becomes ``[frames[t-c], ..., frames[t+c]]`` flattened, with
    edge rows replicated past the boundaries.
    """
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2 or frames.shape[0] < 1:
        raise ValueError("frames must be a non-empty 2-D matrix")
    if context == 0:
        return frames.copy()
    n = frames.shape[0]
    idx = np.clip(np.arange(n)[:, None] + np.arange(-context, context + 1)[None, :], 0, n - 1)
    return frames[idx].reshape(n, -1)


def param_shapes(config: NetworkConfig) -> dict[str, tuple]:
    """All tensors in declaration order (this order is the file format)."""
    shapes: dict[str, tuple] = {}
    for layer in range(1, N_HIDDEN_LAYERS + 1):
        in_dim = config.layer_input_dim(layer)
        out_dim = config.hidden_dims[layer - 1]
        if config.has_bottleneck(layer):
            shapes[f"layer{layer}.bottleneck"] = (in_dim, config.bottleneck_dim)
            in_dim = config.bottleneck_dim
        shapes[f"layer{layer}.W"] = (in_dim, out_dim)
        shapes[f"layer{layer}.b"] = (out_dim,)
        shapes[f"layer{layer}.bn_gamma"] = (out_dim,)
        shapes[f"layer{layer}.bn_beta"] = (out_dim,)
        shapes[f"layer{layer}.bn_mean"] = (out_dim,)
        shapes[f"layer{layer}.bn_var"] = (out_dim,)
    top = config.hidden_dims[-1]
    shapes["triphone.W"] = (top, config.n_triphone_targets)
    shapes["triphone.b"] = (config.n_triphone_targets,)
    shapes["monophone.W"] = (top, config.n_monophone_targets)
    shapes["monophone.b"] = (config.n_monophone_targets,)
    return shapes


# batch-norm running statistics are state, not trainable parameters
def is_trainable(key: str) -> bool:
    return not (key.endswith(".bn_mean") or key.endswith(".bn_var"))


def init_params(config: NetworkConfig, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """He-initialized weights, zero biases, identity batch norm."""
    params: dict[str, np.ndarray] = {}
    for key, shape in param_shapes(config).items():
        if key.endswith(".bn_gamma"):
            params[key] = np.ones(shape)
        elif key.endswith((".bn_beta", ".bn_mean", ".b")):
            params[key] = np.zeros(shape)
        elif key.endswith(".bn_var"):
            params[key] = np.ones(shape)
        else:
            fan_in = shape[0]
            params[key] = rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)
    return params


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _sigmoid(r: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-r))


def forward(features: np.ndarray, params: dict, config: NetworkConfig,
            lhuc_r: np.ndarray | None = None, mode: str = "eval",
            dropout_rng: np.random.Generator | None = None,
            return_cache: bool = False):
    """Run the network; returns (triphone, monophone) posterior matrices.

    ``mode`` is "train" (batch statistics, dropout active) or "eval"
    (running statistics, no dropout). Training mode with a positive dropout
    rate requires ``dropout_rng``.
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    train = mode == "train"
    if train and config.dropout_rate > 0 and dropout_rng is None:
        raise ValueError("training mode with dropout requires dropout_rng")
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != config.input_dim:
        raise ValueError(f"features must be (frames, {config.input_dim})")

    skip_into: dict[int, list[int]] = {}
    for src, dst in config.skip_connections:
        skip_into.setdefault(dst, []).append(src)

    cache = {"layers": [], "post": {}, "x": x}
    current = x
    for layer in range(1, N_HIDDEN_LAYERS + 1):
        layer_cache: dict = {"input": current}
        z = current
        if config.has_bottleneck(layer):
            z = z @ params[f"layer{layer}.bottleneck"]
            layer_cache["bottleneck_out"] = z
        pre = z @ params[f"layer{layer}.W"] + params[f"layer{layer}.b"]
        act = np.maximum(pre, 0.0)
        layer_cache["pre"] = pre

        apply_lhuc = layer == 1 and lhuc_r is not None
        if apply_lhuc and not config.lhuc_after_batchnorm:
            layer_cache["lhuc_in"] = act
            act = act * LhucTable.amplitude(lhuc_r)

        gamma = params[f"layer{layer}.bn_gamma"]
        beta = params[f"layer{layer}.bn_beta"]
        if train:
            mu = act.mean(axis=0)
            centered = act - mu
            var = (centered**2).mean(axis=0)
            inv = 1.0 / np.sqrt(var + config.bn_eps)
            xhat = centered * inv
            layer_cache["bn_batch"] = (mu, var)
        else:
            inv = 1.0 / np.sqrt(params[f"layer{layer}.bn_var"] + config.bn_eps)
            xhat = (act - params[f"layer{layer}.bn_mean"]) * inv
        out = gamma * xhat + beta
        layer_cache["bn"] = (xhat, inv)

        if apply_lhuc and config.lhuc_after_batchnorm:
            layer_cache["lhuc_in"] = out
            out = out * LhucTable.amplitude(lhuc_r)

        if train and layer <= 6 and config.dropout_rate > 0:
            mask = dropout_rng.random(out.shape) >= config.dropout_rate
            out = out * mask / (1.0 - config.dropout_rate)
            layer_cache["dropout_mask"] = mask

        cache["layers"].append(layer_cache)
        cache["post"][layer] = out
        if layer < N_HIDDEN_LAYERS:
            current = out
            for src in skip_into.get(layer + 1, ()):
                current = current + cache["post"][src]

    top = cache["post"][N_HIDDEN_LAYERS]
    tri_logits = top @ params["triphone.W"] + params["triphone.b"]
    mono_logits = top @ params["monophone.W"] + params["monophone.b"]
    tri = _softmax(tri_logits)
    mono = _softmax(mono_logits)
    if return_cache:
        cache["top"] = top
        return (tri, mono), cache
    return tri, mono


def cross_entropy(posteriors: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log posterior at the labels."""
    labels = np.asarray(labels)
    picked = posteriors[np.arange(len(labels)), labels]
    return float(-np.mean(np.log(np.maximum(picked, 1e-300))))


def mtl_loss(tri_posteriors: np.ndarray, mono_posteriors: np.ndarray,
             tri_labels: np.ndarray, mono_labels: np.ndarray, lam: float) -> float:
    """Interpolated two-head loss: lam * CE(tri) + (1 - lam) * CE(mono)."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lam must be in [0, 1], got {lam}")
    return lam * cross_entropy(tri_posteriors, tri_labels) + (1.0 - lam) * cross_entropy(
        mono_posteriors, mono_labels
    )


def _onehot_grad(posteriors, labels, weight):
    grad = posteriors.copy()
    grad[np.arange(len(labels)), labels] -= 1.0
    return grad * (weight / len(labels))


def loss_and_grads(batch: FrameBatch, params: dict, config: NetworkConfig,
                   lam: float, lhuc_r: np.ndarray | None = None,
                   mode: str = "eval",
                   dropout_rng: np.random.Generator | None = None):
    """Loss, parameter gradients, LHUC gradient, and batch-norm batch stats.

    Returns ``(loss, grads, lhuc_grad, bn_stats)`` where ``grads`` covers
    every trainable tensor, ``lhuc_grad`` is None without LHUC, and
    ``bn_stats`` maps layers to their batch (mean, var) in training mode.
    """
    batch.validate(config)
    (tri, mono), cache = forward(batch.features, params, config, lhuc_r, mode,
                                 dropout_rng, return_cache=True)
    loss = mtl_loss(tri, mono, batch.triphone_labels, batch.monophone_labels, lam)

    grads = {key: np.zeros_like(params[key]) for key in params if is_trainable(key)}
    d_tri = _onehot_grad(tri, batch.triphone_labels, lam)
    d_mono = _onehot_grad(mono, batch.monophone_labels, 1.0 - lam)

    top = cache["top"]
    grads["triphone.W"] = top.T @ d_tri
    grads["triphone.b"] = d_tri.sum(axis=0)
    grads["monophone.W"] = top.T @ d_mono
    grads["monophone.b"] = d_mono.sum(axis=0)

    d_post = {layer: None for layer in range(1, N_HIDDEN_LAYERS + 1)}
    d_post[N_HIDDEN_LAYERS] = d_tri @ params["triphone.W"].T + d_mono @ params["monophone.W"].T

    skip_into: dict[int, list[int]] = {}
    for src, dst in config.skip_connections:
        skip_into.setdefault(dst, []).append(src)

    lhuc_grad = None
    train = mode == "train"
    for layer in range(N_HIDDEN_LAYERS, 0, -1):
        g = d_post[layer]
        lc = cache["layers"][layer - 1]

        if "dropout_mask" in lc:
            g = g * lc["dropout_mask"] / (1.0 - config.dropout_rate)

        apply_lhuc = layer == 1 and lhuc_r is not None
        amp = LhucTable.amplitude(lhuc_r) if apply_lhuc else None
        if apply_lhuc and config.lhuc_after_batchnorm:
            d_amp = (g * lc["lhuc_in"]).sum(axis=0)
            lhuc_grad = d_amp * amp * (1.0 - _sigmoid(lhuc_r))
            g = g * amp

        xhat, inv = lc["bn"]
        gamma = params[f"layer{layer}.bn_gamma"]
        grads[f"layer{layer}.bn_gamma"] = (g * xhat).sum(axis=0)
        grads[f"layer{layer}.bn_beta"] = g.sum(axis=0)
        d_xhat = g * gamma
        if train:
            n = g.shape[0]
            g = (inv / n) * (n * d_xhat - d_xhat.sum(axis=0) - xhat * (d_xhat * xhat).sum(axis=0))
        else:
            g = d_xhat * inv

        if apply_lhuc and not config.lhuc_after_batchnorm:
            d_amp = (g * lc["lhuc_in"]).sum(axis=0)
            lhuc_grad = d_amp * amp * (1.0 - _sigmoid(lhuc_r))
            g = g * amp

        g = g * (lc["pre"] > 0)

        z = lc.get("bottleneck_out", lc["input"])
        grads[f"layer{layer}.W"] = z.T @ g
        grads[f"layer{layer}.b"] = g.sum(axis=0)
        g = g @ params[f"layer{layer}.W"].T
        if config.has_bottleneck(layer):
            grads[f"layer{layer}.bottleneck"] = lc["input"].T @ g
            g = g @ params[f"layer{layer}.bottleneck"].T

        if layer > 1:
            d_post[layer - 1] = g if d_post[layer - 1] is None else d_post[layer - 1] + g
            for src in skip_into.get(layer, ()):
                d_post[src] = g if d_post[src] is None else d_post[src] + g

    bn_stats = {
        layer: cache["layers"][layer - 1]["bn_batch"]
        for layer in range(1, N_HIDDEN_LAYERS + 1)
        if "bn_batch" in cache["layers"][layer - 1]
    }
    return loss, grads, lhuc_grad, bn_stats


def gradient_check(config: NetworkConfig | None = None, seed: int = 0,
                   lam: float = 0.5, n_checks: int = 200,
                   step: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    Runs in eval mode (stored batch-norm statistics, no dropout) over a
    random parameter subset that always includes LHUC entries.
    """
    if config is None:
        config = NetworkConfig(input_dim=10, hidden_dims=(14,) * 6 + (12,),
                               bottleneck_dim=6, dropout_rate=0.0,
                               n_triphone_targets=6, n_monophone_targets=3)
    rng = np.random.default_rng(seed)
    params = init_params(config, rng)
    for layer in range(1, N_HIDDEN_LAYERS + 1):
        params[f"layer{layer}.bn_mean"] = 0.2 * rng.standard_normal(
            config.hidden_dims[layer - 1]
        )
        params[f"layer{layer}.bn_var"] = rng.uniform(0.5, 1.5, config.hidden_dims[layer - 1])

    n_frames = 8
    batch = FrameBatch(
        rng.standard_normal((n_frames, config.input_dim)),
        rng.integers(0, config.n_triphone_targets, n_frames),
        rng.integers(0, config.n_monophone_targets, n_frames),
        "check",
    )
    lhuc_r = 0.5 * rng.standard_normal(config.hidden_dims[0])

    _, grads, lhuc_grad, _ = loss_and_grads(batch, params, config, lam, lhuc_r, mode="eval")

    def loss_at(p, r):
        tri, mono = forward(batch.features, p, config, r, mode="eval")
        return mtl_loss(tri, mono, batch.triphone_labels, batch.monophone_labels, lam)

    coords = [("lhuc", i) for i in range(len(lhuc_r))]
    for key in grads:
        coords.extend((key, i) for i in range(params[key].size))
    n_take = min(n_checks, len(coords))
    lhuc_coords = [c for c in coords if c[0] == "lhuc"]
    other = [c for c in coords if c[0] != "lhuc"]
    chosen = lhuc_coords[: max(1, n_take // 10)]
    picked = rng.choice(len(other), size=n_take - len(chosen), replace=False)
    chosen += [other[i] for i in picked]

    worst = 0.0
    for key, i in chosen:
        if key == "lhuc":
            analytic = lhuc_grad[i]
            r_plus, r_minus = lhuc_r.copy(), lhuc_r.copy()
            r_plus[i] += step
            r_minus[i] -= step
            numeric = (loss_at(params, r_plus) - loss_at(params, r_minus)) / (2 * step)
        else:
            analytic = grads[key].flat[i]
            original = params[key].flat[i]
            params[key].flat[i] = original + step
            up = loss_at(params, lhuc_r)
            params[key].flat[i] = original - step
            down = loss_at(params, lhuc_r)
            params[key].flat[i] = original
            numeric = (up - down) / (2 * step)
        rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)
        worst = max(worst, rel)
    return worst


def _config_to_json(config: NetworkConfig) -> bytes:
    blob = asdict(config)
    blob["skip_connections"] = [list(pair) for pair in config.skip_connections]
    blob["hidden_dims"] = list(config.hidden_dims)
    return json.dumps(blob, sort_keys=True).encode("utf-8")


def _config_from_json(blob: bytes) -> NetworkConfig:
    data = json.loads(blob.decode("utf-8"))
    data["hidden_dims"] = tuple(data["hidden_dims"])
    data["skip_connections"] = tuple(tuple(pair) for pair in data["skip_connections"])
    return NetworkConfig(**data)


def save_model(path, params: dict, config: NetworkConfig,
               lhuc: LhucTable | None = None) -> None:
    """Single binary file: magic, version, config echo, raw little-endian
    float64 tensors in declaration order, then the LHUC table."""
    buf = io.BytesIO()
    cfg = _config_to_json(config)
    buf.write(MODEL_MAGIC)
    buf.write(struct.pack("<II", MODEL_VERSION, len(cfg)))
    buf.write(cfg)
    for key, shape in param_shapes(config).items():
        tensor = np.ascontiguousarray(params[key], dtype="<f8")
        if tensor.shape != shape:
            raise ValueError(f"tensor {key} has shape {tensor.shape}, expected {shape}")
        buf.write(tensor.tobytes())
    entries = sorted(lhuc.entries.items()) if lhuc is not None else []
    buf.write(struct.pack("<I", len(entries)))
    for speaker, r in entries:
        name = speaker.encode("utf-8")
        buf.write(struct.pack("<I", len(name)))
        buf.write(name)
        buf.write(np.ascontiguousarray(r, dtype="<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_model(path):
    """Inverse of save_model; returns (params, config, lhuc_table)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(MODEL_MAGIC)] != MODEL_MAGIC:
        raise ValueError(f"{path} is not a model file (bad magic)")
    pos = len(MODEL_MAGIC)
    version, cfg_len = struct.unpack_from("<II", blob, pos)
    if version != MODEL_VERSION:
        raise ValueError(f"unsupported model version {version}")
    pos += 8
    config = _config_from_json(blob[pos : pos + cfg_len])
    pos += cfg_len
    params = {}
    for key, shape in param_shapes(config).items():
        count = int(np.prod(shape))
        params[key] = np.frombuffer(blob, dtype="<f8", count=count, offset=pos).reshape(shape).copy()
        pos += count * 8
    (n_speakers,) = struct.unpack_from("<I", blob, pos)
    pos += 4
    lhuc = LhucTable(config.hidden_dims[0])
    for _ in range(n_speakers):
        (name_len,) = struct.unpack_from("<I", blob, pos)
        pos += 4
        speaker = blob[pos : pos + name_len].decode("utf-8")
        pos += name_len
        r = np.frombuffer(blob, dtype="<f8", count=lhuc.dim, offset=pos).copy()
        pos += lhuc.dim * 8
        lhuc.entries[speaker] = r
    return params, config, lhuc
