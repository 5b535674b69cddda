"""A small trainable convolutional classifier for coherency patches.

The first block factorizes feature learning over the spatial and
polarimetric dimensions: a depthwise 3x3 convolution filters each of the 9
coherency channels spatially, then a pointwise 1x1 convolution mixes
channels into feature maps.  ReLU, 2x2 max pooling, one hidden dense layer,
and a softmax output complete the network.  Everything is plain numpy in
64-bit floats: forward, analytic backward, and SGD updates, so training is
bit-reproducible for a fixed seed and data order.

Inputs are z-score normalized per channel with statistics frozen from the
first batch a model ever trains on; evaluation reuses the frozen statistics.

Checkpoints use a little-endian binary layout: magic ``DCLM``, version u16,
a fixed-size config block, the normalization statistics, then the parameter
tensors in :data:`PARAM_ORDER` as raw float64.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .coherency import NUM_COMPONENTS, UNLABELED, Patch
from .errors import (
    EmptySetError,
    FormatError,
    NaNLossError,
    OutOfRangeError,
    ShapeMismatchError,
    VersionMismatchError,
)

#: Spatial kernel width of the depthwise convolution.
KERNEL = 3

#: Max-pool window width and stride.
POOL = 2

MODEL_MAGIC = b"DCLM"
MODEL_VERSION = 1

#: Tensor order in checkpoints and initialization draws.
PARAM_ORDER = (
    "depthwise_w",
    "depthwise_b",
    "pointwise_w",
    "pointwise_b",
    "hidden_w",
    "hidden_b",
    "output_w",
    "output_b",
)

#: Channels whose sample standard deviation falls below this are left
#: unscaled (divisor 1) instead of dividing by almost-zero.
_STD_FLOOR = 1e-12

_HEADER = struct.Struct("<4sH4HdQB")


@dataclass(frozen=True)
class ModelConfig:
    """Architecture and training hyper-parameters.

    ``patch_size`` is the square input width (odd, so a patch has a center
    pixel); ``features`` is the channel count after the pointwise mix;
    ``hidden`` the dense layer width.
    """

    num_classes: int
    patch_size: int = 15
    features: int = 16
    hidden: int = 64
    learning_rate: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.num_classes < 2:
            raise ValueError("need at least two classes")
        if self.patch_size % 2 == 0 or self.patch_size < KERNEL + POOL:
            raise ValueError(
                f"patch_size must be odd and at least {KERNEL + POOL}, "
                f"got {self.patch_size}"
            )
        if self.features < 1 or self.hidden < 1:
            raise ValueError("features and hidden width must be positive")
        if not self.learning_rate > 0.0:
            raise ValueError("learning rate must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit an unsigned 64-bit integer")

    @property
    def conv_size(self) -> int:
        """Spatial width after the valid 3x3 convolution."""
        return self.patch_size - KERNEL + 1

    @property
    def pooled_size(self) -> int:
        """Spatial width after 2x2 pooling; odd trailing row/col is cropped."""
        return self.conv_size // POOL

    @property
    def flat_size(self) -> int:
        return self.pooled_size * self.pooled_size * self.features


def param_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Tensor shapes in declaration order."""
    return {
        "depthwise_w": (KERNEL, KERNEL, NUM_COMPONENTS),
        "depthwise_b": (NUM_COMPONENTS,),
        "pointwise_w": (NUM_COMPONENTS, cfg.features),
        "pointwise_b": (cfg.features,),
        "hidden_w": (cfg.flat_size, cfg.hidden),
        "hidden_b": (cfg.hidden,),
        "output_w": (cfg.hidden, cfg.num_classes),
        "output_b": (cfg.num_classes,),
    }


def _glorot_fans(cfg: ModelConfig) -> dict[str, tuple[int, int]]:
    # Depthwise kernels map one channel to itself, so both fans are the
    # spatial kernel area.
    return {
        "depthwise_w": (KERNEL * KERNEL, KERNEL * KERNEL),
        "pointwise_w": (NUM_COMPONENTS, cfg.features),
        "hidden_w": (cfg.flat_size, cfg.hidden),
        "output_w": (cfg.hidden, cfg.num_classes),
    }


@dataclass(frozen=True, eq=False)
class Model:
    """Immutable bundle of config, parameters, and normalization state.

    Training returns a new Model; the input instance is never mutated.
    """

    config: ModelConfig
    params: dict[str, np.ndarray]
    norm_mean: np.ndarray
    norm_std: np.ndarray
    norm_frozen: bool

    def copy_params(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.params.items()}


def init_model(cfg: ModelConfig) -> Model:
    """Fresh model with Glorot-uniform weights and zero biases.

    Weight tensors are drawn in :data:`PARAM_ORDER` from one generator
    seeded with ``cfg.seed``, so the same config yields bit-identical
    models.
    """
    rng = np.random.default_rng(cfg.seed)
    shapes = param_shapes(cfg)
    fans = _glorot_fans(cfg)
    params: dict[str, np.ndarray] = {}
    for name in PARAM_ORDER:
        if name in fans:
            fan_in, fan_out = fans[name]
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            params[name] = rng.uniform(-bound, bound, size=shapes[name])
        else:
            params[name] = np.zeros(shapes[name])
    return Model(
        config=cfg,
        params=params,
        norm_mean=np.zeros(NUM_COMPONENTS),
        norm_std=np.ones(NUM_COMPONENTS),
        norm_frozen=False,
    )


def stack_patches(batch: Sequence[Patch], cfg: ModelConfig) -> tuple[np.ndarray, np.ndarray]:
    """Pile patch pixels into (B, P, P, 9) and labels into (B,).

    Raises
    ------
    EmptySetError
        On an empty batch.
    ShapeMismatchError
        If any patch does not match ``cfg.patch_size``.
    OutOfRangeError
        If any label falls outside [0, num_classes).
    """
    if len(batch) == 0:
        raise EmptySetError("batch is empty")
    expected = (cfg.patch_size, cfg.patch_size)
    for p in batch:
        if p.shape != expected:
            raise ShapeMismatchError(f"patch shape {p.shape} does not match {expected}")
    x = np.stack([p.pixels for p in batch]).astype(np.float64, copy=False)
    y = np.array([p.label for p in batch], dtype=np.int64)
    if y.min() < 0 or y.max() >= cfg.num_classes:
        raise OutOfRangeError(
            f"labels must lie in [0, {cfg.num_classes}), got range "
            f"[{y.min()}, {y.max()}]"
        )
    return x, y


def _forward_parts(cfg, params, mean, std, x):
    """One forward pass keeping every intermediate the backward pass needs."""
    b = x.shape[0]
    hc, hp, f = cfg.conv_size, cfg.pooled_size, cfg.features

    z = (x - mean) / std

    conv = np.zeros((b, hc, hc, NUM_COMPONENTS))
    buf = np.empty_like(conv)
    dw = params["depthwise_w"]
    for u in range(KERNEL):
        for v in range(KERNEL):
            np.multiply(z[:, u : u + hc, v : v + hc, :], dw[u, v, :], out=buf)
            conv += buf
    conv += params["depthwise_b"]

    # One flat GEMM instead of a stack of 13x9 by 9xF products.
    feat = (conv.reshape(-1, NUM_COMPONENTS) @ params["pointwise_w"]).reshape(
        b, hc, hc, f
    )
    feat += params["pointwise_b"]
    act = np.maximum(feat, 0.0)

    crop = act[:, : hp * POOL, : hp * POOL, :]
    windows = (
        crop.reshape(b, hp, POOL, hp, POOL, f)
        .transpose(0, 1, 3, 5, 2, 4)
        .reshape(b, hp, hp, f, POOL * POOL)
    )
    pool_idx = windows.argmax(axis=-1)
    pooled = np.take_along_axis(windows, pool_idx[..., None], axis=-1)[..., 0]

    flat = pooled.reshape(b, -1)
    hidden = np.maximum(flat @ params["hidden_w"] + params["hidden_b"], 0.0)
    logits = hidden @ params["output_w"] + params["output_b"]
    return z, conv, act, pool_idx, flat, hidden, logits


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _loss_sum(logits: np.ndarray, y: np.ndarray) -> float:
    # Sum over samples of logsumexp(logits) - logit_true; stable for any
    # logit magnitude.
    m = logits.max(axis=1)
    lse = m + np.log(np.exp(logits - m[:, None]).sum(axis=1))
    return float((lse - logits[np.arange(len(y)), y]).sum())


def _accumulate_chunk(cfg, params, mean, std, x, y, grads) -> float:
    """Add this chunk's unnormalized gradients into ``grads``; return loss sum."""
    b = x.shape[0]
    hc, hp, f = cfg.conv_size, cfg.pooled_size, cfg.features
    z, conv, act, pool_idx, flat, hidden, logits = _forward_parts(
        cfg, params, mean, std, x
    )

    probs = _softmax(logits)
    dlogits = probs
    dlogits[np.arange(b), y] -= 1.0

    grads["output_w"] += hidden.T @ dlogits
    grads["output_b"] += dlogits.sum(axis=0)

    dhidden = (dlogits @ params["output_w"].T) * (hidden > 0.0)
    grads["hidden_w"] += flat.T @ dhidden
    grads["hidden_b"] += dhidden.sum(axis=0)

    dpool = (dhidden @ params["hidden_w"].T).reshape(b, hp, hp, f)
    dwindows = np.zeros((b, hp, hp, f, POOL * POOL))
    np.put_along_axis(dwindows, pool_idx[..., None], dpool[..., None], axis=-1)
    dact = np.zeros_like(act)
    dact[:, : hp * POOL, : hp * POOL, :] = (
        dwindows.reshape(b, hp, hp, f, POOL, POOL)
        .transpose(0, 1, 4, 2, 5, 3)
        .reshape(b, hp * POOL, hp * POOL, f)
    )

    dfeat = dact * (act > 0.0)
    dfeat2 = dfeat.reshape(-1, f)
    conv2 = conv.reshape(-1, NUM_COMPONENTS)
    grads["pointwise_w"] += conv2.T @ dfeat2
    grads["pointwise_b"] += dfeat2.sum(axis=0)

    dconv = (dfeat2 @ params["pointwise_w"].T).reshape(b, hc, hc, NUM_COMPONENTS)
    grads["depthwise_b"] += dconv.sum(axis=(0, 1, 2))
    ddw = grads["depthwise_w"]
    for u in range(KERNEL):
        for v in range(KERNEL):
            # einsum contracts without materializing the product array
            ddw[u, v, :] += np.einsum(
                "bxyc,bxyc->c", z[:, u : u + hc, v : v + hc, :], dconv
            )

    return _loss_sum(logits, y)


def loss_and_gradients(
    m: Model, batch: Sequence[Patch], chunk: int = 2048
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean cross-entropy and its gradient for every parameter tensor.

    The loss is the natural-log cross-entropy averaged over the batch; the
    gradients average the same way, so they are exactly what one SGD step
    consumes.  Uses the model's current normalization statistics without
    freezing them.
    """
    x, y = stack_patches(batch, m.config)
    total = x.shape[0]
    grads = {k: np.zeros_like(v) for k, v in m.params.items()}
    loss_total = 0.0
    for start in range(0, total, chunk):
        stop = min(start + chunk, total)
        loss_total += _accumulate_chunk(
            m.config, m.params, m.norm_mean, m.norm_std, x[start:stop], y[start:stop], grads
        )
    for k in grads:
        grads[k] /= total
    return loss_total / total, grads


def freeze_normalization(m: Model, batch: Sequence[Patch]) -> Model:
    """Pin per-channel z-score statistics to this batch's distribution.

    No-op if already frozen.  Channels with (near) zero spread keep divisor
    1 so constant channels pass through unscaled.
    """
    if m.norm_frozen:
        return m
    x, _ = stack_patches(batch, m.config)
    mean = x.mean(axis=(0, 1, 2))
    std = x.std(axis=(0, 1, 2))
    std = np.where(std < _STD_FLOOR, 1.0, std)
    return replace(m, norm_mean=mean, norm_std=std, norm_frozen=True)


def train_on_batch(
    m: Model, batch: Sequence[Patch], epochs: int
) -> tuple[Model, list[float]]:
    """Run full-batch SGD passes over one batch; return the updated model.

    Each epoch takes exactly one gradient step on the whole batch; the
    recorded loss is the value before that step.  The first batch a model
    ever sees freezes its normalization statistics.

    Raises
    ------
    OutOfRangeError
        If ``epochs`` < 1.
    NaNLossError
        If the loss or any updated parameter stops being finite.
    """
    if epochs < 1:
        raise OutOfRangeError(f"epochs must be at least 1, got {epochs}")
    m = freeze_normalization(m, batch)
    params = m.copy_params()
    working = replace(m, params=params)
    lr = m.config.learning_rate
    losses: list[float] = []
    for epoch in range(epochs):
        loss, grads = loss_and_gradients(working, batch)
        if not np.isfinite(loss):
            raise NaNLossError(
                f"loss became {loss} at epoch {epoch + 1}/{epochs} "
                f"on a batch of {len(batch)}"
            )
        losses.append(float(loss))
        for k in params:
            params[k] -= lr * grads[k]
            if not np.all(np.isfinite(params[k])):
                raise NaNLossError(
                    f"parameter {k} became non-finite at epoch {epoch + 1}/{epochs}"
                )
    return working, losses


def forward(m: Model, batch: Sequence[Patch], chunk: int = 2048) -> np.ndarray:
    """Class-probability rows for each patch; each row sums to 1."""
    x, _dummy = _stack_unlabeled(batch, m.config)
    return forward_array(m, x, chunk=chunk)


def forward_array(m: Model, x: np.ndarray, chunk: int = 2048) -> np.ndarray:
    """Probabilities for a prepared (B, P, P, 9) array."""
    cfg = m.config
    if x.ndim != 4 or x.shape[1:] != (cfg.patch_size, cfg.patch_size, NUM_COMPONENTS):
        raise ShapeMismatchError(
            f"expected (B, {cfg.patch_size}, {cfg.patch_size}, {NUM_COMPONENTS}), "
            f"got {x.shape}"
        )
    out = np.empty((x.shape[0], cfg.num_classes))
    for start in range(0, x.shape[0], chunk):
        stop = min(start + chunk, x.shape[0])
        logits = _forward_parts(
            cfg, m.params, m.norm_mean, m.norm_std, x[start:stop]
        )[-1]
        out[start:stop] = _softmax(logits)
    return out


def _stack_unlabeled(batch, cfg):
    # Like stack_patches but tolerant of UNLABELED patches (prediction only).
    if len(batch) == 0:
        raise EmptySetError("batch is empty")
    expected = (cfg.patch_size, cfg.patch_size)
    for p in batch:
        if p.shape != expected:
            raise ShapeMismatchError(f"patch shape {p.shape} does not match {expected}")
    x = np.stack([p.pixels for p in batch]).astype(np.float64, copy=False)
    y = np.array([p.label for p in batch], dtype=np.int64)
    return x, y


def cross_entropy(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean natural-log cross-entropy of probability rows against labels."""
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    picked = probs[np.arange(len(labels)), labels]
    with np.errstate(divide="ignore"):
        return float(-np.log(picked).mean())


def evaluate(m: Model, test: Sequence[Patch]) -> float:
    """Overall accuracy: fraction of argmax-correct predictions.

    Argmax ties resolve to the lowest class index.
    """
    if len(test) == 0:
        raise EmptySetError("test set is empty")
    x, y = _stack_unlabeled(test, m.config)
    probs = forward_array(m, x)
    return float((probs.argmax(axis=1) == y).mean())


def classify_scene(m: Model, data: np.ndarray, chunk: int = 2048) -> np.ndarray:
    """Predict a class for every pixel far enough from the scene border.

    Returns an int32 raster shaped like the scene; border pixels whose
    window would leave the scene hold :data:`UNLABELED`.
    """
    p = m.config.patch_size
    rows, cols = data.shape[0], data.shape[1]
    if rows < p or cols < p:
        raise ShapeMismatchError(f"scene {rows}x{cols} smaller than patch size {p}")
    windows = np.lib.stride_tricks.sliding_window_view(data, (p, p), axis=(0, 1))
    out = np.full((rows, cols), UNLABELED, dtype=np.int32)
    half = p // 2
    n_rows, n_cols = windows.shape[0], windows.shape[1]
    flat_total = n_rows * n_cols
    preds = np.empty(flat_total, dtype=np.int32)
    for start in range(0, flat_total, chunk):
        stop = min(start + chunk, flat_total)
        rr, cc = np.unravel_index(np.arange(start, stop), (n_rows, n_cols))
        x = windows[rr, cc].transpose(0, 2, 3, 1)
        probs = forward_array(m, np.ascontiguousarray(x), chunk=chunk)
        preds[start:stop] = probs.argmax(axis=1).astype(np.int32)
    out[half : half + n_rows, half : half + n_cols] = preds.reshape(n_rows, n_cols)
    return out


def save_model(m: Model, path) -> None:
    """Write a checkpoint; see the module docstring for the layout."""
    cfg = m.config
    blob = bytearray()
    blob += _HEADER.pack(
        MODEL_MAGIC,
        MODEL_VERSION,
        cfg.num_classes,
        cfg.patch_size,
        cfg.features,
        cfg.hidden,
        cfg.learning_rate,
        cfg.seed,
        1 if m.norm_frozen else 0,
    )
    blob += np.ascontiguousarray(m.norm_mean, dtype="<f8").tobytes()
    blob += np.ascontiguousarray(m.norm_std, dtype="<f8").tobytes()
    for name in PARAM_ORDER:
        blob += np.ascontiguousarray(m.params[name], dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(bytes(blob))


def load_model(path) -> Model:
    """Read a checkpoint written by :func:`save_model`.

    Raises
    ------
    FormatError
        On bad magic, truncation, or trailing bytes; messages carry the
        byte offset where parsing stopped.
    VersionMismatchError
        On an unsupported version number.
    """
    with open(path, "rb") as fh:
        buf = fh.read()
    if len(buf) < _HEADER.size:
        raise FormatError(
            f"file ends at byte {len(buf)}, header needs {_HEADER.size}"
        )
    magic, version, num_classes, patch_size, features, hidden, lr, seed, frozen = (
        _HEADER.unpack_from(buf, 0)
    )
    if magic != MODEL_MAGIC:
        raise FormatError(
            f"bad magic {magic!r} at byte 0, expected {MODEL_MAGIC!r}"
        )
    if version != MODEL_VERSION:
        raise VersionMismatchError(
            f"version {version} not supported (expected {MODEL_VERSION})"
        )
    cfg = ModelConfig(
        num_classes=num_classes,
        patch_size=patch_size,
        features=features,
        hidden=hidden,
        learning_rate=lr,
        seed=seed,
    )
    offset = _HEADER.size

    def take(count: int) -> np.ndarray:
        nonlocal offset
        end = offset + count * 8
        if end > len(buf):
            raise FormatError(
                f"file ends at byte {len(buf)}, needed {end} "
                f"(truncated while reading at offset {offset})"
            )
        arr = np.frombuffer(buf, dtype="<f8", count=count, offset=offset).copy()
        offset = end
        return arr

    mean = take(NUM_COMPONENTS)
    std = take(NUM_COMPONENTS)
    params = {}
    for name in PARAM_ORDER:
        shape = param_shapes(cfg)[name]
        params[name] = take(int(np.prod(shape))).reshape(shape)
    if offset != len(buf):
        raise FormatError(f"unexpected trailing bytes at offset {offset}")
    return Model(
        config=cfg,
        params=params,
        norm_mean=mean,
        norm_std=std,
        norm_frozen=bool(frozen),
    )
