"""Six-block convolutional network on 200x200 grayscale RD maps, in numpy.

Each block is a same-padded 3x3 convolution (stride 1), ReLU and a 2x2 max-pool
with floor semantics, so 200 -> 100 -> 50 -> 25 -> 12 -> 6 -> 3. The 3x3x16
output is flattened into a 16-unit ReLU layer, inverted dropout, and a single
sigmoid unit. Tensors are NHWC; the loss is mean binary cross-entropy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from rdclass.errors import DataError, TrainingError
from rdclass.metrics import ConfusionMatrix
from rdclass.models.base import Classifier


@dataclass(frozen=True)
class Architecture:
    input_size: int = 200
    n_blocks: int = 6
    n_kernels: int = 16
    hidden: int = 16
    dropout: float = 0.5

    def spatial_sizes(self) -> list[int]:
        sizes = [self.input_size]
        for _ in range(self.n_blocks):
            sizes.append(sizes[-1] // 2)
        return sizes

    @property
    def flat_size(self) -> int:
        return self.spatial_sizes()[-1] ** 2 * self.n_kernels

    def shapes(self) -> dict[str, tuple[int, ...]]:
        out = {}
        for i in range(self.n_blocks):
            cin = 1 if i == 0 else self.n_kernels
            out[f"conv{i}_w"] = (3, 3, cin, self.n_kernels)
            out[f"conv{i}_b"] = (self.n_kernels,)
        out["dense1_w"] = (self.flat_size, self.hidden)
        out["dense1_b"] = (self.hidden,)
        out["dense2_w"] = (self.hidden, 1)
        out["dense2_b"] = (1,)
        return out

    def parameter_count(self) -> int:
        return int(sum(np.prod(s) for s in self.shapes().values()))


@dataclass
class NetworkParams:
    arch: Architecture
    arrays: dict[str, np.ndarray]

    def __getitem__(self, name):
        return self.arrays[name]

    def copy(self) -> "NetworkParams":
        return NetworkParams(self.arch, {k: v.copy() for k, v in self.arrays.items()})

    def astype(self, dtype) -> "NetworkParams":
        return NetworkParams(self.arch, {k: v.astype(dtype) for k, v in self.arrays.items()})

    @property
    def dtype(self):
        return self.arrays["dense2_b"].dtype


def init_params(arch: Architecture = Architecture(), seed: int = 0, dtype=np.float64) -> NetworkParams:
    """He-uniform weights (limit sqrt(6 / fan_in)), zero biases."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), 0])))
    arrays = {}
    for name, shape in arch.shapes().items():
        if name.endswith("_b"):
            arrays[name] = np.zeros(shape, dtype=dtype)
        else:
            fan_in = int(np.prod(shape[:-1]))
            limit = np.sqrt(6.0 / fan_in)
            arrays[name] = rng.uniform(-limit, limit, size=shape).astype(dtype)
    return NetworkParams(arch, arrays)


def zero_params(arch: Architecture = Architecture(), dtype=np.float64) -> NetworkParams:
    return NetworkParams(arch, {k: np.zeros(s, dtype=dtype) for k, s in arch.shapes().items()})


# -- layers -----------------------------------------------------------------

def conv_forward(x, w, b):
    """Same-padded 3x3 convolution. Returns output and the im2col matrix."""
    B, H, W, C = x.shape
    K = w.shape[-1]
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    cols = sliding_window_view(xp, (3, 3), axis=(1, 2)).reshape(B * H * W, C * 9)
    wmat = w.transpose(2, 0, 1, 3).reshape(C * 9, K)
    out = cols @ wmat + b
    return out.reshape(B, H, W, K), cols


def conv_backward(dout, cols, x_shape, w, need_dx=True):
    B, H, W, C = x_shape
    K = w.shape[-1]
    d2 = dout.reshape(-1, K)
    dw = (cols.T @ d2).reshape(C, 3, 3, K).transpose(1, 2, 0, 3)
    db = d2.sum(axis=0)
    if not need_dx:
        return None, dw, db
    dxp = np.zeros((B, H + 2, W + 2, C), dtype=dout.dtype)
    for i in range(3):
        for j in range(3):
            dxp[:, i : i + H, j : j + W, :] += (d2 @ w[i, j].T).reshape(B, H, W, C)
    return dxp[:, 1:-1, 1:-1, :], dw, db


def pool_forward(y):
    """2x2 max-pool, stride 2; odd trailing rows/columns are dropped.

    Also returns, per window, which position won: bit 1 set for the lower
    row, bit 0 for the right column. Ties go to the left column, then the
    upper row, so exactly one position receives the gradient.
    """
    B, H, W, K = y.shape
    H2, W2 = H // 2, W // 2
    if H % 2 or W % 2:
        y = y[:, : 2 * H2, : 2 * W2, :]
    v = y.reshape(B, H2, 2, W2, 2 * K)
    top, bottom = v[:, :, 0], v[:, :, 1]
    lower = bottom > top
    m = np.maximum(top, bottom).reshape(B, H2, W2, 2, K)
    lower = lower.reshape(B, H2, W2, 2, K)
    right = m[..., 1, :] > m[..., 0, :]
    out = np.maximum(m[..., 0, :], m[..., 1, :])
    row = np.where(right, lower[..., 1, :], lower[..., 0, :])
    which = (row.view(np.int8) << 1) | right.view(np.int8)
    return out, which


_WINNER_CODES = np.array([[0, 1], [2, 3]], dtype=np.int8).reshape(1, 1, 2, 1, 2, 1)


def pool_backward(dout, which, y_shape):
    B, H, W, K = y_shape
    H2, W2 = H // 2, W // 2
    hit = which[:, :, None, :, None, :] == _WINNER_CODES
    dy = np.multiply(hit, dout[:, :, None, :, None, :], dtype=dout.dtype)
    dy = dy.reshape(B, 2 * H2, 2 * W2, K)
    if H % 2 or W % 2:
        full = np.zeros(y_shape, dtype=dout.dtype)
        full[:, : 2 * H2, : 2 * W2, :] = dy
        return full
    return dy


def _as_rng(dropout_rng):
    if isinstance(dropout_rng, np.random.Generator):
        return dropout_rng
    return np.random.default_rng(dropout_rng)


def forward(params: NetworkParams, batch, training: bool = False, dropout_rng=None):
    """Probabilities (B,) and a cache for ``backward``.

    ``dropout_rng`` (seed or Generator) drives the dropout mask in training mode.
    """
    arch = params.arch
    x = np.asarray(batch, dtype=params.dtype)
    if x.ndim == 3:
        x = x[..., None]
    if x.ndim != 4 or x.shape[1:] != (arch.input_size, arch.input_size, 1):
        raise DataError(f"expected batch of shape (B, {arch.input_size}, {arch.input_size}, 1), got {x.shape}")
    cache = {"blocks": []}
    for i in range(arch.n_blocks):
        pre, cols = conv_forward(x, params[f"conv{i}_w"], params[f"conv{i}_b"])
        # max-pool commutes with ReLU, so pool first and rectify the smaller tensor
        pooled, which = pool_forward(pre)
        cache["blocks"].append((x.shape, cols, pre.shape, which, pooled))
        x = np.maximum(pooled, 0)
    flat = x.reshape(x.shape[0], -1)
    h_pre = flat @ params["dense1_w"] + params["dense1_b"]
    h = np.maximum(h_pre, 0)
    if training and arch.dropout > 0:
        keep = 1.0 - arch.dropout
        mask = (_as_rng(dropout_rng).random(h.shape) < keep).astype(h.dtype) / keep
    else:
        mask = None
    h_drop = h * mask if mask is not None else h
    logits = (h_drop @ params["dense2_w"] + params["dense2_b"])[:, 0]
    probs = 0.5 * (1.0 + np.tanh(0.5 * logits))
    cache.update(flat=flat, pooled_shape=x.shape, h_pre=h_pre, mask=mask, h_drop=h_drop, logits=logits, probs=probs)
    return probs, cache


def bce_loss(logits, labels) -> float:
    """Mean binary cross-entropy evaluated from logits."""
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def backward(params: NetworkParams, cache, labels) -> dict[str, np.ndarray]:
    """Gradients of the mean binary cross-entropy, keyed like ``params.arrays``."""
    y = np.asarray(labels, dtype=params.dtype).ravel()
    probs = cache["probs"]
    if y.shape != probs.shape:
        raise DataError(f"labels shape {y.shape} does not match batch {probs.shape}")
    arch = params.arch
    grads = {}
    dz = ((probs - y) / y.size)[:, None]
    grads["dense2_w"] = cache["h_drop"].T @ dz
    grads["dense2_b"] = dz.sum(axis=0)
    dh = dz @ params["dense2_w"].T
    if cache["mask"] is not None:
        dh = dh * cache["mask"]
    dh = dh * (cache["h_pre"] > 0)
    grads["dense1_w"] = cache["flat"].T @ dh
    grads["dense1_b"] = dh.sum(axis=0)
    dx = (dh @ params["dense1_w"].T).reshape(cache["pooled_shape"])
    for i in reversed(range(arch.n_blocks)):
        x_shape, cols, pre_shape, which, pooled = cache["blocks"][i]
        dpre = pool_backward(dx * (pooled > 0), which, pre_shape)
        dx, dw, db = conv_backward(dpre, cols, x_shape, params[f"conv{i}_w"], need_dx=i > 0)
        grads[f"conv{i}_w"] = dw
        grads[f"conv{i}_b"] = db
    return grads


# -- optimiser --------------------------------------------------------------

@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: dict, grads: dict, state: AdamState) -> tuple[dict, AdamState]:
    """One Adam update of every array in ``params`` (in place); returns both."""
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient for {name}", {"step": state.t + 1, "parameter": name})
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    corr1 = 1.0 - b1**state.t
    corr2 = 1.0 - b2**state.t
    for name, g in grads.items():
        if name not in state.m:
            state.m[name] = np.zeros_like(g)
            state.v[name] = np.zeros_like(g)
        m = state.m[name] = b1 * state.m[name] + (1.0 - b1) * g
        v = state.v[name] = b2 * state.v[name] + (1.0 - b2) * g * g
        m_hat = m / corr1
        v_hat = v / corr2
        params[name] = params[name] - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params, state


# -- training ---------------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 32
    max_epochs: int = 60
    patience: int | None = 12  # stop after this many epochs without a higher validation accuracy
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    dtype: str = "float32"
    eval_batch: int = 64


def predict_proba(params: NetworkParams, images, batch_size: int = 64) -> np.ndarray:
    images = np.asarray(images)
    out = np.empty(images.shape[0], dtype=np.float64)
    for s in range(0, images.shape[0], batch_size):
        out[s : s + batch_size] = forward(params, images[s : s + batch_size])[0]
    return out


def _eval(params, images, labels, batch_size):
    losses, correct = [], 0
    for s in range(0, images.shape[0], batch_size):
        probs, cache = forward(params, images[s : s + batch_size])
        y = labels[s : s + batch_size]
        losses.append(bce_loss(cache["logits"], y) * y.size)
        correct += int(np.sum((probs >= 0.5) == (y == 1)))
    return sum(losses) / labels.size, correct / labels.size


def train(
    images,
    labels,
    val_images,
    val_labels,
    config: TrainConfig = TrainConfig(),
    seed: int = 0,
    arch: Architecture | None = None,
):
    """Mini-batch Adam; keeps the parameters of the best validation epoch.

    "Best" is the highest validation accuracy, ties going to the lower
    validation loss. Patience counts epochs that fail to raise the validation
    accuracy, so a loss-only improvement updates the snapshot but does not
    extend training. Returns (params, history) with one history dict per epoch.
    """
    images = np.asarray(images)
    labels = np.asarray(labels).astype(np.int64)
    val_images = np.asarray(val_images)
    val_labels = np.asarray(val_labels).astype(np.int64)
    if len(np.unique(labels)) < 2:
        raise DataError("training set needs both classes")
    if images.ndim == 3:
        images = images[..., None]
    if val_images.ndim == 3:
        val_images = val_images[..., None]
    arch = arch or Architecture(input_size=images.shape[1])
    dtype = np.dtype(config.dtype)
    params = init_params(arch, seed, dtype)
    state = AdamState(config.lr, config.beta1, config.beta2, config.eps)
    seq = np.random.SeedSequence([int(seed), 1])
    shuffle_rng, dropout_rng = (np.random.Generator(np.random.PCG64(s)) for s in seq.spawn(2))

    n = labels.size
    history = []
    best, best_key, best_acc, stale = params.copy(), None, -1.0, 0
    for epoch in range(1, config.max_epochs + 1):
        order = shuffle_rng.permutation(n)
        loss_sum, correct = 0.0, 0
        for s in range(0, n, config.batch_size):
            idx = order[s : s + config.batch_size]
            xb = images[idx].astype(dtype, copy=False)
            yb = labels[idx]
            probs, cache = forward(params, xb, training=True, dropout_rng=dropout_rng)
            loss_sum += bce_loss(cache["logits"], yb) * idx.size
            correct += int(np.sum((probs >= 0.5) == (yb == 1)))
            grads = backward(params, cache, yb)
            adam_step(params.arrays, grads, state)
        val_loss, val_acc = _eval(params, val_images, val_labels, config.eval_batch)
        if not np.isfinite(val_loss):
            raise TrainingError("validation loss is not finite", {"epoch": epoch, "history": history[-5:]})
        history.append(
            {"epoch": epoch, "train_loss": loss_sum / n, "train_acc": correct / n,
             "val_loss": val_loss, "val_acc": val_acc}
        )
        key = (val_acc, -val_loss)
        if best_key is None or key > best_key:
            best, best_key = params.copy(), key
        if val_acc > best_acc:
            best_acc, stale = val_acc, 0
        else:
            stale += 1
            if config.patience is not None and stale >= config.patience:
                break
    return best, history


def evaluate(params: NetworkParams, images, labels) -> tuple[float, ConfusionMatrix]:
    probs = predict_proba(params, images)
    cm = ConfusionMatrix.from_predictions(labels, probs >= 0.5)
    return cm.accuracy, cm


class ConvNetClassifier(Classifier):
    """Classifier-contract wrapper; inputs are (N, size, size) images in [0, 1]."""

    kind = "convnet"

    def __init__(self, params: NetworkParams, history=None):
        self.params = params
        self.history = history or []

    def score(self, X):
        return predict_proba(self.params, X)

    def predict_one(self, x):
        s = float(predict_proba(self.params, np.asarray(x)[None])[0])
        return int(s >= 0.5), s

    def hyperparameters(self):
        a = self.params.arch
        return {"input_size": a.input_size, "n_blocks": a.n_blocks, "n_kernels": a.n_kernels,
                "hidden": a.hidden, "dropout": a.dropout}

    def parameters(self):
        return {"dtype": str(self.params.dtype),
                "arrays": {k: {"shape": list(v.shape), "values": v.astype(np.float64).ravel().tolist()}
                           for k, v in self.params.arrays.items()}}

    @classmethod
    def restore(cls, hyperparameters, parameters):
        arch = Architecture(**hyperparameters)
        dtype = np.dtype(parameters["dtype"])
        arrays = {k: np.array(v["values"], dtype=np.float64).astype(dtype).reshape(v["shape"])
                  for k, v in parameters["arrays"].items()}
        return cls(NetworkParams(arch, arrays))
