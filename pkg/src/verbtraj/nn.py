"""From-scratch convolutional classifier with explicit backpropagation.

Architecture (all float64): two valid 3x3 convolutions (32 then 64 filters by
default) each followed by a rectifier and optional 2x2 max pooling, then
three dense layers (64, 32, n_classes) with rectifiers between and a softmax
output. Frames are fused by channel-stacking at the input, so a T-frame RGB
sequence enters as 3T channels.

Convolutions are computed as im2col + BLAS matrix products; the patch
extraction, pooling, and scatter kernels come from the active backend.
Everything is deterministic given the seed.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, replace

import numpy as np

from . import backend
from .errors import ModelFormatError, NetworkError
from .verbs import N_CLASSES

MAGIC = b"VTCN"
FORMAT_VERSION = 1

PARAM_ORDER = (
    "conv1_w", "conv1_b", "conv2_w", "conv2_b",
    "fc1_w", "fc1_b", "fc2_w", "fc2_b", "fc3_w", "fc3_b",
)


@dataclass(frozen=True)
class CnnArch:
    height: int = 64
    width: int = 64
    in_channels: int = 15
    conv_filters: tuple[int, int] = (32, 64)
    kernel: int = 3
    pools: tuple[bool, bool] = (True, True)
    dense: tuple[int, int] = (64, 32)
    n_classes: int = N_CLASSES

    def feature_shapes(self):
        """Spatial shapes after each conv/pool stage plus the flat size."""
        k = self.kernel
        h1, w1 = self.height - k + 1, self.width - k + 1
        ph1, pw1 = (h1 // 2, w1 // 2) if self.pools[0] else (h1, w1)
        h2, w2 = ph1 - k + 1, pw1 - k + 1
        ph2, pw2 = (h2 // 2, w2 // 2) if self.pools[1] else (h2, w2)
        if min(h1, w1, h2, w2, ph1, pw1, ph2, pw2) < 1:
            raise NetworkError(f"input {self.height}x{self.width} too small for architecture")
        flat = ph2 * pw2 * self.conv_filters[1]
        return (h1, w1), (ph1, pw1), (h2, w2), (ph2, pw2), flat

    def to_dict(self) -> dict:
        return {
            "height": self.height, "width": self.width, "in_channels": self.in_channels,
            "conv_filters": list(self.conv_filters), "kernel": self.kernel,
            "pools": list(self.pools), "dense": list(self.dense),
            "n_classes": self.n_classes,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CnnArch":
        return cls(
            height=doc["height"], width=doc["width"], in_channels=doc["in_channels"],
            conv_filters=tuple(doc["conv_filters"]), kernel=doc["kernel"],
            pools=tuple(bool(p) for p in doc["pools"]), dense=tuple(doc["dense"]),
            n_classes=doc["n_classes"],
        )


@dataclass(frozen=True)
class CnnModel:
    arch: CnnArch
    params: dict[str, np.ndarray]

    def with_params(self, params: dict[str, np.ndarray]) -> "CnnModel":
        return replace(self, params=params)


def _param_shapes(arch: CnnArch) -> dict[str, tuple[int, ...]]:
    k = arch.kernel
    f1, f2 = arch.conv_filters
    d1, d2 = arch.dense
    flat = arch.feature_shapes()[4]
    return {
        "conv1_w": (f1, arch.in_channels, k, k), "conv1_b": (f1,),
        "conv2_w": (f2, f1, k, k), "conv2_b": (f2,),
        "fc1_w": (flat, d1), "fc1_b": (d1,),
        "fc2_w": (d1, d2), "fc2_b": (d2,),
        "fc3_w": (d2, arch.n_classes), "fc3_b": (arch.n_classes,),
    }


def init_model(arch: CnnArch, seed: int = 0) -> CnnModel:
    """Uniform fan-in scaled initialization; biases start at zero."""
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    for name, shape in _param_shapes(arch).items():
        if name.endswith("_b"):
            params[name] = np.zeros(shape)
        else:
            fan_in = int(np.prod(shape[1:])) if name.startswith("conv") else shape[0]
            limit = np.sqrt(6.0 / fan_in)
            params[name] = rng.uniform(-limit, limit, size=shape)
    return CnnModel(arch=arch, params=params)


def zero_model(arch: CnnArch) -> CnnModel:
    return CnnModel(
        arch=arch, params={n: np.zeros(s) for n, s in _param_shapes(arch).items()}
    )


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _conv_w_matrix(w: np.ndarray) -> np.ndarray:
    """(F, C, k, k) filters as a (k*k*C, F) matrix matching im2col columns."""
    f, c, kh, kw = w.shape
    return np.ascontiguousarray(w.transpose(2, 3, 1, 0)).reshape(kh * kw * c, f)


def _conv_w_from_matrix(wm: np.ndarray, shape) -> np.ndarray:
    f, c, kh, kw = shape
    return np.ascontiguousarray(wm.reshape(kh, kw, c, f).transpose(3, 2, 0, 1))


def _forward_nhwc(model: CnnModel, x: np.ndarray, want_cache: bool):
    arch = model.arch
    p = model.params
    b = x.shape[0]
    if x.shape[1:] != (arch.height, arch.width, arch.in_channels):
        raise NetworkError(
            f"input shape {x.shape[1:]} does not match architecture "
            f"({arch.height}, {arch.width}, {arch.in_channels})"
        )
    k = arch.kernel
    (h1, w1), (ph1, pw1), (h2, w2), (ph2, pw2), flat_dim = arch.feature_shapes()

    cols1 = backend.im2col(x, k, k)
    a1 = cols1 @ _conv_w_matrix(p["conv1_w"])
    a1 += p["conv1_b"]
    np.maximum(a1, 0.0, out=a1)
    a1 = a1.reshape(b, h1, w1, arch.conv_filters[0])
    if arch.pools[0]:
        p1, idx1 = backend.maxpool2(a1)
    else:
        p1, idx1 = a1, None

    cols2 = backend.im2col(p1, k, k)
    a2 = cols2 @ _conv_w_matrix(p["conv2_w"])
    a2 += p["conv2_b"]
    np.maximum(a2, 0.0, out=a2)
    a2 = a2.reshape(b, h2, w2, arch.conv_filters[1])
    if arch.pools[1]:
        p2, idx2 = backend.maxpool2(a2)
    else:
        p2, idx2 = a2, None

    flat = p2.reshape(b, flat_dim)
    h1d = flat @ p["fc1_w"] + p["fc1_b"]
    np.maximum(h1d, 0.0, out=h1d)
    h2d = h1d @ p["fc2_w"] + p["fc2_b"]
    np.maximum(h2d, 0.0, out=h2d)
    logits = h2d @ p["fc3_w"] + p["fc3_b"]
    if not np.isfinite(logits).all():
        raise NetworkError("non-finite values in network output")
    probs = softmax(logits)
    if not want_cache:
        return probs, None
    cache = {
        "x": x, "cols1": cols1, "a1": a1, "idx1": idx1, "p1": p1,
        "cols2": cols2, "a2": a2, "idx2": idx2,
        "flat": flat, "h1d": h1d, "h2d": h2d, "probs": probs,
    }
    return probs, cache


def _nchw_to_nhwc(batch: np.ndarray, arch: CnnArch) -> np.ndarray:
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 4 or batch.shape[1:] != (arch.in_channels, arch.height, arch.width):
        raise NetworkError(
            f"batch shape {batch.shape} does not match architecture "
            f"(B, {arch.in_channels}, {arch.height}, {arch.width})"
        )
    return np.ascontiguousarray(batch.transpose(0, 2, 3, 1))


def forward(model: CnnModel, batch: np.ndarray) -> np.ndarray:
    """Class probabilities (B, n_classes) for a (B, C, H, W) batch."""
    probs, _ = _forward_nhwc(model, _nchw_to_nhwc(batch, model.arch), want_cache=False)
    return probs


def _check_one_hot(targets: np.ndarray, n_classes: int):
    targets = np.asarray(targets, dtype=np.float64)
    if targets.ndim != 2 or targets.shape[1] != n_classes:
        raise NetworkError(f"targets must be (B, {n_classes}), got {targets.shape}")
    if not np.isin(targets, (0.0, 1.0)).all() or not (targets.sum(axis=1) == 1.0).all():
        raise NetworkError("targets must be one-hot rows")
    return targets


def cross_entropy(probs: np.ndarray, targets: np.ndarray) -> float:
    """Mean categorical cross-entropy; probabilities clamped below at 1e-12."""
    targets = _check_one_hot(targets, probs.shape[1])
    clipped = np.maximum(probs, 1e-12)
    loss = float(-(targets * np.log(clipped)).sum(axis=1).mean())
    if not np.isfinite(loss):
        raise NetworkError("non-finite loss")
    return loss


def one_hot(labels: np.ndarray, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((labels.shape[0], n_classes))
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def _backward_from_cache(model: CnnModel, cache: dict, targets: np.ndarray):
    arch = model.arch
    p = model.params
    k = arch.kernel
    b = cache["x"].shape[0]
    (h1, w1), (ph1, pw1), (h2, w2), _, _ = arch.feature_shapes()
    f1, f2 = arch.conv_filters

    grads: dict[str, np.ndarray] = {}
    dlogits = (cache["probs"] - targets) / b

    grads["fc3_w"] = cache["h2d"].T @ dlogits
    grads["fc3_b"] = dlogits.sum(axis=0)
    dh2 = dlogits @ p["fc3_w"].T
    dh2 *= cache["h2d"] > 0

    grads["fc2_w"] = cache["h1d"].T @ dh2
    grads["fc2_b"] = dh2.sum(axis=0)
    dh1 = dh2 @ p["fc2_w"].T
    dh1 *= cache["h1d"] > 0

    grads["fc1_w"] = cache["flat"].T @ dh1
    grads["fc1_b"] = dh1.sum(axis=0)
    dflat = dh1 @ p["fc1_w"].T

    if arch.pools[1]:
        dp2 = dflat.reshape(b, h2 // 2, w2 // 2, f2)
        da2 = backend.maxpool2_backward(dp2, cache["idx2"], h2, w2)
    else:
        da2 = dflat.reshape(b, h2, w2, f2)
    da2 = da2 * (cache["a2"] > 0)
    da2m = da2.reshape(b * h2 * w2, f2)
    grads["conv2_b"] = da2m.sum(axis=0)
    grads["conv2_w"] = _conv_w_from_matrix(cache["cols2"].T @ da2m, p["conv2_w"].shape)
    dcols2 = da2m @ _conv_w_matrix(p["conv2_w"]).T
    dp1 = backend.col2im(dcols2, b, ph1, pw1, f1, k, k)

    if arch.pools[0]:
        da1 = backend.maxpool2_backward(dp1, cache["idx1"], h1, w1)
    else:
        da1 = dp1
    da1 = da1 * (cache["a1"] > 0)
    da1m = da1.reshape(b * h1 * w1, f1)
    grads["conv1_b"] = da1m.sum(axis=0)
    grads["conv1_w"] = _conv_w_from_matrix(cache["cols1"].T @ da1m, p["conv1_w"].shape)
    # gradient w.r.t. the input image is never needed, so conv1 stops here
    return grads


def backward(model: CnnModel, batch: np.ndarray, targets: np.ndarray) -> dict[str, np.ndarray]:
    """Analytic loss gradients for every parameter (same shapes as params)."""
    targets = _check_one_hot(targets, model.arch.n_classes)
    x = _nchw_to_nhwc(batch, model.arch)
    _, cache = _forward_nhwc(model, x, want_cache=True)
    return _backward_from_cache(model, cache, targets)


@dataclass(frozen=True)
class AdamState:
    lr: float
    beta1: float
    beta2: float
    eps: float
    step: int
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]


def adam_init(model: CnnModel, lr: float = 1e-3, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
    zeros = {k: np.zeros_like(v) for k, v in model.params.items()}
    return AdamState(lr=lr, beta1=beta1, beta2=beta2, eps=eps, step=0,
                     m=zeros, v={k: v.copy() for k, v in zeros.items()})


def adam_step(model: CnnModel, grads: dict[str, np.ndarray],
              state: AdamState) -> tuple[CnnModel, AdamState]:
    """One bias-corrected Adam update; returns the new model and state."""
    t = state.step + 1
    new_params: dict[str, np.ndarray] = {}
    new_m: dict[str, np.ndarray] = {}
    new_v: dict[str, np.ndarray] = {}
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    for name, param in model.params.items():
        g = grads[name]
        if g.shape != param.shape:
            raise NetworkError(f"gradient shape {g.shape} != param shape {param.shape} ({name})")
        m = state.beta1 * state.m[name] + (1.0 - state.beta1) * g
        v = state.beta2 * state.v[name] + (1.0 - state.beta2) * (g * g)
        update = state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
        new_params[name] = param - update
        new_m[name] = m
        new_v[name] = v
    return model.with_params(new_params), replace(state, step=t, m=new_m, v=new_v)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 40
    batch_size: int = 32
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0


def _batches(n: int, batch_size: int, order: np.ndarray):
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


def evaluate_arrays(model: CnnModel, x: np.ndarray, y: np.ndarray,
                    batch_size: int = 64) -> tuple[float, float]:
    """(mean loss, accuracy) of uint8 channel-stacked samples (N, H, W, C)."""
    if x.shape[0] == 0:
        raise NetworkError("cannot evaluate an empty sample set")
    n = x.shape[0]
    total_loss = 0.0
    correct = 0
    for idx in _batches(n, batch_size, np.arange(n)):
        xb = x[idx].astype(np.float64) / 255.0
        probs, _ = _forward_nhwc(model, xb, want_cache=False)
        yb = one_hot(y[idx], model.arch.n_classes)
        total_loss += cross_entropy(probs, yb) * len(idx)
        correct += int((probs.argmax(axis=1) == y[idx]).sum())
    return total_loss / n, correct / n


def train(
    train_data: tuple[np.ndarray, np.ndarray],
    val_data: tuple[np.ndarray, np.ndarray] | None,
    arch: CnnArch,
    config: TrainConfig = TrainConfig(),
) -> tuple[CnnModel, list[dict]]:
    """Train from scratch over shuffled mini-batches; fully seeded.

    Data arrays are uint8 channel-stacked samples (N, H, W, 3T) with integer
    labels. Returns the trained model and one metrics dict per epoch.
    """
    x_train, y_train = train_data
    if x_train.shape[0] == 0:
        raise NetworkError("training split is empty")
    if x_train.shape[1:] != (arch.height, arch.width, arch.in_channels):
        raise NetworkError(
            f"sample shape {x_train.shape[1:]} does not match architecture "
            f"({arch.height}, {arch.width}, {arch.in_channels})"
        )
    rng = np.random.default_rng(config.seed)
    model = init_model(arch, seed=config.seed)
    adam = adam_init(model, lr=config.lr, beta1=config.beta1,
                     beta2=config.beta2, eps=config.eps)
    metrics: list[dict] = []
    n = x_train.shape[0]
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        loss_sum = 0.0
        correct = 0
        for idx in _batches(n, config.batch_size, order):
            xb = x_train[idx].astype(np.float64) / 255.0
            yb = one_hot(y_train[idx], arch.n_classes)
            probs, cache = _forward_nhwc(model, xb, want_cache=True)
            loss_sum += cross_entropy(probs, yb) * len(idx)
            correct += int((probs.argmax(axis=1) == y_train[idx]).sum())
            grads = _backward_from_cache(model, cache, yb)
            model, adam = adam_step(model, grads, adam)
        record = {
            "epoch": epoch,
            "train_loss": loss_sum / n,
            "train_acc": correct / n,
        }
        if val_data is not None and val_data[0].shape[0] > 0:
            val_loss, val_acc = evaluate_arrays(model, *val_data, batch_size=config.batch_size)
            record["val_loss"] = val_loss
            record["val_acc"] = val_acc
        else:
            record["val_loss"] = None
            record["val_acc"] = None
        metrics.append(record)
    return model, metrics


def predict(model: CnnModel, frames) -> np.ndarray:
    """Probability vector for one T-frame sample (list of ImageRGB or array)."""
    if hasattr(frames[0], "to_array"):
        arrs = [f.to_array() for f in frames]
    else:
        arrs = [np.asarray(f) for f in frames]
    stacked = np.stack(arrs, axis=0)  # (T, H, W, 3)
    t, h, w, c = stacked.shape
    if 3 * t != model.arch.in_channels or (h, w) != (model.arch.height, model.arch.width):
        raise NetworkError(
            f"{t} frames of {h}x{w}x{c} do not match architecture "
            f"({model.arch.height}x{model.arch.width}, {model.arch.in_channels} channels)"
        )
    x = stacked.transpose(1, 2, 0, 3).reshape(1, h, w, 3 * t).astype(np.float64) / 255.0
    probs, _ = _forward_nhwc(model, x, want_cache=False)
    return probs[0]


def save_model(model: CnnModel, path) -> None:
    """Binary format: magic, version, JSON header, little-endian float64 blobs."""
    header = {
        "arch": model.arch.to_dict(),
        "params": [{"name": n, "shape": list(model.params[n].shape)} for n in PARAM_ORDER],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", FORMAT_VERSION, len(blob)))
        fh.write(blob)
        for name in PARAM_ORDER:
            arr = np.ascontiguousarray(model.params[name], dtype="<f8")
            fh.write(arr.tobytes())


def load_model(path) -> CnnModel:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ModelFormatError(f"bad magic {magic!r}")
        head = fh.read(8)
        if len(head) != 8:
            raise ModelFormatError("truncated header")
        version, header_len = struct.unpack("<II", head)
        if version != FORMAT_VERSION:
            raise ModelFormatError(f"unsupported format version {version}")
        blob = fh.read(header_len)
        if len(blob) != header_len:
            raise ModelFormatError("truncated header")
        header = json.loads(blob.decode("utf-8"))
        arch = CnnArch.from_dict(header["arch"])
        params: dict[str, np.ndarray] = {}
        for spec in header["params"]:
            shape = tuple(spec["shape"])
            count = int(np.prod(shape))
            raw = fh.read(count * 8)
            if len(raw) != count * 8:
                raise ModelFormatError(f"truncated parameter data for {spec['name']!r}")
            params[spec["name"]] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
        if fh.read(1):
            raise ModelFormatError("trailing bytes after parameter data")
    expected = set(PARAM_ORDER)
    if set(params) != expected:
        raise ModelFormatError("parameter set does not match architecture")
    return CnnModel(arch=arch, params=params)
