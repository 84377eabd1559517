"""Layered networks on hexagonal tensors: configs, shape inference,
forward/backward, SGD training, presets, and checkpoints.

Conv and pool layers run on the hexagonal kernels; after a flatten the
dense head works exactly like any rectangle-based network.  Training is
plain SGD with a fixed update order, so a fixed seed reproduces the
same trajectory bit for bit.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grads import (
    apply_activation_backward,
    avgpool_backward,
    conv_backward_filter,
    conv_backward_input,
    maxpool_backward,
)
from .grid import HexTensor, cell_count
from .ops import HexFilterBank, avgpool, conv_valid, maxpool

__all__ = [
    "LayerSpec",
    "NetworkConfig",
    "TrainConfig",
    "Network",
    "build_network",
    "forward",
    "backward",
    "train_step",
    "hex_lenet",
    "hex_lenet4",
    "hex_vgg13",
    "hex_vgg16",
    "PRESETS",
    "save_checkpoint",
    "load_checkpoint",
    "save_dataset",
    "load_dataset",
    "make_two_class_dataset",
]

ACTIVATIONS = ("identity", "relu")
KINDS = ("hexconv", "hexmaxpool", "hexavgpool", "flatten", "dense", "softmax_xent")


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    filters: int = 0
    window: int = 0
    stride: int = 1
    units: int = 0
    activation: str = "identity"

    @classmethod
    def conv(cls, filters, window=2, stride=1, activation="relu"):
        return cls("hexconv", filters=filters, window=window, stride=stride, activation=activation)

    @classmethod
    def maxpool(cls, window=2, stride=3):
        return cls("hexmaxpool", window=window, stride=stride)

    @classmethod
    def avgpool(cls, window=2, stride=3):
        return cls("hexavgpool", window=window, stride=stride)

    @classmethod
    def flatten(cls):
        return cls("flatten")

    @classmethod
    def dense(cls, units, activation="identity"):
        return cls("dense", units=units, activation=activation)

    @classmethod
    def softmax(cls):
        return cls("softmax_xent")


@dataclass(frozen=True)
class NetworkConfig:
    input_side: int
    input_channels: int
    layers: tuple
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float
    batch_size: int = 1
    steps: int = 1
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ValueError("learning rate must be non-negative")
        if self.batch_size < 1 or self.steps < 1:
            raise ValueError("batch size and steps must be at least 1")


class Network:
    """A built network: the config plus parameters and per-layer shapes.

    ``shapes[i]`` is the output shape after layer i-1 (shapes[0] is the
    input): ("hex", side, channels) or ("flat", length).  ``params[i]``
    is a HexFilterBank for conv layers, (W, b) for dense layers, None
    otherwise.
    """

    def __init__(self, cfg, params, shapes, floor_pools):
        self.cfg = cfg
        self.params = params
        self.shapes = shapes
        self.floor_pools = floor_pools  # layer indices where the stride floors

    def parameter_count(self) -> int:
        total = 0
        for p in self.params:
            if isinstance(p, HexFilterBank):
                total += p.weights.size + p.bias.size
            elif p is not None:
                total += p[0].size + p[1].size
        return total

    def describe(self) -> list[str]:
        lines = [f"input: hex side {self.cfg.input_side}, {self.cfg.input_channels} channels"]
        for i, spec in enumerate(self.cfg.layers):
            shape = self.shapes[i + 1]
            note = " (floor stride)" if i in self.floor_pools else ""
            if shape[0] == "hex":
                out = f"hex side {shape[1]}, {shape[2]} channels"
            else:
                out = f"flat {shape[1]}"
            lines.append(f"layer {i} {spec.kind}: {out}{note}")
        return lines


def _fail(i, spec, msg):
    raise ValueError(f"layer {i} ({spec.kind}): {msg}")


def build_network(cfg: NetworkConfig) -> Network:
    """Validate the layer chain, allocate and initialize all parameters.

    Weights are uniform in [-a, a] with a = sqrt(6 / (fan_in + fan_out));
    biases start at zero.
    """
    rng = np.random.default_rng(cfg.seed)
    shape = ("hex", cfg.input_side, cfg.input_channels)
    shapes = [shape]
    params = []
    floor_pools = set()
    for i, spec in enumerate(cfg.layers):
        if spec.kind not in KINDS:
            _fail(i, spec, f"unknown layer kind")
        if spec.kind == "hexconv":
            if shape[0] != "hex":
                _fail(i, spec, "needs a hexagonal input")
            _, side, channels = shape
            if spec.window > side:
                _fail(i, spec, f"window {spec.window} exceeds side {side}")
            if (side - spec.window) % spec.stride:
                _fail(i, spec, f"stride {spec.stride} does not tile side {side}")
            if spec.activation not in ACTIVATIONS:
                _fail(i, spec, f"unknown activation {spec.activation!r}")
            e = cell_count(spec.window)
            a = np.sqrt(6.0 / (channels * e + spec.filters * e))
            w = rng.uniform(-a, a, size=(spec.filters, channels, e))
            params.append(HexFilterBank(spec.window, w))
            shape = ("hex", (side - spec.window) // spec.stride + 1, spec.filters)
        elif spec.kind in ("hexmaxpool", "hexavgpool"):
            if shape[0] != "hex":
                _fail(i, spec, "needs a hexagonal input")
            _, side, channels = shape
            if spec.window > side:
                _fail(i, spec, f"window {spec.window} exceeds side {side}")
            if (side - spec.window) % spec.stride:
                floor_pools.add(i)
            params.append(None)
            shape = ("hex", (side - spec.window) // spec.stride + 1, channels)
        elif spec.kind == "flatten":
            if shape[0] != "hex":
                _fail(i, spec, "input is already flat")
            _, side, channels = shape
            params.append(None)
            shape = ("flat", channels * cell_count(side))
        elif spec.kind == "dense":
            if shape[0] != "flat":
                _fail(i, spec, "needs a flat input (insert flatten)")
            if spec.activation not in ACTIVATIONS:
                _fail(i, spec, f"unknown activation {spec.activation!r}")
            fan_in = shape[1]
            a = np.sqrt(6.0 / (fan_in + spec.units))
            w = rng.uniform(-a, a, size=(spec.units, fan_in))
            params.append((w, np.zeros(spec.units)))
            shape = ("flat", spec.units)
        else:  # softmax_xent
            if shape[0] != "flat":
                _fail(i, spec, "needs logits (a flat input)")
            if i != len(cfg.layers) - 1:
                _fail(i, spec, "must be the final layer")
            params.append(None)
        shapes.append(shape)
    return Network(cfg, params, shapes, floor_pools)


def _act(x: np.ndarray, kind: str) -> np.ndarray:
    if kind == "identity":
        return x
    if kind == "relu":
        return np.maximum(x, 0.0)
    raise ValueError(f"unknown activation {kind!r}")


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max()
    e = np.exp(z)
    return e / e.sum()


def xent_loss_grad(logits: np.ndarray, label: int) -> tuple[float, np.ndarray]:
    """Cross-entropy of softmax(logits) against one label, and d/dlogits."""
    p = softmax(logits)
    loss = -float(np.log(max(p[label], 1e-300)))
    g = p.copy()
    g[label] -= 1.0
    return loss, g


def _forward_sample(net: Network, t: HexTensor):
    x = t
    cache = []
    for i, spec in enumerate(net.cfg.layers):
        if spec.kind == "hexconv":
            z = conv_valid(x, net.params[i], spec.stride)
            cache.append((x, z))
            x = HexTensor(z.side, z.channels, _act(z.data, spec.activation))
        elif spec.kind == "hexmaxpool":
            out, amap = maxpool(x, spec.window, spec.stride, floor_mode=True)
            cache.append(amap)
            x = out
        elif spec.kind == "hexavgpool":
            cache.append(x.side)
            x = avgpool(x, spec.window, spec.stride, floor_mode=True)
        elif spec.kind == "flatten":
            cache.append((x.side, x.channels))
            x = x.data.ravel()
        elif spec.kind == "dense":
            w, b = net.params[i]
            z = w @ x + b
            cache.append((x, z))
            x = _act(z, spec.activation)
        else:  # softmax_xent: loss layer, logits pass through
            cache.append(None)
    return x, cache


def forward(net: Network, batch) -> tuple[np.ndarray, list]:
    """Run the batch; returns (logits (B, classes), per-sample caches)."""
    if net.shapes[-1][0] != "flat":
        raise ValueError("network does not end in a flat output")
    logits = []
    caches = []
    for t in batch:
        if t.side != net.cfg.input_side or t.channels != net.cfg.input_channels:
            raise ValueError("batch input does not match the network config")
        out, cache = _forward_sample(net, t)
        logits.append(out)
        caches.append(cache)
    return np.stack(logits), caches


def _backward_sample(net: Network, cache, d: np.ndarray, grads) -> None:
    for i in reversed(range(len(net.cfg.layers))):
        spec = net.cfg.layers[i]
        if spec.kind == "softmax_xent":
            continue
        if spec.kind == "dense":
            x, z = cache[i]
            if spec.activation == "relu":
                d = d * (z > 0)
            w, _ = net.params[i]
            gw, gb = grads[i]
            gw += np.outer(d, x)
            gb += d
            d = w.T @ d
        elif spec.kind == "flatten":
            side, channels = cache[i]
            d = HexTensor(side, channels, d.reshape(channels, -1))
        elif spec.kind == "hexmaxpool":
            d = maxpool_backward(d, cache[i])
        elif spec.kind == "hexavgpool":
            d = avgpool_backward(d, spec.window, spec.stride, cache[i])
        else:  # hexconv
            x, z = cache[i]
            d = apply_activation_backward(d, z, spec.activation)
            gw, gb = grads[i]
            dw, db = conv_backward_filter(x, d, spec.stride, spec.window)
            gw += dw
            gb += db
            if i > 0:
                d = conv_backward_input(d, net.params[i], spec.stride, x.side)


def _zero_grads(net: Network):
    grads = []
    for p in net.params:
        if isinstance(p, HexFilterBank):
            grads.append((np.zeros_like(p.weights), np.zeros_like(p.bias)))
        elif p is not None:
            grads.append((np.zeros_like(p[0]), np.zeros_like(p[1])))
        else:
            grads.append(None)
    return grads


def backward(net: Network, logits: np.ndarray, caches, labels):
    """Mean cross-entropy loss and gradients for every parameter."""
    if net.cfg.layers[-1].kind != "softmax_xent":
        raise ValueError("backward requires a softmax_xent head")
    labels = np.asarray(labels)
    if len(labels) != len(caches):
        raise ValueError("labels do not match the forward batch")
    grads = _zero_grads(net)
    total = 0.0
    n = len(caches)
    for b in range(n):
        loss, d = xent_loss_grad(logits[b], int(labels[b]))
        total += loss
        _backward_sample(net, caches[b], d / n, grads)
    return total / n, grads


def apply_gradients(net: Network, grads, learning_rate: float) -> None:
    for i, g in enumerate(grads):
        if g is None:
            continue
        p = net.params[i]
        if isinstance(p, HexFilterBank):
            net.params[i] = HexFilterBank(
                p.filter_side, p.weights - learning_rate * g[0], p.bias - learning_rate * g[1]
            )
        else:
            net.params[i] = (p[0] - learning_rate * g[0], p[1] - learning_rate * g[1])


def train_step(net: Network, batch, labels, tc: TrainConfig) -> float:
    """One SGD step; returns the batch loss before the update."""
    logits, caches = forward(net, batch)
    loss, grads = backward(net, logits, caches, labels)
    apply_gradients(net, grads, tc.learning_rate)
    return loss


# ---------------------------------------------------------------------------
# presets

def hex_lenet(input_side: int, classes: int, seed: int = 0) -> NetworkConfig:
    """LeNet-style stack on hexagonal tensors.

    Pool strides follow the non-overlapping side-2 tiling (stride 3)
    and fall back to floor geometry when the side does not divide;
    build_network reports the resolved output sides.
    """
    cfg = NetworkConfig(
        input_side,
        1,
        (
            LayerSpec.conv(6, 2, 1, "relu"),
            LayerSpec.maxpool(2, 3),
            LayerSpec.conv(16, 2, 1, "relu"),
            LayerSpec.maxpool(2, 3),
            LayerSpec.flatten(),
            LayerSpec.dense(120, "relu"),
            LayerSpec.dense(classes),
            LayerSpec.softmax(),
        ),
        seed,
    )
    build_network(cfg)  # surfaces "side too small" immediately
    return cfg


def hex_lenet4(input_side: int, classes: int, seed: int = 0) -> NetworkConfig:
    """Narrower sibling of hex_lenet (4 first-stage filters)."""
    cfg = NetworkConfig(
        input_side,
        1,
        (
            LayerSpec.conv(4, 2, 1, "relu"),
            LayerSpec.maxpool(2, 3),
            LayerSpec.conv(16, 2, 1, "relu"),
            LayerSpec.maxpool(2, 3),
            LayerSpec.flatten(),
            LayerSpec.dense(120, "relu"),
            LayerSpec.dense(classes),
            LayerSpec.softmax(),
        ),
        seed,
    )
    build_network(cfg)
    return cfg


def _vgg(input_side, classes, convs_per_block, seed, width_scale, channels=3):
    widths = [64, 128, 256, 512, 512]
    layers = []
    for block, reps in enumerate(convs_per_block):
        f = max(1, round(widths[block] * width_scale))
        layers.extend(LayerSpec.conv(f, 2, 1, "relu") for _ in range(reps))
        layers.append(LayerSpec.maxpool(2, 2))
    fc = max(1, round(4096 * width_scale))
    layers += [
        LayerSpec.flatten(),
        LayerSpec.dense(fc, "relu"),
        LayerSpec.dense(fc, "relu"),
        LayerSpec.dense(classes),
        LayerSpec.softmax(),
    ]
    return NetworkConfig(input_side, channels, tuple(layers), seed)


def hex_vgg13(input_side: int, classes: int, seed: int = 0, width_scale: float = 1.0):
    """VGG-13-style stack; provided as a buildable preset, not a trained model."""
    return _vgg(input_side, classes, (2, 2, 2, 2, 2), seed, width_scale)


def hex_vgg16(input_side: int, classes: int, seed: int = 0, width_scale: float = 1.0):
    """VGG-16-style stack; provided as a buildable preset, not a trained model."""
    return _vgg(input_side, classes, (2, 2, 3, 3, 3), seed, width_scale)


PRESETS = {"hexlenet4": hex_lenet4, "hexlenet5": hex_lenet}


# ---------------------------------------------------------------------------
# checkpoints ("HXM1") and datasets

HXM_MAGIC = b"HXM1"


def config_digest(cfg: NetworkConfig) -> bytes:
    doc = {
        "input_side": cfg.input_side,
        "input_channels": cfg.input_channels,
        "seed": cfg.seed,
        "layers": [
            [s.kind, s.filters, s.window, s.stride, s.units, s.activation]
            for s in cfg.layers
        ],
    }
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).digest()


def _param_arrays(net: Network):
    for p in net.params:
        if isinstance(p, HexFilterBank):
            yield p.weights.ravel()
            yield p.bias
        elif p is not None:
            yield p[0].ravel()
            yield p[1]


def save_checkpoint(net: Network, path) -> None:
    digest = config_digest(net.cfg)
    arrays = list(_param_arrays(net))
    with open(path, "wb") as fh:
        fh.write(HXM_MAGIC)
        fh.write(struct.pack("<I", len(digest)))
        fh.write(digest)
        fh.write(struct.pack("<I", len(arrays)))
        for a in arrays:
            fh.write(struct.pack("<I", a.size))
            fh.write(a.astype("<f8").tobytes())


def load_checkpoint(path, cfg: NetworkConfig) -> Network:
    raw = Path(path).read_bytes()
    if raw[:4] != HXM_MAGIC:
        raise ValueError(f"{path}: not an HXM1 checkpoint")
    off = 4
    (dlen,) = struct.unpack_from("<I", raw, off)
    off += 4
    digest = raw[off : off + dlen]
    off += dlen
    if digest != config_digest(cfg):
        raise ValueError(f"{path}: checkpoint was saved for a different config")
    (count,) = struct.unpack_from("<I", raw, off)
    off += 4
    arrays = []
    for _ in range(count):
        (size,) = struct.unpack_from("<I", raw, off)
        off += 4
        arrays.append(np.frombuffer(raw, dtype="<f8", count=size, offset=off).astype("=f8"))
        off += size * 8
    net = build_network(cfg)
    expected = list(_param_arrays(net))
    if len(arrays) != len(expected) or any(a.size != e.size for a, e in zip(arrays, expected)):
        raise ValueError(f"{path}: parameter arrays do not match the config")
    it = iter(arrays)
    for i, p in enumerate(net.params):
        if isinstance(p, HexFilterBank):
            w = next(it).reshape(p.weights.shape)
            b = next(it)
            net.params[i] = HexFilterBank(p.filter_side, w, b)
        elif p is not None:
            w = next(it).reshape(p[0].shape)
            b = next(it)
            net.params[i] = (w, b)
    return net


def save_dataset(directory, tensors, labels) -> None:
    from .fileio import write_hxt

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if len(tensors) != len(labels):
        raise ValueError("tensor and label counts differ")
    for i, t in enumerate(tensors):
        write_hxt(directory / f"{i:06d}.hxt", t)
    (directory / "labels.txt").write_text("".join(f"{int(y)}\n" for y in labels))


def load_dataset(directory):
    from .fileio import read_hxt

    directory = Path(directory)
    labels = [int(line) for line in (directory / "labels.txt").read_text().split()]
    tensors = [read_hxt(directory / f"{i:06d}.hxt") for i in range(len(labels))]
    return tensors, np.asarray(labels, dtype=np.int64)


def make_two_class_dataset(rng, n: int, side: int, channels: int = 1, separation: float = 1.0):
    """Gaussian clutter; class 1 adds a constant shift to every cell."""
    labels = rng.integers(0, 2, size=n)
    tensors = []
    cellcount = cell_count(side)
    for y in labels:
        data = rng.normal(0.0, 0.5, size=(channels, cellcount)) + separation * float(y)
        tensors.append(HexTensor(side, channels, data))
    return tensors, labels
