"""Quantized bias-free networks, post-hoc uniform quantization, and the
noise-free forward oracle.

Networks are stacks of conv2d / conv1d / linear layers without biases, with
ReLU between layers (none after the last). Weights are stored as signed
integer codes plus one per-tensor scale, so that every analog simulation
result can be checked against ``ideal_forward`` on the dequantized weights.
Also provides a desk-scale trainer and synthetic dataset generator used to
produce reproducible fixture networks.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

SUPPORTED_BIT_WIDTHS = (4, 6, 8)
FORMAT_VERSION = 1

LAYER_KINDS = ("conv2d", "conv1d", "linear")


class NetworkFormatError(ValueError):
    """A network or dataset file failed validation; message names the field."""


def _round_half_away(x: np.ndarray) -> np.ndarray:
    """Round to nearest integer, halves away from zero."""
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


# ---------------------------------------------------------------------------
# layer geometry


@dataclass
class LayerSpec:
    """One layer's kind and geometry.

    Spatial fields (in_x, in_y) and the fan-in fields (in_channels /
    in_features) are filled in by ``propagate_shapes``; only the free
    parameters need to be set when describing an architecture.
    """

    kind: str
    in_channels: int = 0
    kernels: int = 0
    kernel_h: int = 1
    kernel_w: int = 1
    stride: int = 1
    padding: int = 0
    dilation: int = 1
    in_features: int = 0
    out_features: int = 0
    in_x: int = 0  # input spatial height (conv), per shape propagation
    in_y: int = 0  # input spatial width; 1 for conv1d

    def validate(self) -> None:
        if self.kind not in LAYER_KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.kind == "linear":
            if self.out_features < 1:
                raise ValueError("linear layer needs out_features >= 1")
            return
        if self.kernels < 1:
            raise ValueError("conv layer needs kernels >= 1")
        if self.kernel_h < 1 or self.kernel_w < 1:
            raise ValueError("kernel extents must be >= 1")
        if self.stride < 1 or self.dilation < 1:
            raise ValueError("stride and dilation must be >= 1")
        if self.padding < 0:
            raise ValueError("padding must be >= 0")
        if self.kind == "conv1d" and self.kernel_w != 1:
            raise ValueError("conv1d requires kernel_w == 1")

    def weight_shape(self) -> tuple[int, ...]:
        if self.kind == "linear":
            return (self.out_features, self.in_features)
        if self.kind == "conv1d":
            return (self.kernels, self.in_channels, self.kernel_h)
        return (self.kernels, self.in_channels, self.kernel_h, self.kernel_w)


def conv2d(kernels: int, kernel_h: int, kernel_w: int, stride: int = 1,
           padding: int = 0, dilation: int = 1) -> LayerSpec:
    return LayerSpec("conv2d", kernels=kernels, kernel_h=kernel_h,
                     kernel_w=kernel_w, stride=stride, padding=padding,
                     dilation=dilation)


def conv1d(kernels: int, kernel_h: int, stride: int = 1, padding: int = 0,
           dilation: int = 1) -> LayerSpec:
    return LayerSpec("conv1d", kernels=kernels, kernel_h=kernel_h, kernel_w=1,
                     stride=stride, padding=padding, dilation=dilation)


def linear(out_features: int) -> LayerSpec:
    return LayerSpec("linear", out_features=out_features)


def out_extent(extent: int, kernel: int, stride: int, padding: int,
               dilation: int) -> int:
    """Output length of one convolved dimension (standard formula)."""
    span = extent + 2 * padding - dilation * (kernel - 1) - 1
    if span < 0:
        raise ValueError(
            f"non-positive output extent: input {extent}, kernel {kernel}, "
            f"padding {padding}, dilation {dilation}")
    return span // stride + 1


def propagate_shapes(specs: list[LayerSpec],
                     feature_shape: tuple[int, ...]) -> tuple[list[LayerSpec], tuple[int, ...]]:
    """Fill in fan-in/spatial fields layer by layer; returns (specs, out_shape).

    Raises ValueError naming the first layer whose shape does not compose.
    """
    shape = tuple(int(d) for d in feature_shape)
    out: list[LayerSpec] = []
    for i, spec in enumerate(specs):
        spec = replace(spec)
        try:
            spec.validate()
            if spec.kind == "linear":
                feat = int(np.prod(shape))
                spec.in_features = feat
                shape = (spec.out_features,)
            elif spec.kind == "conv1d":
                if len(shape) != 2:
                    raise ValueError(f"conv1d expects (channels, length) input, got {shape}")
                c, x = shape
                spec.in_channels, spec.in_x, spec.in_y = c, x, 1
                ox = out_extent(x, spec.kernel_h, spec.stride, spec.padding, spec.dilation)
                shape = (spec.kernels, ox)
            else:  # conv2d
                if len(shape) != 3:
                    raise ValueError(f"conv2d expects (channels, height, width) input, got {shape}")
                c, x, y = shape
                spec.in_channels, spec.in_x, spec.in_y = c, x, y
                ox = out_extent(x, spec.kernel_h, spec.stride, spec.padding, spec.dilation)
                oy = out_extent(y, spec.kernel_w, spec.stride, spec.padding, spec.dilation)
                shape = (spec.kernels, ox, oy)
        except ValueError as err:
            raise ValueError(f"layers[{i}]: {err}") from err
        out.append(spec)
    return out, shape


# ---------------------------------------------------------------------------
# quantization


@dataclass
class WeightTensor:
    """Signed integer weight codes with a single per-tensor scale."""

    codes: np.ndarray
    scale: float
    bit_width: int

    @property
    def shape(self) -> tuple[int, ...]:
        return self.codes.shape

    def code_limit(self) -> int:
        return 2 ** (self.bit_width - 1) - 1

    def dequantized(self) -> np.ndarray:
        return self.codes.astype(float) * self.scale

    def validate(self) -> None:
        if self.bit_width not in SUPPORTED_BIT_WIDTHS:
            raise ValueError(f"bit_width must be one of {SUPPORTED_BIT_WIDTHS}")
        if self.scale <= 0:
            raise ValueError("scale must be > 0")
        if np.abs(self.codes).max(initial=0) > self.code_limit():
            raise ValueError(f"codes exceed {self.bit_width}-bit symmetric range")


def quantize_weights(values: np.ndarray, bit_width: int) -> WeightTensor:
    """Per-tensor symmetric uniform quantization.

    scale = max|values| / (2^(b-1) - 1); codes round half away from zero and
    clamp to the symmetric range (the most negative code is never used).
    An all-zero tensor quantizes to scale 1 with all-zero codes.
    """
    if bit_width not in SUPPORTED_BIT_WIDTHS:
        raise ValueError(f"bit_width must be one of {SUPPORTED_BIT_WIDTHS}")
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("cannot quantize an empty tensor")
    if not np.all(np.isfinite(values)):
        raise ValueError("cannot quantize non-finite values")
    limit = 2 ** (bit_width - 1) - 1
    peak = float(np.max(np.abs(values)))
    if peak == 0.0:
        return WeightTensor(np.zeros(values.shape, dtype=np.int64), 1.0, bit_width)
    scale = peak / limit
    codes = _round_half_away(values / scale)
    codes = np.clip(codes, -limit, limit).astype(np.int64)
    return WeightTensor(codes, scale, bit_width)


# ---------------------------------------------------------------------------
# network and dataset containers


@dataclass
class Layer:
    spec: LayerSpec
    weights: WeightTensor


@dataclass
class QuantizedNetwork:
    name: str
    bit_width: int
    input_shape: tuple[int, ...]
    layers: list[Layer]
    seed: int | None = None

    def validate(self) -> None:
        specs = [layer.spec for layer in self.layers]
        propagated, _ = propagate_shapes(specs, self.input_shape)
        for i, (layer, spec) in enumerate(zip(self.layers, propagated)):
            layer.spec = spec
            try:
                layer.weights.validate()
            except ValueError as err:
                raise NetworkFormatError(f"layers[{i}]: {err}") from err
            if layer.weights.bit_width != self.bit_width:
                raise NetworkFormatError(
                    f"layers[{i}]: bit_width {layer.weights.bit_width} != network {self.bit_width}")
            if layer.weights.shape != spec.weight_shape():
                raise NetworkFormatError(
                    f"layers[{i}]: weight shape {layer.weights.shape} != expected {spec.weight_shape()}")

    def total_weights(self) -> int:
        return sum(layer.weights.codes.size for layer in self.layers)


def sparsity(net: QuantizedNetwork) -> tuple[int, float]:
    """Count of zero weight codes across all layers and the zero fraction."""
    total = net.total_weights()
    zeros = sum(int(np.count_nonzero(layer.weights.codes == 0)) for layer in net.layers)
    return zeros, zeros / total


@dataclass
class Dataset:
    features: np.ndarray  # (n, *feature_shape)
    labels: np.ndarray    # (n,) integer class ids
    class_count: int

    @property
    def feature_shape(self) -> tuple[int, ...]:
        return self.features.shape[1:]

    def __len__(self) -> int:
        return self.features.shape[0]

    def validate(self) -> None:
        if self.features.shape[0] != self.labels.shape[0]:
            raise ValueError("features and labels disagree on sample count")
        if self.class_count < 2:
            raise ValueError("class_count must be >= 2")
        if self.labels.min(initial=0) < 0 or self.labels.max(initial=0) >= self.class_count:
            raise ValueError("labels must lie in [0, class_count)")


# ---------------------------------------------------------------------------
# ideal forward oracle


def _conv_forward(spec: LayerSpec, w: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Direct sliding-window convolution; the reference for everything else."""
    p, s, d = spec.padding, spec.stride, spec.dilation
    if spec.kind == "conv1d":
        xp = np.pad(x, ((0, 0), (0, 0), (p, p)))
        span = d * (spec.kernel_h - 1) + 1
        win = sliding_window_view(xp, span, axis=2)[:, :, ::s, ::d]
        return np.einsum("ncxh,kch->nkx", win, w)
    xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
    span_h = d * (spec.kernel_h - 1) + 1
    span_w = d * (spec.kernel_w - 1) + 1
    win = sliding_window_view(xp, (span_h, span_w), axis=(2, 3))[:, :, ::s, ::s, ::d, ::d]
    return np.einsum("ncxyhw,kchw->nkxy", win, w)


def ideal_forward(net: QuantizedNetwork, batch: np.ndarray,
                  collect_preacts: bool = False):
    """Noise-free forward pass on dequantized weights.

    Returns logits (n, classes); with collect_preacts=True also returns the
    list of pre-activation outputs per layer (used for ADC calibration).
    """
    x = np.asarray(batch, dtype=float)
    if x.shape[1:] != tuple(net.input_shape):
        raise ValueError(
            f"batch feature shape {x.shape[1:]} != network input {net.input_shape}")
    preacts = []
    last = len(net.layers) - 1
    for i, layer in enumerate(net.layers):
        w = layer.weights.dequantized()
        if layer.spec.kind == "linear":
            z = x.reshape(x.shape[0], -1) @ w.T
        else:
            z = _conv_forward(layer.spec, w, x)
        if collect_preacts:
            preacts.append(z)
        x = np.maximum(z, 0.0) if i < last else z
    return (x, preacts) if collect_preacts else x


# ---------------------------------------------------------------------------
# synthetic data and fixture training


_MEANS_SEED = 0x5EED  # class means depend only on (classes, shape)


def class_means(classes: int, shape: tuple[int, ...],
                separation: float = 4.0) -> np.ndarray:
    """Fixed per-class mean vectors, scaled to a common norm."""
    dim = int(np.prod(shape))
    rng = np.random.default_rng(_MEANS_SEED + classes * 1000 + dim)
    means = rng.normal(size=(classes, dim))
    return means * (separation / np.linalg.norm(means, axis=1, keepdims=True))


def generate_synthetic_dataset(seed: int, n: int, classes: int,
                               shape: tuple[int, ...], separation: float = 4.0,
                               noise: float = 1.0) -> Dataset:
    """Class-conditional Gaussian blobs around fixed per-class means.

    The means depend only on (classes, shape), so differently seeded draws
    are held-out samples of the same task. Labels are balanced (the first
    n % classes classes get one extra sample) and shuffled deterministically.
    """
    if classes < 2:
        raise ValueError("need at least 2 classes")
    if n < classes:
        raise ValueError("need at least one sample per class")
    rng = np.random.default_rng(seed)
    dim = int(np.prod(shape))
    means = class_means(classes, shape, separation)
    counts = np.full(classes, n // classes)
    counts[: n % classes] += 1
    labels = np.repeat(np.arange(classes), counts)
    labels = labels[rng.permutation(n)]
    feats = means[labels] + noise * rng.normal(size=(n, dim))
    return Dataset(feats.reshape(n, *shape), labels.astype(np.int64), classes)


def _patch_indices(spec: LayerSpec) -> tuple[np.ndarray, tuple[int, ...], int]:
    """Gather indices into the flattened padded input, one row per output
    position, one column per kernel tap; returns (idx, out_spatial, pad_flat)."""
    p, s, d = spec.padding, spec.stride, spec.dilation
    c = spec.in_channels
    if spec.kind == "conv1d":
        px = spec.in_x + 2 * p
        ox = out_extent(spec.in_x, spec.kernel_h, s, p, d)
        pos = np.arange(ox) * s                      # (P,)
        taps = np.arange(spec.kernel_h) * d          # (H,)
        chan = np.arange(c) * px                     # (C,)
        idx = chan[None, :, None] + pos[:, None, None] + taps[None, None, :]
        return idx.reshape(ox, c * spec.kernel_h), (ox,), c * px
    px, py = spec.in_x + 2 * p, spec.in_y + 2 * p
    ox = out_extent(spec.in_x, spec.kernel_h, s, p, d)
    oy = out_extent(spec.in_y, spec.kernel_w, s, p, d)
    pos_x = (np.arange(ox) * s)[:, None] + (np.arange(spec.kernel_h) * d)[None, :]  # (ox,H)
    pos_y = (np.arange(oy) * s)[:, None] + (np.arange(spec.kernel_w) * d)[None, :]  # (oy,W)
    # flat padded index for (c, ax, ay) = (c*px + ax)*py + ay
    chan = (np.arange(c) * px * py)
    idx = (chan[None, None, :, None, None]
           + (pos_x[:, None, None, :, None] * py)
           + pos_y[None, :, None, None, :])          # (ox, oy, C, H, W)
    f = c * spec.kernel_h * spec.kernel_w
    return idx.reshape(ox * oy, f), (ox, oy), c * px * py


def _pad_flat(spec: LayerSpec, x: np.ndarray) -> np.ndarray:
    p = spec.padding
    if spec.kind == "conv1d":
        xp = np.pad(x, ((0, 0), (0, 0), (p, p)))
    else:
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
    return xp.reshape(x.shape[0], -1)


def _forward_cache(specs, weights, x):
    """Forward pass used by the trainer; caches what backprop needs."""
    cache = []
    last = len(specs) - 1
    for i, (spec, w) in enumerate(zip(specs, weights)):
        if spec.kind == "linear":
            xf = x.reshape(x.shape[0], -1)
            z = xf @ w.T
            cache.append(("linear", xf, x.shape, z))
        else:
            idx, out_spatial, _ = _patch_indices(spec)
            patches = _pad_flat(spec, x)[:, idx]          # (n, P, F)
            wf = w.reshape(w.shape[0], -1)                # (K, F)
            zp = patches @ wf.T                           # (n, P, K)
            z = np.moveaxis(zp, -1, 1).reshape(x.shape[0], spec.kernels, *out_spatial)
            cache.append(("conv", patches, x.shape, z))
        x = np.maximum(z, 0.0) if i < last else z
    return x, cache


def _backward(specs, weights, cache, dlogits):
    grads = [None] * len(specs)
    dz = dlogits
    for i in range(len(specs) - 1, -1, -1):
        kind, saved, in_shape, z = cache[i]
        if i < len(specs) - 1:
            dz = dz * (z > 0)
        if kind == "linear":
            grads[i] = dz.T @ saved
            dx = dz @ weights[i]
            dz = dx.reshape(in_shape)
        else:
            spec = specs[i]
            n = in_shape[0]
            dzp = np.moveaxis(dz.reshape(n, spec.kernels, -1), 1, -1)  # (n, P, K)
            wf = weights[i].reshape(spec.kernels, -1)
            grads[i] = np.einsum("npk,npf->kf", dzp, saved).reshape(weights[i].shape)
            dpatch = dzp @ wf                                          # (n, P, F)
            idx, _, pad_flat = _patch_indices(spec)
            dxp = np.zeros((n, pad_flat))
            np.add.at(dxp, (slice(None), idx), dpatch)
            p = spec.padding
            if spec.kind == "conv1d":
                dxp = dxp.reshape(n, spec.in_channels, spec.in_x + 2 * p)
                dz = dxp[:, :, p: p + spec.in_x] if p else dxp
            else:
                dxp = dxp.reshape(n, spec.in_channels, spec.in_x + 2 * p, spec.in_y + 2 * p)
                dz = dxp[:, :, p: p + spec.in_x, p: p + spec.in_y] if p else dxp
    return grads


def _softmax_grad(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    shifted = logits - logits.max(axis=1, keepdims=True)
    expz = np.exp(shifted)
    norm = expz.sum(axis=1, keepdims=True)
    probs = expz / norm
    n = logits.shape[0]
    loss = float(np.mean(np.log(norm[:, 0]) - shifted[np.arange(n), labels]))
    dlogits = probs.copy()
    dlogits[np.arange(n), labels] -= 1.0
    return loss, dlogits / n


def train_fixture(seed: int, arch: list[LayerSpec], data: Dataset, l1: float,
                  bit_width: int = 8, epochs: int = 60, lr: float = 0.05,
                  batch_size: int = 32, name: str = "fixture") -> QuantizedNetwork:
    """Mini-batch gradient descent with an L1 penalty, then quantize.

    The L1 term is applied as a soft-threshold step after each gradient
    update, so large penalties produce exact zeros. Single-threaded and
    bit-reproducible for a fixed seed.
    """
    data.validate()
    specs, out_shape = propagate_shapes(arch, data.feature_shape)
    if out_shape != (data.class_count,):
        raise ValueError(
            f"architecture output {out_shape} does not match {data.class_count} classes")
    rng = np.random.default_rng(seed)
    weights = []
    for spec in specs:
        shape = spec.weight_shape()
        fan_in = int(np.prod(shape[1:]))
        weights.append(rng.normal(0.0, math.sqrt(2.0 / fan_in), shape))
    x_all = data.features.astype(float)
    y_all = data.labels
    for _ in range(epochs):
        order = rng.permutation(len(data))
        for start in range(0, len(data), batch_size):
            idx = order[start: start + batch_size]
            logits, cache = _forward_cache(specs, weights, x_all[idx])
            _, dlogits = _softmax_grad(logits, y_all[idx])
            grads = _backward(specs, weights, cache, dlogits)
            for w, g in zip(weights, grads):
                w -= lr * g
                np.copyto(w, np.sign(w) * np.maximum(np.abs(w) - lr * l1, 0.0))
    layers = [Layer(spec, quantize_weights(w, bit_width)) for spec, w in zip(specs, weights)]
    net = QuantizedNetwork(name, bit_width, tuple(data.feature_shape), layers, seed=seed)
    net.validate()
    return net


def accuracy(net: QuantizedNetwork, data: Dataset) -> float:
    """Ideal (noise-free) argmax accuracy of the quantized network."""
    logits = ideal_forward(net, data.features)
    return float(np.mean(np.argmax(logits, axis=1) == data.labels))


# ---------------------------------------------------------------------------
# file formats


_CONV_PARAMS = ("in_channels", "kernels", "kernel_h", "kernel_w", "stride",
                "padding", "dilation")


def save_network(net: QuantizedNetwork, path) -> None:
    net.validate()
    layers = []
    for layer in net.layers:
        entry = {"kind": layer.spec.kind}
        if layer.spec.kind == "linear":
            entry["in_features"] = layer.spec.in_features
            entry["out_features"] = layer.spec.out_features
        else:
            for key in _CONV_PARAMS:
                entry[key] = getattr(layer.spec, key)
        entry["scale"] = layer.weights.scale
        entry["codes"] = [int(c) for c in layer.weights.codes.ravel()]
        layers.append(entry)
    doc = {
        "format_version": FORMAT_VERSION,
        "name": net.name,
        "bit_width": net.bit_width,
        "seed": net.seed,
        "input_shape": list(net.input_shape),
        "layers": layers,
    }
    Path(path).write_text(json.dumps(doc, indent=1))


def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise NetworkFormatError(f"{where}: missing field '{key}'")
    return doc[key]


def load_network(path) -> QuantizedNetwork:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as err:
        raise NetworkFormatError(f"not valid JSON: {err}") from err
    if not isinstance(doc, dict):
        raise NetworkFormatError("top level must be an object")
    version = _require(doc, "format_version", "top level")
    if version != FORMAT_VERSION:
        raise NetworkFormatError(f"unsupported format_version {version}")
    name = _require(doc, "name", "top level")
    bit_width = _require(doc, "bit_width", "top level")
    if bit_width not in SUPPORTED_BIT_WIDTHS:
        raise NetworkFormatError(f"bit_width: must be one of {SUPPORTED_BIT_WIDTHS}")
    input_shape = tuple(_require(doc, "input_shape", "top level"))
    raw_layers = _require(doc, "layers", "top level")
    layers = []
    for i, entry in enumerate(raw_layers):
        where = f"layers[{i}]"
        kind = _require(entry, "kind", where)
        if kind not in LAYER_KINDS:
            raise NetworkFormatError(f"{where}.kind: unknown kind {kind!r}")
        if kind == "linear":
            spec = LayerSpec("linear",
                             in_features=int(_require(entry, "in_features", where)),
                             out_features=int(_require(entry, "out_features", where)))
        else:
            params = {key: int(_require(entry, key, where)) for key in _CONV_PARAMS}
            spec = LayerSpec(kind, **params)
        scale = _require(entry, "scale", where)
        if not isinstance(scale, (int, float)) or scale <= 0:
            raise NetworkFormatError(f"{where}.scale: must be a positive number")
        codes = np.asarray(_require(entry, "codes", where), dtype=np.int64)
        shape = spec.weight_shape()
        expected = int(np.prod(shape)) if all(d > 0 for d in shape) else 0
        if kind == "linear" and (spec.in_features < 1 or spec.out_features < 1):
            raise NetworkFormatError(f"{where}: linear features must be >= 1")
        if codes.size != expected:
            raise NetworkFormatError(
                f"{where}.codes: {codes.size} values, expected {expected}")
        limit = 2 ** (bit_width - 1) - 1
        if codes.size and np.abs(codes).max() > limit:
            raise NetworkFormatError(
                f"{where}.codes: values exceed {bit_width}-bit symmetric range")
        layers.append(Layer(spec, WeightTensor(codes.reshape(shape), float(scale), bit_width)))
    net = QuantizedNetwork(str(name), int(bit_width), input_shape, layers,
                           seed=doc.get("seed"))
    try:
        net.validate()
    except ValueError as err:
        raise NetworkFormatError(str(err)) from err
    return net


def save_dataset(data: Dataset, path) -> None:
    data.validate()
    shape_txt = "x".join(str(d) for d in data.feature_shape)
    dim = int(np.prod(data.feature_shape))
    lines = [
        f"# format_version: {FORMAT_VERSION}, feature_shape: {shape_txt}, "
        f"class_count: {data.class_count}",
        "label," + ",".join(f"f{j}" for j in range(dim)),
    ]
    flat = data.features.reshape(len(data), dim)
    for label, row in zip(data.labels, flat):
        lines.append(str(int(label)) + "," + ",".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_dataset(path) -> Dataset:
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("#"):
        raise NetworkFormatError("dataset: missing '# format_version ...' header line")
    header = {}
    for part in text[0].lstrip("# ").split(","):
        key, _, value = part.partition(":")
        header[key.strip()] = value.strip()
    if header.get("format_version") != str(FORMAT_VERSION):
        raise NetworkFormatError("dataset: unsupported or missing format_version")
    try:
        shape = tuple(int(d) for d in header["feature_shape"].split("x"))
        class_count = int(header["class_count"])
    except (KeyError, ValueError) as err:
        raise NetworkFormatError(f"dataset header: {err}") from err
    if len(text) < 2:
        raise NetworkFormatError("dataset: missing column header row")
    rows = [line for line in text[2:] if line.strip()]
    dim = int(np.prod(shape))
    labels = np.empty(len(rows), dtype=np.int64)
    feats = np.empty((len(rows), dim))
    for i, line in enumerate(rows):
        parts = line.split(",")
        if len(parts) != dim + 1:
            raise NetworkFormatError(f"dataset row {i}: {len(parts) - 1} features, expected {dim}")
        labels[i] = int(parts[0])
        feats[i] = [float(v) for v in parts[1:]]
    data = Dataset(feats.reshape(len(rows), *shape), labels, class_count)
    try:
        data.validate()
    except ValueError as err:
        raise NetworkFormatError(f"dataset: {err}") from err
    return data
