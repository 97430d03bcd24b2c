"""Analog crossbar execution: device sampling, differential programming,
voltage encoding, tile current summation, and calibrated readout.

All randomness flows through counter-based Philox streams keyed by
(seed, configuration hash, layer, tile), with devices drawn in a fixed
canonical order inside each tile, so results never depend on evaluation
order or worker count. Resistance samples are truncated at three standard
deviations and redrawn, which keeps them positive and preserves
r_on < r_off for the default parameters.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from . import mapping, qnet
from .mapping import MappingPlan, pair_capacity
from .qnet import QuantizedNetwork, WeightTensor, ideal_forward

# DAC/ADC resolutions at or beyond this are treated as ideal (no conversion
# quantization): the modeled analog chain has no meaningful precision left.
IDEAL_IO_BITS = 16

FREE, STUCK_ON, STUCK_OFF = 0, 1, 2


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


@dataclass(frozen=True)
class DeviceModel:
    """Per-device resistance distributions and failure rates.

    n_states is the number of programmable conductance levels per device;
    None means continuous (the infinite-state surrogate).
    """

    r_on_mean: float = 10_000.0
    r_on_std: float = 1_000.0
    r_off_mean: float = 100_000.0
    r_off_std: float = 10_000.0
    n_states: int | None = None
    p_stuck_on: float = 0.005
    p_stuck_off: float = 0.005

    def __post_init__(self):
        if not 0 < self.r_on_mean < self.r_off_mean:
            raise ValueError("need 0 < r_on_mean < r_off_mean")
        if self.r_on_std < 0 or self.r_off_std < 0:
            raise ValueError("resistance std must be >= 0")
        if self.n_states is not None and self.n_states < 2:
            raise ValueError("n_states must be >= 2 (or None for continuous)")
        if min(self.p_stuck_on, self.p_stuck_off) < 0 or \
                self.p_stuck_on + self.p_stuck_off > 1:
            raise ValueError("stuck probabilities must be >= 0 and sum to <= 1")

    @property
    def g_span(self) -> float:
        """Nominal conductance swing used for readout calibration."""
        return 1.0 / self.r_on_mean - 1.0 / self.r_off_mean


@dataclass(frozen=True)
class IOConfig:
    """DAC/ADC resolution, encoding voltage ceiling, and scaling-group size."""

    io_bit_width: int | None = None
    v_max: float = 0.3
    batch_size: int = 256

    def __post_init__(self):
        if self.io_bit_width is not None and self.io_bit_width < 1:
            raise ValueError("io_bit_width must be >= 1")
        if self.v_max <= 0:
            raise ValueError("v_max must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    @property
    def quantizes(self) -> bool:
        return self.io_bit_width is not None and self.io_bit_width < IDEAL_IO_BITS


@dataclass(frozen=True)
class HardwareConfig:
    tile_size: int
    io: IOConfig = field(default_factory=IOConfig)
    device: DeviceModel = field(default_factory=DeviceModel)


def config_hash(net: QuantizedNetwork, scheme: str, hw: HardwareConfig) -> str:
    """Stable digest of the evaluation point's structural identity.

    Only fields that determine which device population is laid out enter
    the key (network, scheme, tile size). Device-model parameters transform
    the same underlying draws (affine for resistances, a threshold for
    stuck states) and I/O settings touch no randomness, so fixed-seed
    sweeps along those dimensions compare identical sampled non-idealities.
    """
    parts = (net.name, net.bit_width, scheme, hw.tile_size)
    return hashlib.blake2b("|".join(str(p) for p in parts).encode(),
                           digest_size=8).hexdigest()


def _stream(*parts) -> np.random.Generator:
    digest = hashlib.blake2b("|".join(str(p) for p in parts).encode(),
                             digest_size=16).digest()
    return np.random.Generator(np.random.Philox(key=int.from_bytes(digest, "little")))


def _truncated_normal(gen: np.random.Generator, mean: float, std: float,
                      shape) -> np.ndarray:
    """Normal samples truncated at 3 sigma, out-of-range values redrawn."""
    vals = gen.normal(mean, std, shape)
    if std == 0:
        return vals
    for _ in range(100):
        bad = np.abs(vals - mean) > 3.0 * std
        count = int(bad.sum())
        if count == 0:
            return vals
        vals[bad] = gen.normal(mean, std, count)
    return np.clip(vals, mean - 3.0 * std, mean + 3.0 * std)


@dataclass
class TileArray:
    """Sampled device population of one physical tile."""

    tile_row: int
    tile_col: int
    g: np.ndarray
    r_on: np.ndarray
    r_off: np.ndarray
    stuck: np.ndarray
    key: tuple

    def validate(self) -> None:
        g_on = 1.0 / self.r_on
        g_off = 1.0 / self.r_off
        slack = 1e-12
        if np.any(self.g > g_on * (1 + slack)) or np.any(self.g < g_off * (1 - slack)):
            raise ValueError("conductance outside the device's own [1/r_off, 1/r_on]")


def _stuck_from_uniform(u: np.ndarray, model: DeviceModel) -> np.ndarray:
    stuck = np.zeros(u.shape, dtype=np.int8)
    stuck[u < model.p_stuck_on] = STUCK_ON
    stuck[(u >= model.p_stuck_on) & (u < model.p_stuck_on + model.p_stuck_off)] = STUCK_OFF
    return stuck


def _apply_stuck(g: np.ndarray, r_on: np.ndarray, r_off: np.ndarray,
                 stuck: np.ndarray) -> None:
    g[stuck == STUCK_ON] = 1.0 / r_on[stuck == STUCK_ON]
    g[stuck == STUCK_OFF] = 1.0 / r_off[stuck == STUCK_OFF]


def sample_devices(seed: int, plan: MappingPlan, model: DeviceModel,
                   cfg_hash: str = "", layer_index: int = 0,
                   key_mode: str = "physical") -> dict:
    """Draw per-device (r_on, r_off) and stuck states for every tile a plan
    occupies. Returns {(tile_row, tile_col): TileArray}.

    key_mode="physical" (default) keys each tile's stream by position in the
    tile grid. key_mode="logical" draws one sample per logical matrix cell,
    shared by both polarities of its pair and independent of scheme and tile
    size — the instrument behind permutation-invariance checks.
    """
    t = plan.tile_size
    tiles: dict[tuple[int, int], TileArray] = {}
    if key_mode == "physical":
        for tp in plan.tiles:
            key = (seed, cfg_hash, layer_index, tp.tile_row, tp.tile_col)
            gen = _stream(*key)
            r_on = _truncated_normal(gen, model.r_on_mean, model.r_on_std, (t, t))
            r_off = _truncated_normal(gen, model.r_off_mean, model.r_off_std, (t, t))
            stuck = _stuck_from_uniform(gen.random((t, t)), model)
            g = 1.0 / r_off.copy()
            _apply_stuck(g, r_on, r_off, stuck)
            tiles[(tp.tile_row, tp.tile_col)] = TileArray(
                tp.tile_row, tp.tile_col, g, r_on, r_off, stuck, key)
        return tiles
    if key_mode != "logical":
        raise ValueError("key_mode must be 'physical' or 'logical'")
    key = (seed, "logical", layer_index, plan.rows, plan.cols)
    gen = _stream(*key)
    r_on_l = _truncated_normal(gen, model.r_on_mean, model.r_on_std, (plan.rows, plan.cols))
    r_off_l = _truncated_normal(gen, model.r_off_mean, model.r_off_std, (plan.rows, plan.cols))
    stuck_l = _stuck_from_uniform(gen.random((plan.rows, plan.cols)), model)
    for tp in plan.tiles:
        r_on = np.full((t, t), model.r_on_mean)
        r_off = np.full((t, t), model.r_off_mean)
        stuck = np.zeros((t, t), dtype=np.int8)
        for offset in (0, 1):
            cols = 2 * tp.pair_slots + offset
            r_on[tp.rows, cols] = r_on_l[tp.logical_rows, tp.logical_cols]
            r_off[tp.rows, cols] = r_off_l[tp.logical_rows, tp.logical_cols]
            stuck[tp.rows, cols] = stuck_l[tp.logical_rows, tp.logical_cols]
        g = 1.0 / r_off.copy()
        _apply_stuck(g, r_on, r_off, stuck)
        tiles[(tp.tile_row, tp.tile_col)] = TileArray(
            tp.tile_row, tp.tile_col, g, r_on, r_off, stuck,
            key + (tp.tile_row, tp.tile_col))
    return tiles


def program(tiles: dict, plan: MappingPlan, weights: WeightTensor,
            model: DeviceModel) -> dict:
    """Write the plan's weights into the sampled tiles.

    A weight w with layer peak w_max targets, on its own device,
    g = g_off + (|w| / w_max)(g_on - g_off) on the polarity matching its
    sign and g_off on the other; targets snap to the device's n_states
    uniform grid. Stuck devices ignore programming.
    """
    if plan.geometry is None:
        if plan.rows != weights.codes.shape[1] or plan.cols != weights.codes.shape[0]:
            raise ValueError("weight tensor does not match plan dimensions")
    else:
        geom = plan.geometry
        if weights.codes.size != geom.kernels * geom.footprint:
            raise ValueError("weight tensor does not match plan geometry")
    w_max = int(np.abs(weights.codes).max(initial=0))
    for tp in plan.tiles:
        ta = tiles.get((tp.tile_row, tp.tile_col))
        if ta is None:
            raise ValueError(f"no sampled tile for {(tp.tile_row, tp.tile_col)}")
        mag = np.abs(tp.codes) / w_max if w_max else np.zeros(tp.codes.shape)
        for offset, active in ((0, tp.codes > 0), (1, tp.codes < 0)):
            cols = 2 * tp.pair_slots + offset
            g_on = 1.0 / ta.r_on[tp.rows, cols]
            g_off = 1.0 / ta.r_off[tp.rows, cols]
            frac = np.where(active, mag, 0.0)
            if model.n_states is not None:
                levels = model.n_states - 1
                frac = np.clip(_round_half_away(frac * levels), 0, levels) / levels
            target = g_off + frac * (g_on - g_off)
            free = ta.stuck[tp.rows, cols] == FREE
            ta.g[tp.rows[free], cols[free]] = target[free]
    return tiles


def encode_inputs(batch: np.ndarray, io: IOConfig) -> tuple[np.ndarray, float]:
    """Scale a batch of activations into voltages: v = x / max|x| * v_max,
    then quantize to the signed mid-tread DAC grid (step v_max / 2^(b-1)).

    Returns (voltages, voltage_scale); an all-zero batch maps to zero volts
    with scale 0.
    """
    x = np.asarray(batch, dtype=float)
    if x.size == 0:
        raise ValueError("empty batch")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite inputs")
    peak = float(np.max(np.abs(x)))
    if peak == 0.0:
        return np.zeros_like(x), 0.0
    scale = io.v_max / peak
    v = x * scale
    if io.quantizes:
        half = 2 ** (io.io_bit_width - 1)
        step = io.v_max / half
        v = np.clip(_round_half_away(v / step), -half, half) * step
    return v, scale


def tile_vmm(v: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Bit-line currents of one tile read: I[n] = sum_m V[m] * G[m, n]."""
    v = np.asarray(v, dtype=float)
    g = np.asarray(g, dtype=float)
    if v.shape[-1] != g.shape[0]:
        raise ValueError(f"voltage length {v.shape[-1]} != tile rows {g.shape[0]}")
    return v @ g


@dataclass(frozen=True)
class ReadoutCalibration:
    voltage_scale: float          # volts per input unit (from encode_inputs)
    weight_scale: float           # siemens per weight unit
    out_lo: float | None = None   # ADC range, per layer
    out_hi: float | None = None


def readout(i_pos: np.ndarray, i_neg: np.ndarray, cal: ReadoutCalibration,
            io: IOConfig) -> np.ndarray:
    """Differential currents back to the weight-times-input domain, then
    ADC-quantized to 2^b uniform levels over the calibrated output range."""
    if cal.voltage_scale == 0 or cal.weight_scale == 0:
        raise ValueError("zero calibration scale")
    y = (np.asarray(i_pos) - np.asarray(i_neg)) / (cal.voltage_scale * cal.weight_scale)
    if io.quantizes and cal.out_lo is not None and cal.out_hi is not None:
        lo, hi = cal.out_lo, cal.out_hi
        if hi <= lo:
            return np.full_like(y, lo)
        levels = 2 ** io.io_bit_width - 1
        step = (hi - lo) / levels
        y = lo + np.clip(_round_half_away((y - lo) / step), 0, levels) * step
    return y


def _plan_currents(plan: MappingPlan, tiles: dict,
                   v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Accumulate differential bit-line currents over all tiles of a plan.

    v: (batch, logical_rows) voltages. Partial sums of tiles sharing logical
    columns are accumulated before readout. Routed plans gather per-entry
    voltages (reconfigured interconnects); full layouts read whole blocks so
    stuck devices on zero cells still contribute.
    """
    nb = v.shape[0]
    cap = pair_capacity(plan.tile_size)
    i_pos = np.zeros((nb, plan.cols))
    i_neg = np.zeros((nb, plan.cols))
    routed = plan.row_permutations is not None
    for tp in plan.tiles:
        ta = tiles[(tp.tile_row, tp.tile_col)]
        if routed:
            vg = v[:, tp.logical_rows]
            cols = tp.tile_col * cap + tp.pair_slots
            np.add.at(i_pos, (slice(None), cols), vg * ta.g[tp.rows, 2 * tp.pair_slots])
            np.add.at(i_neg, (slice(None), cols), vg * ta.g[tp.rows, 2 * tp.pair_slots + 1])
        else:
            r0 = tp.tile_row * plan.tile_size
            c0 = tp.tile_col * cap
            nrows = int(tp.rows.max()) + 1
            ncols = int(tp.pair_slots.max()) + 1
            block = tile_vmm(v[:, r0: r0 + nrows], ta.g[:nrows, : 2 * ncols])
            i_pos[:, c0: c0 + ncols] += block[:, 0::2]
            i_neg[:, c0: c0 + ncols] += block[:, 1::2]
    return i_pos, i_neg


def simulate_forward(net: QuantizedNetwork, plans: list[MappingPlan],
                     tiles: list[dict], batch: np.ndarray, io: IOConfig,
                     model: DeviceModel,
                     adc_ranges: list[tuple[float, float]] | None = None) -> np.ndarray:
    """End-to-end analog inference: per layer encode -> tile reads (partial
    sums across row-groups) -> differential readout -> activation. Dense
    kernel layouts iterate the sliding-read schedule over output positions.
    """
    x = np.asarray(batch, dtype=float)
    if x.shape[1:] != tuple(net.input_shape):
        raise ValueError(
            f"batch feature shape {x.shape[1:]} != network input {net.input_shape}")
    n = x.shape[0]
    last = len(net.layers) - 1
    for li, (layer, plan) in enumerate(zip(net.layers, plans)):
        spec = layer.spec
        geom = plan.geometry
        if spec.kind == "linear":
            flat = x.reshape(n, -1)
            out_shape = (spec.out_features,)
        else:
            flat = qnet._pad_flat(spec, x)
            out_shape = ((spec.kernels, geom.out_x) if spec.kind == "conv1d"
                         else (spec.kernels, geom.out_x, geom.out_y))
        w_max = float(np.abs(layer.weights.dequantized()).max(initial=0.0))
        v, v_scale = encode_inputs(flat, io)
        if v_scale == 0.0 or w_max == 0.0:
            z = np.zeros((n, *out_shape))
        else:
            dense_conv = geom is not None and plan.scheme != "sparse_staggered"
            if dense_conv:
                vread = v[:, geom.read_indices()].reshape(n * geom.out_positions, -1)
            else:
                vread = v
            i_pos, i_neg = _plan_currents(plan, tiles[li], vread)
            lo, hi = adc_ranges[li] if adc_ranges is not None else (None, None)
            cal = ReadoutCalibration(v_scale, model.g_span / w_max, lo, hi)
            y = readout(i_pos, i_neg, cal, io)
            if geom is None:
                z = y
            elif dense_conv:
                # (n, P, K) -> (n, K, P)
                z = np.moveaxis(y.reshape(n, geom.out_positions, geom.kernels), 1, 2)
            else:
                # staggered columns are ordered k * P + p
                z = y.reshape(n, geom.kernels, geom.out_positions)
            z = z.reshape(n, *out_shape)
        x = np.maximum(z, 0.0) if li < last else z
    return x


def calibrate_adc_ranges(net: QuantizedNetwork, data: qnet.Dataset) -> list[tuple[float, float]]:
    """Per-layer pre-activation output ranges from a noiseless pass over the
    dataset; the fixed ADC window every non-ideal run then uses."""
    _, preacts = ideal_forward(net, data.features, collect_preacts=True)
    return [(float(z.min()), float(z.max())) for z in preacts]


def evaluate_accuracy(net: QuantizedNetwork, scheme: str, hw: HardwareConfig,
                      data: qnet.Dataset, seed: int,
                      key_mode: str = "physical") -> float:
    """Test-set accuracy of the simulated crossbar implementation.

    The dataset is processed in scaling groups of io.batch_size samples;
    each group shares one dynamic input-voltage scale per layer.
    """
    if len(data) == 0:
        raise ValueError("empty dataset")
    plans = mapping.network_plans(net, scheme, hw.tile_size)
    chash = config_hash(net, scheme, hw)
    tiles = []
    for li, plan in enumerate(plans):
        sampled = sample_devices(seed, plan, hw.device, chash, li, key_mode)
        tiles.append(program(sampled, plan, net.layers[li].weights, hw.device))
    adc_ranges = calibrate_adc_ranges(net, data) if hw.io.quantizes else None
    correct = 0
    for start in range(0, len(data), hw.io.batch_size):
        chunk = slice(start, start + hw.io.batch_size)
        logits = simulate_forward(net, plans, tiles, data.features[chunk],
                                  hw.io, hw.device, adc_ranges)
        correct += int(np.sum(np.argmax(logits, axis=1) == data.labels[chunk]))
    return correct / len(data)
