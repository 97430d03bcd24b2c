"""Grid-search design-space exploration with weighted device/read/accuracy
scoring, min-max normalization, contour grids, and deterministic ranking.

Every configuration is evaluated exactly once; the result list is ordered
lexicographically over the dimension value lists regardless of how many
workers ran the evaluations, so reruns are bit-identical.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from . import mapping, xbar
from .qnet import Dataset, QuantizedNetwork

# canonical dimension order; also the lexicographic result order
DIMENSIONS = ("network", "scheme", "tile_size", "io_bit_width", "v_max",
              "batch_size", "n_states", "p_stuck_on", "p_stuck_off",
              "std_multiplier")


class EvaluationError(RuntimeError):
    """Evaluation of one configuration failed; carries the configuration."""

    def __init__(self, config: dict, cause: Exception):
        super().__init__(f"configuration {config} failed: {cause}")
        self.config = config
        self.cause = cause


@dataclass
class SearchSpace:
    """Value lists per search dimension; fixed dimensions hold one value."""

    network: list = field(default_factory=lambda: ["net"])
    scheme: list = field(default_factory=lambda: ["sparse_staggered"])
    tile_size: list = field(default_factory=lambda: [64])
    io_bit_width: list = field(default_factory=lambda: [None])
    v_max: list = field(default_factory=lambda: [0.3])
    batch_size: list = field(default_factory=lambda: [256])
    n_states: list = field(default_factory=lambda: [None])
    p_stuck_on: list = field(default_factory=lambda: [0.005])
    p_stuck_off: list = field(default_factory=lambda: [0.005])
    std_multiplier: list = field(default_factory=lambda: [1.0])

    def validate(self) -> None:
        for f in fields(self):
            values = getattr(self, f.name)
            if not isinstance(values, list) or not values:
                raise ValueError(f"dimension '{f.name}' must be a non-empty list")
        for scheme in self.scheme:
            if scheme not in mapping.SCHEMES:
                raise ValueError(f"unknown scheme {scheme!r}")

    def size(self) -> int:
        n = 1
        for name in DIMENSIONS:
            n *= len(getattr(self, name))
        return n

    def points(self):
        """All configurations in lexicographic order over the value lists."""
        self.validate()
        lists = [getattr(self, name) for name in DIMENSIONS]
        idx = [0] * len(lists)
        while True:
            yield {name: lst[i] for name, lst, i in zip(DIMENSIONS, lists, idx)}
            for d in range(len(lists) - 1, -1, -1):
                idx[d] += 1
                if idx[d] < len(lists[d]):
                    break
                idx[d] = 0
            else:
                return


@dataclass
class ConfigResult:
    """One evaluated design point."""

    config: dict
    order_index: int
    tsa: float
    rd: int
    rwo: int
    tiles: int
    raw_score: float
    seed: int
    normalized_score: float | None = None


def weighted_score(tsa: float, rd: float, rwo: float,
                   exponents: tuple[float, float, float] = (1.0, 1.0, 1.0)) -> float:
    """Raw weighted score TSA / (RD * RWO); optional per-term exponents
    generalize to TSA^a / (RD^b * RWO^c) for standardized weightings."""
    if rd <= 0 or rwo <= 0:
        raise ValueError("RD and RWO must be positive to score")
    a, b, c = exponents
    if (a, b, c) == (1.0, 1.0, 1.0):
        return tsa / (rd * rwo)
    return tsa ** a / (rd ** b * rwo ** c)


def min_max_normalize(scores: list[float]) -> list[float]:
    """(s - min) / (max - min); a constant list maps to all ones."""
    if not scores:
        raise ValueError("cannot normalize an empty score list")
    lo, hi = min(scores), max(scores)
    if hi == lo:
        return [1.0] * len(scores)
    return [(s - lo) / (hi - lo) for s in scores]


def _device_model(base: xbar.DeviceModel, cfg: dict) -> xbar.DeviceModel:
    mult = cfg["std_multiplier"]
    return xbar.DeviceModel(
        r_on_mean=base.r_on_mean, r_on_std=base.r_on_std * mult,
        r_off_mean=base.r_off_mean, r_off_std=base.r_off_std * mult,
        n_states=cfg["n_states"], p_stuck_on=cfg["p_stuck_on"],
        p_stuck_off=cfg["p_stuck_off"])


def evaluate_config(cfg: dict, order_index: int, networks: dict, data: Dataset,
                    seed: int, base_model: xbar.DeviceModel) -> ConfigResult:
    """Evaluate one design point: simulated accuracy plus the simulated
    scheme's cost report from the cross-scheme derivation."""
    try:
        net = networks[cfg["network"]]
        hw = xbar.HardwareConfig(
            tile_size=cfg["tile_size"],
            io=xbar.IOConfig(io_bit_width=cfg["io_bit_width"], v_max=cfg["v_max"],
                             batch_size=cfg["batch_size"]),
            device=_device_model(base_model, cfg))
        tsa = xbar.evaluate_accuracy(net, cfg["scheme"], hw, data, seed)
        costs = mapping.derive_costs_cross_scheme(cfg["scheme"], net, cfg["tile_size"])
        report = costs[cfg["scheme"]]
        raw = weighted_score(tsa, report.rd, report.rwo)
        return ConfigResult(config=dict(cfg), order_index=order_index, tsa=tsa,
                            rd=report.rd, rwo=report.rwo, tiles=report.tiles,
                            raw_score=raw, seed=seed)
    except Exception as err:  # noqa: BLE001 - context added, re-raised
        raise EvaluationError(cfg, err) from err


def grid_search(space: SearchSpace, data: Dataset, networks: dict,
                seed: int = 0, base_model: xbar.DeviceModel | None = None,
                jobs: int = 1) -> list[ConfigResult]:
    """Evaluate every configuration exactly once, in lexicographic order.

    Randomness is keyed per configuration, and results are assembled in
    enumeration order, so the output is identical for any worker count.
    """
    space.validate()
    base_model = base_model or xbar.DeviceModel()
    points = list(space.points())
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(evaluate_config, cfg, i, networks, data,
                                   seed, base_model)
                       for i, cfg in enumerate(points)]
            results = [f.result() for f in futures]
    else:
        results = [evaluate_config(cfg, i, networks, data, seed, base_model)
                   for i, cfg in enumerate(points)]
    normalized = min_max_normalize([r.raw_score for r in results])
    for res, norm in zip(results, normalized):
        res.normalized_score = norm
    return results


@dataclass
class ContourGrid:
    x_dim: str
    y_dim: str
    metric: str
    x_values: list
    y_values: list
    matrix: np.ndarray    # (len(y_values), len(x_values))
    missing: np.ndarray   # boolean mask of unevaluated cells


def contour_grid(results: list[ConfigResult], x_dim: str, y_dim: str,
                 metric: str = "tsa", reduce: str = "max") -> ContourGrid:
    """Dense metric matrix over two chosen dimensions; remaining dimensions
    collapse under the reducer (max). Cells with no result are flagged."""
    if x_dim == y_dim:
        raise ValueError("x_dim and y_dim must differ")
    for dim in (x_dim, y_dim):
        if dim not in DIMENSIONS:
            raise ValueError(f"unknown dimension {dim!r}")
    if reduce != "max":
        raise ValueError("only the 'max' reducer is supported")
    x_values: list = []
    y_values: list = []
    for res in results:
        if res.config[x_dim] not in x_values:
            x_values.append(res.config[x_dim])
        if res.config[y_dim] not in y_values:
            y_values.append(res.config[y_dim])
    matrix = np.full((len(y_values), len(x_values)), np.nan)
    for res in results:
        xi = x_values.index(res.config[x_dim])
        yi = y_values.index(res.config[y_dim])
        value = getattr(res, metric)
        if np.isnan(matrix[yi, xi]) or value > matrix[yi, xi]:
            matrix[yi, xi] = value
    return ContourGrid(x_dim, y_dim, metric, x_values, y_values, matrix,
                       np.isnan(matrix))


def rank(results: list[ConfigResult]) -> list[ConfigResult]:
    """Descending by normalized score; ties broken by smaller RD, smaller
    RWO, then lexicographic configuration order."""
    for res in results:
        if res.normalized_score is None:
            raise ValueError("results must be normalized before ranking")
    return sorted(results, key=lambda r: (-r.normalized_score, r.rd, r.rwo,
                                          r.order_index))
