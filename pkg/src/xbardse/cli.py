"""Command-line surface: fixture generation, cost tables, single-point
simulation, grid-search exploration, and report re-emission.

Files are the machine contract (CSV with mandatory header rows, JSON with
format_version); stdout is human-oriented. Exit codes: 0 success, 1 runtime
failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import dse, mapping, qnet, xbar

FIXTURE_SHAPE = (1, 16)
FIXTURE_CLASSES = 4


class ConfigError(ValueError):
    """Bad usage or configuration; maps to exit code 2."""


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


# ---------------------------------------------------------------------------
# run configuration


DEFAULT_SPACE = {name: None for name in dse.DIMENSIONS}

DEVICE_FIELDS = ("r_on_mean", "r_on_std", "r_off_mean", "r_off_std")


def load_run_config(path: str, seed_override: int | None = None,
                    out_override: str | None = None,
                    jobs_override: int | None = None) -> dict:
    """Load and validate a run configuration, materializing all defaults.

    Collects every validation problem before failing so a bad config is
    reported exhaustively.
    """
    errors: list[str] = []
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"config is not valid JSON: {err}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config top level must be an object")

    cfg = {
        "format_version": doc.get("format_version", 1),
        "network": doc.get("network"),
        "dataset": doc.get("dataset"),
        "out": out_override or doc.get("out", "."),
        "seed": seed_override if seed_override is not None else doc.get("seed", 0),
        "jobs": jobs_override if jobs_override is not None else doc.get("jobs", 1),
        "max_grid": doc.get("max_grid", 4096),
        "svg": bool(doc.get("svg", False)),
        "device": dict(doc.get("device", {})),
        "space": dict(doc.get("space", {})),
    }
    if cfg["format_version"] != 1:
        errors.append(f"format_version: unsupported value {cfg['format_version']}")
    if not cfg["network"]:
        errors.append("network: missing path")
    elif not Path(cfg["network"]).is_file():
        errors.append(f"network: file not found: {cfg['network']}")
    if not cfg["dataset"]:
        errors.append("dataset: missing path")
    elif not Path(cfg["dataset"]).is_file():
        errors.append(f"dataset: file not found: {cfg['dataset']}")
    if not isinstance(cfg["seed"], int):
        errors.append("seed: must be an integer")
    if not isinstance(cfg["jobs"], int) or cfg["jobs"] < 1:
        errors.append("jobs: must be a positive integer")
    if not isinstance(cfg["max_grid"], int) or cfg["max_grid"] < 1:
        errors.append("max_grid: must be a positive integer")

    for key in cfg["device"]:
        if key not in DEVICE_FIELDS:
            errors.append(f"device.{key}: unknown device field")
    device_kwargs = {k: cfg["device"].get(k) for k in DEVICE_FIELDS
                     if cfg["device"].get(k) is not None}
    try:
        base_model = xbar.DeviceModel(**device_kwargs)
    except (TypeError, ValueError) as err:
        errors.append(f"device: {err}")
        base_model = xbar.DeviceModel()

    space = dse.SearchSpace()
    for key, value in cfg["space"].items():
        if key not in dse.DIMENSIONS:
            errors.append(f"space.{key}: unknown dimension")
            continue
        if key == "network":
            errors.append("space.network: derived from the network path, not configurable")
            continue
        values = value if isinstance(value, list) else [value]
        if not values:
            errors.append(f"space.{key}: empty value list")
            continue
        setattr(space, key, values)
    for scheme in space.scheme:
        if scheme not in mapping.SCHEMES:
            errors.append(f"space.scheme: unknown scheme {scheme!r} "
                          f"(known: {', '.join(mapping.SCHEMES)})")
    for t in space.tile_size:
        if not isinstance(t, int) or t < 2:
            errors.append(f"space.tile_size: {t!r} is not an integer >= 2")
    if errors:
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(errors))

    cfg["base_model"] = base_model
    cfg["space_obj"] = space
    cfg["device"] = {k: getattr(base_model, k) for k in DEVICE_FIELDS}
    cfg["space"] = {name: getattr(space, name) for name in dse.DIMENSIONS
                    if name != "network"}
    return cfg


def _load_inputs(cfg: dict):
    net = qnet.load_network(cfg["network"])
    data = qnet.load_dataset(cfg["dataset"])
    cfg["space_obj"].network = [net.name]
    return net, data


def _resolved_config_doc(cfg: dict) -> dict:
    return {"format_version": 1, "network": cfg["network"],
            "dataset": cfg["dataset"], "out": cfg["out"], "seed": cfg["seed"],
            "jobs": cfg["jobs"], "max_grid": cfg["max_grid"], "svg": cfg["svg"],
            "device": cfg["device"], "space": cfg["space"]}


# ---------------------------------------------------------------------------
# results round-trip


RESULT_COLUMNS = ["order_index", *dse.DIMENSIONS, "tsa", "rd", "rwo", "tiles",
                  "raw_score", "normalized_score", "seed"]


def write_results_csv(path: Path, results: list[dse.ConfigResult]) -> None:
    rows = []
    for res in results:
        rows.append([res.order_index,
                     *[res.config[d] for d in dse.DIMENSIONS],
                     res.tsa, res.rd, res.rwo, res.tiles, res.raw_score,
                     res.normalized_score, res.seed])
    _write_csv(path, RESULT_COLUMNS, rows)


def _parse_cell(column: str, text: str):
    if text == "":
        return None
    if column in ("order_index", "tile_size", "batch_size", "rd", "rwo",
                  "tiles", "seed", "io_bit_width", "n_states"):
        return int(text)
    if column in ("v_max", "p_stuck_on", "p_stuck_off", "std_multiplier",
                  "tsa", "raw_score", "normalized_score"):
        return float(text)
    return text


def load_results_csv(path) -> list[dse.ConfigResult]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != RESULT_COLUMNS:
            raise ConfigError(f"{path}: unexpected results header {header}")
        results = []
        for row in reader:
            cells = {col: _parse_cell(col, txt) for col, txt in zip(header, row)}
            results.append(dse.ConfigResult(
                config={d: cells[d] for d in dse.DIMENSIONS},
                order_index=cells["order_index"], tsa=cells["tsa"],
                rd=cells["rd"], rwo=cells["rwo"], tiles=cells["tiles"],
                raw_score=cells["raw_score"], seed=cells["seed"],
                normalized_score=cells["normalized_score"]))
    return results


def write_contour_csv(path: Path, grid: dse.ContourGrid, seed: int,
                      slice_tag: str = "") -> None:
    header = [f"{grid.y_dim}\\{grid.x_dim}"] + [_fmt(v) for v in grid.x_values]
    rows = []
    for yi, yv in enumerate(grid.y_values):
        row = [yv]
        for xi in range(len(grid.x_values)):
            row.append("missing" if grid.missing[yi, xi] else grid.matrix[yi, xi])
        rows.append(row)
    with open(path, "w", newline="") as fh:
        fh.write(f"# seed: {seed}, metric: {grid.metric}"
                 + (f", slice: {slice_tag}" if slice_tag else "") + "\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def load_contour_csv(path) -> dse.ContourGrid:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        metric = "tsa"
        if header and header[0].startswith("# seed:"):
            for part in ",".join(header).split(","):
                key, _, value = part.lstrip("# ").partition(":")
                if key.strip() == "metric":
                    metric = value.strip()
            header = next(reader)
        y_dim, _, x_dim = header[0].partition("\\")
        x_values = header[1:]
        y_values, rows = [], []
        for row in reader:
            y_values.append(row[0])
            rows.append([np.nan if cell == "missing" else float(cell)
                         for cell in row[1:]])
        matrix = np.asarray(rows)
    return dse.ContourGrid(x_dim, y_dim, metric, x_values, y_values, matrix,
                           np.isnan(matrix))


# ---------------------------------------------------------------------------
# SVG heatmap (presentational only)


_COLOR_STOPS = [(68, 1, 84), (59, 82, 139), (33, 145, 140), (94, 201, 98),
                (253, 231, 37)]


def _colormap(frac: float) -> str:
    pos = min(max(frac, 0.0), 1.0) * (len(_COLOR_STOPS) - 1)
    i = min(int(pos), len(_COLOR_STOPS) - 2)
    t = pos - i
    rgb = [round(a + (b - a) * t) for a, b in zip(_COLOR_STOPS[i], _COLOR_STOPS[i + 1])]
    return f"rgb({rgb[0]},{rgb[1]},{rgb[2]})"


def write_heatmap_svg(path: Path, grid: dse.ContourGrid, title: str) -> None:
    cell, margin = 64, 70
    width = margin + cell * len(grid.x_values) + 20
    height = margin + cell * len(grid.y_values) + 40
    finite = grid.matrix[~grid.missing]
    lo = float(finite.min()) if finite.size else 0.0
    hi = float(finite.max()) if finite.size else 1.0
    span = (hi - lo) or 1.0
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'font-family="monospace" font-size="11">',
             f'<text x="{margin}" y="16">{title}</text>',
             f'<text x="{margin}" y="30">{grid.metric}: min={lo:.6g} max={hi:.6g}</text>']
    for yi, yv in enumerate(grid.y_values):
        for xi, xv in enumerate(grid.x_values):
            x0 = margin + xi * cell
            y0 = margin + yi * cell - 30
            if grid.missing[yi, xi]:
                fill, label = "rgb(220,220,220)", "n/a"
            else:
                val = grid.matrix[yi, xi]
                fill, label = _colormap((val - lo) / span), f"{val:.4g}"
            parts.append(f'<rect x="{x0}" y="{y0}" width="{cell - 2}" '
                         f'height="{cell - 2}" fill="{fill}"/>')
            parts.append(f'<text x="{x0 + 4}" y="{y0 + cell // 2}" '
                         f'fill="white">{label}</text>')
        parts.append(f'<text x="{margin - 64}" y="{margin + yi * cell + 6}">'
                     f'{_fmt(yv)}</text>')
    for xi, xv in enumerate(grid.x_values):
        parts.append(f'<text x="{margin + xi * cell}" '
                     f'y="{margin + len(grid.y_values) * cell - 16}">{_fmt(xv)}</text>')
    parts.append(f'<text x="4" y="{margin + 6}">{grid.y_dim}</text>')
    parts.append(f'<text x="{margin}" y="{height - 6}">{grid.x_dim}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts))


# ---------------------------------------------------------------------------
# commands


def cmd_fixture(args) -> int:
    out = Path(args.out)
    if not out.is_dir():
        raise ConfigError(f"output directory does not exist: {out}")
    train = qnet.generate_synthetic_dataset(args.seed, args.train_size,
                                            FIXTURE_CLASSES, FIXTURE_SHAPE)
    test = qnet.generate_synthetic_dataset(args.seed + 1, args.test_size,
                                           FIXTURE_CLASSES, FIXTURE_SHAPE)
    arch = [qnet.conv1d(kernels=4, kernel_h=3), qnet.linear(FIXTURE_CLASSES)]
    net = qnet.train_fixture(args.seed, arch, train, l1=args.l1,
                             bit_width=args.bit_width,
                             name=f"fixture-s{args.seed}-b{args.bit_width}")
    gate = qnet.accuracy(net, test)
    zeros, frac = qnet.sparsity(net)
    qnet.save_network(net, out / "fixture_net.json")
    qnet.save_dataset(train, out / "fixture_train.csv")
    qnet.save_dataset(test, out / "fixture_test.csv")
    print(f"fixture network: {net.name} ({net.total_weights()} weights, "
          f"{zeros} zero codes, sparsity {frac:.3f})")
    print(f"held-out ideal accuracy: {gate:.4f} (gate >= 0.90: "
          f"{'yes' if gate >= 0.90 else 'NO'})")
    print(f"wrote {out / 'fixture_net.json'}, fixture_train.csv, fixture_test.csv")
    return 0


def cmd_cost(args) -> int:
    if args.scheme not in mapping.SCHEMES:
        raise ConfigError(f"unknown scheme {args.scheme!r} "
                          f"(known: {', '.join(mapping.SCHEMES)})")
    if args.tile_size < 2:
        raise ConfigError("tile size must be >= 2")
    net = qnet.load_network(args.net)
    total, reports = mapping.cost_network(net, args.scheme, args.tile_size)
    header = ["layer", "kind", "rd", "tiles", "rwo", "programming_writes",
              "eq1_staggered_devices", "eq1_remainder", "eq2_dense_devices",
              "eq3_dense_steps", "eq3_remainder"]
    rows = []
    for i, (layer, rep) in enumerate(zip(net.layers, reports)):
        if layer.spec.kind == "linear":
            eq_cells = ["", "", "", "", ""]
        else:
            geom = mapping.ConvGeometry.from_spec(layer.spec)
            eq1 = mapping.devices_sparse_eq1(geom)
            eq3, rem3 = mapping.steps_dense_eq3(geom)
            eq_cells = [float(eq1), eq1.denominator != 1,
                        mapping.devices_dense_eq2(geom), eq3, rem3]
        rows.append([i, layer.spec.kind, rep.rd, rep.tiles, rep.rwo,
                     rep.programming_writes, *eq_cells])
    rows.append(["total", args.scheme, total.rd, total.tiles, total.rwo,
                 total.programming_writes,
                 float(total.eq_devices) if total.eq_devices is not None else "",
                 total.remainder_flag,
                 "", total.eq_steps if total.eq_steps is not None else "", ""])
    widths = [max(len(_fmt(r[c])) for r in [header] + rows) for c in range(len(header))]
    for row in [header] + rows:
        print("  ".join(_fmt(v).ljust(w) for v, w in zip(row, widths)).rstrip())
    if args.out:
        out = Path(args.out)
        if not out.is_dir():
            raise ConfigError(f"output directory does not exist: {out}")
        _write_csv(out / "cost.csv", header, rows)
        print(f"wrote {out / 'cost.csv'}")
    return 0


def _single_point(space: dse.SearchSpace) -> None:
    oversized = [name for name in dse.DIMENSIONS
                 if len(getattr(space, name)) > 1]
    if oversized:
        raise ConfigError("simulate needs a single-point space; dimensions "
                          f"with multiple values: {', '.join(oversized)}")


def cmd_simulate(args) -> int:
    cfg = load_run_config(args.config, args.seed, args.out, args.jobs)
    net, data = _load_inputs(cfg)
    _single_point(cfg["space_obj"])
    out = Path(cfg["out"])
    if not out.is_dir():
        raise ConfigError(f"output directory does not exist: {out}")
    results = dse.grid_search(cfg["space_obj"], data, {net.name: net},
                              seed=cfg["seed"], base_model=cfg["base_model"])
    res = results[0]
    doc = {"format_version": 1, "config": _resolved_config_doc(cfg),
           "point": res.config, "tsa": res.tsa, "rd": res.rd, "rwo": res.rwo,
           "tiles": res.tiles, "raw_score": res.raw_score, "seed": res.seed}
    (out / "simulate_result.json").write_text(json.dumps(doc, indent=1))
    print(f"TSA: {res.tsa:.6f}")
    print(f"RD: {res.rd}   RWO: {res.rwo}   tiles: {res.tiles}")
    print(f"raw score TSA/(RD*RWO): {res.raw_score!r}")
    print(f"wrote {out / 'simulate_result.json'}")
    return 0


def _emit_reports(out: Path, results: list[dse.ConfigResult], svg: bool) -> list[str]:
    """ranking.csv plus one contour CSV (tile_size x batch_size) per value
    combination of the other non-singleton dimensions."""
    written = []
    ranking = dse.rank(results)
    write_results_csv(out / "ranking.csv", ranking)
    written.append("ranking.csv")
    seed = results[0].seed
    slice_dims = [d for d in dse.DIMENSIONS if d not in ("tile_size", "batch_size")
                  and len({repr(r.config[d]) for r in results}) > 1]
    groups: dict[tuple, list] = {}
    for res in results:
        groups.setdefault(tuple(res.config[d] for d in slice_dims), []).append(res)
    for key in sorted(groups, key=repr):
        subset = groups[key]
        tag = "".join(f"_{d}={v}" for d, v in zip(slice_dims, key))
        grid = dse.contour_grid(subset, "tile_size", "batch_size", "tsa")
        name = f"contour_tsa{tag}.csv"
        write_contour_csv(out / name, grid, seed, tag.lstrip("_"))
        written.append(name)
        if svg:
            svg_name = f"contour_tsa{tag}.svg"
            write_heatmap_svg(out / svg_name, grid, f"TSA{tag or ' (full grid)'}")
            written.append(svg_name)
    return written


def cmd_dse(args) -> int:
    cfg = load_run_config(args.config, args.seed, args.out, args.jobs)
    net, data = _load_inputs(cfg)
    space = cfg["space_obj"]
    if space.size() > cfg["max_grid"]:
        raise ConfigError(f"grid has {space.size()} configurations, exceeding "
                          f"max_grid={cfg['max_grid']}; raise max_grid or "
                          "shrink the space")
    out = Path(cfg["out"])
    if not out.is_dir():
        raise ConfigError(f"output directory does not exist: {out}")
    results = dse.grid_search(space, data, {net.name: net}, seed=cfg["seed"],
                              base_model=cfg["base_model"], jobs=cfg["jobs"])
    (out / "config_resolved.json").write_text(
        json.dumps(_resolved_config_doc(cfg), indent=1))
    write_results_csv(out / "results.csv", results)
    written = ["config_resolved.json", "results.csv"]
    written += _emit_reports(out, results, svg=cfg["svg"] or args.svg)
    best = dse.rank(results)[0]
    print(f"evaluated {len(results)} configurations (seed {cfg['seed']})")
    print(f"best: {best.config} TSA={best.tsa:.6f} "
          f"normalized score={best.normalized_score:.4f}")
    print("wrote " + ", ".join(written))
    return 0


def cmd_report(args) -> int:
    out = Path(args.out)
    if not out.is_dir():
        raise ConfigError(f"output directory does not exist: {out}")
    if not Path(args.results).is_file():
        raise ConfigError(f"results file not found: {args.results}")
    results = load_results_csv(args.results)
    if not results:
        raise ConfigError(f"{args.results}: no result rows")
    written = _emit_reports(out, results, svg=args.svg)
    print(f"re-emitted reports for {len(results)} configurations")
    print("wrote " + ", ".join(written))
    return 0


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xbardse",
        description="Tiled crossbar inference simulator and mapping-scheme "
                    "design-space exploration")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fixture", help="generate the fixture network and datasets")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="existing output directory")
    p.add_argument("--train-size", type=int, default=256)
    p.add_argument("--test-size", type=int, default=200)
    p.add_argument("--bit-width", type=int, default=8, choices=(4, 6, 8))
    p.add_argument("--l1", type=float, default=5e-4)
    p.set_defaults(func=cmd_fixture)

    p = sub.add_parser("cost", help="per-layer mapping cost table")
    p.add_argument("--net", required=True, help="network JSON file")
    p.add_argument("--scheme", required=True)
    p.add_argument("--tile-size", type=int, required=True)
    p.add_argument("--out", default=None, help="also write cost.csv here")
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("simulate", help="evaluate one configuration")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("dse", help="grid-search the configured space")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--svg", action="store_true", help="also emit SVG heatmaps")
    p.set_defaults(func=cmd_dse)

    p = sub.add_parser("report", help="re-emit ranking and contours from results.csv")
    p.add_argument("--results", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--svg", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, qnet.NetworkFormatError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except Exception as err:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
