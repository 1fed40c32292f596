"""Command-line front end: genscene, reconstruct, evaluate, sweep.

Exit codes: 0 success, 1 usage/input error, 2 runtime failure.
"""

import argparse
import json
import sys
import time

import numpy as np

from . import baselines, estimators, fill, metrics, pgm, scenegen
from .grid import (ObstacleMap, RadioMap, Rect, Transmitter, init_region_state,
                   read_bool_grid, read_grid_file, region_state_from_mask,
                   write_grid_file)
from .priority import MODE_FULL, MODE_TEXTURE, PriorityConfig
from .sparse import load_dictionary, save_dictionary

RESULTS_HEADER = "method,scenario,mask_h,mask_w,seed,mse,ne,runtime_ms"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _parse_rect(text: str) -> Rect:
    parts = text.split(",")
    if len(parts) != 4:
        raise UsageError(f"--rect wants top,left,height,width, got {text!r}")
    try:
        return Rect(*(int(p) for p in parts))
    except ValueError:
        raise UsageError(f"--rect entries must be integers, got {text!r}") from None


def _parse_tx(text: str) -> Transmitter:
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError(f"--tx wants row,col, got {text!r}")
    try:
        return Transmitter(row=float(parts[0]), col=float(parts[1]))
    except ValueError:
        raise UsageError(f"--tx entries must be numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="radiofill",
                     description="Reconstruct missing rectangles in gridded radio maps")
    sub = parser.add_subparsers(dest="command", required=True)

    rec = sub.add_parser("reconstruct", help="fill a masked map")
    rec.add_argument("--map", required=True, help="normalized map CSV")
    rec.add_argument("--mask", help="0/1 mask CSV (1 = missing)")
    rec.add_argument("--rect", help="top,left,height,width missing rectangle")
    rec.add_argument("--tx", action="append", default=[],
                     help="transmitter row,col (repeatable)")
    rec.add_argument("--obstacles", help="0/1 building CSV (default: none)")
    rec.add_argument("--method", choices=["epc", "epd"], default="epc")
    rec.add_argument("--priority", choices=["full", "texture"], default="full")
    rec.add_argument("--patch-size", type=int, default=15)
    rec.add_argument("--beta", type=float, default=2.0)
    rec.add_argument("--lambda", dest="lam", type=float, default=0.01)
    rec.add_argument("--dict-size", type=int, default=500)
    rec.add_argument("--train-patches", type=int, default=2000)
    rec.add_argument("--ksvd-iters", type=int, default=15)
    rec.add_argument("--seed", type=int, default=0)
    rec.add_argument("--clamp", action=argparse.BooleanOptionalAction, default=True)
    rec.add_argument("--out", default="reconstructed.csv")
    rec.add_argument("--fill-order", default=None, help="fill order CSV path")
    rec.add_argument("--heatmap-prefix", default=None,
                     help="write PGM heatmaps with this path prefix")
    rec.add_argument("--truth", default=None, help="truth CSV for the error heatmap")
    rec.add_argument("--save-dict", default=None, help="save trained dictionary CSV")
    rec.add_argument("--load-dict", default=None, help="reuse a trained dictionary CSV")

    ev = sub.add_parser("evaluate", help="compare an estimate against truth")
    ev.add_argument("--truth", required=True)
    ev.add_argument("--estimate", required=True)
    ev.add_argument("--rect", required=True, help="top,left,height,width region")
    ev.add_argument("--results", default=None, help="append a row to this CSV")
    ev.add_argument("--method", default="unknown")
    ev.add_argument("--scenario", default="unknown")
    ev.add_argument("--seed", type=int, default=0)

    sw = sub.add_parser("sweep", help="methods x mask sizes x seeded trials")
    sw.add_argument("--scenario", choices=["vertical_stripes", "city_blocks", "empty"],
                    default="vertical_stripes")
    sw.add_argument("--rows", type=int, default=120)
    sw.add_argument("--cols", type=int, default=160)
    sw.add_argument("--sizes", default="6,14,20,26,32")
    sw.add_argument("--trials", type=int, default=10)
    sw.add_argument("--methods", default="epc,epd,ebc,rbf,mbi")
    sw.add_argument("--patch-size", type=int, default=15)
    sw.add_argument("--beta", type=float, default=2.0)
    sw.add_argument("--lambda", dest="lam", type=float, default=0.01)
    sw.add_argument("--dict-size", type=int, default=128)
    sw.add_argument("--train-patches", type=int, default=600)
    sw.add_argument("--ksvd-iters", type=int, default=6)
    sw.add_argument("--seed", type=int, default=0)
    sw.add_argument("--out", default="results.csv")
    sw.add_argument("--aggregate", default=None, help="aggregate CSV path")

    gs = sub.add_parser("genscene", help="write a synthetic scene triple")
    gs.add_argument("--rows", type=int, default=120)
    gs.add_argument("--cols", type=int, default=160)
    gs.add_argument("--layout", choices=["empty", "vertical_stripes", "city_blocks"],
                    default="vertical_stripes")
    gs.add_argument("--tx", default=None, help="transmitter row,col")
    gs.add_argument("--gamma", type=float, default=2.2)
    gs.add_argument("--attenuation", type=float, default=0.55)
    gs.add_argument("--shadow-amplitude", type=float, default=0.25)
    gs.add_argument("--shadow-correlation", type=float, default=8.0)
    gs.add_argument("--seed", type=int, default=0)
    gs.add_argument("--prefix", default="scene",
                    help="writes <prefix>_map.csv, <prefix>_obstacles.csv, <prefix>.json")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {
        "reconstruct": cmd_reconstruct,
        "evaluate": cmd_evaluate,
        "sweep": cmd_sweep,
        "genscene": cmd_genscene,
    }
    try:
        return handlers[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


def entrypoint():
    raise SystemExit(main())


def _load_map(path) -> RadioMap:
    values = read_grid_file(path)
    return RadioMap(values)


def _load_state(args, radio_map):
    if args.rect:
        rect = _parse_rect(args.rect)
        try:
            return init_region_state(radio_map, rect)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if args.mask:
        mask = read_bool_grid(args.mask)
        if mask.shape != radio_map.values.shape:
            raise UsageError(
                f"mask shape {mask.shape} does not match map {radio_map.values.shape}")
        return region_state_from_mask(radio_map, mask)
    raise UsageError("provide --rect or --mask")


def cmd_reconstruct(args) -> int:
    radio_map = _load_map(args.map)
    state = _load_state(args, radio_map)
    txs = [_parse_tx(t) for t in args.tx]
    if not txs:
        raise UsageError("provide at least one --tx row,col")
    if args.obstacles:
        cells = read_bool_grid(args.obstacles)
        if cells.shape != radio_map.values.shape:
            raise UsageError("obstacle grid shape does not match the map")
        obstacles = ObstacleMap(cells)
    else:
        obstacles = ObstacleMap.empty(radio_map.rows, radio_map.cols)

    mode = MODE_FULL if args.priority == "full" else MODE_TEXTURE
    pcfg = PriorityConfig(patch_size=args.patch_size, beta=args.beta, mode=mode)
    ecfg = estimators.EstimatorConfig(
        method=args.method, lam=args.lam, natoms=args.dict_size,
        train_count=args.train_patches, ksvd_iters=args.ksvd_iters,
        clamp_output=args.clamp, rng_seed=args.seed)
    dictionary = load_dictionary(args.load_dict) if args.load_dict else None
    estimator = estimators.make_estimator(ecfg, radio_map, state, args.patch_size,
                                          dictionary=dictionary)
    result, report = fill.reconstruct(radio_map, state, obstacles, txs, pcfg, estimator)

    write_grid_file(args.out, result.values)
    if args.fill_order:
        fill.write_fill_order(args.fill_order, report)
    if args.save_dict and hasattr(estimator, "dictionary"):
        save_dictionary(args.save_dict, estimator.dictionary)
    if args.heatmap_prefix:
        masked = radio_map.values.copy()
        masked[~state.original_observed] = 0.0
        pgm.write_pgm(f"{args.heatmap_prefix}_input.pgm", masked)
        pgm.write_pgm(f"{args.heatmap_prefix}_output.pgm", result.values)
        if args.truth:
            truth = read_grid_file(args.truth)
            pgm.write_pgm(f"{args.heatmap_prefix}_error.pgm",
                          np.abs(truth - result.values))
    print(f"filled {report.cells_filled} cells in {report.iterations} iterations")
    return 0


def _append_result(path, row: str) -> None:
    try:
        with open(path, "r", encoding="ascii") as fh:
            has_header = fh.readline().strip() == RESULTS_HEADER
    except FileNotFoundError:
        has_header = False
    with open(path, "a", encoding="ascii") as fh:
        if not has_header:
            fh.write(RESULTS_HEADER + "\n")
        fh.write(row + "\n")


def cmd_evaluate(args) -> int:
    truth = read_grid_file(args.truth)
    estimate = read_grid_file(args.estimate)
    rect = _parse_rect(args.rect)
    report = metrics.evaluate(truth, estimate, rect)
    print(f"mse={report.mse:.10g} ne={report.ne:.10g}")
    if args.results:
        _append_result(args.results,
                       f"{args.method},{args.scenario},{rect.height},{rect.width},"
                       f"{args.seed},{report.mse:.10g},{report.ne:.10g},0")
    return 0


def _run_method(method, truth_map, state, obstacles, tx, args):
    if method in ("epc", "epd", "ebc"):
        mode = MODE_TEXTURE if method == "ebc" else MODE_FULL
        pcfg = PriorityConfig(patch_size=args.patch_size, beta=args.beta, mode=mode)
        ecfg = estimators.EstimatorConfig(
            method="epd" if method == "epd" else "epc",
            lam=args.lam, natoms=args.dict_size, train_count=args.train_patches,
            ksvd_iters=args.ksvd_iters, rng_seed=args.seed)
        estimator = estimators.make_estimator(ecfg, truth_map, state, args.patch_size)
        result, _ = fill.reconstruct(truth_map, state, obstacles, [tx], pcfg, estimator)
        return result
    if method == "rbf":
        return baselines.rbf_reconstruct(truth_map, state)
    if method == "mbi":
        return baselines.mbi_reconstruct(truth_map, state, tx)
    raise UsageError(f"unknown method {method!r}")


def cmd_sweep(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",") if s]
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    agg: dict[tuple[str, int], list[tuple[float, float]]] = {}
    for size in sizes:
        for trial in range(args.trials):
            scene_seed = args.seed + 1000 * trial
            spec = scenegen.SceneSpec(
                rows=args.rows, cols=args.cols,
                building_layout=args.scenario if args.scenario != "empty"
                else scenegen.LAYOUT_EMPTY,
                shadow_amplitude=0.25, rng_seed=scene_seed)
            truth_map, obstacles, tx = scenegen.generate(spec)
            rng = np.random.default_rng(scene_seed + 7)
            top = int(rng.integers(2, args.rows - size - 2))
            left = int(rng.integers(2, args.cols - size - 2))
            rect = Rect(top, left, size, size)
            for method in methods:
                state = init_region_state(truth_map, rect)
                t0 = time.perf_counter()
                result = _run_method(method, truth_map, state, obstacles, tx, args)
                ms = (time.perf_counter() - t0) * 1000.0
                report = metrics.evaluate(truth_map.values, result.values, rect)
                _append_result(args.out,
                               f"{method},{args.scenario},{size},{size},{scene_seed},"
                               f"{report.mse:.10g},{report.ne:.10g},{ms:.1f}")
                agg.setdefault((method, size), []).append((report.mse, report.ne))
    if args.aggregate:
        with open(args.aggregate, "w", encoding="ascii") as fh:
            fh.write("method,mask_size,trials,mean_mse,mean_ne\n")
            for (method, size), vals in sorted(agg.items()):
                m = np.mean([v[0] for v in vals])
                n = np.mean([v[1] for v in vals])
                fh.write(f"{method},{size},{len(vals)},{m:.10g},{n:.10g}\n")
    for (method, size), vals in sorted(agg.items()):
        print(f"{method} size={size}: mean_mse={np.mean([v[0] for v in vals]):.6g}")
    return 0


def cmd_genscene(args) -> int:
    layout = {"empty": scenegen.LAYOUT_EMPTY,
              "vertical_stripes": scenegen.LAYOUT_VERTICAL_STRIPES,
              "city_blocks": scenegen.LAYOUT_CITY_BLOCKS}[args.layout]
    if args.tx:
        tx = _parse_tx(args.tx)
        tx_row, tx_col = tx.row, tx.col
    else:
        tx_row, tx_col = -20.0, args.cols / 2.0
    spec = scenegen.SceneSpec(
        rows=args.rows, cols=args.cols, tx_row=tx_row, tx_col=tx_col,
        pathloss_exponent=args.gamma, attenuation=args.attenuation,
        building_layout=layout, shadow_amplitude=args.shadow_amplitude,
        shadow_correlation=args.shadow_correlation, rng_seed=args.seed)
    radio_map, obstacles, tx = scenegen.generate(spec)
    write_grid_file(f"{args.prefix}_map.csv", radio_map.values)
    write_grid_file(f"{args.prefix}_obstacles.csv", obstacles.cells.astype(np.int8))
    manifest = {
        "rows": spec.rows, "cols": spec.cols,
        "tx_row": tx.row, "tx_col": tx.col,
        "pathloss_exponent": spec.pathloss_exponent,
        "attenuation": spec.attenuation,
        "building_layout": args.layout,
        "shadow_amplitude": spec.shadow_amplitude,
        "shadow_correlation": spec.shadow_correlation,
        "rng_seed": spec.rng_seed,
        "norm_min": radio_map.norm_min, "norm_max": radio_map.norm_max,
    }
    with open(f"{args.prefix}.json", "w", encoding="ascii") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {args.prefix}_map.csv, {args.prefix}_obstacles.csv, {args.prefix}.json")
    return 0
