"""Command-line surface: distances, 2AFC evaluation, ablation grids.

Progress goes to stderr, data to stdout (or ``--out``).  Exit codes:
0 ok, 2 usage or input problem, 3 dataset ingestion problem, 4 weight-file
problem.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import (ConfigurationError, IngestionError, InputError,
                     MrpercError, UsageError, WeightFileError)
from .descriptor import DissimMeasure, NormStrategy
from .evaluation import (EvalReport, evaluate, evaluate_grid, evaluate_metric,
                         load_2afc)
from .images import load_image
from .model import load_weights
from .pipeline import (CLASSICAL, MR, PRESETS, Branch, MetricConfig,
                       compute_metric, ssim_distance)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INGESTION = 3
EXIT_WEIGHTS = 4


def _parse_branches(text: str) -> tuple[Branch, ...]:
    items = [p for chunk in text.split(",") for p in chunk.split("+") if p.strip()]
    return tuple(Branch.parse(p) for p in items)


def _parse_mask(text: str, block_count: int | None = None):
    text = text.strip().lower()
    if text in ("all", ""):
        return None
    try:
        blocks = frozenset(int(p) for chunk in text.split(",")
                           for p in chunk.split("+") if p.strip())
    except ValueError:
        raise UsageError(f"cannot parse block list {text!r}") from None
    if block_count is not None:
        bad = [b for b in blocks if not 1 <= b <= block_count]
        if bad:
            raise UsageError(f"blocks {sorted(bad)} out of range 1..{block_count}")
    return blocks


def _config_from_args(args, block_count: int | None) -> MetricConfig:
    explicit = [args.norm, args.measure, args.branches, args.blocks]
    if args.preset and any(v is not None for v in explicit):
        raise UsageError("--preset and explicit metric flags are mutually exclusive")
    if args.preset:
        if args.preset not in PRESETS:
            raise UsageError(
                f"unknown preset {args.preset!r}; expected one of "
                f"{sorted(PRESETS) + ['ssim']}")
        return PRESETS[args.preset]
    return MetricConfig(
        branches=_parse_branches(args.branches or "x1:linear"),
        normalization=NormStrategy.parse(args.norm or "l2"),
        measure=DissimMeasure.parse(args.measure or "mse"),
        block_mask=_parse_mask(args.blocks or "all", block_count),
    )


def _metric_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--preset", help="named metric preset (classical, mr)")
    parser.add_argument("--norm", help="normalization: l2, sigmoid, relu_l1")
    parser.add_argument("--measure", help="dissimilarity: mse, mae, ce")
    parser.add_argument("--branches",
                        help="branch list, e.g. 'x1:linear+x1:quadratic+x2:linear'")
    parser.add_argument("--blocks", help="block mask, e.g. 'all' or '1+2+5'")


def _report_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--subsample", type=int,
                        help="triplets per category (seeded shuffle prefix)")
    parser.add_argument("--seed", type=int, help="seed for --subsample")
    parser.add_argument("--out", type=Path, help="write report to this path")
    parser.add_argument("--format", choices=("json", "csv", "text"),
                        default="text")
    parser.add_argument("--workers", type=int, default=None,
                        help="evaluation parallelism (default: cpu count)")
    parser.add_argument("--stamp", action="store_true",
                        help="include a timestamp in the report")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mrperc",
        description="Deep perceptual image similarity metrics and 2AFC evaluation")
    sub = parser.add_subparsers(dest="command", required=True)

    p_dist = sub.add_parser("distance", help="distance between two images")
    p_dist.add_argument("image_a", type=Path)
    p_dist.add_argument("image_b", type=Path)
    p_dist.add_argument("--weights", type=Path, required=True)
    _metric_flags(p_dist)
    p_dist.add_argument("--format", choices=("json", "text"), default="text")

    p_eval = sub.add_parser("evaluate", help="score a metric on a 2AFC dataset")
    p_eval.add_argument("--dataset", type=Path, required=True)
    p_eval.add_argument("--weights", type=Path)
    _metric_flags(p_eval)
    _report_flags(p_eval)

    p_abl = sub.add_parser("ablate", help="evaluate a grid of metric configs")
    p_abl.add_argument("--dataset", type=Path, required=True)
    p_abl.add_argument("--weights", type=Path, required=True)
    p_abl.add_argument("--preset", help="named grid: table3 or table5")
    p_abl.add_argument("--norm", help="comma list of normalizations")
    p_abl.add_argument("--measure", help="comma list of measures")
    p_abl.add_argument("--branches",
                       help="comma list of branch sets; '+' joins within a set")
    p_abl.add_argument("--blocks",
                       help="comma list of block masks; '+' joins within a mask")
    _report_flags(p_abl)

    p_insp = sub.add_parser("inspect-weights", help="print a weight-file summary")
    p_insp.add_argument("--weights", type=Path, required=True)
    return parser


def _emit(payload: str, out: Path | None) -> None:
    if out is not None:
        out.write_text(payload)
        print(f"wrote {out}", file=sys.stderr)
    else:
        sys.stdout.write(payload)


def _render(report: EvalReport, fmt: str) -> str:
    if fmt == "json":
        return report.to_json_bytes().decode("utf-8")
    if fmt == "csv":
        return report.to_csv()
    return report.to_text()


def _progress(total_label: str):
    def fn(done: int, total: int) -> None:
        if done == total or done % 200 == 0:
            print(f"{total_label}: {done}/{total}", file=sys.stderr)
    return fn


def cmd_distance(args) -> int:
    store = load_weights(args.weights)
    config = _config_from_args(args, store.block_count)
    img_a = load_image(args.image_a)
    img_b = load_image(args.image_b)
    result = compute_metric(img_a, img_b, store, config)
    if args.format == "json":
        payload = json.dumps({
            "distance": result.distance,
            "per_branch": {k: {str(b): d for b, d in v.items()}
                           for k, v in result.per_branch.items()},
        }, indent=2) + "\n"
        sys.stdout.write(payload)
    else:
        print(f"distance: {result.distance:.9g}")
        for key, blocks in result.per_branch.items():
            parts = " ".join(f"b{b}={d:.6g}" for b, d in blocks.items())
            print(f"  {key}: {parts}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    records = load_2afc(args.dataset)
    common = dict(workers=args.workers, subsample=args.subsample,
                  seed=args.seed, stamp=args.stamp,
                  progress=_progress("evaluate"))
    if args.preset == "ssim":
        if any(v is not None for v in
               (args.norm, args.measure, args.branches, args.blocks)):
            raise UsageError("--preset and explicit metric flags are "
                             "mutually exclusive")
        report = evaluate(records, ssim_distance, metric_desc="ssim", **common)
    else:
        if args.weights is None:
            raise UsageError("--weights is required unless --preset ssim")
        store = load_weights(args.weights)
        config = _config_from_args(args, store.block_count)
        report = evaluate_metric(records, store, config, **common)
    _emit(_render(report, args.format), args.out)
    return EXIT_OK


def _table3_cells() -> list[tuple[str, MetricConfig]]:
    x1lin = (Branch("x1", "linear"),)
    x2lin = (Branch("x2", "linear"),)
    x12lin = (Branch("x1", "linear"), Branch("x2", "linear"))
    x2quad = (Branch("x2", "quadratic"),)
    mr_branches = MR.branches
    spec = [
        ("mse", "l2", x1lin), ("ce", "sigmoid", x1lin), ("mse", "l2", x2lin),
        ("mse", "l2", x12lin), ("mse", "sigmoid", x1lin),
        ("mse", "sigmoid", x1lin),  # printed twice in the source table
        ("mse", "l2", x2quad), ("ce", "relu_l1", mr_branches),
        ("ce", "sigmoid", mr_branches),
    ]
    cells = []
    for i, (measure, norm, branches) in enumerate(spec, start=1):
        cfg = MetricConfig(branches=branches,
                           normalization=NormStrategy.parse(norm),
                           measure=DissimMeasure.parse(measure))
        label = "+".join(b.key for b in branches)
        cells.append((f"c{i}:{measure}/{norm}/{label}", cfg))
    return cells


def _table5_cells(block_count: int) -> list[tuple[str, MetricConfig]]:
    cells = [(f"block{b}", MetricConfig(
        branches=CLASSICAL.branches, normalization=CLASSICAL.normalization,
        measure=CLASSICAL.measure, block_mask=frozenset({b})))
        for b in range(1, block_count + 1)]
    cells.append(("all", CLASSICAL))
    return cells


def _grid_cells(args, block_count: int) -> list[tuple[str, MetricConfig]]:
    axes = [args.norm, args.measure, args.branches, args.blocks]
    if args.preset and any(v is not None for v in axes):
        raise UsageError("--preset and explicit grid axes are mutually exclusive")
    if args.preset == "table3":
        return _table3_cells()
    if args.preset == "table5":
        return _table5_cells(block_count)
    if args.preset:
        raise UsageError(f"unknown grid preset {args.preset!r}; "
                         "expected table3 or table5")
    norms = [NormStrategy.parse(n) for n in (args.norm or "l2").split(",") if n]
    measures = [DissimMeasure.parse(m)
                for m in (args.measure or "mse").split(",") if m]
    branch_sets = [tuple(Branch.parse(p) for p in chunk.split("+") if p)
                   for chunk in (args.branches or "x1:linear").split(",") if chunk]
    masks = [_parse_mask(chunk, block_count)
             for chunk in (args.blocks or "all").split(",")]
    cells = []
    for measure in measures:
        for norm in norms:
            for branches in branch_sets:
                for mask in masks:
                    try:
                        cfg = MetricConfig(branches=branches, normalization=norm,
                                           measure=measure, block_mask=mask)
                    except UsageError as exc:
                        print(f"skipping invalid cell: {exc}", file=sys.stderr)
                        continue
                    label = "+".join(b.key for b in branches)
                    mask_label = ("all" if mask is None
                                  else "+".join(str(b) for b in sorted(mask)))
                    cells.append((f"{measure.value}/{norm.value}/{label}"
                                  f"/{mask_label}", cfg))
    if not cells:
        raise UsageError("grid contains no valid cells")
    return cells


def _grid_payload(results: list[tuple[str, EvalReport]], fmt: str) -> str:
    if fmt == "json":
        obj = {"schema": "mrperc-ablation-report/1", "cells": []}
        for name, report in results:
            cell = json.loads(report.to_json_bytes().decode("utf-8"))
            cell["name"] = name
            obj["cells"].append(cell)
        return json.dumps(obj, indent=2) + "\n"
    categories = list(results[0][1].per_category)
    if fmt == "csv":
        lines = ["cell," + ",".join(categories) + ",AVERAGE"]
        for name, report in results:
            vals = [f"{report.per_category[c].score:.4f}" for c in categories]
            lines.append(f"{name}," + ",".join(vals) + f",{report.average:.4f}")
        return "\n".join(lines) + "\n"
    width = max(len(name) for name, _ in results)
    lines = [" " * width + "  " + "  ".join(f"{c:>11}" for c in categories)
             + "  " + f"{'AVERAGE':>11}"]
    for name, report in results:
        vals = "  ".join(f"{report.per_category[c].score:11.2f}"
                         for c in categories)
        lines.append(f"{name:<{width}}  {vals}  {report.average:11.2f}")
    return "\n".join(lines) + "\n"


def cmd_ablate(args) -> int:
    store = load_weights(args.weights)
    cells = _grid_cells(args, store.block_count)
    records = load_2afc(args.dataset)
    results = evaluate_grid(records, store, cells, workers=args.workers,
                            subsample=args.subsample, seed=args.seed,
                            stamp=args.stamp, progress=_progress("ablate"))
    _emit(_grid_payload(results, args.format), args.out)
    return EXIT_OK


def cmd_inspect(args) -> int:
    store = load_weights(args.weights)
    print(f"backbone: {store.backbone}")
    print(f"blocks (B): {store.block_count}")
    print(f"payload crc32: 0x{store.checksum:08X}")
    print(f"entries: {len(store.entries)}")
    print(f"input channels: {store.input_channels}")
    print(f"mean: {store.mean.tolist()}")
    print(f"std: {store.std.tolist()}")
    print("layers:")
    tap = 0
    for i, layer in enumerate(store.manifest):
        suffix = ""
        if layer.block_tap:
            tap += 1
            suffix = f"  [tap {tap}]"
        print(f"  {i:2d}: {layer.describe()}{suffix}")
    return EXIT_OK


_HANDLERS = {
    "distance": cmd_distance,
    "evaluate": cmd_evaluate,
    "ablate": cmd_ablate,
    "inspect-weights": cmd_inspect,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except IngestionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INGESTION
    except WeightFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_WEIGHTS
    except (UsageError, InputError, ConfigurationError, MrpercError,
            FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
