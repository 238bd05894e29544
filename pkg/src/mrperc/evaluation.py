"""2AFC evaluation harness: dataset loading, triplet scoring, reports.

Dataset layout on disk::

    root/<category>/ref/<stem>.png     reference image
    root/<category>/p0/<stem>.png      first distorted image
    root/<category>/p1/<stem>.png      second distorted image
    root/<category>/judge/<stem>.txt   human vote fraction for p1, in [0, 1]

Judge sidecars may be plain text (``0.7``) or binary numpy arrays with a
single value (``.npy``), detected by extension.  Categories are the six
distortion groups; directory names are the lowercase forms.
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import IngestionError
from .images import load_image
from .model import WeightStore
from .pipeline import MetricConfig, metric_from_blocks, image_blocks

log = logging.getLogger(__name__)

# display name -> directory name, in table order
CATEGORIES = {
    "Trad": "trad",
    "CNN": "cnn",
    "SuperRes": "superres",
    "Deblur": "deblur",
    "Color": "color",
    "FrameInterp": "frameinterp",
}
_DIR_TO_CATEGORY = {v: k for k, v in CATEGORIES.items()}

_JUDGE_EXTS = (".txt", ".npy")


@dataclass(frozen=True)
class TripletRecord:
    ref_path: Path
    p0_path: Path
    p1_path: Path
    judge: float
    category: str  # display name, e.g. "Trad"

    @property
    def stem(self) -> str:
        return self.ref_path.stem


def _read_judge(path: Path) -> float:
    if path.suffix == ".npy":
        arr = np.load(path, allow_pickle=False)
        flat = np.asarray(arr).reshape(-1)
        if flat.size != 1:
            raise IngestionError(f"{path}: expected a single judge value, "
                                 f"got {flat.size}")
        value = float(flat[0])
    else:
        try:
            value = float(path.read_text().strip())
        except ValueError as exc:
            raise IngestionError(f"{path}: cannot parse judge value: {exc}") from exc
    if not 0.0 <= value <= 1.0:
        raise IngestionError(f"{path}: judge value {value} outside [0, 1]")
    return value


def load_2afc(root: str | Path) -> list[TripletRecord]:
    """Load and validate every triplet under ``root``; lexicographic order."""
    root = Path(root)
    if not root.is_dir():
        raise IngestionError(f"dataset root {root} is not a directory")
    records: list[TripletRecord] = []
    problems: list[str] = []
    found_any_dir = False
    for display, dirname in CATEGORIES.items():
        cat_dir = root / dirname
        if not cat_dir.is_dir():
            continue
        found_any_dir = True
        ref_dir = cat_dir / "ref"
        refs = sorted(ref_dir.glob("*.png")) if ref_dir.is_dir() else []
        if not refs:
            log.warning("category %s at %s has no triplets", display, cat_dir)
            continue
        for ref in refs:
            stem = ref.stem
            p0 = cat_dir / "p0" / ref.name
            p1 = cat_dir / "p1" / ref.name
            judge_path = None
            for ext in _JUDGE_EXTS:
                cand = cat_dir / "judge" / (stem + ext)
                if cand.is_file():
                    judge_path = cand
                    break
            missing = [str(p) for p in (p0, p1) if not p.is_file()]
            if judge_path is None:
                missing.append(str(cat_dir / "judge" / (stem + ".txt")))
            if missing:
                problems.extend(missing)
                continue
            records.append(TripletRecord(
                ref_path=ref, p0_path=p0, p1_path=p1,
                judge=_read_judge(judge_path), category=display))
    if problems:
        raise IngestionError(
            "dataset is missing files for some triplets:\n  "
            + "\n  ".join(problems[:20])
            + ("" if len(problems) <= 20 else f"\n  ... {len(problems) - 20} more"))
    if not found_any_dir:
        raise IngestionError(
            f"no category directories found under {root} "
            f"(expected some of {sorted(CATEGORIES.values())})")
    records.sort(key=lambda r: str(r.ref_path))
    return records


def score_triplet(d0: float, d1: float, judge: float) -> float:
    """Agreement of a metric's preference with the human vote fraction.

    Returns ``judge`` when the metric prefers p1 (d1 < d0), ``1 - judge``
    when it prefers p0, and 0.5 on an exact tie.
    """
    if d1 < d0:
        return judge
    if d0 < d1:
        return 1.0 - judge
    return 0.5


def subsample_records(records: list[TripletRecord], per_category: int,
                      seed: int) -> list[TripletRecord]:
    """Seeded shuffle-then-prefix within each category; order restored."""
    by_cat: dict[str, list[TripletRecord]] = {}
    for rec in records:
        by_cat.setdefault(rec.category, []).append(rec)
    picked: list[TripletRecord] = []
    for idx, display in enumerate(CATEGORIES):
        group = by_cat.get(display)
        if not group:
            continue
        rng = np.random.default_rng([seed, idx])
        order = rng.permutation(len(group))
        picked.extend(group[i] for i in order[:per_category])
    picked.sort(key=lambda r: str(r.ref_path))
    return picked


@dataclass
class CategoryScore:
    score: float
    count: int


@dataclass
class EvalReport:
    per_category: dict[str, CategoryScore]
    average: float
    metric: dict | str
    dataset_digest: str
    total: int
    subsample: dict | None = None
    timestamp: str | None = None

    def to_json_bytes(self) -> bytes:
        obj = {
            "schema": "mrperc-eval-report/1",
            "metric": self.metric,
            "dataset_digest": self.dataset_digest,
            "records": self.total,
            "subsample": self.subsample,
            "categories": {
                name: {"score": cs.score, "count": cs.count}
                for name, cs in self.per_category.items()
            },
            "average": self.average,
        }
        if self.timestamp is not None:
            obj["timestamp"] = self.timestamp
        return (json.dumps(obj, indent=2) + "\n").encode("utf-8")

    def to_csv(self) -> str:
        lines = ["category,score,count"]
        for name, cs in self.per_category.items():
            lines.append(f"{name:<12},{cs.score:>10.4f},{cs.count:>8d}")
        lines.append(f"{'AVERAGE':<12},{self.average:>10.4f},{self.total:>8d}")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        width = max(len(n) for n in list(self.per_category) + ["AVERAGE"])
        lines = [f"{name:<{width}}  {cs.score:8.2f}  ({cs.count} triplets)"
                 for name, cs in self.per_category.items()]
        lines.append(f"{'AVERAGE':<{width}}  {self.average:8.2f}  "
                     f"({self.total} triplets)")
        return "\n".join(lines) + "\n"


def dataset_digest(records: list[TripletRecord]) -> str:
    h = hashlib.sha256()
    for rec in records:
        h.update(f"{rec.category}/{rec.stem}:{rec.judge!r}\n".encode())
    return "sha256:" + h.hexdigest()


def _triplet_distances(rec: TripletRecord,
                       distance_fn: Callable) -> tuple[float, float]:
    try:
        ref = load_image(rec.ref_path)
        p0 = load_image(rec.p0_path)
        p1 = load_image(rec.p1_path)
    except Exception as exc:
        raise IngestionError(f"triplet {rec.category}/{rec.stem}: {exc}") from exc
    if ref.shape != p0.shape or ref.shape != p1.shape:
        raise IngestionError(
            f"triplet {rec.category}/{rec.stem}: image dims differ "
            f"({ref.shape} / {p0.shape} / {p1.shape})")
    return distance_fn(ref, p0), distance_fn(ref, p1)


def evaluate(records: list[TripletRecord], distance_fn: Callable,
             *, metric_desc: dict | str = "custom", workers: int | None = None,
             subsample: int | None = None, seed: int | None = None,
             stamp: bool = False,
             progress: Callable[[int, int], None] | None = None) -> EvalReport:
    """Score ``distance_fn(ref, img) -> float`` against human judgments.

    Deterministic for a fixed record list, seed, and config; the result does
    not depend on the worker count.
    """
    if subsample is not None:
        if seed is None:
            raise IngestionError("subsample requires a seed")
        records = subsample_records(records, subsample, seed)
    if not records:
        raise IngestionError("no triplets to evaluate")

    scores: list[float | None] = [None] * len(records)

    def work(idx: int) -> None:
        d0, d1 = _triplet_distances(records[idx], distance_fn)
        scores[idx] = score_triplet(d0, d1, records[idx].judge)

    if workers is None or workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for done, _ in enumerate(pool.map(work, range(len(records)))):
                if progress:
                    progress(done + 1, len(records))
    else:
        for idx in range(len(records)):
            work(idx)
            if progress:
                progress(idx + 1, len(records))

    per_category: dict[str, CategoryScore] = {}
    for display in CATEGORIES:
        vals = [s for s, r in zip(scores, records) if r.category == display]
        if vals:
            per_category[display] = CategoryScore(
                score=float(np.mean(np.asarray(vals, dtype=np.float64)) * 100.0),
                count=len(vals))
    average = float(np.mean([cs.score for cs in per_category.values()]))
    return EvalReport(
        per_category=per_category,
        average=average,
        metric=metric_desc,
        dataset_digest=dataset_digest(records),
        total=len(records),
        subsample=(None if subsample is None
                   else {"per_category": subsample, "seed": seed}),
        timestamp=(datetime.now(timezone.utc).isoformat() if stamp else None),
    )


def evaluate_grid(records: list[TripletRecord], store: WeightStore,
                  cells: list[tuple[str, MetricConfig]], *,
                  workers: int | None = None, subsample: int | None = None,
                  seed: int | None = None, stamp: bool = False,
                  progress: Callable[[int, int], None] | None = None,
                  ) -> list[tuple[str, "EvalReport"]]:
    """Evaluate many configs over one record set, sharing forward passes.

    Each image is run through the backbone once per resolution and the
    block features are reused across every grid cell, so an N-cell grid
    costs roughly one evaluation instead of N.  Per-cell results are
    bit-identical to a fresh :func:`evaluate_metric` of that cell.
    """
    if subsample is not None:
        if seed is None:
            raise IngestionError("subsample requires a seed")
        records = subsample_records(records, subsample, seed)
    if not records:
        raise IngestionError("no triplets to evaluate")
    if not cells:
        raise IngestionError("no grid cells to evaluate")

    resolutions: list[str] = []
    for _, config in cells:
        for res in config.resolutions():
            if res not in resolutions:
                resolutions.append(res)

    scores = [[None] * len(records) for _ in cells]

    def work(idx: int) -> None:
        rec = records[idx]
        try:
            ref = load_image(rec.ref_path)
            p0 = load_image(rec.p0_path)
            p1 = load_image(rec.p1_path)
        except Exception as exc:
            raise IngestionError(
                f"triplet {rec.category}/{rec.stem}: {exc}") from exc
        if ref.shape != p0.shape or ref.shape != p1.shape:
            raise IngestionError(
                f"triplet {rec.category}/{rec.stem}: image dims differ")
        blocks_ref = image_blocks(ref, store, resolutions)
        blocks_p0 = image_blocks(p0, store, resolutions)
        blocks_p1 = image_blocks(p1, store, resolutions)
        for c, (_, config) in enumerate(cells):
            d0 = metric_from_blocks(blocks_ref, blocks_p0, config).distance
            d1 = metric_from_blocks(blocks_ref, blocks_p1, config).distance
            scores[c][idx] = score_triplet(d0, d1, rec.judge)

    if workers is None or workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for done, _ in enumerate(pool.map(work, range(len(records)))):
                if progress:
                    progress(done + 1, len(records))
    else:
        for idx in range(len(records)):
            work(idx)
            if progress:
                progress(idx + 1, len(records))

    digest = dataset_digest(records)
    stamp_value = datetime.now(timezone.utc).isoformat() if stamp else None
    results = []
    for c, (name, config) in enumerate(cells):
        per_category: dict[str, CategoryScore] = {}
        for display in CATEGORIES:
            vals = [s for s, r in zip(scores[c], records)
                    if r.category == display]
            if vals:
                per_category[display] = CategoryScore(
                    score=float(np.mean(np.asarray(vals, dtype=np.float64))
                                * 100.0),
                    count=len(vals))
        average = float(np.mean([cs.score for cs in per_category.values()]))
        results.append((name, EvalReport(
            per_category=per_category, average=average,
            metric=config.describe(), dataset_digest=digest,
            total=len(records),
            subsample=(None if subsample is None
                       else {"per_category": subsample, "seed": seed}),
            timestamp=stamp_value)))
    return results


def metric_distance_fn(store: WeightStore, config: MetricConfig) -> Callable:
    """Bind a weight store and config into a ``(ref, img) -> float`` callable."""
    resolutions = config.resolutions()

    def fn(ref, img):
        return metric_from_blocks(image_blocks(ref, store, resolutions),
                                  image_blocks(img, store, resolutions),
                                  config).distance

    return fn


def evaluate_metric(records: list[TripletRecord], store: WeightStore,
                    config: MetricConfig, **kwargs) -> EvalReport:
    """Spec-shaped convenience wrapper around :func:`evaluate`."""
    kwargs.setdefault("metric_desc", config.describe())
    return evaluate(records, metric_distance_fn(store, config), **kwargs)
