"""Correlation benchmark against Segmentation Covering.

For every image with several ground truths, each ground truth is scored as
a candidate segmentation. The supervised reference is the covering matrix
``C[i][j]`` (ground truth ``i`` covered by candidate ``j``); every
unsupervised method yields a matrix of the same shape whose rows are target
scales (the ground truths' own scales) and columns candidates. Methods
that ignore the target scale repeat one row. The per-image accuracy of a
method is the Pearson correlation of its matrix with the covering matrix;
the dataset score is the mean over images where it is defined.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .baselines import UndefinedCorrelation, accuracy, as_matrix, segmentation_covering
from .raster_io import LabelMap, RasterImage, load_image, load_label_map
from .regions import compact_labels
from .scale_quality import MetricConfig, evaluate, scale_ratio

log = logging.getLogger(__name__)

METHODS = ("F", "Q", "FRC", "E", "proposed")
IMAGE_SUFFIXES = (".png", ".ppm", ".pgm")
SEG_SUFFIXES = (".seg", ".png", ".csv", ".pgm")


@dataclass
class ImageResult:
    image_id: str
    covering: np.ndarray
    matrices: dict[str, np.ndarray]
    correlation: dict[str, float | None] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.image_id,
            "covering": self.covering.tolist(),
            "matrices": {k: v.tolist() for k, v in self.matrices.items()},
            "correlation": dict(self.correlation),
        }


def thread_count() -> int:
    raw = os.environ.get("SEGEVAL_THREADS", "0").strip() or "0"
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"SEGEVAL_THREADS must be an integer, got {raw!r}") from None
    if value < 0:
        raise ValueError("SEGEVAL_THREADS must be >= 0")
    return value or (os.cpu_count() or 1)


def discover(root: str | os.PathLike) -> list[tuple[str, Path, list[Path]]]:
    """List ``(image_id, image_path, ground_truth_paths)`` under ``root``.

    Layout: ``images/<id>.(png|ppm|pgm)`` and ``segs/<id>/<k>.(seg|png|csv|pgm)``.
    """
    root = Path(root)
    images_dir = root / "images"
    if not images_dir.is_dir():
        raise FileNotFoundError(f"{images_dir} is not a directory")
    entries = []
    for image_path in sorted(images_dir.iterdir()):
        if image_path.suffix.lower() not in IMAGE_SUFFIXES:
            continue
        image_id = image_path.stem
        seg_dir = root / "segs" / image_id
        segs = []
        if seg_dir.is_dir():
            segs = sorted(p for p in seg_dir.iterdir() if p.suffix.lower() in SEG_SUFFIXES)
        entries.append((image_id, image_path, segs))
    return entries


def correlate(covering: np.ndarray, matrices: dict[str, np.ndarray]) -> dict[str, float | None]:
    out: dict[str, float | None] = {}
    for name, matrix in matrices.items():
        try:
            out[name] = accuracy(matrix, covering)
        except UndefinedCorrelation:
            out[name] = None
    return out


def image_matrices(
    img: RasterImage, truths: Sequence[LabelMap], cfg: MetricConfig | None = None
) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Covering matrix and per-method matrices for one image."""
    truths = [compact_labels(lm)[0] for lm in truths]
    k = len(truths)
    covering = np.array(
        [[segmentation_covering(truths[j], truths[i]) for j in range(k)] for i in range(k)]
    )
    reports = [evaluate(img, lm, cfg=cfg, with_baselines=True) for lm in truths]
    scales = [r.scale for r in reports]
    # undefined q0 -> NaN, which makes the correlation undefined for this image
    proposed = np.full((k, k), np.nan)
    for j, r in enumerate(reports):
        if r.q0 is None:
            continue
        for i, st in enumerate(scales):
            proposed[i, j] = r.q0 * scale_ratio(r.scale, st)
    matrices = {name: as_matrix([r.baselines[name] for r in reports], k) for name in METHODS[:4]}
    matrices["proposed"] = proposed
    return covering, matrices


def _run_one(entry, cfg: MetricConfig | None) -> ImageResult:
    image_id, image_path, seg_paths = entry
    if len(seg_paths) < 2:
        raise ValueError(f"needs at least 2 ground truths, found {len(seg_paths)}")
    img = load_image(image_path)
    truths = [load_label_map(p, img.width, img.height) for p in seg_paths]
    covering, matrices = image_matrices(img, truths, cfg)
    return ImageResult(image_id, covering, matrices, correlate(covering, matrices))


def summarize(results: Sequence[ImageResult], failures: Sequence[dict] = ()) -> dict[str, Any]:
    methods: list[str] = []
    for res in results:
        for name in res.correlation:
            if name not in methods:
                methods.append(name)
    mean: dict[str, float | None] = {}
    counts: dict[str, int] = {}
    excluded: dict[str, list[str]] = {}
    for name in methods:
        values = [res.correlation.get(name) for res in results]
        defined = [v for v in values if v is not None]
        counts[name] = len(defined)
        excluded[name] = [res.image_id for res, v in zip(results, values) if v is None]
        mean[name] = float(np.mean(defined)) if defined else None
    return {
        "images": [res.to_dict() for res in results],
        "mean": mean,
        "counts": counts,
        "excluded": excluded,
        "failed": list(failures),
    }


def run_dataset(
    root: str | os.PathLike, cfg: MetricConfig | None = None, threads: int | None = None
) -> dict[str, Any]:
    entries = discover(root)
    if not entries:
        raise ValueError(f"no images found under {root}")
    threads = threads or thread_count()

    def attempt(entry):
        try:
            return _run_one(entry, cfg), None
        except (OSError, ValueError) as exc:
            log.warning("skipping %s: %s", entry[0], exc)
            return None, {"id": entry[0], "error": str(exc)}

    with ThreadPoolExecutor(max_workers=threads) as pool:
        outcomes = list(pool.map(attempt, entries))
    results = [r for r, _ in outcomes if r is not None]
    failures = [f for _, f in outcomes if f is not None]
    return summarize(results, failures)


def run_from_matrices(spec: dict[str, Any]) -> dict[str, Any]:
    """Benchmark precomputed matrices.

    ``spec`` is ``{"images": [{"id", "covering": [[...]], "methods":
    {name: [[...]] or [...]}}]}``; 1-D method entries are replicated over
    the covering matrix's rows.
    """
    images = spec.get("images")
    if not images:
        raise ValueError("matrix file lists no images")
    results = []
    for idx, item in enumerate(images):
        covering = as_matrix(item["covering"])
        if covering.shape[0] != covering.shape[1]:
            raise ValueError(f"image {idx}: covering matrix must be square")
        matrices = {
            name: as_matrix(values, covering.shape[0]) for name, values in item["methods"].items()
        }
        image_id = str(item.get("id", idx))
        results.append(ImageResult(image_id, covering, matrices, correlate(covering, matrices)))
    return summarize(results)
