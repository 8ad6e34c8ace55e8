"""Classical unsupervised metrics, Segmentation Covering, and correlation.

F (Liu & Yang) and Q (Borsotti et al.) penalize intra-region colour error
and region count, lower is better. F_RC (Rosenberger & Chehdi) contrasts
inter- and intra-region disparity, higher is better. E (Zhang et al.) sums
region entropy and layout entropy, lower is better.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .raster_io import LabelMap, RasterImage
from .regions import AdjacencyGraph, build_adjacency, region_areas, region_means

# ITU-R BT.601 luma, used to quantize colour images for the entropy metric
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


class UndefinedCorrelation(ValueError):
    """Pearson correlation is undefined (a constant input)."""


def _squared_errors(img: RasterImage, lm: LabelMap) -> tuple[np.ndarray, np.ndarray]:
    """Per-region area and sum of squared distances to the region mean."""
    areas = region_areas(lm)
    means = region_means(img, lm)
    flat = lm.labels.ravel()
    pixels = img.data.reshape(-1, img.channels)
    sq = np.sum((pixels - means[flat]) ** 2, axis=1)
    return areas, np.bincount(flat, weights=sq, minlength=len(areas))


def metric_f(img: RasterImage, lm: LabelMap) -> float:
    areas, e2 = _squared_errors(img, lm)
    nz = areas > 0
    N = lm.size
    n = int(nz.sum())
    return float(math.sqrt(n) * np.sum(e2[nz] / np.sqrt(areas[nz])) / (1000.0 * N))


def metric_q(img: RasterImage, lm: LabelMap) -> float:
    areas, e2 = _squared_errors(img, lm)
    nz = areas > 0
    areas, e2 = areas[nz], e2[nz]
    N = lm.size
    n = len(areas)
    # R(A): number of regions having exactly area A
    _, inverse, counts = np.unique(areas, return_inverse=True, return_counts=True)
    same_area = counts[inverse]
    terms = e2 / (1.0 + np.log10(areas)) + (same_area / areas) ** 2
    return float(math.sqrt(n) * np.sum(terms) / (10000.0 * N))


def metric_frc(img: RasterImage, lm: LabelMap, g: AdjacencyGraph | None = None) -> float:
    """Half the gap between mean inter-region and mean intra-region disparity.

    Intra disparity of a region is the RMS distance of its pixels to its
    mean; inter disparity is the average mean-to-mean distance to its
    neighbours (0 for isolated regions).
    """
    if g is None:
        g = build_adjacency(lm)
    areas, e2 = _squared_errors(img, lm)
    means = region_means(img, lm)
    n = len(areas)
    d_intra = float(np.mean(np.sqrt(e2 / areas)))
    inter = np.zeros(n)
    for i, nbrs in enumerate(g.neighbors()):
        if nbrs:
            inter[i] = np.mean(np.linalg.norm(means[nbrs] - means[i], axis=1))
    return 0.5 * (float(np.mean(inter)) - d_intra)


def luminance_levels(img: RasterImage) -> np.ndarray:
    """Integer gray levels 0..255 of an image (BT.601 luma for colour)."""
    if img.channels == 1:
        gray = img.data[:, :, 0]
    else:
        gray = img.data @ LUMA_WEIGHTS
    return np.clip(np.rint(gray), 0, 255).astype(np.int64)


def entropy_terms(img: RasterImage, lm: LabelMap) -> tuple[float, float]:
    """``(region_entropy, layout_entropy)`` in nats."""
    levels = luminance_levels(img).ravel()
    flat = lm.labels.ravel()
    N = flat.size
    n = int(flat.max()) + 1
    hist = np.bincount(flat * 256 + levels, minlength=n * 256).reshape(n, 256).astype(np.float64)
    areas = hist.sum(axis=1)
    nz = areas > 0
    hist, areas = hist[nz], areas[nz]
    p = hist / areas[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(p > 0, p * np.log(p), 0.0)
    region_h = -plogp.sum(axis=1)
    w = areas / N
    h_region = float(np.sum(w * region_h))
    h_layout = float(-np.sum(w * np.log(w)))
    return h_region, h_layout


def metric_e(img: RasterImage, lm: LabelMap) -> float:
    """Region entropy plus layout entropy, natural logarithm."""
    h_region, h_layout = entropy_terms(img, lm)
    return h_region + h_layout


def all_baselines(img: RasterImage, lm: LabelMap, connectivity: int = 4) -> dict[str, float]:
    g = build_adjacency(lm, connectivity)
    return {
        "E": metric_e(img, lm),
        "F": metric_f(img, lm),
        "FRC": metric_frc(img, lm, g),
        "Q": metric_q(img, lm),
    }


def segmentation_covering(candidate: LabelMap, reference: LabelMap) -> float:
    """How well ``candidate`` covers ``reference``.

    Each reference region contributes its area times its best Jaccard
    overlap with any candidate region; the total is divided by the image
    area.
    """
    if candidate.labels.shape != reference.labels.shape:
        raise ValueError(
            f"shape mismatch: candidate {candidate.labels.shape} vs reference {reference.labels.shape}"
        )
    _, cand = np.unique(candidate.labels.ravel(), return_inverse=True)
    _, ref = np.unique(reference.labels.ravel(), return_inverse=True)
    nc, nr = int(cand.max()) + 1, int(ref.max()) + 1
    inter = np.bincount(ref * nc + cand, minlength=nr * nc).reshape(nr, nc).astype(np.float64)
    ref_area = inter.sum(axis=1)
    cand_area = inter.sum(axis=0)
    union = ref_area[:, None] + cand_area[None, :] - inter
    best = (inter / union).max(axis=1)
    # exactly rounded sum: result does not depend on region order
    return math.fsum(ref_area * best) / cand.size


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise ValueError("need at least two samples")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise UndefinedCorrelation("non-finite input")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelation("zero variance")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def as_matrix(values, rows: int | None = None) -> np.ndarray:
    """A metric matrix; a 1-D score vector is replicated over ``rows`` rows."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 1:
        arr = np.tile(arr, (rows or arr.size, 1))
    if arr.ndim != 2:
        raise ValueError(f"metric matrix must be 1-D or 2-D, got shape {arr.shape}")
    return arr


def accuracy(metric_matrix, covering_matrix) -> float:
    """Pearson correlation between a method's matrix and the covering matrix.

    Rows index ground truths (target scales), columns candidate
    segmentations. A scale-blind method passes a single score vector,
    which is replicated across rows.
    """
    cover = as_matrix(covering_matrix)
    metric = as_matrix(metric_matrix, cover.shape[0])
    if metric.shape != cover.shape:
        raise ValueError(f"shape mismatch: {metric.shape} vs {cover.shape}")
    return pearson(metric.ravel(), cover.ravel())
