"""Scale-constrained segmentation quality.

Intra-region homogeneity (regional saliency) and inter-region heterogeneity
(merging cost between adjacent regions) are both converted into an
equivalent spectral distance: the contrast ``t`` of a reference region of
area ``s**2`` that would produce the same saliency or merging cost. Their
ratio gives the absolute quality ``q0``, calibrated to 1 on a linear
gradient cut into equal columns. Relative quality ``qt`` discounts ``q0``
by how far the segmentation's scale is from a target scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .baselines import all_baselines
from .color import srgb_to_lab
from .raster_io import LabelMap, QualityReport, RasterImage
from .regions import (
    AdjacencyGraph,
    RegionStats,
    build_adjacency,
    compact_labels,
    enforce_connectivity,
    region_stats,
)
from .saliency import BORDERS, region_saliency, saliency_map

# mean per-pixel saliency of a half-0 / half-t square is FIT_CONSTANT * t
DEFAULT_FIT_CONSTANT = 0.515
IDEAL_FIT_CONSTANT = 0.5


@dataclass(frozen=True)
class MetricConfig:
    """Knobs of the quality model.

    ``spectral_space=None`` picks Lab for 3-channel input and the native
    0-255 scale for 1-channel input. ``blur_border=None`` picks the
    saliency module's per-mode default.
    """

    fit_constant: float = DEFAULT_FIT_CONSTANT
    saliency_mode: str = "region"
    spectral_space: str | None = None
    connectivity: int = 4
    epsilon: float = 1e-12
    enforce_connectivity: bool = False
    blur_border: str | None = None

    def __post_init__(self):
        if not self.fit_constant > 0:
            raise ValueError("fit_constant must be positive")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.saliency_mode not in ("region", "global"):
            raise ValueError(f"saliency_mode must be region|global, got {self.saliency_mode!r}")
        if self.spectral_space not in (None, "native", "lab"):
            raise ValueError(f"spectral_space must be native|lab, got {self.spectral_space!r}")
        if self.connectivity not in (4, 8):
            raise ValueError(f"connectivity must be 4 or 8, got {self.connectivity}")
        if self.blur_border not in (None, *BORDERS):
            raise ValueError(f"blur_border must be one of {BORDERS}")

    def with_(self, **changes) -> "MetricConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class ScaleQuality:
    n: int
    scale: float
    d_intra: float
    d_inter: float | None
    q0: float | None


def merging_cost(stats_i: RegionStats, stats_j: RegionStats, c: int) -> float:
    """Area-weighted squared mean distance, per channel."""
    if c <= 0:
        raise ValueError("channel count must be positive")
    mi = np.asarray(stats_i.mean, dtype=np.float64)
    mj = np.asarray(stats_j.mean, dtype=np.float64)
    if mi.shape != (c,) or mj.shape != (c,):
        raise ValueError(f"mean vectors must have dimension {c}")
    ni, nj = stats_i.area, stats_j.area
    return float(ni * nj / (ni + nj) * np.sum((mi - mj) ** 2) / c)


def weight_graph(g: AdjacencyGraph, stats: Sequence[RegionStats], c: int) -> AdjacencyGraph:
    if g.edge_count and int(g.edges.max()) >= len(stats):
        raise ValueError(f"graph references region {int(g.edges.max())}, only {len(stats)} stats")
    weights = np.array(
        [merging_cost(stats[a], stats[b], c) for a, b in g.edges], dtype=np.float64
    )
    return AdjacencyGraph(g.region_count, g.edges, weights)


def global_cost(g: AdjacencyGraph) -> float | None:
    """Mean edge weight, or ``None`` for a graph without edges."""
    if g.weights is None:
        raise ValueError("graph is not weighted")
    if g.edge_count == 0:
        return None
    return float(np.mean(g.weights))


def scale_of(N: int, n: int) -> float:
    if n < 1:
        raise ValueError("region count must be at least 1")
    if N < n:
        raise ValueError(f"pixel count {N} below region count {n}")
    return math.sqrt(N / n)


def standardize_saliency(sal_i: float, s: float, cfg: MetricConfig | None = None) -> float:
    fit = (cfg or MetricConfig()).fit_constant
    if s <= 0:
        raise ValueError("scale must be positive")
    return sal_i / (fit * s * s)


def standardize_cost(cost_i: float, s: float) -> float:
    if s <= 0:
        raise ValueError("scale must be positive")
    if cost_i < 0:
        raise ValueError("merging cost must be non-negative")
    return math.sqrt(2.0 * cost_i) / s


def intra_distance(stats: Sequence[RegionStats], s: float, cfg: MetricConfig | None = None) -> float:
    """Unweighted mean over regions of the standardized regional saliency."""
    if len(stats) == 0:
        raise ValueError("no regions")
    return float(np.mean([standardize_saliency(st.saliency_sum, s, cfg) for st in stats]))


def inter_distance(g: AdjacencyGraph, s: float) -> float | None:
    """Mean over edges of the standardized merging cost (not the cost mean, standardized)."""
    if g.weights is None:
        raise ValueError("graph is not weighted")
    if g.edge_count == 0:
        return None
    return float(np.mean([standardize_cost(w, s) for w in g.weights]))


def absolute_quality(
    d_intra: float, d_inter: float | None, epsilon: float = 1e-12
) -> float | None:
    """``d_inter / (2 d_intra)``.

    ``None`` if ``d_inter`` is undefined or both distances vanish;
    ``math.inf`` if only ``d_intra`` vanishes.
    """
    if d_inter is None:
        return None
    if d_intra < epsilon:
        return math.inf if d_inter >= epsilon else None
    return d_inter / (2.0 * d_intra)


def scale_ratio(s: float, s_t: float) -> float:
    if s <= 0 or s_t <= 0:
        raise ValueError("scales must be positive")
    return min(s, s_t) / max(s, s_t)


def relative_quality(q0: float, s: float, s_t: float) -> float:
    return q0 * scale_ratio(s, s_t)


def _relative_or_sentinel(q0: float | None, s: float, s_t: float) -> float | None:
    ratio = scale_ratio(s, s_t)
    if q0 is None:
        return None
    if math.isinf(q0):
        return q0
    return q0 * ratio


def to_spectral_space(img: RasterImage, cfg: MetricConfig) -> RasterImage:
    space = cfg.spectral_space or ("lab" if img.channels == 3 else "native")
    if space == "native" or img.space == "lab":
        return img
    if img.space == "gray":
        img = RasterImage(np.repeat(img.data, 3, axis=2), "srgb")
    return srgb_to_lab(img)


def prepare_labels(lm: LabelMap, cfg: MetricConfig) -> LabelMap:
    lm, _ = compact_labels(lm)
    if cfg.enforce_connectivity:
        lm = enforce_connectivity(lm, cfg.connectivity)
    return lm


def scale_quality(img: RasterImage, lm: LabelMap, cfg: MetricConfig | None = None) -> ScaleQuality:
    """Absolute quality of ``lm`` on ``img``.

    ``img`` must already be in the working spectral space and ``lm``
    compacted; :func:`evaluate` takes care of both.
    """
    cfg = cfg or MetricConfig()
    stats = region_stats(img, lm)
    sal = saliency_map(img, cfg.saliency_mode, lm, cfg.blur_border)
    region_saliency(sal, lm, stats)
    graph = weight_graph(build_adjacency(lm, cfg.connectivity), stats, img.channels)
    n = len(stats)
    s = scale_of(img.size, n)
    d_intra = intra_distance(stats, s, cfg)
    d_inter = inter_distance(graph, s)
    q0 = absolute_quality(d_intra, d_inter, cfg.epsilon)
    return ScaleQuality(n, s, d_intra, d_inter, q0)


def evaluate(
    img: RasterImage,
    lm: LabelMap,
    target_scales: Sequence[float] = (),
    cfg: MetricConfig | None = None,
    image_id: str = "",
    with_baselines: bool = False,
) -> QualityReport:
    """Score one segmentation end to end.

    Converts to the working spectral space, computes saliency, region
    statistics and the weighted adjacency graph, then the scale, the two
    standardized distances, ``q0`` and one ``qt`` per target scale.
    Baseline metrics, when requested, are computed on the unconverted image.
    """
    cfg = cfg or MetricConfig()
    if (img.height, img.width) != (lm.height, lm.width):
        raise ValueError(
            f"label map {lm.width}x{lm.height} does not match image {img.width}x{img.height}"
        )
    lm = prepare_labels(lm, cfg)
    work = to_spectral_space(img, cfg)
    sq = scale_quality(work, lm, cfg)
    relative = [(float(st), _relative_or_sentinel(sq.q0, sq.scale, float(st))) for st in target_scales]
    baselines = None
    if with_baselines:
        baselines = all_baselines(img, lm, cfg.connectivity)
    return QualityReport(
        image_id=image_id,
        n=sq.n,
        scale=sq.scale,
        d_intra=sq.d_intra,
        d_inter=sq.d_inter,
        q0=sq.q0,
        relative=relative,
        baselines=baselines,
    )
