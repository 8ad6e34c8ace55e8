"""Scale-constrained unsupervised evaluation of image segmentations."""

from .baselines import (
    accuracy,
    metric_e,
    metric_f,
    metric_frc,
    metric_q,
    pearson,
    segmentation_covering,
)
from .color import srgb_to_lab
from .raster_io import (
    LabelMap,
    QualityReport,
    RasterImage,
    load_image,
    load_label_map,
    write_gray_pgm,
    write_report,
)
from .regions import build_adjacency, compact_labels, enforce_connectivity, region_stats
from .saliency import binomial_blur5, region_saliency, saliency_map
from .scale_quality import (
    MetricConfig,
    absolute_quality,
    evaluate,
    relative_quality,
    scale_of,
)

__all__ = [
    "LabelMap",
    "MetricConfig",
    "QualityReport",
    "RasterImage",
    "absolute_quality",
    "accuracy",
    "binomial_blur5",
    "build_adjacency",
    "compact_labels",
    "enforce_connectivity",
    "evaluate",
    "load_image",
    "load_label_map",
    "metric_e",
    "metric_f",
    "metric_frc",
    "metric_q",
    "pearson",
    "region_saliency",
    "region_stats",
    "relative_quality",
    "saliency_map",
    "scale_of",
    "segmentation_covering",
    "srgb_to_lab",
    "write_gray_pgm",
    "write_report",
]
