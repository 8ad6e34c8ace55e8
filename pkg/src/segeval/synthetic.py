"""Analytic fixtures that calibrate the quality model.

Two experiments are provided. :func:`table1_experiment` scores a 256x256
horizontal gray ramp cut into ``n`` equal column strips; for every ``n``
the inter-region distance should be twice the intra-region distance, i.e.
``q0 == 1``. :func:`fit_saliency_constant` measures how the mean per-pixel
saliency of a half-black, half-``t`` square grows with ``t``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .raster_io import LabelMap, RasterImage
from .saliency import saliency_map
from .scale_quality import IDEAL_FIT_CONSTANT, MetricConfig, evaluate

TABLE1_SPLITS = (2, 4, 8, 16, 32, 64, 128, 256)


def gradient_image(width: int = 256, height: int = 256) -> RasterImage:
    """Gray ramp whose column ``x`` has value ``round(x * 255 / (width - 1))``."""
    if width < 2:
        raise ValueError("gradient width must be at least 2")
    if height < 1:
        raise ValueError("gradient height must be at least 1")
    row = np.rint(np.arange(width) * 255.0 / (width - 1))
    return RasterImage.gray(np.tile(row, (height, 1)))


def split_columns(width: int, height: int, n: int) -> LabelMap:
    if n < 1 or width % n:
        raise ValueError(f"{n} does not divide width {width}")
    labels = np.arange(width) * n // width
    return LabelMap(np.tile(labels, (height, 1)))


def half_contrast_square(s: int, t: float) -> tuple[RasterImage, LabelMap]:
    """``s``x``s`` square, left half 0 and right half ``t``, as one region."""
    if s < 2 or s % 2:
        raise ValueError(f"side must be even and >= 2, got {s}")
    if not 0 <= t <= 255:
        raise ValueError(f"gray value must be within [0, 255], got {t}")
    data = np.zeros((s, s))
    data[:, s // 2 :] = t
    return RasterImage.gray(data), LabelMap(np.zeros((s, s), dtype=np.int64))


@dataclass(frozen=True)
class GradientFixture:
    image: RasterImage
    splits: dict[int, LabelMap]

    @classmethod
    def build(cls, splits: Iterable[int] = TABLE1_SPLITS, size: int = 256) -> "GradientFixture":
        return cls(gradient_image(size, size), {n: split_columns(size, size, n) for n in splits})


def fit_saliency_constant(
    sides: Iterable[int] = (32, 64, 128),
    ts: Iterable[float] = tuple(range(20, 241, 20)),
    blur: bool = True,
) -> tuple[float, float]:
    """Zero-intercept least-squares slope of mean pixel saliency against ``t``.

    Each half-contrast square is treated as its own image (global-mode
    saliency). Returns ``(slope, r_squared)``; with ``blur=False`` every
    pixel sits exactly ``t/2`` from the mean, so the slope is 0.5.
    """
    ts = [float(t) for t in ts]
    sides = list(sides)
    if len({t for t in ts if t > 0}) < 3 or any(t <= 0 for t in ts):
        raise ValueError("need at least three distinct positive contrasts")
    if not sides:
        raise ValueError("need at least one side length")
    xs, ys = [], []
    for s in sides:
        for t in ts:
            img, _ = half_contrast_square(s, t)
            if blur:
                sal = saliency_map(img, "global").values
            else:
                sal = np.abs(img.data[:, :, 0] - img.data.mean())
            xs.append(t)
            ys.append(float(sal.mean()))
    x = np.array(xs)
    y = np.array(ys)
    slope = float(x @ y / (x @ x))
    resid = y - slope * x
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss_tot
    return slope, r2


def table1_config() -> MetricConfig:
    return MetricConfig(
        fit_constant=IDEAL_FIT_CONSTANT, saliency_mode="region", spectral_space="native"
    )


def table1_experiment(
    cfg: MetricConfig | None = None, splits: Iterable[int] = TABLE1_SPLITS
) -> dict[int, tuple[float, float | None, float | None]]:
    """Map each split count ``n`` to ``(d_intra, d_inter, q0)`` on the gradient."""
    cfg = cfg or table1_config()
    fixture = GradientFixture.build(splits)
    out = {}
    for n, lm in fixture.splits.items():
        report = evaluate(fixture.image, lm, cfg=cfg)
        out[n] = (report.d_intra, report.d_inter, report.q0)
    return out
