"""Frequency-tuned saliency.

A pixel's saliency is the Euclidean distance between a reference mean
vector and the pixel's value after a 5-tap binomial blur. In ``global``
mode the reference is the whole-image mean; in ``region`` mode every region
is treated as an image of its own: its mean is the region mean and the blur
only sees the region's pixels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .raster_io import LabelMap, RasterImage

BINOMIAL5_TAPS = (1.0, 4.0, 6.0, 4.0, 1.0)
BINOMIAL5 = np.array(BINOMIAL5_TAPS) / 16.0

BORDERS = ("replicate", "linear")


@dataclass(frozen=True)
class SaliencyMap:
    values: np.ndarray

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


def _pad_axis(arr: np.ndarray, axis: int, border: str) -> np.ndarray:
    widths = [(0, 0)] * arr.ndim
    widths[axis] = (2, 2)
    if border == "replicate":
        return np.pad(arr, widths, mode="edge")
    if border == "linear":
        # point reflection about the edge sample: affine data stays affine
        return np.pad(arr, widths, mode="reflect", reflect_type="odd")
    raise ValueError(f"border must be one of {BORDERS}, got {border!r}")


def _blur_axis(arr: np.ndarray, axis: int, border: str) -> np.ndarray:
    padded = _pad_axis(arr, axis, border)
    size = arr.shape[axis]
    out = np.zeros_like(arr)
    # integer taps, one division: integer-valued inputs blur without rounding
    for offset, weight in enumerate(BINOMIAL5_TAPS):
        out += weight * np.take(padded, np.arange(offset, offset + size), axis=axis)
    return out / 16.0


def blur_array(data: np.ndarray, border: str = "replicate") -> np.ndarray:
    """Separable [1, 4, 6, 4, 1]/16 blur of an (H, W, C) array, rows then columns."""
    return _blur_axis(_blur_axis(data, 1, border), 0, border)


def binomial_blur5(img: RasterImage, border: str = "replicate") -> RasterImage:
    """Blur with the binomial kernel horizontally, then vertically.

    ``border="replicate"`` repeats edge pixels. ``border="linear"`` extends the
    image by odd reflection, which reproduces linear ramps up to the border.
    """
    return RasterImage(blur_array(img.data, border), img.space)


def mean_vector(img: RasterImage, mask: np.ndarray | None = None) -> np.ndarray:
    pixels = img.data.reshape(-1, img.channels)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (img.height, img.width):
            raise ValueError(f"mask shape {mask.shape} does not match image")
        if not mask.any():
            raise ValueError("mask is empty")
        pixels = pixels[mask.ravel()]
    return pixels.mean(axis=0)


def _fill_outside(crop: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Replace pixels outside ``mask`` with the nearest in-mask pixel."""
    if mask.all():
        return crop
    _, (iy, ix) = ndimage.distance_transform_edt(~mask, return_indices=True)
    return crop[iy, ix]


def region_mode_saliency(data: np.ndarray, labels: np.ndarray, border: str = "linear") -> np.ndarray:
    out = np.zeros(labels.shape, dtype=np.float64)
    for label, sl in enumerate(ndimage.find_objects(labels + 1)):
        if sl is None:
            continue
        mask = labels[sl] == label
        crop = data[sl]
        inside = crop[mask]
        if np.all(inside == inside[0]):
            continue
        mu = inside.mean(axis=0)
        blurred = blur_array(_fill_outside(crop, mask), border)
        dist = np.sqrt(np.sum((blurred[mask] - mu) ** 2, axis=-1))
        out[sl][mask] = dist
    return out


def saliency_map(
    img: RasterImage,
    mode: str = "region",
    lm: LabelMap | None = None,
    border: str | None = None,
) -> SaliencyMap:
    """Per-pixel saliency ``||mean - blurred(x, y)||``.

    ``border`` defaults to ``"replicate"`` in global mode and ``"linear"`` in
    region mode, where crops are often only a few pixels wide.
    """
    if mode == "global":
        blurred = blur_array(img.data, border or "replicate")
        mu = img.data.reshape(-1, img.channels).mean(axis=0)
        values = np.sqrt(np.sum((blurred - mu) ** 2, axis=-1))
    elif mode == "region":
        if lm is None:
            raise ValueError("region-mode saliency requires a label map")
        if (lm.height, lm.width) != (img.height, img.width):
            raise ValueError("label map does not match image dimensions")
        values = region_mode_saliency(img.data, lm.labels, border or "linear")
    else:
        raise ValueError(f"saliency mode must be 'global' or 'region', got {mode!r}")
    return SaliencyMap(values)


def region_saliency(sal: SaliencyMap, lm: LabelMap, stats=None) -> np.ndarray:
    """Sum the saliency map over each region.

    Returns the per-region sums; when ``stats`` (a list of ``RegionStats``)
    is given, their ``saliency_sum`` fields are filled in as well.
    """
    if sal.values.shape != lm.labels.shape:
        raise ValueError(
            f"saliency map shape {sal.values.shape} does not match labels {lm.labels.shape}"
        )
    sums = np.bincount(lm.labels.ravel(), weights=sal.values.ravel())
    if stats is not None:
        if len(stats) != len(sums):
            raise ValueError(f"{len(stats)} stats for {len(sums)} regions")
        for st, total in zip(stats, sums):
            st.saliency_sum = float(total)
    return sums
