"""sRGB (0-255) to CIE L*a*b* conversion, D65 white, 2 degree observer."""

import numpy as np

from .raster_io import RasterImage

# linear sRGB -> XYZ (IEC 61966-2-1, D65)
SRGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)

# White point taken as the image of sRGB white so that gray maps to a = b = 0
# exactly; agrees with the tabulated D65 (0.95047, 1.0, 1.08883) to 1e-7.
WHITE_XYZ = SRGB_TO_XYZ.sum(axis=1)

_DELTA = 6.0 / 29.0


def _srgb_linearize(c: np.ndarray) -> np.ndarray:
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def _lab_f(t: np.ndarray) -> np.ndarray:
    return np.where(
        t > _DELTA**3,
        np.cbrt(t),
        t / (3.0 * _DELTA**2) + 4.0 / 29.0,
    )


def rgb_array_to_lab(rgb: np.ndarray) -> np.ndarray:
    """Convert an array (..., 3) of sRGB values on the 0-255 scale to Lab."""
    linear = _srgb_linearize(np.asarray(rgb, dtype=np.float64) / 255.0)
    xyz = linear @ SRGB_TO_XYZ.T
    fx, fy, fz = np.moveaxis(_lab_f(xyz / WHITE_XYZ), -1, 0)
    L = 116.0 * fy - 16.0
    a = 500.0 * (fx - fy)
    b = 200.0 * (fy - fz)
    return np.stack([L, a, b], axis=-1)


def srgb_to_lab(img: RasterImage) -> RasterImage:
    if img.space != "srgb" or img.channels != 3:
        raise ValueError(
            f"srgb_to_lab needs a 3-channel srgb image, got {img.space} with {img.channels}"
        )
    return RasterImage(rgb_array_to_lab(img.data), "lab")
