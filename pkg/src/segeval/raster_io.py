"""Image and label-map loading, report serialization, PGM dumps.

Images are held as float64 arrays of shape (height, width, channels) and
label maps as int64 arrays of shape (height, width); both are row-major.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from PIL import Image

SPACES = ("srgb", "gray", "lab")
MAX_LABEL = 2**31 - 1


class RasterFormatError(ValueError):
    """An image or label file could not be decoded."""


class LabelParseError(RasterFormatError):
    """A label file is malformed; carries the offending line when known."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


@dataclass(frozen=True)
class RasterImage:
    data: np.ndarray
    space: str

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 2:
            data = data[:, :, None]
        if data.ndim != 3 or data.shape[2] not in (1, 3):
            raise ValueError(f"image data must be (H, W, 1|3), got shape {data.shape}")
        if self.space not in SPACES:
            raise ValueError(f"unknown space tag {self.space!r}")
        if self.space == "gray" and data.shape[2] != 1:
            raise ValueError("gray images must have 1 channel")
        if self.space in ("srgb", "lab") and data.shape[2] != 3:
            raise ValueError(f"{self.space} images must have 3 channels")
        if not np.all(np.isfinite(data)):
            raise ValueError("image contains non-finite values")
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def size(self) -> int:
        return self.height * self.width

    @classmethod
    def gray(cls, values) -> "RasterImage":
        return cls(np.asarray(values, dtype=np.float64), "gray")


@dataclass(frozen=True)
class LabelMap:
    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2:
            raise ValueError(f"label map must be 2-D, got shape {labels.shape}")
        if labels.size == 0:
            raise ValueError("label map is empty")
        if labels.dtype.kind not in "iu":
            if not np.all(np.equal(np.mod(labels, 1), 0)):
                raise ValueError("labels must be integers")
        labels = labels.astype(np.int64)
        if labels.min() < 0:
            raise ValueError("labels must be non-negative")
        object.__setattr__(self, "labels", labels)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def size(self) -> int:
        return self.labels.size

    @property
    def region_count(self) -> int:
        return int(np.unique(self.labels).size)


@dataclass
class QualityReport:
    """Scores of one segmentation.

    ``q0`` is ``None`` when undefined (a single region, or 0/0) and
    ``math.inf`` when the segmentation has zero intra-region distance but
    positive inter-region distance. ``relative`` holds ``(target_scale, qt)``
    pairs in the order the targets were given.
    """

    image_id: str
    n: int
    scale: float
    d_intra: float
    d_inter: float | None
    q0: float | None
    relative: list[tuple[float, float | None]] = field(default_factory=list)
    baselines: dict[str, float] | None = None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "image_id": self.image_id,
            "n": int(self.n),
            "scale": self.scale,
            "d_intra": self.d_intra,
            "d_inter": self.d_inter,
            "q0": self.q0,
            "relative": [{"target_scale": st, "qt": qt} for st, qt in self.relative],
        }
        if self.baselines is not None:
            out["baselines"] = dict(self.baselines)
        return out


# ---------------------------------------------------------------------------
# Netpbm
# ---------------------------------------------------------------------------

def _netpbm_tokens(raw: bytes, count: int, start: int) -> tuple[list[int], int]:
    """Read ``count`` whitespace-separated integers, skipping ``#`` comments."""
    values = []
    pos = start
    end = len(raw)
    while len(values) < count:
        while pos < end and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < end and raw[pos : pos + 1] == b"#":
            while pos < end and raw[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        if pos >= end:
            raise RasterFormatError(
                f"truncated netpbm data: expected {count} values, found {len(values)}"
            )
        tok_start = pos
        while pos < end and not raw[pos : pos + 1].isspace() and raw[pos : pos + 1] != b"#":
            pos += 1
        token = raw[tok_start:pos]
        if not token.isdigit():
            raise RasterFormatError(f"invalid netpbm token {token[:20]!r}")
        values.append(int(token))
    return values, pos


def _read_netpbm(raw: bytes) -> tuple[np.ndarray, int]:
    """Decode P2/P3/P5/P6; returns (H, W, C) integer array and maxval."""
    magic = raw[:2]
    if magic not in (b"P2", b"P3", b"P5", b"P6"):
        raise RasterFormatError(f"unsupported netpbm magic {magic!r}")
    channels = 3 if magic in (b"P3", b"P6") else 1
    (width, height, maxval), pos = _netpbm_tokens(raw, 3, 2)
    if width < 1 or height < 1:
        raise RasterFormatError(f"invalid netpbm dimensions {width}x{height}")
    if not 1 <= maxval <= 65535:
        raise RasterFormatError(f"invalid netpbm maxval {maxval}")
    count = width * height * channels
    if magic in (b"P2", b"P3"):
        values, _ = _netpbm_tokens(raw, count, pos)
        arr = np.array(values, dtype=np.int64)
    else:
        # exactly one whitespace byte separates the header from the raster
        pos += 1
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        body = raw[pos : pos + count * dtype.itemsize]
        if len(body) < count * dtype.itemsize:
            raise RasterFormatError(
                f"truncated netpbm raster: expected {count * dtype.itemsize} bytes, "
                f"found {len(body)}"
            )
        arr = np.frombuffer(body, dtype=dtype).astype(np.int64)
    if arr.max(initial=0) > maxval:
        raise RasterFormatError(f"netpbm sample exceeds maxval {maxval}")
    return arr.reshape(height, width, channels), maxval


def _is_netpbm(raw: bytes) -> bool:
    return raw[:1] == b"P" and raw[1:2] in b"123456"


def _decode_png(path: Path) -> Image.Image:
    try:
        im = Image.open(path)
        im.load()
    except (OSError, SyntaxError) as exc:
        raise RasterFormatError(f"{path}: cannot decode image ({exc})") from exc
    return im


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------

def load_image(path: str | os.PathLike) -> RasterImage:
    """Load an 8-bit gray or RGB image from PNG or PGM/PPM (plain or raw).

    Returns a ``gray`` image for single-channel files and an ``srgb`` image
    for three-channel files, with values on the 0-255 scale. Netpbm files
    with a maxval below 255 are rescaled to 0-255.
    """
    path = Path(path)
    raw = path.read_bytes()
    if _is_netpbm(raw):
        try:
            arr, maxval = _read_netpbm(raw)
        except RasterFormatError as exc:
            raise RasterFormatError(f"{path}: {exc}") from None
        if maxval > 255:
            raise RasterFormatError(f"{path}: unsupported bit depth (maxval {maxval} > 255)")
        data = arr.astype(np.float64)
        if maxval != 255:
            data = data * (255.0 / maxval)
    else:
        im = _decode_png(path)
        if im.mode == "P":
            im = im.convert("RGB")
        if im.mode in ("I;16", "I;16B", "I;16L", "I", "F"):
            raise RasterFormatError(f"{path}: unsupported bit depth (mode {im.mode}); need 8-bit")
        if im.mode == "1":
            raise RasterFormatError(f"{path}: unsupported bit depth (1-bit)")
        if im.mode not in ("L", "RGB"):
            raise RasterFormatError(
                f"{path}: unsupported channel count {len(im.getbands())} (mode {im.mode})"
            )
        data = np.asarray(im, dtype=np.float64)
    if data.ndim == 2:
        data = data[:, :, None]
    space = "gray" if data.shape[2] == 1 else "srgb"
    return RasterImage(data, space)


def _parse_int(text: str, line: int, path: str) -> int:
    text = text.strip()
    try:
        value = int(text)
    except ValueError:
        raise LabelParseError(f"not an integer: {text!r}", line, path) from None
    if value < 0:
        raise LabelParseError(f"negative label {value}", line, path)
    if value > MAX_LABEL:
        raise LabelParseError(f"label {value} overflows {MAX_LABEL}", line, path)
    return value


def _read_csv_labels(text: str, path: str) -> np.ndarray:
    rows = []
    width = None
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        values = [_parse_int(cell, lineno, path) for cell in row]
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise LabelParseError(f"row has {len(values)} columns, expected {width}", lineno, path)
        rows.append(values)
    if not rows:
        raise LabelParseError("no label rows", None, path)
    return np.array(rows, dtype=np.int64)


def read_seg(text: str, path: str = "<seg>") -> np.ndarray:
    """Parse a BSDS ``.seg`` ASCII segmentation into an (H, W) label array.

    Every pixel must be covered exactly once; gaps and overlaps are errors.
    """
    lines = text.splitlines()
    header: dict[str, str] = {}
    body_start = None
    for idx, line in enumerate(lines):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped == "data":
            body_start = idx + 1
            break
        key, _, value = stripped.partition(" ")
        header[key] = value.strip()
    if body_start is None:
        raise LabelParseError("missing 'data' line", len(lines), path)
    if header.get("format") != "ascii cr":
        raise LabelParseError(
            f"unsupported format {header.get('format')!r}, expected 'ascii cr'", 1, path
        )
    dims = {}
    for key in ("width", "height", "segments"):
        if key not in header:
            raise LabelParseError(f"missing '{key}' header", body_start, path)
        try:
            dims[key] = int(header[key])
        except ValueError:
            raise LabelParseError(f"bad '{key}' value {header[key]!r}", body_start, path) from None
        if dims[key] < 1:
            raise LabelParseError(f"'{key}' must be positive", body_start, path)
    width, height, segments = dims["width"], dims["height"], dims["segments"]

    labels = np.full((height, width), -1, dtype=np.int64)
    for idx in range(body_start, len(lines)):
        lineno = idx + 1
        stripped = lines[idx].strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split()
        if len(parts) != 4:
            raise LabelParseError(f"expected 's r c1 c2', got {stripped!r}", lineno, path)
        s, r, c1, c2 = (_parse_int(p, lineno, path) for p in parts)
        if s >= segments:
            raise LabelParseError(f"segment {s} >= segments {segments}", lineno, path)
        if r >= height:
            raise LabelParseError(f"row {r} out of range (height {height})", lineno, path)
        if c1 > c2 or c2 >= width:
            raise LabelParseError(f"bad column span {c1}..{c2} (width {width})", lineno, path)
        span = labels[r, c1 : c2 + 1]
        if np.any(span >= 0):
            col = c1 + int(np.argmax(span >= 0))
            raise LabelParseError(f"pixel (row {r}, col {col}) covered twice", lineno, path)
        span[:] = s
    missing = np.argwhere(labels < 0)
    if missing.size:
        r, c = missing[0]
        raise LabelParseError(
            f"incomplete coverage: {len(missing)} pixels unlabeled, first at row {r}, col {c}",
            len(lines),
            path,
        )
    return labels


def load_label_map(
    path: str | os.PathLike,
    expected_width: int | None = None,
    expected_height: int | None = None,
) -> LabelMap:
    """Load a label map from PNG/PGM (8/16-bit), CSV, or BSDS ``.seg``.

    The format is chosen by extension (``.csv``, ``.seg``), falling back to
    content sniffing for netpbm and PNG. Labels are returned as stored,
    without compaction.
    """
    path = Path(path)
    suffix = path.suffix.lower()
    raw = path.read_bytes()
    if suffix == ".csv":
        labels = _read_csv_labels(raw.decode("utf-8"), str(path))
    elif suffix == ".seg":
        labels = read_seg(raw.decode("ascii", errors="replace"), str(path))
    elif _is_netpbm(raw):
        try:
            arr, _ = _read_netpbm(raw)
        except RasterFormatError as exc:
            raise RasterFormatError(f"{path}: {exc}") from None
        if arr.shape[2] != 1:
            raise RasterFormatError(f"{path}: label maps must be single-channel")
        labels = arr[:, :, 0]
    else:
        im = _decode_png(path)
        if im.mode not in ("L", "I;16", "I;16B", "I;16L", "I"):
            raise RasterFormatError(
                f"{path}: label images must be single-channel 8/16-bit, got mode {im.mode}"
            )
        labels = np.asarray(im).astype(np.int64)
        if labels.min() < 0 or labels.max() > 65535:
            raise RasterFormatError(f"{path}: label values outside 16-bit range")
    if expected_width is not None and labels.shape[1] != expected_width:
        raise RasterFormatError(
            f"{path}: label map width {labels.shape[1]} != expected {expected_width}"
        )
    if expected_height is not None and labels.shape[0] != expected_height:
        raise RasterFormatError(
            f"{path}: label map height {labels.shape[0]} != expected {expected_height}"
        )
    return LabelMap(labels)


# ---------------------------------------------------------------------------
# Writing
# ---------------------------------------------------------------------------

def _fmt_float(value: float) -> str:
    if math.isnan(value):
        return "null"
    if math.isinf(value):
        return '"inf"' if value > 0 else '"-inf"'
    text = f"{value:.6f}"
    return "0.000000" if text == "-0.000000" else text


def dumps_json(obj: Any) -> str:
    """Compact, key-sorted JSON with floats at exactly six decimals.

    Infinities are rendered as the strings ``"inf"``/``"-inf"``; NaN and
    ``None`` become ``null``.
    """
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        items = sorted((str(k), v) for k, v in obj.items())
        return "{" + ",".join(f"{dumps_json(k)}:{dumps_json(v)}" for k, v in items) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ",".join(dumps_json(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _csv_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return ""
        return _fmt_float(value)
    return str(value)


def _flatten_report(report: QualityReport) -> list[tuple[str, Any]]:
    scalars = {
        "d_inter": report.d_inter,
        "d_intra": report.d_intra,
        "image_id": report.image_id,
        "n": int(report.n),
        "q0": report.q0,
        "scale": report.scale,
    }
    for name, value in (report.baselines or {}).items():
        scalars[f"baseline_{name}"] = value
    cols = sorted(scalars.items())
    cols += [(f"qt@{_fmt_float(st)}", qt) for st, qt in report.relative]
    return cols


def write_reports_csv(reports: Sequence[QualityReport]) -> bytes:
    """One header row plus one row per report; columns follow the first report."""
    if not reports:
        return b""
    header = [name for name, _ in _flatten_report(reports[0])]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for report in reports:
        row = dict(_flatten_report(report))
        writer.writerow([_csv_cell(row.get(name)) for name in header])
    return buf.getvalue().encode("utf-8")


def write_report(report: QualityReport, format: str = "json") -> bytes:
    if format == "json":
        return (dumps_json(report.to_dict()) + "\n").encode("utf-8")
    if format == "csv":
        return write_reports_csv([report])
    raise ValueError(f"unknown report format {format!r}")


def write_gray_pgm(values, path: str | os.PathLike) -> None:
    """Write a non-negative 2-D grid as binary PGM, scaled so the max is 255."""
    grid = np.asarray(values, dtype=np.float64)
    if grid.ndim != 2:
        raise ValueError(f"expected a 2-D grid, got shape {grid.shape}")
    if np.any(grid < 0) or not np.all(np.isfinite(grid)):
        raise ValueError("grid values must be finite and non-negative")
    peak = grid.max(initial=0.0)
    if peak > 0:
        out = np.rint(grid * (255.0 / peak)).astype(np.uint8)
    else:
        out = np.zeros(grid.shape, dtype=np.uint8)
    height, width = grid.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(out.tobytes())
