"""Per-region statistics and the region adjacency graph of a label map."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .raster_io import LabelMap, RasterImage


@dataclass
class RegionStats:
    label: int
    area: int
    mean: np.ndarray
    saliency_sum: float = 0.0


@dataclass
class AdjacencyGraph:
    """Undirected region adjacency graph.

    ``edges`` is an (k, 2) int array of ``(a, b)`` pairs with ``a < b``,
    sorted lexicographically. ``weights`` is ``None`` until the graph has
    been weighted by merging cost.
    """

    region_count: int
    edges: np.ndarray
    weights: np.ndarray | None = None

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def neighbors(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.region_count)]
        for a, b in self.edges:
            adj[a].append(int(b))
            adj[b].append(int(a))
        return adj

    def as_dict(self) -> dict[tuple[int, int], float | None]:
        if self.weights is None:
            return {(int(a), int(b)): None for a, b in self.edges}
        return {(int(a), int(b)): float(w) for (a, b), w in zip(self.edges, self.weights)}


def compact_labels(lm: LabelMap) -> tuple[LabelMap, dict[int, int]]:
    """Renumber labels to 0..n-1 in order of first (row-major) occurrence."""
    flat = lm.labels.ravel()
    uniq, first_idx, inverse = np.unique(flat, return_index=True, return_inverse=True)
    order = np.argsort(first_idx, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    new = rank[inverse].reshape(lm.labels.shape)
    mapping = {int(uniq[i]): int(rank[i]) for i in range(len(uniq))}
    return LabelMap(new), mapping


def is_compact(lm: LabelMap) -> bool:
    uniq = np.unique(lm.labels)
    return uniq[0] == 0 and uniq[-1] == len(uniq) - 1


def _structure(connectivity: int) -> np.ndarray:
    if connectivity == 4:
        return ndimage.generate_binary_structure(2, 1)
    if connectivity == 8:
        return ndimage.generate_binary_structure(2, 2)
    raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")


def enforce_connectivity(lm: LabelMap, connectivity: int = 4) -> LabelMap:
    """Split every label into its connected components; output is compacted."""
    structure = _structure(connectivity)
    labels = lm.labels
    out = np.empty_like(labels)
    offset = 0
    for obj_slice, value in zip(ndimage.find_objects(labels + 1), range(labels.max() + 1)):
        if obj_slice is None:
            continue
        mask = labels[obj_slice] == value
        comp, count = ndimage.label(mask, structure=structure)
        out[obj_slice][mask] = comp[mask] - 1 + offset
        offset += count
    return compact_labels(LabelMap(out))[0]


def _check_shapes(img: RasterImage, lm: LabelMap) -> None:
    if (img.height, img.width) != (lm.height, lm.width):
        raise ValueError(
            f"label map {lm.width}x{lm.height} does not match image {img.width}x{img.height}"
        )


def region_areas(lm: LabelMap) -> np.ndarray:
    return np.bincount(lm.labels.ravel())


def region_means(img: RasterImage, lm: LabelMap) -> np.ndarray:
    """(n, c) array of per-region mean vectors."""
    _check_shapes(img, lm)
    flat = lm.labels.ravel()
    areas = np.bincount(flat)
    pixels = img.data.reshape(-1, img.channels)
    sums = np.stack(
        [np.bincount(flat, weights=pixels[:, ch], minlength=len(areas)) for ch in range(img.channels)],
        axis=1,
    )
    with np.errstate(invalid="ignore", divide="ignore"):
        return sums / areas[:, None]


def region_stats(img: RasterImage, lm: LabelMap) -> list[RegionStats]:
    """Area and mean vector of every region of a compacted label map."""
    _check_shapes(img, lm)
    if not is_compact(lm):
        raise ValueError("region_stats needs a compacted label map")
    areas = region_areas(lm)
    means = region_means(img, lm)
    return [RegionStats(i, int(areas[i]), means[i].copy()) for i in range(len(areas))]


def _pairs(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a != b
    lo = np.minimum(a[diff], b[diff])
    hi = np.maximum(a[diff], b[diff])
    return np.stack([lo, hi], axis=1)


def build_adjacency(lm: LabelMap, connectivity: int = 4) -> AdjacencyGraph:
    """Edges between labels that touch under 4- or 8-connectivity."""
    _structure(connectivity)
    lab = lm.labels
    pairs = [_pairs(lab[:, :-1], lab[:, 1:]), _pairs(lab[:-1, :], lab[1:, :])]
    if connectivity == 8:
        pairs.append(_pairs(lab[:-1, :-1], lab[1:, 1:]))
        pairs.append(_pairs(lab[:-1, 1:], lab[1:, :-1]))
    edges = np.concatenate(pairs, axis=0)
    if len(edges):
        edges = np.unique(edges, axis=0)
    else:
        edges = np.empty((0, 2), dtype=np.int64)
    return AdjacencyGraph(int(lab.max()) + 1, edges.astype(np.int64))
