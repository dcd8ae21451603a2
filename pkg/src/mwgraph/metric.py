"""Finite Euclidean point clouds approximating compact sets."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence, TypeVar

import numpy as np
from scipy.spatial import cKDTree

T = TypeVar("T")


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Points in R^dim plus a covering radius ``resolution`` of the set they stand for."""

    points: np.ndarray
    resolution: float = 0.0

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError("a point cloud needs at least one point")
        if self.resolution < 0:
            raise ValueError("resolution must be >= 0")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "resolution", float(self.resolution))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    def __repr__(self) -> str:
        return f"PointCloud(n={len(self)}, dim={self.dim}, resolution={self.resolution:g})"


def diameter(P: PointCloud) -> float:
    pts = P.points
    if len(pts) == 1:
        return 0.0
    if P.dim == 1:
        return float(pts.max() - pts.min())
    best = 0.0
    # chunked brute force keeps memory bounded
    for i in range(0, len(pts), 2048):
        block = pts[i:i + 2048]
        d = np.sqrt(((block[:, None, :] - pts[None, :, :]) ** 2).sum(axis=-1))
        best = max(best, float(d.max()))
    return best


def _directed(a: np.ndarray, b: np.ndarray) -> float:
    dist, _ = cKDTree(b).query(a, k=1)
    return float(np.max(dist))


def hausdorff_distance(E: PointCloud, F: PointCloud) -> float:
    if E.dim != F.dim:
        raise ValueError(f"dimension mismatch: {E.dim} vs {F.dim}")
    return max(_directed(E.points, F.points), _directed(F.points, E.points))


def greedy_net(items: Sequence[T], eps: float, dist: Callable[[T, T], float]) -> list[int]:
    """Indices kept by the greedy eps-net scan in input order.

    An item is dropped when some already kept item lies within ``eps``.
    Works for any metric; used for measure families with W1.
    """
    kept: list[int] = []
    for i, x in enumerate(items):
        if all(dist(items[j], x) > eps for j in kept):
            kept.append(i)
    return kept


def thin(P: PointCloud, eps: float) -> PointCloud:
    """Greedy eps-net of ``P`` (same result as :func:`greedy_net` with Euclidean distance)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    pts = P.points
    tree = cKDTree(pts)
    covered = np.zeros(len(pts), dtype=bool)
    keep = []
    for i in range(len(pts)):
        if covered[i]:
            continue
        keep.append(i)
        covered[tree.query_ball_point(pts[i], eps)] = True
    return PointCloud(pts[keep], P.resolution + eps)


def dedupe(P: PointCloud) -> PointCloud:
    """Drop exact duplicate points, keeping first occurrences in order."""
    _, idx = np.unique(P.points, axis=0, return_index=True)
    return PointCloud(P.points[np.sort(idx)], P.resolution)


def box_net(box: Sequence[Sequence[float]], step: float) -> PointCloud:
    """Regular grid over a box, endpoints included, spacing at most ``step``."""
    if step <= 0:
        raise ValueError("step must be positive")
    axes = []
    for lo, hi in box:
        lo, hi = float(lo), float(hi)
        if hi < lo:
            raise ValueError(f"bad interval [{lo}, {hi}]")
        if hi == lo:
            axes.append(np.array([lo]))
            continue
        n = max(1, math.ceil((hi - lo) / step - 1e-12))
        ax = lo + (hi - lo) * np.arange(n + 1) / n
        ax[-1] = hi
        axes.append(ax)
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
    return PointCloud(grid, step / 2 * math.sqrt(len(axes)))


def box_diameter(box: Sequence[Sequence[float]]) -> float:
    return math.sqrt(sum((float(hi) - float(lo)) ** 2 for lo, hi in box))


def box_corners(box: Sequence[Sequence[float]]) -> np.ndarray:
    axes = [np.unique([float(lo), float(hi)]) for lo, hi in box]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))


def in_box(x: np.ndarray, box: Sequence[Sequence[float]], tol: float = 1e-9) -> bool:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    lo = np.array([b[0] for b in box], dtype=float)
    hi = np.array([b[1] for b in box], dtype=float)
    return bool(np.all(x >= lo - tol) and np.all(x <= hi + tol))


# serialization

def fmt(x: float) -> str:
    return format(float(x), ".17g")


def cloud_to_csv(P: PointCloud) -> str:
    return "".join(",".join(fmt(v) for v in row) + "\n" for row in P.points)


def cloud_from_csv(text: str, resolution: float = 0.0) -> PointCloud:
    rows = [[float(v) for v in row] for row in csv.reader(io.StringIO(text)) if row]
    return PointCloud(np.array(rows), resolution)


def cloud_to_json(P: PointCloud) -> str:
    # 17 significant digits round-trip any double
    body = ",".join("[" + ",".join(fmt(v) for v in row) + "]" for row in P.points)
    return "[" + body + "]"


def cloud_from_json(text: str, resolution: float = 0.0) -> PointCloud:
    return PointCloud(np.array(json.loads(text), dtype=float), resolution)
