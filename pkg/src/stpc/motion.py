"""Temporal prediction: exhaustive block matching and motion compensation.

Full-pel vectors, a single reference plane, 16x16 or four-quadrant 8x8
partitioning.  Out-of-frame reference reads replicate the nearest edge
sample, so any vector inside the search range is legal anywhere.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .bitio import se_length
from .frameio import Plane

MB = 16


class MotionVector(NamedTuple):
    dx: int
    dy: int


class PartitionKind(enum.Enum):
    WHOLE_16x16 = "16x16"
    QUAD_8x8 = "8x8"


@dataclass(frozen=True)
class Partition:
    """Sub-block layout and its motion vectors in raster order."""

    kind: PartitionKind
    mvs: tuple

    def __post_init__(self):
        expected = 1 if self.kind is PartitionKind.WHOLE_16x16 else 4
        if len(self.mvs) != expected:
            raise ValueError(f"{self.kind.value} partition needs {expected} vectors")
        object.__setattr__(self, "mvs", tuple(MotionVector(*mv) for mv in self.mvs))


def sad(a: np.ndarray, b: np.ndarray) -> int:
    """Sum of absolute sample differences."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return int(np.abs(a.astype(np.int32) - b.astype(np.int32)).sum())


def _replicated_window(data: np.ndarray, x0: int, y0: int, bh: int, bw: int, r: int) -> np.ndarray:
    """Reference samples covering every candidate block, edge-replicated."""
    ys = np.clip(np.arange(y0 - r, y0 + bh + r), 0, data.shape[0] - 1)
    xs = np.clip(np.arange(x0 - r, x0 + bw + r), 0, data.shape[1] - 1)
    return data[np.ix_(ys, xs)].astype(np.int32)


def _pick_vector(costs: np.ndarray, r: int) -> tuple:
    """Lowest cost; ties go to smaller |dx|+|dy|, then smaller dy, then dx."""
    best = int(costs.min())
    iy, ix = np.nonzero(costs == best)
    dy = iy.astype(np.int64) - r
    dx = ix.astype(np.int64) - r
    k = np.lexsort((dx, dy, np.abs(dx) + np.abs(dy)))[0]
    return MotionVector(int(dx[k]), int(dy[k])), best


def full_search(cur: np.ndarray, ref: Plane, origin: tuple, search_range: int) -> tuple:
    """Evaluate every vector in [-range, range]^2; returns (vector, SAD)."""
    if search_range < 0:
        raise ValueError("search range must be non-negative")
    cur = np.asarray(cur, dtype=np.int32)
    x0, y0 = origin
    bh, bw = cur.shape
    win = _replicated_window(ref.data, x0, y0, bh, bw, search_range)
    views = sliding_window_view(win, (bh, bw))
    costs = np.abs(views - cur).sum(axis=(2, 3))
    return _pick_vector(costs, search_range)


def search_partitions(cur: np.ndarray, ref: Plane, origin: tuple, search_range: int) -> tuple:
    """One-pass search for the 16x16 block and its four 8x8 quadrants.

    Returns ((mv16, cost16), [(mv8, cost8) x4 in raster order]).  Results are
    identical to five independent full_search calls; the quadrant costs are
    partial sums of the same difference tensor.
    """
    cur = np.asarray(cur, dtype=np.int32)
    if cur.shape != (MB, MB):
        raise ValueError(f"expected a 16x16 block, got {cur.shape}")
    x0, y0 = origin
    win = _replicated_window(ref.data, x0, y0, MB, MB, search_range)
    views = sliding_window_view(win, (MB, MB))
    diff = np.abs(views - cur)
    n = 2 * search_range + 1
    whole = _pick_vector(diff.sum(axis=(2, 3)), search_range)
    quad_costs = diff.reshape(n, n, 2, 8, 2, 8).sum(axis=(3, 5))
    quads = [
        _pick_vector(np.ascontiguousarray(quad_costs[:, :, i, j]), search_range)
        for i in range(2)
        for j in range(2)
    ]
    return whole, quads


def motion_compensate(ref: Plane, origin: tuple, partition: Partition) -> np.ndarray:
    """Copy each sub-block from the reference at its displaced position."""
    x0, y0 = origin
    out = np.empty((MB, MB), dtype=np.uint8)
    size = MB if partition.kind is PartitionKind.WHOLE_16x16 else MB // 2
    for idx, mv in enumerate(partition.mvs):
        sy = (idx // 2) * size if size != MB else 0
        sx = (idx % 2) * size if size != MB else 0
        ys = np.clip(np.arange(y0 + sy + mv.dy, y0 + sy + mv.dy + size), 0, ref.height - 1)
        xs = np.clip(np.arange(x0 + sx + mv.dx, x0 + sx + mv.dx + size), 0, ref.width - 1)
        out[sy:sy + size, sx:sx + size] = ref.data[np.ix_(ys, xs)]
    return out


def _vector_bits(mvs) -> int:
    return sum(se_length(mv.dx) + se_length(mv.dy) for mv in mvs)


def choose_partition(
    cur: np.ndarray,
    ref: Plane,
    origin: tuple,
    search_range: int,
    lambda_motion: float,
) -> Partition:
    """Pick 16x16 vs 8x8 by SAD plus vector signaling cost; ties keep 16x16."""
    whole, quads = search_partitions(cur, ref, origin, search_range)
    p_whole = Partition(PartitionKind.WHOLE_16x16, (whole[0],))
    p_quad = Partition(PartitionKind.QUAD_8x8, tuple(mv for mv, _ in quads))
    cost_whole = whole[1] + lambda_motion * _vector_bits(p_whole.mvs)
    cost_quad = sum(c for _, c in quads) + lambda_motion * _vector_bits(p_quad.mvs)
    return p_whole if cost_whole <= cost_quad else p_quad
