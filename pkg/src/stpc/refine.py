"""Spatial refinement of a predicted macroblock.

A motion-compensated 16x16 block often clashes with the already-decoded
blocks to its left and above, because the reference block was chosen without
looking at them.  Running the boundary filter over every sub-block edge,
starting at the edges shared with those neighbors, pulls their information
into the predictor.  Filtered samples feed later edges, so the neighbor
context propagates inward.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .deblock import FilterParams

MB = 16
_CTX = 4  # patch depth taken from each neighbor


class Orientation(enum.Enum):
    VERTICAL = "vertical"      # boundary is a vertical line, filtering runs across columns
    HORIZONTAL = "horizontal"


@dataclass(frozen=True)
class EdgeTask:
    """One line of one boundary: the unit of the filtering schedule."""

    orientation: Orientation
    offset: int  # boundary position within the block: 0, 4, 8 or 12
    line: int    # row index for vertical boundaries, column index for horizontal


@dataclass(frozen=True)
class NeighborContext:
    """Reconstructed samples bordering a macroblock, from the current frame.

    left is the (16, 4) patch of the four columns just left of the block,
    top the (4, 16) patch of the four rows just above; each is None when
    that neighbor lies outside the frame.
    """

    left: Optional[np.ndarray] = None
    top: Optional[np.ndarray] = None

    def __post_init__(self):
        for name, patch, shape in (("left", self.left, (MB, _CTX)), ("top", self.top, (_CTX, MB))):
            if patch is None:
                continue
            arr = np.asarray(patch, dtype=np.uint8)
            if arr.shape != shape:
                raise ValueError(f"{name} patch must have shape {shape}, got {arr.shape}")
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def at(cls, reconstruction: np.ndarray, x0: int, y0: int) -> "NeighborContext":
        """Extract the context for the macroblock at (x0, y0)."""
        left = reconstruction[y0:y0 + MB, x0 - _CTX:x0] if x0 > 0 else None
        top = reconstruction[y0 - _CTX:y0, x0:x0 + MB] if y0 > 0 else None
        return cls(left, top)


def boundary_schedule(grid_step: int, has_left: bool, has_top: bool) -> list:
    """Enumerate edge-filtering tasks in execution order.

    All vertical boundaries precede all horizontal ones; boundaries run in
    increasing offset with the neighbor boundary (offset 0) first when that
    neighbor exists, and lines in increasing index.
    """
    if grid_step not in (4, 8):
        raise ValueError(f"grid step must be 4 or 8, got {grid_step}")
    tasks = []
    for orientation, has_neighbor in (
        (Orientation.VERTICAL, has_left),
        (Orientation.HORIZONTAL, has_top),
    ):
        for offset in range(0, MB, grid_step):
            if offset == 0 and not has_neighbor:
                continue
            for line in range(MB):
                tasks.append(EdgeTask(orientation, offset, line))
    return tasks


def refine_block(
    pred: np.ndarray,
    ctx: NeighborContext,
    params: FilterParams,
    grid_step: int = 4,
) -> np.ndarray:
    """Filter every scheduled edge of a predicted block, in place logically.

    Neighbor patches supply the outer side of offset-0 boundaries; their
    filtered values are discarded since decoded neighbors are final.
    Returns a new (16, 16) uint8 block; pred and ctx are left untouched.
    """
    pred = np.asarray(pred)
    if pred.shape != (MB, MB):
        raise ValueError(f"predicted block must be 16x16, got {pred.shape}")
    if grid_step not in (4, 8):
        raise ValueError(f"grid step must be 4 or 8, got {grid_step}")
    work = np.zeros((MB + _CTX, MB + _CTX), dtype=np.int32)
    work[_CTX:, _CTX:] = pred
    has_left = ctx.left is not None
    has_top = ctx.top is not None
    if has_left:
        work[_CTX:, :_CTX] = ctx.left
    if has_top:
        work[:_CTX, _CTX:] = ctx.top
    _kernels.refine_block_inplace(
        work, has_left, has_top,
        params.edge_max, params.flat_max, params.strong_max, grid_step,
    )
    return work[_CTX:, _CTX:].astype(np.uint8)
