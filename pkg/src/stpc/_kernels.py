"""Compiled inner loops for edge filtering.

Everything here works on plain integer arrays so numba can compile it; the
public modules wrap these with validated, documented entry points.  Sample
order within an edge is [p3 p2 p1 p0 | q0 q1 q2 q3] with the boundary
between p0 and q0.
"""

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def filter_octet(p3, p2, p1, p0, q0, q1, q2, q3, edge_max, flat_max, strong_max):
    """Filter one 8-sample edge; returns the six possibly-changed samples.

    Two passes run in statement order: the first applies small corrections
    around the boundary, the second (judged and computed from the ORIGINAL
    samples) overwrites with full smoothing when the step is small enough.
    Right shifts on negative intermediates floor, matching hardware
    arithmetic shifts.  No correction clipping is applied; outputs are only
    range-limited to [0, 255] at the end.
    """
    r_p0, r_p1, r_p2 = p0, p1, p2
    r_q0, r_q1, r_q2 = q0, q1, q2

    step = abs(p0 - q0)
    if step <= edge_max and abs(p0 - p1) <= flat_max and abs(q0 - q1) <= flat_max:
        delta = (4 * (q0 - p0) + (p1 - q1) + 4) >> 3
        r_p0 = p0 + delta
        r_q0 = q0 - delta
        if abs(p0 - p2) <= flat_max:
            r_p1 = p1 + ((p2 + ((p0 + q0 + 1) >> 1) - 2 * p1) >> 1)
        if abs(q0 - q2) <= flat_max:
            r_q1 = q1 + ((q2 + ((q0 + p0 + 1) >> 1) - 2 * q1) >> 1)

    if step <= strong_max:
        if abs(p0 - p2) <= flat_max:
            r_p0 = (p2 + 2 * p1 + 2 * p0 + 2 * q0 + q1 + 4) >> 3
            r_p1 = (p2 + p1 + p0 + q0 + 2) >> 2
            r_p2 = (2 * p3 + 3 * p2 + p1 + p0 + q0 + 4) >> 3
        else:
            r_p0 = (2 * p1 + p0 + q1 + 2) >> 2
        if abs(q0 - q2) <= flat_max:
            r_q0 = (q2 + 2 * q1 + 2 * q0 + 2 * p0 + p1 + 4) >> 3
            r_q1 = (q2 + q1 + q0 + p0 + 2) >> 2
            r_q2 = (2 * q3 + 3 * q2 + q1 + q0 + p0 + 4) >> 3
        else:
            r_q0 = (2 * q1 + q0 + p1 + 2) >> 2

    if r_p0 < 0:
        r_p0 = 0
    elif r_p0 > 255:
        r_p0 = 255
    if r_p1 < 0:
        r_p1 = 0
    elif r_p1 > 255:
        r_p1 = 255
    if r_p2 < 0:
        r_p2 = 0
    elif r_p2 > 255:
        r_p2 = 255
    if r_q0 < 0:
        r_q0 = 0
    elif r_q0 > 255:
        r_q0 = 255
    if r_q1 < 0:
        r_q1 = 0
    elif r_q1 > 255:
        r_q1 = 255
    if r_q2 < 0:
        r_q2 = 0
    elif r_q2 > 255:
        r_q2 = 255
    return r_p2, r_p1, r_p0, r_q0, r_q1, r_q2


@njit(cache=True)
def filter_octets(octets, out, edge_max, flat_max, strong_max):
    """Filter n independent edges: octets and out are (n, 8) int32."""
    for i in range(octets.shape[0]):
        p3 = octets[i, 0]
        p2 = octets[i, 1]
        p1 = octets[i, 2]
        p0 = octets[i, 3]
        q0 = octets[i, 4]
        q1 = octets[i, 5]
        q2 = octets[i, 6]
        q3 = octets[i, 7]
        r_p2, r_p1, r_p0, r_q0, r_q1, r_q2 = filter_octet(
            p3, p2, p1, p0, q0, q1, q2, q3, edge_max, flat_max, strong_max
        )
        out[i, 0] = p3
        out[i, 1] = r_p2
        out[i, 2] = r_p1
        out[i, 3] = r_p0
        out[i, 4] = r_q0
        out[i, 5] = r_q1
        out[i, 6] = r_q2
        out[i, 7] = q3


@njit(cache=True)
def refine_block_inplace(work, has_left, has_top, edge_max, flat_max, strong_max, grid_step):
    """Filter all sub-block boundaries of a 16x16 block held in a padded buffer.

    work is (20, 20) int32: the block occupies [4:20, 4:20]; columns [0:4]
    hold the left-neighbor patch and rows [0:4] the top-neighbor patch when
    present.  Vertical boundaries are filtered before horizontal ones, each
    orientation in increasing offset with the neighbor boundary first, lines
    in increasing index.  Neighbor samples are read but never overwritten;
    all other writes land in place so later edges see earlier results.
    """
    for offset in range(0, 16, grid_step):
        if offset == 0 and not has_left:
            continue
        x = 4 + offset
        keep_p = offset != 0
        for row in range(16):
            y = 4 + row
            r_p2, r_p1, r_p0, r_q0, r_q1, r_q2 = filter_octet(
                work[y, x - 4], work[y, x - 3], work[y, x - 2], work[y, x - 1],
                work[y, x], work[y, x + 1], work[y, x + 2], work[y, x + 3],
                edge_max, flat_max, strong_max,
            )
            if keep_p:
                work[y, x - 3] = r_p2
                work[y, x - 2] = r_p1
                work[y, x - 1] = r_p0
            work[y, x] = r_q0
            work[y, x + 1] = r_q1
            work[y, x + 2] = r_q2

    for offset in range(0, 16, grid_step):
        if offset == 0 and not has_top:
            continue
        y = 4 + offset
        keep_p = offset != 0
        for col in range(16):
            x = 4 + col
            r_p2, r_p1, r_p0, r_q0, r_q1, r_q2 = filter_octet(
                work[y - 4, x], work[y - 3, x], work[y - 2, x], work[y - 1, x],
                work[y, x], work[y + 1, x], work[y + 2, x], work[y + 3, x],
                edge_max, flat_max, strong_max,
            )
            if keep_p:
                work[y - 3, x] = r_p2
                work[y - 2, x] = r_p1
                work[y - 1, x] = r_p0
            work[y, x] = r_q0
            work[y + 1, x] = r_q1
            work[y + 2, x] = r_q2


@njit(cache=True)
def deblock_plane_inplace(plane, edge_max, flat_max, strong_max, grid_step):
    """Reference-buffer deblocking pass over a whole (h, w) int32 plane.

    Macroblocks are visited in raster order; within each, vertical then
    horizontal boundaries including the offset-0 boundary shared with the
    already-filtered left/top neighbor.  Both sides of every edge are
    written.
    """
    height, width = plane.shape
    for mb_y in range(height // 16):
        for mb_x in range(width // 16):
            for offset in range(0, 16, grid_step):
                x = mb_x * 16 + offset
                if x == 0:
                    continue
                for row in range(16):
                    y = mb_y * 16 + row
                    r_p2, r_p1, r_p0, r_q0, r_q1, r_q2 = filter_octet(
                        plane[y, x - 4], plane[y, x - 3], plane[y, x - 2], plane[y, x - 1],
                        plane[y, x], plane[y, x + 1], plane[y, x + 2], plane[y, x + 3],
                        edge_max, flat_max, strong_max,
                    )
                    plane[y, x - 3] = r_p2
                    plane[y, x - 2] = r_p1
                    plane[y, x - 1] = r_p0
                    plane[y, x] = r_q0
                    plane[y, x + 1] = r_q1
                    plane[y, x + 2] = r_q2
            for offset in range(0, 16, grid_step):
                y = mb_y * 16 + offset
                if y == 0:
                    continue
                for col in range(16):
                    x = mb_x * 16 + col
                    r_p2, r_p1, r_p0, r_q0, r_q1, r_q2 = filter_octet(
                        plane[y - 4, x], plane[y - 3, x], plane[y - 2, x], plane[y - 1, x],
                        plane[y, x], plane[y + 1, x], plane[y + 2, x], plane[y + 3, x],
                        edge_max, flat_max, strong_max,
                    )
                    plane[y - 3, x] = r_p2
                    plane[y - 2, x] = r_p1
                    plane[y - 1, x] = r_p0
                    plane[y, x] = r_q0
                    plane[y + 1, x] = r_q1
                    plane[y + 2, x] = r_q2
