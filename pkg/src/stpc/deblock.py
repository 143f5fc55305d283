"""The boundary filter: threshold derivation and single-edge filtering.

The filter strength parameter h (0..51) drives two real-valued limits,
0.8*(2**(h/6) - 1) for the cross-boundary step and 0.5*h - 7 for the
side-flatness checks.  Both are folded into inclusive integer bounds so the
kernel itself is pure integer arithmetic and bit-identical everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels

# floor(0.8 * (2**(h/6) - 1)) for h = 0..51, tabulated from a 60-digit
# evaluation; the value is an exact integer only at h in {0, 24, 48}.
_EDGE_LIMIT_FLOOR = (
    0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3,
    4, 4, 5, 6, 7, 8, 9, 10, 12, 13, 15, 17, 19, 22, 24, 27,
    31, 35, 39, 44, 50, 56, 63, 71, 80, 90, 101, 114, 128, 144, 161, 181,
    204, 229, 257, 288,
)
_EDGE_LIMIT_INTEGRAL = frozenset((0, 24, 48))


@dataclass(frozen=True)
class FilterParams:
    """Inclusive integer bounds controlling the edge filter.

    A sample difference d passes a "< limit" test exactly when d <= bound,
    so a bound of -1 means the test can never pass.  All three bounds are
    non-decreasing in h.
    """

    h: int
    edge_max: int     # cross-boundary step bound for the correction pass
    flat_max: int     # side flatness bound shared by both passes
    strong_max: int   # cross-boundary step bound for the smoothing pass


def derive_thresholds(h: int) -> FilterParams:
    """Map filter strength h in [0, 51] to the kernel's integer bounds."""
    if not 0 <= h <= 51:
        raise ValueError(f"filter strength {h} outside [0, 51]")
    floor_edge = _EDGE_LIMIT_FLOOR[h]
    edge_max = floor_edge - 1 if h in _EDGE_LIMIT_INTEGRAL else floor_edge
    flat = 0.5 * h - 7.0
    flat_max = math.ceil(flat) - 1 if flat > 0 else -1
    strong_max = floor_edge // 4 + 1
    return FilterParams(h, edge_max, flat_max, strong_max)


@dataclass(frozen=True)
class EdgeOctet:
    """Eight samples across one boundary: p = (p3,p2,p1,p0), q = (q0,q1,q2,q3).

    p0 and q0 are adjacent to the boundary; indices grow with distance.
    """

    p: tuple
    q: tuple

    def __post_init__(self):
        if len(self.p) != 4 or len(self.q) != 4:
            raise ValueError("octet needs four samples per side")
        for v in (*self.p, *self.q):
            if not 0 <= v <= 255:
                raise ValueError(f"sample {v} outside [0, 255]")

    def mirrored(self) -> "EdgeOctet":
        """The octet read from the other side (p and q roles exchanged)."""
        return EdgeOctet(tuple(reversed(self.q)), tuple(reversed(self.p)))


def filter_edge(octet: EdgeOctet, params: FilterParams) -> EdgeOctet:
    """Filter one edge; p3 and q3 are never modified."""
    p3, p2, p1, p0 = octet.p
    q0, q1, q2, q3 = octet.q
    r_p2, r_p1, r_p0, r_q0, r_q1, r_q2 = _kernels.filter_octet(
        p3, p2, p1, p0, q0, q1, q2, q3,
        params.edge_max, params.flat_max, params.strong_max,
    )
    return EdgeOctet((p3, r_p2, r_p1, r_p0), (r_q0, r_q1, r_q2, q3))


def filter_edges(octets: np.ndarray, params: FilterParams) -> np.ndarray:
    """Filter n independent edges given as an (n, 8) array.

    Column order is [p3 p2 p1 p0 q0 q1 q2 q3].  Returns a new array of the
    same shape; columns 0 and 7 are passed through unchanged.
    """
    arr = np.ascontiguousarray(octets, dtype=np.int32)
    if arr.ndim != 2 or arr.shape[1] != 8:
        raise ValueError(f"expected an (n, 8) array, got shape {octets.shape}")
    out = np.empty_like(arr)
    _kernels.filter_octets(arr, out, params.edge_max, params.flat_max, params.strong_max)
    return out
