"""Quality/rate measurement: PSNR, RD curves and their average deltas.

The curve delta follows the classic procedure: fit a cubic to each curve
(quality over log10 rate, or log10 rate over quality), integrate the
difference over the shared interval, and report the mean as a dB gain or a
percent rate change.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, List, TextIO, Tuple, Union

import numpy as np

from .frameio import Frame, Plane, Sequence

#: Reported instead of a dB value when the inputs are identical.
LOSSLESS = math.inf

_PEAK = 255.0


def _as_array(x) -> np.ndarray:
    if isinstance(x, Plane):
        return x.data
    if isinstance(x, Frame):
        return x.luma.data
    return np.asarray(x)


def psnr(a, b) -> float:
    """Luma PSNR in dB; LOSSLESS (inf) when the inputs match exactly.

    Accepts Plane/Frame/array pairs or two Sequences, where the result is
    the mean of the per-frame values.
    """
    if isinstance(a, Sequence) or isinstance(b, Sequence):
        if not (isinstance(a, Sequence) and isinstance(b, Sequence)):
            raise ValueError("cannot compare a sequence with a single frame")
        if len(a) != len(b):
            raise ValueError(f"frame count mismatch: {len(a)} vs {len(b)}")
        return float(np.mean([psnr(fa, fb) for fa, fb in zip(a.frames, b.frames)]))
    xa, xb = _as_array(a), _as_array(b)
    if xa.shape != xb.shape:
        raise ValueError(f"shape mismatch {xa.shape} vs {xb.shape}")
    mse = float(np.mean((xa.astype(np.float64) - xb.astype(np.float64)) ** 2))
    if mse == 0.0:
        return LOSSLESS
    return 10.0 * math.log10(_PEAK * _PEAK / mse)


@dataclass(frozen=True)
class RDPoint:
    rate: float   # bits per second
    psnr: float   # dB

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError(f"rate must be positive, got {self.rate}")
        if not math.isfinite(self.psnr):
            raise ValueError("lossless points do not belong on an RD curve")


class RDCurve:
    """At least four RD points, strictly increasing in both rate and quality."""

    def __init__(self, points: Iterable[RDPoint]):
        pts = [p if isinstance(p, RDPoint) else RDPoint(*p) for p in points]
        pts.sort(key=lambda p: p.rate)
        if len(pts) < 4:
            raise ValueError(f"an RD curve needs >= 4 points, got {len(pts)}")
        for lo, hi in zip(pts, pts[1:]):
            if hi.rate <= lo.rate:
                raise ValueError(f"duplicate rate {hi.rate}")
            if hi.psnr <= lo.psnr:
                raise ValueError(
                    f"psnr not increasing with rate ({lo.psnr} -> {hi.psnr}); bad data"
                )
        self.points: List[RDPoint] = pts

    def rates(self) -> np.ndarray:
        return np.array([p.rate for p in self.points])

    def psnrs(self) -> np.ndarray:
        return np.array([p.psnr for p in self.points])

    def __len__(self) -> int:
        return len(self.points)

    def scaled(self, rate_factor: float = 1.0, psnr_offset: float = 0.0) -> "RDCurve":
        return RDCurve(
            RDPoint(p.rate * rate_factor, p.psnr + psnr_offset) for p in self.points
        )


def _mean_fit_gap(x1, y1, x2, y2) -> float:
    """Mean vertical gap between cubic fits of (x2,y2) and (x1,y1)."""
    for x in (x1, x2):
        if len(set(float(v) for v in x)) != len(x):
            raise ValueError("degenerate fit: duplicate abscissae")
    lo = max(x1.min(), x2.min())
    hi = min(x1.max(), x2.max())
    if not lo < hi:
        raise ValueError("curves do not overlap")
    p1 = np.polyint(np.polyfit(x1, y1, 3))
    p2 = np.polyint(np.polyfit(x2, y2, 3))
    gap = (np.polyval(p2, hi) - np.polyval(p2, lo)) - (np.polyval(p1, hi) - np.polyval(p1, lo))
    return float(gap / (hi - lo))


def bd_metrics(anchor: RDCurve, test: RDCurve) -> Tuple[float, float]:
    """Average rate delta (percent, negative is a saving) and PSNR delta (dB)
    of test relative to anchor."""
    log_anchor = np.log10(anchor.rates())
    log_test = np.log10(test.rates())
    bd_psnr = _mean_fit_gap(log_anchor, anchor.psnrs(), log_test, test.psnrs())
    mean_log_gap = _mean_fit_gap(anchor.psnrs(), log_anchor, test.psnrs(), log_test)
    bd_rate = (10.0 ** mean_log_gap - 1.0) * 100.0
    return bd_rate, bd_psnr


RD_CSV_HEADER = ("rate_bps", "psnr_db")


def write_rd_csv(curve: RDCurve, fp: TextIO) -> None:
    w = csv.writer(fp, lineterminator="\n")
    w.writerow(RD_CSV_HEADER)
    for p in curve.points:
        w.writerow([repr(p.rate), repr(p.psnr)])


def read_rd_csv(fp: TextIO) -> RDCurve:
    rows = list(csv.reader(fp))
    if not rows or tuple(rows[0]) != RD_CSV_HEADER:
        raise ValueError(f"expected header {','.join(RD_CSV_HEADER)}")
    return RDCurve(RDPoint(float(r), float(p)) for r, p in rows[1:])
