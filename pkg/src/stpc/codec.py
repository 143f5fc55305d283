"""Encoder/decoder pair with rate-distortion mode decision.

Frames are coded I then P (configurable GOP).  Each P macroblock picks the
cheapest of: SKIP (colocated copy), 16x16 or 8x8 motion compensation with an
optional spatially refined variant (one flag bit each), or flat intra
prediction.  The decoder replays the encoder's reconstruction path exactly,
so there is never drift between the two.

Bitstream layout (big-endian header, MSB-first payload bits):
  magic "STPC", version u8, width u16, height u16, frame_count u32, qp u8,
  flags u8 (bit0 refinement, bit1 in-loop deblocking), refine_h u8,
  grid_step u8, fps_num u16, fps_den u16; then per frame one type bit
  (0=I, 1=P) followed by macroblocks in raster order.
"""

from __future__ import annotations

import enum
import math
import struct
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from . import _kernels, metrics
from .bitio import BitReader, BitWriter, OutOfBits, se_length, ue_length
from .deblock import derive_thresholds
from .frameio import Frame, Plane, Sequence
from .motion import Partition, PartitionKind, motion_compensate, search_partitions
from .refine import NeighborContext, refine_block
from .transform import ZIGZAG, dequantize_inverse, transform_quantize

MB = 16
MAGIC = b"STPC"
VERSION = 1
_HEADER_FMT = ">4sBHHIBBBBHH"
HEADER_BYTES = struct.calcsize(_HEADER_FMT)

# decoded values beyond this are grammar noise, not plausible syntax
_SANE_LIMIT = 1 << 20

_ZZ = np.array(ZIGZAG)
_UNZIGZAG = np.argsort(_ZZ)


class StreamError(ValueError):
    """Base class for malformed-bitstream conditions."""


class MagicError(StreamError):
    pass


class VersionError(StreamError):
    pass


class TruncationError(StreamError):
    pass


class CodewordError(StreamError):
    pass


class TrailingDataError(StreamError):
    pass


class Mode(enum.Enum):
    """Macroblock coding modes; the enum value is the mode codeword."""

    SKIP = 0
    INTER_16x16 = 1
    INTER_8x8 = 2
    INTRA_DC = 3


_INTER_MODES = (Mode.INTER_16x16, Mode.INTER_8x8)


@dataclass(frozen=True)
class CodecConfig:
    qp: int
    refine_enabled: bool = False
    refine_h: int = 28
    inloop_deblock: bool = False
    grid_step: int = 4
    search_range: int = 16
    gop: int = 0                      # 0: only frame 0 is intra
    force_refine_off: bool = False    # keep the flag in the grammar but never set it
    record_decisions: bool = False    # retain per-macroblock candidate costs

    def __post_init__(self):
        if not 0 <= self.qp <= 51:
            raise ValueError(f"qp {self.qp} outside [0, 51]")
        if not 0 <= self.refine_h <= 51:
            raise ValueError(f"refine_h {self.refine_h} outside [0, 51]")
        if self.grid_step not in (4, 8):
            raise ValueError(f"grid_step must be 4 or 8, got {self.grid_step}")
        if self.search_range < 0:
            raise ValueError("search_range must be >= 0")
        if self.gop < 0:
            raise ValueError("gop must be >= 0")


@dataclass(frozen=True)
class StreamHeader:
    width: int
    height: int
    frame_count: int
    qp: int
    refine_enabled: bool
    inloop_deblock: bool
    refine_h: int
    grid_step: int
    fps: tuple

    def pack(self) -> bytes:
        flags = (1 if self.refine_enabled else 0) | (2 if self.inloop_deblock else 0)
        return struct.pack(
            _HEADER_FMT, MAGIC, VERSION, self.width, self.height, self.frame_count,
            self.qp, flags, self.refine_h, self.grid_step, self.fps[0], self.fps[1],
        )

    @classmethod
    def unpack(cls, data: bytes) -> "StreamHeader":
        if len(data) < HEADER_BYTES:
            raise TruncationError(f"stream header needs {HEADER_BYTES} bytes, got {len(data)}")
        magic, version, width, height, count, qp, flags, refine_h, grid, num, den = (
            struct.unpack(_HEADER_FMT, data[:HEADER_BYTES])
        )
        if magic != MAGIC:
            raise MagicError(f"bad magic {magic!r}")
        if version != VERSION:
            raise VersionError(f"unsupported stream version {version}")
        if width == 0 or width % MB or height == 0 or height % MB:
            raise StreamError(f"dimensions {width}x{height} not multiples of {MB}")
        if qp > 51 or refine_h > 51 or grid not in (4, 8) or num == 0 or den == 0:
            raise StreamError("header field out of range")
        return cls(width, height, count, qp, bool(flags & 1), bool(flags & 2),
                   refine_h, grid, (num, den))


def read_header(data: bytes) -> StreamHeader:
    """Parse and validate just the fixed-size stream header."""
    return StreamHeader.unpack(data)


# ---------------------------------------------------------------------------
# residual grammar: per 4x4 block, zigzag (run, level) pairs, level != 0,
# terminated by the pair (trailing_zeros, 0)

def _scan_bits(scan) -> int:
    bits = 0
    run = 0
    for v in scan:
        if v == 0:
            run += 1
        else:
            bits += ue_length(run) + se_length(v)
            run = 0
    return bits + ue_length(run) + 1  # se(0) is a single bit


def _write_scan(writer: BitWriter, scan) -> None:
    run = 0
    for v in scan:
        if v == 0:
            run += 1
        else:
            writer.write_ue(run)
            writer.write_se(v)
            run = 0
    writer.write_ue(run)
    writer.write_se(0)


def _read_scan(reader: BitReader) -> list:
    out = [0] * 16
    pos = 0
    while True:
        run = reader.read_ue()
        level = reader.read_se()
        if level == 0:
            if pos + run != 16:
                raise CodewordError(f"residual block covers {pos + run} of 16 samples")
            return out
        if abs(level) > _SANE_LIMIT:
            raise CodewordError(f"residual level {level} out of range")
        pos += run
        if pos >= 16:
            raise CodewordError("residual run overflows the block")
        out[pos] = level
        pos += 1


def _to_blocks(mb: np.ndarray) -> np.ndarray:
    """(16,16) -> (16,4,4) in raster sub-block order."""
    return mb.reshape(4, 4, 4, 4).swapaxes(1, 2).reshape(16, 4, 4)


def _from_blocks(blocks: np.ndarray) -> np.ndarray:
    return blocks.reshape(4, 4, 4, 4).swapaxes(1, 2).reshape(MB, MB)


def _trial_code(cur: np.ndarray, pred: np.ndarray, qp: int):
    """Code a macroblock against a predictor; returns (scans, recon, ssd, bits)."""
    residual = cur - pred
    levels = transform_quantize(_to_blocks(residual), qp)
    rebuilt = _from_blocks(dequantize_inverse(levels, qp))
    recon = np.clip(pred + rebuilt, 0, 255).astype(np.uint8)
    dist = int(((cur - recon) ** 2).sum())
    scans = levels.reshape(16, 16)[:, _ZZ].tolist()
    bits = sum(_scan_bits(s) for s in scans)
    return scans, recon, dist, bits


def _scans_to_blocks(scans) -> np.ndarray:
    flat = np.asarray(scans, dtype=np.int64)[:, _UNZIGZAG]
    return flat.reshape(16, 4, 4)


# ---------------------------------------------------------------------------

def intra_dc_predict(ctx: NeighborContext) -> np.ndarray:
    """Flat block at the rounded mean of the adjacent row/column samples."""
    total = 0
    count = 0
    if ctx.top is not None:
        total += int(ctx.top[-1].astype(np.int64).sum())
        count += MB
    if ctx.left is not None:
        total += int(ctx.left[:, -1].astype(np.int64).sum())
        count += MB
    dc = 128 if count == 0 else (total + count // 2) // count
    return np.full((MB, MB), dc, dtype=np.uint8)


def mode_decide(candidates, lam: float):
    """Pick argmin of ssd + lam * bits; ties keep the earliest candidate.

    candidates are (mode, distortion_ssd, rate_bits) triples; the chosen
    mode element is returned.
    """
    if not candidates:
        raise ValueError("no candidates to decide between")
    best = 0
    best_j = None
    for i, (_, dist, rate) in enumerate(candidates):
        j = dist + lam * rate
        if best_j is None or j < best_j:
            best = i
            best_j = j
    return candidates[best][0]


def _deblock_array(plane: np.ndarray, params, grid_step: int) -> np.ndarray:
    work = plane.astype(np.int32)
    _kernels.deblock_plane_inplace(work, params.edge_max, params.flat_max,
                                   params.strong_max, grid_step)
    return work.astype(np.uint8)


def inloop_deblock(frame: Frame, qp: int, grid_step: int = 4) -> Frame:
    """Filter a reconstructed frame before it enters the reference buffer.

    Reuses the refinement kernel with strength h = qp over every grid
    boundary of the frame, both sides written.
    """
    params = derive_thresholds(qp)
    return Frame(Plane(_deblock_array(frame.luma.data, params, grid_step)), frame.index)


# ---------------------------------------------------------------------------

@dataclass
class FrameStats:
    index: int
    frame_type: str
    bits: int = 0
    psnr_db: float = 0.0
    mode_counts: Dict[str, int] = field(
        default_factory=lambda: {"skip": 0, "inter16": 0, "inter8": 0, "intra": 0}
    )
    refine_flags: int = 0
    refine_calls: int = 0
    refine_seconds: float = 0.0


@dataclass
class MbDecision:
    frame: int
    mb: int
    lam: float
    costs: Dict[str, float]
    chosen: str


@dataclass
class StatsLog:
    qp: int
    lambda_mode: float
    frames: List[FrameStats] = field(default_factory=list)
    payload_bits: int = 0
    stream_bytes: int = 0
    decisions: Optional[List[MbDecision]] = None

    @property
    def mode_histogram(self) -> Dict[str, int]:
        histo = {"skip": 0, "inter16": 0, "inter8": 0, "intra": 0}
        for f in self.frames:
            for k, v in f.mode_counts.items():
                histo[k] += v
        return histo

    @property
    def inter_mb_count(self) -> int:
        histo = self.mode_histogram
        return histo["inter16"] + histo["inter8"]

    @property
    def refine_calls(self) -> int:
        return sum(f.refine_calls for f in self.frames)

    @property
    def refine_seconds(self) -> float:
        return sum(f.refine_seconds for f in self.frames)

    @property
    def refine_us_per_mb(self) -> Optional[float]:
        calls = self.refine_calls
        if calls == 0:
            return None
        return self.refine_seconds / calls * 1e6


@dataclass
class EncodeResult:
    bitstream: bytes
    recon: Sequence
    stats: StatsLog


@dataclass
class _Candidate:
    label: str
    mode: Mode
    partition: Optional[Partition]
    refine_flag: bool
    scans: Optional[list]
    recon: np.ndarray
    dist: int
    rate: int


def _write_macroblock(writer: BitWriter, cand: _Candidate, refine_in_grammar: bool) -> None:
    writer.write_ue(cand.mode.value)
    if cand.mode in _INTER_MODES and refine_in_grammar:
        writer.write_bit(1 if cand.refine_flag else 0)
    if cand.partition is not None:
        for mv in cand.partition.mvs:
            writer.write_se(mv.dx)
            writer.write_se(mv.dy)
    if cand.mode is not Mode.SKIP:
        for scan in cand.scans:
            _write_scan(writer, scan)


def encode_sequence(seq: Sequence, cfg: CodecConfig) -> EncodeResult:
    """Encode a sequence; returns the bitstream, the local reconstruction
    (identical to what the decoder will produce) and per-frame statistics."""
    if len(seq) == 0:
        raise ValueError("cannot encode an empty sequence")
    if seq.width > 0xFFFF or seq.height > 0xFFFF or len(seq) > 0xFFFFFFFF:
        raise ValueError("sequence exceeds header field limits")

    lam = 0.85 * 2.0 ** ((cfg.qp - 12) / 3.0)
    refine_params = derive_thresholds(cfg.refine_h)
    inloop_params = derive_thresholds(cfg.qp)
    make_refined = cfg.refine_enabled and not cfg.force_refine_off
    flag_in_rate = 1 if make_refined else 0

    if make_refined:
        # bring the compiled kernel up before any timed refinement call
        refine_block(np.zeros((MB, MB), np.uint8), NeighborContext(), refine_params,
                     cfg.grid_step)

    writer = BitWriter()
    stats = StatsLog(qp=cfg.qp, lambda_mode=lam,
                     decisions=[] if cfg.record_decisions else None)
    recon_frames = []
    reference: Optional[np.ndarray] = None

    for frame in seq.frames:
        is_intra = frame.index == 0 or (cfg.gop > 0 and frame.index % cfg.gop == 0)
        fstats = FrameStats(frame.index, "I" if is_intra else "P")
        start = writer.position
        writer.write_bit(0 if is_intra else 1)

        cur = frame.luma.data.astype(np.int32)
        recon = np.empty_like(frame.luma.data)
        ref_plane = None if reference is None else Plane(reference)

        mb_index = 0
        for y0 in range(0, frame.height, MB):
            for x0 in range(0, frame.width, MB):
                cur_mb = cur[y0:y0 + MB, x0:x0 + MB]
                ctx = NeighborContext.at(recon, x0, y0)
                if is_intra:
                    scans, mb_recon, _, _ = _trial_code(cur_mb, intra_dc_predict(ctx), cfg.qp)
                    for scan in scans:
                        _write_scan(writer, scan)
                    recon[y0:y0 + MB, x0:x0 + MB] = mb_recon
                    fstats.mode_counts["intra"] += 1
                else:
                    cands = _pframe_candidates(
                        cur_mb, ref_plane, ctx, x0, y0, cfg, refine_params,
                        flag_in_rate, make_refined, fstats,
                    )
                    costs = [c.dist + lam * c.rate for c in cands]
                    best = min(range(len(cands)), key=lambda i: (costs[i], i))
                    chosen = cands[best]
                    _write_macroblock(writer, chosen, cfg.refine_enabled)
                    recon[y0:y0 + MB, x0:x0 + MB] = chosen.recon
                    _count_mode(fstats, chosen)
                    if stats.decisions is not None:
                        stats.decisions.append(MbDecision(
                            frame.index, mb_index, lam,
                            {c.label: j for c, j in zip(cands, costs)}, chosen.label,
                        ))
                mb_index += 1

        out = _deblock_array(recon, inloop_params, cfg.grid_step) if cfg.inloop_deblock else recon
        reference = out
        recon_frames.append(Frame(Plane(out), frame.index))
        fstats.bits = writer.position - start
        fstats.psnr_db = metrics.psnr(out, frame.luma.data)
        stats.frames.append(fstats)

    stats.payload_bits = writer.position
    header = StreamHeader(seq.width, seq.height, len(seq), cfg.qp, cfg.refine_enabled,
                          cfg.inloop_deblock, cfg.refine_h, cfg.grid_step, seq.frame_rate)
    bitstream = header.pack() + writer.getvalue()
    stats.stream_bytes = len(bitstream)
    return EncodeResult(bitstream, Sequence(tuple(recon_frames), seq.frame_rate), stats)


def _count_mode(fstats: FrameStats, chosen: _Candidate) -> None:
    key = {Mode.SKIP: "skip", Mode.INTER_16x16: "inter16",
           Mode.INTER_8x8: "inter8", Mode.INTRA_DC: "intra"}[chosen.mode]
    fstats.mode_counts[key] += 1
    if chosen.refine_flag:
        fstats.refine_flags += 1


def _pframe_candidates(cur_mb, ref_plane, ctx, x0, y0, cfg, refine_params,
                       flag_in_rate, make_refined, fstats):
    colocated = ref_plane.data[y0:y0 + MB, x0:x0 + MB]
    cands = [_Candidate(
        "skip", Mode.SKIP, None, False, None, colocated,
        int(((cur_mb - colocated) ** 2).sum()), ue_length(Mode.SKIP.value),
    )]

    whole, quads = search_partitions(cur_mb, ref_plane, (x0, y0), cfg.search_range)
    partitions = (
        ("inter16", Mode.INTER_16x16, Partition(PartitionKind.WHOLE_16x16, (whole[0],))),
        ("inter8", Mode.INTER_8x8, Partition(PartitionKind.QUAD_8x8, tuple(mv for mv, _ in quads))),
    )
    for label, mode, part in partitions:
        mv_bits = sum(se_length(mv.dx) + se_length(mv.dy) for mv in part.mvs)
        pred = motion_compensate(ref_plane, (x0, y0), part)
        scans, rec, dist, res_bits = _trial_code(cur_mb, pred, cfg.qp)
        base_rate = ue_length(mode.value) + mv_bits + res_bits
        cands.append(_Candidate(label, mode, part, False, scans, rec, dist,
                                base_rate + flag_in_rate))
        if make_refined:
            t0 = time.perf_counter()
            refined = refine_block(pred, ctx, refine_params, cfg.grid_step)
            fstats.refine_seconds += time.perf_counter() - t0
            fstats.refine_calls += 1
            scans_r, rec_r, dist_r, res_bits_r = _trial_code(cur_mb, refined, cfg.qp)
            cands.append(_Candidate(label + "_refined", mode, part, True, scans_r,
                                    rec_r, dist_r,
                                    ue_length(mode.value) + mv_bits + res_bits_r + 1))

    pred_i = intra_dc_predict(ctx)
    scans_i, rec_i, dist_i, res_bits_i = _trial_code(cur_mb, pred_i, cfg.qp)
    cands.append(_Candidate("intra", Mode.INTRA_DC, None, False, scans_i, rec_i,
                            dist_i, ue_length(Mode.INTRA_DC.value) + res_bits_i))
    return cands


# ---------------------------------------------------------------------------

def decode_sequence(data: bytes) -> Sequence:
    """Decode a bitstream back into the encoder's reconstruction."""
    header = StreamHeader.unpack(data)
    reader = BitReader(data[HEADER_BYTES:])
    refine_params = derive_thresholds(header.refine_h)
    inloop_params = derive_thresholds(header.qp)

    frames = []
    reference: Optional[np.ndarray] = None
    for f in range(header.frame_count):
        try:
            is_intra = reader.read_bit() == 0
        except OutOfBits as exc:
            raise TruncationError(f"frame {f}: stream ended at frame header") from exc
        if not is_intra and reference is None:
            raise CodewordError(f"frame {f} is predicted but no reference frame exists")

        recon = np.empty((header.height, header.width), dtype=np.uint8)
        ref_plane = None if reference is None else Plane(reference)
        mb_index = 0
        for y0 in range(0, header.height, MB):
            for x0 in range(0, header.width, MB):
                try:
                    _decode_macroblock(reader, header, recon, ref_plane, x0, y0,
                                       is_intra, refine_params)
                except OutOfBits as exc:
                    raise TruncationError(
                        f"frame {f} macroblock {mb_index}: stream truncated"
                    ) from exc
                except CodewordError as exc:
                    raise CodewordError(f"frame {f} macroblock {mb_index}: {exc}") from exc
                mb_index += 1

        out = _deblock_array(recon, inloop_params, header.grid_step) \
            if header.inloop_deblock else recon
        reference = out
        frames.append(Frame(Plane(out), f))

    if reader.remaining >= 8 or (reader.remaining and reader.read_bits(reader.remaining)):
        raise TrailingDataError(
            f"{reader.remaining} unexpected bits after frame {header.frame_count - 1}"
        )
    return Sequence(tuple(frames), header.fps)


def _decode_macroblock(reader, header, recon, ref_plane, x0, y0, is_intra, refine_params):
    ctx = NeighborContext.at(recon, x0, y0)
    if is_intra:
        pred = intra_dc_predict(ctx)
        _apply_residual(reader, recon, pred, x0, y0, header.qp)
        return

    mode_code = reader.read_ue()
    if mode_code > 3:
        raise CodewordError(f"invalid mode codeword {mode_code}")
    mode = Mode(mode_code)

    if mode is Mode.SKIP:
        recon[y0:y0 + MB, x0:x0 + MB] = ref_plane.data[y0:y0 + MB, x0:x0 + MB]
        return

    if mode is Mode.INTRA_DC:
        pred = intra_dc_predict(ctx)
        _apply_residual(reader, recon, pred, x0, y0, header.qp)
        return

    refined = False
    if header.refine_enabled:
        refined = reader.read_bit() == 1
    count = 1 if mode is Mode.INTER_16x16 else 4
    mvs = []
    for _ in range(count):
        dx = reader.read_se()
        dy = reader.read_se()
        if abs(dx) > _SANE_LIMIT or abs(dy) > _SANE_LIMIT:
            raise CodewordError(f"motion vector ({dx},{dy}) out of range")
        mvs.append((dx, dy))
    kind = PartitionKind.WHOLE_16x16 if mode is Mode.INTER_16x16 else PartitionKind.QUAD_8x8
    pred = motion_compensate(ref_plane, (x0, y0), Partition(kind, tuple(mvs)))
    if refined:
        pred = refine_block(pred, ctx, refine_params, header.grid_step)
    _apply_residual(reader, recon, pred, x0, y0, header.qp)


def _apply_residual(reader, recon, pred, x0, y0, qp):
    scans = [_read_scan(reader) for _ in range(16)]
    rebuilt = _from_blocks(dequantize_inverse(_scans_to_blocks(scans), qp))
    recon[y0:y0 + MB, x0:x0 + MB] = np.clip(
        pred.astype(np.int64) + rebuilt, 0, 255
    ).astype(np.uint8)
