"""Raw video I/O: Y4M (YUV4MPEG2) parsing/writing and planar frame storage.

The codec is luma-only: chroma planes are read and discarded on input and
written as constant mid-gray on output.  Planes are immutable after
construction and safe to share across threads.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import BinaryIO, Union

import numpy as np

MACROBLOCK = 16


class Y4MError(ValueError):
    """Malformed or unsupported Y4M data."""


class DimensionError(Y4MError):
    """Frame dimensions violate the 16-pixel alignment requirement."""


@dataclass(frozen=True)
class Plane:
    """A 2-D grid of 8-bit samples, row-major, immutable once built."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise ValueError(f"plane must be 2-D, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if arr.size and (arr.min() < 0 or arr.max() > 255):
                raise ValueError("plane samples must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        else:
            arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


def sample_at(plane: Plane, x: int, y: int) -> int:
    """Sample with edge replication: out-of-bounds coordinates are clamped."""
    xc = min(max(x, 0), plane.width - 1)
    yc = min(max(y, 0), plane.height - 1)
    return int(plane.data[yc, xc])


@dataclass(frozen=True)
class Frame:
    """One luma plane plus its position in the sequence."""

    luma: Plane
    index: int = 0

    def __post_init__(self):
        if self.index < 0:
            raise ValueError("frame index must be non-negative")
        for name, value in (("width", self.luma.width), ("height", self.luma.height)):
            if value == 0 or value % MACROBLOCK != 0:
                raise DimensionError(
                    f"{name} {value} is not a positive multiple of {MACROBLOCK}"
                )

    @property
    def width(self) -> int:
        return self.luma.width

    @property
    def height(self) -> int:
        return self.luma.height


@dataclass(frozen=True)
class Sequence:
    """Ordered frames with a rational frame rate (num/den)."""

    frames: tuple
    frame_rate: tuple = (30, 1)

    def __post_init__(self):
        frames = tuple(self.frames)
        object.__setattr__(self, "frames", frames)
        num, den = self.frame_rate
        if num <= 0 or den <= 0:
            raise ValueError(f"invalid frame rate {num}:{den}")
        for i, frame in enumerate(frames):
            if frame.index != i:
                raise ValueError(f"frame {i} carries index {frame.index}")
            if (frame.width, frame.height) != (frames[0].width, frames[0].height):
                raise ValueError("all frames must share identical dimensions")

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def height(self) -> int:
        return self.frames[0].height

    @property
    def fps(self) -> float:
        return self.frame_rate[0] / self.frame_rate[1]


_SUPPORTED_420 = {"420", "420jpeg", "420mpeg2", "420paldv"}


def _parse_header(line: bytes):
    fields = line.decode("ascii", errors="replace").split()
    if not fields or fields[0] != "YUV4MPEG2":
        raise Y4MError("missing YUV4MPEG2 signature")
    width = height = None
    rate = None
    colorspace = "420"
    for token in fields[1:]:
        tag, rest = token[0], token[1:]
        if tag == "W":
            width = int(rest)
        elif tag == "H":
            height = int(rest)
        elif tag == "F":
            num, _, den = rest.partition(":")
            rate = (int(num), int(den or "1"))
        elif tag == "C":
            colorspace = rest
        # I (interlacing), A (aspect) and X (extensions) are ignored
    if width is None or height is None or rate is None:
        raise Y4MError(f"header lacks W/H/F fields: {line!r}")
    if colorspace not in _SUPPORTED_420 and colorspace != "mono":
        raise Y4MError(f"unsupported colorspace C{colorspace}")
    return width, height, rate, colorspace


def _read_line(stream: BinaryIO, what: str) -> bytes:
    chunks = bytearray()
    while True:
        b = stream.read(1)
        if not b:
            raise Y4MError(f"stream ended inside {what}")
        if b == b"\n":
            return bytes(chunks)
        chunks += b
        if len(chunks) > 512:
            raise Y4MError(f"{what} exceeds 512 bytes; not a Y4M stream?")


def read_y4m(source: Union[bytes, BinaryIO]) -> Sequence:
    """Parse a Y4M stream, keeping luma only.

    Accepts raw bytes or a binary file object.  C420 chroma is consumed and
    discarded; mono streams carry no chroma.  Frame dimensions must be
    multiples of 16.
    """
    stream = io.BytesIO(source) if isinstance(source, (bytes, bytearray)) else source
    width, height, rate, colorspace = _parse_header(_read_line(stream, "stream header"))
    if width % MACROBLOCK != 0:
        raise DimensionError(f"width {width} is not a positive multiple of {MACROBLOCK}")
    if height % MACROBLOCK != 0:
        raise DimensionError(f"height {height} is not a positive multiple of {MACROBLOCK}")

    luma_size = width * height
    chroma_size = 0 if colorspace == "mono" else (width // 2) * (height // 2) * 2

    frames = []
    while True:
        marker = stream.read(5)
        if marker == b"":
            break
        if marker != b"FRAME":
            raise Y4MError(f"expected FRAME marker at frame {len(frames)}, got {marker!r}")
        _read_line(stream, f"frame {len(frames)} header")  # optional frame parameters
        payload = stream.read(luma_size + chroma_size)
        if len(payload) != luma_size + chroma_size:
            raise Y4MError(
                f"frame {len(frames)} payload truncated "
                f"({len(payload)} of {luma_size + chroma_size} bytes)"
            )
        luma = np.frombuffer(payload, dtype=np.uint8, count=luma_size)
        frames.append(Frame(Plane(luma.reshape(height, width)), index=len(frames)))
    if not frames:
        raise Y4MError("stream contains no frames")
    return Sequence(tuple(frames), rate)


def write_y4m(sequence: Sequence) -> bytes:
    """Serialize a sequence as Y4M in C420 with flat mid-gray chroma."""
    if len(sequence) == 0:
        raise ValueError("cannot write an empty sequence")
    num, den = sequence.frame_rate
    out = io.BytesIO()
    out.write(
        f"YUV4MPEG2 W{sequence.width} H{sequence.height} F{num}:{den} C420\n".encode("ascii")
    )
    chroma = bytes([128]) * ((sequence.width // 2) * (sequence.height // 2))
    for frame in sequence.frames:
        out.write(b"FRAME\n")
        out.write(frame.luma.data.tobytes())
        out.write(chroma)
        out.write(chroma)
    return out.getvalue()
