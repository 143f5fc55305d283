"""Shared fixtures-in-code: synthetic content and bulk property engines."""

import numpy as np

from stpc import Frame, NeighborContext, Plane, Sequence, boundary_schedule
from stpc.refine import Orientation

import oracle_deblock


def octet_batch(rng, n, lo=0, hi=255):
    """Random octets mixing uniform draws with correlated near-flat ones.

    Uniform octets rarely satisfy the filter guards, so half the batch is
    built as base value plus small jitter to exercise both branches.
    """
    uniform = rng.integers(lo, hi + 1, size=(n, 8))
    base = rng.integers(lo, hi + 1, size=(n, 1))
    jitter = rng.integers(-14, 15, size=(n, 8))
    correlated = np.clip(base + jitter, 0, 255)
    take = rng.random(n) < 0.5
    return np.where(take[:, None], correlated, uniform).astype(np.int32)


def random_block_and_context(rng, flat_bias=True):
    """A 16x16 block with randomly present neighbor patches."""
    if flat_bias and rng.random() < 0.5:
        base = int(rng.integers(0, 256))
        block = np.clip(base + rng.integers(-12, 13, size=(16, 16)), 0, 255)
        left = np.clip(base + rng.integers(-12, 13, size=(16, 4)), 0, 255)
        top = np.clip(base + rng.integers(-12, 13, size=(4, 16)), 0, 255)
    else:
        block = rng.integers(0, 256, size=(16, 16))
        left = rng.integers(0, 256, size=(16, 4))
        top = rng.integers(0, 256, size=(4, 16))
    has_left = bool(rng.random() < 0.8)
    has_top = bool(rng.random() < 0.8)
    ctx = NeighborContext(
        left.astype(np.uint8) if has_left else None,
        top.astype(np.uint8) if has_top else None,
    )
    return block.astype(np.uint8), ctx


def schedule_arrays(grid_step, has_left, has_top):
    """boundary_schedule flattened into int arrays for the compiled replay."""
    tasks = boundary_schedule(grid_step, has_left, has_top)
    orients = np.array(
        [0 if t.orientation is Orientation.VERTICAL else 1 for t in tasks], dtype=np.int64
    )
    offsets = np.array([t.offset for t in tasks], dtype=np.int64)
    lines = np.array([t.line for t in tasks], dtype=np.int64)
    return orients, offsets, lines


def oracle_refine(pred, ctx, params, grid_step=4):
    """Refine a block by replaying the public schedule with the oracle kernel."""
    block = np.asarray(pred, dtype=np.int32).copy()
    left = np.zeros((16, 4), dtype=np.int32)
    top = np.zeros((4, 16), dtype=np.int32)
    has_left = ctx.left is not None
    has_top = ctx.top is not None
    if has_left:
        left[:] = ctx.left
    if has_top:
        top[:] = ctx.top
    orients, offsets, lines = schedule_arrays(grid_step, has_left, has_top)
    oracle_deblock.replay_schedule(
        block, left, top, has_left, has_top, orients, offsets, lines,
        params.edge_max, params.flat_max, params.strong_max,
    )
    return block.astype(np.uint8)


def oracle_deblock_frame(plane, qp, grid_step=4):
    """Frame-level reference pass: raster macroblocks, vertical boundaries
    then horizontal within each, offset-0 edges against the already-filtered
    neighbor, both sides written, all via the oracle kernel."""
    from stpc import derive_thresholds

    params = derive_thresholds(qp)
    work = np.asarray(plane, dtype=np.int32).copy()
    height, width = work.shape
    octet = np.empty(8, dtype=np.int32)
    for mb_y in range(height // 16):
        for mb_x in range(width // 16):
            for off in range(0, 16, grid_step):
                x = mb_x * 16 + off
                if x == 0:
                    continue
                for row in range(16):
                    y = mb_y * 16 + row
                    octet[:] = work[y, x - 4:x + 4]
                    res = oracle_deblock.edge8(octet, params.edge_max,
                                               params.flat_max, params.strong_max)
                    work[y, x - 4:x + 4] = res
            for off in range(0, 16, grid_step):
                y = mb_y * 16 + off
                if y == 0:
                    continue
                for col in range(16):
                    x = mb_x * 16 + col
                    octet[:] = work[y - 4:y + 4, x]
                    res = oracle_deblock.edge8(octet, params.edge_max,
                                               params.flat_max, params.strong_max)
                    work[y - 4:y + 4, x] = res
    return work.astype(np.uint8)


def moving_scene(width=64, height=64, frames=10, seed=3, fps=(30, 1)):
    """Textured canvas with global motion and a local moving patch.

    Deterministic; rich enough that P-frames exercise every mode.
    """
    rng = np.random.default_rng(seed)
    cw, ch = width * 2, height * 2
    canvas = rng.integers(0, 256, size=(ch, cw)).astype(np.float64)
    # smooth the noise so motion compensation has something to find
    for _ in range(2):
        canvas = (canvas + np.roll(canvas, 1, 0) + np.roll(canvas, 1, 1)
                  + np.roll(canvas, -1, 0) + np.roll(canvas, -1, 1)) / 5
    canvas = 64 + (canvas - canvas.min()) / (np.ptp(canvas) + 1e-9) * 128
    out = []
    for t in range(frames):
        ox, oy = (3 * t) % width, (2 * t) % height
        frame = canvas[oy:oy + height, ox:ox + width].copy()
        # a small block moving against the pan
        bx, by = (width // 2 + 5 * t) % (width - 12), (height // 3 + 3 * t) % (height - 12)
        frame[by:by + 12, bx:bx + 12] = 230 - 8 * (t % 3)
        out.append(Frame(Plane(np.clip(frame, 0, 255).astype(np.uint8)), t))
    return Sequence(tuple(out), fps)


def panning_sequence(width=176, height=144, frames=30, seed=7, fps=(30, 1),
                     velocity=(0.8, 0.45)):
    """Smooth analytic field with fine texture under sub-pel global pan.

    Built from sinusoid components at several scales evaluated at shifted
    coordinates, so motion is genuinely sub-pel without any resampling.
    """
    rng = np.random.default_rng(seed)
    components = []
    for wavelength, amplitude, count in ((72.0, 26.0, 3), (26.0, 11.0, 4), (9.0, 5.0, 5)):
        for _ in range(count):
            theta = rng.uniform(0.0, 2.0 * np.pi)
            freq = 1.0 / (wavelength * rng.uniform(0.8, 1.25))
            fx, fy = freq * np.cos(theta), freq * np.sin(theta)
            components.append((fx, fy, amplitude * rng.uniform(0.7, 1.3),
                               rng.uniform(0.0, 2.0 * np.pi)))
    vx, vy = velocity
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    out = []
    for t in range(frames):
        acc = np.full((height, width), 128.0)
        for fx, fy, amp, phase in components:
            acc += amp * np.sin(2.0 * np.pi * (fx * (xs + vx * t) + fy * (ys + vy * t)) + phase)
        out.append(Frame(Plane(np.clip(acc, 0, 255).astype(np.uint8)), t))
    return Sequence(tuple(out), fps)
