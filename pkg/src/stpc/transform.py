"""4x4 integer transform with scaled quantization.

The separable core transform folds the basis norms into the coefficients;
quantization divides them back out together with the step size, and the
inverse rescales exactly (lcm of the norm products is 400), so a
quantization bypass reconstructs the input bit-exactly.  All rounding is
round-half-up via rdiv.
"""

from __future__ import annotations

import numpy as np

CORE = np.array(
    [[1, 1, 1, 1],
     [2, 1, -1, -2],
     [1, -1, -1, 1],
     [1, -2, 2, -1]],
    dtype=np.int64,
)
_NORMS = np.array([4, 10, 4, 10], dtype=np.int64)     # row norms of CORE
WEIGHT = np.outer(_NORMS, _NORMS)                     # values in {16, 40, 100}
_INV_SCALE = np.int64(400) // WEIGHT                  # {25, 10, 4}

# step numerators in 1/16 units; the step doubles every 6 qp
QNUM_BASE = (10, 11, 13, 14, 16, 18)

ZIGZAG = (0, 1, 4, 8, 5, 2, 3, 6, 9, 12, 13, 10, 7, 11, 14, 15)

QP_MAX = 51


def rdiv(a, b):
    """floor((a + b/2) / b) for b > 0: round half toward +inf.

    Works elementwise on arrays and exactly for odd b.
    """
    return (2 * a + b) // (2 * b)


def quant_numerator(qp: int) -> int:
    if not 0 <= qp <= QP_MAX:
        raise ValueError(f"qp {qp} outside [0, {QP_MAX}]")
    return QNUM_BASE[qp % 6] << (qp // 6)


def forward_transform(blocks: np.ndarray) -> np.ndarray:
    """CORE @ X @ CORE.T for one (4,4) block or a batch (n,4,4)."""
    x = np.asarray(blocks, dtype=np.int64)
    return CORE @ x @ CORE.T


def transform_quantize(residual: np.ndarray, qp: int) -> np.ndarray:
    """Transform and quantize; accepts (4,4) or (n,4,4), entries in [-255,255]."""
    qnum = quant_numerator(qp)
    coeff = forward_transform(residual)
    return rdiv(coeff * 256, qnum * WEIGHT)


def dequantize_inverse(levels: np.ndarray, qp: int) -> np.ndarray:
    """Reconstruct residuals from quantized levels; clamped to [-255, 255].

    The coefficient estimate is divided by the per-position weight exactly
    (scaled by 400/weight, all integer) before the inverse pass, then the
    common factor 400 is rounded out once per sample.
    """
    qnum = quant_numerator(qp)
    lev = np.asarray(levels, dtype=np.int64)
    coeff = rdiv(lev * (qnum * WEIGHT), 256)
    mixed = CORE.T @ (coeff * _INV_SCALE) @ CORE
    return np.clip(rdiv(mixed, 400), -255, 255)
