"""Separable bicubic resampling (Catmull-Rom kernel, clamped edges)."""
from __future__ import annotations

import math

import numpy as np

from .errors import ValidationError

KERNEL_A = -0.5


def cubic_kernel(x: np.ndarray, a: float = KERNEL_A) -> np.ndarray:
    x = np.abs(np.asarray(x, dtype=float))
    out = np.zeros_like(x)
    near = x <= 1
    far = (x > 1) & (x < 2)
    out[near] = (a + 2) * x[near] ** 3 - (a + 3) * x[near] ** 2 + 1
    out[far] = a * x[far] ** 3 - 5 * a * x[far] ** 2 + 8 * a * x[far] - 4 * a
    return out


def resize_weights(n_in: int, n_out: int) -> np.ndarray:
    """``(n_out, n_in)`` interpolation matrix with pixel-centre alignment."""
    if n_in <= 0 or n_out <= 0:
        raise ValidationError("resize dimensions must be positive")
    scale = n_in / n_out
    src = (np.arange(n_out) + 0.5) * scale - 0.5
    base = np.floor(src).astype(int)
    w = np.zeros((n_out, n_in))
    rows = np.arange(n_out)
    for tap in range(-1, 3):
        idx = base + tap
        weight = cubic_kernel(src - idx)
        np.add.at(w, (rows, np.clip(idx, 0, n_in - 1)), weight)
    return w


def scaled_shape(shape: tuple[int, int], scale: float) -> tuple[int, int]:
    """Output size for a scale factor, rounding up as image toolboxes do."""
    return tuple(max(1, int(math.ceil(scale * n - 1e-9))) for n in shape)


def resize(image: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Bicubic resize of the last two axes of ``image`` to ``shape`` (float result)."""
    img = np.asarray(image, dtype=float)
    if img.ndim < 2:
        raise ValidationError("resize needs at least a 2-D array")
    wr = resize_weights(img.shape[-2], shape[0])
    wc = resize_weights(img.shape[-1], shape[1])
    return wr @ (img @ wc.T)


def to_uint8(image: np.ndarray) -> np.ndarray:
    return np.clip(np.round(image), 0, 255).astype(np.uint8)
