"""Neck localisation by template matching on an adjusted MAD map.

The neck is horizontally the slimmest body part in view, so each row of the
mean-absolute-difference map has a multiple of its own mean subtracted
before the global minimum is taken. Two template scales are tried.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Rect, load_frame, save_frame
from .errors import ValidationError
from .resize import resize, scaled_shape, to_uint8

TEMPLATE_SHAPE = (19, 81)  # rows, cols
DEFAULT_SCALES = (1.0, 0.8)
AMAD_FACTOR = 4.0


@dataclass(frozen=True, eq=False)
class Template:
    pixels: np.ndarray
    note: str = ""

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.size == 0:
            raise ValidationError("template must be a non-empty 2-D image")
        object.__setattr__(self, "pixels", to_uint8(px) if px.dtype != np.uint8 else px.copy())

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    def scaled(self, scale: float) -> "Template":
        if scale == 1.0:
            return self
        shape = scaled_shape(self.shape, scale)
        return Template(to_uint8(resize(self.pixels, shape)), f"{self.note} x{scale:g}".strip())


@dataclass(frozen=True)
class MatchResult:
    rect: Rect
    scale: float
    score: float


def build_template(crops, shape: tuple[int, int] = TEMPLATE_SHAPE, note: str = "") -> Template:
    """Average of the crops after bicubic resizing to ``shape``, rounded to 8 bits."""
    crops = list(crops)
    if not crops:
        raise ValidationError("build_template needs at least one crop")
    acc = np.zeros(shape)
    for crop in crops:
        acc += resize(np.asarray(crop, dtype=float), shape)
    return Template(to_uint8(acc / len(crops)), note or f"mean of {len(crops)} crops")


def load_template(path) -> Template:
    return Template(load_frame(path), note=str(Path(path)))


def save_template(template: Template, path) -> None:
    save_frame(template.pixels, path)


def mad_map(search: np.ndarray, template: Template | np.ndarray) -> np.ndarray:
    """Mean absolute difference for every full placement of the template."""
    s = np.asarray(search, dtype=np.int32)
    t = np.asarray(template.pixels if isinstance(template, Template) else template, dtype=np.int32)
    if s.ndim != 2 or t.ndim != 2:
        raise ValidationError("search and template must be 2-D")
    tr, tc = t.shape
    rows, cols = s.shape[0] - tr + 1, s.shape[1] - tc + 1
    if rows <= 0 or cols <= 0:
        raise ValidationError(f"template {t.shape} larger than search image {s.shape}")
    acc = np.zeros((rows, cols), dtype=np.int64)
    for i in range(tr):
        for j in range(tc):
            acc += np.abs(s[i:i + rows, j:j + cols] - t[i, j])
    return acc / float(tr * tc)


def amad_map(mad: np.ndarray, factor: float = AMAD_FACTOR) -> np.ndarray:
    mad = np.asarray(mad, dtype=float)
    if mad.ndim != 2 or mad.size == 0:
        raise ValidationError("MAD map must be a non-empty 2-D array")
    return mad - factor * mad.mean(axis=1, keepdims=True)


def detect_neck(frame: np.ndarray, template: Template, scales=DEFAULT_SCALES,
                factor: float = AMAD_FACTOR) -> MatchResult:
    """Best template placement over all scales.

    Ties go to the earlier scale in ``scales``, then the top-most, then the
    left-most placement.
    """
    frame = np.asarray(frame)
    best: MatchResult | None = None
    for scale in scales:
        tpl = template.scaled(scale)
        th, tw = tpl.shape
        if th > frame.shape[0] or tw > frame.shape[1]:
            continue
        amad = amad_map(mad_map(frame, tpl), factor)
        flat = int(np.argmin(amad))
        x, y = divmod(flat, amad.shape[1])
        score = float(amad[x, y])
        if best is None or score < best.score:
            best = MatchResult(Rect(x, y, th, tw), scale, score)
    if best is None:
        raise ValidationError(f"frame {frame.shape} is smaller than every scaled template")
    return best


def expand_breathing_roi(neck: Rect, frame_height: int, frame_width: int) -> Rect:
    """Five times the neck height (two heights above, two below), clamped to the frame."""
    grown = Rect(neck.top - 2 * neck.height, neck.left, 5 * neck.height, neck.width)
    return grown.clamp(frame_height, frame_width)
