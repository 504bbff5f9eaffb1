"""Breathing rate from whole-neck translation.

The neck rectangle is grown to five times its height, averaged per frame,
and each 30 s window is resampled to a uniform grid, band-passed forward
and backward, and turned into a Lomb-Scargle spectrum. The same chain HMM
as the heart-rate path smooths the window spectra.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import FrameSequence, Rect, TimeWindow, VitalTrace, sequence_windows
from .errors import ValidationError
from .roi import AMAD_FACTOR, DEFAULT_SCALES, Template, detect_neck, expand_breathing_roi
from .smoothing import DEFAULT_LAMBDA, HmmConfig, smooth_spectra
from .spectral import (
    BR_BAND,
    DEFAULT_GRID_STEP,
    Band,
    butter_bandpass_zero_phase,
    frequency_grid,
    lomb_scargle,
    resample_uniform,
    uniform_times,
)


@dataclass(frozen=True)
class BrConfig:
    window: TimeWindow = field(default_factory=TimeWindow)
    band: Band = BR_BAND
    grid_step: float = DEFAULT_GRID_STEP
    lam: float = DEFAULT_LAMBDA
    direction: str = "bidirectional"
    amad_factor: float = AMAD_FACTOR
    scales: tuple[float, ...] = DEFAULT_SCALES
    filter_order: int = 3
    filter_padlen: int | None = None
    filter_before_windowing: bool = False

    def hmm(self) -> HmmConfig:
        return HmmConfig(self.band, self.grid_step, self.lam, self.direction)


def spatial_average(seq: FrameSequence, roi: Rect) -> tuple[np.ndarray, np.ndarray]:
    roi.check_within(seq.height, seq.width)
    rows, cols = roi.slices
    return seq.frames[:, rows, cols].mean(axis=(1, 2)), seq.timestamps.copy()


def breathing_series(values: np.ndarray, times: np.ndarray, cfg: BrConfig = BrConfig()):
    """Uniformly resampled, zero-phase band-passed breathing signal: ``(signal, times)``."""
    uniform, rate = resample_uniform(values, times)
    filtered = butter_bandpass_zero_phase(uniform, rate, cfg.band, cfg.filter_order,
                                          cfg.filter_padlen)
    return filtered, uniform_times(times[0], rate, uniform.size)


def estimate_br_from_series(values: np.ndarray, times: np.ndarray,
                            cfg: BrConfig = BrConfig()) -> VitalTrace:
    values = np.asarray(values, dtype=float)
    times = np.asarray(times, dtype=float)
    wins = sequence_windows(times, cfg.window)
    grid = frequency_grid(cfg.band.hi * 1.000001, cfg.grid_step, cfg.band)
    if cfg.filter_before_windowing:
        whole, whole_t = breathing_series(values, times, cfg)
    spectra = []
    for win in wins:
        if cfg.filter_before_windowing:
            idx = win.indices(whole_t)
            sig, t = whole[idx], whole_t[idx]
        else:
            idx = win.indices(times)
            sig, t = breathing_series(values[idx], times[idx], cfg)
        spectra.append(lomb_scargle(sig, t, grid, nyquist=0.5 / np.median(np.diff(t))))
    freqs = smooth_spectra(spectra, cfg.hmm())
    return VitalTrace([w.start for w in wins], 60.0 * freqs)


def breathing_roi(seq: FrameSequence, template: Template, cfg: BrConfig = BrConfig()) -> Rect:
    match = detect_neck(seq.frames[0], template, cfg.scales, cfg.amad_factor)
    return expand_breathing_roi(match.rect, seq.height, seq.width)


def estimate_br(seq: FrameSequence, template: Template, cfg: BrConfig = BrConfig()) -> VitalTrace:
    if seq.span < cfg.window.duration - 0.5 * seq.frame_interval:
        raise ValidationError(
            f"sequence spans {seq.span:.2f} s, shorter than one {cfg.window.duration:g} s window"
        )
    values, times = spatial_average(seq, breathing_roi(seq, template, cfg))
    return estimate_br_from_series(values, times, cfg)
