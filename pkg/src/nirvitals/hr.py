"""Heart rate from carotid skin motion.

Per 30 s window: common-average montage (the average is candidate ``c0``),
PCA on the residual channels (second and third scores are ``c1``/``c2``),
Lomb-Scargle spectra, pick the candidate with the highest pulse
significance, then smooth the picked spectra across windows with the chain
HMM.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ChannelMatrix, FrameSequence, Rect, TimeWindow, VitalTrace, sequence_windows
from .errors import NumericalError, ValidationError
from .resize import resize, to_uint8
from .roi import AMAD_FACTOR, DEFAULT_SCALES, MatchResult, Template, detect_neck
from .smoothing import DEFAULT_LAMBDA, HmmConfig, smooth_spectra
from .spectral import (
    DEFAULT_GRID_STEP,
    HR_BAND,
    Band,
    Spectrum,
    frequency_grid,
    lomb_scargle_power,
    nyquist_of,
    pulse_significance,
)

LABELS = ("c0", "c1", "c2")


@dataclass(frozen=True)
class HrConfig:
    window: TimeWindow = field(default_factory=TimeWindow)
    band: Band = HR_BAND
    grid_step: float = DEFAULT_GRID_STEP
    lam: float = DEFAULT_LAMBDA
    direction: str = "bidirectional"
    amad_factor: float = AMAD_FACTOR
    scales: tuple[float, ...] = DEFAULT_SCALES
    kurtosis_moments: str = "frequency"

    def hmm(self) -> HmmConfig:
        return HmmConfig(self.band, self.grid_step, self.lam, self.direction)


@dataclass(frozen=True, eq=False)
class ComponentCandidate:
    label: str
    series: np.ndarray
    spectrum: Spectrum
    ps: float


def downsample_half(frames: np.ndarray) -> np.ndarray:
    """Bicubic downsampling of the last two axes to ``ceil(n / 2)``, rounded to 8 bits."""
    frames = np.asarray(frames)
    h, w = frames.shape[-2:]
    if h < 2 or w < 2:
        raise ValidationError("downsampling needs at least a 2x2 region")
    return to_uint8(resize(frames, ((h + 1) // 2, (w + 1) // 2)))


def car_montage(win: ChannelMatrix) -> tuple[np.ndarray, ChannelMatrix]:
    """Split channels into their common average and the average-referenced residuals."""
    if win.n_channels < 3:
        raise ValidationError("common-average montage needs at least 3 channels")
    c0 = win.channels.mean(axis=0)
    return c0, ChannelMatrix(win.channels - c0, win.timestamps)


def pca_scores(residuals: ChannelMatrix, k: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """Top-``k`` principal component scores ``(k, n_samples)`` and their variances.

    Loadings are signed so each one's largest-magnitude entry is positive.
    """
    x = residuals.channels - residuals.channels.mean(axis=1, keepdims=True)
    if residuals.n_samples < 2:
        raise NumericalError("PCA needs at least two samples")
    cov = x @ x.T / (residuals.n_samples - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1][:k]
    evals, evecs = evals[order], evecs[:, order]
    if evals.size < k or evals[-1] <= 1e-12 * max(evals[0], 1e-300):
        raise NumericalError(f"residual channels have rank below {k}")
    peak = np.argmax(np.abs(evecs), axis=0)
    signs = np.sign(evecs[peak, np.arange(evecs.shape[1])])
    evecs = evecs * signs
    return evecs.T @ x, evals


def pca_components(residuals: ChannelMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Second and third principal component scores (the first tracks motion artifacts)."""
    scores, _ = pca_scores(residuals, 3)
    return scores[1], scores[2]


def _safe_ps(spec: Spectrum, band: Band, moments: str) -> float:
    try:
        return pulse_significance(spec, band, moments)
    except NumericalError:
        return float("nan")


def select_component(candidates, band: Band = HR_BAND) -> ComponentCandidate:
    """Candidate with the largest pulse significance; earlier candidates win ties."""
    best = None
    for cand in candidates:
        if not np.isfinite(cand.ps):
            continue
        if best is None or cand.ps > best.ps:
            best = cand
    if best is None:
        raise NumericalError("no candidate has a finite pulse significance")
    return best


def window_candidates(win: ChannelMatrix, grid: np.ndarray, nyquist: float,
                      cfg: HrConfig = HrConfig()) -> list[ComponentCandidate]:
    c0, residuals = car_montage(win)
    c1, c2 = pca_components(residuals)
    series = np.column_stack([c0, c1, c2])
    power = lomb_scargle_power(series, win.timestamps, grid)
    out = []
    for i, label in enumerate(LABELS):
        spec = Spectrum(grid, power[:, i], nyquist)
        out.append(ComponentCandidate(label, series[:, i], spec,
                                      _safe_ps(spec, cfg.band, cfg.kurtosis_moments)))
    return out


def neck_channels(seq: FrameSequence, rect: Rect) -> ChannelMatrix:
    """Downsampled neck pixels as channels (row-major pixel order)."""
    rect.check_within(seq.height, seq.width)
    rows, cols = rect.slices
    small = downsample_half(seq.frames[:, rows, cols])
    return ChannelMatrix(small.reshape(len(seq), -1).T.astype(float), seq.timestamps)


def estimate_hr_from_channels(channels: ChannelMatrix, cfg: HrConfig = HrConfig()) -> VitalTrace:
    wins = sequence_windows(channels.timestamps, cfg.window)
    nyquist = nyquist_of(channels.timestamps)
    grid = frequency_grid(nyquist, cfg.grid_step)
    chosen, spectra = [], []
    for win in wins:
        cands = window_candidates(channels.window(win), grid, nyquist, cfg)
        pick = select_component(cands, cfg.band)
        chosen.append(pick.label)
        spectra.append(pick.spectrum)
    freqs = smooth_spectra(spectra, cfg.hmm())
    return VitalTrace([w.start for w in wins], 60.0 * freqs, tuple(chosen))


def locate_neck(seq: FrameSequence, template: Template, cfg: HrConfig = HrConfig()) -> MatchResult:
    return detect_neck(seq.frames[0], template, cfg.scales, cfg.amad_factor)


def estimate_hr(seq: FrameSequence, template: Template, cfg: HrConfig = HrConfig()) -> VitalTrace:
    if seq.span < cfg.window.duration - 0.5 * seq.frame_interval:
        raise ValidationError(
            f"sequence spans {seq.span:.2f} s, shorter than one {cfg.window.duration:g} s window"
        )
    match = locate_neck(seq, template, cfg)
    return estimate_hr_from_channels(neck_channels(seq, match.rect), cfg)
