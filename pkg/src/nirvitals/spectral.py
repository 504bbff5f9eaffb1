"""Spectral estimation and band metrics.

Lomb-Scargle periodogram for unevenly sampled series, the normalized band
power / band kurtosis / pulse significance triple used to pick the pulse
component, and the uniform resampling + zero-phase Butterworth band-pass
used on the breathing path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .errors import NumericalError, TimestampOrderError, ValidationError

DEFAULT_GRID_STEP = 0.005  # Hz; 0.3 bpm per bin

# relative slack when deciding whether a grid frequency sits on a band edge
_EDGE_TOL = 1e-6


@dataclass(frozen=True)
class Band:
    lo: float
    hi: float

    def __post_init__(self):
        if not (0 < self.lo < self.hi) or not math.isfinite(self.hi):
            raise ValidationError(f"invalid band [{self.lo}, {self.hi}] Hz")

    @property
    def bpm(self) -> tuple[float, float]:
        return 60.0 * self.lo, 60.0 * self.hi


HR_BAND = Band(0.75, 2.5)
BR_BAND = Band(0.08, 0.5)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Power on an ascending, uniformly spaced frequency grid."""

    freqs: np.ndarray
    power: np.ndarray
    nyquist: float

    def __post_init__(self):
        freqs = np.asarray(self.freqs, dtype=float)
        power = np.asarray(self.power, dtype=float)
        if freqs.ndim != 1 or freqs.shape != power.shape or freqs.size == 0:
            raise ValidationError("freqs and power must be equal-length 1-D arrays")
        if freqs[0] <= 0 or freqs[-1] > self.nyquist * (1 + _EDGE_TOL):
            raise ValidationError("spectrum grid must lie inside (0, nyquist]")
        if freqs.size > 1:
            steps = np.diff(freqs)
            if np.any(steps <= 0) or np.ptp(steps) > 1e-6 * steps.mean():
                raise ValidationError("spectrum grid must be uniform and ascending")
        if np.any(power < 0) or not np.all(np.isfinite(power)):
            raise ValidationError("spectrum power must be finite and non-negative")
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "power", power)

    @property
    def step(self) -> float:
        if self.freqs.size < 2:
            return float("nan")
        return float(self.freqs[1] - self.freqs[0])

    def band_mask(self, band: Band) -> np.ndarray:
        step = self.step if self.freqs.size > 1 else self.freqs[0]
        tol = _EDGE_TOL * step
        if band.lo < self.freqs[0] - tol - step or band.hi > self.freqs[-1] + tol + step:
            raise ValidationError(
                f"band [{band.lo}, {band.hi}] Hz outside spectrum range "
                f"[{self.freqs[0]}, {self.freqs[-1]}] Hz"
            )
        return (self.freqs >= band.lo - tol) & (self.freqs <= band.hi + tol)

    def in_band(self, band: Band) -> tuple[np.ndarray, np.ndarray]:
        mask = self.band_mask(band)
        return self.freqs[mask], self.power[mask]

    def peak_frequency(self, band: Band | None = None) -> float:
        """Frequency of the largest bin (lowest frequency on ties)."""
        if band is None:
            freqs, power = self.freqs, self.power
        else:
            freqs, power = self.in_band(band)
        return float(freqs[int(np.argmax(power))])


def frequency_grid(nyquist: float, step: float = DEFAULT_GRID_STEP,
                   band: Band | None = None) -> np.ndarray:
    """Grid ``k * step`` covering (0, nyquist], or only ``band`` if given.

    Bins are integer multiples of ``step`` so grids built for different
    recordings line up exactly.
    """
    if step <= 0 or nyquist <= 0:
        raise ValidationError("grid step and nyquist must be positive")
    k_max = int(math.floor(nyquist / step + 1e-9))
    if band is None:
        k_lo, k_hi = 1, k_max
    else:
        k_lo = max(1, int(math.ceil(band.lo / step - 1e-9)))
        k_hi = min(k_max, int(math.floor(band.hi / step + 1e-9)))
    if k_hi < k_lo:
        raise ValidationError("frequency grid is empty")
    return np.arange(k_lo, k_hi + 1) * step


def nyquist_of(times: np.ndarray) -> float:
    """Half the median sampling rate of a timestamp vector."""
    dt = np.diff(np.asarray(times, dtype=float))
    if dt.size == 0 or np.any(dt <= 0):
        raise TimestampOrderError("timestamps must be strictly increasing")
    return 0.5 / float(np.median(dt))


def _check_times(times: np.ndarray, n: int) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size != n:
        raise ValidationError("times must be 1-D and match the number of samples")
    if np.any(np.diff(t) <= 0):
        raise TimestampOrderError("times must be strictly increasing")
    return t


def lomb_scargle_power(values, times, freqs) -> np.ndarray:
    """Classical Lomb periodogram (normalized by 2 * variance).

    ``values`` may be 1-D ``(n,)`` or 2-D ``(n, m)``; in the latter case
    each column is a separate series sharing the sample times, and the
    result has shape ``(len(freqs), m)``.

    ``freqs`` must be a uniform ascending grid. The complex exponentials
    ``exp(2j*pi*f_k*t)`` are factored as a coarse-step term times a
    fine-step term, so every trigonometric sum becomes a small matrix
    product instead of a ``len(freqs) x n`` table.
    """
    y = np.asarray(values, dtype=float)
    squeeze = y.ndim == 1
    if squeeze:
        y = y[:, None]
    n = y.shape[0]
    if n < 4:
        raise ValidationError("Lomb-Scargle needs at least 4 samples")
    t = _check_times(times, n)
    f = np.asarray(freqs, dtype=float)
    if f.ndim != 1 or f.size == 0:
        raise ValidationError("frequency grid must be a non-empty 1-D array")
    if f.size > 1:
        df = f[1] - f[0]
        if np.any(np.abs(np.diff(f) - df) > 1e-6 * abs(df)) or df <= 0:
            raise ValidationError("frequency grid must be uniform and ascending")
    else:
        df = 0.0

    flat = np.ptp(y, axis=0) == 0
    y = y - y.mean(axis=0)
    var = y.var(axis=0, ddof=1)
    t = t - t.mean()

    k = f.size
    block = int(math.ceil(math.sqrt(k)))
    n_coarse = int(math.ceil(k / block))
    coarse = np.exp(2j * np.pi * (np.arange(n_coarse) * block * df)[:, None] * t)
    fine = np.exp(2j * np.pi * (f[0] + np.arange(block) * df)[:, None] * t)

    # sum_j exp(2i w t_j) -> tau and the cos^2 / sin^2 normalizers
    w2 = ((coarse * coarse) @ (fine * fine).T).ravel()[:k]
    mod = np.abs(w2)
    half_angle = 0.5 * np.angle(w2)
    c, s = np.cos(half_angle), np.sin(half_angle)
    cos_norm = 0.5 * (n + mod)
    sin_norm = 0.5 * (n - mod)
    sin_ok = sin_norm > 1e-9 * n

    out = np.zeros((k, y.shape[1]))
    for col in range(y.shape[1]):
        if flat[col]:
            continue
        z = ((coarse * y[:, col]) @ fine.T).ravel()[:k]
        yc = z.real * c + z.imag * s
        ys = z.imag * c - z.real * s
        p = yc ** 2 / cos_norm
        p += np.where(sin_ok, ys ** 2 / np.where(sin_ok, sin_norm, 1.0), 0.0)
        out[:, col] = p / (2.0 * var[col])
    np.maximum(out, 0.0, out=out)
    return out[:, 0] if squeeze else out


def lomb_scargle(values, times, freqs, nyquist: float | None = None) -> Spectrum:
    """Lomb-Scargle periodogram of one series, wrapped as a :class:`Spectrum`.

    A zero-variance series yields an all-zero spectrum rather than an error.
    """
    if nyquist is None:
        nyquist = nyquist_of(times)
    power = lomb_scargle_power(values, times, freqs)
    return Spectrum(np.asarray(freqs, dtype=float), power, float(nyquist))


def nbp(spec: Spectrum, band: Band) -> float:
    """Normalized band power: fraction of total spectrum power inside ``band``."""
    mask = spec.band_mask(band)
    total = float(spec.power.sum())
    if total <= 0:
        return 0.0
    return float(spec.power[mask].sum()) / total


def band_kurtosis(spec: Spectrum, band: Band, moments: str = "frequency") -> float:
    """Kurtosis of the in-band power values.

    ``moments="frequency"`` (default) weights every central moment by the
    bin frequency and centres on ``sum(p*f)/sum(f)``, exactly as the pulse
    significance was defined originally. ``moments="power"`` instead treats
    the in-band power as a distribution over frequency and returns its
    textbook fourth standardized moment.
    """
    f, p = spec.in_band(band)
    if f.size < 2:
        raise ValidationError("band must contain at least two spectrum bins")
    if moments == "frequency":
        fsum = f.sum()
        mu = (p * f).sum() / fsum
        dev = p - mu
        m2 = (dev ** 2 * f).sum()
        if m2 <= 1e-24 * max((p ** 2 * f).sum(), 1e-300):
            raise NumericalError("degenerate in-band spectrum: zero second moment")
        return float((dev ** 4 * f).sum() * fsum / m2 ** 2)
    if moments == "power":
        psum = p.sum()
        if psum <= 0:
            raise NumericalError("degenerate in-band spectrum: zero power")
        mean = (p * f).sum() / psum
        var = (p * (f - mean) ** 2).sum() / psum
        if var <= 0:
            raise NumericalError("degenerate in-band spectrum: zero spread")
        return float((p * (f - mean) ** 4).sum() / psum / var ** 2)
    raise ValidationError(f"unknown kurtosis moments mode {moments!r}")


def pulse_significance(spec: Spectrum, band: Band, moments: str = "frequency") -> float:
    return nbp(spec, band) * band_kurtosis(spec, band, moments)


def resample_uniform(values, times) -> tuple[np.ndarray, float]:
    """Linear interpolation onto ``n`` uniform samples spanning the same interval.

    Returns ``(resampled, rate_hz)``; the uniform grid starts at ``times[0]``.
    """
    y = np.asarray(values, dtype=float)
    if y.ndim != 1 or y.size < 2:
        raise ValidationError("resampling needs at least two samples")
    t = _check_times(times, y.size)
    n = y.size
    rate = (n - 1) / (t[-1] - t[0])
    grid = t[0] + np.arange(n) / rate
    grid[-1] = t[-1]
    return np.interp(grid, t, y), float(rate)


def uniform_times(start: float, rate: float, n: int) -> np.ndarray:
    return start + np.arange(n) / rate


def butter_bandpass_sos(rate: float, band: Band, order: int = 3) -> np.ndarray:
    if band.hi >= 0.5 * rate:
        raise ValidationError(
            f"band upper edge {band.hi} Hz is not below Nyquist {0.5 * rate} Hz"
        )
    # scipy pre-warps the cutoffs before the bilinear transform when fs is given
    return signal.butter(order, [band.lo, band.hi], btype="bandpass", fs=rate, output="sos")


def settling_samples(sos: np.ndarray, tol: float = 1e-12) -> int:
    """Samples for the slowest pole's impulse response to fall below ``tol``."""
    _, poles, _ = signal.sos2zpk(sos)
    radius = float(np.max(np.abs(poles)))
    if radius <= 0:
        return 1
    return int(math.ceil(math.log(tol) / math.log(radius)))


def butter_bandpass_zero_phase(values, rate: float, band: Band, order: int = 3,
                               padlen: int | None = None) -> np.ndarray:
    """Forward-backward Butterworth band-pass with odd reflective edge padding.

    ``padlen`` defaults to the filter's settling length (slowest pole decayed
    to 1e-12), extended by repeated odd reflection when it exceeds the
    series. Short pads (a few times the order) leave start-up transients of
    tens of percent across several seconds at a 0.08 Hz lower edge.
    """
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.size <= 6 * order:
        raise ValidationError(
            f"series of {x.size} samples too short for order-{order} zero-phase filtering"
        )
    sos = butter_bandpass_sos(rate, band, order)
    if padlen is None:
        padlen = max(x.size - 1, settling_samples(sos))
    if padlen < 0:
        raise ValidationError("padlen must be non-negative")
    padded = np.pad(x, padlen, mode="reflect", reflect_type="odd")
    out = signal.sosfiltfilt(sos, padded, padlen=0)
    return out[padlen:padlen + x.size]
