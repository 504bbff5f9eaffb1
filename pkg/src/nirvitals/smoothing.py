"""Chain HMM over per-window spectra, decoded by max-product message passing.

Each window's hidden state is a frequency bin inside the search band. The
data term favours bins holding a large share of the window's in-band power,
and the pairwise term ``exp(-|f_i - f_j|)`` (frequencies in Hz) favours
slowly varying rates.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .spectral import DEFAULT_GRID_STEP, Band, Spectrum

DEFAULT_LAMBDA = 16.0


@dataclass(frozen=True)
class HmmConfig:
    band: Band
    grid_step: float = DEFAULT_GRID_STEP
    lam: float = DEFAULT_LAMBDA
    direction: str = "bidirectional"  # or "forward"

    def __post_init__(self):
        if self.grid_step <= 0:
            raise ValidationError("grid_step must be positive")
        if self.lam < 0:
            raise ValidationError("lambda must be non-negative")
        if self.direction not in ("bidirectional", "forward"):
            raise ValidationError(f"unknown message direction {self.direction!r}")


@dataclass(frozen=True, eq=False)
class ChainPotentials:
    """Unnormalized data terms ``data[i, s]`` for window ``i`` and state ``s``."""

    data: np.ndarray
    freqs: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        freqs = np.asarray(self.freqs, dtype=float)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ValidationError("data terms must be a non-empty (windows, states) array")
        if freqs.shape != (data.shape[1],):
            raise ValidationError("one frequency per state is required")
        if not np.all(np.isfinite(data)) or np.any(data <= 0):
            raise ValidationError("data terms must be finite and strictly positive")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "freqs", freqs)

    @property
    def n_windows(self) -> int:
        return self.data.shape[0]

    @property
    def n_states(self) -> int:
        return self.data.shape[1]


def data_term(spec: Spectrum, cfg: HmmConfig) -> np.ndarray:
    """``exp(lam * p(f) / sum of in-band p)`` for every in-band bin."""
    _, p = spec.in_band(cfg.band)
    total = p.sum()
    if total <= 0:
        return np.ones_like(p)
    return np.exp(cfg.lam * p / total)


def smoothness(f_i, f_j):
    return np.exp(-np.abs(np.subtract(f_i, f_j)))


def _pass(data: np.ndarray, pair: np.ndarray) -> np.ndarray:
    """Incoming max-product messages for each node, sweeping from node 0 upward."""
    n, s = data.shape
    msgs = np.ones((n, s))
    for i in range(1, n):
        outgoing = (data[i - 1] * msgs[i - 1])[:, None] * pair
        m = outgoing.max(axis=0)
        msgs[i] = m / m.max()
    return msgs


def max_marginals(potentials: ChainPotentials, direction: str = "bidirectional") -> np.ndarray:
    """Per-window max-marginals (each row scaled to a maximum of 1)."""
    data = potentials.data
    pair = smoothness(potentials.freqs[:, None], potentials.freqs[None, :])
    belief = data * _pass(data, pair)
    if direction == "bidirectional":
        belief *= _pass(data[::-1], pair)[::-1]
    elif direction != "forward":
        raise ValidationError(f"unknown message direction {direction!r}")
    return belief / belief.max(axis=1, keepdims=True)


def map_chain(potentials: ChainPotentials, direction: str = "bidirectional") -> np.ndarray:
    """Frequency (Hz) maximizing each window's max-marginal; lowest bin on ties."""
    belief = max_marginals(potentials, direction)
    return potentials.freqs[np.argmax(belief, axis=1)]


def potentials_from_spectra(spectra, cfg: HmmConfig) -> ChainPotentials:
    spectra = list(spectra)
    if not spectra:
        raise ValidationError("at least one window spectrum is required")
    freqs, _ = spectra[0].in_band(cfg.band)
    rows = []
    for spec in spectra:
        f, _ = spec.in_band(cfg.band)
        if f.shape != freqs.shape or not np.allclose(f, freqs, rtol=0, atol=1e-9):
            raise ValidationError("all window spectra must share one frequency grid")
        rows.append(data_term(spec, cfg))
    return ChainPotentials(np.vstack(rows), freqs)


def smooth_spectra(spectra, cfg: HmmConfig) -> np.ndarray:
    """MAP frequency per window for a sequence of window spectra."""
    return map_chain(potentials_from_spectra(spectra, cfg), cfg.direction)
