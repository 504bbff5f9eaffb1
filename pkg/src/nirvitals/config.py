"""Single table of default constants, printed by ``nirvitals config-dump``."""
from __future__ import annotations

from .roi import AMAD_FACTOR, DEFAULT_SCALES, TEMPLATE_SHAPE
from .smoothing import DEFAULT_LAMBDA
from .spectral import BR_BAND, DEFAULT_GRID_STEP, HR_BAND

DEFAULTS: dict[str, object] = {
    "window.duration_s": 30.0,
    "window.increment_s": 1.0,
    "hr.band_lo_hz": HR_BAND.lo,
    "hr.band_hi_hz": HR_BAND.hi,
    "br.band_lo_hz": BR_BAND.lo,
    "br.band_hi_hz": BR_BAND.hi,
    "br.filter_order": 3,
    "hmm.lambda": DEFAULT_LAMBDA,
    "hmm.direction": "bidirectional",
    "spectrum.grid_step_hz": DEFAULT_GRID_STEP,
    "roi.amad_factor": AMAD_FACTOR,
    "roi.scales": DEFAULT_SCALES,
    "roi.template_rows": TEMPLATE_SHAPE[0],
    "roi.template_cols": TEMPLATE_SHAPE[1],
    "roi.breathing_expansion": 5,
    "hr.downsample": 0.5,
    "hr.kurtosis_moments": "frequency",
}


def dump_defaults() -> str:
    lines = []
    for key, value in DEFAULTS.items():
        if isinstance(value, tuple):
            value = ",".join(f"{v:g}" for v in value)
        elif isinstance(value, float):
            value = f"{value:g}"
        lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"
