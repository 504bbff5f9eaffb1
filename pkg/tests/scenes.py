"""Synthetic scene sets shared by the closed-loop tests."""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from nirvitals.scene import AMBIENT_PER_LUX, MotionAmplitudes, SceneParams, SceneSpec

HR_TARGETS = (50.0, 54.0, 58.0, 62.0, 66.0, 70.0, 74.0, 78.0, 82.0, 86.0, 90.0, 93.0)
BR_TARGETS = (5.0, 6.5, 8.0, 9.5, 11.0, 12.5, 14.0, 15.5, 17.0, 18.5, 20.0, 22.0)
NOISE = (0.5, 1.0, 1.5, 2.0)
TILT = (0.01, 0.015, 0.02)
BRIGHT_LUX = 184.0
DARK_LUX = 1.0


def closed_loop_scenes(ambient: float | None = None, seed_offset: int = 0) -> list[SceneSpec]:
    """Twelve 60 s scenes spanning the observed rate ranges.

    Noise and sway amplitudes cycle through their lists; every third scene
    drifts its heart rate by a few beats per minute.
    """
    out = []
    for i, (hr, br) in enumerate(zip(HR_TARGETS, BR_TARGETS)):
        params = SceneParams(noise_amplitude=NOISE[i % len(NOISE)])
        if ambient is not None:
            params = replace(params, ambient_product=ambient)
        tilt = TILT[i % len(TILT)]
        amps = MotionAmplitudes(tilt_x_rad=tilt, tilt_y_rad=tilt)
        hr_end = min(hr + 4.0, 93.0) if i % 3 == 2 else None
        out.append(SceneSpec(params=params, amplitudes=amps, hr_bpm=hr, hr_end_bpm=hr_end,
                             br_bpm=br, seed=1000 + 17 * i + seed_offset))
    return out


def lighting_pairs() -> tuple[list[SceneSpec], list[SceneSpec]]:
    """Same scenes under bright and dark ambient light, recorded as separate sessions."""
    bright = closed_loop_scenes(AMBIENT_PER_LUX * BRIGHT_LUX, seed_offset=0)
    dark = closed_loop_scenes(AMBIENT_PER_LUX * DARK_LUX, seed_offset=1)
    return bright, dark


def mae(est, truth) -> float:
    return float(np.mean(np.abs(np.asarray(est) - np.asarray(truth))))
