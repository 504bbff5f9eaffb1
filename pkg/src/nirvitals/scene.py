"""Synthetic NIR neck videos with known heart and breathing rates.

A co-located point source and camera light a neck modelled as a cylinder.
Each skin point's brightness follows Blinn-Phong shading with
inverse-square attenuation; breathing moves every point along the viewing
axis, postural sway tilts the surface normals, and carotid distension tilts
the normals of points near the arteries.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np
from scipy import signal

from .core import FrameSequence, Rect, TimeWindow, format_timestamp, sequence_windows
from .errors import NumericalError, ValidationError

HR_RANGE = (45.0, 150.0)
BR_RANGE = (4.8, 30.0)
AMBIENT_PER_LUX = 0.1  # intensity units of ambient offset per lux reaching the sensor


@dataclass(frozen=True)
class SceneParams:
    ambient_product: float = 10.0
    diffuse_coeff: float = 0.6
    specular_coeff: float = 0.2
    shininess: float = 16.0
    source_intensity: float = 400.0
    attenuation: tuple[float, float, float] = (1.0, 0.0, 1.0 / 500.0 ** 2)
    theta0: float = 0.9
    neck_radius: float = 50.0
    deform_gain: float = 0.1
    noise_amplitude: float = 1.0

    def __post_init__(self):
        coeffs = (self.ambient_product, self.diffuse_coeff, self.specular_coeff,
                  self.source_intensity, self.neck_radius, self.deform_gain,
                  self.noise_amplitude, *self.attenuation)
        if any(c < 0 or not math.isfinite(c) for c in coeffs):
            raise ValidationError("scene coefficients must be finite and non-negative")
        if self.shininess < 1:
            raise ValidationError("shininess must be at least 1")
        if not 0 < self.theta0 < math.pi / 2:
            raise ValidationError("theta0 must lie in (0, pi/2)")
        if len(self.attenuation) != 3:
            raise ValidationError("attenuation needs three constants (a, b, c)")

    def falloff(self, z):
        """Source intensity after distance attenuation, ``I0 / (a + b z + c z^2)``."""
        a, b, c = self.attenuation
        den = a + b * np.asarray(z, dtype=float) + c * np.asarray(z, dtype=float) ** 2
        if np.any(den <= 0):
            raise ValidationError("attenuation denominator must stay positive")
        return self.source_intensity / den

    def falloff_slope(self, z):
        a, b, c = self.attenuation
        z = np.asarray(z, dtype=float)
        den = a + b * z + c * z ** 2
        if np.any(den <= 0):
            raise ValidationError("attenuation denominator must stay positive")
        return -self.source_intensity * (b + 2 * c * z) / den ** 2


@dataclass(frozen=True)
class SurfacePoint:
    z_p: float
    theta_x: float
    theta_y: float
    carotid_adjacent: bool = False

    def __post_init__(self):
        if abs(self.theta_x) >= math.pi / 2 or abs(self.theta_y) >= math.pi / 2:
            raise ValidationError("surface point must face the camera (|theta| < pi/2)")


@dataclass(frozen=True, eq=False)
class MotionTraces:
    """Motion sources sampled at ``times``; rates are the commanded instantaneous values."""

    times: np.ndarray
    dz: np.ndarray
    dtheta_x: np.ndarray
    dtheta_y: np.ndarray
    dr: np.ndarray
    hr_bpm: np.ndarray | None = None
    br_bpm: np.ndarray | None = None

    def __post_init__(self):
        n = np.asarray(self.times).size
        for name in ("dz", "dtheta_x", "dtheta_y", "dr"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise ValidationError(f"motion trace {name} must match the time base")
            object.__setattr__(self, name, arr)
        if np.any(self.dr < 0):
            raise ValidationError("arterial distension must be non-negative")

    def scaled(self, factor: float) -> "MotionTraces":
        return replace(self, dz=self.dz * factor, dtheta_x=self.dtheta_x * factor,
                       dtheta_y=self.dtheta_y * factor, dr=self.dr * factor)


@dataclass(frozen=True)
class PhysioGroundTruth:
    window_starts: np.ndarray
    hr_bpm: np.ndarray
    br_bpm: np.ndarray
    motion: MotionTraces


@dataclass(frozen=True)
class MotionAmplitudes:
    breathing_mm: float = 3.0
    pulse_mm: float = 0.3
    tilt_x_rad: float = 0.01
    tilt_y_rad: float = 0.01
    bcg_ratio: float = 0.1
    pulse_duty: float = 0.3
    artifact_band: tuple[float, float] = (0.03, 0.4)


@dataclass(frozen=True)
class ArtifactBurst:
    """Extra sinusoidal rotation about the neck axis during ``[start, end)`` seconds."""

    start: float
    end: float
    freq_hz: float
    amplitude_rad: float


# --- reflection model -------------------------------------------------------

def psi(theta_x, theta_y):
    """``1 / sqrt(1 + tan^2 theta_x + tan^2 theta_y)``: cosine between normal and view axis."""
    tx = np.asarray(theta_x, dtype=float)
    ty = np.asarray(theta_y, dtype=float)
    if np.any(np.abs(tx) >= math.pi / 2) or np.any(np.abs(ty) >= math.pi / 2):
        raise ValidationError("angles must satisfy |theta| < pi/2")
    out = 1.0 / np.sqrt(1.0 + np.tan(tx) ** 2 + np.tan(ty) ** 2)
    return float(out) if out.ndim == 0 else out


def psi_gradient(theta_x, theta_y):
    """Analytic ``(dPsi/dtheta_x, dPsi/dtheta_y)``."""
    p = np.asarray(psi(theta_x, theta_y))
    tx, ty = np.tan(theta_x), np.tan(theta_y)
    common = -(p ** 3)
    return common * tx * (1 + tx ** 2), common * ty * (1 + ty ** 2)


def render_exact(scene: SceneParams, z_p, theta_x, theta_y, carotid, dz=0.0, dtheta_x=0.0,
                 dtheta_y=0.0, dr=0.0, noise=0.0):
    """Full non-linear intensity; every argument broadcasts."""
    z = np.asarray(z_p, dtype=float) + dz
    tx = np.asarray(theta_x, dtype=float) + dtheta_x
    ty = np.asarray(theta_y, dtype=float) + dtheta_y - scene.deform_gain * np.asarray(dr) * np.asarray(carotid)
    p = np.asarray(psi(tx, ty))
    shade = scene.diffuse_coeff * p + scene.specular_coeff * p ** scene.shininess
    return scene.ambient_product + scene.falloff(z) * shade + noise


def render_linearized(scene: SceneParams, z_p, theta_x, theta_y, carotid, dz=0.0, dtheta_x=0.0,
                      dtheta_y=0.0, dr=0.0):
    """First-order expansion in the four motion sources around the stationary pose."""
    kd, ks, alpha = scene.diffuse_coeff, scene.specular_coeff, scene.shininess
    b = scene.falloff(z_p)
    db = scene.falloff_slope(z_p)
    p = np.asarray(psi(theta_x, theta_y))
    gx, gy = psi_gradient(theta_x, theta_y)
    angular = kd + ks * alpha * p ** (alpha - 1)
    deform = scene.deform_gain * np.asarray(dr) * np.asarray(carotid)
    return (scene.ambient_product + kd * b * p + ks * b * p ** alpha
            + (kd * db * p + ks * db * p ** alpha) * dz
            + b * gx * angular * dtheta_x
            + b * gy * angular * dtheta_y
            - b * gy * angular * deform)


def render_point_exact(scene: SceneParams, pt: SurfacePoint, motion=(0.0, 0.0, 0.0, 0.0),
                       noise: float = 0.0) -> float:
    dz, dtx, dty, dr = motion
    return float(render_exact(scene, pt.z_p, pt.theta_x, pt.theta_y, pt.carotid_adjacent,
                              dz, dtx, dty, dr, noise))


def render_point_linearized(scene: SceneParams, pt: SurfacePoint,
                            motion=(0.0, 0.0, 0.0, 0.0)) -> float:
    dz, dtx, dty, dr = motion
    return float(render_linearized(scene, pt.z_p, pt.theta_x, pt.theta_y, pt.carotid_adjacent,
                                   dz, dtx, dty, dr))


# --- motion synthesis -------------------------------------------------------

def _rate_series(rate, times: np.ndarray, bounds: tuple[float, float], name: str) -> np.ndarray:
    r = np.broadcast_to(np.asarray(rate, dtype=float), times.shape).astype(float)
    if np.any(r < bounds[0] - 1e-9) or np.any(r > bounds[1] + 1e-9):
        raise ValidationError(f"{name} must stay within [{bounds[0]}, {bounds[1]}] per minute")
    return r


def _phase(rate_bpm: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Cycles elapsed since ``times[0]`` for an instantaneous rate in per-minute units."""
    f = rate_bpm / 60.0
    steps = 0.5 * (f[1:] + f[:-1]) * np.diff(times)
    return np.concatenate([[0.0], np.cumsum(steps)])


def _band_noise(times: np.ndarray, band: tuple[float, float], rms: float,
                rng: np.random.Generator) -> np.ndarray:
    if rms == 0 or times.size < 2:
        return np.zeros_like(times)
    rate = 50.0
    grid = np.arange(times[0], times[-1] + 2.0 / rate, 1.0 / rate)
    white = rng.standard_normal(grid.size + 2000)
    lo, hi = band
    sos = signal.butter(2, [lo, min(hi, 0.45 * rate)], btype="bandpass", fs=rate, output="sos")
    shaped = signal.sosfilt(sos, white)[2000:]
    shaped /= np.sqrt(np.mean(shaped ** 2))
    return rms * np.interp(times, grid, shaped)


def synthesize_motions(hr, br, amplitudes: MotionAmplitudes, timestamps, seed: int = 0,
                       bursts=()) -> MotionTraces:
    """Breathing + weak BCG translation, raised-cosine carotid beats, and sway noise.

    ``hr`` and ``br`` are per-minute rates, either scalars or one value per
    timestamp (for drifting rates).
    """
    t = np.asarray(timestamps, dtype=float)
    hr_s = _rate_series(hr, t, HR_RANGE, "heart rate")
    br_s = _rate_series(br, t, BR_RANGE, "breathing rate")
    amp = amplitudes
    hr_phase = _phase(hr_s, t)
    br_phase = _phase(br_s, t)

    dz = amp.breathing_mm * np.sin(2 * np.pi * br_phase)
    dz = dz + amp.bcg_ratio * amp.breathing_mm * np.sin(2 * np.pi * hr_phase)

    frac = np.mod(hr_phase, 1.0)
    beat = np.where(frac < amp.pulse_duty, 0.5 * (1 - np.cos(2 * np.pi * frac / amp.pulse_duty)), 0.0)
    dr = amp.pulse_mm * beat

    rng = np.random.default_rng([seed, 0x5EED])
    dtx = _band_noise(t, amp.artifact_band, amp.tilt_x_rad, rng)
    dty = _band_noise(t, amp.artifact_band, amp.tilt_y_rad, rng)
    for b in bursts:
        on = (t >= b.start) & (t < b.end)
        dty = dty + np.where(on, b.amplitude_rad * np.sin(2 * np.pi * b.freq_hz * (t - b.start)), 0.0)
    return MotionTraces(t, dz, dtx, dty, dr, hr_s, br_s)


# --- scene layout -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Layout:
    """Per-pixel surface geometry; background pixels have ``skin == False``."""

    skin: np.ndarray
    z_p: np.ndarray
    theta_x: np.ndarray
    theta_y: np.ndarray
    carotid: np.ndarray
    background: float
    neck_rect: Rect

    @property
    def shape(self) -> tuple[int, int]:
        return self.skin.shape


def _cylinder_band(layout: dict, rows: slice, center: float, half_width: float, theta_max: float,
                   z: float, theta_x: float, theta0: float | None = None) -> None:
    width = layout["skin"].shape[1]
    cols = np.arange(width)
    x = (cols + 0.5 - center) / half_width
    inside = np.abs(x) < 1.0
    ty = np.arcsin(np.clip(x, -1, 1) * math.sin(theta_max))
    layout["skin"][rows, :] = inside
    layout["theta_y"][rows, :] = np.where(inside, ty, 0.0)
    layout["theta_x"][rows, :] = theta_x
    layout["z_p"][rows, :] = z
    if theta0 is not None:
        layout["carotid"][rows, :] = inside & (np.abs(ty) >= theta0)


def neck_layout(height: int = 120, width: int = 240, neck_top: int = 50, neck_shape=(19, 81),
                scene: SceneParams = SceneParams(), z_neck: float = 400.0,
                theta_x_neck: float = 0.3, background: float = 4.0) -> Layout:
    """Head above, neck band, torso below; the neck spans about 80% of the template width."""
    nh, nw = neck_shape
    center = width / 2.0
    left = int(round(center - nw / 2.0))
    if neck_top < 0 or neck_top + nh > height or left < 0 or left + nw > width:
        raise ValidationError("neck patch does not fit inside the frame")
    arrays = {
        "skin": np.zeros((height, width), bool),
        "z_p": np.full((height, width), z_neck),
        "theta_x": np.zeros((height, width)),
        "theta_y": np.zeros((height, width)),
        "carotid": np.zeros((height, width), bool),
    }
    head_top = max(0, neck_top - int(2.2 * nh))
    _cylinder_band(arrays, slice(head_top, neck_top), center, 0.7 * nw, 1.2, z_neck + 20,
                   -0.3)
    _cylinder_band(arrays, slice(neck_top, neck_top + nh), center, 0.4 * nw, 1.25, z_neck,
                   theta_x_neck, scene.theta0)
    _cylinder_band(arrays, slice(neck_top + nh, height), center, 0.9 * nw, 1.2, z_neck - 20,
                   0.5)
    return Layout(background=background, neck_rect=Rect(neck_top, left, nh, nw), **arrays)


# --- rendering --------------------------------------------------------------

def _frame_noise(seed: int, index: int, shape, amplitude: float) -> np.ndarray:
    # counter-based: frame i's noise depends only on (seed, i)
    rng = np.random.default_rng([seed, index])
    return rng.uniform(-0.5 * amplitude, 0.5 * amplitude, size=shape)


def render_frames(scene: SceneParams, layout: Layout, motions: MotionTraces, seed: int = 0,
                  chunk: int = 128) -> np.ndarray:
    """Rendered, noise-added, rounded and clamped frames ``(n, height, width)``."""
    n = motions.times.size
    h, w = layout.shape
    skin = layout.skin
    z, tx, ty, car = (layout.z_p[skin], layout.theta_x[skin], layout.theta_y[skin],
                      layout.carotid[skin])
    frames = np.empty((n, h, w), dtype=np.uint8)
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        sl = slice(lo, hi)
        lit = render_exact(scene, z[None], tx[None], ty[None], car[None],
                           motions.dz[sl, None], motions.dtheta_x[sl, None],
                           motions.dtheta_y[sl, None], motions.dr[sl, None])
        block = np.full((hi - lo, h, w), scene.ambient_product + layout.background)
        block[:, skin] = lit
        if scene.noise_amplitude > 0:
            for k in range(lo, hi):
                block[k - lo] += _frame_noise(seed, k, (h, w), scene.noise_amplitude)
        frames[sl] = np.clip(np.round(block), 0, 255).astype(np.uint8)
    return frames


def window_truth(motions: MotionTraces, win_cfg: TimeWindow = TimeWindow()):
    """Per-window mean of the commanded rates, windows anchored at the first frame."""
    wins = sequence_windows(motions.times, win_cfg)
    starts, hr, br = [], [], []
    for win in wins:
        idx = win.indices(motions.times)
        starts.append(win.start)
        hr.append(float(np.mean(motions.hr_bpm[idx])) if motions.hr_bpm is not None else np.nan)
        br.append(float(np.mean(motions.br_bpm[idx])) if motions.br_bpm is not None else np.nan)
    return np.array(starts), np.array(hr), np.array(br)


def simulate_sequence(scene: SceneParams, layout: Layout, motions: MotionTraces, seed: int = 0,
                      win_cfg: TimeWindow = TimeWindow(),
                      nominal_rate: float = float("nan")) -> tuple[FrameSequence, PhysioGroundTruth]:
    frames = render_frames(scene, layout, motions, seed)
    seq = FrameSequence(frames, motions.times, nominal_rate)
    if motions.times[-1] - motions.times[0] >= win_cfg.duration * 0.5:
        try:
            starts, hr, br = window_truth(motions, win_cfg)
        except ValidationError:
            starts, hr, br = (np.array([]),) * 3
    else:
        starts, hr, br = (np.array([]),) * 3
    return seq, PhysioGroundTruth(starts, hr, br, motions)


def jittered_timestamps(duration: float = 60.0, fps: float = 62.0, jitter: float = 0.002,
                        seed: int = 0) -> np.ndarray:
    """Camera timestamps with a floating frame rate, rounded to microseconds."""
    n = int(round(duration * fps))
    rng = np.random.default_rng([seed, 0x7157])
    t = np.arange(n) / fps + rng.uniform(-jitter, jitter, n)
    t[0] = 0.0
    t = np.round(t, 6)
    if np.any(np.diff(t) <= 0):
        raise NumericalError("jitter too large for the frame rate")
    return t


# --- scene description ------------------------------------------------------

@dataclass(frozen=True)
class SceneSpec:
    """Everything needed to reproduce one synthetic recording."""

    params: SceneParams = field(default_factory=SceneParams)
    amplitudes: MotionAmplitudes = field(default_factory=MotionAmplitudes)
    hr_bpm: float = 70.0
    hr_end_bpm: float | None = None
    br_bpm: float = 15.0
    br_end_bpm: float | None = None
    duration: float = 60.0
    fps: float = 62.0
    jitter: float = 0.002
    frame_height: int = 120
    frame_width: int = 240
    neck_top: int = 50
    neck_scale: float = 1.0
    z_neck: float = 400.0
    theta_x_neck: float = 0.3
    seed: int = 0
    bursts: tuple[ArtifactBurst, ...] = ()

    def __post_init__(self):
        for name, rng_ in (("hr_bpm", HR_RANGE), ("hr_end_bpm", HR_RANGE),
                           ("br_bpm", BR_RANGE), ("br_end_bpm", BR_RANGE)):
            v = getattr(self, name)
            if v is not None and not rng_[0] <= v <= rng_[1]:
                raise ValidationError(f"{name}={v} outside [{rng_[0]}, {rng_[1]}]")
        if self.duration <= 0 or self.fps <= 0:
            raise ValidationError("duration and fps must be positive")

    def neck_shape(self) -> tuple[int, int]:
        from .resize import scaled_shape
        from .roi import TEMPLATE_SHAPE
        return scaled_shape(TEMPLATE_SHAPE, self.neck_scale)

    def timestamps(self) -> np.ndarray:
        return jittered_timestamps(self.duration, self.fps, self.jitter, self.seed)

    def layout(self) -> Layout:
        return neck_layout(self.frame_height, self.frame_width, self.neck_top, self.neck_shape(),
                           self.params, self.z_neck, self.theta_x_neck)

    def motions(self, times: np.ndarray | None = None) -> MotionTraces:
        t = self.timestamps() if times is None else times
        frac = (t - t[0]) / max(t[-1] - t[0], 1e-12)
        hr = self.hr_bpm if self.hr_end_bpm is None else self.hr_bpm + frac * (self.hr_end_bpm - self.hr_bpm)
        br = self.br_bpm if self.br_end_bpm is None else self.br_bpm + frac * (self.br_end_bpm - self.br_bpm)
        return synthesize_motions(hr, br, self.amplitudes, t, self.seed, self.bursts)

    def render(self, win_cfg: TimeWindow = TimeWindow()) -> tuple[FrameSequence, PhysioGroundTruth]:
        return simulate_sequence(self.params, self.layout(), self.motions(), self.seed, win_cfg,
                                 self.fps)

    # key=value round trip; nested dataclass fields are flattened
    def to_kv(self) -> dict[str, str]:
        out: dict[str, str] = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name in ("params", "amplitudes"):
                for k, v in asdict(value).items():
                    out[k] = _fmt(v)
            elif f.name == "bursts":
                if value:
                    out["bursts"] = ";".join(
                        f"{b.start:g}:{b.end:g}:{b.freq_hz:g}:{b.amplitude_rad:g}" for b in value)
            elif value is not None:
                out[f.name] = _fmt(value)
        return out

    @classmethod
    def from_kv(cls, items: dict[str, str]) -> "SceneSpec":
        items = dict(items)
        if "lux" in items:
            lux = float(items.pop("lux"))
            items.setdefault("ambient_product", str(AMBIENT_PER_LUX * lux))
        groups = {"params": SceneParams, "amplitudes": MotionAmplitudes}
        kwargs: dict = {}
        for group, klass in groups.items():
            sub = {}
            for f in fields(klass):
                if f.name in items:
                    sub[f.name] = _parse(items.pop(f.name), getattr(klass(), f.name))
            kwargs[group] = klass(**sub)
        if "bursts" in items:
            raw = items.pop("bursts").strip()
            bursts = []
            for chunk in filter(None, raw.split(";")):
                parts = [float(v) for v in chunk.split(":")]
                if len(parts) != 4:
                    raise ValidationError(f"burst {chunk!r} needs start:end:freq:amplitude")
                bursts.append(ArtifactBurst(*parts))
            kwargs["bursts"] = tuple(bursts)
        defaults = cls()
        for f in fields(cls):
            if f.name in items:
                current = getattr(defaults, f.name)
                kwargs[f.name] = _parse(items.pop(f.name), current if current is not None else 0.0)
        if items:
            raise ValidationError(f"unknown scene keys: {', '.join(sorted(items))}")
        return cls(**kwargs)


def _fmt(v) -> str:
    if isinstance(v, tuple):
        return ",".join(_fmt(x) for x in v)
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse(text: str, like):
    try:
        if isinstance(like, tuple):
            return tuple(float(x) for x in text.split(","))
        if isinstance(like, bool):
            return text.strip().lower() in ("1", "true", "yes")
        if isinstance(like, int):
            return int(text)
        return float(text)
    except ValueError as exc:
        raise ValidationError(f"cannot parse scene value {text!r}: {exc}") from exc


def reference_signals(motions: MotionTraces, rate: float = 256.0):
    """Finger-probe-like BVP and chest-belt-like BW waveforms from the commanded rates.

    Returned as ``(t, bvp, bw)`` on a uniform grid covering the motion time base.
    """
    t0, t1 = motions.times[0], motions.times[-1]
    n = int(math.floor((t1 - t0) * rate + 1e-9)) + 1
    span = motions.times[-1] - motions.times[0] + float(np.median(np.diff(motions.times)))
    n = max(n, int(round(span * rate)))
    t = t0 + np.arange(n) / rate
    hr = np.interp(t, motions.times, motions.hr_bpm)
    br = np.interp(t, motions.times, motions.br_bpm)
    hr_phase = _phase(hr, t)
    br_phase = _phase(br, t)
    bvp = np.sin(2 * np.pi * hr_phase) + 0.3 * np.sin(4 * np.pi * hr_phase + 0.8)
    bw = np.sin(2 * np.pi * br_phase)
    return t, bvp, bw
