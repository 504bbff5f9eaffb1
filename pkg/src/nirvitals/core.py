"""Frame sequences, reference recordings, ROIs, windows, and their file formats.

Sequence container layout (a directory)::

    manifest.txt     key=value lines: width, height, frames, format=gray8
    frames.bin       width*height*frames bytes, frame-major, row-major
    timestamps.txt   one decimal seconds value per line (microseconds)

Reference recordings are CSV files with header ``t,value``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BoundsError,
    ContainerIOError,
    CorruptContainerError,
    DimensionMismatchError,
    MissingFileError,
    TimestampOrderError,
    ValidationError,
)

MANIFEST = "manifest.txt"
FRAMES = "frames.bin"
TIMESTAMPS = "timestamps.txt"
FORMAT = "gray8"
TIMESTAMP_DECIMALS = 6


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Rect:
    """Pixel rectangle, top-left origin, half-open extents."""

    top: int
    left: int
    height: int
    width: int

    def __post_init__(self):
        if self.height <= 0 or self.width <= 0:
            raise ValidationError(f"degenerate rect {self}")

    @property
    def bottom(self) -> int:
        return self.top + self.height

    @property
    def right(self) -> int:
        return self.left + self.width

    @property
    def slices(self) -> tuple[slice, slice]:
        return slice(self.top, self.bottom), slice(self.left, self.right)

    def fits(self, height: int, width: int) -> bool:
        return self.top >= 0 and self.left >= 0 and self.bottom <= height and self.right <= width

    def check_within(self, height: int, width: int) -> "Rect":
        if not self.fits(height, width):
            raise BoundsError(f"{self} exceeds frame bounds {height}x{width}")
        return self

    def clamp(self, height: int, width: int) -> "Rect":
        top, left = max(self.top, 0), max(self.left, 0)
        bottom, right = min(self.bottom, height), min(self.right, width)
        if bottom <= top or right <= left:
            raise BoundsError(f"{self} does not overlap frame {height}x{width}")
        return Rect(top, left, bottom - top, right - left)


@dataclass(frozen=True, eq=False)
class FrameSequence:
    """Timestamped 8-bit grayscale frames, shape ``(n, height, width)``.

    Timestamps may be unevenly spaced but must be strictly increasing.
    """

    frames: np.ndarray
    timestamps: np.ndarray
    nominal_rate: float = float("nan")

    def __post_init__(self):
        frames = np.asarray(self.frames)
        if frames.ndim == 2:
            frames = frames[None]
        if frames.ndim != 3:
            raise DimensionMismatchError("frames must have shape (n, height, width)")
        if frames.shape[0] == 0:
            raise ValidationError("a frame sequence needs at least one frame")
        if frames.dtype != np.uint8:
            if np.any(frames < 0) or np.any(frames > 255) or np.any(frames != np.round(frames)):
                raise ValidationError("pixel intensities must be integers in [0, 255]")
            frames = frames.astype(np.uint8)
        ts = np.asarray(self.timestamps, dtype=float).reshape(-1)
        if ts.size != frames.shape[0]:
            raise DimensionMismatchError(
                f"{ts.size} timestamps for {frames.shape[0]} frames"
            )
        if not np.all(np.isfinite(ts)):
            raise TimestampOrderError("timestamps must be finite")
        if np.any(np.diff(ts) <= 0):
            raise TimestampOrderError("timestamps must be strictly increasing")
        object.__setattr__(self, "frames", _frozen(np.array(frames, copy=True)))
        object.__setattr__(self, "timestamps", _frozen(ts.copy()))

    def __len__(self) -> int:
        return self.frames.shape[0]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]

    @property
    def frame_interval(self) -> float:
        """Median gap between consecutive timestamps (nan for one frame)."""
        if len(self) < 2:
            return float("nan")
        return float(np.median(np.diff(self.timestamps)))

    @property
    def span(self) -> float:
        """Recorded duration: first-to-last timestamp plus one median frame interval."""
        if len(self) < 2:
            return 0.0
        return float(self.timestamps[-1] - self.timestamps[0]) + self.frame_interval

    def crop(self, roi: Rect) -> "FrameSequence":
        roi.check_within(self.height, self.width)
        rows, cols = roi.slices
        return FrameSequence(self.frames[:, rows, cols], self.timestamps, self.nominal_rate)

    def equals(self, other: "FrameSequence") -> bool:
        return (
            self.frames.shape == other.frames.shape
            and np.array_equal(self.frames, other.frames)
            and np.array_equal(self.timestamps, other.timestamps)
        )


@dataclass(frozen=True, eq=False)
class ReferenceRecording:
    """Constant-rate gold-standard signal (BVP finger probe or BW chest belt)."""

    kind: str
    sample_rate: float
    samples: np.ndarray
    start_time: float = 0.0

    def __post_init__(self):
        if self.kind not in ("BVP", "BW"):
            raise ValidationError(f"reference kind must be BVP or BW, not {self.kind!r}")
        if not (self.sample_rate > 0 and math.isfinite(self.sample_rate)):
            raise ValidationError("reference sample rate must be positive")
        samples = np.asarray(self.samples, dtype=float).reshape(-1)
        if samples.size < 2:
            raise ValidationError("reference recording needs at least two samples")
        object.__setattr__(self, "samples", _frozen(samples.copy()))

    @property
    def times(self) -> np.ndarray:
        return self.start_time + np.arange(self.samples.size) / self.sample_rate

    @property
    def span(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class TimeWindow:
    start: float = 0.0
    duration: float = 30.0
    increment: float = 1.0

    def __post_init__(self):
        if not (self.duration > 0 and self.increment > 0):
            raise ValidationError("window duration and increment must be positive")

    @property
    def end(self) -> float:
        return self.start + self.duration

    def indices(self, times: np.ndarray) -> np.ndarray:
        """Indices of samples whose time falls in ``[start, start + duration)``."""
        times = np.asarray(times)
        lo = np.searchsorted(times, self.start, side="left")
        hi = np.searchsorted(times, self.end, side="left")
        return np.arange(lo, hi)


@dataclass(frozen=True, eq=False)
class ChannelMatrix:
    """Per-pixel intensity series: ``channels`` has shape ``(n_channels, n_samples)``."""

    channels: np.ndarray
    timestamps: np.ndarray

    def __post_init__(self):
        ch = np.array(self.channels, dtype=float)
        if ch.ndim == 1:
            ch = ch[None]
        ts = np.array(self.timestamps, dtype=float)
        if ch.ndim != 2 or ch.shape[1] != ts.size:
            raise DimensionMismatchError("channels must be (n_channels, len(timestamps))")
        object.__setattr__(self, "channels", _frozen(ch))
        object.__setattr__(self, "timestamps", _frozen(ts))

    @property
    def n_channels(self) -> int:
        return self.channels.shape[0]

    @property
    def n_samples(self) -> int:
        return self.channels.shape[1]

    def window(self, win: TimeWindow) -> "ChannelMatrix":
        idx = win.indices(self.timestamps)
        return ChannelMatrix(self.channels[:, idx], self.timestamps[idx])


def windows(span: float, cfg: TimeWindow = TimeWindow(), tolerance: float = 0.0) -> list[TimeWindow]:
    """All windows of ``cfg.duration`` stepping by ``cfg.increment`` within ``span`` seconds.

    Window starts are offsets from ``cfg.start``. ``tolerance`` lets the
    last window overhang the span by that many seconds (the pipelines pass
    half a frame interval so timestamp jitter cannot drop a window).
    """
    if span + tolerance < cfg.duration:
        raise ValidationError(
            f"span {span:g} s is shorter than the {cfg.duration:g} s window"
        )
    count = int(math.floor((span + tolerance - cfg.duration) / cfg.increment + 1e-9)) + 1
    return [TimeWindow(cfg.start + i * cfg.increment, cfg.duration, cfg.increment)
            for i in range(count)]


def sequence_windows(timestamps: np.ndarray, cfg: TimeWindow = TimeWindow()) -> list[TimeWindow]:
    """Windows for a timestamped recording, anchored at its first sample."""
    ts = np.asarray(timestamps, dtype=float)
    if ts.size < 2:
        raise ValidationError("need at least two samples to window a recording")
    dt = float(np.median(np.diff(ts)))
    span = float(ts[-1] - ts[0]) + dt
    anchored = TimeWindow(ts[0] + cfg.start, cfg.duration, cfg.increment)
    return windows(span - cfg.start, anchored, tolerance=0.5 * dt)


def extract_channels(seq: FrameSequence, roi: Rect) -> ChannelMatrix:
    """One channel per ROI pixel (row-major order), one sample per frame."""
    roi.check_within(seq.height, seq.width)
    rows, cols = roi.slices
    block = seq.frames[:, rows, cols].astype(float)
    return ChannelMatrix(block.reshape(len(seq), -1).T, seq.timestamps)


# --- container I/O ---------------------------------------------------------

def read_kv(path: Path) -> dict[str, str]:
    """Parse a ``key=value`` text file; blank lines and ``#`` comments are skipped."""
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"missing file: {path}")
    out: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CorruptContainerError(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def write_kv(path: Path, items: dict) -> None:
    Path(path).write_text("".join(f"{k}={v}\n" for k, v in items.items()))


def format_timestamp(t: float) -> str:
    return f"{t:.{TIMESTAMP_DECIMALS}f}"


def save_sequence(seq: FrameSequence, path) -> None:
    path = Path(path)
    if len(seq) == 0:
        raise ValidationError("refusing to save an empty sequence")
    try:
        path.mkdir(parents=True, exist_ok=True)
        manifest = {"width": seq.width, "height": seq.height, "frames": len(seq), "format": FORMAT}
        if math.isfinite(seq.nominal_rate):
            manifest["nominal_rate"] = repr(float(seq.nominal_rate))
        write_kv(path / MANIFEST, manifest)
        np.ascontiguousarray(seq.frames, dtype=np.uint8).tofile(path / FRAMES)
        (path / TIMESTAMPS).write_text("".join(format_timestamp(t) + "\n" for t in seq.timestamps))
    except OSError as exc:
        raise ContainerIOError(f"cannot write container {path}: {exc}") from exc


def load_sequence(path) -> FrameSequence:
    path = Path(path)
    if not path.is_dir():
        raise MissingFileError(f"no sequence container at {path}")
    for name in (MANIFEST, FRAMES, TIMESTAMPS):
        if not (path / name).is_file():
            raise MissingFileError(f"container {path} lacks {name}")
    manifest = read_kv(path / MANIFEST)
    try:
        width, height, count = (int(manifest[k]) for k in ("width", "height", "frames"))
        fmt = manifest["format"]
    except KeyError as exc:
        raise CorruptContainerError(f"manifest missing key {exc}") from exc
    except ValueError as exc:
        raise CorruptContainerError(f"manifest has a non-integer size: {exc}") from exc
    if fmt != FORMAT:
        raise CorruptContainerError(f"unsupported pixel format {fmt!r}")
    if min(width, height, count) <= 0:
        raise CorruptContainerError("manifest sizes must be positive")
    nominal = float(manifest.get("nominal_rate", "nan"))

    raw = np.fromfile(path / FRAMES, dtype=np.uint8)
    if raw.size != width * height * count:
        raise DimensionMismatchError(
            f"frames.bin holds {raw.size} bytes, manifest implies {width * height * count}"
        )
    try:
        lines = [ln for ln in (path / TIMESTAMPS).read_text().split() if ln]
        ts = np.array([float(v) for v in lines])
    except ValueError as exc:
        raise CorruptContainerError(f"unparseable timestamp: {exc}") from exc
    if ts.size != count:
        raise DimensionMismatchError(f"{ts.size} timestamps for {count} frames")
    return FrameSequence(raw.reshape(count, height, width), ts, nominal)


def load_frame(path) -> np.ndarray:
    """First frame of a container (single-frame containers hold templates)."""
    return load_sequence(path).frames[0]


def save_frame(frame: np.ndarray, path) -> None:
    save_sequence(FrameSequence(np.asarray(frame)[None], [0.0]), path)


def write_reference_csv(rec: ReferenceRecording, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "value"])
        for t, v in zip(rec.times, rec.samples):
            writer.writerow([format_timestamp(t), repr(float(v))])


def read_reference_csv(path, kind: str = "BVP") -> ReferenceRecording:
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"missing reference recording {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["t", "value"]:
            raise CorruptContainerError(f"{path}: expected header 't,value'")
        try:
            rows = [(float(a), float(b)) for a, b in reader]
        except ValueError as exc:
            raise CorruptContainerError(f"{path}: {exc}") from exc
    if len(rows) < 2:
        raise ValidationError(f"{path}: need at least two samples")
    t = np.array([r[0] for r in rows])
    dt = np.diff(t)
    if np.any(dt <= 0):
        raise TimestampOrderError(f"{path}: times must be strictly increasing")
    rate = (t.size - 1) / (t[-1] - t[0])
    if abs(rate - round(rate)) < 1e-4 * rate:
        rate = float(round(rate))
    # timestamps are stored to the microsecond
    if np.max(np.abs(dt - 1.0 / rate)) > 2e-6:
        raise ValidationError(f"{path}: reference recording is not uniformly sampled")
    return ReferenceRecording(kind, rate, np.array([r[1] for r in rows]), float(t[0]))


@dataclass(frozen=True, eq=False)
class VitalTrace:
    """Per-window rate estimates in beats (or breaths) per minute."""

    window_starts: np.ndarray
    rate_bpm: np.ndarray
    selected: tuple[str, ...] | None = None

    def __post_init__(self):
        starts = np.array(self.window_starts, dtype=float).reshape(-1)
        rates = np.array(self.rate_bpm, dtype=float).reshape(-1)
        if starts.shape != rates.shape:
            raise DimensionMismatchError("one rate per window start is required")
        object.__setattr__(self, "window_starts", _frozen(starts))
        object.__setattr__(self, "rate_bpm", _frozen(rates))
        if self.selected is not None:
            sel = tuple(self.selected)
            if len(sel) != starts.size:
                raise DimensionMismatchError("one selected label per window is required")
            object.__setattr__(self, "selected", sel)

    def __len__(self) -> int:
        return self.rate_bpm.size


def write_trace_csv(trace: VitalTrace, path, include_selected: bool | None = None) -> None:
    if include_selected is None:
        include_selected = trace.selected is not None
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = ["window_start_s", "rate_bpm"] + (["selected"] if include_selected else [])
        writer.writerow(header)
        for i, (s, r) in enumerate(zip(trace.window_starts, trace.rate_bpm)):
            row = [format_timestamp(s), f"{r:.4f}"]
            if include_selected:
                row.append(trace.selected[i])
            writer.writerow(row)


def read_table_csv(path) -> list[dict[str, str]]:
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"missing file: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise CorruptContainerError(f"{path}: empty CSV")
        return [dict(row) for row in reader]


def read_trace_csv(path) -> VitalTrace:
    rows = read_table_csv(path)
    if rows and not {"window_start_s", "rate_bpm"} <= rows[0].keys():
        raise CorruptContainerError(f"{path}: expected columns window_start_s,rate_bpm")
    try:
        starts = [float(r["window_start_s"]) for r in rows]
        rates = [float(r["rate_bpm"]) for r in rows]
    except (TypeError, ValueError) as exc:
        raise CorruptContainerError(f"{path}: {exc}") from exc
    selected = tuple(r["selected"] for r in rows) if rows and "selected" in rows[0] else None
    return VitalTrace(starts, rates, selected)
