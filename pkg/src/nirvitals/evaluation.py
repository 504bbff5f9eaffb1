"""Reference rates from gold-standard recordings and agreement statistics."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .core import ReferenceRecording, TimeWindow, VitalTrace
from .errors import DimensionMismatchError, NumericalError, ValidationError
from .spectral import DEFAULT_GRID_STEP, Band, frequency_grid, lomb_scargle

LOA_Z = 1.96


@dataclass(frozen=True)
class TTestResult:
    t: float
    p: float
    df: int


@dataclass(frozen=True)
class AgreementReport:
    n_pairs: int
    mae_bpm: float
    mean_error_bpm: float
    sd_error_bpm: float
    rmse_bpm: float
    pearson_r: float
    bland_altman: tuple[float, float, float]  # bias, lower and upper limits of agreement
    splits: dict[str, "AgreementReport"] = field(default_factory=dict)
    paired_test: TTestResult | None = None


def reference_rate(rec: ReferenceRecording, band: Band, windows,
                   grid_step: float = DEFAULT_GRID_STEP) -> VitalTrace:
    """Per-window Lomb-Scargle peak of a gold-standard recording (no smoothing)."""
    times = rec.times
    end = rec.start_time + rec.span
    grid = frequency_grid(0.5 * rec.sample_rate, grid_step, band)
    starts, rates = [], []
    for win in windows:
        if win.start < rec.start_time - 1e-6 or win.end > end + 1e-6:
            raise ValidationError(
                f"window [{win.start:g}, {win.end:g}) s outside recording "
                f"[{rec.start_time:g}, {end:g}) s"
            )
        idx = win.indices(times)
        spec = lomb_scargle(rec.samples[idx], times[idx], grid, nyquist=0.5 * rec.sample_rate)
        starts.append(win.start)
        rates.append(60.0 * spec.peak_frequency())
    return VitalTrace(starts, rates)


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    da, db = a - a.mean(), b - b.mean()
    den = math.sqrt(float((da ** 2).sum()) * float((db ** 2).sum()))
    if den == 0:
        return float("nan")
    return float((da * db).sum() / den)


def _student_two_sided(t: float, df: int) -> float:
    if math.isinf(t):
        return 0.0
    t2 = t * t
    p = float(special.betainc(0.5 * df, 0.5, df / (df + t2)))
    if p > 0.5:
        # small |t|: df / (df + t^2) rounds towards 1, the complementary form keeps precision
        p = float(1.0 - special.betainc(0.5, 0.5 * df, t2 / (df + t2)))
    return p


def _align(est: VitalTrace, ref: VitalTrace) -> tuple[np.ndarray, np.ndarray]:
    if len(est) != len(ref):
        raise DimensionMismatchError(f"{len(est)} estimates vs {len(ref)} references")
    if not np.allclose(est.window_starts, ref.window_starts, rtol=0, atol=1e-6):
        raise ValidationError("estimate and reference windows do not start at the same times")
    return est.rate_bpm, ref.rate_bpm


def _report(est: np.ndarray, ref: np.ndarray) -> AgreementReport:
    n = est.size
    if n < 2:
        raise ValidationError("agreement statistics need at least two pairs")
    err = est - ref
    me = float(err.mean())
    sd = float(err.std(ddof=1))
    return AgreementReport(
        n_pairs=n,
        mae_bpm=float(np.abs(err).mean()),
        mean_error_bpm=me,
        sd_error_bpm=sd,
        rmse_bpm=float(np.sqrt((err ** 2).mean())),
        pearson_r=_pearson(est, ref),
        bland_altman=(me, me - LOA_Z * sd, me + LOA_Z * sd),
    )


def agreement(est: VitalTrace, ref: VitalTrace, conditions=None) -> AgreementReport:
    """Error statistics of ``est - ref``.

    ``conditions`` optionally labels every pair (e.g. ``"bright"``/``"dark"``);
    each label then gets its own report, and with exactly two equally sized
    conditions the absolute errors are compared with a paired t-test.
    """
    e, r = _align(est, ref)
    return agreement_arrays(e, r, conditions)


def agreement_arrays(est, ref, conditions=None) -> AgreementReport:
    e = np.asarray(est, dtype=float)
    r = np.asarray(ref, dtype=float)
    if e.shape != r.shape:
        raise DimensionMismatchError("estimate and reference lengths differ")
    overall = _report(e, r)
    if conditions is None:
        return overall
    labels = list(conditions)
    if len(labels) != e.size:
        raise DimensionMismatchError("one condition label per pair is required")
    order = list(dict.fromkeys(labels))
    splits = {}
    abs_err = {}
    for lab in order:
        mask = np.array([x == lab for x in labels])
        splits[lab] = _report(e[mask], r[mask])
        abs_err[lab] = np.abs(e[mask] - r[mask])
    test = None
    if len(order) == 2 and abs_err[order[0]].size == abs_err[order[1]].size:
        try:
            test = paired_t_test(abs_err[order[0]], abs_err[order[1]])
        except NumericalError:
            test = None  # identical differences: no t statistic
    return AgreementReport(**{**overall.__dict__, "splits": splits, "paired_test": test})


def paired_t_test(errors_a, errors_b) -> TTestResult:
    a = np.asarray(errors_a, dtype=float)
    b = np.asarray(errors_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionMismatchError("paired samples must have equal length")
    n = a.size
    if n < 2:
        raise ValidationError("paired t-test needs at least two pairs")
    d = a - b
    sd = float(d.std(ddof=1))
    if sd == 0:
        raise NumericalError("paired differences have zero variance")
    t = float(d.mean()) / (sd / math.sqrt(n))
    return TTestResult(t, t_test_p(t, n - 1), n - 1)


def t_test_p(t: float, df: int) -> float:
    """Two-sided p-value of a Student t statistic."""
    if df < 1:
        raise ValidationError("degrees of freedom must be positive")
    return _student_two_sided(float(t), int(df))


def point_biserial(binary, values) -> tuple[float, float]:
    """Correlation between a 0/1 group indicator and a continuous variable, with p-value."""
    g = np.asarray(binary, dtype=float)
    v = np.asarray(values, dtype=float)
    if g.shape != v.shape or g.ndim != 1:
        raise DimensionMismatchError("indicator and values must have equal length")
    if not np.all((g == 0) | (g == 1)):
        raise ValidationError("indicator must contain only 0 and 1")
    if g.min() == g.max():
        raise ValidationError("both groups must be present")
    n = g.size
    if n < 3:
        raise ValidationError("point-biserial correlation needs at least 3 observations")
    if v.std() == 0:
        raise NumericalError("values have zero variance")
    r = _pearson(g, v)
    return r, point_biserial_p(r, n)


def point_biserial_p(r: float, n: int) -> float:
    if abs(r) >= 1:
        return 0.0
    t = r * math.sqrt((n - 2) / (1 - r * r))
    return t_test_p(t, n - 2)


# --- report output -----------------------------------------------------------

def format_report(report: AgreementReport, prefix: str = "") -> str:
    bias, lo, hi = report.bland_altman
    lines = [
        f"{prefix}n_pairs={report.n_pairs}",
        f"{prefix}mae_bpm={report.mae_bpm:.6f}",
        f"{prefix}mean_error_bpm={report.mean_error_bpm:.6f}",
        f"{prefix}sd_error_bpm={report.sd_error_bpm:.6f}",
        f"{prefix}rmse_bpm={report.rmse_bpm:.6f}",
        f"{prefix}pearson_r={report.pearson_r:.6f}",
        f"{prefix}bland_altman_bias={bias:.6f}",
        f"{prefix}bland_altman_loa_low={lo:.6f}",
        f"{prefix}bland_altman_loa_high={hi:.6f}",
    ]
    text = "\n".join(lines) + "\n"
    for label, sub in report.splits.items():
        text += format_report(sub, f"{label}.")
    if report.paired_test is not None:
        pt = report.paired_test
        text += f"paired_t.t={pt.t:.6f}\npaired_t.df={pt.df}\npaired_t.p={pt.p:.6f}\n"
    return text


def write_pairs_csv(est, ref, path, conditions=None, starts=None) -> None:
    """Bland-Altman scatter data: one row per pair with mean and difference."""
    e = np.asarray(est, dtype=float)
    r = np.asarray(ref, dtype=float)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = ["window_start_s", "estimate_bpm", "reference_bpm", "mean_bpm", "diff_bpm"]
        if conditions is not None:
            header.append("condition")
        writer.writerow(header)
        for i in range(e.size):
            row = [f"{starts[i]:.6f}" if starts is not None else str(i),
                   f"{e[i]:.4f}", f"{r[i]:.4f}", f"{(e[i] + r[i]) / 2:.4f}", f"{e[i] - r[i]:.4f}"]
            if conditions is not None:
                row.append(conditions[i])
            writer.writerow(row)


def window_list(starts, duration: float = 30.0, increment: float = 1.0) -> list[TimeWindow]:
    return [TimeWindow(float(s), duration, increment) for s in starts]
