"""Slow, obviously-correct reference implementations used only by tests."""
from __future__ import annotations

import itertools
import math

import numpy as np

from nirvitals.core import Rect


def lomb_direct(y, t, freqs):
    """Textbook Lomb periodogram, one frequency at a time, normalized by 2 * sample variance."""
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    y = y - y.mean()
    var = y.var(ddof=1)
    out = []
    for f in freqs:
        w = 2 * math.pi * f
        tau = math.atan2(np.sum(np.sin(2 * w * t)), np.sum(np.cos(2 * w * t))) / (2 * w)
        c = np.cos(w * (t - tau))
        s = np.sin(w * (t - tau))
        cc, ss = np.sum(c * c), np.sum(s * s)
        p = np.sum(y * c) ** 2 / cc
        if ss > 1e-9 * len(t):
            p += np.sum(y * s) ** 2 / ss
        out.append(p / (2 * var))
    return np.array(out)


def dft_periodogram(y, rate, freqs):
    """Classical periodogram |sum y e^{-iwt}|^2 / n on arbitrary frequencies of uniform data."""
    y = np.asarray(y, dtype=float) - np.mean(y)
    n = y.size
    t = np.arange(n) / rate
    return np.array([abs(np.sum(y * np.exp(-2j * math.pi * f * t))) ** 2 / n for f in freqs])


def mad_brute(search, tpl):
    s = np.asarray(search, dtype=float)
    t = np.asarray(tpl, dtype=float)
    rows, cols = s.shape[0] - t.shape[0] + 1, s.shape[1] - t.shape[1] + 1
    out = np.empty((rows, cols))
    for x in range(rows):
        for y in range(cols):
            out[x, y] = np.mean(np.abs(s[x:x + t.shape[0], y:y + t.shape[1]] - t))
    return out


def amad_brute(mad, factor=4.0):
    out = np.empty_like(mad)
    for x in range(mad.shape[0]):
        row_mean = sum(mad[x]) / mad.shape[1]
        for y in range(mad.shape[1]):
            out[x, y] = mad[x, y] - factor * row_mean
    return out


def chain_map_exhaustive(data, freqs):
    """Argmax over all assignments of prod data * prod exp(-|f_i - f_{i-1}|)."""
    n, s = data.shape
    best, best_val = None, -np.inf
    logd = np.log(data)
    for states in itertools.product(range(s), repeat=n):
        val = sum(logd[i, k] for i, k in enumerate(states))
        val -= sum(abs(freqs[states[i]] - freqs[states[i - 1]]) for i in range(1, n))
        if val > best_val:
            best, best_val = states, val
    return np.array([freqs[k] for k in best])


def kurtosis_verbatim(f, p):
    f = [float(v) for v in f]
    p = [float(v) for v in p]
    mu = sum(pi * fi for pi, fi in zip(p, f)) / sum(f)
    num = sum((pi - mu) ** 4 * fi for pi, fi in zip(p, f)) * sum(f)
    den = sum((pi - mu) ** 2 * fi for pi, fi in zip(p, f)) ** 2
    return num / den


def catmull_rom_1d(x):
    x = abs(x)
    if x <= 1:
        return 1.5 * x ** 3 - 2.5 * x ** 2 + 1
    if x < 2:
        return -0.5 * x ** 3 + 2.5 * x ** 2 - 4 * x + 2
    return 0.0


def bicubic_pixel(img, out_shape, r, c):
    """Single output pixel of a half-pixel-centred Catmull-Rom resize with clamped edges."""
    h, w = img.shape
    sy = (r + 0.5) * h / out_shape[0] - 0.5
    sx = (c + 0.5) * w / out_shape[1] - 0.5
    acc = 0.0
    for i in range(math.floor(sy) - 1, math.floor(sy) + 3):
        for j in range(math.floor(sx) - 1, math.floor(sx) + 3):
            wgt = catmull_rom_1d(sy - i) * catmull_rom_1d(sx - j)
            acc += wgt * img[min(max(i, 0), h - 1), min(max(j, 0), w - 1)]
    return acc


def student_t_two_sided_mpmath(t, df):
    """Two-sided p by numerical integration of the Student t density."""
    import mpmath as mp
    mp.mp.dps = 30
    nu = mp.mpf(df)
    c = mp.gamma((nu + 1) / 2) / (mp.sqrt(nu * mp.pi) * mp.gamma(nu / 2))
    tail = mp.quad(lambda x: c * (1 + x * x / nu) ** (-(nu + 1) / 2), [abs(t), mp.inf])
    return float(2 * tail)


def biquad_cascade_filter(sos, x):
    """Direct-form-I evaluation of a second-order-section cascade in pure Python."""
    y = list(map(float, x))
    for b0, b1, b2, a0, a1, a2 in sos:
        out = []
        x1 = x2 = y1 = y2 = 0.0
        for v in y:
            r = (b0 * v + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2) / a0
            x2, x1 = x1, v
            y2, y1 = y1, r
            out.append(r)
        y = out
    return np.array(y)


def brute_detect(frame, template, scales=(1.0, 0.8)):
    """Exhaustive AMAD minimum over all scales with scale-then-row-then-column ties."""
    best = None
    for order, scale in enumerate(scales):
        tpl = template.scaled(scale).pixels
        amad = amad_brute(mad_brute(frame, tpl))
        for x in range(amad.shape[0]):
            for y in range(amad.shape[1]):
                key = (amad[x, y], order, x, y)
                if best is None or key < best[0]:
                    best = (key, Rect(x, y, *tpl.shape), scale)
    return best


def paste_scene(rng, template, scale, shape=(48, 130)):
    frame = rng.integers(0, 30, shape).astype(np.uint8)
    frame = np.clip(frame.astype(int) + rng.integers(150, 220), 0, 255).astype(np.uint8)
    tpl = template.scaled(scale).pixels
    top = int(rng.integers(0, shape[0] - tpl.shape[0] + 1))
    left = int(rng.integers(0, shape[1] - tpl.shape[1] + 1))
    frame[top:top + tpl.shape[0], left:left + tpl.shape[1]] = tpl
    return frame, top, left
