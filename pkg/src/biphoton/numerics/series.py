"""Small utilities for sampled curves y(x)."""

from __future__ import annotations

import numpy as np


def _as_xy(series):
    arr = np.asarray(series, dtype=float)
    if arr.size == 0:
        return np.empty(0), np.empty(0)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("series must be a sequence of (x, y) pairs")
    x, y = arr[:, 0], arr[:, 1]
    if np.any(np.diff(x) < 0):
        raise ValueError("series must be sorted by x")
    return x, y


def count_sign_changes(series, noise_floor: float = 0.05) -> int:
    """Strict sign changes between neighbours, after dropping |y| < noise_floor."""
    _, y = _as_xy(series)
    y = y[np.abs(y) >= noise_floor]
    if y.size < 2:
        return 0
    s = np.sign(y)
    return int(np.count_nonzero(s[1:] != s[:-1]))


def count_transitions(series, level: float = 0.5) -> int:
    """Alternating excursions between y > +level and y < -level.

    Each time the curve, having last been above ``+level``, next reaches
    below ``-level`` (or vice versa) counts once. Wiggles that stay inside
    the band are ignored.
    """
    _, y = _as_xy(series)
    state = 0
    count = 0
    for v in y:
        side = 1 if v > level else (-1 if v < -level else 0)
        if side and side != state:
            if state:
                count += 1
            state = side
    return count


def local_extrema(series, kind: str = "max"):
    """Interior local maxima (or minima) as a list of (x, y).

    A flat top of equal samples is reported once at its centre.
    """
    x, y = _as_xy(series)
    if kind not in ("max", "min"):
        raise ValueError("kind must be 'max' or 'min'")
    if kind == "min":
        y = -y
    out = []
    i = 1
    n = y.size
    while i < n - 1:
        if y[i] > y[i - 1]:
            j = i
            while j + 1 < n and y[j + 1] == y[i]:
                j += 1
            if j + 1 < n and y[j + 1] < y[i]:
                k = (i + j) // 2
                out.append((float(x[k]), float(y[k] if kind == "max" else -y[k])))
            i = j + 1
        else:
            i += 1
    return out


def refine_extremum(x, y, index: int):
    """Parabolic refinement of a sampled extremum at ``index`` -> (x, y)."""
    if index <= 0 or index >= len(x) - 1:
        return float(x[index]), float(y[index])
    x0, x1, x2 = x[index - 1], x[index], x[index + 1]
    y0, y1, y2 = y[index - 1], y[index], y[index + 1]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom
    if a == 0:
        return float(x1), float(y1)
    xv = -b / (2 * a)
    c = y1 - a * x1 * x1 - b * x1
    return float(xv), float(a * xv * xv + b * xv + c)
