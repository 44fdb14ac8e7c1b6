"""Shannon-energy envelope, peak picking and peak-statistics features."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PEAK_FEATURE_NAMES = (
    "d_max1", "d_max2", "d_min1", "d_min2", "d_mean", "d_std",
    "t_max1", "t_max2", "t_min1", "t_min2", "t_mean", "t_std",
    "peak_count",
)


@dataclass(frozen=True)
class Envelope:
    values: np.ndarray
    window_len: int
    sample_rate_hz: int


@dataclass(frozen=True)
class PeakSet:
    indices: np.ndarray
    heights: np.ndarray
    min_distance: int = 400
    min_height: float = 0.08

    def __len__(self):
        return self.indices.size


def shannon_energy(x) -> np.ndarray:
    """-x^2 log10(x^2) pointwise, taking the limit value 0 at x = 0."""
    x2 = np.square(np.asarray(x, dtype=np.float64))
    out = np.zeros_like(x2)
    nz = x2 > 0
    out[nz] = -x2[nz] * np.log10(x2[nz])
    return out


def moving_average(x, window: int) -> np.ndarray:
    """Centred moving average; the window shrinks at the edges.

    Sample i averages x[i - window//2 : i + (window - 1)//2 + 1].
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    c = np.concatenate([[0.0], np.cumsum(x)])
    i = np.arange(n)
    lo = np.maximum(i - window // 2, 0)
    hi = np.minimum(i + (window - 1) // 2 + 1, n)
    return (c[hi] - c[lo]) / (hi - lo)


def envelope(x, window: int = 100, sample_rate_hz: int = 4000) -> Envelope:
    if window < 1:
        raise ValueError("window must be >= 1")
    env = moving_average(shannon_energy(x), window)
    peak = env.max() if env.size else 0.0
    if peak > 0:
        env = env / peak
    return Envelope(env, window, sample_rate_hz)


def _local_maxima(v: np.ndarray) -> np.ndarray:
    # plateaus report their leftmost sample; endpoints never qualify
    n = v.size
    if n < 3:
        return np.empty(0, dtype=np.int64)
    change = np.flatnonzero(np.diff(v) != 0) + 1
    starts = np.concatenate([[0], change])
    ends = np.concatenate([change, [n]]) - 1
    out = []
    for s, e in zip(starts, ends):
        if s == 0 or e == n - 1:
            continue
        if v[s - 1] < v[s] and v[e + 1] < v[e]:
            out.append(s)
    return np.asarray(out, dtype=np.int64)


def find_peaks(env, min_height: float = 0.08, min_distance: int = 400) -> PeakSet:
    """Local maxima of at least ``min_height``, thinned greedily by height.

    Candidates are visited tallest first (ties by position) and any
    candidate closer than ``min_distance`` samples to an accepted peak is
    dropped.
    """
    v = env.values if isinstance(env, Envelope) else np.asarray(env, dtype=np.float64)
    cand = _local_maxima(v)
    cand = cand[v[cand] >= min_height]
    order = cand[np.lexsort((cand, -v[cand]))]
    taken = np.zeros(v.size, dtype=bool)
    keep = []
    for i in order:
        lo, hi = max(i - min_distance + 1, 0), min(i + min_distance, v.size)
        if taken[lo:hi].any():
            continue
        taken[i] = True
        keep.append(i)
    idx = np.sort(np.asarray(keep, dtype=np.int64))
    return PeakSet(idx, v[idx], min_distance, min_height)


def _extremes(values: np.ndarray) -> list[float]:
    s = np.sort(values)
    n = s.size
    return [
        s[-1], s[-2] if n > 1 else s[-1],
        s[0], s[1] if n > 1 else s[0],
        s.mean(), s.std(),
    ]


def peak_features(peaks, sample_rate_hz: int) -> np.ndarray:
    """The 13 peak statistics, in ``PEAK_FEATURE_NAMES`` order.

    Distances and times are in seconds. With fewer than two peaks the
    distance block is zero; with no peaks everything is zero.
    """
    idx = np.asarray(peaks.indices if isinstance(peaks, PeakSet) else peaks, dtype=np.int64)
    idx = np.sort(idx)
    out = np.zeros(len(PEAK_FEATURE_NAMES))
    if idx.size >= 2:
        out[0:6] = _extremes(np.diff(idx) / sample_rate_hz)
    if idx.size >= 1:
        out[6:12] = _extremes(idx / sample_rate_hz)
    out[12] = idx.size
    return out
