"""Heart-sound denoising: FIR high-pass, wavelet shrinkage, normalization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataio import AudioSample
from .errors import DataError
from .fir import apply_fir, design_highpass
from .wavelet import dwt, idwt

MAD_TO_SIGMA = 0.6745
SELECTIONS = ("heursure", "universal", "sure")
THRESHOLDINGS = ("hard", "soft")


@dataclass(frozen=True)
class DenoisePolicy:
    wavelet: str = "db4"
    levels: int = 6
    selection: str = "heursure"
    thresholding: str = "hard"
    cutoff_hz: float = 60.0
    fir_order: int | None = None  # None: scaled default (256 at 4 kHz)

    def __post_init__(self):
        if self.levels < 1:
            raise DataError(f"levels must be >= 1, got {self.levels}")
        if self.selection not in SELECTIONS:
            raise DataError(f"selection must be one of {SELECTIONS}")
        if self.thresholding not in THRESHOLDINGS:
            raise DataError(f"thresholding must be one of {THRESHOLDINGS}")


def universal_threshold(n: int) -> float:
    return float(np.sqrt(2.0 * np.log(n)))


def sure_threshold(c) -> float:
    """Threshold minimizing Stein's unbiased risk estimate (unit-noise scale)."""
    c = np.asarray(c, dtype=float)
    n = c.size
    sx2 = np.sort(np.abs(c)) ** 2
    k = np.arange(1, n + 1)
    risks = (n - 2 * k + np.cumsum(sx2) + (n - k) * sx2) / n
    return float(np.sqrt(sx2[np.argmin(risks)]))


def heursure_threshold(c) -> float:
    """Universal threshold for sparse vectors, else the smaller of SURE and universal.

    ``c`` is assumed scaled to unit noise. The vector counts as sparse when
    its excess energy (sum(c^2) - n) / n falls below log2(n)^1.5 / sqrt(n).
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    univ = universal_threshold(n)
    eta = (np.dot(c, c) - n) / n
    crit = np.log2(n) ** 1.5 / np.sqrt(n)
    if eta < crit:
        return univ
    return min(sure_threshold(c), univ)


def select_threshold(c, selection: str) -> float:
    if selection == "heursure":
        return heursure_threshold(c)
    if selection == "universal":
        return universal_threshold(np.asarray(c).size)
    if selection == "sure":
        return sure_threshold(c)
    raise DataError(f"unknown threshold selection {selection!r}")


def hard_threshold(c, t: float) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    return np.where(np.abs(c) > t, c, 0.0)


def soft_threshold(c, t: float) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    return np.sign(c) * np.maximum(np.abs(c) - t, 0.0)


def level_thresholds(details, selection: str = "heursure") -> list[tuple[float, float]]:
    """(sigma_j, absolute threshold) per detail level, finest first.

    sigma_j is the median absolute deviation of the level's own coefficients
    over 0.6745; a level with sigma_j == 0 gets threshold 0 (left untouched).
    """
    out = []
    for d in details:
        sigma = float(np.median(np.abs(d))) / MAD_TO_SIGMA
        if sigma == 0.0:
            out.append((0.0, 0.0))
            continue
        out.append((sigma, sigma * select_threshold(d / sigma, selection)))
    return out


def denoise(x, p: DenoisePolicy = DenoisePolicy()) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    dec = dwt(x, p.wavelet, p.levels)
    thresholds = level_thresholds(dec.details, p.selection)
    if all(sigma == 0.0 for sigma, _ in thresholds):
        return x.copy()
    shrink = hard_threshold if p.thresholding == "hard" else soft_threshold
    dec.details = [
        d if sigma == 0.0 else shrink(d, t)
        for d, (sigma, t) in zip(dec.details, thresholds)
    ]
    return idwt(dec)


def normalize_center(x) -> np.ndarray:
    """Remove the mean, then scale so the peak magnitude is exactly 0.5."""
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0 or np.ptp(x) == 0.0:
        raise DataError("zero dynamic range: cannot normalize a constant signal")
    y = x - x.mean()
    peak = np.max(np.abs(y))
    if peak == 0.0 or not np.isfinite(peak):
        raise DataError("zero dynamic range: cannot normalize a constant signal")
    return y / (2.0 * peak)


def preprocess_signal(x, sample_rate_hz: int, p: DenoisePolicy = DenoisePolicy()) -> np.ndarray:
    f = design_highpass(p.cutoff_hz, sample_rate_hz, p.fir_order)
    return normalize_center(denoise(apply_fir(f, x), p))


def preprocess_pipeline(s: AudioSample, p: DenoisePolicy = DenoisePolicy()) -> AudioSample:
    """High-pass at the policy cutoff, wavelet-denoise, then normalize and centre."""
    try:
        y = preprocess_signal(s.samples, s.sample_rate_hz, p)
    except DataError as exc:
        raise DataError(f"{s.id}: {exc}") from exc
    return s.with_samples(y)
