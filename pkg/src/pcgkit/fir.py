"""Windowed-sinc FIR high-pass design and zero-phase application."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError

REFERENCE_ORDER = 256
REFERENCE_RATE_HZ = 4000


@dataclass(frozen=True)
class FirFilter:
    taps: np.ndarray
    cutoff_hz: float
    sample_rate_hz: int
    window: str = "hamming"

    @property
    def order(self) -> int:
        return self.taps.size - 1

    def response(self, freq_hz) -> np.ndarray:
        """Complex frequency response at the given frequencies (single pass)."""
        w = 2 * np.pi * np.atleast_1d(np.asarray(freq_hz, dtype=float)) / self.sample_rate_hz
        k = np.arange(self.taps.size)
        return np.exp(-1j * np.outer(w, k)) @ self.taps


def default_order(sample_rate_hz: int) -> int:
    """Order 256 at 4 kHz, scaled with the sample rate and rounded to even."""
    order = int(round(REFERENCE_ORDER * sample_rate_hz / REFERENCE_RATE_HZ / 2.0)) * 2
    return max(order, 2)


def design_highpass(cutoff_hz: float, sample_rate_hz: int, order: int | None = None) -> FirFilter:
    """Type-I linear-phase high-pass by spectral inversion of a Hamming low-pass."""
    if order is None:
        order = default_order(sample_rate_hz)
    if not 0 < cutoff_hz < sample_rate_hz / 2:
        raise DataError(f"cutoff {cutoff_hz} Hz must lie strictly inside (0, {sample_rate_hz / 2})")
    if order < 2 or order % 2:
        raise DataError(f"filter order must be even and >= 2, got {order}")
    n = np.arange(order + 1) - order / 2
    fc = cutoff_hz / sample_rate_hz
    lowpass = 2 * fc * np.sinc(2 * fc * n) * np.hamming(order + 1)
    lowpass /= lowpass.sum()
    taps = -lowpass
    taps[order // 2] += 1.0
    return FirFilter(taps, float(cutoff_hz), int(sample_rate_hz))


def apply_fir(f: FirFilter, x) -> np.ndarray:
    """Forward-backward filtering, so the result has zero phase and the input length.

    Edges are extended by odd reflection (as filtfilt does) to keep the
    start-up transient small; the extension is linear in ``x``.
    """
    x = np.asarray(x, dtype=np.float64)
    h = f.taps
    if x.ndim != 1 or x.size <= h.size:
        raise DataError(f"signal of length {x.size} is shorter than the {h.size}-tap filter")
    pad = min(h.size - 1, x.size - 1)
    ext = np.concatenate([
        2 * x[0] - x[pad:0:-1],
        x,
        2 * x[-1] - x[-2:-pad - 2:-1],
    ])
    # symmetric taps: time-reversed pass equals a second centred convolution
    y = np.convolve(ext, h, mode="same")
    y = np.convolve(y[::-1], h, mode="same")[::-1]
    return y[pad:pad + x.size]
