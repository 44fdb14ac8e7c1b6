"""Orthogonal Daubechies DWT with periodized boundaries."""

from __future__ import annotations

import functools
import re
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import DataError


@functools.lru_cache(maxsize=None)
def daubechies(n_vanishing: int) -> np.ndarray:
    """Minimum-phase reconstruction low-pass filter of ``db<n>`` (length 2n).

    Built by spectral factorization of the Daubechies product filter: the
    roots of the binomial polynomial in y = sin^2(w/2) are mapped to z and
    the ones inside the unit circle are kept. Coefficients sum to sqrt(2).
    """
    if not 1 <= n_vanishing <= 10:
        raise DataError(f"db{n_vanishing} not supported (db1..db10)")
    p = n_vanishing
    # P(y) = sum_k C(p-1+k, k) y^k ; np.roots wants the highest power first
    poly_y = [comb(p - 1 + k, k) for k in range(p)][::-1]
    zeros = []
    for y in np.roots(poly_y) if p > 1 else []:
        # y = (2 - z - 1/z) / 4  ->  z^2 - (2 - 4y) z + 1 = 0
        r = np.roots([1.0, -(2.0 - 4.0 * y), 1.0])
        zeros.append(r[np.argmin(np.abs(r))])
    h = np.real(np.poly(np.concatenate([-np.ones(p), np.asarray(zeros, dtype=complex)])))
    return h * (np.sqrt(2.0) / h.sum())


def wavelet_filters(name: str) -> tuple[np.ndarray, np.ndarray]:
    """(lowpass, highpass) orthonormal filter pair for ``name`` such as ``"db4"``."""
    m = re.fullmatch(r"db(\d+)", name.strip().lower())
    if not m:
        raise DataError(f"unsupported wavelet {name!r}; only the db family is available")
    h = daubechies(int(m.group(1)))
    g = h[::-1] * (-1.0) ** np.arange(h.size)
    return h, g


@dataclass
class WaveletDecomposition:
    approx: np.ndarray
    details: list[np.ndarray]           # details[0] is the finest level
    wavelet: str
    original_length: int
    boundary_mode: str = "periodization"
    lengths: list[int] = field(default_factory=list)  # input length at each level

    @property
    def levels(self) -> int:
        return len(self.details)

    def coefficient_count(self) -> int:
        return self.approx.size + sum(d.size for d in self.details)


def _analysis_step(x, h, g):
    n = x.size
    idx = (2 * np.arange(n // 2)[:, None] + np.arange(h.size)[None, :]) % n
    seg = x[idx]
    return seg @ h, seg @ g


def _synthesis_step(a, d, h, g):
    n = 2 * a.size
    idx = (2 * np.arange(a.size)[:, None] + np.arange(h.size)[None, :]) % n
    out = np.zeros(n)
    np.add.at(out, idx, a[:, None] * h[None, :] + d[:, None] * g[None, :])
    return out


def _level_lengths(n: int, levels: int) -> list[int]:
    lengths = []
    for _ in range(levels):
        lengths.append(n)
        n = n // 2 + (n % 2)
    return lengths


def dwt(x, wavelet: str = "db4", levels: int = 6) -> WaveletDecomposition:
    """Multilevel Mallat decomposition with periodic extension.

    At a level whose input length is odd, the last sample is not transformed
    and is carried to the end of the approximation vector, so the transform
    stays orthogonal and the coefficient count equals the signal length.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DataError("dwt expects a 1-D signal")
    if levels < 1:
        raise DataError(f"levels must be >= 1, got {levels}")
    h, g = wavelet_filters(wavelet)
    lengths = _level_lengths(x.size, levels)
    if lengths[-1] - lengths[-1] % 2 < h.size:
        raise DataError(
            f"signal of length {x.size} too short for {levels} levels of {wavelet}"
        )
    details = []
    a = x
    for n in lengths:
        even = n - n % 2
        ca, cd = _analysis_step(a[:even], h, g)
        if n % 2:
            ca = np.append(ca, a[-1])
        details.append(cd)
        a = ca
    return WaveletDecomposition(a, details, wavelet, x.size, lengths=lengths)


def idwt(d: WaveletDecomposition) -> np.ndarray:
    h, g = wavelet_filters(d.wavelet)
    lengths = d.lengths or _level_lengths(d.original_length, d.levels)
    if len(lengths) != d.levels or lengths[0] != d.original_length:
        raise DataError("decomposition level lengths inconsistent with original_length")
    a = np.asarray(d.approx, dtype=np.float64)
    for n, cd in zip(reversed(lengths), reversed(d.details)):
        half = n // 2
        if cd.size != half or a.size != half + n % 2:
            raise DataError("inconsistent coefficient lengths in decomposition")
        rec = _synthesis_step(a[:half], np.asarray(cd, dtype=np.float64), h, g)
        a = np.append(rec, a[half:]) if n % 2 else rec
    return a
