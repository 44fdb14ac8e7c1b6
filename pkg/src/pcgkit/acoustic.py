"""Frame-level acoustic descriptors summarized by statistical functionals.

A compact stand-in for large openSMILE-style feature sets: 20 low-level
descriptors (LLDs) per frame, each summarized over the recording by 11
functionals, giving 220 values in a fixed, named order.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DataError

SPECTRAL_LLDS = (
    "rms", "zcr", "spectral_centroid", "spectral_rolloff", "spectral_flux",
    "spectral_entropy", "spectral_flatness",
)
FUNCTIONALS = (
    "mean", "std", "min", "max", "range", "median", "q1", "q3",
    "skewness", "kurtosis", "slope",
)
EPS = 1e-10


@dataclass(frozen=True)
class AcousticConfig:
    frame_len_s: float = 0.025
    hop_s: float = 0.010
    rolloff: float = 0.85
    n_mfcc: int = 13
    n_mels: int = 26

    def validate(self):
        if self.frame_len_s <= 0 or self.hop_s <= 0:
            raise DataError("frame length and hop must be positive")
        if not 0 < self.rolloff < 1:
            raise DataError("rolloff fraction must lie in (0, 1)")
        if not 1 <= self.n_mfcc <= self.n_mels:
            raise DataError("need 1 <= n_mfcc <= n_mels")

    @property
    def llds(self) -> tuple[str, ...]:
        return SPECTRAL_LLDS + tuple(f"mfcc{i}" for i in range(self.n_mfcc))

    def feature_names(self) -> list[str]:
        return [f"{lld}_{fn}" for lld in self.llds for fn in FUNCTIONALS]

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def frame_signal(x, frame_len: int, hop: int) -> np.ndarray:
    n_frames = 1 + (x.size - frame_len) // hop
    idx = np.arange(frame_len)[None, :] + hop * np.arange(n_frames)[:, None]
    return x[idx]


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int, n_fft: int, fs: int) -> np.ndarray:
    """Triangular filters evenly spaced on the mel scale from 0 to fs/2."""
    freqs = np.fft.rfftfreq(n_fft, 1.0 / fs)
    edges = mel_to_hz(np.linspace(0.0, hz_to_mel(fs / 2.0), n_mels + 2))
    fb = np.zeros((n_mels, freqs.size))
    for m in range(n_mels):
        lo, mid, hi = edges[m], edges[m + 1], edges[m + 2]
        up = (freqs - lo) / (mid - lo)
        down = (hi - freqs) / (hi - mid)
        fb[m] = np.maximum(0.0, np.minimum(up, down))
    return fb


def dct2_matrix(n_out: int, n_in: int) -> np.ndarray:
    """Orthonormal DCT-II basis, rows are output coefficients."""
    k = np.arange(n_out)[:, None]
    n = np.arange(n_in)[None, :]
    basis = np.cos(np.pi * k * (2 * n + 1) / (2 * n_in)) * np.sqrt(2.0 / n_in)
    basis[0] /= np.sqrt(2.0)
    return basis


def frame_llds(x, fs: int, cfg: AcousticConfig = AcousticConfig()) -> np.ndarray:
    """LLD matrix of shape (n_frames, len(cfg.llds))."""
    cfg.validate()
    x = np.asarray(x, dtype=np.float64)
    frame_len = int(round(cfg.frame_len_s * fs))
    hop = max(1, int(round(cfg.hop_s * fs)))
    if x.size < frame_len or frame_len < 2:
        raise DataError(f"signal of {x.size} samples is shorter than one {frame_len}-sample frame")
    frames = frame_signal(x, frame_len, hop)
    n_fft = 1 << (frame_len - 1).bit_length()
    mag = np.abs(np.fft.rfft(frames * np.hanning(frame_len), n_fft, axis=1))
    power = mag ** 2
    freqs = np.fft.rfftfreq(n_fft, 1.0 / fs)

    rms = np.sqrt(np.mean(frames ** 2, axis=1))
    zcr = np.mean(frames[:, 1:] * frames[:, :-1] < 0, axis=1)

    msum = mag.sum(axis=1)
    live = msum > EPS
    safe = np.where(live, msum, 1.0)
    centroid = np.where(live, mag @ freqs / safe, 0.0)

    cum = np.cumsum(power, axis=1)
    total = cum[:, -1]
    roll_idx = np.argmax(cum >= cfg.rolloff * total[:, None], axis=1)
    rolloff = np.where(total > EPS, freqs[roll_idx], 0.0)

    norm_mag = mag / safe[:, None]
    flux = np.zeros(frames.shape[0])
    flux[1:] = np.sqrt(np.sum(np.diff(norm_mag, axis=0) ** 2, axis=1))

    psafe = np.where(total > EPS, total, 1.0)
    pnorm = power / psafe[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = -np.sum(np.where(pnorm > 0, pnorm * np.log2(pnorm), 0.0), axis=1)
    entropy = np.where(total > EPS, ent / np.log2(power.shape[1]), 0.0)

    geo = np.exp(np.mean(np.log(power + EPS), axis=1))
    arith = np.mean(power, axis=1)
    flatness = np.where(total > EPS, geo / np.maximum(arith, EPS), 0.0)

    mel = power @ mel_filterbank(cfg.n_mels, n_fft, fs).T
    mfcc = np.log(mel + EPS) @ dct2_matrix(cfg.n_mfcc, cfg.n_mels).T

    return np.column_stack([rms, zcr, centroid, rolloff, flux, entropy, flatness, mfcc])


def functionals(v) -> np.ndarray:
    """The 11 summary statistics of one LLD contour, in ``FUNCTIONALS`` order."""
    v = np.asarray(v, dtype=np.float64)
    n = v.size
    mean = v.mean()
    dev = v - mean
    m2 = np.mean(dev ** 2)
    if m2 > EPS ** 2:
        skew = np.mean(dev ** 3) / m2 ** 1.5
        kurt = np.mean(dev ** 4) / m2 ** 2 - 3.0
    else:
        skew = kurt = 0.0
    if n > 1:
        t = np.arange(n) - (n - 1) / 2.0
        slope = np.dot(t, v) / np.dot(t, t)
    else:
        slope = 0.0
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    lo, hi = v.min(), v.max()
    return np.array([mean, np.sqrt(m2), lo, hi, hi - lo, med, q1, q3, skew, kurt, slope])


def acoustic_features(x, fs: int, cfg: AcousticConfig = AcousticConfig()) -> np.ndarray:
    llds = frame_llds(x, fs, cfg)
    return np.concatenate([functionals(llds[:, j]) for j in range(llds.shape[1])])
