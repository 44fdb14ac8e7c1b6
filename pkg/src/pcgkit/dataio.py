"""Audio and manifest I/O, label manipulation, and a synthetic PCG generator."""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import wave
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import DataError

LABELS = ("normal", "murmur", "extrasys", "unlabeled")
SPLITS = ("train", "test", "unassigned")
MANIFEST_HEADER = ("path", "label", "patient_id", "split", "noisy")


@dataclass
class AudioSample:
    id: str
    samples: np.ndarray
    sample_rate_hz: int
    patient_id: str = ""
    label: str = "unlabeled"
    noisy: bool = False

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise DataError(f"{self.id}: samples must be a non-empty 1-D sequence")
        if int(self.sample_rate_hz) <= 0:
            raise DataError(f"{self.id}: sample rate must be positive")
        if self.label not in LABELS:
            raise DataError(f"{self.id}: unknown label {self.label!r}")

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    def with_samples(self, samples: np.ndarray) -> "AudioSample":
        return dataclasses.replace(self, samples=np.asarray(samples, dtype=np.float64))


# ---------------------------------------------------------------- WAV

def read_wav(path) -> AudioSample:
    """Decode a mono 8- or 16-bit PCM WAV file.

    16-bit frames are divided by 32768 so values land in [-1, 1); 8-bit
    (unsigned) frames are centred on 128 and divided by 128. Metadata other
    than the sample rate is left at its defaults for the caller to fill.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: no such file")
    try:
        with wave.open(str(path), "rb") as fh:
            n_channels = fh.getnchannels()
            width = fh.getsampwidth()
            rate = fh.getframerate()
            raw = fh.readframes(fh.getnframes())
    except wave.Error as exc:  # raised for non-PCM format tags
        raise DataError(f"{path}: unsupported WAV encoding ({exc})") from exc
    except EOFError as exc:
        raise DataError(f"{path}: truncated WAV file") from exc
    if n_channels != 1:
        raise DataError(f"{path}: unsupported channel count {n_channels}")
    if width == 2:
        x = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    elif width == 1:
        x = (np.frombuffer(raw, dtype=np.uint8).astype(np.float64) - 128.0) / 128.0
    else:
        raise DataError(f"{path}: unsupported bit depth {8 * width}")
    if x.size == 0:
        raise DataError(f"{path}: no audio frames")
    return AudioSample(id=str(path), samples=x, sample_rate_hz=rate)


def write_wav(sample: AudioSample, path) -> None:
    """Write ``sample`` as 16-bit mono PCM.

    Amplitudes are scaled by 32768 and clipped to 32767, which makes
    read/write round trips exact for anything that came out of ``read_wav``.
    """
    x = np.asarray(sample.samples, dtype=np.float64)
    if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > 1.0:
        raise DataError(f"{sample.id}: amplitude out of range [-1, 1]")
    frames = np.clip(np.round(x * 32768.0), -32768, 32767).astype("<i2")
    path = Path(path)
    try:
        with wave.open(str(path), "wb") as fh:
            fh.setnchannels(1)
            fh.setsampwidth(2)
            fh.setframerate(int(sample.sample_rate_hz))
            fh.writeframes(frames.tobytes())
    except OSError as exc:
        raise DataError(f"{path}: cannot write ({exc})") from exc


# ---------------------------------------------------------------- manifest

@dataclass(frozen=True)
class Record:
    path: str
    label: str = "unlabeled"
    patient_id: str = ""
    split: str = "unassigned"
    noisy: bool = False

    @property
    def id(self) -> str:
        return self.path


@dataclass
class DatasetManifest:
    records: list[Record]
    base_dir: Path = field(default_factory=Path)

    def __post_init__(self):
        seen = set()
        for r in self.records:
            if r.path in seen:
                raise DataError(f"duplicate path in manifest: {r.path}")
            seen.add(r.path)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def ids(self) -> list[str]:
        return [r.path for r in self.records]

    def by_id(self) -> dict[str, Record]:
        return {r.path: r for r in self.records}

    def replace(self, records: Iterable[Record]) -> "DatasetManifest":
        return DatasetManifest(list(records), self.base_dir)

    def resolve(self, record: Record) -> Path:
        p = Path(record.path)
        return p if p.is_absolute() else self.base_dir / p

    def load(self, record: Record) -> AudioSample:
        s = read_wav(self.resolve(record))
        return dataclasses.replace(s, id=record.path, patient_id=record.patient_id,
                                   label=record.label, noisy=record.noisy)


def _parse_bool(text: str, where: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "y"):
        return True
    if t in ("", "0", "false", "no", "n"):
        return False
    raise DataError(f"{where}: bad boolean {text!r}")


def load_manifest(path) -> DatasetManifest:
    """Parse a ``path,label,patient_id,split,noisy`` CSV.

    Relative audio paths are resolved against the manifest's directory.
    An empty label means unlabeled, an empty split means unassigned.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: no such file")
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != MANIFEST_HEADER:
            raise DataError(f"{path}: header must be {','.join(MANIFEST_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            where = f"{path}:{lineno}"
            if len(row) != len(MANIFEST_HEADER):
                raise DataError(f"{where}: expected {len(MANIFEST_HEADER)} fields, got {len(row)}")
            p, label, pid, split, noisy = (c.strip() for c in row)
            if not p:
                raise DataError(f"{where}: empty path")
            label = label or "unlabeled"
            if label not in LABELS:
                raise DataError(f"{where}: unknown label {label!r}")
            split = split or "unassigned"
            if split not in SPLITS:
                raise DataError(f"{where}: unknown split tag {split!r}")
            records.append(Record(p, label, pid, split, _parse_bool(noisy, where)))
    return DatasetManifest(records, path.parent)


def write_manifest(m: DatasetManifest, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MANIFEST_HEADER)
        for r in m.records:
            label = "" if r.label == "unlabeled" else r.label
            w.writerow([r.path, label, r.patient_id, r.split, "1" if r.noisy else "0"])


def relabel_extrasys_to_normal(m: DatasetManifest) -> DatasetManifest:
    return m.replace(
        dataclasses.replace(r, label="normal") if r.label == "extrasys" else r
        for r in m.records
    )


def label_unlabeled_by_patient(m: DatasetManifest) -> DatasetManifest:
    """Give each unlabeled record the label shared by its patient's labeled records.

    A patient whose labeled records disagree, or who has none, is an error:
    the one-label-per-patient assumption is surfaced rather than voted away.
    """
    by_patient: dict[str, set[str]] = {}
    for r in m.records:
        if r.label != "unlabeled":
            by_patient.setdefault(r.patient_id, set()).add(r.label)
    out = []
    for r in m.records:
        if r.label == "unlabeled":
            if not r.patient_id:
                raise DataError(f"{r.path}: unlabeled record has no patient id")
            labels = by_patient.get(r.patient_id)
            if not labels:
                raise DataError(f"no labeled record for patient {r.patient_id}")
            if len(labels) > 1:
                raise DataError(f"conflicting labels: {r.patient_id} has {sorted(labels)}")
            r = dataclasses.replace(r, label=next(iter(labels)))
        out.append(r)
    return m.replace(out)


# ---------------------------------------------------------------- synthesis

@dataclass(frozen=True)
class SynthConfig:
    bpm: float = 72.0
    duration_s: float = 10.0
    sample_rate_hz: int = 4000
    murmur: bool = False
    extrasystole: bool = False
    noise_rms: float = 0.0
    seed: int = 0
    # murmur RMS is max(murmur_rms, 3 * noise_rms)
    murmur_rms: float = 0.12

    def validate(self) -> None:
        if not self.bpm > 0:
            raise DataError("bpm must be positive")
        if not self.duration_s > 0:
            raise DataError("duration_s must be positive")
        if int(self.sample_rate_hz) <= 0:
            raise DataError("sample_rate_hz must be positive")
        if self.noise_rms < 0 or self.murmur_rms < 0:
            raise DataError("noise levels must be non-negative")
        if self.duration_s < 60.0 / self.bpm:
            raise DataError("duration shorter than one cardiac cycle")


@dataclass
class SynthOutput:
    sample: AudioSample
    clean: np.ndarray
    events: dict


S1_FREQ_HZ, S1_DUR_S, S1_AMP = 100.0, 0.040, 0.6
S2_FREQ_HZ, S2_DUR_S, S2_AMP = 150.0, 0.030, 0.45
S1_OFFSET = 0.1      # S1 position within its cycle, fraction of the cycle
SYSTOLE_FRAC = 0.3   # S1 -> S2 gap, fraction of the cycle


def _tone(t, centre, freq, dur, amp):
    sigma = dur / 6.0
    return amp * np.exp(-0.5 * ((t - centre) / sigma) ** 2) * np.cos(2 * np.pi * freq * (t - centre))


def _band_noise(rng, n, fs, lo, hi):
    spec = np.fft.rfft(rng.standard_normal(n))
    f = np.fft.rfftfreq(n, 1.0 / fs)
    spec[(f < lo) | (f > hi)] = 0.0
    x = np.fft.irfft(spec, n)
    rms = np.sqrt(np.mean(x ** 2))
    return x / rms if rms > 0 else x


def _taper(m, ramp):
    w = np.ones(m)
    ramp = min(ramp, m // 2)
    if ramp > 0:
        r = 0.5 - 0.5 * np.cos(np.pi * (np.arange(ramp) + 0.5) / ramp)
        w[:ramp] = r
        w[-ramp:] = r[::-1]
    return w


def synthesize(cfg: SynthConfig) -> SynthOutput:
    """Generate a synthetic heart sound together with its ground-truth event log."""
    cfg.validate()
    fs = int(cfg.sample_rate_hz)
    n = int(round(cfg.duration_s * fs))
    t = np.arange(n) / fs
    cycle = 60.0 / cfg.bpm
    n_cycles = int(math.floor(cfg.duration_s * cfg.bpm / 60.0 + 1e-9))
    noise_rng, murmur_rng, extra_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(3)
    )

    clean = np.zeros(n)
    events = []
    murmur_intervals = []
    for k in range(n_cycles):
        s1 = k * cycle + S1_OFFSET * cycle
        s2 = s1 + SYSTOLE_FRAC * cycle
        clean += _tone(t, s1, S1_FREQ_HZ, S1_DUR_S, S1_AMP)
        clean += _tone(t, s2, S2_FREQ_HZ, S2_DUR_S, S2_AMP)
        events.append({"kind": "S1", "time_s": s1, "cycle": k})
        events.append({"kind": "S2", "time_s": s2, "cycle": k})
        if cfg.murmur:
            murmur_intervals.append((s1 + S1_DUR_S / 2, s2 - S2_DUR_S / 2))
    if cfg.extrasystole:
        k = int(extra_rng.integers(n_cycles))
        s1 = k * cycle + S1_OFFSET * cycle
        te = s1 + SYSTOLE_FRAC * cycle + 0.5 * (1.0 - SYSTOLE_FRAC) * cycle
        clean += _tone(t, te, S1_FREQ_HZ, S1_DUR_S, S1_AMP)
        events.append({"kind": "extrasystole", "time_s": te, "cycle": k})
    if cfg.murmur:
        level = max(cfg.murmur_rms, 3.0 * cfg.noise_rms)
        band = _band_noise(murmur_rng, n, fs, 120.0, 400.0)
        for a, b in murmur_intervals:
            inside = np.flatnonzero((t >= a) & (t < b))
            if inside.size < 4:
                continue
            seg = band[inside] * _taper(inside.size, int(0.005 * fs))
            # RMS over the interval pinned to the requested level
            clean[inside] += seg * (level / np.sqrt(np.mean(seg ** 2)))

    x = clean + cfg.noise_rms * noise_rng.standard_normal(n)
    peak = np.max(np.abs(x))
    if peak > 0.99:
        clean *= 0.99 / peak
        x *= 0.99 / peak
    events.sort(key=lambda e: e["time_s"])
    log = {
        "config": dataclasses.asdict(cfg),
        "cycle_s": cycle,
        "events": events,
        "murmur_intervals": [list(iv) for iv in murmur_intervals],
    }
    sample = AudioSample(id=f"synth-{cfg.seed}", samples=x, sample_rate_hz=fs)
    return SynthOutput(sample, clean, log)


def synth_pcg(cfg: SynthConfig) -> AudioSample:
    return synthesize(cfg).sample


def synth_corpus(out_dir, n_normal=15, n_murmur=10, n_extrasys=5, per_patient=3,
                 duration_s=6.0, sample_rate_hz=4000, noise_rms=0.01, seed=0,
                 unlabeled_test=False) -> DatasetManifest:
    """Write a synthetic patient corpus (WAVs plus ``manifest.csv``) under ``out_dir``.

    The last recording of every patient is tagged ``test``, the rest
    ``train``. With ``unlabeled_test`` the test recordings lose their label,
    mimicking the challenge's hidden test set.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    kinds = ["normal"] * n_normal + ["murmur"] * n_murmur + ["extrasys"] * n_extrasys
    records = []
    for p, kind in enumerate(kinds):
        pid = f"P{p:03d}"
        bpm = float(rng.uniform(55.0, 95.0))
        for j in range(per_patient):
            cfg = SynthConfig(
                bpm=round(bpm + float(rng.uniform(-3.0, 3.0)), 3),
                duration_s=duration_s,
                sample_rate_hz=sample_rate_hz,
                murmur=kind == "murmur",
                extrasystole=kind == "extrasys",
                noise_rms=noise_rms,
                seed=int(rng.integers(2**31)),
            )
            out = synthesize(cfg)
            name = f"{pid}_{j}.wav"
            write_wav(out.sample, out_dir / name)
            split = "test" if j == per_patient - 1 else "train"
            label = "unlabeled" if (unlabeled_test and split == "test") else kind
            records.append(Record(name, label, pid, split, False))
    m = DatasetManifest(records, out_dir)
    write_manifest(m, out_dir / "manifest.csv")
    return m


def write_event_sidecar(events: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(events, fh, indent=2, sort_keys=True)
