"""Full per-recording feature vectors and the feature-matrix file format."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .acoustic import AcousticConfig, acoustic_features
from .dataio import AudioSample, DatasetManifest, Record
from .envelope import PEAK_FEATURE_NAMES, envelope, find_peaks, peak_features
from .errors import DataError
from .preprocess import DenoisePolicy, preprocess_pipeline


@dataclass(frozen=True)
class FeatureConfig:
    denoise: DenoisePolicy = field(default_factory=DenoisePolicy)
    envelope_window: int = 100
    peak_height: float = 0.08
    peak_distance: int = 400
    acoustic: AcousticConfig = field(default_factory=AcousticConfig)

    def feature_names(self) -> list[str]:
        return self.acoustic.feature_names() + list(PEAK_FEATURE_NAMES)

    def digest(self) -> str:
        blob = json.dumps(dataclasses.asdict(self), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def signal_peaks(x, fs: int, cfg: FeatureConfig):
    env = envelope(x, cfg.envelope_window, fs)
    return env, find_peaks(env, cfg.peak_height, cfg.peak_distance)


def extract_full_vector(s: AudioSample, cfg: FeatureConfig = FeatureConfig()):
    """Acoustic block followed by the 13 peak features, plus the column names.

    ``s`` is expected to be preprocessed already.
    """
    _, peaks = signal_peaks(s.samples, s.sample_rate_hz, cfg)
    vec = np.concatenate([
        acoustic_features(s.samples, s.sample_rate_hz, cfg.acoustic),
        peak_features(peaks, s.sample_rate_hz),
    ])
    return vec, cfg.feature_names()


@dataclass
class FeatureMatrix:
    ids: list[str]
    labels: list[str]
    patient_ids: list[str]
    X: np.ndarray
    columns: list[str]
    config_digest: str = ""

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64).reshape(len(self.ids), len(self.columns))
        if not (len(self.ids) == len(self.labels) == len(self.patient_ids)):
            raise DataError("feature matrix row metadata lengths differ")
        if len(set(self.ids)) != len(self.ids):
            raise DataError("duplicate ids in feature matrix")

    def rows(self, ids) -> np.ndarray:
        pos = {k: i for i, k in enumerate(self.ids)}
        try:
            return self.X[[pos[i] for i in ids]]
        except KeyError as exc:
            raise DataError(f"no features for record {exc.args[0]}") from None


def write_feature_csv(fm: FeatureMatrix, path) -> None:
    with open(path, "w", newline="") as fh:
        if fm.config_digest:
            fh.write(f"# feature_config={fm.config_digest}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "label", "patient_id", *fm.columns])
        for i, row in enumerate(fm.X):
            label = "" if fm.labels[i] == "unlabeled" else fm.labels[i]
            w.writerow([fm.ids[i], label, fm.patient_ids[i], *(repr(float(v)) for v in row)])


def read_feature_csv(path) -> FeatureMatrix:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: no such file")
    digest = ""
    with open(path, newline="") as fh:
        lines = []
        for line in fh:
            if line.startswith("#"):
                if line.startswith("# feature_config="):
                    digest = line.split("=", 1)[1].strip()
                continue
            lines.append(line)
    reader = csv.reader(lines)
    header = next(reader, None)
    if not header or header[:3] != ["id", "label", "patient_id"]:
        raise DataError(f"{path}: header must start with id,label,patient_id")
    ids, labels, pids, rows = [], [], [], []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(header):
            raise DataError(f"{path}: row {lineno} has {len(row)} fields, expected {len(header)}")
        ids.append(row[0])
        labels.append(row[1] or "unlabeled")
        pids.append(row[2])
        try:
            rows.append([float(v) for v in row[3:]])
        except ValueError as exc:
            raise DataError(f"{path}: row {lineno}: {exc}") from None
    X = np.asarray(rows, dtype=np.float64).reshape(len(ids), len(header) - 3)
    return FeatureMatrix(ids, labels, pids, X, header[3:], digest)


def dump_envelope(s: AudioSample, cfg: FeatureConfig, out_dir) -> Path:
    env, peaks = signal_peaks(s.samples, s.sample_rate_hz, cfg)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = Path(s.id).with_suffix("").as_posix().replace("/", "__") + ".csv"
    is_peak = np.zeros(env.values.size, dtype=int)
    is_peak[peaks.indices] = 1
    with open(out_dir / name, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "envelope", "is_peak"])
        for i, (v, p) in enumerate(zip(env.values, is_peak)):
            w.writerow([i, repr(float(v)), p])
    return out_dir / name


def _record_vector(args):
    manifest, record, cfg, preprocess, dump_dir = args
    s = manifest.load(record)
    if preprocess:
        s = preprocess_pipeline(s, cfg.denoise)
    if dump_dir is not None:
        dump_envelope(s, cfg, dump_dir)
    vec, _ = extract_full_vector(s, cfg)
    return vec


def build_feature_matrix(manifest: DatasetManifest, cfg: FeatureConfig = FeatureConfig(),
                         preprocess: bool = True, jobs: int = 1,
                         dump_dir=None) -> FeatureMatrix:
    """Load, preprocess and featurize every manifest record, in manifest order."""
    tasks = [(manifest, r, cfg, preprocess, dump_dir) for r in manifest.records]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            vectors = list(pool.map(_record_vector, tasks))
    else:
        vectors = [_record_vector(t) for t in tasks]
    records: list[Record] = manifest.records
    names = cfg.feature_names()
    X = np.vstack(vectors) if vectors else np.zeros((0, len(names)))
    return FeatureMatrix(
        [r.path for r in records], [r.label for r in records],
        [r.patient_id for r in records], X, names, cfg.digest(),
    )
