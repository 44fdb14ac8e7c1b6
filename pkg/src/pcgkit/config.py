"""Run configuration: flat ``section.key=value`` files over built-in defaults."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .acoustic import AcousticConfig
from .errors import ConfigError, DataError
from .experiment import ExperimentConfig
from .features import FeatureConfig
from .preprocess import SELECTIONS, THRESHOLDINGS, DenoisePolicy
from .reduce import PcaPolicy


def _floats(text):
    return tuple(float(v) for v in str(text).split(",") if v.strip())


def _ints(text):
    return tuple(int(v) for v in str(text).split(",") if v.strip())


def _gamma(text):
    t = str(text).strip().lower()
    return "scale" if t == "scale" else float(t)


def _pos(v):
    return v > 0


# key -> (default, parser, check, help)
SCHEMA = {
    "fir.cutoff_hz": (60.0, float, _pos, "high-pass cutoff in Hz"),
    "fir.order": (0, int, lambda v: v >= 0 and v % 2 == 0, "FIR order, even; 0 = 256 scaled to the sample rate"),
    "dwt.wavelet": ("db4", str, lambda v: v.lower().startswith("db"), "mother wavelet (db family)"),
    "dwt.levels": (6, int, lambda v: v >= 1, "decomposition depth"),
    "dwt.selection": ("heursure", str, lambda v: v in SELECTIONS, "threshold selection rule"),
    "dwt.thresholding": ("hard", str, lambda v: v in THRESHOLDINGS, "hard or soft shrinkage"),
    "envelope.window": (100, int, lambda v: v >= 1, "moving-average window (samples)"),
    "peak.height": (0.08, float, lambda v: 0 < v <= 1, "minimum normalized envelope height"),
    "peak.distance": (400, int, lambda v: v >= 1, "minimum peak spacing (samples)"),
    "acoustic.frame_s": (0.025, float, _pos, "analysis frame length (s)"),
    "acoustic.hop_s": (0.010, float, _pos, "frame hop (s)"),
    "acoustic.rolloff": (0.85, float, lambda v: 0 < v < 1, "spectral rolloff fraction"),
    "acoustic.n_mfcc": (13, int, lambda v: v >= 1, "number of MFCCs"),
    "acoustic.n_mels": (26, int, lambda v: v >= 1, "mel filters"),
    "pca.policy": ("count", str, lambda v: v in ("count", "variance"), "retain by component count or variance ratio"),
    "pca.components": (460, int, lambda v: v >= 1, "components kept (capped by rank)"),
    "pca.variance_target": (0.9999, float, lambda v: 0 < v <= 1, "cumulative variance ratio target"),
    "svm.c": (1.0, float, _pos, "SVM box constraint C"),
    "svm.gamma": ("scale", _gamma, lambda v: v == "scale" or v > 0, "RBF gamma or 'scale' = 1/(n_features*Var(X))"),
    "svm.tol": (1e-3, float, _pos, "SMO KKT tolerance"),
    "svm.max_iter": (100_000, int, lambda v: v >= 1, "SMO iteration cap"),
    "mlp.widths": ("512,512,256,256,128,128", _ints, lambda v: len(v) >= 1 and min(v) >= 1, "hidden layer widths"),
    "mlp.dropout": ("0.2,0.5,0.5,0.5,0.5,0.5", _floats, lambda v: all(0 <= r < 1 for r in v), "dropout per hidden layer"),
    "mlp.learning_rate": (1e-3, float, _pos, "Adam learning rate"),
    "mlp.batch_size": (32, int, lambda v: v >= 1, "mini-batch size"),
    "mlp.beta1": (0.9, float, lambda v: 0 <= v < 1, "Adam beta1"),
    "mlp.beta2": (0.999, float, lambda v: 0 <= v < 1, "Adam beta2"),
    "mlp.epsilon": (1e-8, float, _pos, "Adam epsilon"),
    "epochs.exp1": (500, int, lambda v: v >= 1, "DNN epochs for exp1"),
    "epochs.exp2": (50, int, lambda v: v >= 1, "DNN epochs for exp2"),
    "epochs.exp3": (100, int, lambda v: v >= 1, "DNN epochs for exp3"),
    "cv.folds": (5, int, lambda v: v >= 2, "folds for exp2/exp3"),
    "run.seed": (0, int, lambda v: v >= 0, "global random seed"),
    "run.jobs": (1, int, lambda v: v >= 1, "worker processes"),
}


def default(key: str):
    return SCHEMA[key][1](SCHEMA[key][0])


@dataclass
class RunConfig:
    values: dict = field(default_factory=lambda: {k: default(k) for k in SCHEMA})

    def __getitem__(self, key):
        return self.values[key]

    def with_overrides(self, overrides: dict) -> "RunConfig":
        """New config with ``overrides`` (raw strings or typed values) validated and applied."""
        vals = dict(self.values)
        for key, raw in overrides.items():
            if raw is None:
                continue
            vals[key] = parse_value(key, raw)
        cfg = RunConfig(vals)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if len(self["mlp.dropout"]) != len(self["mlp.widths"]):
            raise ConfigError("mlp.dropout needs one rate per entry of mlp.widths")
        if self["acoustic.n_mfcc"] > self["acoustic.n_mels"]:
            raise ConfigError("acoustic.n_mfcc cannot exceed acoustic.n_mels")
        try:
            self.denoise_policy()
            self.acoustic_config().validate()
        except DataError as exc:
            raise ConfigError(str(exc)) from None

    def denoise_policy(self) -> DenoisePolicy:
        return DenoisePolicy(self["dwt.wavelet"], self["dwt.levels"], self["dwt.selection"],
                             self["dwt.thresholding"], self["fir.cutoff_hz"],
                             self["fir.order"] or None)

    def acoustic_config(self) -> AcousticConfig:
        return AcousticConfig(self["acoustic.frame_s"], self["acoustic.hop_s"],
                              self["acoustic.rolloff"], self["acoustic.n_mfcc"],
                              self["acoustic.n_mels"])

    def feature_config(self) -> FeatureConfig:
        return FeatureConfig(self.denoise_policy(), self["envelope.window"], self["peak.height"],
                             self["peak.distance"], self.acoustic_config())

    def pca_policy(self) -> PcaPolicy:
        if self["pca.policy"] == "variance":
            return PcaPolicy(None, self["pca.variance_target"])
        return PcaPolicy(self["pca.components"], None)

    def experiment_config(self) -> ExperimentConfig:
        gamma = self["svm.gamma"]
        return ExperimentConfig(
            folds=self["cv.folds"], pca=self.pca_policy(),
            svm_c=self["svm.c"], svm_gamma=None if gamma == "scale" else gamma,
            svm_tol=self["svm.tol"], svm_max_iter=self["svm.max_iter"],
            hidden=self["mlp.widths"], dropout=self["mlp.dropout"],
            epochs={k: self[f"epochs.{k}"] for k in ("exp1", "exp2", "exp3")},
            batch_size=self["mlp.batch_size"], learning_rate=self["mlp.learning_rate"],
            beta1=self["mlp.beta1"], beta2=self["mlp.beta2"], epsilon=self["mlp.epsilon"],
        )


def parse_value(key: str, raw):
    if key not in SCHEMA:
        raise ConfigError(f"unknown config key {key!r}")
    _, parser, check, _ = SCHEMA[key]
    try:
        value = parser(raw) if isinstance(raw, str) else raw
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r}") from None
    if not check(value):
        raise ConfigError(f"{key}: value {raw!r} out of range ({SCHEMA[key][3]})")
    return value


def parse_config_text(text: str, source: str = "<config>") -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected section.key=value")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown config key {key!r}")
        out[key] = value
    return out


def load_config(path=None) -> RunConfig:
    """Defaults overlaid with the file's values, fully validated."""
    if path is None:
        return RunConfig()
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc})") from None
    return RunConfig().with_overrides(parse_config_text(text, str(path)))
