"""Self-contained model files: standardizer + PCA + classifier in one JSON document."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .experiment import ExperimentConfig
from .features import FeatureMatrix
from .mlp import MlpModel, TrainConfig, mlp_init, mlp_train
from .reduce import PcaModel, Standardizer, fit_pca, fit_standardizer, model_digest
from .svm import SvmModel, svm_train

FORMAT_VERSION = 1
CLASS_ORDER = ("normal", "murmur", "extrasys")


@dataclass
class ModelBundle:
    kind: str                  # "svm" or "dnn"
    standardizer: Standardizer
    pca: PcaModel
    classifier: SvmModel | MlpModel
    feature_config: str = ""
    columns: list[str] | None = None

    def predict(self, X) -> list[str]:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[1] != self.standardizer.means.size:
            raise DataError(f"dimension mismatch: model expects {self.standardizer.means.size} "
                            f"features, got {X.shape[1]}")
        Z = self.pca.transform(self.standardizer.transform(X))
        return [str(v) for v in self.classifier.predict(Z)]

    def to_dict(self) -> dict:
        pca = self.pca.to_dict()
        return {
            "format": "pcgkit-model",
            "version": FORMAT_VERSION,
            "model": self.kind,
            "feature_config": self.feature_config,
            "pca_digest": model_digest(pca),
            "columns": self.columns,
            "standardizer": self.standardizer.to_dict(),
            "pca": pca,
            "classifier": self.classifier.to_dict(),
        }


def train_bundle(fm: FeatureMatrix, model: str, cfg: ExperimentConfig = ExperimentConfig(),
                 seed: int = 0, epochs: int = 50) -> ModelBundle:
    keep = [i for i, lab in enumerate(fm.labels) if lab != "unlabeled"]
    if len(keep) < 2:
        raise DataError("need at least two labeled rows to train")
    X = fm.X[keep]
    y = [fm.labels[i] for i in keep]
    ids = [fm.ids[i] for i in keep]
    classes = [c for c in CLASS_ORDER if c in y] + sorted({c for c in y} - set(CLASS_ORDER))
    std = fit_standardizer(X, ids)
    pca = fit_pca(std.transform(X), cfg.pca, ids)
    Z = pca.transform(std.transform(X))
    if model == "svm":
        clf = svm_train(Z, np.asarray(y, dtype=object), cfg.svm_c, cfg.svm_gamma, cfg.svm_tol,
                        cfg.svm_max_iter, seed, classes, ids)
    elif model == "dnn":
        pos = {c: i for i, c in enumerate(classes)}
        m = mlp_init(Z.shape[1], len(classes), seed, cfg.hidden, cfg.dropout)
        tc = TrainConfig(epochs, cfg.batch_size, cfg.learning_rate, cfg.beta1, cfg.beta2,
                         cfg.epsilon, seed)
        clf = mlp_train(m, Z, [pos[v] for v in y], tc, ids)
        clf.classes = classes
    else:
        raise DataError(f"unknown model {model!r}; expected svm or dnn")
    return ModelBundle(model, std, pca, clf, fm.config_digest, list(fm.columns))


def save_bundle(b: ModelBundle, path) -> None:
    with open(path, "w") as fh:
        json.dump(b.to_dict(), fh)
        fh.write("\n")


def load_bundle(path) -> ModelBundle:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: cannot read model ({exc})") from None
    if doc.get("format") != "pcgkit-model":
        raise DataError(f"{path}: not a pcgkit model file")
    if doc.get("version") != FORMAT_VERSION:
        raise DataError(f"{path}: unsupported model version {doc.get('version')}")
    pca = PcaModel.from_dict(doc["pca"])
    if doc.get("pca_digest") and model_digest(doc["pca"]) != doc["pca_digest"]:
        raise DataError(f"{path}: PCA block does not match its digest")
    if doc["model"] == "svm":
        clf = SvmModel.from_dict(doc["classifier"])
    elif doc["model"] == "dnn":
        clf = MlpModel.from_dict(doc["classifier"])
    else:
        raise DataError(f"{path}: unknown model kind {doc['model']!r}")
    return ModelBundle(doc["model"], Standardizer.from_dict(doc["standardizer"]), pca, clf,
                       doc.get("feature_config", ""), doc.get("columns"))
