"""End-to-end experiment protocols and their JSON/CSV reports.

exp1  three classes on the dataset's own train/test split
exp2  extrasys folded into normal, unlabeled recordings labeled by patient,
      stratified k-fold
exp3  exp2's data with patient-grouped (user-independent) k-fold

In every fold the standardizer, PCA and classifier are fitted on the
training ids only; each fitted object records those ids and the runner
refuses to score a fold whose test ids overlap them.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .dataio import DatasetManifest, label_unlabeled_by_patient, relabel_extrasys_to_normal
from .errors import DataError
from .features import FeatureConfig, FeatureMatrix, build_feature_matrix
from .metrics import METRIC_KEYS, aggregate, confusion, evaluate
from .mlp import DROPOUT, EPOCHS, HIDDEN_WIDTHS, TrainConfig, mlp_init, mlp_train
from .reduce import PcaPolicy, fit_pca, fit_standardizer
from .splits import grouped_kfold, split_challenge, stratified_kfold
from .svm import svm_train

KINDS = ("exp1", "exp2", "exp3")
REPORT_VERSION = 1


class LeakageError(AssertionError):
    """A transform or model was fitted on data from the fold it is scored on."""


@dataclass(frozen=True)
class ExperimentConfig:
    folds: int = 5
    pca: PcaPolicy = field(default_factory=PcaPolicy)
    svm_c: float = 1.0
    svm_gamma: float | None = None        # None: 1 / (n_features * Var(X))
    svm_tol: float = 1e-3
    svm_max_iter: int = 100_000
    hidden: tuple[int, ...] = HIDDEN_WIDTHS
    dropout: tuple[float, ...] = DROPOUT
    epochs: dict = field(default_factory=lambda: dict(EPOCHS))
    batch_size: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


class SvmClassifier:
    def __init__(self, cfg: ExperimentConfig, classes, seed: int):
        self.cfg, self.classes, self.seed = cfg, list(classes), seed
        self.model = None

    @property
    def fit_ids(self):
        return self.model.fit_ids

    def fit(self, X, y, ids=()):
        c = self.cfg
        self.model = svm_train(X, np.asarray(y, dtype=object), c.svm_c, c.svm_gamma, c.svm_tol,
                               c.svm_max_iter, self.seed, self.classes, ids)
        return self

    def predict(self, X, ids=()):
        return list(self.model.predict(X))


class MlpClassifier:
    def __init__(self, cfg: ExperimentConfig, classes, seed: int, epochs: int):
        self.cfg, self.classes, self.seed, self.epochs = cfg, list(classes), seed, epochs
        self.model = None

    @property
    def fit_ids(self):
        return self.model.fit_ids

    def fit(self, X, y, ids=()):
        c = self.cfg
        pos = {k: i for i, k in enumerate(self.classes)}
        m = mlp_init(X.shape[1], len(self.classes), self.seed, c.hidden, c.dropout)
        tc = TrainConfig(self.epochs, c.batch_size, c.learning_rate, c.beta1, c.beta2,
                         c.epsilon, self.seed)
        self.model = mlp_train(m, X, [pos[v] for v in y], tc, ids)
        self.model.classes = list(self.classes)
        return self

    def predict(self, X, ids=()):
        return list(self.model.predict(X))


def make_classifier(model: str, kind: str, cfg: ExperimentConfig, classes, seed: int):
    if model == "svm":
        return SvmClassifier(cfg, classes, seed)
    if model == "dnn":
        return MlpClassifier(cfg, classes, seed, int(cfg.epochs[kind]))
    raise DataError(f"unknown model {model!r}; expected svm or dnn")


def prepare_manifest(kind: str, m: DatasetManifest) -> tuple[DatasetManifest, list[str], list[str]]:
    """Apply the protocol's label handling; returns (manifest, classes, notes)."""
    notes = []
    if kind == "exp1":
        kept = [r for r in m.records if r.label != "unlabeled"]
        if not any(r.split == "test" for r in kept):
            raise DataError("exp1: no labeled test records; supply the test-set labels in the manifest")
        if len(kept) != len(m.records):
            notes.append(f"exp1: {len(m.records) - len(kept)} unlabeled record(s) excluded")
        return m.replace(kept), ["normal", "murmur", "extrasys"], notes
    if kind in ("exp2", "exp3"):
        m2 = label_unlabeled_by_patient(relabel_extrasys_to_normal(m))
        return m2, ["normal", "murmur"], notes
    raise DataError(f"unknown experiment kind {kind!r}; expected one of {KINDS}")


def make_plan(kind: str, m: DatasetManifest, k: int, seed: int):
    if kind == "exp1":
        return split_challenge(m)
    if kind == "exp2":
        return stratified_kfold(m, k, seed)
    return grouped_kfold(m, k, seed)


def _assert_no_leakage(fitted, test_ids, fold: int):
    test = set(test_ids)
    for name, obj in fitted:
        overlap = test & set(getattr(obj, "fit_ids", ()))
        if overlap:
            raise LeakageError(f"fold {fold}: {name} was fitted on {len(overlap)} test record(s)")


def run_fold(fold_index, fold, kind, model, classes, fm: FeatureMatrix, labels, cfg, seed,
             classifier_factory=None):
    train_ids, test_ids = list(fold.train_ids), list(fold.test_ids)
    X_train, X_test = fm.rows(train_ids), fm.rows(test_ids)
    y_train = [labels[i] for i in train_ids]
    y_test = [labels[i] for i in test_ids]
    std = fit_standardizer(X_train, ids=train_ids)
    pca = fit_pca(std.transform(X_train), cfg.pca, ids=train_ids)
    Z_train = pca.transform(std.transform(X_train))
    Z_test = pca.transform(std.transform(X_test))
    fold_seed = seed + fold_index
    if classifier_factory is None:
        clf = make_classifier(model, kind, cfg, classes, fold_seed)
    else:
        clf = classifier_factory(classes, fold_seed)
    clf.fit(Z_train, y_train, ids=train_ids)
    _assert_no_leakage([("standardizer", std), ("pca", pca), ("classifier", clf)], test_ids, fold_index)
    pred = clf.predict(Z_test, ids=test_ids)
    cm = confusion(y_test, pred, classes)
    rep = evaluate(cm)
    return {
        "fold": fold_index,
        "n_train": len(train_ids),
        "n_test": len(test_ids),
        "pca_components": pca.n_components,
        "metrics": rep.as_row(),
        "confusion": cm.counts.tolist(),
        "flags": rep.flags,
    }, rep


def _fold_task(args):
    return run_fold(*args)


def run_experiment(kind: str, model: str, m: DatasetManifest, features: FeatureMatrix | None = None,
                   cfg: ExperimentConfig = ExperimentConfig(), seed: int = 0,
                   feature_cfg: FeatureConfig = FeatureConfig(), jobs: int = 1,
                   classifier_factory=None) -> dict:
    """Run one protocol end to end and return the report as a plain dict.

    ``features`` may be precomputed (rows looked up by record id); otherwise
    the manifest's audio is loaded, preprocessed and featurized.
    ``classifier_factory(classes, seed)`` replaces the built-in model, which
    is how oracle or audit classifiers are plugged in.
    """
    if kind not in KINDS:
        raise DataError(f"unknown experiment kind {kind!r}; expected one of {KINDS}")
    m2, classes, notes = prepare_manifest(kind, m)
    if features is None:
        features = build_feature_matrix(m2, feature_cfg, jobs=jobs)
    labels = {r.path: r.label for r in m2.records}
    bad = sorted({v for v in labels.values() if v not in classes})
    if bad:
        raise DataError(f"{kind}: labels {bad} not in {classes}")
    plan = make_plan(kind, m2, cfg.folds, seed)
    notes += plan.warnings
    tasks = [(i, f, kind, model, classes, features, labels, cfg, seed, classifier_factory)
             for i, f in enumerate(plan.folds)]
    if jobs > 1 and len(tasks) > 1 and classifier_factory is None:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_fold_task, tasks))
    else:
        results = [_fold_task(t) for t in tasks]
    fold_rows = [r[0] for r in results]
    mean, std = aggregate([r[1] for r in results])
    flags = [f"fold {row['fold']}: {msg}" for row in fold_rows for msg in row["flags"]]
    return {
        "format": "pcgkit-report",
        "version": REPORT_VERSION,
        "kind": kind,
        "model": model if classifier_factory is None else "custom",
        "seed": seed,
        "split": plan.kind,
        "classes": classes,
        "n_records": len(m2),
        "feature_config": features.config_digest,
        "config": _config_summary(cfg, kind, model),
        "folds": fold_rows,
        "mean": mean,
        "std": std,
        "flags": flags,
        "notes": notes,
    }


def _config_summary(cfg: ExperimentConfig, kind: str, model: str) -> dict:
    d = asdict(cfg)
    d["pca"] = cfg.pca.to_dict()
    d["hidden"] = list(cfg.hidden)
    d["dropout"] = list(cfg.dropout)
    d["epochs"] = int(cfg.epochs[kind]) if model == "dnn" else None
    return d


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2) + "\n"


def load_report(path) -> dict:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != "pcgkit-report":
        raise DataError(f"{path}: not a pcgkit report")
    return doc


def _fmt(v, digits=None):
    if v is None:
        return "N/A"
    return f"{v:.{digits}f}" if digits is not None else repr(float(v))


def report_csv(report: dict) -> str:
    """Header PN,PM,PE,Sens,Spec,Youden,D,TPr and one row of fold means."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRIC_KEYS)
    w.writerow([_fmt(report["mean"][k]) for k in METRIC_KEYS])
    return buf.getvalue()


def report_table(report: dict) -> str:
    """Two-decimal mean (and ±std over folds) per metric, in report row order."""
    lines = [f"{report['kind']} / {report['model']} ({report['split']}, {len(report['folds'])} fold(s))"]
    multi = len(report["folds"]) > 1
    for k in METRIC_KEYS:
        mu, sd = report["mean"][k], report["std"][k]
        if k == "PE" and "extrasys" not in report["classes"]:
            continue
        cell = _fmt(mu, 2)
        if multi and mu is not None:
            cell += f"±{sd:.2f}"
        lines.append(f"  {k:<7}{cell}")
    return "\n".join(lines) + "\n"
