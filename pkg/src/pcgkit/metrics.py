"""PASCAL challenge metrics: per-class precision, heart-problem sensitivity and
specificity, Youden's index, discriminant power and total precision."""

from __future__ import annotations

import math
from decimal import Decimal
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

METRIC_KEYS = ("PN", "PM", "PE", "Sens", "Spec", "Youden", "D", "TPr")
PRECISION_KEYS = {"normal": "PN", "murmur": "PM", "extrasys": "PE"}


@dataclass
class ConfusionMatrix:
    classes: list[str]
    counts: np.ndarray          # counts[true, predicted]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def index(self, label: str) -> int:
        try:
            return self.classes.index(label)
        except ValueError:
            raise DataError(f"class {label!r} not in {self.classes}") from None


def confusion(y_true, y_pred, classes) -> ConfusionMatrix:
    classes = list(classes)
    pos = {c: i for i, c in enumerate(classes)}
    y_true, y_pred = list(y_true), list(y_pred)
    if len(y_true) != len(y_pred):
        raise DataError("true and predicted label sequences differ in length")
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        if t not in pos or p not in pos:
            raise DataError(f"unknown label {t if t not in pos else p!r}")
        counts[pos[t], pos[p]] += 1
    return ConfusionMatrix(classes, counts)


def precision_per_class(cm: ConfusionMatrix) -> tuple[dict[str, float], list[str]]:
    """TP / (TP + FP) per class, plus the classes that were never predicted.

    A never-predicted class has undefined precision; it is reported as 0.
    """
    out, undefined = {}, []
    for i, c in enumerate(cm.classes):
        predicted = int(cm.counts[:, i].sum())
        if predicted == 0:
            out[c] = 0.0
            undefined.append(c)
        else:
            out[c] = float(cm.counts[i, i]) / predicted
    return out, undefined


def heart_problem_sens_spec(cm: ConfusionMatrix, normal: str = "normal"):
    """Sensitivity and specificity after collapsing every non-normal class into
    one positive "heart problem" class.

    Returns ``(sens, spec, flags)``; an undefined value is NaN and named in flags.
    """
    k = cm.index(normal)
    problem = [i for i in range(len(cm.classes)) if i != k]
    c = cm.counts
    tp = int(c[np.ix_(problem, problem)].sum())
    fn = int(c[problem, k].sum())
    tn = int(c[k, k])
    fp = int(c[k, problem].sum())
    flags = []
    if tp + fn:
        sens = tp / (tp + fn)
    else:
        sens = math.nan
        flags.append("sensitivity undefined: no heart-problem samples")
    if tn + fp:
        spec = tn / (tn + fp)
    else:
        spec = math.nan
        flags.append("specificity undefined: no normal samples")
    return sens, spec, flags


def _decimal_sum(values) -> float:
    # summing shortest decimal reprs keeps hand-checkable cases exact (0.54 + 0.77 - 1 == 0.31)
    return float(sum((Decimal(repr(float(v))) for v in values), Decimal(0)))


def youden(sens: float, spec: float) -> float:
    return _decimal_sum([sens, spec, -1.0])


def discriminant_power(sens: float, spec: float) -> float | None:
    """sqrt(3)/pi * (log10 odds(sens) + log10 odds(spec)); None when sens or spec is 0 or 1."""
    if any(math.isnan(v) or v <= 0.0 or v >= 1.0 for v in (sens, spec)):
        return None
    return math.sqrt(3.0) / math.pi * (
        math.log10(sens / (1.0 - sens)) + math.log10(spec / (1.0 - spec))
    )


def total_precision(precisions) -> float:
    vals = precisions.values() if isinstance(precisions, dict) else precisions
    return _decimal_sum(vals)


@dataclass
class MetricsReport:
    pn: float | None
    pm: float | None
    pe: float | None
    sens: float | None
    spec: float | None
    youden: float | None
    dpower: float | None
    total_precision: float
    flags: list[str] = field(default_factory=list)

    def as_row(self) -> dict[str, float | None]:
        return dict(zip(METRIC_KEYS, (self.pn, self.pm, self.pe, self.sens, self.spec,
                                      self.youden, self.dpower, self.total_precision)))


def _defined(v):
    return None if v is None or (isinstance(v, float) and math.isnan(v)) else v


def evaluate(cm: ConfusionMatrix, normal: str = "normal") -> MetricsReport:
    prec, undefined = precision_per_class(cm)
    flags = [f"precision undefined for {c}: never predicted" for c in undefined]
    sens, spec, ss_flags = heart_problem_sens_spec(cm, normal)
    flags += ss_flags
    yi = None if math.isnan(sens) or math.isnan(spec) else youden(sens, spec)
    d = discriminant_power(sens, spec)
    if d is None:
        flags.append("discriminant power undefined")
    return MetricsReport(
        prec.get("normal"), prec.get("murmur"), prec.get("extrasys"),
        _defined(sens), _defined(spec), yi, d, total_precision(prec), flags,
    )


def aggregate(reports: list[MetricsReport]) -> tuple[dict, dict]:
    """Fold mean and population std per metric; a metric undefined in any fold is None."""
    mean, std = {}, {}
    rows = [r.as_row() for r in reports]
    for key in METRIC_KEYS:
        vals = [row[key] for row in rows]
        if not vals or any(v is None for v in vals):
            mean[key] = std[key] = None
        else:
            mean[key] = float(np.mean(vals))
            std[key] = float(np.std(vals))
    return mean, std
