"""Train/test split plans: the challenge's own split, stratified k-fold, and
patient-grouped (user-independent) k-fold."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .dataio import DatasetManifest
from .errors import DataError


@dataclass(frozen=True)
class Fold:
    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]


@dataclass
class SplitPlan:
    kind: str
    folds: list[Fold]
    seed: int | None = None
    warnings: list[str] = field(default_factory=list)

    def __len__(self):
        return len(self.folds)


def split_challenge(m: DatasetManifest) -> SplitPlan:
    """One fold taken from the manifest's own train/test tags.

    Patients appearing on both sides are allowed (the challenge split is not
    user-independent) but counted in the plan's warnings.
    """
    untagged = [r.path for r in m.records if r.split not in ("train", "test")]
    if untagged:
        raise DataError(f"{len(untagged)} record(s) lack a train/test tag, e.g. {untagged[0]}")
    train = tuple(r.path for r in m.records if r.split == "train")
    test = tuple(r.path for r in m.records if r.split == "test")
    if not train or not test:
        raise DataError("challenge split needs both train and test records")
    warnings = []
    shared = ({r.patient_id for r in m.records if r.split == "train" and r.patient_id}
              & {r.patient_id for r in m.records if r.split == "test" and r.patient_id})
    if shared:
        warnings.append(f"{len(shared)} patient(s) appear in both train and test")
    return SplitPlan("challenge", [Fold(train, test)], None, warnings)


def _folds_from_assignment(ids, assign, k) -> list[Fold]:
    folds = []
    for f in range(k):
        test = tuple(i for i, a in zip(ids, assign) if a == f)
        train = tuple(i for i, a in zip(ids, assign) if a != f)
        folds.append(Fold(train, test))
    return folds


def stratified_kfold(m: DatasetManifest, k: int = 5, seed: int = 0) -> SplitPlan:
    """Shuffle each class, then deal its samples round-robin across folds.

    The dealing position carries over from one class to the next so fold
    sizes stay balanced as well as class proportions.
    """
    if k < 2:
        raise DataError("k must be >= 2")
    rng = np.random.default_rng(seed)
    by_class: dict[str, list[str]] = {}
    for r in m.records:
        by_class.setdefault(r.label, []).append(r.path)
    small = {c: len(v) for c, v in by_class.items() if len(v) < k}
    if small:
        raise DataError(f"class(es) smaller than k={k}: {small}")
    fold_of = {}
    offset = 0
    for c in sorted(by_class):
        members = [by_class[c][i] for i in rng.permutation(len(by_class[c]))]
        for pos, rid in enumerate(members):
            fold_of[rid] = (offset + pos) % k
        offset = (offset + len(members)) % k
    ids = m.ids
    return SplitPlan("stratified_kfold", _folds_from_assignment(ids, [fold_of[i] for i in ids], k), seed)


def greedy_group_assignment(sizes, k: int, strata=None) -> list[int]:
    """Largest group first into the lightest fold (lowest index on ties).

    With ``strata`` (one key per group, e.g. the patient's label) a fold is
    chosen by its load within the group's stratum first and its total load
    second, so classes spread across folds; with a single stratum this is
    the plain size-balancing rule. ``sizes`` must already be in the desired
    tie-breaking order.
    """
    if strata is None:
        strata = [0] * len(sizes)
    order = sorted(range(len(sizes)), key=lambda g: -sizes[g])
    order = sorted(order, key=lambda g: str(strata[g]))
    load = [0] * k
    stratum_load: dict = {}
    assign = [0] * len(sizes)
    for g in order:
        sl = stratum_load.setdefault(strata[g], [0] * k)
        f = min(range(k), key=lambda i: (sl[i], load[i], i))
        assign[g] = f
        load[f] += sizes[g]
        sl[f] += sizes[g]
    return assign


def grouped_kfold(m: DatasetManifest, k: int = 5, seed: int = 0) -> SplitPlan:
    """User-independent folds: every patient's recordings land in a single fold.

    Patients are shuffled with ``seed`` and placed greedily, balancing each
    label's sample count across folds and then the total sample count.
    """
    if k < 2:
        raise DataError("k must be >= 2")
    missing = [r.path for r in m.records if not r.patient_id]
    if missing:
        raise DataError(f"grouped split needs patient ids; missing for {missing[0]}")
    counts = Counter(r.patient_id for r in m.records)
    if len(counts) < k:
        raise DataError(f"only {len(counts)} patient(s) for k={k} grouped folds")
    labels: dict[str, Counter] = {}
    for r in m.records:
        labels.setdefault(r.patient_id, Counter())[r.label] += 1
    # a patient's stratum is its most frequent label (alphabetical on ties)
    stratum = {p: min(c.items(), key=lambda kv: (-kv[1], kv[0]))[0] for p, c in labels.items()}
    rng = np.random.default_rng(seed)
    patients = sorted(counts)
    patients = [patients[i] for i in rng.permutation(len(patients))]
    assign = greedy_group_assignment([counts[p] for p in patients], k,
                                     [stratum[p] for p in patients])
    fold_of = dict(zip(patients, assign))
    ids = m.ids
    pid = {r.path: r.patient_id for r in m.records}
    return SplitPlan("grouped_kfold", _folds_from_assignment(ids, [fold_of[pid[i]] for i in ids], k), seed)
