"""
Stratified subject splits: one held-out test set per seed, then k folds.
"""

import math
from decimal import ROUND_HALF_UP, Decimal

import numpy as np
from sklearn.model_selection import StratifiedKFold

from src.data import Cohort, Label
from src.errors import SplitError


def round_half_up(value: float) -> int:
    """Round to nearest, halves away from zero (so 9.5 -> 10, 41.1 -> 41)."""
    return int(Decimal(repr(value)).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def stratified_split(cohort: Cohort, test_fraction: float = 0.10, seed: int = 0) -> tuple[Cohort, Cohort]:
    """
    Hold out ``round_half_up(count * test_fraction)`` subjects of each class.

    Returns:
        (trainval, test)

    Raises:
        SplitError: a class has fewer than ceil(1 / test_fraction) members,
            or its test share would leave no training subjects
    """
    if not 0.0 < test_fraction < 1.0:
        raise SplitError(f"test_fraction must be in (0, 1), got {test_fraction}")
    rng = np.random.default_rng(seed)
    minimum = math.ceil(1.0 / test_fraction)
    test_ids: list[str] = []
    for label in Label:
        members = cohort.by_label(label).subject_ids
        if len(members) < minimum:
            raise SplitError(
                f"class {label.value} has {len(members)} subjects; "
                f"test_fraction {test_fraction} needs at least {minimum}"
            )
        n_test = round_half_up(len(members) * test_fraction)
        if n_test >= len(members):
            raise SplitError(f"class {label.value}: {n_test} of {len(members)} subjects in test leaves none to train")
        order = rng.permutation(len(members))
        test_ids.extend(members[i] for i in order[:n_test])

    test = set(test_ids)
    return cohort.subset(s for s in cohort.subject_ids if s not in test), cohort.subset(test)


def kfold(trainval: Cohort, k: int = 5, seed: int = 0) -> list[tuple[Cohort, Cohort]]:
    """
    Stratified k-fold partition of ``trainval`` into (train, val) pairs.

    Raises:
        SplitError: a class has fewer than ``k`` members
    """
    counts = trainval.class_counts
    small = {label.value: n for label, n in counts.items() if n < k}
    if small:
        raise SplitError(f"{k}-fold split needs at least {k} subjects per class, got {small}")
    splitter = StratifiedKFold(n_splits=k, shuffle=True, random_state=seed)
    ids = np.array(trainval.subject_ids)
    folds = []
    for train_idx, val_idx in splitter.split(ids, trainval.labels):
        folds.append((trainval.subset(ids[train_idx]), trainval.subset(ids[val_idx])))
    return folds
