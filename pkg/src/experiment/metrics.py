"""
Ranking metrics.
"""

import numpy as np
from scipy.stats import rankdata

from src.errors import DataValidationError


def auc(scores, labels) -> float:
    """
    Area under the ROC curve as the Mann-Whitney U statistic.

    U is computed from mid-ranks, so tied positive/negative pairs count 0.5,
    and the result equals the all-pairs win rate exactly.

    Raises:
        DataValidationError: lengths differ, labels are not 0/1, or only one class is present
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise DataValidationError(f"auc: {scores.size} scores for {labels.size} labels")
    if not np.isin(labels, (0, 1)).all():
        raise DataValidationError(f"auc: labels must be 0/1, got {sorted(set(labels.tolist()))}")
    positive = labels == 1
    n_pos = int(positive.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataValidationError(f"auc needs both classes, got {n_pos} positive / {n_neg} negative")

    ranks = rankdata(scores, method="average")
    u = ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))
