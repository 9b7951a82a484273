"""
Paired significance tests over per-(seed, fold) scores.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc
from scipy.stats import wilcoxon

from src.errors import DataValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PairedTestResult:
    """Outcome of a paired two-sided test; ``p_value`` is NaN when ``degenerate``."""
    test: str
    statistic: float
    p_value: float
    n: int
    degenerate: bool = False

    @property
    def significant(self) -> bool:
        return not self.degenerate and self.p_value <= 0.05

    def to_dict(self) -> dict:
        return {
            "test": self.test,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "n": self.n,
            "degenerate": self.degenerate,
        }


def _paired_differences(scores_a, scores_b) -> np.ndarray:
    a = np.asarray(scores_a, dtype=np.float64).ravel()
    b = np.asarray(scores_b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise DataValidationError(f"paired test needs equal lengths, got {a.size} and {b.size}")
    if a.size < 2:
        raise DataValidationError(f"paired test needs at least 2 pairs, got {a.size}")
    return a - b


def paired_ttest(scores_a, scores_b) -> PairedTestResult:
    """
    Two-sided paired t-test, df = n - 1.

    The p-value is the t tail probability I_{df/(df+t^2)}(df/2, 1/2) from
    the regularized incomplete beta function. Zero-variance differences
    give ``degenerate=True`` with undefined (NaN) statistic and p-value.
    """
    d = _paired_differences(scores_a, scores_b)
    n = d.size
    sd = d.std(ddof=1)
    if sd == 0.0:
        logger.warning(f"paired t-test: differences have zero variance (n={n}); p undefined")
        return PairedTestResult("ttest", float("nan"), float("nan"), n, degenerate=True)
    df = n - 1
    t = float(d.mean() / (sd / np.sqrt(n)))
    p = float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return PairedTestResult("ttest", t, p, n)


def paired_wilcoxon(scores_a, scores_b) -> PairedTestResult:
    """Wilcoxon signed-rank alternative; all-zero differences are degenerate."""
    d = _paired_differences(scores_a, scores_b)
    if not np.any(d):
        logger.warning(f"Wilcoxon test: all {d.size} differences are zero; p undefined")
        return PairedTestResult("wilcoxon", float("nan"), float("nan"), d.size, degenerate=True)
    result = wilcoxon(d, zero_method="wilcox", alternative="two-sided")
    return PairedTestResult("wilcoxon", float(result.statistic), float(result.pvalue), d.size)


def paired_test(scores_a, scores_b, method: str = "ttest") -> PairedTestResult:
    if method == "ttest":
        return paired_ttest(scores_a, scores_b)
    if method == "wilcoxon":
        return paired_wilcoxon(scores_a, scores_b)
    raise ValueError(f"unknown significance test '{method}'; expected 'ttest' or 'wilcoxon'")
