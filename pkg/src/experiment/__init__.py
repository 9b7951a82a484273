"""Dataset variants, cross-validation, AUC and significance testing."""
from .metrics import auc
from .stats import PairedTestResult, paired_test, paired_ttest, paired_wilcoxon
from .splits import kfold, round_half_up, stratified_split
from .variants import (
    VARIANTS,
    DatasetVariant,
    VariantSpec,
    base_cohort,
    build_variant,
    forecaster_key,
    get_variant,
    required_forecasters,
)
from .runner import CellResult, ExperimentManifest, MatrixRunner, read_manifest, run_matrix, summarize

__all__ = [
    "auc",
    "PairedTestResult",
    "paired_test",
    "paired_ttest",
    "paired_wilcoxon",
    "kfold",
    "round_half_up",
    "stratified_split",
    "VARIANTS",
    "DatasetVariant",
    "VariantSpec",
    "base_cohort",
    "build_variant",
    "forecaster_key",
    "get_variant",
    "required_forecasters",
    "CellResult",
    "ExperimentManifest",
    "MatrixRunner",
    "read_manifest",
    "run_matrix",
    "summarize",
]
