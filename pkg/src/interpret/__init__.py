"""Perturbation-based per-class network sensitivity of a trained forecaster."""
from .sensitivity import (
    TABLE_COLUMNS,
    ClassSensitivity,
    SensitivityTable,
    batch_sensitivity,
    class_sensitivity,
    delta_percent,
    evaluation_windows,
    sensitivity_table,
    silence_channel,
    window_losses,
)
from .ranking import Comparison, RankedChannel, compare, rank_sensitivities, ranking_frame

__all__ = [
    "TABLE_COLUMNS",
    "ClassSensitivity",
    "SensitivityTable",
    "batch_sensitivity",
    "class_sensitivity",
    "delta_percent",
    "evaluation_windows",
    "sensitivity_table",
    "silence_channel",
    "window_losses",
    "Comparison",
    "RankedChannel",
    "compare",
    "rank_sensitivities",
    "ranking_frame",
]
