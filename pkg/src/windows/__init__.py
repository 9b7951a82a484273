"""Length standardization and sliding-window segmentation."""
from .windows import (
    WindowBatch,
    truncate,
    replicate,
    n_windows,
    slide,
    slide_cohort,
    tail_mask,
    mask_tail,
    split_windows,
)

__all__ = [
    "WindowBatch",
    "truncate",
    "replicate",
    "n_windows",
    "slide",
    "slide_cohort",
    "tail_mask",
    "mask_tail",
    "split_windows",
]
