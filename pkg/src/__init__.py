"""ICN forecasting augmentation: numerics, data, forecasters, classifier, experiment and interpretation."""
