"""Configuration and artifact bookkeeping."""
from .settings import (
    RunConfig,
    PathsConfig,
    DataConfig,
    WindowConfig,
    LstmConfig,
    BrainLmConfig,
    ForecastTrainConfig,
    ClassifierTrainConfig,
    ExperimentConfig,
    InterpretConfig,
    EnvSettings,
    load_config,
    validate_config,
    config_hash,
    get_env_settings,
)
from .artifacts import ArtifactStore, StageRecord, file_sha256, path_sha256, get_artifact_store

__all__ = [
    "RunConfig",
    "PathsConfig",
    "DataConfig",
    "WindowConfig",
    "LstmConfig",
    "BrainLmConfig",
    "ForecastTrainConfig",
    "ClassifierTrainConfig",
    "ExperimentConfig",
    "InterpretConfig",
    "EnvSettings",
    "load_config",
    "validate_config",
    "config_hash",
    "get_env_settings",
    "ArtifactStore",
    "StageRecord",
    "file_sha256",
    "path_sha256",
    "get_artifact_store",
]
