"""
Run Configuration
Validated pipeline settings loaded from INI files and the environment.

Section names in the INI file match the ``RunConfig`` field names; unknown
sections or keys are rejected. Defaults reproduce the protocol
constants (24-step windows, step 4, batch 32, 500/800 epochs, 5 seeds x 5 folds).
"""

import configparser
import hashlib
import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.errors import ConfigError

logger = logging.getLogger(__name__)

PROJECT_ROOT = Path(__file__).parent.parent.parent
DEFAULT_CONFIG_PATH = PROJECT_ROOT / "configs" / "desk.ini"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class PathsConfig(_Section):
    cohort_dir: str = "artifacts/cohort"
    forecaster_dir: str = "artifacts/forecasters"
    variants_dir: str = "artifacts/variants"
    run_dir: str = "artifacts/run"


class DataConfig(_Section):
    n_cn: int = Field(411, gt=0)
    n_ad: int = Field(95, gt=0)
    t_regular_fraction: float = Field(0.5, ge=0.0, le=1.0)
    noise_std: float = Field(0.3, ge=0.0)
    regular_length: int = Field(137, ge=24)
    extended_length: int = Field(194, ge=24)
    seed: int = 0


class WindowConfig(_Section):
    window: int = Field(24, ge=2)
    step: int = Field(4, ge=1)
    context_len: int = Field(20, ge=1)
    mask_fraction: float = Field(1 / 6, gt=0.0, lt=1.0)

    @property
    def target_len(self) -> int:
        return self.window - self.context_len

    @model_validator(mode="after")
    def _context_fits(self):
        if self.context_len >= self.window:
            raise ValueError(f"context_len {self.context_len} must be < window {self.window}")
        return self


class LstmConfig(_Section):
    hidden: int = Field(50, ge=1)
    forget_bias: float = 1.0


class BrainLmConfig(_Section):
    d_model: int = Field(64, ge=1)
    n_heads: int = Field(4, ge=1)
    n_encoder_layers: int = Field(2, ge=1)
    n_decoder_layers: int = Field(2, ge=1)
    ff_multiplier: int = Field(4, ge=1)
    loss_on: Literal["masked", "all"] = "masked"

    @model_validator(mode="after")
    def _heads_divide(self):
        if self.d_model % self.n_heads:
            raise ValueError(f"d_model {self.d_model} not divisible by n_heads {self.n_heads}")
        return self


class OptimizerFields(_Section):
    lr: float = Field(1e-3, gt=0.0)
    beta1: float = Field(0.9, ge=0.0, lt=1.0)
    beta2: float = Field(0.999, ge=0.0, lt=1.0)
    epsilon: float = Field(1e-8, gt=0.0)
    batch_size: int = Field(32, ge=1)
    log_every: int = Field(50, ge=1)


class ForecastTrainConfig(OptimizerFields):
    epochs: int = Field(500, ge=0)
    train_fraction: float = Field(0.8, gt=0.0, lt=1.0)
    split_by_subject: bool = False
    seed: int = 0


class ClassifierTrainConfig(OptimizerFields):
    epochs: int = Field(800, ge=0)
    hidden: int = Field(64, ge=1)
    n_layers: int = Field(3, ge=1)
    readout: Literal["context", "scores"] = "context"
    forget_bias: float = 1.0
    seed: int = 0


class ExperimentConfig(_Section):
    seeds: list[int] = Field(default_factory=lambda: [0, 1, 2, 3, 4])
    n_folds: int = Field(5, ge=2)
    test_fraction: float = Field(0.10, gt=0.0, lt=1.0)
    variants: list[str] = Field(default_factory=lambda: ["a", "b", "c", "d", "e", "f"])
    reference_variant: str = "d"
    significance_test: Literal["ttest", "wilcoxon"] = "ttest"
    extension_seed: int = 0
    threads: int = Field(1, ge=1)

    @field_validator("seeds", "variants", mode="before")
    @classmethod
    def _split_csv(cls, value):
        if isinstance(value, str):
            return [v.strip() for v in value.split(",") if v.strip()]
        return value

    @model_validator(mode="after")
    def _known_variants(self):
        unknown = set(self.variants) - set("abcdef")
        if unknown:
            raise ValueError(f"unknown variants {sorted(unknown)}; allowed a-f")
        if self.reference_variant not in set("abcdef"):
            raise ValueError(f"unknown reference_variant '{self.reference_variant}'; allowed a-f")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError(f"duplicate seeds in {self.seeds}")
        return self


class InterpretConfig(_Section):
    top_k: int = Field(5, ge=1, le=53)
    eval_split: Literal["all", "holdout"] = "all"
    batch_size: int = Field(256, ge=1)


class RunConfig(_Section):
    """Every tunable of the pipeline; one instance drives one run."""
    paths: PathsConfig = Field(default_factory=PathsConfig)
    data: DataConfig = Field(default_factory=DataConfig)
    windows: WindowConfig = Field(default_factory=WindowConfig)
    lstm: LstmConfig = Field(default_factory=LstmConfig)
    brainlm: BrainLmConfig = Field(default_factory=BrainLmConfig)
    forecast: ForecastTrainConfig = Field(default_factory=ForecastTrainConfig)
    classifier: ClassifierTrainConfig = Field(default_factory=ClassifierTrainConfig)
    experiment: ExperimentConfig = Field(default_factory=ExperimentConfig)
    interpret: InterpretConfig = Field(default_factory=InterpretConfig)

    def to_dict(self) -> dict:
        return self.model_dump(mode="json")

    def with_updates(self, section: str, **values) -> "RunConfig":
        """Copy with some fields of one section replaced (validated)."""
        data = self.to_dict()
        data[section].update(values)
        return validate_config(data)


def validate_config(data: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e}") from None


def load_config(path: str | Path | None = None) -> RunConfig:
    """
    Load and validate an INI config file.

    Args:
        path: INI file; ``None`` falls back to ``ICNF_CONFIG`` and then to
            the shipped desk-scale profile (or pure defaults if absent)

    Raises:
        ConfigError: unreadable file, unknown section/key, or invalid value
    """
    if path is None:
        env_path = get_env_settings().config_path
        path = env_path or (DEFAULT_CONFIG_PATH if DEFAULT_CONFIG_PATH.exists() else None)
    if path is None:
        logger.info("No config file found; using built-in protocol defaults")
        return RunConfig()

    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}") from None
    data = {section: dict(parser.items(section)) for section in parser.sections()}
    config = validate_config(data)
    logger.info(f"Loaded config {path} (hash {config_hash(config)})")
    return config


def config_hash(config: RunConfig) -> str:
    """Short SHA-256 of the canonical JSON dump; thread count does not affect results."""
    data = config.to_dict()
    data["experiment"].pop("threads", None)
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


# ----------------------------------------------------------------------
# Environment
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class EnvSettings:
    """Process-level knobs read from the environment / .env file."""
    log_level: str = "INFO"
    threads: int | None = None
    config_path: str | None = None


_env_settings: EnvSettings | None = None


def get_env_settings() -> EnvSettings:
    """Read ``ICNF_*`` variables once (loading ``.env`` first)."""
    global _env_settings
    if _env_settings is None:
        load_dotenv(PROJECT_ROOT / ".env")
        threads = os.environ.get("ICNF_THREADS")
        _env_settings = EnvSettings(
            log_level=os.environ.get("ICNF_LOG_LEVEL", "INFO").upper(),
            threads=int(threads) if threads else None,
            config_path=os.environ.get("ICNF_CONFIG") or None,
        )
    return _env_settings
