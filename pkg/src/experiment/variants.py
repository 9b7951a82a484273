"""
The six dataset variants compared by the experiment.

    a  baseline            truncate to the regular length
    b  baseline + LSTM     a, extended by the LSTM forecaster
    c  baseline + BrainLM  a, extended by the BrainLM forecaster
    d  replication         replicate to the extended length
    e  replication + LSTM  d, extended by the LSTM forecaster
    f  replication + BrainLM

Forecasters for b/c are trained on windows of regular-length series, those
for e/f on windows of replicated-length series.
"""

import logging
from dataclasses import dataclass
from typing import Mapping

from src.data import Cohort, IcnRecord
from src.errors import DataValidationError, MissingArtifactError
from src.forecast import ForecastModel, Forecaster, extend_cohort
from src.windows import replicate, truncate

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VariantSpec:
    id: str
    construction: str
    base: str
    forecaster: ForecastModel | None = None

    def base_length(self, regular_length: int = 137, extended_length: int = 194) -> int:
        return regular_length if self.base == "truncate" else extended_length

    def expected_length(self, regular_length: int = 137, extended_length: int = 194, steps: int = 4) -> int:
        extra = steps if self.forecaster is not None else 0
        return self.base_length(regular_length, extended_length) + extra


VARIANTS: dict[str, VariantSpec] = {
    "a": VariantSpec("a", "baseline", "truncate"),
    "b": VariantSpec("b", "baseline+lstm", "truncate", ForecastModel.LSTM),
    "c": VariantSpec("c", "baseline+brainlm", "truncate", ForecastModel.BRAINLM),
    "d": VariantSpec("d", "replication", "replicate"),
    "e": VariantSpec("e", "replication+lstm", "replicate", ForecastModel.LSTM),
    "f": VariantSpec("f", "replication+brainlm", "replicate", ForecastModel.BRAINLM),
}


@dataclass(frozen=True, eq=False)
class DatasetVariant:
    """A built variant: every record has exactly ``expected_length`` timestamps."""
    spec: VariantSpec
    cohort: Cohort
    expected_length: int

    @property
    def id(self) -> str:
        return self.spec.id

    def to_dict(self) -> dict:
        return {
            "id": self.spec.id,
            "construction": self.spec.construction,
            "expected_length": self.expected_length,
            "n_subjects": len(self.cohort),
        }


def forecaster_key(kind: ForecastModel | str, base_length: int) -> str:
    return f"{ForecastModel(kind).value}_{base_length}"


def required_forecasters(
    variant_ids,
    regular_length: int = 137,
    extended_length: int = 194,
) -> list[tuple[ForecastModel, int]]:
    """(kind, base length) of every forecaster the given variants need, in a fixed order."""
    needed = set()
    for vid in variant_ids:
        spec = get_variant(vid)
        if spec.forecaster is not None:
            needed.add((spec.forecaster, spec.base_length(regular_length, extended_length)))
    return sorted(needed, key=lambda kb: (kb[1], kb[0].value))


def get_variant(variant_id: str) -> VariantSpec:
    try:
        return VARIANTS[variant_id]
    except KeyError:
        raise ValueError(f"unknown variant '{variant_id}'; expected one of {sorted(VARIANTS)}") from None


def standardize(record: IcnRecord, spec: VariantSpec, regular_length: int = 137, extended_length: int = 194) -> IcnRecord:
    """Bring a record to the variant's base length (truncation or single-pass replication)."""
    if spec.base == "truncate":
        return truncate(record, regular_length)
    if record.length >= extended_length:
        return truncate(record, extended_length)
    return replicate(truncate(record, regular_length), extended_length)


def base_cohort(cohort: Cohort, spec: VariantSpec, regular_length: int = 137, extended_length: int = 194) -> Cohort:
    return cohort.map(lambda r: standardize(r, spec, regular_length, extended_length))


def build_variant(
    cohort: Cohort,
    variant_id: str,
    forecasters: Mapping[str, Forecaster] | None = None,
    seed: int = 0,
    regular_length: int = 137,
    extended_length: int = 194,
    steps: int = 4,
) -> DatasetVariant:
    """
    Construct one dataset variant from a (z-scored) cohort.

    Args:
        cohort: Mixed-length source cohort
        variant_id: One of a-f
        forecasters: Trained forecasters keyed by ``forecaster_key``
        seed: Seed of the BrainLM placeholder timestamps

    Raises:
        MissingArtifactError: the variant needs a forecaster that was not supplied
        DataValidationError: a built record does not have the expected length
    """
    spec = get_variant(variant_id)
    expected = spec.expected_length(regular_length, extended_length, steps)
    built = base_cohort(cohort, spec, regular_length, extended_length)

    if spec.forecaster is not None:
        key = forecaster_key(spec.forecaster, spec.base_length(regular_length, extended_length))
        forecaster = (forecasters or {}).get(key)
        if forecaster is None:
            raise MissingArtifactError(f"forecaster '{key}' for variant {variant_id}", "train-forecaster")
        built = extend_cohort(built, forecaster, steps, seed)

    wrong = [r.subject_id for r in built if r.length != expected]
    if wrong:
        raise DataValidationError(f"variant {variant_id}: {len(wrong)} records not of length {expected} (first {wrong[0]})")
    logger.info(f"Built variant {variant_id} ({spec.construction}): {len(built)} subjects, T={expected}")
    return DatasetVariant(spec, built, expected)
