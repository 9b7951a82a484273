"""ICN dataset schema, storage and synthetic cohorts."""
from .schema import (
    N_CHANNELS,
    REAL_SCHEMA_LENGTHS,
    CHANNELS,
    DOMAIN_SIZES,
    ChannelMeta,
    Cohort,
    Domain,
    IcnRecord,
    Label,
    channel_domain,
    zscore,
    zscore_cohort,
)
from .io import load_cohort, save_cohort, encode_series, decode_series
from .synth import synth_cohort, DESIGNATED_CHANNELS

__all__ = [
    "N_CHANNELS",
    "REAL_SCHEMA_LENGTHS",
    "CHANNELS",
    "DOMAIN_SIZES",
    "ChannelMeta",
    "Cohort",
    "Domain",
    "IcnRecord",
    "Label",
    "channel_domain",
    "zscore",
    "zscore_cohort",
    "load_cohort",
    "save_cohort",
    "encode_series",
    "decode_series",
    "synth_cohort",
    "DESIGNATED_CHANNELS",
]
