"""
Synthetic ICN Cohort Generator
Seeded stand-in for access-restricted IC time courses.

Each channel is a sum of three sinusoids (shared frequencies, channel-specific
phases, a per-subject phase shift) plus AR(1) noise. The AD group has its
sinusoid amplitude attenuated on a fixed set of channels and a larger noise
variance, so the classes are separable and longer series carry more evidence.
This construction exists to exercise the pipeline; it models no real data.
"""

import logging

import numpy as np
from scipy import signal

from .schema import N_CHANNELS, Cohort, IcnRecord, Label

logger = logging.getLogger(__name__)

FREQUENCIES = (0.021, 0.047, 0.089)  # cycles per timestamp
AR_COEFFICIENT = 0.5
AD_AMPLITUDE_FACTOR = 0.6
AD_NOISE_VARIANCE_FACTOR = 1.5
DESIGNATED_CHANNELS = (3, 7, 12, 20, 25, 31, 36, 41, 46, 50)


def _ar1_noise(rng: np.random.Generator, n_channels: int, length: int, std: float) -> np.ndarray:
    """Stationary AR(1) noise with innovation std ``std``."""
    innovations = rng.standard_normal((n_channels, length)) * std
    if std == 0.0:
        return innovations
    previous = rng.standard_normal((n_channels, 1)) * std / np.sqrt(1.0 - AR_COEFFICIENT ** 2)
    noise, _ = signal.lfilter([1.0], [1.0, -AR_COEFFICIENT], innovations, axis=1, zi=AR_COEFFICIENT * previous)
    return noise


def synth_record(
    rng: np.random.Generator,
    subject_id: str,
    label: Label,
    length: int,
    channel_phases: np.ndarray,
    noise_std: float = 0.3,
) -> IcnRecord:
    t = np.arange(length, dtype=np.float64)
    shifts = rng.uniform(0.0, 2.0 * np.pi, size=len(FREQUENCIES))
    clean = np.zeros((N_CHANNELS, length))
    for k, freq in enumerate(FREQUENCIES):
        clean += np.sin(2.0 * np.pi * freq * t[None, :] + channel_phases[:, k:k + 1] + shifts[k])

    amplitude = np.ones((N_CHANNELS, 1))
    std = noise_std
    if label is Label.AD:
        amplitude[list(DESIGNATED_CHANNELS)] = AD_AMPLITUDE_FACTOR
        std = noise_std * np.sqrt(AD_NOISE_VARIANCE_FACTOR)

    series = amplitude * clean + _ar1_noise(rng, N_CHANNELS, length, std)
    return IcnRecord(subject_id, label, series)


def synth_cohort(
    n_cn: int,
    n_ad: int,
    t_regular_fraction: float,
    seed: int,
    noise_std: float = 0.3,
    regular_length: int = 137,
    extended_length: int = 194,
) -> Cohort:
    """
    Generate a reproducible two-class cohort.

    Args:
        n_cn: Number of cognitively normal subjects
        n_ad: Number of AD subjects
        t_regular_fraction: Probability a subject gets the regular length
        seed: RNG seed; identical arguments give bit-identical cohorts
        noise_std: AR(1) innovation std for the CN group

    Returns:
        Cohort of raw (not z-scored) records
    """
    if n_cn <= 0 or n_ad <= 0:
        raise ValueError(f"class counts must be positive, got n_cn={n_cn}, n_ad={n_ad}")
    if not 0.0 <= t_regular_fraction <= 1.0:
        raise ValueError(f"t_regular_fraction must be in [0, 1], got {t_regular_fraction}")

    rng = np.random.default_rng(seed)
    channel_phases = rng.uniform(0.0, 2.0 * np.pi, size=(N_CHANNELS, len(FREQUENCIES)))

    records = []
    for label, count in ((Label.CN, n_cn), (Label.AD, n_ad)):
        for i in range(count):
            length = regular_length if rng.random() < t_regular_fraction else extended_length
            records.append(synth_record(rng, f"{label.value}{i:04d}", label, length, channel_phases, noise_std))

    cohort = Cohort(tuple(records))
    logger.info(f"Synthesized cohort seed={seed}: {n_cn} CN / {n_ad} AD, lengths {sorted(set(cohort.lengths))}")
    return cohort
