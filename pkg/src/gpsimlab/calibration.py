"""Measurement and correction of the simulation process delay.

The host takes a roughly constant time to turn a commanded scenario state
into radiated signal. That delay drifts slowly and each measurement of it
carries noise, so it is modeled as mean plus random walk plus Gaussian
measurement noise. Calibration estimates the mean over a long sample run
and subtracts it from the clock-error chain; what remains is walk drift
plus estimation error, far inside the handover budget at the default
settings.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .timebase import NS_PER_MS, ClockErrorChain, TimeOffset

DEFAULT_SAMPLE_COUNT = 1800
DEFAULT_SAMPLE_INTERVAL_S = 1.0

CSV_HEADER = ("timestamp_s", "delay_ms")


class EmptySampleSet(ValueError):
    """Calibration needs at least one delay sample."""


@dataclass(frozen=True)
class SimDelayModel:
    """Delay process: mean, random-walk step scale, measurement noise."""

    mean_delay: TimeOffset
    wander_sigma: TimeOffset
    noise_sigma: TimeOffset = TimeOffset.from_millis(0.5)

    def __post_init__(self) -> None:
        if self.mean_delay.ns < 0:
            raise ValueError(f"mean_delay must be non-negative, got {self.mean_delay.ns} ns")
        if self.wander_sigma.ns < 0 or self.noise_sigma.ns < 0:
            raise ValueError("wander_sigma and noise_sigma must be non-negative")


@dataclass(frozen=True)
class DelayCalibration:
    """Correction plus the spread diagnostics of the sample run."""

    correction: TimeOffset
    sample_stddev: TimeOffset
    residual_bound: TimeOffset
    sample_count: int


def true_delay_series(model: SimDelayModel, count: int, rng: np.random.Generator) -> np.ndarray:
    """Actual process delay over ``count`` steps, seconds, never negative."""
    if count < 1:
        raise ValueError(f"count must be at least 1, got {count}")
    walk = np.cumsum(rng.normal(0.0, model.wander_sigma.seconds, count))
    return np.maximum(model.mean_delay.seconds + walk, 0.0)


def measure_sim_delay(
    model: SimDelayModel,
    count: int = DEFAULT_SAMPLE_COUNT,
    rng: np.random.Generator | None = None,
) -> list[TimeOffset]:
    """Measured delay samples: true process delay plus measurement noise."""
    if rng is None:
        rng = np.random.default_rng()
    true = true_delay_series(model, count, rng)
    measured = np.maximum(true + rng.normal(0.0, model.noise_sigma.seconds, count), 0.0)
    return [TimeOffset.from_seconds(s) for s in measured]


def calibrate(samples: Sequence[TimeOffset]) -> DelayCalibration:
    """Mean correction with unbiased spread and worst-case residual.

    The correction is the exact integer-nanosecond rounding of the sample
    mean, so shifting every sample by a constant shifts the correction by
    exactly that constant.
    """
    if not samples:
        raise EmptySampleSet("cannot calibrate from zero samples")
    ns = [s.ns for s in samples]
    n = len(ns)
    # floor(mean + 1/2): half-up rounding keeps integer shifts exact,
    # which half-even would break at half-nanosecond means
    correction_ns = int((Fraction(sum(ns), n) + Fraction(1, 2)).__floor__())
    if n > 1:
        mean = sum(ns) / n
        stddev_ns = round(float(np.sqrt(sum((v - mean) ** 2 for v in ns) / (n - 1))))
    else:
        stddev_ns = 0
    residual_ns = max(abs(v - correction_ns) for v in ns)
    return DelayCalibration(
        correction=TimeOffset(correction_ns),
        sample_stddev=TimeOffset(stddev_ns),
        residual_bound=TimeOffset(residual_ns),
        sample_count=n,
    )


def apply_correction(chain: ClockErrorChain, calibration: DelayCalibration) -> ClockErrorChain:
    """Chain with the calibrated correction removed from the process delay."""
    return replace(chain, sim_delay=chain.sim_delay - calibration.correction)


def export_samples_csv(
    path: str | Path,
    samples: Sequence[TimeOffset],
    interval_s: float = DEFAULT_SAMPLE_INTERVAL_S,
) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for i, sample in enumerate(samples):
            writer.writerow([repr(i * interval_s), repr(sample.ns / NS_PER_MS)])


def import_samples_csv(path: str | Path) -> list[TimeOffset]:
    """Read delay samples back; raises on a malformed header or values."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise ValueError(f"expected header {','.join(CSV_HEADER)}, got {header}")
        samples = []
        for row in reader:
            if len(row) != 2:
                raise ValueError(f"expected 2 columns, got {row}")
            samples.append(TimeOffset.from_millis(float(row[1])))
    if not samples:
        raise EmptySampleSet(f"no delay samples in {path}")
    return samples
