"""Handover scenario engine.

Runs a receiver through sequences of live-sky reception, blockage, and
simulator coverage, producing position fixes and error statistics. The
moving parts come from the other modules: the composed transmit-clock
error decides the receiver's reacquisition time and, through satellite
motion, the fix bias inside a coverage; the solver turns noisy
pseudoranges into fixes; the placement layout decides where signal
exists along a path.

Comparisons between clock configurations are paired: random draws that do
not depend on the configuration (sky plot, pseudorange noise, the delay
process, the sync run of a given server type) come from streams keyed
only by seed and role, so two configurations under the same seed differ
exactly where the configuration differs. Pseudorange noise is indexed by
step within a window, not by fix count, which keeps the pairing aligned
even when reacquisition delays the first fix.

Everything is deterministic given (scenario, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import receiver as rcv
from .calibration import (
    DEFAULT_SAMPLE_COUNT,
    SimDelayModel,
    apply_correction,
    calibrate,
    measure_sim_delay,
    true_delay_series,
)
from .ntp import default_topology, run_disciplined_sync
from .placement import SpeedProfile
from .rng import derive_seed, stream
from .solver import SatGeometry, random_sky_geometry, solve_position
from .timebase import (
    ClockErrorChain,
    ErrorBudget,
    DEFAULT_BUDGET,
    TimeOffset,
    compose_clock_error,
    within_budget,
)

DEFAULT_DT_S = rcv.DEFAULT_DT_S
DEFAULT_PR_NOISE_M = 2.0
DEFAULT_N_SATS = 8

# Open-sky consumer receivers average a few meters of horizontal error;
# the live-sky noise model is calibrated so its mean error matches this.
LIVE_SKY_MEAN_ERROR_M = 2.8
LIVE_SKY_SIGMA_M = LIVE_SKY_MEAN_ERROR_M * math.sqrt(2.0 / math.pi)

NTP_WARMUP_S = 640.0
REF_ERROR_BOUND_S = 200e-9

DEFAULT_DELAY_MODEL = SimDelayModel(
    mean_delay=TimeOffset.from_millis(30.0),
    wander_sigma=TimeOffset.from_millis(0.02),
    noise_sigma=TimeOffset.from_millis(0.5),
)


class EmptyFixSet(ValueError):
    """Statistics need at least one fix."""


# ---------------------------------------------------------------- statistics


@dataclass(frozen=True)
class ErrorStats:
    """Horizontal error statistics over a fix set.

    ``stddev_m`` is the population deviation, which closes the identity
    rms^2 = avg^2 + stddev^2 exactly; the sample deviation is reported
    alongside. ``p95_m`` uses the nearest-rank convention.
    """

    count: int
    avg_m: float
    stddev_m: float
    stddev_sample_m: float
    rms_m: float
    p95_m: float
    max_m: float

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "avg_m": self.avg_m,
            "stddev_m": self.stddev_m,
            "stddev_sample_m": self.stddev_sample_m,
            "rms_m": self.rms_m,
            "p95_m": self.p95_m,
            "max_m": self.max_m,
        }


def nearest_rank_p95(errors: Sequence[float]) -> float:
    """95th percentile by nearest rank: the ceil(0.95 n)-th smallest value."""
    if len(errors) == 0:
        raise EmptyFixSet("p95 of an empty error set")
    ordered = sorted(errors)
    rank = math.ceil(0.95 * len(ordered))
    return float(ordered[rank - 1])


def compute_error_stats(errors: Sequence[float] | np.ndarray) -> ErrorStats:
    errors = np.asarray(errors, dtype=float)
    if errors.size == 0:
        raise EmptyFixSet("statistics of an empty error set")
    avg = float(errors.mean())
    mean_sq = float((errors**2).mean())
    var_pop = max(mean_sq - avg * avg, 0.0)
    std_pop = math.sqrt(var_pop)
    n = errors.size
    std_sample = math.sqrt(var_pop * n / (n - 1)) if n > 1 else 0.0
    return ErrorStats(
        count=n,
        avg_m=avg,
        stddev_m=std_pop,
        stddev_sample_m=std_sample,
        rms_m=math.sqrt(mean_sq),
        p95_m=nearest_rank_p95(errors.tolist()),
        max_m=float(errors.max()),
    )


def horizontal_error(position: np.ndarray, intended: np.ndarray) -> float:
    d = np.asarray(position, dtype=float)[:2] - np.asarray(intended, dtype=float)[:2]
    return float(np.linalg.norm(d))


# ---------------------------------------------------------- clock pipelines


@dataclass(frozen=True)
class ClockConfig:
    """Which sync path feeds a simulator and whether its delay is calibrated."""

    server_type: str
    calibrated: bool

    def __post_init__(self) -> None:
        if self.server_type not in ("public", "private"):
            raise ValueError(f"server_type must be public or private, got {self.server_type!r}")

    @property
    def label(self) -> str:
        return f"{self.server_type}/{'calibrated' if self.calibrated else 'raw'}"


PUBLIC_RAW = ClockConfig("public", False)
PUBLIC_CALIBRATED = ClockConfig("public", True)
PRIVATE_RAW = ClockConfig("private", False)
PRIVATE_CALIBRATED = ClockConfig("private", True)

ALL_CLOCK_CONFIGS = (PUBLIC_RAW, PUBLIC_CALIBRATED, PRIVATE_RAW, PRIVATE_CALIBRATED)

CLOCK_CONFIGS_BY_LABEL = {c.label: c for c in ALL_CLOCK_CONFIGS}


@dataclass(frozen=True)
class ClockDraw:
    """One realized transmit-clock error with its composition."""

    chain: ClockErrorChain
    error: TimeOffset
    ntp_bound_s: float
    within_budget: bool

    def to_dict(self) -> dict:
        return {
            "sim_delay_ms": self.chain.sim_delay.millis,
            "ntp_error_ms": self.chain.ntp_error.millis,
            "ref_error_ms": self.chain.ref_error.millis,
            "composed_ms": self.error.millis,
            "ntp_bound_ms": self.ntp_bound_s * 1e3,
            "within_budget": self.within_budget,
        }


def draw_clock(
    seed: int,
    scope: str,
    coverage: int,
    config: ClockConfig,
    delay_model: SimDelayModel = DEFAULT_DELAY_MODEL,
    budget: ErrorBudget = DEFAULT_BUDGET,
    ntp_warmup_s: float = NTP_WARMUP_S,
) -> ClockDraw:
    """Realize the clock-error chain of one simulator host.

    The sync run depends on the server type but not on the calibration
    flag, and the delay process depends on neither, so raw and calibrated
    variants of the same seed share their underlying randomness.
    """
    sync = run_disciplined_sync(
        default_topology("wireless", config.server_type),
        ntp_warmup_s,
        derive_seed(seed, scope, "ntp", config.server_type, coverage),
    )
    delay_rng = stream(seed, scope, "simdelay", coverage)
    true_delay = TimeOffset.from_seconds(
        float(true_delay_series(delay_model, DEFAULT_SAMPLE_COUNT, delay_rng)[-1])
    )
    ref_rng = stream(seed, scope, "ref", coverage)
    ref_error = TimeOffset.from_seconds(ref_rng.uniform(-REF_ERROR_BOUND_S, REF_ERROR_BOUND_S))

    chain = ClockErrorChain(sim_delay=true_delay, ntp_error=sync.final.offset_truth, ref_error=ref_error)
    if config.calibrated:
        meas_rng = stream(seed, scope, "calmeas", coverage)
        result = calibrate(measure_sim_delay(delay_model, DEFAULT_SAMPLE_COUNT, meas_rng))
        chain = apply_correction(chain, result)
    error = compose_clock_error(chain)
    return ClockDraw(
        chain=chain,
        error=error,
        ntp_bound_s=sync.final.estimated_max_error_s,
        within_budget=within_budget(error, budget),
    )


# ------------------------------------------------------------------- results


@dataclass(frozen=True)
class Fix:
    t_s: float
    position: np.ndarray
    clock_bias_s: float
    source: str
    coverage: int | None


@dataclass(frozen=True)
class TransitionRow:
    t_s: float
    mode: str
    signal: bool
    offset_ms: float
    coverage: int | None


@dataclass(frozen=True)
class ScenarioResult:
    fixes: tuple[Fix, ...]
    coverage_stats: dict[int, ErrorStats]
    handover_success: dict[int, bool]
    first_fix_latency_s: dict[int, float | None]
    overall: ErrorStats | None
    clock_draws: dict[int, ClockDraw]
    transitions: tuple[TransitionRow, ...]

    def to_dict(self) -> dict:
        return {
            "fix_count": len(self.fixes),
            "coverage_stats": {str(k): v.to_dict() for k, v in self.coverage_stats.items()},
            "handover_success": {str(k): v for k, v in self.handover_success.items()},
            "first_fix_latency_s": {str(k): v for k, v in self.first_fix_latency_s.items()},
            "overall": self.overall.to_dict() if self.overall else None,
            "clock": {str(k): v.to_dict() for k, v in self.clock_draws.items()},
        }


def _finalize(
    fixes: list[Fix],
    transitions: list[TransitionRow],
    intended_by_coverage: dict[int, np.ndarray],
    entry_times: dict[int, float],
    clock_draws: dict[int, ClockDraw],
) -> ScenarioResult:
    coverage_stats: dict[int, ErrorStats] = {}
    handover: dict[int, bool] = {}
    latency: dict[int, float | None] = {}
    all_errors: list[float] = []
    for k, intended in intended_by_coverage.items():
        errors = [horizontal_error(f.position, intended) for f in fixes if f.coverage == k]
        handover[k] = bool(errors)
        if errors:
            coverage_stats[k] = compute_error_stats(errors)
            all_errors.extend(errors)
            first_t = min(f.t_s for f in fixes if f.coverage == k)
            latency[k] = first_t - entry_times[k] if k in entry_times else None
        else:
            latency[k] = None
    overall = compute_error_stats(all_errors) if all_errors else None
    return ScenarioResult(
        fixes=tuple(fixes),
        coverage_stats=coverage_stats,
        handover_success=handover,
        first_fix_latency_s=latency,
        overall=overall,
        clock_draws=clock_draws,
        transitions=tuple(transitions),
    )


class _TransitionLog:
    def __init__(self) -> None:
        self.rows: list[TransitionRow] = []
        self._last_mode: rcv.Mode | None = None

    def observe(
        self, t_s: float, state: rcv.ReceiverState, signal: bool, offset: TimeOffset, coverage: int | None
    ) -> None:
        if state.mode is not self._last_mode:
            self.rows.append(TransitionRow(t_s, state.mode.value, signal, offset.millis, coverage))
            self._last_mode = state.mode


def _fix_stride(profile: rcv.ReceiverProfile, dt_s: float) -> int:
    return max(1, round(1.0 / (profile.pos_rate_hz * dt_s)))


# ------------------------------------------------------------ static handover


@dataclass(frozen=True)
class StaticHandoverParams:
    live_s: float = 30.0
    blocked_s: float = 30.0
    sim_s: float = 20.0
    pr_noise_m: float = DEFAULT_PR_NOISE_M
    n_sats: int = DEFAULT_N_SATS
    dt_s: float = DEFAULT_DT_S


def run_static_handover(
    config: ClockConfig,
    profile: rcv.ReceiverProfile = rcv.DEDICATED,
    seed: int = 0,
    params: StaticHandoverParams = StaticHandoverParams(),
    delay_model: SimDelayModel = DEFAULT_DELAY_MODEL,
) -> ScenarioResult:
    """Live-sky reception, full blockage, then one simulator coverage.

    The receiver starts tracking live sky at a fixed position. After the
    blockage it reacquires the simulated signal, whose clock error is
    drawn through the configured pipeline, and the fixes over the
    simulator window form the reported statistics (coverage index 0).
    """
    dt = params.dt_s
    draw = draw_clock(seed, "static", 0, config, delay_model)
    eps = draw.error
    sky = random_sky_geometry(stream(seed, "static", "sky"), n_sats=params.n_sats)
    intended = np.zeros(3)
    base_pr = np.linalg.norm(sky.advanced(eps).positions - intended, axis=1)

    live_steps = round(params.live_s / dt)
    blocked_steps = round(params.blocked_s / dt)
    sim_steps = round(params.sim_s / dt)
    pr_noise = stream(seed, "static", "prnoise").normal(0.0, params.pr_noise_m, (sim_steps, params.n_sats))
    live_noise = stream(seed, "static", "live").normal(0.0, LIVE_SKY_SIGMA_M, (live_steps, 2))

    stride = _fix_stride(profile, dt)
    state = rcv.ReceiverState.tracking()
    log = _TransitionLog()
    fixes: list[Fix] = []
    t = 0.0

    for i in range(live_steps):
        t += dt
        state = rcv.step(state, profile, True, TimeOffset.zero(), dt)
        log.observe(t, state, True, TimeOffset.zero(), None)
        if state.mode is rcv.Mode.TRACKING and i % stride == 0:
            pos = np.array([live_noise[i, 0], live_noise[i, 1], 0.0])
            fixes.append(Fix(t, pos, 0.0, "live_sky", None))
            state = rcv.with_fix(state, t)

    for _ in range(blocked_steps):
        t += dt
        state = rcv.step(state, profile, False, eps, dt)
        log.observe(t, state, False, eps, None)

    entry_t = t
    for i in range(sim_steps):
        t += dt
        state = rcv.step(state, profile, True, eps, dt)
        log.observe(t, state, True, eps, 0)
        if state.mode is rcv.Mode.TRACKING and i % stride == 0:
            solution = solve_position(base_pr + pr_noise[i], sky, initial_guess=intended)
            fixes.append(Fix(t, solution.position, solution.clock_bias.seconds, "simulator", 0))
            state = rcv.with_fix(state, t)

    return _finalize(fixes, log.rows, {0: intended}, {0: entry_t}, {0: draw})


@dataclass(frozen=True)
class MatrixCell:
    label: str
    per_trial_p95_m: tuple[float, ...]
    per_trial_avg_m: tuple[float, ...]
    median_p95_m: float
    median_avg_m: float
    max_m: float

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "median_p95_m": self.median_p95_m,
            "median_avg_m": self.median_avg_m,
            "max_m": self.max_m,
            "per_trial_p95_m": list(self.per_trial_p95_m),
        }


@dataclass(frozen=True)
class HandoverMatrixResult:
    cells: tuple[MatrixCell, ...]
    trials: int
    ordering_ok_every_trial: bool

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "ordering_ok_every_trial": self.ordering_ok_every_trial,
            "cells": [c.to_dict() for c in self.cells],
        }


def run_static_handover_matrix(
    trials: int = 50,
    seed: int = 0,
    profile: rcv.ReceiverProfile = rcv.DEDICATED,
    params: StaticHandoverParams = StaticHandoverParams(),
    configs: Sequence[ClockConfig] = ALL_CLOCK_CONFIGS,
    delay_model: SimDelayModel = DEFAULT_DELAY_MODEL,
) -> HandoverMatrixResult:
    """All clock configurations over paired trial seeds.

    ``configs`` is expected worst-first; the ordering flag records whether
    every trial kept strictly decreasing p95 along that order.
    """
    p95s: dict[str, list[float]] = {c.label: [] for c in configs}
    avgs: dict[str, list[float]] = {c.label: [] for c in configs}
    maxes: dict[str, float] = {c.label: 0.0 for c in configs}
    ordering_ok = True
    for trial in range(trials):
        trial_seed = derive_seed(seed, "handover_matrix", trial)
        trial_p95 = []
        for config in configs:
            result = run_static_handover(config, profile, trial_seed, params, delay_model)
            stats = result.coverage_stats.get(0)
            if stats is None:
                raise EmptyFixSet(f"no fixes for {config.label} in trial {trial}")
            p95s[config.label].append(stats.p95_m)
            avgs[config.label].append(stats.avg_m)
            maxes[config.label] = max(maxes[config.label], stats.max_m)
            trial_p95.append(stats.p95_m)
        if any(a <= b for a, b in zip(trial_p95, trial_p95[1:])):
            ordering_ok = False

    cells = tuple(
        MatrixCell(
            label=c.label,
            per_trial_p95_m=tuple(p95s[c.label]),
            per_trial_avg_m=tuple(avgs[c.label]),
            median_p95_m=float(np.median(p95s[c.label])),
            median_avg_m=float(np.median(avgs[c.label])),
            max_m=maxes[c.label],
        )
        for c in configs
    )
    return HandoverMatrixResult(cells=cells, trials=trials, ordering_ok_every_trial=ordering_ok)


# --------------------------------------------------------------- offset sweep


@dataclass(frozen=True)
class SweepRow:
    offset_ms: float
    mean_reacq_s: float
    std_reacq_s: float
    mean_error_m: float
    std_error_m: float

    def to_dict(self) -> dict:
        return {
            "offset_ms": self.offset_ms,
            "mean_reacq_s": self.mean_reacq_s,
            "std_reacq_s": self.std_reacq_s,
            "mean_error_m": self.mean_error_m,
            "std_error_m": self.std_error_m,
        }


@dataclass(frozen=True)
class SweepResult:
    receiver: str
    rows: tuple[SweepRow, ...]
    trials: int

    def to_dict(self) -> dict:
        return {
            "receiver": self.receiver,
            "trials": self.trials,
            "rows": [r.to_dict() for r in self.rows],
        }


def default_sweep_offsets() -> list[TimeOffset]:
    return [TimeOffset.from_millis(ms) for ms in range(-250, 251, 50)]


def run_offset_sweep(
    offsets: Sequence[TimeOffset] | None = None,
    profile: rcv.ReceiverProfile = rcv.DEDICATED,
    trials: int = 3,
    seed: int = 0,
    signal_s: float = 60.0,
    blockage_s: float = 60.0,
    post_s: float = 60.0,
    pr_noise_m: float = DEFAULT_PR_NOISE_M,
    n_sats: int = DEFAULT_N_SATS,
    dt_s: float = DEFAULT_DT_S,
) -> SweepResult:
    """Controlled clock-offset sweep.

    Per trial and offset: transmit with zero offset, block, then transmit
    with the offset under test. Reacquisition time is the gap from signal
    restoration to the first fix; position errors cover the fixes of the
    final window. Sky plots and noise are drawn per trial only, so every
    offset within a trial sees identical randomness and rows are directly
    comparable across the grid.
    """
    if offsets is None:
        offsets = default_sweep_offsets()
    dt = dt_s
    stride = _fix_stride(profile, dt)
    pre_steps = round(signal_s / dt)
    blocked_steps = round(blockage_s / dt)
    post_steps = round(post_s / dt)
    intended = np.zeros(3)

    reacq: dict[int, list[float]] = {o.ns: [] for o in offsets}
    errors: dict[int, list[float]] = {o.ns: [] for o in offsets}
    for trial in range(trials):
        trial_seed = derive_seed(seed, "sweep", trial)
        sky = random_sky_geometry(stream(trial_seed, "sweep", "sky"), n_sats=n_sats)
        pr_noise = stream(trial_seed, "sweep", "prnoise").normal(0.0, pr_noise_m, (post_steps, n_sats))

        for offset in offsets:
            base_pr = np.linalg.norm(sky.advanced(offset).positions - intended, axis=1)
            state = rcv.ReceiverState.cold(profile)
            t = 0.0
            for _ in range(pre_steps):
                t += dt
                state = rcv.step(state, profile, True, TimeOffset.zero(), dt)
            for _ in range(blocked_steps):
                t += dt
                state = rcv.step(state, profile, False, offset, dt)
            restore_t = t
            first_fix_t = None
            window_errors = []
            for i in range(post_steps):
                t += dt
                state = rcv.step(state, profile, True, offset, dt)
                if state.mode is rcv.Mode.TRACKING and i % stride == 0:
                    solution = solve_position(base_pr + pr_noise[i], sky, initial_guess=intended)
                    if first_fix_t is None:
                        first_fix_t = t
                    window_errors.append(horizontal_error(solution.position, intended))
            if first_fix_t is None:
                raise EmptyFixSet(f"no reacquisition at offset {offset.millis} ms")
            reacq[offset.ns].append(first_fix_t - restore_t)
            errors[offset.ns].append(float(np.mean(window_errors)))

    rows = tuple(
        SweepRow(
            offset_ms=o.millis,
            mean_reacq_s=float(np.mean(reacq[o.ns])),
            std_reacq_s=float(np.std(reacq[o.ns])),
            mean_error_m=float(np.mean(errors[o.ns])),
            std_error_m=float(np.std(errors[o.ns])),
        )
        for o in offsets
    )
    return SweepResult(receiver=profile.name, rows=rows, trials=trials)


# ---------------------------------------------------------- dynamic traversal


@dataclass(frozen=True)
class TunnelLayout:
    """Coverages along a path with live sky outside the portals."""

    centers_m: tuple[float, ...]
    radius_m: float
    portal_in_m: float
    portal_out_m: float

    def __post_init__(self) -> None:
        if self.radius_m <= 0:
            raise ValueError(f"radius_m must be positive, got {self.radius_m}")
        centers = list(self.centers_m)
        if centers != sorted(centers):
            raise ValueError("coverage centers must be ascending")
        if self.portal_in_m >= self.portal_out_m:
            raise ValueError("portal_in_m must lie before portal_out_m")

    def coverage_at(self, s_m: float) -> int | None:
        for k, center in enumerate(self.centers_m):
            if abs(s_m - center) <= self.radius_m:
                return k
        return None

    def source_at(self, s_m: float) -> tuple[str, int | None]:
        if s_m < self.portal_in_m or s_m > self.portal_out_m:
            return "live_sky", None
        k = self.coverage_at(s_m)
        if k is None:
            return "blocked", None
        return "simulator", k


@dataclass(frozen=True)
class PathScenario:
    """A traversal: path length, speeds over it, layout, receiver, clock."""

    length_m: float
    speeds: SpeedProfile
    layout: TunnelLayout
    profile: rcv.ReceiverProfile = rcv.DEDICATED
    clock: ClockConfig = PRIVATE_CALIBRATED
    pr_noise_m: float = DEFAULT_PR_NOISE_M
    n_sats: int = DEFAULT_N_SATS
    dt_s: float = DEFAULT_DT_S

    def __post_init__(self) -> None:
        if self.length_m <= 0:
            raise ValueError(f"length_m must be positive, got {self.length_m}")


def run_dynamic_traversal(
    scenario: PathScenario,
    seed: int = 0,
    delay_model: SimDelayModel = DEFAULT_DELAY_MODEL,
) -> ScenarioResult:
    """Drive or walk the path once and collect per-coverage statistics.

    Each coverage has its own simulator host, so each gets an independent
    clock draw under the scenario's configuration. Fixes inside a
    coverage are solved against that simulator's intended position, the
    coverage center; fixes are never attributed to a coverage the path
    position is outside of.
    """
    dt = scenario.dt_s
    layout = scenario.layout
    profile = scenario.profile
    stride = _fix_stride(profile, dt)

    # pass 1: integrate the path so noise arrays can be sized up front
    positions = []
    s = 0.0
    while s < scenario.length_m:
        s += scenario.speeds.speed_at(s) * dt
        positions.append(s)
    n_steps = len(positions)

    draws = {
        k: draw_clock(seed, "dynamic", k, scenario.clock, delay_model)
        for k in range(len(layout.centers_m))
    }
    sky = random_sky_geometry(stream(seed, "dynamic", "sky"), n_sats=scenario.n_sats)
    intended = {
        k: np.array([center, 0.0, 0.0]) for k, center in enumerate(layout.centers_m)
    }
    base_pr = {
        k: np.linalg.norm(sky.advanced(draws[k].error).positions - intended[k], axis=1)
        for k in draws
    }
    pr_noise = stream(seed, "dynamic", "prnoise").normal(
        0.0, scenario.pr_noise_m, (n_steps, scenario.n_sats)
    )
    live_noise = stream(seed, "dynamic", "live").normal(0.0, LIVE_SKY_SIGMA_M, (n_steps, 2))

    state = rcv.ReceiverState.tracking()
    log = _TransitionLog()
    fixes: list[Fix] = []
    entry_times: dict[int, float] = {}
    prev_coverage: int | None = None
    t = 0.0

    for i, s in enumerate(positions):
        t += dt
        source, k = layout.source_at(s)
        if k is not None and k != prev_coverage:
            entry_times.setdefault(k, t)
        prev_coverage = k

        if source == "live_sky":
            state = rcv.step(state, profile, True, TimeOffset.zero(), dt)
            log.observe(t, state, True, TimeOffset.zero(), None)
            if state.mode is rcv.Mode.TRACKING and i % stride == 0:
                pos = np.array([s + live_noise[i, 0], live_noise[i, 1], 0.0])
                fixes.append(Fix(t, pos, 0.0, "live_sky", None))
                state = rcv.with_fix(state, t)
        elif source == "blocked":
            state = rcv.step(state, profile, False, TimeOffset.zero(), dt)
            log.observe(t, state, False, TimeOffset.zero(), None)
        else:
            eps = draws[k].error
            state = rcv.step(state, profile, True, eps, dt)
            log.observe(t, state, True, eps, k)
            if state.mode is rcv.Mode.TRACKING and i % stride == 0:
                solution = solve_position(base_pr[k] + pr_noise[i], sky, initial_guess=intended[k])
                fixes.append(Fix(t, solution.position, solution.clock_bias.seconds, "simulator", k))
                state = rcv.with_fix(state, t)

    return _finalize(fixes, log.rows, intended, entry_times, draws)


def default_driving_scenario(clock: ClockConfig = PRIVATE_CALIBRATED) -> PathScenario:
    """Three coverages 500 m apart crossed at 110 km/h with a timing receiver."""
    return PathScenario(
        length_m=1900.0,
        speeds=SpeedProfile.constant(110.0 * 1000.0 / 3600.0),
        layout=TunnelLayout(
            centers_m=(450.0, 950.0, 1450.0),
            radius_m=80.0,
            portal_in_m=200.0,
            portal_out_m=1700.0,
        ),
        profile=rcv.DEDICATED,
        clock=clock,
        pr_noise_m=2.5,
    )


def default_pedestrian_scenario(clock: ClockConfig = PRIVATE_CALIBRATED) -> PathScenario:
    """Walking pace through a tighter layout with a phone-grade receiver.

    Gaps are kept short enough that every inter-coverage blockage stays
    within t_max at 1.4 m/s, so each coverage is entered warm.
    """
    return PathScenario(
        length_m=800.0,
        speeds=SpeedProfile.constant(1.4),
        layout=TunnelLayout(
            centers_m=(165.0, 415.0, 665.0),
            radius_m=80.0,
            portal_in_m=40.0,
            portal_out_m=750.0,
        ),
        profile=rcv.SMARTPHONE,
        clock=clock,
        pr_noise_m=6.0,
    )


@dataclass(frozen=True)
class TraversalCell:
    label: str
    per_trial_avg_m: tuple[float, ...]
    median_avg_m: float
    handover_success_all: bool

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "median_avg_m": self.median_avg_m,
            "handover_success_all": self.handover_success_all,
            "per_trial_avg_m": list(self.per_trial_avg_m),
        }


@dataclass(frozen=True)
class TraversalMatrixResult:
    cells: tuple[TraversalCell, ...]
    trials: int
    ordering_ok_every_trial: bool

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "ordering_ok_every_trial": self.ordering_ok_every_trial,
            "cells": [c.to_dict() for c in self.cells],
        }


def run_traversal_matrix(
    scenario: PathScenario,
    configs: Sequence[ClockConfig] = (PUBLIC_RAW, PRIVATE_RAW, PRIVATE_CALIBRATED),
    trials: int = 5,
    seed: int = 0,
    delay_model: SimDelayModel = DEFAULT_DELAY_MODEL,
) -> TraversalMatrixResult:
    """The traversal under several clock configurations, paired per trial."""
    avgs: dict[str, list[float]] = {c.label: [] for c in configs}
    success: dict[str, bool] = {c.label: True for c in configs}
    ordering_ok = True
    for trial in range(trials):
        trial_seed = derive_seed(seed, "traversal_matrix", trial)
        trial_avgs = []
        for config in configs:
            result = run_dynamic_traversal(replace(scenario, clock=config), trial_seed, delay_model)
            if result.overall is None:
                raise EmptyFixSet(f"no in-coverage fixes for {config.label} in trial {trial}")
            avgs[config.label].append(result.overall.avg_m)
            success[config.label] &= all(result.handover_success.values())
            trial_avgs.append(result.overall.avg_m)
        if any(a <= b for a, b in zip(trial_avgs, trial_avgs[1:])):
            ordering_ok = False
    cells = tuple(
        TraversalCell(
            label=c.label,
            per_trial_avg_m=tuple(avgs[c.label]),
            median_avg_m=float(np.median(avgs[c.label])),
            handover_success_all=success[c.label],
        )
        for c in configs
    )
    return TraversalMatrixResult(cells=cells, trials=trials, ordering_ok_every_trial=ordering_ok)


# ---------------------------------------------------------- outdoor comparison


@dataclass(frozen=True)
class OutdoorComparison:
    """Simulated coverage versus live sky over the same short window."""

    live: ErrorStats
    simulated: ErrorStats
    window_s: float
    threshold_m: float
    fit_for_outdoor_use: bool

    def to_dict(self) -> dict:
        return {
            "live": self.live.to_dict(),
            "simulated": self.simulated.to_dict(),
            "window_s": self.window_s,
            "threshold_m": self.threshold_m,
            "fit_for_outdoor_use": self.fit_for_outdoor_use,
        }


def run_outdoor_comparison(
    seed: int = 0,
    window_s: float = 5.0,
    config: ClockConfig = PRIVATE_CALIBRATED,
    profile: rcv.ReceiverProfile = rcv.DEDICATED,
    pr_noise_m: float = DEFAULT_PR_NOISE_M,
    n_sats: int = DEFAULT_N_SATS,
    dt_s: float = DEFAULT_DT_S,
    threshold_m: float = 8.0,
    delay_model: SimDelayModel = DEFAULT_DELAY_MODEL,
) -> OutdoorComparison:
    """Same reception window under live sky and under a simulator.

    The fitness flag asks whether the simulated average stays an order of
    magnitude under the default coverage radius, i.e. whether simulator
    reception is positionally indistinguishable from open sky at the
    scale the deployment cares about.
    """
    steps = round(window_s / dt_s)
    stride = _fix_stride(profile, dt_s)
    live_noise = stream(seed, "outdoor", "live").normal(0.0, LIVE_SKY_SIGMA_M, (steps, 2))
    live_errors = [
        float(np.linalg.norm(live_noise[i])) for i in range(steps) if i % stride == 0
    ]

    draw = draw_clock(seed, "outdoor", 0, config, delay_model)
    sky = random_sky_geometry(stream(seed, "outdoor", "sky"), n_sats=n_sats)
    intended = np.zeros(3)
    base_pr = np.linalg.norm(sky.advanced(draw.error).positions - intended, axis=1)
    pr_noise = stream(seed, "outdoor", "prnoise").normal(0.0, pr_noise_m, (steps, n_sats))
    sim_errors = []
    for i in range(steps):
        if i % stride == 0:
            solution = solve_position(base_pr + pr_noise[i], sky, initial_guess=intended)
            sim_errors.append(horizontal_error(solution.position, intended))

    live_stats = compute_error_stats(live_errors)
    sim_stats = compute_error_stats(sim_errors)
    return OutdoorComparison(
        live=live_stats,
        simulated=sim_stats,
        window_s=window_s,
        threshold_m=threshold_m,
        fit_for_outdoor_use=sim_stats.avg_m <= threshold_m,
    )
