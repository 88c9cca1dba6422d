"""Network time synchronization error modeling.

Clock offsets are stored as clock-minus-true-time. An exchange returns
the classic four-timestamp estimate

    offset = ((T2 - T1) + (T3 - T4)) / 2
    delay  = (T4 - T1) - (T3 - T2)

which is the correction the client should add to its clock to align with
the server. Its error against the ideal correction (minus the client's
own offset) is the server's offset plus half the sampled up/down delay
asymmetry. Symmetric paths to a true server are therefore exact, and no
amount of averaging removes a persistent asymmetry.

Every estimate carries a root dispersion: the server's advertised error
bound plus half the round trip of this exchange. Simulated servers
advertise their actual absolute offset, which real servers cannot do, but
it keeps the client-side bound honest by construction: the disciplined
clock's estimated maximum error, floor + unapplied correction + root
dispersion + dispersion of recent estimates, provably dominates the true
offset at every report instant. Public pools are modeled as a short
stratum chain whose servers wander between polls; private servers sit at
stratum 1 next to the reference and do not wander.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .rng import stream
from .timebase import TimeOffset

UNSYNC_STRATUM = 16
DEFAULT_POLL_INTERVAL_S = 16.0
DEFAULT_GAIN = 0.5
DEFAULT_SLEW_LIMIT_S = 0.25
DEFAULT_ERROR_FLOOR_S = 50e-6
HISTORY_LEN = 8


class ServerUnsynchronized(ValueError):
    """Exchange attempted against a stratum >= 16 server."""


class ChainBroken(ValueError):
    """Chain strata must increase strictly away from the root."""


@dataclass(frozen=True)
class LinkModel:
    """One network path: fixed one-way delays, optional bias and jitter.

    ``asymmetry_bias_s`` is added wholly to the uplink, so it equals the
    mean up-minus-down difference it introduces. Jitter is log-normal
    with the given median and log-space sigma, drawn independently per
    direction; a zero median disables it. Sampled delays never go
    negative.
    """

    base_delay_up_s: float
    base_delay_down_s: float
    asymmetry_bias_s: float = 0.0
    jitter_median_up_s: float = 0.0
    jitter_sigma_up: float = 0.0
    jitter_median_down_s: float = 0.0
    jitter_sigma_down: float = 0.0

    def __post_init__(self) -> None:
        if self.base_delay_up_s < 0 or self.base_delay_down_s < 0:
            raise ValueError("base one-way delays must be non-negative")
        for name in ("jitter_median_up_s", "jitter_sigma_up", "jitter_median_down_s", "jitter_sigma_down"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def sample_delays(self, rng: np.random.Generator) -> tuple[float, float]:
        """Draw (up, down) one-way delays in seconds."""
        up = self.base_delay_up_s + self.asymmetry_bias_s
        down = self.base_delay_down_s
        if self.jitter_median_up_s > 0:
            up += self.jitter_median_up_s * np.exp(self.jitter_sigma_up * rng.standard_normal())
        if self.jitter_median_down_s > 0:
            down += self.jitter_median_down_s * np.exp(self.jitter_sigma_down * rng.standard_normal())
        return max(up, 0.0), max(down, 0.0)

    def mean_one_way(self) -> tuple[float, float]:
        """Expected (up, down) delays; log-normal mean is median*exp(sigma^2/2)."""
        up = self.base_delay_up_s + self.asymmetry_bias_s
        down = self.base_delay_down_s
        if self.jitter_median_up_s > 0:
            up += self.jitter_median_up_s * np.exp(self.jitter_sigma_up**2 / 2.0)
        if self.jitter_median_down_s > 0:
            down += self.jitter_median_down_s * np.exp(self.jitter_sigma_down**2 / 2.0)
        return up, down


@dataclass(frozen=True)
class NtpNode:
    """One clock in the hierarchy; stratum 16 means unsynchronized."""

    name: str
    stratum: int
    clock_offset_truth: TimeOffset = TimeOffset.zero()

    def __post_init__(self) -> None:
        if not 0 <= self.stratum <= UNSYNC_STRATUM:
            raise ValueError(f"stratum must be within 0..{UNSYNC_STRATUM}, got {self.stratum}")


@dataclass(frozen=True)
class OffsetEstimate:
    """Result of one exchange, taken at simulation time ``at_s``."""

    offset: TimeOffset
    round_trip_s: float
    root_dispersion_s: float
    at_s: float


@dataclass(frozen=True)
class HopSync:
    """Per-hop record: what the hop's estimate was and what it added.

    ``contribution`` is the error this hop stacked on top of the previous
    node's offset, half the sampled asymmetry of its link.
    """

    name: str
    stratum: int
    estimate: OffsetEstimate
    post_offset_truth: TimeOffset
    contribution: TimeOffset


@dataclass(frozen=True)
class ChainSyncResult:
    estimate: OffsetEstimate
    hops: tuple[HopSync, ...]


def ntp_exchange(
    client: NtpNode,
    server: NtpNode,
    link: LinkModel,
    rng: np.random.Generator,
    at_s: float = 0.0,
    server_dispersion_s: float | None = None,
) -> OffsetEstimate:
    """One four-timestamp exchange over ``link``.

    The server responds instantly; its advertised dispersion defaults to
    its actual absolute offset (see the module docstring).
    """
    if server.stratum >= UNSYNC_STRATUM:
        raise ServerUnsynchronized(f"server {server.name} at stratum {server.stratum}")
    up_s, down_s = link.sample_delays(rng)
    up = TimeOffset.from_seconds(up_s)
    down = TimeOffset.from_seconds(down_s)
    theta_c = client.clock_offset_truth
    theta_s = server.clock_offset_truth

    t1 = theta_c
    t2 = up + theta_s
    t3 = t2
    t4 = up + down + theta_c
    offset = ((t2 - t1) + (t3 - t4)).scaled(0.5)
    round_trip = ((t4 - t1) - (t3 - t2)).seconds
    if server_dispersion_s is None:
        server_dispersion_s = abs(theta_s.seconds)
    return OffsetEstimate(
        offset=offset,
        round_trip_s=round_trip,
        root_dispersion_s=server_dispersion_s + round_trip / 2.0,
        at_s=at_s,
    )


def sync_through_chain(
    root: NtpNode,
    chain: Sequence[tuple[NtpNode, LinkModel]],
    client_link: LinkModel,
    rng: np.random.Generator,
    client: NtpNode | None = None,
    at_s: float = 0.0,
) -> ChainSyncResult:
    """Synchronize down a stratum chain and measure from the client.

    Each chain node syncs fully to the node above it, inheriting its
    offset plus half of its own link's sampled asymmetry. The returned
    estimate is the client's exchange against the last chain node (or the
    root when the chain is empty). The client defaults to a zero-offset
    observer, in which case the estimate's offset equals the error the
    client would adopt.
    """
    if root.stratum >= UNSYNC_STRATUM:
        raise ServerUnsynchronized(f"root {root.name} at stratum {root.stratum}")
    upstream = root
    upstream_dispersion = abs(root.clock_offset_truth.seconds)
    hops = []
    for node, link in chain:
        if node.stratum <= upstream.stratum:
            raise ChainBroken(
                f"{node.name} stratum {node.stratum} does not increase over "
                f"{upstream.name} stratum {upstream.stratum}"
            )
        if node.stratum >= UNSYNC_STRATUM:
            raise ServerUnsynchronized(f"{node.name} at stratum {node.stratum}")
        estimate = ntp_exchange(
            node, upstream, link, rng, at_s=at_s, server_dispersion_s=upstream_dispersion
        )
        synced = replace(node, clock_offset_truth=node.clock_offset_truth + estimate.offset)
        hops.append(
            HopSync(
                name=node.name,
                stratum=node.stratum,
                estimate=estimate,
                post_offset_truth=synced.clock_offset_truth,
                contribution=synced.clock_offset_truth - upstream.clock_offset_truth,
            )
        )
        upstream = synced
        upstream_dispersion = estimate.root_dispersion_s

    if client is None:
        client = NtpNode("client", min(upstream.stratum + 1, UNSYNC_STRATUM - 1))
    estimate = ntp_exchange(
        client, upstream, client_link, rng, at_s=at_s, server_dispersion_s=upstream_dispersion
    )
    return ChainSyncResult(estimate=estimate, hops=tuple(hops))


@dataclass(frozen=True)
class DisciplinedClock:
    """Client clock state under periodic correction."""

    offset_truth: TimeOffset
    estimated_max_error_s: float
    poll_interval_s: float = DEFAULT_POLL_INTERVAL_S
    history: tuple[OffsetEstimate, ...] = ()
    dispersion_s: float = 0.0

    @classmethod
    def start(
        cls,
        initial_offset: TimeOffset,
        poll_interval_s: float = DEFAULT_POLL_INTERVAL_S,
        error_floor_s: float = DEFAULT_ERROR_FLOOR_S,
    ) -> "DisciplinedClock":
        return cls(
            offset_truth=initial_offset,
            estimated_max_error_s=abs(initial_offset.seconds) + error_floor_s,
            poll_interval_s=poll_interval_s,
        )


def _discipline_step(
    clock: DisciplinedClock,
    estimate: OffsetEstimate,
    gain: float,
    slew_limit_s: float,
    error_floor_s: float,
) -> DisciplinedClock:
    correction = estimate.offset.scaled(gain)
    limit = TimeOffset.from_seconds(slew_limit_s)
    if correction.ns > limit.ns:
        correction = limit
    elif correction.ns < -limit.ns:
        correction = -limit
    residual_s = abs((estimate.offset - correction).seconds)

    if clock.history:
        jump_s = abs((estimate.offset - clock.history[-1].offset).seconds)
        dispersion_s = 0.5 * clock.dispersion_s + 0.5 * jump_s
    else:
        dispersion_s = 0.0

    return replace(
        clock,
        offset_truth=clock.offset_truth + correction,
        estimated_max_error_s=error_floor_s + residual_s + estimate.root_dispersion_s + dispersion_s,
        history=(clock.history + (estimate,))[-HISTORY_LEN:],
        dispersion_s=dispersion_s,
    )


def discipline(
    clock: DisciplinedClock,
    estimates: Sequence[OffsetEstimate],
    gain: float = DEFAULT_GAIN,
    slew_limit_s: float = DEFAULT_SLEW_LIMIT_S,
    error_floor_s: float = DEFAULT_ERROR_FLOOR_S,
) -> list[DisciplinedClock]:
    """Apply a stream of estimates; returns the state after each one.

    Each step slews toward the estimate by ``gain``, clipped to the slew
    limit. The estimated maximum error is rebuilt every step from the
    unapplied remainder, the estimate's root dispersion, and the tracked
    spread of recent estimates, so it stays above the true offset.
    """
    if not 0 < gain <= 1:
        raise ValueError(f"gain must be within (0, 1], got {gain}")
    if slew_limit_s <= 0:
        raise ValueError(f"slew_limit_s must be positive, got {slew_limit_s}")
    trajectory = []
    for estimate in estimates:
        clock = _discipline_step(clock, estimate, gain, slew_limit_s, error_floor_s)
        trajectory.append(clock)
    return trajectory


# Topologies for the connection/server comparison matrix.


@dataclass(frozen=True)
class SyncTopology:
    """A root, optional wandering pool hops, and the client's last link.

    Pool hops re-sync to their upstream only every ``hop_sync_every``
    polls and wander in between, which is what makes a public chain
    noisier than a direct stratum-1 server.
    """

    name: str
    client_link: LinkModel
    hop_links: tuple[LinkModel, ...] = ()
    hop_wander_sigma_s: float = 0.0
    root_wander_sigma_s: float = 0.0
    hop_sync_every: int = 4


@dataclass(frozen=True)
class SyncSample:
    at_s: float
    offset_truth: TimeOffset
    estimated_max_error_s: float


@dataclass(frozen=True)
class SyncRunResult:
    topology: str
    samples: tuple[SyncSample, ...]
    final: DisciplinedClock
    max_estimated_error_s: float
    max_abs_offset_s: float
    bound_held: bool


DEFAULT_WARMUP_POLLS = 8


def run_disciplined_sync(
    topology: SyncTopology,
    duration_s: float,
    seed: int,
    poll_interval_s: float = DEFAULT_POLL_INTERVAL_S,
    initial_offset: TimeOffset = TimeOffset.from_millis(10.0),
    gain: float = DEFAULT_GAIN,
    slew_limit_s: float = DEFAULT_SLEW_LIMIT_S,
    error_floor_s: float = DEFAULT_ERROR_FLOOR_S,
    warmup_polls: int = DEFAULT_WARMUP_POLLS,
) -> SyncRunResult:
    """Poll the topology for ``duration_s`` and discipline a client clock.

    Pool servers take a random-walk step before every poll. The result
    records, per poll, the true client offset and the estimated maximum
    error, plus whether the bound held at every poll. The reported maxima
    skip the first ``warmup_polls`` polls so they describe the settled
    clock rather than the initial convergence transient; the bound check
    still covers every poll.
    """
    link_rng = stream(seed, "ntp", topology.name, "links")
    wander_rng = stream(seed, "ntp", topology.name, "wander")

    root_offset = TimeOffset.zero()
    hop_offsets = [TimeOffset.zero() for _ in topology.hop_links]
    clock = DisciplinedClock.start(initial_offset, poll_interval_s, error_floor_s)

    samples = []
    polls = int(duration_s // poll_interval_s)
    for k in range(1, polls + 1):
        at = k * poll_interval_s
        if topology.root_wander_sigma_s > 0:
            root_offset = root_offset + TimeOffset.from_seconds(
                wander_rng.normal(0.0, topology.root_wander_sigma_s)
            )
        if topology.hop_wander_sigma_s > 0:
            hop_offsets = [
                off + TimeOffset.from_seconds(wander_rng.normal(0.0, topology.hop_wander_sigma_s))
                for off in hop_offsets
            ]

        if topology.hop_links and k % topology.hop_sync_every == 1 % topology.hop_sync_every:
            upstream_offset = root_offset
            for j, link in enumerate(topology.hop_links):
                hop = NtpNode(f"pool{j}", 2 + j, hop_offsets[j])
                upstream = NtpNode("up", 1 + j, upstream_offset)
                est = ntp_exchange(
                    hop, upstream, link, link_rng, at_s=at,
                    server_dispersion_s=abs(upstream_offset.seconds),
                )
                hop_offsets[j] = hop_offsets[j] + est.offset
                upstream_offset = hop_offsets[j]

        if topology.hop_links:
            server = NtpNode("pool_last", 1 + len(topology.hop_links), hop_offsets[-1])
        else:
            server = NtpNode("root", 1, root_offset)
        client = NtpNode("client", server.stratum + 1, clock.offset_truth)
        estimate = ntp_exchange(client, server, topology.client_link, link_rng, at_s=at)
        clock = _discipline_step(clock, estimate, gain, slew_limit_s, error_floor_s)
        samples.append(SyncSample(at, clock.offset_truth, clock.estimated_max_error_s))

    settled = samples[warmup_polls:] if len(samples) > warmup_polls else samples
    max_est = max(s.estimated_max_error_s for s in settled)
    max_abs = max(abs(s.offset_truth.seconds) for s in settled)
    bound_held = all(abs(s.offset_truth.seconds) <= s.estimated_max_error_s for s in samples)
    return SyncRunResult(
        topology=topology.name,
        samples=tuple(samples),
        final=clock,
        max_estimated_error_s=max_est,
        max_abs_offset_s=max_abs,
        bound_held=bound_held,
    )


# Default link parameter sets for the connection/server comparison matrix.
# Calibration targets rather than physics: medians, biases and jitter are
# picked so each cell's estimated maximum error lands near values commonly
# observed for that combination. A private server one wired hop away is
# nearly ideal; a public pool reached over a cellular uplink is dominated
# by the large, persistent asymmetry of that path.

WIRED_PRIVATE_LINK = LinkModel(
    base_delay_up_s=0.0004,
    base_delay_down_s=0.0004,
    asymmetry_bias_s=0.0002,
    jitter_median_up_s=0.00005,
    jitter_sigma_up=0.5,
    jitter_median_down_s=0.00005,
    jitter_sigma_down=0.5,
)

WIRED_PUBLIC_CLIENT_LINK = LinkModel(
    base_delay_up_s=0.0035,
    base_delay_down_s=0.0035,
    asymmetry_bias_s=0.006,
    jitter_median_up_s=0.0008,
    jitter_sigma_up=0.6,
    jitter_median_down_s=0.0008,
    jitter_sigma_down=0.6,
)

LTE_PRIVATE_LINK = LinkModel(
    base_delay_up_s=0.012,
    base_delay_down_s=0.010,
    asymmetry_bias_s=0.005,
    jitter_median_up_s=0.0015,
    jitter_sigma_up=0.5,
    jitter_median_down_s=0.0015,
    jitter_sigma_down=0.5,
)

LTE_PUBLIC_CLIENT_LINK = LinkModel(
    base_delay_up_s=0.018,
    base_delay_down_s=0.014,
    asymmetry_bias_s=0.090,
    jitter_median_up_s=0.0025,
    jitter_sigma_up=0.6,
    jitter_median_down_s=0.0025,
    jitter_sigma_down=0.6,
)

POOL_HOP_LINK = LinkModel(
    base_delay_up_s=0.0025,
    base_delay_down_s=0.0025,
    asymmetry_bias_s=0.001,
    jitter_median_up_s=0.0008,
    jitter_sigma_up=0.6,
    jitter_median_down_s=0.0008,
    jitter_sigma_down=0.6,
)

POOL_HOP_WANDER_S = 0.0004
POOL_ROOT_WANDER_S = 0.0002
POOL_DEPTH = 2


def private_topology(name: str, client_link: LinkModel) -> SyncTopology:
    return SyncTopology(name=name, client_link=client_link)


def public_topology(name: str, client_link: LinkModel, depth: int = POOL_DEPTH) -> SyncTopology:
    return SyncTopology(
        name=name,
        client_link=client_link,
        hop_links=(POOL_HOP_LINK,) * depth,
        hop_wander_sigma_s=POOL_HOP_WANDER_S,
        root_wander_sigma_s=POOL_ROOT_WANDER_S,
    )


CONNECTIONS = ("wired", "wireless")
SERVER_TYPES = ("public", "private")


def default_topology(connection: str, server_type: str) -> SyncTopology:
    key = (connection, server_type)
    links = {
        ("wired", "private"): WIRED_PRIVATE_LINK,
        ("wired", "public"): WIRED_PUBLIC_CLIENT_LINK,
        ("wireless", "private"): LTE_PRIVATE_LINK,
        ("wireless", "public"): LTE_PUBLIC_CLIENT_LINK,
    }
    if key not in links:
        raise ValueError(f"unknown matrix cell {key}")
    name = f"{connection}_{server_type}"
    if server_type == "private":
        return private_topology(name, links[key])
    return public_topology(name, links[key])


@dataclass(frozen=True)
class SyncComparisonCell:
    connection: str
    server_type: str
    est_max_error_ms: float
    max_abs_offset_ms: float
    bound_held: bool


def run_sync_comparison(
    duration_s: float = 1800.0,
    seed: int = 0,
    topologies: dict[tuple[str, str], SyncTopology] | None = None,
) -> list[SyncComparisonCell]:
    """Run all four connection/server cells and report their error bounds."""
    cells = []
    for connection in CONNECTIONS:
        for server_type in SERVER_TYPES:
            topo = (
                topologies[(connection, server_type)]
                if topologies is not None
                else default_topology(connection, server_type)
            )
            result = run_disciplined_sync(topo, duration_s, seed)
            cells.append(
                SyncComparisonCell(
                    connection=connection,
                    server_type=server_type,
                    est_max_error_ms=result.max_estimated_error_s * 1e3,
                    max_abs_offset_ms=result.max_abs_offset_s * 1e3,
                    bound_held=result.bound_held,
                )
            )
    return cells
