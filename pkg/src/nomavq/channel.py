"""UE placement, Rayleigh fading, zone partitioning, NOMA grouping and SIC SINR.

Within one NOMA group the UEs are indexed weakest channel first:
|h_1|^2 <= ... <= |h_N|^2. With successive interference cancellation, UE n
decodes the signals of UEs 1..n-1 before its own and treats UEs n+1..N as
noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .errors import ConfigurationError


class QualityReq(Enum):
    LATENCY_SENSITIVE = "LatencySensitive"
    QUALITY_SENSITIVE = "QualitySensitive"


class Complexity(Enum):
    LOW = "Low"
    HIGH = "High"


class GroupingStrategy(Enum):
    WLBH = "WLBH"  # weak UEs get Low-complexity streams, better UEs High
    WHBL = "WHBL"  # the inverse
    WRBR = "WRBR"  # seeded random stream assignment
    BY_INDEX = "ByIndex"  # keep each UE's own requested stream


# a UE counts as "edge" when its distance is within this fraction of a
# zone boundary radius (the boundary itself is not specified upstream)
EDGE_TOLERANCE = 0.05


@dataclass(frozen=True)
class UserEquipment:
    id: int
    distance_m: float
    requested_stream: str
    quality_req: QualityReq = QualityReq.QUALITY_SENSITIVE
    content_complexity: Complexity = Complexity.LOW
    zone: int = 0  # assigned by partition_zones, 1-based

    def __post_init__(self):
        if self.distance_m <= 0:
            raise ValueError("distance_m must be positive")


@dataclass(frozen=True)
class ChannelState:
    """Per-group channel realization, ordered weakest-first for SIC."""

    gains_sq: np.ndarray  # |h_n|^2, nondecreasing
    noise_var: float  # sigma^2 [W]
    bandwidth_hz: float
    power_budget_w: float
    path_loss_exp: float = 2.0

    def __post_init__(self):
        g = np.asarray(self.gains_sq, dtype=float)
        object.__setattr__(self, "gains_sq", g)
        if np.any(g <= 0):
            raise ValueError("channel gains must be strictly positive")
        if np.any(np.diff(g) < 0):
            raise ValueError("gains_sq must be nondecreasing (SIC ordering)")
        if self.noise_var <= 0 or self.bandwidth_hz <= 0 or self.power_budget_w <= 0:
            raise ValueError("noise_var, bandwidth_hz, power_budget_w must be positive")

    @property
    def n_users(self) -> int:
        return len(self.gains_sq)


@dataclass(frozen=True)
class PowerVector:
    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        object.__setattr__(self, "p", p)
        if np.any(p < 0):
            raise ValueError("powers must be nonnegative")

    def check_budget(self, budget: float, tol: float = 1e-9):
        if float(np.sum(self.p)) > budget + tol:
            raise ValueError("power vector exceeds budget")


def channel_gain(g: complex, distance_m: float, path_loss_exp: float) -> complex:
    """Fading coefficient attenuated by distance: h = g / sqrt(1 + d^eta)."""
    return g / np.sqrt(1.0 + distance_m**path_loss_exp)


def sample_channel(ue: UserEquipment, rng, path_loss_exp: float = 2.0) -> complex:
    """Draw one Rayleigh-faded channel gain for a UE.

    ``rng`` is a ``numpy.random.Generator`` (or an int seed). The small-scale
    coefficient g is circularly symmetric complex Gaussian with unit variance.
    """
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    re, im = rng.standard_normal(2) * np.sqrt(0.5)
    return channel_gain(complex(re, im), ue.distance_m, path_loss_exp)


def partition_zones(ues: list[UserEquipment], n_zones: int) -> list[UserEquipment]:
    """Assign UEs to zones by connection quality (distance, under equal fading stats).

    Zone n has uniformly better connection quality than zone n-1 (zone 1 holds
    the farthest UEs). A latency-sensitive UE sitting within EDGE_TOLERANCE of
    a zone boundary is moved to the lower-index zone (fewer SIC stages), by
    swapping with the boundary UE across the border so zones stay equal-sized.
    Returns new UE objects with ``zone`` set, sorted farthest-first.
    """
    if len(ues) % n_zones != 0:
        raise ConfigurationError(
            f"{len(ues)} UEs cannot be split into {n_zones} equal zones"
        )
    per_zone = len(ues) // n_zones
    order = sorted(ues, key=lambda u: (-u.distance_m, u.id))
    for z in range(1, n_zones):
        cut = z * per_zone
        inner = order[cut]       # weakest member of the better zone z+1
        outer = order[cut - 1]   # strongest member of zone z
        boundary = 0.5 * (inner.distance_m + outer.distance_m)
        edge = abs(inner.distance_m - boundary) <= EDGE_TOLERANCE * boundary
        if edge and inner.quality_req is QualityReq.LATENCY_SENSITIVE:
            order[cut - 1], order[cut] = inner, outer
    return [
        replace(u, zone=1 + i // per_zone) for i, u in enumerate(order)
    ]


def _assign_streams(zoned, strategy, rng):
    """Re-map requested streams across UEs per the grouping strategy."""
    if strategy is GroupingStrategy.BY_INDEX:
        return zoned
    streams = [(u.requested_stream, u.content_complexity) for u in zoned]
    if strategy is GroupingStrategy.WRBR:
        perm = rng.permutation(len(streams))
        shuffled = [streams[i] for i in perm]
        return [
            replace(u, requested_stream=s, content_complexity=c)
            for u, (s, c) in zip(zoned, shuffled)
        ]
    # WLBH: low-complexity streams to low-index (weaker) zones; WHBL inverse
    low = sorted(s for s in streams if s[1] is Complexity.LOW)
    high = sorted(s for s in streams if s[1] is Complexity.HIGH)
    ordered = low + high if strategy is GroupingStrategy.WLBH else high + low
    if len(ordered) != len(zoned):
        raise ConfigurationError("stream complexity counts do not cover all UEs")
    # zoned is sorted farthest-first, i.e. weakest zone first
    return [
        replace(u, requested_stream=s, content_complexity=c)
        for u, (s, c) in zip(zoned, ordered)
    ]


def group_users(
    zoned: list[UserEquipment],
    strategy: GroupingStrategy = GroupingStrategy.BY_INDEX,
    seed: int | None = 0,
) -> list[list[UserEquipment]]:
    """Form NOMA groups: one UE per zone, ordered weakest zone first.

    ``zoned`` is the output of partition_zones. Groups pair rank-matched UEs
    across zones (the k-th farthest of each zone). WLBH/WHBL first re-map
    which streams the UEs request; WLBH requires that the count of
    Low-complexity streams equals the weak-zone capacity.
    """
    zones = {}
    for u in zoned:
        zones.setdefault(u.zone, []).append(u)
    sizes = {len(v) for v in zones.values()}
    if len(sizes) != 1:
        raise ConfigurationError("zones are not equally sized")
    per_zone = sizes.pop()
    n_zones = len(zones)

    if strategy in (GroupingStrategy.WLBH, GroupingStrategy.WHBL):
        n_low = sum(1 for u in zoned if u.content_complexity is Complexity.LOW)
        if n_low % per_zone != 0:
            raise ConfigurationError(
                "WLBH/WHBL need stream complexity counts matching zone sizes"
            )

    rng = np.random.default_rng(seed)
    flat = [u for z in sorted(zones) for u in sorted(zones[z], key=lambda u: -u.distance_m)]
    flat = _assign_streams(flat, strategy, rng)
    groups = []
    for k in range(per_zone):
        groups.append([flat[z * per_zone + k] for z in range(n_zones)])
    return groups


def sinr(ch: ChannelState, p: PowerVector, detector: int, target: int) -> float:
    """SINR at UE ``detector`` when decoding the signal of UE ``target``.

    Indices are 0-based with weakest channel first; requires target <= detector
    (SIC decodes weaker-indexed signals only).
    """
    n, t = detector, target
    if t > n:
        raise ValueError("SIC cannot decode a stronger-indexed user's signal")
    g = ch.gains_sq[n]
    interference = g * float(np.sum(p.p[t + 1:]))
    return g * p.p[t] / (interference + ch.noise_var)


def own_sinrs(ch: ChannelState, p: np.ndarray) -> np.ndarray:
    """Vector of each UE's SINR for its own stream (gamma_n in closed form)."""
    p = np.asarray(p, dtype=float)
    tail = np.concatenate([np.cumsum(p[::-1])[::-1][1:], [0.0]])
    return ch.gains_sq * p / (ch.gains_sq * tail + ch.noise_var)
