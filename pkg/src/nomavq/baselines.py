"""Reference allocation schemes used for comparison.

``solve_noma_mt`` is a throughput-maximizing two-user NOMA allocator: the
weak UE gets exactly enough power to meet its minimum quality and the strong
UE hoards the rest. ``solve_oma_simple`` is an orthogonal-access stand-in
that splits bandwidth (with full power reuse per slice) on a simplex grid to
maximize average PSNR. Both run through the same rate/quality pipeline as
the proposed solvers.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .channel import ChannelState, own_sinrs
from .errors import Infeasible
from .phy import AmcParams, SinrBounds, bounds_from_quality
from .quality import RdParams, psnr_of_rate


class Scheme(Enum):
    NOMA_MT = "NomaMt"
    OMA_SIMPLE = "OmaSimple"


@dataclass
class BaselineResult:
    scheme: Scheme
    power: np.ndarray | None  # NOMA power split, or None for OMA
    bandwidth_frac: np.ndarray | None  # OMA split, or None for NOMA
    per_user_psnr_db: np.ndarray
    avg_psnr_db: float
    sinrs: np.ndarray


def solve_noma_mt(
    ch: ChannelState,
    streams: list[RdParams],
    amc: AmcParams,
    b_hz: float,
    bounds: SinrBounds | None = None,
) -> BaselineResult:
    """Two-user throughput-max NOMA: weak UE pinned at its minimum quality.

    The weak UE's power solves its gamma_min constraint with equality given
    the strong UE's power; the strong UE takes everything left, clipped at
    its own gamma_max so surplus power is simply not spent.
    """
    if ch.n_users != 2:
        raise ValueError("the throughput-max reference scheme is two-user")
    bounds = bounds or bounds_from_quality(streams, amc, b_hz)
    h1, h2 = ch.gains_sq
    s2 = ch.noise_var
    g1_min = bounds.gamma_min[0]
    # budget-limited strong-UE power with the weak UE exactly at gamma_min:
    #   p1 = g1_min (s2 + h1 p2) / h1,  p1 + p2 = P_max
    p2_budget = (ch.power_budget_w - g1_min * s2 / h1) / (1.0 + g1_min)
    if p2_budget < 0:
        raise Infeasible("weak UE's minimum quality unreachable with full budget")
    p2 = min(p2_budget, bounds.gamma_max[1] * s2 / h2)
    p1 = g1_min * (s2 + h1 * p2) / h1
    if p1 + p2 > ch.power_budget_w * (1.0 + 1e-9):
        raise Infeasible("weak UE's minimum quality unreachable with full budget")
    p = np.array([p1, p2])
    gam = own_sinrs(ch, p)
    if gam[1] < bounds.gamma_min[1] * (1.0 - 1e-9):
        raise Infeasible("strong UE below its minimum quality under NOMA-MT")
    rates = amc.c1 * b_hz * np.log2(1.0 + gam / amc.c2)
    per_user = np.array([psnr_of_rate(s, float(r)) for s, r in zip(streams, rates)])
    return BaselineResult(
        scheme=Scheme.NOMA_MT,
        power=p,
        bandwidth_frac=None,
        per_user_psnr_db=per_user,
        avg_psnr_db=float(np.mean(per_user)),
        sinrs=gam,
    )


def _simplex_grid(n: int, step: float):
    """All nonnegative n-vectors with entries on the step grid summing to 1."""
    m = round(1.0 / step)
    for combo in itertools.combinations_with_replacement(range(m + 1), n - 1):
        # combo are the n-1 cut points of a stars-and-bars split
        cuts = (0,) + combo + (m,)
        yield np.diff(cuts) / m


def solve_oma_simple(
    ch: ChannelState,
    streams: list[RdParams],
    amc: AmcParams,
    b_hz: float,
    step: float = 0.01,
) -> BaselineResult:
    """Orthogonal-access baseline: bandwidth fractions on a simplex grid.

    Each UE gets rate c1 * rho_n * B * log2(1 + |h_n|^2 P_max / (c2 sigma^2)),
    i.e. full power reuse inside its slice. The fraction vector maximizing
    average PSNR subject to every minimum quality is selected; ties prefer
    the split closest to uniform (then grid order) for determinism.
    """
    n = ch.n_users
    snr = ch.gains_sq * ch.power_budget_w / ch.noise_var
    full_rate = amc.c1 * b_hz * np.log2(1.0 + snr / amc.c2)
    r_min = np.array([s.rate_min for s in streams])

    best = None
    for rho in _simplex_grid(n, step):
        rates = rho * full_rate
        if np.any(rates < r_min * (1.0 - 1e-12)):
            continue
        per_user = np.array(
            [psnr_of_rate(s, float(r)) for s, r in zip(streams, rates)]
        )
        score = float(np.mean(per_user))
        balance = float(np.sum((rho - 1.0 / n) ** 2))
        if best is None or score > best[0] + 1e-12 or (
            score > best[0] - 1e-12 and balance < best[1] - 1e-15
        ):
            best = (score, balance, rho.copy(), per_user)
    if best is None:
        raise Infeasible("no bandwidth split meets every minimum quality")
    score, _, rho, per_user = best
    return BaselineResult(
        scheme=Scheme.OMA_SIMPLE,
        power=None,
        bandwidth_frac=rho,
        per_user_psnr_db=per_user,
        avg_psnr_db=score,
        sinrs=snr,
    )
