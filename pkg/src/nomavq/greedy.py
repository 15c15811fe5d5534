"""Fast two-phase greedy power allocation over discrete power blocks.

The budget is split into L equal power blocks. Phase I walks from the
strongest UE down (its SINR is not degraded by power given to weaker UEs
later) and spends blocks until each minimum quality requirement is met.
Phase II hands out the remaining blocks one at a time to whichever UE
improves the average PSNR most, rejecting any award that would break a
quality bound. Complexity is O(N^2 L + 2 N L) PSNR evaluations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelState, own_sinrs
from .errors import Infeasible
from .phy import AmcParams, SinrBounds, bounds_from_quality
from .quality import RdParams, psnr_of_rate


@dataclass(frozen=True)
class GreedyConfig:
    n_blocks: int = 100  # L

    def __post_init__(self):
        if self.n_blocks < 1:
            raise ValueError("n_blocks must be >= 1")

    def block_w(self, power_budget_w: float) -> float:
        # p_l is always derived from L so L * p_l == P_max exactly
        return power_budget_w / self.n_blocks


@dataclass
class GreedyResult:
    power: np.ndarray
    avg_psnr_db: float
    per_user_psnr_db: np.ndarray
    sinrs: np.ndarray
    blocks_used: int
    blocks_total: int
    phase1_evals: int = 0
    phase2_evals: int = 0


def _per_user_psnr(gammas, streams, amc, b_hz):
    rates = amc.c1 * b_hz * np.log2(1.0 + np.asarray(gammas) / amc.c2)
    return np.array([psnr_of_rate(s, float(r)) for s, r in zip(streams, rates)])


def solve_greedy(
    ch: ChannelState,
    streams: list[RdParams],
    amc: AmcParams,
    b_hz: float,
    cfg: GreedyConfig | None = None,
    bounds: SinrBounds | None = None,
) -> GreedyResult:
    """Allocate power blocks greedily; raises Infeasible if phase I exhausts
    the budget before every minimum quality requirement is met.

    Quality bounds are checked in SINR space (the PSNR-SINR map is strictly
    monotone, so the checks are equivalent and numerically cheaper); quality
    above the band saturates at q_max, so a block that overshoots the
    saturation SINR is allowed and scored at the capped PSNR. Phase II ties
    go to the lowest UE index. A candidate award is refused when the target
    UE is already saturated or when the award would push any UE below its
    minimum; an award to an unsaturated UE may still be taken when it trades
    a saturated UE's SINR margin for progress (the margin is rebuilt by later
    awards). When every candidate is refused the algorithm stops and reports
    leftover blocks rather than looping on an exhausted candidate set.
    """
    cfg = cfg or GreedyConfig()
    bounds = bounds or bounds_from_quality(streams, amc, b_hz)
    n = ch.n_users
    block = cfg.block_w(ch.power_budget_w)
    g_min = bounds.gamma_min * (1.0 - 1e-12)

    p = np.zeros(n)
    remaining = cfg.n_blocks
    phase1_evals = 0

    # Phase I: strongest UE first; earlier-satisfied (stronger) UEs are not
    # interfered by power later granted to weaker ones.
    for nd in range(n - 1, -1, -1):
        # counted evaluations follow block placements, so phase1_evals <= L
        while own_sinrs(ch, p)[nd] < g_min[nd]:
            if remaining == 0:
                raise Infeasible(
                    f"minimum quality of UE {nd} unreachable within the budget"
                )
            p[nd] += block
            remaining -= 1
            phase1_evals += 1

    # Phase II: award remaining blocks to the best average-PSNR candidate.
    phase2_evals = 0
    while remaining > 0:
        gam_now = own_sinrs(ch, p)
        best_score = -np.inf
        best_idx = -1
        for k in range(n):
            if gam_now[k] >= bounds.gamma_max[k]:
                continue  # saturated: the award cannot raise this UE's quality
            cand = p.copy()
            cand[k] += block
            gam = own_sinrs(ch, cand)
            phase2_evals += n
            if np.any(gam < g_min):
                continue
            score = float(np.mean(_per_user_psnr(gam, streams, amc, b_hz)))
            if score > best_score:  # strict: ties keep the lowest index
                best_score = score
                best_idx = k
        if best_idx < 0:
            break  # every award refused; leftover budget stays unused
        p[best_idx] += block
        remaining -= 1

    gam = own_sinrs(ch, p)
    per_user = _per_user_psnr(np.minimum(gam, bounds.gamma_max), streams, amc, b_hz)
    return GreedyResult(
        power=p,
        avg_psnr_db=float(np.mean(per_user)),
        per_user_psnr_db=per_user,
        sinrs=gam,
        blocks_used=cfg.n_blocks - remaining,
        blocks_total=cfg.n_blocks,
        phase1_evals=phase1_evals,
        phase2_evals=phase2_evals,
    )


def complexity_counters(result: GreedyResult) -> tuple[int, int]:
    """PSNR-evaluation counts of an instrumented run: (phase I, phase II)."""
    return result.phase1_evals, result.phase2_evals
