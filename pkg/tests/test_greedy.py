import numpy as np
import pytest

from nomavq import (
    ChannelState,
    GreedyConfig,
    Infeasible,
    bounds_from_quality,
    own_sinrs,
    solve_greedy,
    solve_polyblock,
)
from nomavq.greedy import complexity_counters
from nomavq.phy import build_feasible_set

from conftest import B_HZ, make_instance


def _three_user(rng, table, snr_db=22.0):
    noise = 1.0 / 10 ** (snr_db / 10.0)
    dists = np.array([3.5, 2.0, 0.9])
    raw = rng.standard_normal(3) ** 2 + rng.standard_normal(3) ** 2
    gains = np.sort(raw / 2.0 / (1.0 + dists**2))
    ch = ChannelState(gains_sq=gains, noise_var=noise,
                      bandwidth_hz=B_HZ, power_budget_w=1.0)
    streams = [table["Foreman"], table["Ice"], table["Soccer"]]
    return ch, streams


def test_single_user_stops_at_saturation(streams_table, amc):
    # plenty of budget: blocks beyond the saturation SINR are left unspent
    ch = ChannelState(gains_sq=np.array([0.5]), noise_var=1e-4,
                      bandwidth_hz=B_HZ, power_budget_w=1.0)
    streams = [streams_table["Foreman"]]
    res = solve_greedy(ch, streams, amc, B_HZ, GreedyConfig(n_blocks=100))
    bounds = bounds_from_quality(streams, amc, B_HZ)
    assert res.blocks_used < res.blocks_total
    assert res.sinrs[0] >= bounds.gamma_max[0]
    assert res.per_user_psnr_db[0] == pytest.approx(streams[0].q_max_db, abs=1e-9)
    # exactly one block less would still be under saturation
    assert ch.gains_sq[0] * (res.power[0] - 0.01) / ch.noise_var \
        < bounds.gamma_max[0]


def test_phase_one_infeasible(streams_table, amc):
    ch = ChannelState(gains_sq=np.array([1e-6, 0.5]), noise_var=0.01,
                      bandwidth_hz=B_HZ, power_budget_w=1.0)
    streams = [streams_table["Foreman"], streams_table["Soccer"]]
    with pytest.raises(Infeasible):
        solve_greedy(ch, streams, amc, B_HZ)


def test_allocation_structure_and_bounds(streams_table, amc):
    rng = np.random.default_rng(3)
    done = 0
    while done < 30:
        ch, streams = make_instance(rng, streams_table)
        cfg = GreedyConfig(n_blocks=100)
        try:
            res = solve_greedy(ch, streams, amc, B_HZ, cfg)
        except Infeasible:
            continue
        block = cfg.block_w(ch.power_budget_w)
        # every entry is a whole number of blocks and the budget holds
        assert np.allclose(res.power / block, np.round(res.power / block),
                           atol=1e-9)
        assert res.power.sum() <= ch.power_budget_w + 1e-12
        assert res.blocks_used == int(round(res.power.sum() / block))
        bounds = bounds_from_quality(streams, amc, B_HZ)
        gam = own_sinrs(ch, res.power)
        assert np.all(gam >= bounds.gamma_min * (1.0 - 1e-9))
        for s, q in zip(streams, res.per_user_psnr_db):
            assert s.q_min_db - 1e-9 <= q <= s.q_max_db + 1e-9
        done += 1


def test_deterministic(streams_table, amc):
    rng = np.random.default_rng(5)
    done = 0
    while done < 10:
        ch, streams = make_instance(rng, streams_table)
        try:
            a = solve_greedy(ch, streams, amc, B_HZ)
        except Infeasible:
            continue
        b = solve_greedy(ch, streams, amc, B_HZ)
        assert np.array_equal(a.power, b.power)
        assert a.avg_psnr_db == b.avg_psnr_db
        done += 1


@pytest.mark.parametrize("n_blocks", [10, 100])
def test_complexity_counters_within_bounds(streams_table, amc, n_blocks):
    rng = np.random.default_rng(9)
    for make in (lambda: make_instance(rng, streams_table),
                 lambda: _three_user(rng, streams_table)):
        done = 0
        while done < 10:
            ch, streams = make()
            cfg = GreedyConfig(n_blocks=n_blocks)
            try:
                res = solve_greedy(ch, streams, amc, B_HZ, cfg)
            except Infeasible:
                continue
            n = ch.n_users
            p1, p2 = complexity_counters(res)
            assert 0 <= p1 <= n_blocks  # one placement per counted evaluation
            assert 0 <= p2 <= n * n * n_blocks
            done += 1


def test_three_user_feasible_runs(streams_table, amc):
    rng = np.random.default_rng(15)
    done = 0
    while done < 10:
        ch, streams = _three_user(rng, streams_table)
        try:
            res = solve_greedy(ch, streams, amc, B_HZ)
        except Infeasible:
            continue
        bounds = bounds_from_quality(streams, amc, B_HZ)
        assert np.all(own_sinrs(ch, res.power) >= bounds.gamma_min * (1 - 1e-9))
        assert res.avg_psnr_db == pytest.approx(
            float(np.mean(res.per_user_psnr_db)), abs=1e-12
        )
        done += 1


def test_never_beats_global_solver(streams_table, amc):
    rng = np.random.default_rng(23)
    done = 0
    while done < 15:
        ch, streams = make_instance(rng, streams_table)
        fset = build_feasible_set(ch, bounds_from_quality(streams, amc, B_HZ))
        try:
            ref = solve_polyblock(fset, streams, amc, B_HZ)
            res = solve_greedy(ch, streams, amc, B_HZ)
        except Infeasible:
            continue
        # the discrete allocation is a feasible point of the continuous
        # problem, so it cannot exceed the certified optimum
        assert res.avg_psnr_db <= ref.avg_psnr_db + ref.bound_gap_db + 1e-9
        done += 1


def test_finer_blocks_do_not_hurt(streams_table, amc):
    rng = np.random.default_rng(27)
    done = 0
    while done < 10:
        ch, streams = make_instance(rng, streams_table)
        fset = build_feasible_set(ch, bounds_from_quality(streams, amc, B_HZ))
        try:
            ref = solve_polyblock(fset, streams, amc, B_HZ)
            coarse = solve_greedy(ch, streams, amc, B_HZ, GreedyConfig(100))
            fine = solve_greedy(ch, streams, amc, B_HZ, GreedyConfig(1000))
        except Infeasible:
            continue
        gap_coarse = ref.avg_psnr_db - coarse.avg_psnr_db
        gap_fine = ref.avg_psnr_db - fine.avg_psnr_db
        assert gap_fine <= gap_coarse + 1e-6
        done += 1
