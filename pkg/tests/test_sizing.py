import math

import numpy as np
import pytest

from storage_cournot.sizing import (
    DEFAULT_SHARES,
    apply_theta,
    partition_players,
    required_capacity,
    residual_demand,
    shares_for,
    size_fleet,
)


def test_residual_demand():
    assert np.array_equal(residual_demand([5.0, 6.0], [5.0, 6.0]), [0.0, 0.0])
    assert np.array_equal(residual_demand([100.0, 50.0], [80.0, 90.0]), [20.0, -40.0])
    with pytest.raises(ValueError):
        residual_demand([1.0], [1.0, 2.0])


def test_required_capacity_worked_example():
    r = required_capacity([10.0, -20.0, 15.0], eta=0.5, c_rate=0.5)
    assert np.array_equal(r.corrected, [20.0, -20.0, 30.0])
    assert np.array_equal(r.cumulative, [20.0, 0.0, 30.0])
    assert np.array_equal(r.level, [0.0, 0.0, 30.0])
    assert (r.e_max, r.q_max) == (30.0, 15.0)


def test_required_capacity_edge_cases():
    r = required_capacity([-5.0, -1.0, 0.0], eta=0.9, c_rate=0.25)
    assert (r.e_max, r.q_max) == (0.0, 0.0)
    # the running minimum starts at the first hour, so a lone deficit has no excursion
    r = required_capacity([10.0], eta=1.0, c_rate=1.0)
    assert (r.e_max, r.q_max) == (0.0, 0.0)
    r = required_capacity([-1.0, 10.0], eta=1.0, c_rate=1.0)
    assert (r.e_max, r.q_max) == (10.0, 10.0)
    for eta, c in ((0.0, 1.0), (1.1, 1.0), (0.5, 0.0)):
        with pytest.raises(ValueError):
            required_capacity([1.0], eta, c)


def test_translation_invariance(rng):
    # X depends on CR only through differences
    for _ in range(20):
        r = rng.normal(0, 50, 24)
        res = required_capacity(r, 0.8, 0.3)
        shifted = res.cumulative + 123.0
        level = shifted - np.minimum.accumulate(shifted)
        assert np.allclose(level, res.level)


def test_partition_examples():
    a, b = partition_players(300.0, 90.0, (1 / 3, 2 / 3), n_levels=3)
    assert (a.q_max, b.q_max) == (30.0, 60.0)
    assert a.e_max + b.e_max == pytest.approx(300.0)
    assert np.allclose(b.levels, [20.0, 40.0, 60.0])
    (only,) = partition_players(30.0, 15.0, (1.0,), n_levels=1)
    assert (only.e_max, only.q_max, only.player_id) == (30.0, 15.0, 1)


def test_partition_eight_players_floors():
    shares = DEFAULT_SHARES[8]
    players = partition_players(1000.0, 30.0, shares, n_levels=2)
    assert [p.q_max for p in players] == [max(1, math.floor(w * 30)) for w in shares]
    assert sum(p.e_max for p in players) == pytest.approx(1000.0)
    assert sum(p.q_max for p in players) <= 30 + len(shares)
    assert min(p.q_max for p in players) >= 1


def test_partition_rejects_bad_shares():
    for shares in ((), (0.5, 0.4), (1.2, -0.2)):
        with pytest.raises(ValueError):
            partition_players(10.0, 10.0, shares, 1)


def test_shares_for():
    assert shares_for(2) == (1 / 3, 2 / 3)
    assert shares_for(0) == ()
    assert shares_for(3) == pytest.approx((1 / 3,) * 3)
    for n, w in DEFAULT_SHARES.items():
        assert len(w) == n and sum(w) == pytest.approx(1.0)


def test_apply_theta():
    (p,) = partition_players(30.0, 15.0, (1.0,), n_levels=1, eta=0.8, oc=2.0)
    assert apply_theta([p], 1.0) == [p]
    (z,) = apply_theta([p], 0.0)
    assert (z.e_max, z.q_max) == (0.0, 0.0)
    (big,) = apply_theta([p], 2.5)
    assert (big.e_max, big.q_max, big.eta, big.oc) == (75.0, 37.5, 0.8, 2.0)
    twice = apply_theta(apply_theta([p], 1.5), 2.0)[0]
    assert (twice.e_max, twice.q_max) == pytest.approx((p.e_max * 3.0, p.q_max * 3.0))
    with pytest.raises(ValueError):
        apply_theta([p], -1.0)


def test_size_fleet_pipeline():
    sized = size_fleet([100.0, 50.0, 120.0], [80.0, 90.0, 90.0], eta=0.5, c_rate=0.5, shares=(1 / 3, 2 / 3),
                       n_levels=2, oc=1.0)
    # R = [20, -40, 30] -> R' = [40, -40, 60], CR = [40, 0, 60], X = [0, 0, 60]
    assert (sized.e_max, sized.q_max) == (60.0, 30.0)
    assert [p.q_max for p in sized.per_player] == [10.0, 20.0]
    assert all(p.eta == 0.5 and p.oc == 1.0 for p in sized.per_player)
