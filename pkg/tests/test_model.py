import numpy as np
import pytest

from storage_cournot.model import (
    DemandCurve,
    GameState,
    Scenario,
    Schedule,
    StorageParams,
    net_supply,
    soc_trajectory,
    validate_scenario,
)


def two_player_scenario(T=24):
    curves = [DemandCurve([100.0, 40.0, 5.0], [50.0, 120.0, 200.0], hour=t + 1) for t in range(T)]
    players = [StorageParams(1, 10.0, 40.0, eta=0.9, oc=0.5, n_levels=2),
               StorageParams(2, 20.0, 80.0, eta=0.9, oc=0.5, n_levels=2)]
    return Scenario(curves, np.full(T, 90.0), players)


def test_valid_scenario_has_no_violations():
    assert validate_scenario(two_player_scenario()) == []


def test_ascending_prices_reported_with_hour():
    s = two_player_scenario()
    curves = list(s.curves)
    curves[4] = DemandCurve([10.0, 40.0], [50.0, 100.0], hour=5)
    bad = validate_scenario(Scenario(curves, s.res, s.players))
    assert len(bad) == 1
    assert bad[0].where == "hour 5"
    assert "descending" in bad[0].rule


def test_eta_out_of_range():
    s = two_player_scenario()
    p = StorageParams(3, 10.0, 10.0, eta=1.2)
    bad = validate_scenario(s.with_players([*s.players, p]))
    assert [v.rule for v in bad] == ["eta out of (0,1]"]


def test_duplicate_ids_and_negative_res():
    s = two_player_scenario(2)
    s2 = Scenario(s.curves, [-1.0, 3.0], [s.players[0], s.players[0]])
    rules = " ".join(str(v) for v in validate_scenario(s2))
    assert "duplicate player ids" in rules
    assert "negative" in rules


def test_curve_count_mismatch():
    s = two_player_scenario(3)
    bad = validate_scenario(Scenario(s.curves[:2], s.res, s.players, horizon=3))
    assert any("curve count" in v.rule for v in bad)


def test_curve_derived_blocks():
    c = DemandCurve([50.0, 30.0, 10.0], [100.0, 200.0, 300.0])
    assert np.array_equal(c.block_starts, [0.0, 100.0, 200.0])
    assert np.array_equal(c.block_widths, [100.0, 100.0, 100.0])
    assert c.max_volume == 300.0


def test_offer_levels():
    p = StorageParams(1, q_max=30.0, e_max=60.0, n_levels=3)
    assert np.allclose(p.levels, [10.0, 20.0, 30.0])
    assert p.terminal_band == pytest.approx((28.5, 31.5))


def test_schedule_soc_matches_recursion():
    p = StorageParams(1, q_max=10.0, e_max=40.0, eta=0.8, n_levels=2)
    s = Schedule.from_levels(p, [-2, -1, 0, 1, 2, 1])
    expected = [20.0]
    for ch, dis in zip(s.charge, s.discharge):
        expected.append(expected[-1] + 0.8 * ch - dis)
    assert np.array_equal(s.soc, soc_trajectory(p, s.charge, s.discharge))
    assert np.allclose(s.soc, expected[1:])


def test_schedule_violations():
    p = StorageParams(1, q_max=10.0, e_max=20.0, n_levels=1)
    assert Schedule.from_levels(p, [-1, 1]).violations(p) == []
    assert Schedule.from_levels(p, [1, 1]).violations(p)  # empties below zero
    assert Schedule.from_levels(p, [0, 1]).violations(p)  # misses the terminal band


def test_state_equality_uses_levels():
    p = StorageParams(1, q_max=10.0, e_max=20.0)
    a = GameState((Schedule.from_levels(p, [-1, 1]),))
    b = GameState((Schedule.from_levels(p, [-1, 1]),))
    assert a.key() == b.key()
    assert a.key() != GameState.idle([p], 2).key()


def test_net_supply_examples():
    p1 = StorageParams(1, q_max=50.0, e_max=100.0)
    p2 = StorageParams(2, q_max=50.0, e_max=100.0)
    idle = GameState.idle([p1, p2], 3)
    assert np.array_equal(net_supply(idle, [5.0, 6.0, 7.0]), [5.0, 6.0, 7.0])

    one = GameState((Schedule.from_levels(StorageParams(1, 30.0, 100.0), [-1]),))
    assert np.array_equal(net_supply(one, [100.0]), [70.0])

    p1 = StorageParams(1, q_max=20.0, e_max=100.0)
    state = GameState((Schedule.from_levels(p1, [1]), Schedule.from_levels(p2, [-1])))
    assert np.array_equal(net_supply(state, [100.0]), [70.0])
    for k in (None, 0, 1):
        assert np.array_equal(net_supply(state, [100.0], k), [70.0])


def test_net_supply_horizon_mismatch():
    p = StorageParams(1, q_max=10.0, e_max=20.0)
    with pytest.raises(ValueError):
        net_supply(GameState.idle([p], 3), [1.0, 2.0])


def test_types_are_read_only():
    c = DemandCurve([50.0, 30.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        c.prices[0] = 1.0
    s = two_player_scenario(2)
    with pytest.raises(ValueError):
        s.res[0] = 0.0
