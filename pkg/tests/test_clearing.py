import numpy as np
import pytest

from storage_cournot.clearing import (
    active_block,
    clear_hour,
    consumer_surplus,
    consumer_surplus_telescoped,
    hourly_metrics,
    player_profits,
    producer_surplus,
)
from storage_cournot.model import DemandCurve, GameState, Scenario, Schedule, StorageParams

CURVE = DemandCurve([50.0, 30.0, 10.0], [100.0, 200.0, 300.0])


def test_single_block():
    r = clear_hour(DemandCurve([10.0], [100.0]), 50.0)
    assert (r.price, r.served, r.unmet, r.curtailment) == (10.0, 50.0, 50.0, 0.0)


def test_inside_second_block():
    r = clear_hour(CURVE, 150.0)
    assert r.active_block == 1
    assert (r.price, r.unmet, r.partial_fill) == (30.0, 150.0, 50.0)


def test_oversupply_is_curtailed():
    r = clear_hour(CURVE, 350.0)
    assert (r.active_block, r.price, r.served, r.curtailment, r.unmet) == (2, 10.0, 300.0, 50.0, 0.0)


@pytest.mark.parametrize("supply, block", [(0.0, 0), (100.0, 0), (100.0 + 1e-6, 1), (200.0, 1), (300.0, 2)])
def test_half_open_blocks(supply, block):
    assert active_block(CURVE, supply) == block


def test_negative_supply_rejected():
    with pytest.raises(ValueError):
        clear_hour(CURVE, -1.0)


def test_invalid_curve_rejected():
    with pytest.raises(ValueError):
        clear_hour(DemandCurve([10.0, 20.0], [1.0, 2.0]), 1.0)


def test_consumer_surplus_examples():
    assert consumer_surplus(CURVE, clear_hour(CURVE, 50.0)) == 0.0
    assert consumer_surplus(CURVE, clear_hour(CURVE, 250.0)) == 6000.0
    two = DemandCurve([50.0, 30.0], [100.0, 200.0])
    assert consumer_surplus(two, clear_hour(two, 150.0)) == 2000.0
    for j in range(3):
        assert consumer_surplus_telescoped(CURVE, j) == [0.0, 2000.0, 6000.0][j]


def test_consumer_surplus_rejects_foreign_result():
    other = DemandCurve([50.0, 30.0, 10.0, 5.0], [1.0, 2.0, 3.0, 4.0])
    with pytest.raises(ValueError):
        consumer_surplus(CURVE, clear_hour(other, 3.5))


def test_producer_surplus_examples():
    r = clear_hour(DemandCurve([10.0], [500.0]), 100.0)
    assert producer_surplus(r, [], [], 100.0, []) == 1000.0
    r = clear_hour(DemandCurve([30.0], [500.0]), 70.0)
    assert producer_surplus(r, [0.0], [20.0], 50.0, [1.0]) == 2080.0
    r = clear_hour(DemandCurve([0.0], [500.0]), 70.0)
    assert producer_surplus(r, [5.0, 0.0], [0.0, 20.0], 55.0, [1.0, 2.0]) == -45.0


def test_curtailed_res_earns_nothing():
    r = clear_hour(CURVE, 350.0)
    assert producer_surplus(r, [], [], 350.0, []) == 10.0 * 300.0


def _scenario(res, players=()):
    curves = [DemandCurve([80.0, 40.0, 10.0], [60.0, 120.0, 150.0], hour=t + 1) for t in range(len(res))]
    return Scenario(curves, res, players)


def test_no_storage_low_res_prices_first_block():
    s = _scenario([10.0, 20.0, 59.0])
    rep = hourly_metrics(s.idle_state(), s)
    assert np.array_equal(rep.prices, [80.0, 80.0, 80.0])


def test_no_storage_high_res_curtails():
    s = _scenario([10.0, 170.0])
    rep = hourly_metrics(s.idle_state(), s)
    assert rep.hours[1].curtailment == 20.0
    assert rep.curtailment == 20.0


def test_duopoly_totals_match_hourly_oracle():
    p1 = StorageParams(1, q_max=20.0, e_max=40.0, oc=1.0)
    p2 = StorageParams(2, q_max=30.0, e_max=60.0, oc=0.5)
    s = _scenario([130.0, 50.0, 90.0], [p1, p2])
    state = GameState((Schedule.from_levels(p1, [-1, 1, 0]), Schedule.from_levels(p2, [-1, 0, 1])))
    rep = hourly_metrics(state, s)
    # hour-by-hour by hand: supply 80, 70, 120
    prices = [40.0, 40.0, 40.0]
    cs = [(80 - 40) * 60.0] * 3
    ps = [
        -20 * (40 + 1) - 30 * (40 + 0.5) + 40 * 130,
        20 * (40 - 1) + 40 * 50,
        30 * (40 - 0.5) + 40 * 90,
    ]
    assert np.array_equal(rep.prices, prices)
    assert rep.consumer_surplus == pytest.approx(sum(cs), abs=1e-9)
    assert rep.producer_surplus == pytest.approx(sum(ps), abs=1e-9)
    assert rep.social_welfare == pytest.approx(sum(cs) + sum(ps), abs=1e-9)
    assert rep.unmet == pytest.approx(70.0 + 80.0 + 30.0)
    profits = player_profits(state, s)
    assert profits == pytest.approx([20 * 39 - 20 * 41, 30 * 39.5 - 30 * 40.5])
    t = rep.totals()
    assert t["peak_price"] == 40.0 and t["mean_price"] == 40.0
