from fractions import Fraction

import pytest

from platoon_pricing.coordination import PredictionStore
from platoon_pricing.network import Scenario, generate_network, generate_scenario
from platoon_pricing.pricing import PricingParams, settle
from platoon_pricing.sim import (
    ARRIVAL,
    DEPARTURE,
    Event,
    SimState,
    TruckLedger,
    conservation_gap,
    deadline_violations,
    leader_select,
    ledger_tables,
    on_arrival,
    on_departure_batch,
    run,
)

from conftest import EPS, XI, make_network, make_truck


def state_for(scenario, alpha=0):
    trucks = {t.id: t for t in scenario.trucks}
    return SimState(
        scenario=scenario,
        params=PricingParams(alpha),
        store=PredictionStore.zero_wait(scenario.trucks),
        trucks=trucks,
        ledgers={t: TruckLedger(t) for t in trucks},
    )


@pytest.fixture
def line():
    return make_network([(0, 1, 3600), (1, 2, 1800), (0, 3, 3600)])


def test_event_order():
    evs = sorted([Event(5, DEPARTURE, 0, 0), Event(5, ARRIVAL, 9, 0), Event(5, ARRIVAL, 2, 1), Event(4, DEPARTURE, 7, 0)])
    assert [(e.time, e.kind, e.truck_id) for e in evs] == [(4, 1, 7), (5, 0, 2), (5, 0, 9), (5, 1, 0)]


class TestLeaderSelect:
    def test_earliest(self):
        assert leader_select([(7, 100), (3, 200)]) == 7

    def test_tie(self):
        assert leader_select([(7, 100), (3, 100)]) == 3

    def test_needs_two(self):
        with pytest.raises(ValueError):
            leader_select([(1, 0)])


class TestRun:
    def test_single_truck(self, line):
        sc = Scenario(line, (make_truck(line, 0, [0, 1, 2], start=10, slack=500),))
        r = run(sc, PricingParams("0.3"))
        assert r.settlements == []
        assert r.provider.net_profit == 0
        assert r.trucks[0].realized_waits == {0: 0, 1: 0}
        assert r.trucks[0].arrival_times[2] == 10 + 5400

    def test_pair_same_start(self, line):
        sc = Scenario(line, (make_truck(line, 0, [0, 1], slack=360), make_truck(line, 1, [0, 1], slack=360)))
        r = run(sc, PricingParams("0.2"))
        assert len(r.settlements) == 1
        rec = r.settlements[0]
        assert rec.settlement.n == 2 and rec.spontaneous
        assert rec.settlement.leader_id == 0 and rec.settlement.follower_ids == (1,)
        assert r.provider.net_profit == Fraction("0.2") * XI * 3600
        assert conservation_gap(r) == 0

    def test_wait_then_platoon(self, line):
        # Truck 0 waits 20 s at its origin for truck 1.
        t0 = make_truck(line, 0, [0, 1, 2], start=0, slack=360)
        t1 = make_truck(line, 1, [0, 1], start=20)
        r = run(Scenario(line, (t0, t1)), PricingParams(0))
        assert r.trucks[0].realized_waits == {0: 20, 1: 0}
        assert r.trucks[0].waiting_loss == EPS * 20
        assert len(r.settlements) == 1 and not r.settlements[0].spontaneous
        # Truck 0 reached the hub first, so it leads.
        assert r.settlements[0].settlement.leader_id == 0
        assert r.trucks[0].net_profit == Fraction("57.5") / 2 - EPS * 20

    def test_full_price_never_waits(self, line):
        t0 = make_truck(line, 0, [0, 1, 2], start=0, slack=360)
        t1 = make_truck(line, 1, [0, 1], start=20)
        r = run(Scenario(line, (t0, t1)), PricingParams(1))
        assert all(led.total_wait == 0 for led in r.trucks.values())
        assert r.settlements == []

    def test_events_bounded(self, line):
        trucks = tuple(make_truck(line, i, [0, 1, 2], start=i * 7, slack=100) for i in range(5))
        r = run(Scenario(line, trucks), PricingParams(0))
        assert r.events_processed == sum(2 * t.route.n_hubs - 1 for t in trucks)
        assert r.events_processed <= sum(2 * t.route.n_hubs for t in trucks)


class TestOnArrival:
    def test_destination_closes_trip(self, line):
        t = make_truck(line, 0, [0, 1], start=0)
        st = state_for(Scenario(line, (t,)))
        on_arrival(st, t, 1, 3600)
        assert st.queue == []
        assert st.ledgers[0].arrival_times == {1: 3600}

    def test_zero_wait_departure_same_instant(self, line):
        t = make_truck(line, 0, [0, 1], start=0)
        st = state_for(Scenario(line, (t,)))
        on_arrival(st, t, 0, 0)
        assert st.queue == [Event(0, DEPARTURE, 0, 0)]
        assert Event(0, ARRIVAL, 5, 0) < st.queue[0]

    def test_commit_and_predictions(self, line):
        t0 = make_truck(line, 0, [0, 1, 2], start=0, slack=360)
        t1 = make_truck(line, 1, [0, 1], start=20)
        st = state_for(Scenario(line, (t0, t1)))
        on_arrival(st, t0, 0, 0)
        assert st.queue == [Event(20, DEPARTURE, 0, 0)]
        assert st.store.get(0, 0).departure_time == 20
        assert st.store.get(0, 1).departure_time == 20 + 3600


def _batch(line, trucks, arrivals, time, alpha=0):
    st = state_for(Scenario(line, tuple(trucks)), alpha)
    for t, a in zip(trucks, arrivals):
        st.ledgers[t.id].arrival_times[0] = a
    on_departure_batch(st, trucks[0].route.hub_sequence[0], time, [(t, 0) for t in trucks])
    return st


class TestDepartureBatch:
    def test_three_truck_platoon(self, line):
        xi = Fraction(100, 3600)
        trucks = [make_truck(line, i, [0, 1], slack=100, xi=xi) for i in (5, 2, 9)]
        st = _batch(line, trucks, [0, 0, 0], 0, "0.2")
        (rec,) = st.settlements
        assert rec.settlement == settle(3, 100, PricingParams("0.2"), 2, [5, 9])
        assert st.provider.gross_fee_income == 40
        assert sorted(e.time for e in st.queue) == [3600] * 3

    def test_two_failed_waits(self, line):
        a = make_truck(line, 0, [0, 1], slack=100)
        b = make_truck(line, 1, [0, 3], slack=100)
        st = _batch(line, [a, b], [0, 10], 30)
        assert st.settlements == []
        assert st.ledgers[0].failed_wait_compensation_received == EPS * 30
        assert st.ledgers[1].failed_wait_compensation_received == EPS * 20
        assert st.provider.failed_wait_paid == EPS * 50
        assert st.ledgers[0].net_profit == 0

    def test_lone_without_wait(self, line):
        a = make_truck(line, 0, [0, 1], slack=100)
        st = _batch(line, [a], [30], 30)
        assert st.settlements == [] and st.provider.failed_wait_paid == 0
        assert st.ledgers[0].net_profit == 0

    def test_leader_permutation_keeps_amounts(self, line):
        trucks = [make_truck(line, i, [0, 1], slack=100) for i in (1, 2)]
        first = _batch(line, trucks, [0, 5], 5).settlements[0].settlement
        second = _batch(line, trucks, [5, 0], 5).settlements[0].settlement
        assert first.leader_id != second.leader_id
        assert first.money == second.money


@pytest.fixture(scope="module")
def mid_scenario():
    net = generate_network(30, 3, (1800, 7200), seed=11)
    return generate_scenario(net, 120, seed=3)


@pytest.mark.parametrize("alpha", ["0", "0.3", "0.7", "1"])
def test_invariants_on_generated_scenario(mid_scenario, alpha):
    r = run(mid_scenario, PricingParams(alpha))
    assert conservation_gap(r) == 0
    assert deadline_violations(r) == []
    for led in r.trucks.values():
        assert min(led.platoon_benefit_received, led.fees_paid, led.leader_compensation_received,
                   led.waiting_loss, led.failed_wait_compensation_received) >= 0
    if alpha == "0":
        assert r.provider.gross_fee_income == 0 and r.provider.net_profit <= 0
    if alpha == "1":
        assert all(led.total_wait == 0 for led in r.trucks.values())


def test_deterministic_ledgers(mid_scenario):
    a = ledger_tables(run(mid_scenario, PricingParams("0.4")))
    b = ledger_tables(run(mid_scenario, PricingParams("0.4")))
    assert a == b
    assert a["settlements.csv"].splitlines()[0] == (
        "platoon_id,edge,departure_time,n,leader_id,follower_ids,p_f,f_f,r_f,r_c,f_total"
    )
