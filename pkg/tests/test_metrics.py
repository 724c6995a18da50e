from fractions import Fraction

import pytest

from platoon_pricing.metrics import (
    SWEEP_COLUMNS,
    alpha_grid,
    avg_truck_profit,
    avg_waiting_time,
    plot_tables,
    platooning_rate,
    provider_profit,
    sweep,
    sweep_table,
    system_utility,
)
from platoon_pricing.network import Scenario, generate_network, generate_scenario
from platoon_pricing.pricing import PricingParams, settle
from platoon_pricing.sim import SimResult, run

from conftest import EPS, make_network, make_truck
from test_sim import _batch

XI100 = Fraction(100, 3600)  # P_f = 100 on a 3600 s segment


@pytest.fixture
def line():
    return make_network([(0, 1, 3600), (1, 2, 1800), (0, 3, 3600)])


def pair_run(line, alpha):
    sc = Scenario(line, (make_truck(line, 0, [0, 1], slack=60, xi=XI100),
                         make_truck(line, 1, [0, 1], slack=60, xi=XI100)))
    return run(sc, PricingParams(alpha))


def result_from_state(st):
    return SimResult(st.scenario, st.params, st.ledgers, st.provider, st.settlements,
                     sum(t.route.n_hubs - 1 for t in st.scenario.trucks), 0, st.platoon_of)


class TestProviderProfit:
    def test_no_platoons_only_payouts(self, line):
        a = make_truck(line, 0, [0, 1], slack=100)
        r = result_from_state(_batch(line, [a], [0], 30))
        assert provider_profit(r) == (0, -EPS * 30)

    def test_pair(self, line):
        assert provider_profit(pair_run(line, "0.2")) == (20, 20)

    def test_free(self, line):
        assert provider_profit(pair_run(line, 0))[0] == 0


class TestSystemUtility:
    def test_empty(self, line):
        sc = Scenario(line, (make_truck(line, 0, [0, 1]),))
        assert system_utility(run(sc, PricingParams("0.5"))) == 0

    @pytest.mark.parametrize("alpha", ["0", "0.2", "0.9", "1"])
    def test_pair_split_cancels(self, line, alpha):
        assert system_utility(pair_run(line, alpha)) == 100

    def test_failed_wait_costs_system(self, line):
        a = make_truck(line, 0, [0, 1], slack=100)
        r = result_from_state(_batch(line, [a], [0], 30))
        assert system_utility(r) == -EPS * 30


class TestAverages:
    def test_full_price_zero_profit(self, line):
        assert avg_truck_profit(pair_run(line, 1)) == 0

    def test_single_truck(self, line):
        sc = Scenario(line, (make_truck(line, 0, [0, 1, 2], slack=50),))
        r = run(sc, PricingParams(0))
        assert avg_truck_profit(r) == 0 and avg_waiting_time(r) == 0

    def test_free_pair(self, line):
        assert avg_truck_profit(pair_run(line, 0)) == 50

    def test_waiting_average(self, line):
        t0 = make_truck(line, 0, [0, 1, 2], start=0, slack=360)
        t1 = make_truck(line, 1, [0, 1], start=20)
        assert avg_waiting_time(run(Scenario(line, (t0, t1)), PricingParams(0))) == 10


class TestRate:
    def test_none(self, line):
        sc = Scenario(line, (make_truck(line, 0, [0, 1, 2]),))
        assert platooning_rate(run(sc, PricingParams(0))) == 0

    def test_all(self, line):
        assert platooning_rate(pair_run(line, "0.5")) == 1


@pytest.fixture(scope="module")
def scenario():
    net = generate_network(30, 3, (1800, 7200), seed=11)
    return generate_scenario(net, 120, seed=3)


class TestSweep:
    def test_grid(self, scenario):
        rows = sweep(scenario, alpha_grid())
        assert [r.alpha for r in rows] == [Fraction(i, 10) for i in range(11)]
        for r in rows:
            assert 0 <= r.platooning_rate <= 1
            assert r.avg_waiting_time >= 0
            assert r.system_utility == r.n_trucks * r.avg_truck_profit + r.provider_profit_net

    def test_full_price_only(self, scenario):
        (row,) = sweep(scenario, [1])
        assert row.avg_waiting_time == 0

    def test_deterministic_and_parallel(self, scenario):
        grid = ["0", "0.5", "1"]
        a = sweep_table(sweep(scenario, grid))
        assert a == sweep_table(sweep(scenario, grid))
        assert a == sweep_table(sweep(scenario, grid, jobs=2))
        assert a.splitlines()[0] == ",".join(SWEEP_COLUMNS)

    def test_rejects_bad_alpha(self, scenario):
        with pytest.raises(ValueError):
            sweep(scenario, [1.5])
        with pytest.raises(ValueError):
            sweep(scenario, [])

    def test_split_does_not_move_system_utility(self, scenario):
        """Re-pricing a frozen outcome under any alpha leaves the system total unchanged."""
        r = run(scenario, PricingParams("0.3"))
        base = system_utility(r)
        loss = sum((led.waiting_loss for led in r.trucks.values()), Fraction(0))
        for a in alpha_grid():
            total = Fraction(0)
            for rec in r.settlements:
                s = rec.settlement
                again = settle(s.n, s.p_f, PricingParams(a), s.leader_id, s.follower_ids)
                total += (s.n - 1) * again.r_f + again.r_c + again.f_total
            assert total - loss == base

    def test_plot_tables(self, scenario):
        rows = sweep(scenario, ["0", "1"])
        files = plot_tables(rows)
        assert "system_utility_120.csv" in files
        lines = files["avg_waiting_time_120.csv"].splitlines()
        assert lines[0] == "alpha,avg_waiting_time" and len(lines) == 3
        assert lines[2] == "1.000000,0.000000"


def test_alpha_grid():
    assert len(alpha_grid()) == 11
    with pytest.raises(ValueError):
        alpha_grid(Fraction(3, 10))
