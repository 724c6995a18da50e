from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from platoon_pricing.coordination import PredictionStore, candidate_departures, utility
from platoon_pricing.network import Hub, RoadNetwork, RoadSegment, Route, Scenario, Truck

XI = Fraction(575, 36000)  # 57.5 SEK per hour
EPS = Fraction(260, 3600)

_acceptance_lines = []


@pytest.fixture
def acceptance_log():
    return _acceptance_lines


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in _acceptance_lines:
        terminalreporter.write_line(line)


def make_network(segments, n_hubs=None):
    ids = {h for s in segments for h in s[:2]}
    if n_hubs is not None:
        ids |= set(range(n_hubs))
    return RoadNetwork([Hub(i) for i in sorted(ids)], [RoadSegment(u, v, c) for u, v, c in segments])


def make_truck(network, tid, hubs, start=0, slack=0, deadline=None, xi=XI, eps=EPS):
    route = Route.on(network, hubs)
    if deadline is None:
        deadline = start + route.free_flow_time + slack
    return Truck(tid, route, start, deadline, xi, eps)


# ------------------------------------------------------------------ oracles


def brute_force_plan(truck, k, arrival, store, params):
    """Best wait vector by enumerating every candidate-departure sequence.

    Evaluates each sequence with the direct utility formula; returns
    ``(value, waits)`` with the lexicographically smallest waits among ties.
    """
    times = truck.route.travel_times
    n_edges = truck.route.n_hubs - 1
    plans = []

    def walk(h, a, waits):
        if h == n_edges:
            plans.append(tuple(waits))
            return
        for d in candidate_departures(truck, h, a, store):
            walk(h + 1, d + times[h], waits + [d - a])

    walk(k, arrival, [])
    scored = [(utility(truck, k, w, store, params, arrival=arrival), w) for w in plans]
    best = max(v for v, _ in scored)
    return best, min(w for v, w in scored if v == best)


def grid_search_plan(truck, k, arrival, store, params):
    """Best plan over every integer wait vector that meets the deadline."""
    n_edges = truck.route.n_hubs - 1
    budget = truck.deadline - arrival - truck.route.remaining_time(k)
    best = None
    for waits in product(range(budget + 1), repeat=n_edges - k):
        if sum(waits) > budget:
            continue
        v = utility(truck, k, waits, store, params, arrival=arrival)
        if best is None or v > best[0]:
            best = (v, waits)
    return best


def random_micro_instance(rng, max_trucks=5, max_route_hubs=4, budget=40):
    """Small network, trucks and a perturbed prediction store.

    Travel times and start times are drawn from coarse grids so that
    alignment opportunities are frequent.
    """
    n_hubs = int(rng.integers(3, 6))
    segs = {}
    for u in range(n_hubs):
        for v in range(n_hubs):
            if u != v and rng.random() < 0.6:
                segs[(u, v)] = int(rng.choice([10, 20, 30]))
    for i in range(n_hubs):
        segs.setdefault((i, (i + 1) % n_hubs), int(rng.choice([10, 20, 30])))
    net = make_network([(u, v, c) for (u, v), c in segs.items()])

    def random_path():
        for _ in range(50):
            length = int(rng.integers(2, max_route_hubs + 1))
            path = [int(rng.integers(n_hubs))]
            while len(path) < length:
                nxt = [v for (u, v) in segs if u == path[-1] and v not in path]
                if not nxt:
                    break
                path.append(int(rng.choice(nxt)))
            if len(path) >= 2:
                return path
        return [0, 1 % n_hubs]

    n_trucks = int(rng.integers(2, max_trucks + 1))
    xi = Fraction(int(rng.integers(1, 10)), 10)
    eps = Fraction(int(rng.integers(0, 5)), 100)
    first = random_path()
    trucks = [make_truck(net, 0, first, start=int(rng.integers(0, 4)) * 10,
                         slack=int(rng.integers(0, budget + 1)), xi=xi, eps=eps)]
    for i in range(1, n_trucks):
        if len(first) >= 2 and rng.random() < 0.6:
            # Share a stretch of the first truck's route, passing by close in time.
            a = int(rng.integers(0, len(first) - 1))
            b = int(rng.integers(a + 2, len(first) + 1))
            path = first[a:b]
            near = trucks[0].start_time + sum(trucks[0].route.travel_times[:a])
            start = max(0, near + int(rng.integers(-10, budget + 1)))
        else:
            path, start = random_path(), int(rng.integers(0, 4)) * 10
        trucks.append(make_truck(net, i, path, start=start, slack=int(rng.integers(0, budget + 1)),
                                 xi=xi, eps=eps))
    store = PredictionStore.zero_wait(trucks)
    for t in trucks[1:]:
        extra = int(rng.integers(0, t.deadline - t.start_time - t.route.free_flow_time + 1))
        deps, clock = [], t.start_time
        for h, c in enumerate(t.route.travel_times):
            w = extra if h == int(rng.integers(t.route.n_hubs - 1)) else 0
            clock += w
            deps.append(clock)
            clock += c
        if clock <= t.deadline:
            store.set_departures(t, 0, deps)
    me = trucks[0]
    k = int(rng.integers(0, me.route.n_hubs - 1))
    earliest = me.start_time + sum(me.route.travel_times[:k])
    latest = me.deadline - me.route.remaining_time(k)
    arrival = int(rng.integers(earliest, latest + 1))
    return me, k, arrival, store, Scenario(net, tuple(trucks))
