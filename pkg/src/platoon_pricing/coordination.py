"""Provider-side waiting-time optimisation for one truck at one hub.

A truck's utility over its remaining trip is the sum of per-segment platoon
rewards minus a linear waiting loss.  Each segment reward depends only on
how many other trucks are predicted to leave the same hub onto the same
segment at the truck's departure instant.

Pruning lemma: at a hub reached at time ``a`` it is never worse to leave
either at ``a`` or exactly at some other truck's predicted departure.  Any
other departure time yields a lone segment (reward 0, the smallest possible)
and only delays later hubs, while the waiting loss depends on total waiting
alone; leaving at ``a`` and postponing the wait to the next hub reaches the
same later states at equal cost.  The search over this finite candidate set
is therefore exact, and is solved by backward recursion memoised on
``(hub_index, arrival_time)``.

Hub indices are 0-based positions on the truck's route; the last index is
the destination, where no decision is taken.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Sequence

from .money import ZERO, Number, to_fraction
from .network import Truck
from .pricing import PricingParams


class InfeasiblePlan(ValueError):
    """Waits (or an arrival) that cannot meet the truck's deadline."""


@dataclass(frozen=True)
class DeparturePrediction:
    truck_id: int
    hub_id: int
    next_edge: tuple[int, int]
    departure_time: int


class PredictionStore:
    """Predicted departure time of every truck at each of its route hubs.

    Entries for hubs a truck has already left stay in the store as the
    realised departure.
    """

    def __init__(self):
        self._pred: dict[tuple[int, int], DeparturePrediction] = {}
        self._by_edge: dict[tuple[int, int], dict[int, set[int]]] = {}

    @classmethod
    def zero_wait(cls, trucks: Iterable[Truck]) -> "PredictionStore":
        """Store in which every truck is expected never to wait."""
        store = cls()
        for t in trucks:
            store.set_departures(t, 0, t.free_flow_departures())
        return store

    def __len__(self):
        return len(self._pred)

    def __iter__(self) -> Iterator[DeparturePrediction]:
        return iter(sorted(self._pred.values(), key=lambda p: (p.truck_id, p.departure_time)))

    def get(self, truck_id: int, hub_id: int) -> DeparturePrediction | None:
        return self._pred.get((truck_id, hub_id))

    def set_departures(self, truck: Truck, from_index: int, departures: Sequence[int]) -> None:
        """Replace the truck's predictions at hub indices ``from_index`` onward."""
        edges = truck.route.edges[from_index:]
        if len(departures) != len(edges):
            raise ValueError("need one departure per remaining segment")
        for edge, dep in zip(edges, departures):
            key = (truck.id, edge[0])
            old = self._pred.get(key)
            if old is not None:
                slot = self._by_edge[edge][old.departure_time]
                slot.discard(truck.id)
                if not slot:
                    del self._by_edge[edge][old.departure_time]
            dep = int(dep)
            self._pred[key] = DeparturePrediction(truck.id, edge[0], edge, dep)
            self._by_edge.setdefault(edge, {}).setdefault(dep, set()).add(truck.id)

    def departures_onto(self, edge: tuple[int, int]) -> dict[int, set[int]]:
        """``departure_time -> truck ids`` predicted to leave onto ``edge``.

        Read-only view; callers must not mutate it.
        """
        return self._by_edge.get(edge, {})


@dataclass(frozen=True)
class WaitingPlan:
    truck_id: int
    solved_at_hub_index: int
    waits: tuple[int, ...]
    predicted_arrivals: tuple[int, ...]
    predicted_utility: Fraction

    @property
    def departures(self) -> tuple[int, ...]:
        return tuple(a + w for a, w in zip(self.predicted_arrivals, self.waits))


def partner_set(truck: Truck, hub_index: int, candidate_departure: int, store: PredictionStore) -> frozenset[int]:
    """Trucks predicted to leave with ``truck`` onto its next segment, itself included."""
    edge = truck.route.edges[hub_index]
    others = store.departures_onto(edge).get(candidate_departure, ())
    return frozenset(others) | {truck.id}


def edge_reward(xi: Number, alpha: Number, edge_travel_time: Number, platoon_size: int) -> Fraction:
    """Truck's kept share of the platoon benefit on one segment."""
    if platoon_size < 1:
        raise ValueError("platoon_size must be >= 1")
    xi, alpha, c = to_fraction(xi), to_fraction(alpha), to_fraction(edge_travel_time)
    return (1 - alpha) * xi * c * Fraction(platoon_size - 1, platoon_size)


def _arrivals(truck: Truck, k: int, arrival: int, waits: Sequence[int]) -> list[int]:
    times = truck.route.travel_times
    out = [arrival]
    for h, w in enumerate(waits):
        out.append(out[-1] + w + times[k + h])
    return out


def utility(
    truck: Truck,
    k: int,
    waits: Sequence[int],
    store: PredictionStore,
    params: PricingParams,
    arrival: int | None = None,
) -> Fraction:
    """Predicted reward minus waiting loss of following ``waits`` from hub ``k``.

    ``arrival`` defaults to the truck's zero-wait arrival at hub ``k``.
    """
    n_edges = truck.route.n_hubs - 1
    if not 0 <= k < n_edges:
        raise ValueError(f"hub index {k} has no outgoing segment")
    if len(waits) != n_edges - k:
        raise ValueError(f"expected {n_edges - k} waits, got {len(waits)}")
    if any(w < 0 for w in waits):
        raise InfeasiblePlan("waits must be >= 0")
    if arrival is None:
        arrival = truck.start_time + sum(truck.route.travel_times[:k])
    arr = _arrivals(truck, k, arrival, waits)
    if arr[-1] > truck.deadline:
        raise InfeasiblePlan(f"truck {truck.id}: arrival {arr[-1]} misses deadline {truck.deadline}")
    total = ZERO
    for h, w in enumerate(waits):
        n = len(partner_set(truck, k + h, arr[h] + w, store))
        total += edge_reward(truck.xi, params.alpha, truck.route.travel_times[k + h], n)
        total -= truck.epsilon * w
    return total


def candidate_departures(
    truck: Truck,
    hub_index: int,
    arrival: int,
    store: PredictionStore,
    deadline: int | None = None,
) -> list[int]:
    """Leave now, or exactly with another truck predicted to leave onto the same segment."""
    if deadline is None:
        deadline = truck.deadline
    latest = deadline - truck.route.remaining_time(hub_index)
    slots = store.departures_onto(truck.route.edges[hub_index])
    out = [arrival]
    for d in sorted(slots):
        if d > arrival and d <= latest and slots[d] - {truck.id}:
            out.append(d)
    return out


def solve_waiting_plan(
    truck: Truck,
    k: int,
    arrival: int,
    store: PredictionStore,
    params: PricingParams,
    trace: Callable[[dict], None] | None = None,
) -> WaitingPlan:
    """Utility-maximising waits at hubs ``k .. N-2`` given the current store.

    Among equally good plans the lexicographically smallest wait vector wins.
    """
    route = truck.route
    n_edges = route.n_hubs - 1
    if not 0 <= k < n_edges:
        raise ValueError(f"hub index {k} has no outgoing segment")
    if arrival + route.remaining_time(k) > truck.deadline:
        raise InfeasiblePlan(
            f"truck {truck.id}: arriving at hub index {k} at {arrival} cannot meet deadline {truck.deadline}"
        )

    times = route.travel_times
    eps, deadline = truck.epsilon, truck.deadline
    # Per hub: sorted alignment instants and the number of other trucks at each.
    slots: list[tuple[list[int], dict[int, int]]] = []
    latest: list[int] = []
    for h in range(n_edges):
        raw = store.departures_onto(route.edges[h]) if h >= k else {}
        counts = {}
        for d, ids in raw.items():
            c = len(ids) - (truck.id in ids)
            if c:
                counts[d] = c
        slots.append((sorted(counts), counts))
        latest.append(deadline - route.remaining_time(h))
    rewards: dict[tuple[int, int], Fraction] = {}

    def reward(h: int, n: int) -> Fraction:
        key = (h, n)
        if key not in rewards:
            rewards[key] = edge_reward(truck.xi, params.alpha, times[h], n)
        return rewards[key]

    memo: dict[tuple[int, int], tuple[Fraction, tuple[int, ...]]] = {}
    seen: dict[int, set[int]] = {} if trace else None

    def best(h: int, a: int) -> tuple[Fraction, tuple[int, ...]]:
        if h == n_edges:
            return ZERO, ()
        key = (h, a)
        hit = memo.get(key)
        if hit is not None:
            return hit
        order, counts = slots[h]
        cands = [a]
        cands.extend(order[bisect_right(order, a): bisect_right(order, latest[h])])
        if seen is not None:
            seen.setdefault(h, set()).update(cands)
        best_val, best_waits = None, None
        for d in cands:
            sub_val, sub_waits = best(h + 1, d + times[h])
            val = reward(h, 1 + counts.get(d, 0)) - eps * (d - a) + sub_val
            if best_val is None or val > best_val:
                best_val, best_waits = val, (d - a,) + sub_waits
        memo[key] = (best_val, best_waits)
        return best_val, best_waits

    value, waits = best(k, arrival)
    arrivals = tuple(_arrivals(truck, k, arrival, waits))
    plan = WaitingPlan(truck.id, k, waits, arrivals, value)
    if trace is not None:
        trace(
            {
                "truck_id": truck.id,
                "hub_index": k,
                "arrival": arrival,
                "candidates": {str(route.hub_sequence[h]): sorted(v) for h, v in sorted(seen.items())},
                "dp_states": len(memo),
                "waits": list(waits),
                "utility": str(value),
            }
        )
    return plan
