"""Deterministic discrete-event platooning simulation.

Events are ordered by time, then kind (arrivals before departures), then
truck id.  On arrival a truck gets a fresh waiting plan and only the wait at
the current hub is committed.  All departures at the same hub and instant
are settled together: trucks leaving onto the same segment form a platoon.
"""

from __future__ import annotations

import csv
import heapq
import io
import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .coordination import PredictionStore, solve_waiting_plan
from .money import ZERO, fmt_exact, fmt_money
from .network import FORMAT_VERSION, Scenario, Truck
from .pricing import PlatoonSettlement, PricingParams, per_follower_benefit, settle

ARRIVAL = 0
DEPARTURE = 1


@dataclass(frozen=True, order=True)
class Event:
    time: int
    kind: int
    truck_id: int
    hub_index: int


@dataclass
class TruckLedger:
    truck_id: int
    platoon_benefit_received: Fraction = ZERO
    fees_paid: Fraction = ZERO
    leader_compensation_received: Fraction = ZERO
    waiting_loss: Fraction = ZERO
    failed_wait_compensation_received: Fraction = ZERO
    realized_waits: dict[int, int] = field(default_factory=dict)
    arrival_times: dict[int, int] = field(default_factory=dict)
    platooned_edges: int = 0

    @property
    def platoon_profit(self) -> Fraction:
        return self.platoon_benefit_received - self.fees_paid + self.leader_compensation_received

    @property
    def net_profit(self) -> Fraction:
        return self.platoon_profit + self.failed_wait_compensation_received - self.waiting_loss

    @property
    def total_wait(self) -> int:
        return sum(self.realized_waits.values())


@dataclass
class ProviderLedger:
    gross_fee_income: Fraction = ZERO
    failed_wait_paid: Fraction = ZERO

    @property
    def net_profit(self) -> Fraction:
        return self.gross_fee_income - self.failed_wait_paid


@dataclass(frozen=True)
class SettlementRecord:
    platoon_id: int
    edge: tuple[int, int]
    departure_time: int
    settlement: PlatoonSettlement
    spontaneous: bool


@dataclass
class SimResult:
    scenario: Scenario
    params: PricingParams
    trucks: dict[int, TruckLedger]
    provider: ProviderLedger
    settlements: list[SettlementRecord]
    edge_traversals: int
    events_processed: int
    platoon_of: dict[tuple[int, int], int] = field(default_factory=dict)

    @property
    def n_trucks(self) -> int:
        return len(self.trucks)

    @property
    def platoon_count(self) -> int:
        return len(self.settlements)

    @property
    def platooned_traversals(self) -> int:
        return sum(r.settlement.n for r in self.settlements)


@dataclass
class SimState:
    scenario: Scenario
    params: PricingParams
    store: PredictionStore
    trucks: dict[int, Truck]
    ledgers: dict[int, TruckLedger]
    provider: ProviderLedger = field(default_factory=ProviderLedger)
    queue: list[Event] = field(default_factory=list)
    settlements: list[SettlementRecord] = field(default_factory=list)
    platoon_of: dict[tuple[int, int], int] = field(default_factory=dict)
    trace: Callable[[dict], None] | None = None
    events_processed: int = 0

    def push(self, event: Event) -> None:
        heapq.heappush(self.queue, event)


def leader_select(members: Iterable[tuple[int, int]]) -> int:
    """Pick the leader from ``(truck_id, hub_arrival_time)`` pairs.

    Earliest arrival leads; ties go to the smallest truck id.
    """
    members = list(members)
    if len(members) < 2:
        raise ValueError("a platoon needs at least two members")
    return min(members, key=lambda m: (m[1], m[0]))[0]


def on_arrival(state: SimState, truck: Truck, hub_index: int, time: int) -> None:
    ledger = state.ledgers[truck.id]
    ledger.arrival_times[hub_index] = time
    if hub_index == truck.route.n_hubs - 1:
        return
    plan = solve_waiting_plan(truck, hub_index, time, state.store, state.params, state.trace)
    state.store.set_departures(truck, hub_index, plan.departures)
    state.push(Event(time + plan.waits[0], DEPARTURE, truck.id, hub_index))


def on_departure_batch(state: SimState, hub: int, time: int, departing: Sequence[tuple[Truck, int]]) -> None:
    """Settle every truck leaving ``hub`` at ``time``; ``departing`` holds ``(truck, hub_index)``."""
    groups: dict[tuple[int, int], list[tuple[Truck, int]]] = {}
    for truck, h in departing:
        groups.setdefault(truck.route.edges[h], []).append((truck, h))

    for edge in sorted(groups):
        members = sorted(groups[edge], key=lambda m: m[0].id)
        waits = {}
        for truck, h in members:
            ledger = state.ledgers[truck.id]
            w = time - ledger.arrival_times[h]
            waits[truck.id] = w
            ledger.realized_waits[h] = w
            ledger.waiting_loss += truck.epsilon * w

        if len(members) == 1:
            truck, h = members[0]
            w = waits[truck.id]
            if w > 0:
                comp = truck.epsilon * w
                state.ledgers[truck.id].failed_wait_compensation_received += comp
                state.provider.failed_wait_paid += comp
        else:
            h_of = {t.id: h for t, h in members}
            leader = leader_select((t.id, state.ledgers[t.id].arrival_times[h]) for t, h in members)
            followers = [t.id for t, _ in members if t.id != leader]
            travel = members[0][0].route.travel_times[members[0][1]]
            # Heterogeneous rates: the platoon is priced at the smallest member rate.
            xi = min(t.xi for t, _ in members)
            s = settle(len(members), per_follower_benefit(xi, travel), state.params, leader, followers)
            pid = len(state.settlements)
            state.settlements.append(
                SettlementRecord(pid, edge, time, s, all(w == 0 for w in waits.values()))
            )
            for fid in followers:
                led = state.ledgers[fid]
                led.platoon_benefit_received += s.p_f
                led.fees_paid += s.f_f
            state.ledgers[leader].leader_compensation_received += s.r_c
            state.provider.gross_fee_income += s.f_total
            for t, _ in members:
                state.ledgers[t.id].platooned_edges += 1
                state.platoon_of[(t.id, h_of[t.id])] = pid

        for truck, h in members:
            state.push(Event(time + truck.route.travel_times[h], ARRIVAL, truck.id, h + 1))


def run(
    scenario: Scenario,
    params: PricingParams,
    trace: Callable[[dict], None] | None = None,
) -> SimResult:
    """Simulate every truck from its origin to its destination."""
    trucks = {t.id: t for t in scenario.trucks}
    state = SimState(
        scenario=scenario,
        params=params,
        store=PredictionStore.zero_wait(scenario.trucks),
        trucks=trucks,
        ledgers={tid: TruckLedger(tid) for tid in sorted(trucks)},
        trace=trace,
    )
    for t in scenario.trucks:
        state.push(Event(t.start_time, ARRIVAL, t.id, 0))

    q = state.queue
    while q:
        ev = heapq.heappop(q)
        state.events_processed += 1
        if ev.kind == ARRIVAL:
            on_arrival(state, trucks[ev.truck_id], ev.hub_index, ev.time)
            continue
        batch = [ev]
        while q and q[0].time == ev.time and q[0].kind == DEPARTURE:
            batch.append(heapq.heappop(q))
            state.events_processed += 1
        by_hub: dict[int, list[tuple[Truck, int]]] = {}
        for e in batch:
            t = trucks[e.truck_id]
            by_hub.setdefault(t.route.hub_sequence[e.hub_index], []).append((t, e.hub_index))
        for hub in sorted(by_hub):
            on_departure_batch(state, hub, ev.time, by_hub[hub])

    result = SimResult(
        scenario=scenario,
        params=params,
        trucks=state.ledgers,
        provider=state.provider,
        settlements=state.settlements,
        edge_traversals=sum(t.route.n_hubs - 1 for t in scenario.trucks),
        events_processed=state.events_processed,
        platoon_of=state.platoon_of,
    )
    return result


# ------------------------------------------------------------------- checks


def conservation_gap(result: SimResult) -> Fraction:
    """Truck platoon flows + provider fee income - total follower benefit (exactly 0)."""
    flows = sum((led.platoon_profit for led in result.trucks.values()), ZERO)
    benefit = sum(((r.settlement.n - 1) * r.settlement.p_f for r in result.settlements), ZERO)
    return flows + result.provider.gross_fee_income - benefit


def deadline_violations(result: SimResult) -> list[int]:
    out = []
    for t in result.scenario.trucks:
        arrived = result.trucks[t.id].arrival_times.get(t.route.n_hubs - 1)
        if arrived is None or arrived > t.deadline:
            out.append(t.id)
    return out


# ------------------------------------------------------------------- output


def _csv(rows: Iterable[Sequence], header: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


SETTLEMENT_COLUMNS = (
    "platoon_id", "edge", "departure_time", "n", "leader_id", "follower_ids",
    "p_f", "f_f", "r_f", "r_c", "f_total",
)
TRUCK_COLUMNS = (
    "truck_id", "platoon_benefit_received", "fees_paid", "leader_compensation_received",
    "waiting_loss", "failed_wait_compensation_received", "net_profit", "total_wait_s",
    "platooned_edges", "start_time", "arrival_time", "deadline",
)
WAIT_COLUMNS = ("truck_id", "hub_index", "hub_id", "arrival_time", "wait_s", "departure_time", "platoon_id")


def ledger_tables(result: SimResult) -> dict[str, str]:
    """Run ledgers rendered as ``filename -> text``."""
    settlements = _csv(
        (
            (
                r.platoon_id, f"{r.edge[0]}-{r.edge[1]}", r.departure_time, r.settlement.n,
                r.settlement.leader_id, ";".join(map(str, r.settlement.follower_ids)),
                fmt_money(r.settlement.p_f), fmt_money(r.settlement.f_f), fmt_money(r.settlement.r_f),
                fmt_money(r.settlement.r_c), fmt_money(r.settlement.f_total),
            )
            for r in result.settlements
        ),
        SETTLEMENT_COLUMNS,
    )
    truck_rows, wait_rows = [], []
    for t in result.scenario.trucks:
        led = result.trucks[t.id]
        last = t.route.n_hubs - 1
        truck_rows.append(
            (
                t.id, fmt_money(led.platoon_benefit_received), fmt_money(led.fees_paid),
                fmt_money(led.leader_compensation_received), fmt_money(led.waiting_loss),
                fmt_money(led.failed_wait_compensation_received), fmt_money(led.net_profit),
                led.total_wait, led.platooned_edges, t.start_time, led.arrival_times.get(last, ""),
                t.deadline,
            )
        )
        for h in range(last):
            arr = led.arrival_times[h]
            w = led.realized_waits[h]
            wait_rows.append(
                (t.id, h, t.route.hub_sequence[h], arr, w, arr + w, result.platoon_of.get((t.id, h), ""))
            )
    manifest = {
        "format_version": FORMAT_VERSION,
        "scenario_sha256": result.scenario.digest(),
        "network_sha256": result.scenario.network.digest(),
        "alpha": fmt_exact(result.params.alpha),
        "seed": result.scenario.seed,
        "n_trucks": result.n_trucks,
    }
    return {
        "settlements.csv": settlements,
        "trucks.csv": _csv(truck_rows, TRUCK_COLUMNS),
        "waits.csv": _csv(wait_rows, WAIT_COLUMNS),
        "manifest.json": json.dumps(manifest, indent=1, sort_keys=True) + "\n",
    }


def write_ledgers(result: SimResult, outdir) -> list[str]:
    os.makedirs(outdir, exist_ok=True)
    paths = []
    for name, text in ledger_tables(result).items():
        path = os.path.join(outdir, name)
        with open(path, "w") as fh:
            fh.write(text)
        paths.append(path)
    return paths
