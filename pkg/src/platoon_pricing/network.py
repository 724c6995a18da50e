"""Hub graph, routes, trucks and scenario generation/loading.

All times are integer seconds.  Rates (``xi``, ``epsilon``) are exact
fractions of SEK per second.
"""

from __future__ import annotations

import hashlib
import heapq
import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .money import Number, fmt_exact, per_hour, to_fraction

FORMAT_VERSION = 1

# Values used in the Swedish-network experiment.
DEFAULT_XI = per_hour("57.5")
DEFAULT_EPSILON = per_hour(260)
DEFAULT_WAITING_BUDGET = Fraction(1, 10)
DEFAULT_START_WINDOW = (8 * 3600, 12 * 3600)
DEFAULT_MAX_TRIP = 9 * 3600
DEFAULT_N_HUBS = 84
DEFAULT_CONNECTIVITY = 3
DEFAULT_TRAVEL_TIME_RANGE = (1800, 14400)


class NetworkError(ValueError):
    """Base class for network and scenario problems."""


class ParseError(NetworkError):
    pass


class ValidationError(NetworkError):
    pass


class UnreachableError(NetworkError):
    pass


@dataclass(frozen=True)
class Hub:
    id: int
    label: str | None = None


@dataclass(frozen=True)
class RoadSegment:
    from_hub: int
    to_hub: int
    travel_time: int

    def __post_init__(self):
        if self.travel_time <= 0:
            raise ValidationError(
                f"segment {self.from_hub}->{self.to_hub}: travel_time must be > 0, "
                f"got {self.travel_time}"
            )

    @property
    def key(self) -> tuple[int, int]:
        return (self.from_hub, self.to_hub)


class RoadNetwork:
    """Directed hub graph with at most one segment per ordered hub pair."""

    def __init__(self, hubs: Iterable[Hub], segments: Iterable[RoadSegment]):
        hub_map: dict[int, Hub] = {}
        for hub in hubs:
            if not isinstance(hub.id, int) or hub.id < 0:
                raise ValidationError(f"hub id must be a non-negative integer, got {hub.id!r}")
            if hub.id in hub_map:
                raise ValidationError(f"duplicate hub id {hub.id}")
            hub_map[hub.id] = hub
        seg_map: dict[tuple[int, int], RoadSegment] = {}
        adj: dict[int, list[tuple[int, int]]] = {h: [] for h in hub_map}
        for seg in segments:
            for end in seg.key:
                if end not in hub_map:
                    raise ValidationError(
                        f"segment {seg.from_hub}->{seg.to_hub} references unknown hub {end}"
                    )
            if seg.from_hub == seg.to_hub:
                raise ValidationError(f"segment {seg.from_hub}->{seg.to_hub} is a self-loop")
            if seg.key in seg_map:
                raise ValidationError(f"duplicate segment {seg.from_hub}->{seg.to_hub}")
            seg_map[seg.key] = seg
            adj[seg.from_hub].append((seg.to_hub, seg.travel_time))
        self.hubs: Mapping[int, Hub] = MappingProxyType(dict(sorted(hub_map.items())))
        self.segments: Mapping[tuple[int, int], RoadSegment] = MappingProxyType(
            dict(sorted(seg_map.items()))
        )
        self._adj = {h: tuple(sorted(v)) for h, v in adj.items()}

    def __reduce__(self):
        # Proxies do not pickle; rebuild from the parts for worker processes.
        return RoadNetwork, (tuple(self.hubs.values()), tuple(self.segments.values()))

    def __repr__(self):
        return f"RoadNetwork({len(self.hubs)} hubs, {len(self.segments)} segments)"

    def __eq__(self, other):
        if not isinstance(other, RoadNetwork):
            return NotImplemented
        return dict(self.hubs) == dict(other.hubs) and dict(self.segments) == dict(other.segments)

    def __hash__(self):
        return hash(self.digest())

    def successors(self, hub: int) -> tuple[tuple[int, int], ...]:
        """``(to_hub, travel_time)`` pairs leaving ``hub``, sorted by hub id."""
        return self._adj[hub]

    def travel_time(self, from_hub: int, to_hub: int) -> int:
        try:
            return self.segments[(from_hub, to_hub)].travel_time
        except KeyError:
            raise ValidationError(f"no segment {from_hub}->{to_hub}") from None

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "hubs": [
                {"id": h.id} if h.label is None else {"id": h.id, "label": h.label}
                for h in self.hubs.values()
            ],
            "segments": [
                {"from": s.from_hub, "to": s.to_hub, "travel_time_s": s.travel_time}
                for s in self.segments.values()
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()


@dataclass(frozen=True)
class Route:
    """Ordered hubs of a trip plus the travel time of each traversed segment."""

    hub_sequence: tuple[int, ...]
    travel_times: tuple[int, ...]

    def __post_init__(self):
        if len(self.hub_sequence) < 2:
            raise ValidationError("a route needs at least two hubs")
        if len(set(self.hub_sequence)) != len(self.hub_sequence):
            raise ValidationError(f"route {list(self.hub_sequence)} repeats a hub")
        if len(self.travel_times) != len(self.hub_sequence) - 1:
            raise ValidationError("route needs one travel time per segment")
        if any(c <= 0 for c in self.travel_times):
            raise ValidationError("route travel times must be > 0")

    @classmethod
    def on(cls, network: RoadNetwork, hubs: Sequence[int]) -> "Route":
        hubs = tuple(int(h) for h in hubs)
        for h in hubs:
            if h not in network.hubs:
                raise ValidationError(f"route references unknown hub {h}")
        times = tuple(network.travel_time(u, v) for u, v in zip(hubs, hubs[1:]))
        return cls(hubs, times)

    @property
    def n_hubs(self) -> int:
        return len(self.hub_sequence)

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return tuple(zip(self.hub_sequence, self.hub_sequence[1:]))

    @property
    def free_flow_time(self) -> int:
        return sum(self.travel_times)

    def remaining_time(self, hub_index: int) -> int:
        """Free-flow time from the hub at ``hub_index`` to the destination."""
        return sum(self.travel_times[hub_index:])


@dataclass(frozen=True)
class Truck:
    id: int
    route: Route
    start_time: int
    deadline: int
    xi: Fraction
    epsilon: Fraction

    def __post_init__(self):
        object.__setattr__(self, "xi", to_fraction(self.xi))
        object.__setattr__(self, "epsilon", to_fraction(self.epsilon))
        if self.id < 0:
            raise ValidationError(f"truck id must be non-negative, got {self.id}")
        if self.xi < 0 or self.epsilon < 0:
            raise ValidationError(f"truck {self.id}: xi and epsilon must be >= 0")
        if self.deadline < self.start_time + self.route.free_flow_time:
            raise ValidationError(
                f"truck {self.id}: deadline {self.deadline} is earlier than the free-flow "
                f"arrival {self.start_time + self.route.free_flow_time}"
            )

    def free_flow_departures(self) -> list[int]:
        """Departure time from each non-terminal hub when never waiting."""
        out, t = [], self.start_time
        for c in self.route.travel_times:
            out.append(t)
            t += c
        return out


@dataclass(frozen=True)
class Scenario:
    network: RoadNetwork
    trucks: tuple[Truck, ...]
    seed: int = 0
    meta: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "trucks", tuple(self.trucks))
        ids = [t.id for t in self.trucks]
        if len(set(ids)) != len(ids):
            raise ValidationError("truck ids must be unique")
        for t in self.trucks:
            expected = Route.on(self.network, t.route.hub_sequence)
            if expected != t.route:
                raise ValidationError(f"truck {t.id}: route travel times disagree with network")

    @property
    def n_trucks(self) -> int:
        return len(self.trucks)

    def to_dict(self, network_ref: str | None = None) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "network": {"path": network_ref, "sha256": self.network.digest()},
            "seed": self.seed,
            "meta": dict(self.meta),
            "trucks": [
                {
                    "id": t.id,
                    "route": list(t.route.hub_sequence),
                    "start_time_s": t.start_time,
                    "deadline_s": t.deadline,
                    "xi_sek_per_s": fmt_exact(t.xi),
                    "epsilon_sek_per_s": fmt_exact(t.epsilon),
                }
                for t in self.trucks
            ],
        }

    def digest(self) -> str:
        payload = json.dumps(self.to_dict(None), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()


# --------------------------------------------------------------------- files


def _read_json(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: malformed JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: top level must be an object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ParseError(f"{path}: unsupported format_version {version!r}")
    return doc


def network_from_dict(doc: dict) -> RoadNetwork:
    hubs, segments = [], []
    for i, rec in enumerate(doc.get("hubs", [])):
        try:
            hubs.append(Hub(int(rec["id"]), rec.get("label")))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"hubs[{i}]: bad record {rec!r}") from exc
    for i, rec in enumerate(doc.get("segments", [])):
        try:
            frm, to, tt = rec["from"], rec["to"], rec["travel_time_s"]
        except (KeyError, TypeError) as exc:
            raise ParseError(f"segments[{i}]: bad record {rec!r}") from exc
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in (frm, to, tt)):
            raise ParseError(f"segments[{i}]: from/to/travel_time_s must be integers")
        try:
            segments.append(RoadSegment(frm, to, tt))
        except ValidationError as exc:
            raise ValidationError(f"segments[{i}]: {exc}") from None
    return RoadNetwork(hubs, segments)


def load_network(path) -> RoadNetwork:
    """Read and validate a network file."""
    return network_from_dict(_read_json(path))


def write_network(network: RoadNetwork, path) -> str:
    """Write ``network``; returns its sha256."""
    with open(path, "w") as fh:
        fh.write(network.dumps())
    return network.digest()


def write_scenario(scenario: Scenario, path, network_path=None) -> str:
    """Write ``scenario``; the network is referenced by a path relative to the file."""
    ref = None
    if network_path is not None:
        ref = os.path.relpath(os.path.abspath(network_path), os.path.dirname(os.path.abspath(path)))
    text = json.dumps(scenario.to_dict(ref), indent=1) + "\n"
    with open(path, "w") as fh:
        fh.write(text)
    return hashlib.sha256(text.encode()).hexdigest()


def scenario_from_dict(doc: dict, network: RoadNetwork) -> Scenario:
    ref = doc.get("network") or {}
    if ref.get("sha256") and ref["sha256"] != network.digest():
        raise ValidationError("scenario was generated on a different network (sha256 mismatch)")
    trucks = []
    for i, rec in enumerate(doc.get("trucks", [])):
        try:
            route = Route.on(network, rec["route"])
            trucks.append(
                Truck(
                    id=int(rec["id"]),
                    route=route,
                    start_time=int(rec["start_time_s"]),
                    deadline=int(rec["deadline_s"]),
                    xi=to_fraction(rec["xi_sek_per_s"]),
                    epsilon=to_fraction(rec["epsilon_sek_per_s"]),
                )
            )
        except KeyError as exc:
            raise ParseError(f"trucks[{i}]: missing field {exc}") from None
        except ValidationError as exc:
            raise ValidationError(f"trucks[{i}]: {exc}") from None
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"trucks[{i}]: bad record ({exc})") from None
    return Scenario(network, tuple(trucks), int(doc.get("seed", 0)), doc.get("meta") or {})


def load_scenario(path, network: RoadNetwork | None = None) -> Scenario:
    """Read a scenario; the referenced network is loaded unless given."""
    doc = _read_json(path)
    if network is None:
        ref = (doc.get("network") or {}).get("path")
        if not ref:
            raise ParseError(f"{path}: no network reference and no network supplied")
        net_path = os.path.join(os.path.dirname(os.path.abspath(path)), ref)
        if not os.path.exists(net_path):
            raise NetworkError(f"{path}: referenced network {net_path} does not exist")
        network = load_network(net_path)
    return scenario_from_dict(doc, network)


# ----------------------------------------------------------------- generation


def generate_network(
    n_hubs: int = DEFAULT_N_HUBS,
    connectivity: float = DEFAULT_CONNECTIVITY,
    travel_time_range: tuple[int, int] = DEFAULT_TRAVEL_TIME_RANGE,
    seed: int = 0,
) -> RoadNetwork:
    """Random strongly connected hub graph.

    A random Hamiltonian cycle guarantees strong connectivity; further arcs
    are drawn uniformly until the mean out-degree reaches ``connectivity``.
    """
    if n_hubs < 2:
        raise ValidationError("n_hubs must be >= 2")
    if connectivity < 1 or connectivity > n_hubs - 1:
        raise ValidationError(f"connectivity must be in [1, {n_hubs - 1}], got {connectivity}")
    lo, hi = (int(round(x)) for x in travel_time_range)
    if lo <= 0 or hi < lo:
        raise ValidationError(f"bad travel_time_range {travel_time_range}")

    rng = np.random.default_rng(seed)
    perm = [int(x) for x in rng.permutation(n_hubs)]
    arcs = {(perm[i], perm[(i + 1) % n_hubs]) for i in range(n_hubs)}
    n_arcs = max(len(arcs), int(round(connectivity * n_hubs)))
    free = [(u, v) for u in range(n_hubs) for v in range(n_hubs) if u != v and (u, v) not in arcs]
    extra = rng.choice(len(free), size=n_arcs - len(arcs), replace=False) if n_arcs > len(arcs) else []
    arcs.update(free[int(i)] for i in extra)

    ordered = sorted(arcs)
    times = rng.integers(lo, hi + 1, size=len(ordered))
    hubs = [Hub(i) for i in range(n_hubs)]
    segments = [RoadSegment(u, v, int(t)) for (u, v), t in zip(ordered, times)]
    return RoadNetwork(hubs, segments)


def shortest_routes_from(network: RoadNetwork, origin: int) -> dict[int, tuple[int, tuple[int, ...]]]:
    """Dijkstra from ``origin``: ``dest -> (cost, hub path)``.

    Heap entries are ordered by ``(cost, path)`` so equal-cost ties settle on
    the lexicographically smallest hub sequence.
    """
    if origin not in network.hubs:
        raise ValidationError(f"unknown hub {origin}")
    best: dict[int, tuple[int, tuple[int, ...]]] = {}
    heap = [(0, (origin,))]
    while heap:
        cost, path = heapq.heappop(heap)
        node = path[-1]
        if node in best:
            continue
        best[node] = (cost, path)
        for nxt, c in network.successors(node):
            if nxt not in best:
                heapq.heappush(heap, (cost + c, path + (nxt,)))
    return best


def shortest_route(network: RoadNetwork, origin: int, destination: int) -> Route:
    if destination not in network.hubs:
        raise ValidationError(f"unknown hub {destination}")
    if origin == destination:
        raise ValidationError("origin equals destination; a route needs at least two hubs")
    tree = shortest_routes_from(network, origin)
    if destination not in tree:
        raise UnreachableError(f"hub {destination} is unreachable from hub {origin}")
    return Route.on(network, tree[destination][1])


def generate_scenario(
    network: RoadNetwork,
    n_trucks: int,
    start_window: tuple[int, int] = DEFAULT_START_WINDOW,
    waiting_budget_fraction: Number = DEFAULT_WAITING_BUDGET,
    xi: Number = DEFAULT_XI,
    epsilon: Number = DEFAULT_EPSILON,
    max_trip_duration: int = DEFAULT_MAX_TRIP,
    seed: int = 0,
    redraw_limit: int = 1000,
) -> Scenario:
    """Draw ``n_trucks`` trips with uniform OD pairs and start times.

    The deadline is ``start + floor((1 + fraction) * free_flow)``.  OD pairs
    that are unreachable or whose free-flow trip exceeds
    ``max_trip_duration`` are redrawn.
    """
    if n_trucks < 1:
        raise ValidationError("n_trucks must be >= 1")
    frac = to_fraction(waiting_budget_fraction)
    if frac < 0:
        raise ValidationError("waiting_budget_fraction must be >= 0")
    w0, w1 = int(start_window[0]), int(start_window[1])
    if w1 < w0:
        raise ValidationError(f"empty start window {start_window}")
    hub_ids = list(network.hubs)
    if len(hub_ids) < 2:
        raise ValidationError("network too small to place distinct OD pairs")

    rng = np.random.default_rng(seed)
    trees: dict[int, dict] = {}
    trucks = []
    for tid in range(n_trucks):
        for _ in range(redraw_limit):
            o, d = (hub_ids[int(i)] for i in rng.choice(len(hub_ids), size=2, replace=False))
            if o not in trees:
                trees[o] = shortest_routes_from(network, o)
            hit = trees[o].get(d)
            if hit is not None and hit[0] <= max_trip_duration:
                break
        else:
            raise ValidationError(f"truck {tid}: redraw limit {redraw_limit} exceeded")
        route = Route.on(network, hit[1])
        start = int(rng.integers(w0, w1 + 1))
        budget = math.floor((1 + frac) * route.free_flow_time)
        trucks.append(Truck(tid, route, start, start + budget, to_fraction(xi), to_fraction(epsilon)))
    meta = {
        "start_window_s": [w0, w1],
        "waiting_budget_fraction": fmt_exact(frac),
        "max_trip_duration_s": int(max_trip_duration),
    }
    return Scenario(network, tuple(trucks), int(seed), meta)
