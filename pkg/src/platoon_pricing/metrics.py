"""Aggregate metrics over simulation results and alpha sweeps."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, fields
from fractions import Fraction
from typing import Iterable, Sequence

from .money import ZERO, Number, fmt_money, to_fraction
from .network import Scenario
from .pricing import PricingParams
from .sim import SimResult, run


@dataclass(frozen=True)
class SweepRow:
    n_trucks: int
    alpha: Fraction
    provider_profit_gross: Fraction
    provider_profit_net: Fraction
    system_utility: Fraction
    avg_truck_profit: Fraction
    avg_waiting_time: Fraction
    platooning_rate: Fraction
    spontaneous_platoon_count: int
    platoon_count: int = 0
    spontaneous_fee_income: Fraction = ZERO


SWEEP_COLUMNS = tuple(f.name for f in fields(SweepRow))


def provider_profit(result: SimResult) -> tuple[Fraction, Fraction]:
    """``(gross, net)``; net deducts failed-wait payouts, leader compensation is excluded."""
    gross = sum((r.settlement.f_total for r in result.settlements), ZERO)
    return gross, gross - result.provider.failed_wait_paid


def system_utility(result: SimResult) -> Fraction:
    trucks = sum((led.net_profit for led in result.trucks.values()), ZERO)
    return trucks + provider_profit(result)[1]


def avg_truck_profit(result: SimResult) -> Fraction:
    if not result.trucks:
        raise ValueError("no trucks")
    return sum((led.net_profit for led in result.trucks.values()), ZERO) / len(result.trucks)


def avg_waiting_time(result: SimResult) -> Fraction:
    if not result.trucks:
        raise ValueError("no trucks")
    return Fraction(sum(led.total_wait for led in result.trucks.values()), len(result.trucks))


def platooning_rate(result: SimResult) -> Fraction:
    """Share of segment traversals driven inside a platoon."""
    if result.edge_traversals == 0:
        return ZERO
    return Fraction(result.platooned_traversals, result.edge_traversals)


def summarize(result: SimResult) -> SweepRow:
    gross, net = provider_profit(result)
    spont = [r for r in result.settlements if r.spontaneous]
    return SweepRow(
        n_trucks=result.n_trucks,
        alpha=result.params.alpha,
        provider_profit_gross=gross,
        provider_profit_net=net,
        system_utility=system_utility(result),
        avg_truck_profit=avg_truck_profit(result),
        avg_waiting_time=avg_waiting_time(result),
        platooning_rate=platooning_rate(result),
        spontaneous_platoon_count=len(spont),
        platoon_count=result.platoon_count,
        spontaneous_fee_income=sum((r.settlement.f_total for r in spont), ZERO),
    )


def _run_one(args):
    scenario, alpha = args
    return run(scenario, PricingParams(alpha))


def sweep_results(scenario: Scenario, alphas: Sequence[Number], jobs: int = 1) -> list[SimResult]:
    """One run per alpha on the same frozen scenario, ordered by alpha."""
    if not alphas:
        raise ValueError("alphas must be non-empty")
    grid = sorted({to_fraction(a) for a in alphas})
    for a in grid:
        PricingParams(a)
    work = [(scenario, a) for a in grid]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_one, work))
    return [_run_one(w) for w in work]


def sweep(scenario: Scenario, alphas: Sequence[Number], jobs: int = 1) -> list[SweepRow]:
    return [summarize(r) for r in sweep_results(scenario, alphas, jobs)]


def alpha_grid(step: Number = Fraction(1, 10)) -> list[Fraction]:
    step = to_fraction(step)
    n = int(1 / step)
    if n * step != 1:
        raise ValueError("step must divide 1")
    return [i * step for i in range(n + 1)]


# ------------------------------------------------------------------ tables


def _cell(value) -> str:
    if isinstance(value, Fraction):
        return fmt_money(value)
    return str(value)


def sweep_table(rows: Iterable[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for row in rows:
        w.writerow([_cell(v) for v in astuple(row)])
    return buf.getvalue()


PLOT_METRICS = (
    "provider_profit_gross",
    "provider_profit_net",
    "system_utility",
    "avg_truck_profit",
    "avg_waiting_time",
    "platooning_rate",
)


def plot_tables(rows: Iterable[SweepRow]) -> dict[str, str]:
    """Two-column ``alpha,<metric>`` files, one per metric and fleet size."""
    by_size: dict[int, list[SweepRow]] = {}
    for row in rows:
        by_size.setdefault(row.n_trucks, []).append(row)
    out = {}
    for size in sorted(by_size):
        series = sorted(by_size[size], key=lambda r: r.alpha)
        for metric in PLOT_METRICS:
            lines = [f"alpha,{metric}"]
            lines += [f"{_cell(r.alpha)},{_cell(getattr(r, metric))}" for r in series]
            out[f"{metric}_{size}.csv"] = "\n".join(lines) + "\n"
    return out


def read_sweep_table(path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if rows and set(rows[0]) != set(SWEEP_COLUMNS):
        raise ValueError(f"{path}: unexpected columns {sorted(rows[0])}")
    return rows
