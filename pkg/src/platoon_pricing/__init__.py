"""Hub-based truck platooning with a third-party coordination provider."""

from .coordination import (
    DeparturePrediction,
    InfeasiblePlan,
    PredictionStore,
    WaitingPlan,
    candidate_departures,
    edge_reward,
    partner_set,
    solve_waiting_plan,
    utility,
)
from .metrics import (
    SweepRow,
    alpha_grid,
    avg_truck_profit,
    avg_waiting_time,
    platooning_rate,
    provider_profit,
    summarize,
    sweep,
    system_utility,
)
from .money import fmt_money, per_hour
from .network import (
    Hub,
    RoadNetwork,
    RoadSegment,
    Route,
    Scenario,
    Truck,
    generate_network,
    generate_scenario,
    load_network,
    load_scenario,
    shortest_route,
    write_network,
    write_scenario,
)
from .pricing import (
    PlatoonSettlement,
    PricingParams,
    per_follower_benefit,
    provider_share,
    service_fee,
    settle,
)
from .sim import SimResult, conservation_gap, deadline_violations, leader_select, run, write_ledgers

__version__ = "0.1.0"
