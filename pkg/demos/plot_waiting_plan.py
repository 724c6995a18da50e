"""
Should a truck wait for a partner?
==================================

Truck 0 reaches hub 0 at t=0.  Truck 1 is predicted to leave the same hub
onto the same segment at t=20.  The planner weighs the platooning reward
against the cost of 20 s of waiting.
"""

from platoon_pricing import (
    Hub, PredictionStore, PricingParams, RoadNetwork, RoadSegment, Route, Truck,
    fmt_money, per_hour, solve_waiting_plan,
)

net = RoadNetwork([Hub(0), Hub(1), Hub(2)],
                  [RoadSegment(0, 1, 3600), RoadSegment(1, 2, 1800)])
xi, eps = per_hour("57.5"), per_hour(260)
me = Truck(0, Route.on(net, [0, 1, 2]), 0, 5400 + 360, xi, eps)
other = Truck(1, Route.on(net, [0, 1]), 20, 20 + 3600, xi, eps)

store = PredictionStore.zero_wait([me, other])

###############################################################################
# With a free service the wait pays off; at full price it never does.

for alpha in ("0", "0.5", "1"):
    trace = []
    plan = solve_waiting_plan(me, 0, 0, store, PricingParams(alpha), trace=trace.append)
    print(f"alpha={alpha}: waits={plan.waits} utility={fmt_money(plan.predicted_utility)} "
          f"candidates={trace[0]['candidates']}")
