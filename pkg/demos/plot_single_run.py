"""
One simulated day on a synthetic network
========================================

Generate a hub network and a fleet, simulate with a fixed ``alpha`` and
inspect the resulting ledgers.
"""

from platoon_pricing import (
    PricingParams, avg_waiting_time, conservation_gap, deadline_violations,
    fmt_money, generate_network, generate_scenario, provider_profit, run,
)

net = generate_network(84, 3, (1800, 14400), seed=7)
scenario = generate_scenario(net, 100, seed=1)
result = run(scenario, PricingParams("0.3"))

gross, net_profit = provider_profit(result)
print(f"{len(result.settlements)} platoons, {result.events_processed} events")
print("provider gross", fmt_money(gross), "net", fmt_money(net_profit))
print("average wait (s)", float(avg_waiting_time(result)))

###############################################################################
# The books balance exactly and nobody is late.

assert conservation_gap(result) == 0
assert deadline_violations(result) == []

###############################################################################
# The five trucks that gained most from platooning:

best = sorted(result.trucks.values(), key=lambda led: led.net_profit, reverse=True)[:5]
for led in best:
    print(led.truck_id, fmt_money(led.net_profit), "waited", led.total_wait, "s")
