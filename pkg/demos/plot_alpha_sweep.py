"""
Sweeping the provider's share
=============================

The same fleet is simulated for ``alpha`` = 0, 0.1, ..., 1.  A large share
discourages waiting, so fewer platoons form; a small share leaves the
provider with little.  Provider profit therefore peaks in between.
"""

from platoon_pricing import alpha_grid, generate_network, generate_scenario, sweep

net = generate_network(84, 3, (1800, 14400), seed=7)
rows = sweep(generate_scenario(net, 200, seed=1), alpha_grid())

print(" alpha  provider  system   avg wait  platoons")
for r in rows:
    print(f"{float(r.alpha):6.1f} {float(r.provider_profit_net):9.2f} "
          f"{float(r.system_utility):8.2f} {float(r.avg_waiting_time):8.1f} {r.platoon_count:9d}")

peak = max(rows, key=lambda r: r.provider_profit_net)
print("provider profit peaks at alpha =", float(peak.alpha))
