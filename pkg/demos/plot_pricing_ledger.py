"""
Splitting one platoon's fuel saving
===================================

Three trucks share a one-hour segment.  The two followers save fuel, the
leader does not.  We look at how the saving is split between the trucks and
the service provider for a few values of ``alpha``.
"""

from platoon_pricing import PricingParams, fmt_money, per_follower_benefit, per_hour, settle

# 57.5 SEK/h for one hour behind another truck
p_f = per_follower_benefit(per_hour("57.5"), 3600)
print("benefit per follower:", fmt_money(p_f))

###############################################################################
# Every member ends up with the same net gain ``r_f``; the provider keeps
# ``f_total``.

for alpha in ("0", "0.2", "0.5", "1"):
    s = settle(3, p_f, PricingParams(alpha), leader_id=0, follower_ids=[1, 2])
    print(f"alpha={alpha:>3}  fee/follower={fmt_money(s.f_f):>10}  "
          f"member gain={fmt_money(s.r_f):>10}  provider={fmt_money(s.f_total):>10}")

###############################################################################
# Nothing is created or lost: followers' savings equal member gains plus fees.

s = settle(3, p_f, PricingParams("0.3"), 0, [1, 2])
assert 2 * s.p_f == 2 * s.r_f + s.r_c + s.f_total
