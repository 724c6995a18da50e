"""Charging and compensation rules for one platoon.

Followers each gain ``p_f``.  The provider keeps ``r_sf = alpha * p_f`` per
follower; what is left is split evenly over all ``n`` members, with the
leader's share collected from the followers as part of their fee.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .money import Number, to_fraction


class PricingError(ValueError):
    pass


@dataclass(frozen=True)
class PricingParams:
    alpha: Fraction

    def __post_init__(self):
        a = to_fraction(self.alpha)
        if not 0 <= a <= 1:
            raise PricingError(f"alpha must be in [0, 1], got {self.alpha}")
        object.__setattr__(self, "alpha", a)


@dataclass(frozen=True)
class PlatoonSettlement:
    n: int
    p_f: Fraction
    r_sf: Fraction
    r_cf: Fraction
    f_f: Fraction
    r_bar_t: Fraction
    r_c: Fraction
    r_f: Fraction
    f_total: Fraction
    leader_id: int
    follower_ids: tuple[int, ...]

    @property
    def money(self) -> tuple[Fraction, ...]:
        return (self.p_f, self.r_sf, self.r_cf, self.f_f, self.r_bar_t, self.r_c, self.r_f, self.f_total)

    @property
    def members(self) -> tuple[int, ...]:
        return (self.leader_id, *self.follower_ids)


def per_follower_benefit(xi: Number, travel_time: Number) -> Fraction:
    """Platooning benefit of one follower over a segment."""
    xi, travel_time = to_fraction(xi), to_fraction(travel_time)
    if xi < 0 or travel_time < 0:
        raise PricingError("xi and travel_time must be >= 0")
    return xi * travel_time


def provider_share(p_f: Number, params: PricingParams) -> Fraction:
    return params.alpha * to_fraction(p_f)


def service_fee(n: int, p_f: Number, params: PricingParams) -> Fraction:
    """Fee paid by each follower: provider share plus leader contribution."""
    if n < 2:
        raise PricingError(f"a platoon needs n >= 2, got {n}")
    p_f = to_fraction(p_f)
    r_sf = provider_share(p_f, params)
    return r_sf + (p_f - r_sf) / n


def settle(
    n: int,
    p_f: Number,
    params: PricingParams,
    leader_id: int,
    follower_ids: Sequence[int],
) -> PlatoonSettlement:
    if n < 2:
        raise PricingError(f"a platoon needs n >= 2, got {n}")
    follower_ids = tuple(follower_ids)
    if len(follower_ids) != n - 1:
        raise PricingError(f"expected {n - 1} followers, got {len(follower_ids)}")
    if leader_id in follower_ids or len(set(follower_ids)) != len(follower_ids):
        raise PricingError("leader and followers must be distinct trucks")
    p_f = to_fraction(p_f)
    if p_f < 0:
        raise PricingError("p_f must be >= 0")

    r_sf = provider_share(p_f, params)
    r_cf = (p_f - r_sf) / n
    r_bar_t = (n - 1) * r_cf
    f_f = r_sf + r_cf
    return PlatoonSettlement(
        n=n,
        p_f=p_f,
        r_sf=r_sf,
        r_cf=r_cf,
        f_f=f_f,
        r_bar_t=r_bar_t,
        r_c=r_bar_t,
        r_f=p_f - f_f,
        f_total=(n - 1) * r_sf,
        leader_id=leader_id,
        follower_ids=follower_ids,
    )
