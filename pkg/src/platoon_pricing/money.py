"""Exact money arithmetic.

Amounts are :class:`fractions.Fraction` throughout the engine so that the
settlement identities hold exactly; they are rounded to micro-SEK only when
written to text.
"""

from __future__ import annotations

from decimal import ROUND_HALF_EVEN, Decimal, localcontext
from fractions import Fraction
from typing import Union

Number = Union[int, float, str, Fraction, Decimal]

ZERO = Fraction(0)
MICRO = Decimal("0.000001")


def to_fraction(value: Number) -> Fraction:
    """Parse ``value`` exactly; floats go through their shortest repr."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not amounts")
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


def per_hour(amount: Number) -> Fraction:
    """Convert a per-hour rate to a per-second rate."""
    return to_fraction(amount) / 3600


def quantize(value: Fraction) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = 60
        d = Decimal(value.numerator) / Decimal(value.denominator)
        return d.quantize(MICRO, rounding=ROUND_HALF_EVEN)


def fmt_money(value: Fraction) -> str:
    """Render ``value`` with six decimals (1e-6 SEK resolution)."""
    q = quantize(value)
    if q == 0:
        q = abs(q)
    return f"{q:.6f}"


def fmt_exact(value: Fraction) -> str:
    """Lossless text form, ``"p/q"`` or ``"p"``."""
    return str(value)
