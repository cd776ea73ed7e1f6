"""Helper functions for Bear Raid Detection."""

from __future__ import annotations

from datetime import date
from decimal import ROUND_HALF_EVEN, Decimal, InvalidOperation
from fractions import Fraction
import json
import math
from typing import Any

from .const import TICKS_PER_CENT, TICKS_PER_DOLLAR


FLOAT_SIGNIFICANT_DIGITS = 12


def format_float(value: float | None) -> float | None:
    """Round a float to a stable number of significant digits for reports."""
    if value is None:
        return None
    try:
        value = float(value)
    except (ValueError, TypeError):
        return None
    if not math.isfinite(value):
        return None
    return float(f"{value:.{FLOAT_SIGNIFICANT_DIGITS}g}")


def exact(value: float | int | str) -> Fraction:
    """Return the exact rational a decimal literal denotes (0.1 -> 1/10)."""
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(str(value))


def parse_money(text: str) -> int:
    """Parse a decimal dollar amount into ticks, rounding half-even."""
    try:
        amount = Decimal(text.strip())
    except InvalidOperation as err:
        raise ValueError(f"not a decimal amount: {text!r}") from err
    if not amount.is_finite():
        raise ValueError(f"not a finite amount: {text!r}")
    ticks = (amount * TICKS_PER_DOLLAR).quantize(Decimal(1), rounding=ROUND_HALF_EVEN)
    return int(ticks)


def dollars_to_ticks(value: float) -> int:
    """Convert a float dollar amount to ticks."""
    return parse_money(repr(float(value)))


def format_money(ticks: int) -> str:
    """Format ticks as dollars with at least two decimals."""
    text = f"{Decimal(ticks) / TICKS_PER_DOLLAR:.4f}"
    while text.endswith("0") and len(text.split(".")[1]) > 2:
        text = text[:-1]
    return text


def ticks_to_cents(ticks: int) -> int:
    """Convert an aggregate amount in ticks to whole cents, rounding half-even."""
    cents = (Decimal(ticks) / TICKS_PER_CENT).quantize(
        Decimal(1), rounding=ROUND_HALF_EVEN
    )
    return int(cents)


def format_cents(cents: int) -> str:
    """Format an integer amount of cents as dollars."""
    return f"{Decimal(cents) / 100:.2f}"


def iso(day: date) -> str:
    """Format a date as ISO-8601."""
    return day.isoformat()


def parse_date(text: str) -> date:
    """Parse an ISO-8601 date."""
    return date.fromisoformat(text.strip())


def dump_json(payload: Any) -> str:
    """Serialize a payload canonically so identical inputs give identical bytes."""
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"
