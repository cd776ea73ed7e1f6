"""Test fixtures for the bear_raid package."""

from __future__ import annotations

from datetime import date
from fractions import Fraction
import os
import sys
from typing import Callable, Sequence

import pandas as pd
import pytest

# Make parent directory available to tests
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from bear_raid.config import DetectorConfig, parse_synth_spec  # noqa: E402
from bear_raid.market_data import (  # noqa: E402
    build_series,
    parse_price_csv,
    parse_short_csv,
)
from bear_raid.metrics import compute_metrics  # noqa: E402
from bear_raid.synthetic import generate_background  # noqa: E402
from bear_raid.types import (  # noqa: E402
    Anomaly,
    BackgroundSpec,
    DayMetrics,
    MarketSeries,
)

# Event shaped like a one-day opening spike followed six trading days later by
# a mirror-image cover: 130M shares opened on 171M volume, 202M closed on 121M.
EVENT_START = date(2007, 8, 6)
EVENT_DAYS = 76
EVENT_OPEN_INDEX = 63
EVENT_COVER_INDEX = 69
EVENT_QUIET_VOLUME = 45_784_219
EVENT_BASE_SHORT = 63_650_000

PRICE_HEADER_LINE = "date,high,low,close,volume,dividend"
SHORT_HEADER_LINE = "date,total_short_interest,delta_short_interest"

_LATE_CLOSES = {
    64: "37.90",
    65: "36.80",
    66: "35.95",
    67: "35.10",
    68: "34.40",
    69: "33.64",
}


def _dollars(text: str, offset: float) -> str:
    return f"{float(text) + offset:.2f}"


def event_dates() -> list[date]:
    return [stamp.date() for stamp in pd.bdate_range(EVENT_START, periods=EVENT_DAYS)]


def event_csv_text() -> tuple[str, str]:
    """Price and short CSV text for the November raid event."""
    dates = event_dates()
    price_lines = [PRICE_HEADER_LINE]
    short_lines = [SHORT_HEADER_LINE]
    level = EVENT_BASE_SHORT

    for index, day in enumerate(dates):
        volume = EVENT_QUIET_VOLUME
        high, low, dividend = None, None, "0"
        if index < EVENT_OPEN_INDEX:
            close = "41.85"
        elif index == EVENT_OPEN_INDEX:
            close, high, low, dividend = "38.46", "41.00", "38.08", "0.54"
        else:
            close = _LATE_CLOSES.get(index, "34.00")

        if index == 62:
            volume, level = 73_000_000, 115_000_000
        elif index == EVENT_OPEN_INDEX:
            volume, level = 171_000_000, 245_000_000
        elif index == 65:
            volume, level = 100_000_000, 315_000_000
        elif index == EVENT_COVER_INDEX:
            volume, level = 121_000_000, 113_000_000

        high = high or _dollars(close, 0.40)
        low = low or _dollars(close, -0.40)
        price_lines.append(
            f"{day.isoformat()},{high},{low},{close},{volume},{dividend}"
        )
        short_lines.append(f"{day.isoformat()},{level},")

    return "\n".join(price_lines) + "\n", "\n".join(short_lines) + "\n"


def exhaustive_pairs(
    anomalies: Sequence[Anomaly], levels: Sequence[int], window: int, tolerance: float
) -> list[tuple[int, int]]:
    """Pair by listing every feasible (open, cover) pair, then applying the selection rule."""
    limit = Fraction(str(tolerance))
    opens = sorted(a.index for a in anomalies if a.kind == "open_spike")
    covers = sorted(a.index for a in anomalies if a.kind == "cover_spike")
    feasible = {
        (t0, tc): Fraction(abs(levels[tc] - levels[t0 - 1]), levels[t0 - 1])
        for t0 in opens
        for tc in covers
        if t0 >= 1 and levels[t0 - 1] > 0 and t0 < tc <= t0 + window
    }
    used: set[int] = set()
    pairs = []
    for t0 in opens:
        ranked = sorted(
            (gap, tc) for (o, tc), gap in feasible.items() if o == t0 and tc not in used
        )
        if ranked and ranked[0][0] <= limit:
            used.add(ranked[0][1])
            pairs.append((t0, ranked[0][1]))
    return pairs


@pytest.fixture
def event_csv() -> tuple[str, str]:
    """Price and short CSV text for the November raid event."""
    return event_csv_text()


@pytest.fixture
def event_series(event_csv: tuple[str, str]) -> MarketSeries:
    """The November raid event as an aligned series."""
    price_text, short_text = event_csv
    series, _ = build_series(
        parse_price_csv(price_text), parse_short_csv(short_text), "C"
    )
    return series


@pytest.fixture
def event_metrics(event_series: MarketSeries) -> list[DayMetrics]:
    """Metrics of the November raid event."""
    return compute_metrics(event_series)


@pytest.fixture
def detector_config() -> DetectorConfig:
    """Default detector configuration."""
    return DetectorConfig()


@pytest.fixture
def background_spec() -> Callable[..., BackgroundSpec]:
    """Factory for background specs with defaults filled in by the schema."""

    def _make(**overrides) -> BackgroundSpec:
        return parse_synth_spec({"background": overrides}).background

    return _make


@pytest.fixture
def quiet_series(background_spec) -> MarketSeries:
    """A 300-day synthetic background with nothing planted."""
    return generate_background(background_spec(seed=7, n_days=300))


@pytest.fixture
def write_inputs(tmp_path) -> Callable[[str, str], tuple[str, str]]:
    """Write price and short CSV text into the test directory."""

    def _write(price_text: str, short_text: str) -> tuple[str, str]:
        price_path = tmp_path / "price.csv"
        short_path = tmp_path / "short.csv"
        price_path.write_text(price_text, encoding="utf-8")
        short_path.write_text(short_text, encoding="utf-8")
        return str(price_path), str(short_path)

    return _write
