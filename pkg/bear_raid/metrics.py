"""Per-day short-interest and volume ratios."""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np
import pandas as pd

from .const import (
    DEFAULT_ALT_UPTICK_INCLUSIVE,
    DEFAULT_ALT_UPTICK_THRESHOLD,
    DEFAULT_SHORT_LAG,
    DEFAULT_WINDOW,
    METRICS_HEADER,
    SCATTER_HEADER,
)
from .exceptions import MetricsError
from .helpers import exact, format_money, iso
from .types import DayMetrics, MarketDay, MarketSeries

_LOGGER = logging.getLogger(__name__)


def trailing_mean(
    values: Sequence[float], t: int, window: int = DEFAULT_WINDOW
) -> float | None:
    """Mean of the `window` values strictly before index t, or None in warm-up."""
    if window < 1:
        raise ValueError("window must be positive")
    if not 0 <= t < len(values):
        raise IndexError(t)
    if t < window:
        return None
    prior = values[t - window : t]
    if all(isinstance(value, (int, np.integer)) for value in prior):
        # Integer sums are exact; divide once
        return int(sum(int(value) for value in prior)) / window
    return float(np.mean(np.asarray(prior, dtype=float)))


def trailing_means(values: Sequence[int], window: int = DEFAULT_WINDOW) -> np.ndarray:
    """Vectorised trailing_mean over a whole integer series; NaN in warm-up."""
    data = np.asarray(values, dtype=np.int64)
    result = np.full(len(data), np.nan)
    if len(data) <= window:
        return result
    cumulative = np.concatenate(([0], np.cumsum(data)))
    sums = cumulative[window:-1] - cumulative[: len(data) - window]
    result[window:] = sums / window
    return result


def _ratio(change: int | None, volume: int) -> float | None:
    if change is None or volume == 0:
        return None
    return change / volume


def short_change_ratio(day: MarketDay) -> float | None:
    """R = change in short interest over the day's volume."""
    return _ratio(day.delta, day.volume)


def volume_ratio(
    series: MarketSeries, t: int, window: int = DEFAULT_WINDOW
) -> float | None:
    """Q = volume over its prior trailing mean."""
    mean = trailing_mean(series.volumes, t, window)
    if mean is None or mean == 0:
        return None
    return series.days[t].volume / mean


def level_ratio(
    series: MarketSeries, t: int, window: int = DEFAULT_WINDOW
) -> float | None:
    """Short interest over its prior trailing mean."""
    mean = trailing_mean(series.short_interest, t, window)
    if mean is None or mean == 0:
        return None
    return series.days[t].short_interest / mean


def adjusted_price_change(
    series: MarketSeries, t: int
) -> tuple[int, float] | None:
    """Dividend-adjusted close change in ticks and as a fraction of the prior close."""
    if t <= 0:
        return None
    previous = series.adjusted_close[t - 1]
    if previous == 0:
        raise MetricsError(f"adjusted close is zero before {series.days[t].date}")
    absolute = series.adjusted_close[t] - previous
    return absolute, absolute / previous


def alt_uptick_triggered(
    day: MarketDay,
    prev_close: int,
    threshold: float = DEFAULT_ALT_UPTICK_THRESHOLD,
    inclusive: bool = DEFAULT_ALT_UPTICK_INCLUSIVE,
) -> bool:
    """True when the day's raw low fell more than `threshold` below the prior raw close."""
    if prev_close <= 0:
        raise MetricsError("previous close must be positive")
    limit = prev_close * (1 - exact(threshold))
    if inclusive:
        return day.low <= limit
    return day.low < limit


def compute_metrics(
    series: MarketSeries,
    window: int = DEFAULT_WINDOW,
    short_lag: int = DEFAULT_SHORT_LAG,
    alt_uptick_threshold: float = DEFAULT_ALT_UPTICK_THRESHOLD,
    alt_uptick_inclusive: bool = DEFAULT_ALT_UPTICK_INCLUSIVE,
) -> list[DayMetrics]:
    """Compute every day's metrics.

    With a non-zero `short_lag` the change reported `short_lag` days later is
    attributed to day t's volume.
    """
    _LOGGER.debug("Computing metrics for %s (%s days)", series.ticker, len(series))
    volume_means = trailing_means(series.volumes, window)
    level_means = trailing_means(series.short_interest, window)
    metrics: list[DayMetrics] = []

    for t, day in enumerate(series.days):
        lagged = t + short_lag
        if 0 <= lagged < len(series):
            r_value = _ratio(series.days[lagged].delta, day.volume)
        else:
            r_value = None

        q_value = None
        if not np.isnan(volume_means[t]) and volume_means[t] > 0:
            q_value = day.volume / float(volume_means[t])

        level = None
        if not np.isnan(level_means[t]) and level_means[t] > 0:
            level = day.short_interest / float(level_means[t])

        change: tuple[int, float] | None = None
        triggered = False
        jump = None
        if t > 0:
            previous = series.days[t - 1]
            try:
                change = adjusted_price_change(series, t)
            except MetricsError as err:
                _LOGGER.warning("Price change undefined: %s", err)
            if previous.close > 0:
                triggered = alt_uptick_triggered(
                    day, previous.close, alt_uptick_threshold, alt_uptick_inclusive
                )
            if previous.volume > 0:
                jump = day.volume / previous.volume

        metrics.append(
            DayMetrics(
                date=day.date,
                R=r_value,
                Q=q_value,
                si_level_ratio=level,
                adj_price_change=None if change is None else change[0],
                adj_price_change_pct=None if change is None else change[1],
                alt_uptick_triggered=triggered,
                volume_jump=jump,
            )
        )

    return metrics


def _cell(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def metrics_csv(metrics: Sequence[DayMetrics]) -> str:
    """Serialize metrics with empty cells for undefined values."""
    rows = [
        {
            "date": iso(item.date),
            "R": _cell(item.R),
            "Q": _cell(item.Q),
            "si_level_ratio": _cell(item.si_level_ratio),
            "adj_change": (
                "" if item.adj_price_change is None else format_money(item.adj_price_change)
            ),
            "adj_change_pct": _cell(item.adj_price_change_pct),
            "alt_uptick": "true" if item.alt_uptick_triggered else "false",
        }
        for item in metrics
    ]
    frame = pd.DataFrame(rows, columns=list(METRICS_HEADER))
    return frame.to_csv(index=False, lineterminator="\n")


def scatter_csv(metrics: Sequence[DayMetrics]) -> str:
    """Volume ratio against short-change ratio for every scannable day."""
    rows = [
        {"date": iso(item.date), "Q": repr(item.Q), "R": repr(item.R)}
        for item in metrics
        if item.Q is not None and item.R is not None
    ]
    frame = pd.DataFrame(rows, columns=list(SCATTER_HEADER))
    return frame.to_csv(index=False, lineterminator="\n")
