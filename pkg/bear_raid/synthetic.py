"""Seeded synthetic market series with planted raids, the ground truth for the detector."""

from __future__ import annotations

from dataclasses import replace
import logging
import math
from typing import Any, Sequence

import numpy as np
import pandas as pd
from scipy import optimize

from .const import DEFAULT_WINDOW, SCHEMA_GROUND_TRUTH, TICKS_PER_CENT
from .exceptions import SyntheticError
from .helpers import dollars_to_ticks, format_float, iso
from .market_data import back_adjust, reconcile_deltas
from .metrics import trailing_mean
from .types import (
    BackgroundSpec,
    BanSpec,
    GroundTruthEvent,
    LaplaceDist,
    MarketDay,
    MarketSeries,
    PowerLawTail,
    PriceBar,
    RaidSpec,
    SamplingDistribution,
    ShortRecord,
    SynthSpec,
)

_LOGGER = logging.getLogger(__name__)

# Uniform draws are kept strictly inside (0, 1)
_U_LOW = np.nextafter(0.0, 1.0)
_U_HIGH = np.nextafter(1.0, 0.0)


def _uniform(rng: np.random.Generator, n: int) -> np.ndarray:
    return np.clip(rng.random(n), _U_LOW, _U_HIGH)


def _check_distribution(distribution: SamplingDistribution) -> None:
    if isinstance(distribution, PowerLawTail):
        if distribution.alpha >= 0 or distribution.x_min <= 0 or distribution.c <= 0:
            raise SyntheticError(
                f"power-law tail needs alpha < 0, x_min > 0 and c > 0: {distribution}"
            )
    elif isinstance(distribution, LaplaceDist):
        if distribution.gamma <= 0 or not math.isfinite(distribution.beta):
            raise SyntheticError(f"Laplace scale must be positive: {distribution}")
    else:
        raise SyntheticError(f"unknown distribution {distribution!r}")


def _laplace_inverse(u: np.ndarray, beta: float, gamma: float) -> np.ndarray:
    centred = u - 0.5
    return beta - gamma * np.sign(centred) * np.log(1.0 - 2.0 * np.abs(centred))


def _draw(
    rng: np.random.Generator, distribution: SamplingDistribution, n: int
) -> np.ndarray:
    u = _uniform(rng, n)
    if isinstance(distribution, PowerLawTail):
        # Tail conditional on x >= x_min: survival (x / x_min) ** alpha
        return distribution.x_min * np.power(u, 1.0 / distribution.alpha)
    return _laplace_inverse(u, distribution.beta, distribution.gamma)


def sample_tail(distribution: SamplingDistribution, n: int, seed: int) -> list[float]:
    """Draw n i.i.d. samples by inverse-CDF transform of a seeded stream."""
    if n < 1:
        raise SyntheticError(f"sample count must be at least 1, got {n}")
    _check_distribution(distribution)
    rng = np.random.default_rng(seed)
    return [float(x) for x in _draw(rng, distribution, n)]


def splice_point(body: LaplaceDist, c: float, alpha: float) -> float:
    """Where the Laplace upper survival meets c * x**alpha, above the body's peak."""
    _check_distribution(body)
    if c <= 0 or alpha >= 0:
        raise SyntheticError(
            f"power-law tail needs c > 0 and alpha < 0, got c={c}, alpha={alpha}"
        )

    def gap(x: float) -> float:
        # log Laplace survival minus log power-law survival
        return (
            math.log(0.5)
            - (x - body.beta) / body.gamma
            - math.log(c)
            - alpha * math.log(x)
        )

    lower = max(-alpha * body.gamma, body.beta, np.finfo(float).tiny)
    if gap(lower) <= 0:
        raise SyntheticError("power-law tail lies above the Laplace body everywhere")
    upper = lower * 2 + body.gamma
    while gap(upper) > 0:
        upper *= 2
        if upper > 1e12:
            raise SyntheticError("power-law tail never meets the Laplace body")
    return float(optimize.brentq(gap, lower, upper))


def sample_mixed_r(
    rng: np.random.Generator, n: int, body: LaplaceDist, c: float, alpha: float
) -> np.ndarray:
    """Laplace body with a power-law upper tail beyond the splice point.

    The CDF is continuous: above the splice the survival is c * x**alpha.
    """
    x_splice = splice_point(body, c, alpha)
    tail_mass = c * x_splice**alpha
    u = _uniform(rng, n)
    survival = 1.0 - u
    in_tail = survival <= tail_mass
    values = _laplace_inverse(u, body.beta, body.gamma)
    values[in_tail] = np.power(survival[in_tail] / c, 1.0 / alpha)
    return values


def _validate_background(spec: BackgroundSpec) -> None:
    if spec.n_days < DEFAULT_WINDOW + 1:
        raise SyntheticError(
            f"n_days must cover one {DEFAULT_WINDOW}-day warm-up plus a scannable day"
        )
    if spec.mean_volume <= 0 or spec.base_short_interest < 0:
        raise SyntheticError("mean_volume must be positive and base_short_interest >= 0")
    if spec.volume_tail_alpha >= -1:
        raise SyntheticError("volume_tail_alpha must be below -1 for a finite mean")
    if spec.price_start <= 0 or spec.daily_volatility < 0:
        raise SyntheticError("price_start must be positive and daily_volatility >= 0")
    if not 0 <= spec.volume_tail_weight <= 1 or spec.volume_tail_x_min <= 0:
        raise SyntheticError("volume tail weight must be in [0, 1] with positive x_min")
    if spec.volume_body_sigma < 0:
        raise SyntheticError("volume_body_sigma must be non-negative")


def _to_ticks(dollars: np.ndarray) -> list[int]:
    return [dollars_to_ticks(round(float(value), 2)) for value in dollars]


def _accumulate(start: int, deltas: Sequence[int]) -> list[int]:
    """Running short interest from a starting level, floored at zero."""
    levels = [start]
    for delta in deltas:
        levels.append(max(0, levels[-1] + int(delta)))
    return levels


def _assemble(
    ticker: str,
    dates: Sequence[Any],
    bars: Sequence[PriceBar],
    levels: Sequence[int],
) -> MarketSeries:
    shorts = reconcile_deltas(
        [
            ShortRecord(date=day, total_short_interest=int(level))
            for day, level in zip(dates, levels)
        ]
    )
    return MarketSeries(
        ticker=ticker,
        days=tuple(MarketDay(bar, short) for bar, short in zip(bars, shorts)),
        adjusted_close=back_adjust(bars),
    )


def generate_background(spec: BackgroundSpec) -> MarketSeries:
    """Generate a quiet series with the configured background statistics.

    Draw order from the seeded stream is fixed: volume body, tail selector,
    tail values, R, closes, intraday band.
    """
    _validate_background(spec)
    rng = np.random.default_rng(spec.seed)
    n = spec.n_days

    sigma = spec.volume_body_sigma
    body = rng.lognormal(mean=-(sigma**2) / 2, sigma=sigma, size=n)
    in_tail = rng.random(n) < spec.volume_tail_weight
    tail = spec.volume_tail_x_min * np.power(
        _uniform(rng, n), 1.0 / spec.volume_tail_alpha
    )
    multiplier = np.where(in_tail, tail, body)
    volumes = np.maximum(1, np.rint(spec.mean_volume * multiplier)).astype(np.int64)

    r_values = sample_mixed_r(
        rng,
        n,
        LaplaceDist(*spec.r_laplace),
        *spec.r_positive_tail,
    )
    raw_deltas = np.rint(r_values * volumes).astype(np.int64)
    levels = _accumulate(spec.base_short_interest, raw_deltas[1:])

    steps = rng.standard_normal(n)
    steps[0] = 0.0
    closes = spec.price_start * np.exp(np.cumsum(spec.daily_volatility * steps))
    band = 1.0 + spec.daily_volatility * np.abs(rng.standard_normal(n))
    highs = closes * band
    lows = closes / band

    dates = [stamp.date() for stamp in pd.bdate_range(start=spec.start_date, periods=n)]
    bars = [
        PriceBar(day, high, low, close, int(volume))
        for day, high, low, close, volume in zip(
            dates, _to_ticks(highs), _to_ticks(lows), _to_ticks(closes), volumes
        )
    ]
    _LOGGER.debug("Generated %s background days for %s (seed %s)", n, spec.ticker, spec.seed)
    return _assemble(spec.ticker, dates, bars, levels)


def _scale_ticks(ticks: int, factor: float) -> int:
    return int(round(ticks * factor / TICKS_PER_CENT)) * TICKS_PER_CENT


def inject_raid(
    series: MarketSeries, raid: RaidSpec
) -> tuple[MarketSeries, GroundTruthEvent]:
    """Plant an opening spike and its cover into a series.

    Volumes change only on the two event days. Short interest is re-accumulated
    forward from the open and prices from the open onward are scaled so the
    open-day close sits `price_drop_pct` below the prior close.
    """
    n = len(series)
    t_open = raid.open_day
    t_cover = raid.open_day + raid.separation
    if t_open < DEFAULT_WINDOW:
        raise SyntheticError(
            f"raid at day {t_open} overlaps the {DEFAULT_WINDOW}-day warm-up"
        )
    if raid.separation < 1 or t_cover >= n:
        raise SyntheticError(f"cover day {t_cover} is outside the series (n={n})")

    volumes = list(series.volumes)
    levels = list(series.short_interest)
    deltas = [day.delta or 0 for day in series.days]

    mean = trailing_mean(volumes, t_open)
    volumes[t_open] = max(1, round(raid.open_Q * mean))
    deltas[t_open] = round(raid.open_R * volumes[t_open])
    baseline = levels[t_open - 1]

    rebuilt = levels[:t_open]
    for t in range(t_open, n):
        if t == t_cover:
            if raid.restore_baseline:
                deltas[t] = baseline - rebuilt[-1]
            else:
                deltas[t] = -round(raid.cover_fraction * deltas[t_open])
            volumes[t] = max(1, round(abs(deltas[t]) / abs(raid.cover_R)))
        rebuilt.append(max(0, rebuilt[-1] + deltas[t]))

    previous_close = series.days[t_open - 1].close
    factor = previous_close * (1.0 - raid.price_drop_pct) / series.days[t_open].close
    dividend = dollars_to_ticks(round(raid.dividend, 2)) if raid.dividend > 0 else 0

    bars: list[PriceBar] = []
    for t, day in enumerate(series.days):
        bar = replace(day.bar, volume=int(volumes[t]))
        if t >= t_open:
            bar = replace(
                bar,
                high=_scale_ticks(bar.high, factor),
                low=_scale_ticks(bar.low, factor),
                close=_scale_ticks(bar.close, factor),
            )
        if t == t_open and dividend:
            bar = replace(bar, dividend=dividend)
        bars.append(bar)

    injected = _assemble(series.ticker, series.dates, bars, rebuilt)
    event: GroundTruthEvent = {
        "open_date": iso(injected.days[t_open].date),
        "cover_date": iso(injected.days[t_cover].date),
        "open_index": t_open,
        "cover_index": t_cover,
        "open_delta": injected.days[t_open].delta or 0,
        "cover_delta": injected.days[t_cover].delta or 0,
        "open_volume": injected.days[t_open].volume,
        "cover_volume": injected.days[t_cover].volume,
        "restore_baseline": raid.restore_baseline,
        "modified_days": [
            iso(injected.days[t_open].date),
            iso(injected.days[t_cover].date),
        ],
    }
    _LOGGER.debug("Planted raid %s -> %s", event["open_date"], event["cover_date"])
    return injected, event


def inject_ban(series: MarketSeries, ban: BanSpec) -> MarketSeries:
    """Suppress new borrowing over the ban days, as it would be reported `lag` days late.

    Borrowing deferred by the ban resumes on the first day after it: that day
    reports a positive change of at least one average suppressed day.
    """
    n = len(series)
    if not 1 <= ban.start_day <= ban.end_day < n:
        raise SyntheticError(f"ban days {ban.start_day}..{ban.end_day} outside 1..{n - 1}")
    first = ban.start_day + ban.lag
    last = min(ban.end_day + ban.lag, n - 1)
    if first >= n:
        raise SyntheticError(f"ban lag {ban.lag} pushes the ban past the series end")

    levels = list(series.short_interest)
    deltas = [day.delta or 0 for day in series.days]
    deferred = [change for change in deltas[first : last + 1] if change > 0]
    rebuilt = levels[:first]
    for t in range(first, n):
        change = deltas[t]
        if t <= last and change > 0:
            change = 0
        elif t == last + 1 and deferred:
            change = abs(change) + max(1, round(sum(deferred) / len(deferred)))
        rebuilt.append(max(0, rebuilt[-1] + change))

    return _assemble(series.ticker, series.dates, [day.bar for day in series.days], rebuilt)


def generate_scenario(spec: SynthSpec) -> tuple[MarketSeries, dict[str, Any]]:
    """Background plus every planted raid and the optional ban, with ground truth."""
    series = generate_background(spec.background)
    events: list[GroundTruthEvent] = []
    for raid in spec.raids:
        series, event = inject_raid(series, raid)
        events.append(event)

    ban_payload: dict[str, Any] | None = None
    if spec.ban is not None:
        series = inject_ban(series, spec.ban)
        ban_payload = {
            "start_date": iso(series.days[spec.ban.start_day].date),
            "end_date": iso(series.days[spec.ban.end_day].date),
            "lag": spec.ban.lag,
        }

    background = spec.background
    ground_truth = {
        "schema": SCHEMA_GROUND_TRUTH,
        "ticker": background.ticker,
        "seed": background.seed,
        "n_days": background.n_days,
        "background": {
            "mean_volume": background.mean_volume,
            "volume_tail_alpha": format_float(background.volume_tail_alpha),
            "r_laplace": [format_float(v) for v in background.r_laplace],
            "r_positive_tail": [format_float(v) for v in background.r_positive_tail],
            "base_short_interest": background.base_short_interest,
            "price_start": format_float(background.price_start),
            "daily_volatility": format_float(background.daily_volatility),
        },
        "raids": events,
        "ban": ban_payload,
    }
    _LOGGER.info(
        "Synthesized %s days for %s with %s raids", len(series), series.ticker, len(events)
    )
    return series, ground_truth
