"""Anomaly scanning, raid pairing, probabilities and falsification screens."""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import replace
from datetime import date
from fractions import Fraction
import logging
from typing import Any, Iterable, Sequence

import numpy as np

from .config import DetectorConfig
from .const import (
    DEFAULT_DIVIDEND_LOOKAHEAD,
    DEFAULT_LAG_MAX,
    DEFAULT_LAG_SCORE_FLOOR,
    DEFAULT_TRADING_DAYS_PER_YEAR,
    SCHEMA_CANDIDATES,
    SCHEMA_LAG,
)
from .exceptions import DetectorError, FitError
from .helpers import exact, format_cents, format_float, iso, ticks_to_cents
from .market_data import reconcile_deltas
from .metrics import alt_uptick_triggered
from .tail_fit import fits_payload, gaussian_tail_probability, tail_probability
from .types import (
    Anomaly,
    AnomalyPayload,
    CandidatePayload,
    DayMetrics,
    DividendScreen,
    LagResult,
    MarketSeries,
    RaidCandidate,
    ShortRecord,
    TailFits,
)

_LOGGER = logging.getLogger(__name__)

SCREEN_DIVIDEND = "dividend_arbitrage"
SCREEN_OFF_MARKET = "off_market_transfer"
SCREEN_ALT_UPTICK_OPEN = "alt_uptick_open"
SCREEN_ALT_UPTICK_COVER = "alt_uptick_cover"

# Lag scores closer than this count as tied; the largest tied lag wins
LAG_SCORE_TIE = 1e-12


def scan_anomalies(
    metrics: Sequence[DayMetrics], config: DetectorConfig
) -> list[Anomaly]:
    """Flag opening spikes (high R with high Q) and covering spikes (strongly negative R)."""
    anomalies: list[Anomaly] = []
    for index, item in enumerate(metrics):
        if item.R is None or item.Q is None:
            continue
        if item.R >= config.r_open_min and item.Q >= config.q_min:
            kind = "open_spike"
        elif item.R <= -config.r_open_min:
            kind = "cover_spike"
        else:
            continue
        anomalies.append(
            Anomaly(
                date=item.date,
                index=index,
                kind=kind,
                R=item.R,
                Q=item.Q,
                si_level_ratio=item.si_level_ratio,
            )
        )

    _LOGGER.debug("Scan flagged %s anomalous days", len(anomalies))
    return anomalies


def event_probability(
    anomaly: Anomaly, fits: TailFits, config: DetectorConfig | None = None
) -> Anomaly:
    """Attach tail probabilities of R and Q to an anomaly.

    Values outside a fit's domain, or missing fits, leave the probability as
    None with a note saying why.
    """
    config = config or DetectorConfig()
    notes: list[str] = []

    if anomaly.kind == "open_spike":
        r_fit, side, label = fits.r_positive, "upper", "R power-law tail"
    else:
        r_fit, side, label = fits.r_negative, "lower", "R Laplace tail"

    p_r: float | None = None
    if r_fit is None:
        notes.append(f"p_R unavailable: no {label} fit")
    else:
        try:
            p_r = tail_probability(r_fit.fit, anomaly.R, side, config.laplace_tail_form)
        except FitError as err:
            notes.append(f"p_R unavailable: {err}")

    p_q: float | None = None
    if anomaly.Q is None:
        notes.append("p_Q unavailable: Q undefined")
    elif fits.q is None:
        notes.append("p_Q unavailable: no Q power-law tail fit")
    else:
        try:
            p_q = tail_probability(fits.q.fit, anomaly.Q, "upper")
        except FitError as err:
            notes.append(f"p_Q unavailable: {err}")

    p_gaussian: float | None = None
    if len(fits.r_samples) >= 2:
        try:
            p_gaussian = gaussian_tail_probability(fits.r_samples, anomaly.R, side)
        except FitError as err:
            notes.append(f"p_R_gaussian unavailable: {err}")

    return replace(
        anomaly, p_R=p_r, p_Q=p_q, p_R_gaussian=p_gaussian, notes=tuple(notes)
    )


def _check_probability(p: float, name: str) -> None:
    if not 0 < p <= 1:
        raise DetectorError(f"{name} must be in (0, 1], got {p}")


def joint_probability(p1: float, p2: float, window: int) -> float:
    """Chance of two independent events landing within `window` days: min(1, p1*p2*window)."""
    _check_probability(p1, "p1")
    _check_probability(p2, "p2")
    if window < 1:
        raise DetectorError(f"window must be at least 1, got {window}")
    return min(1.0, p1 * p2 * window)


def waiting_time_exact(
    p: float, trading_days_per_year: int = DEFAULT_TRADING_DAYS_PER_YEAR
) -> Fraction:
    """Mean waiting time in years as an exact rational of the decimal probability."""
    if p <= 0 or p > 1:
        raise DetectorError(f"probability must be in (0, 1], got {p}")
    if trading_days_per_year < 1:
        raise DetectorError("trading_days_per_year must be positive")
    return 1 / (exact(p) * trading_days_per_year)


def waiting_time_years(
    p: float, trading_days_per_year: int = DEFAULT_TRADING_DAYS_PER_YEAR
) -> float:
    """Mean waiting time in years for a daily event of probability p."""
    return float(waiting_time_exact(p, trading_days_per_year))


def estimate_profit(candidate: RaidCandidate, series: MarketSeries) -> int:
    """Shares opened times the adjusted close decline to the cover day, in cents."""
    opened = series.days[candidate.open.index].delta or 0
    decline = (
        series.adjusted_close[candidate.open.index]
        - series.adjusted_close[candidate.cover.index]
    )
    return ticks_to_cents(opened * decline)


def off_market_residual(candidate: RaidCandidate, series: MarketSeries) -> int:
    """Shares returned on the cover day beyond that day's recorded volume."""
    day = series.days[candidate.cover.index]
    if day.delta is None:
        return 0
    return max(0, abs(day.delta) - day.volume)


def _trading_distance(
    start: date, end: date, trading_days: Sequence[date] | None
) -> int:
    """Signed number of trading days from start to end."""
    if trading_days:
        return bisect_left(trading_days, end) - bisect_left(trading_days, start)
    return int(np.busday_count(start, end))


def dividend_arbitrage_screen(
    open_date: date,
    ex_dividend_dates: Iterable[date],
    trading_days: Sequence[date] | None = None,
    lookahead: int = DEFAULT_DIVIDEND_LOOKAHEAD,
) -> DividendScreen:
    """Decide whether shares borrowed on the open date could have earned a dividend.

    Only ex-dates within `lookahead` trading days either side are considered;
    the nearest one decides, an upcoming one winning a tie. Without a trading
    calendar, weekdays are counted.
    """
    nearest: tuple[int, int] | None = None
    for ex_date in ex_dividend_dates:
        distance = _trading_distance(open_date, ex_date, trading_days)
        if abs(distance) > lookahead:
            continue
        key = (abs(distance), 0 if distance > 0 else 1)
        if nearest is None or key < nearest:
            nearest = key
    if nearest is None:
        return "no-dividend-nearby"
    # Borrowing on or after the ex-date earns nothing
    if nearest[1] == 1:
        return "excluded"
    return "possible"


def reporting_lag_check(
    short_series: Sequence[ShortRecord],
    ban_window: tuple[date, date],
    max_lag: int = DEFAULT_LAG_MAX,
    score_floor: float = DEFAULT_LAG_SCORE_FLOOR,
) -> LagResult:
    """Estimate the delay between a short-sale ban and the suppression of new borrowing.

    Scores are Pearson correlations between the suppression indicator
    (change <= 0) and the ban indicator shifted k days later. Days with a
    natural non-positive change just before the suppressed run score the same
    as banned days, so earlier lags can tie the true one; the end of the run is
    sharp once borrowing resumes, so a tie goes to the largest lag.
    """
    if not short_series:
        raise DetectorError("no short-interest records")
    ban_start, ban_end = ban_window
    if ban_end < ban_start:
        raise DetectorError(f"ban window ends ({ban_end}) before it starts ({ban_start})")
    records = reconcile_deltas(short_series)
    dates = [record.date for record in records]
    if ban_start < dates[0] or ban_end > dates[-1]:
        raise DetectorError(
            f"ban window {ban_start}..{ban_end} outside data range {dates[0]}..{dates[-1]}"
        )

    suppressed = np.array(
        [record.delta is not None and record.delta <= 0 for record in records],
        dtype=float,
    )
    ban = np.array([ban_start <= day <= ban_end for day in dates], dtype=float)
    scores: list[float] = []
    for lag in range(max_lag + 1):
        shifted = np.zeros_like(ban)
        shifted[lag:] = ban[: len(ban) - lag]
        if np.std(shifted) == 0 or np.std(suppressed) == 0:
            scores.append(0.0)
            continue
        score = float(np.corrcoef(suppressed, shifted)[0, 1])
        scores.append(0.0 if np.isnan(score) else score)

    top = max(scores)
    best = max(lag for lag, score in enumerate(scores) if score >= top - LAG_SCORE_TIE)
    inconclusive = scores[best] < score_floor
    if inconclusive:
        _LOGGER.info(
            "No discernible suppression around the ban (best score %.3f)", scores[best]
        )
    return LagResult(
        lag=None if inconclusive else best,
        score=scores[best],
        scores=tuple(scores),
        inconclusive=inconclusive,
        ban_start=ban_start,
        ban_end=ban_end,
    )


def _describe(
    open_spike: Anomaly, cover: Anomaly, s_pre: int, gap: int, series: MarketSeries
) -> RaidCandidate:
    open_day = series.days[open_spike.index]
    cover_day = series.days[cover.index]
    opened = open_day.delta or 0
    previous_volume = series.days[open_spike.index - 1].volume
    candidate = RaidCandidate(
        open=open_spike,
        cover=cover,
        separation=cover.index - open_spike.index,
        baseline_gap=gap / s_pre,
        cover_to_open_ratio=(
            abs(cover_day.delta) / opened if opened and cover_day.delta is not None else None
        ),
        intervening_change=(
            series.days[cover.index - 1].short_interest - open_day.short_interest
        ),
        open_notional=ticks_to_cents(opened * open_day.close),
        volume_jump=open_day.volume / previous_volume if previous_volume else None,
    )
    return replace(
        candidate,
        profit_estimate=estimate_profit(candidate, series),
        off_market_residual=off_market_residual(candidate, series),
    )


def pair_candidates(
    anomalies: Sequence[Anomaly], series: MarketSeries, config: DetectorConfig
) -> list[RaidCandidate]:
    """Pair each opening spike with the covering spike that best restores its baseline.

    Opening spikes are visited in date order; each covering spike pairs at most
    once. Among unused covering spikes within the pairing window, the one whose
    short interest lands closest to the day before the open is chosen, the
    earliest winning a tie. It is accepted only within the baseline tolerance.
    """
    tolerance = exact(config.baseline_tolerance)
    opens = sorted(
        (a for a in anomalies if a.kind == "open_spike"), key=lambda a: a.index
    )
    covers = sorted(
        (a for a in anomalies if a.kind == "cover_spike"), key=lambda a: a.index
    )
    used: set[int] = set()
    candidates: list[RaidCandidate] = []

    for open_spike in opens:
        if open_spike.index < 1:
            continue
        s_pre = series.days[open_spike.index - 1].short_interest
        if s_pre == 0:
            _LOGGER.debug("Skipping open spike on %s: zero baseline", open_spike.date)
            continue
        last = open_spike.index + config.pairing_window

        best: Anomaly | None = None
        best_gap = 0
        for cover in covers:
            if cover.index in used or not open_spike.index < cover.index <= last:
                continue
            gap = abs(series.days[cover.index].short_interest - s_pre)
            if best is None or gap < best_gap:
                best, best_gap = cover, gap

        if best is None:
            continue
        if best_gap * tolerance.denominator > tolerance.numerator * s_pre:
            _LOGGER.debug(
                "Open spike on %s: closest cover on %s misses baseline by %s shares",
                open_spike.date,
                best.date,
                best_gap,
            )
            continue
        used.add(best.index)
        candidates.append(_describe(open_spike, best, s_pre, best_gap, series))

    return candidates


def screen_candidate(
    candidate: RaidCandidate,
    series: MarketSeries,
    config: DetectorConfig,
) -> RaidCandidate:
    """Run the dividend, off-market and alternative-uptick screens."""
    screens: dict[str, str | bool] = {
        SCREEN_DIVIDEND: dividend_arbitrage_screen(
            candidate.open.date,
            series.ex_dividend_dates,
            series.dates,
            config.dividend_lookahead,
        ),
        SCREEN_OFF_MARKET: candidate.off_market_residual > 0,
    }
    for key, anomaly in (
        (SCREEN_ALT_UPTICK_OPEN, candidate.open),
        (SCREEN_ALT_UPTICK_COVER, candidate.cover),
    ):
        previous_close = series.days[anomaly.index - 1].close
        screens[key] = previous_close > 0 and alt_uptick_triggered(
            series.days[anomaly.index],
            previous_close,
            config.alt_uptick_threshold,
            config.alt_uptick_inclusive,
        )
    return replace(candidate, screens=screens)


def _rate(candidate: RaidCandidate, config: DetectorConfig) -> RaidCandidate:
    p_open, p_cover = candidate.open.p_R, candidate.cover.p_R
    if p_open is None or p_cover is None:
        return candidate
    p_joint = joint_probability(p_open, p_cover, config.joint_window)
    return replace(
        candidate,
        p_joint=p_joint,
        waiting_time_years=waiting_time_years(p_joint, config.trading_days_per_year),
    )


def detect_raids(
    series: MarketSeries,
    metrics: Sequence[DayMetrics],
    fits: TailFits | None,
    config: DetectorConfig,
) -> list[RaidCandidate]:
    """Scan, attach probabilities, pair and screen."""
    if len(metrics) != len(series):
        raise DetectorError("metrics and series lengths differ")
    anomalies = scan_anomalies(metrics, config)
    if fits is not None:
        anomalies = [event_probability(anomaly, fits, config) for anomaly in anomalies]
    candidates = [
        screen_candidate(_rate(candidate, config), series, config)
        for candidate in pair_candidates(anomalies, series, config)
    ]
    _LOGGER.info(
        "%s: %s anomalies, %s raid candidates", series.ticker, len(anomalies), len(candidates)
    )
    return candidates


def anomaly_payload(anomaly: Anomaly) -> AnomalyPayload:
    """Report form of one flagged day."""
    return {
        "date": iso(anomaly.date),
        "kind": anomaly.kind,
        "R": format_float(anomaly.R),
        "Q": format_float(anomaly.Q),
        "si_level_ratio": format_float(anomaly.si_level_ratio),
        "p_R": format_float(anomaly.p_R),
        "p_Q": format_float(anomaly.p_Q),
        "p_R_gaussian": format_float(anomaly.p_R_gaussian),
        "notes": list(anomaly.notes),
    }


def candidate_payload(candidate: RaidCandidate) -> CandidatePayload:
    """Report form of a paired candidate with its screens."""
    return {
        "open": anomaly_payload(candidate.open),
        "cover": anomaly_payload(candidate.cover),
        "separation": candidate.separation,
        "baseline_gap": format_float(candidate.baseline_gap),
        "p_joint": format_float(candidate.p_joint),
        "waiting_time_years": format_float(candidate.waiting_time_years),
        "profit_estimate": format_cents(candidate.profit_estimate),
        "off_market_residual": candidate.off_market_residual,
        "screens": dict(candidate.screens),
        "cover_to_open_ratio": format_float(candidate.cover_to_open_ratio),
        "intervening_change": candidate.intervening_change,
        "open_notional": format_cents(candidate.open_notional),
        "volume_jump": format_float(candidate.volume_jump),
    }


def candidates_report(
    ticker: str,
    candidates: Sequence[RaidCandidate],
    fits: TailFits | None,
    config: DetectorConfig,
) -> dict[str, Any]:
    """Build the candidate report document."""
    return {
        "schema": SCHEMA_CANDIDATES,
        "ticker": ticker,
        "config": config.as_dict(),
        "fits": fits_payload(fits),
        "candidates": [candidate_payload(candidate) for candidate in candidates],
    }


def lag_report(ticker: str, result: LagResult, config: DetectorConfig) -> dict[str, Any]:
    """Build the reporting-lag document."""
    return {
        "schema": SCHEMA_LAG,
        "ticker": ticker,
        "ban_start": iso(result.ban_start),
        "ban_end": iso(result.ban_end),
        "lag": result.lag,
        "score": format_float(result.score),
        "scores": [format_float(score) for score in result.scores],
        "inconclusive": result.inconclusive,
        "lag_max": config.lag_max,
        "score_floor": config.lag_score_floor,
    }
