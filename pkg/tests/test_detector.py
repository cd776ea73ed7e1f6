"""Tests for scanning, pairing, probabilities and screens."""

from datetime import date
from fractions import Fraction

import numpy as np
import pandas as pd
import pytest

from bear_raid.config import DetectorConfig
from bear_raid.detector import (
    SCREEN_ALT_UPTICK_COVER,
    SCREEN_ALT_UPTICK_OPEN,
    SCREEN_DIVIDEND,
    SCREEN_OFF_MARKET,
    candidate_payload,
    candidates_report,
    detect_raids,
    dividend_arbitrage_screen,
    estimate_profit,
    event_probability,
    joint_probability,
    lag_report,
    pair_candidates,
    reporting_lag_check,
    scan_anomalies,
    waiting_time_exact,
    waiting_time_years,
)
from bear_raid.exceptions import DetectorError
from bear_raid.helpers import dump_json, exact
from bear_raid.market_data import build_series
from bear_raid.metrics import compute_metrics
from bear_raid.types import (
    Anomaly,
    EcdfPoints,
    FitResult,
    LaplaceFit,
    PowerLawFit,
    PriceBar,
    ShortRecord,
    TailFits,
)

from .conftest import EVENT_COVER_INDEX, EVENT_OPEN_INDEX, exhaustive_pairs

OPEN_DATE = date(2007, 11, 1)


def _result(fit, model="power_law") -> FitResult:
    return FitResult("test", model, fit, EcdfPoints("upper", (1.0,), (1.0,), 1), 1, 0)


def _fits(**kwargs) -> TailFits:
    return TailFits(**kwargs)


def _dates(n: int) -> list[date]:
    return [stamp.date() for stamp in pd.bdate_range("2007-01-02", periods=n)]


def _level_series(levels):
    dates = _dates(len(levels))
    bars = [PriceBar(day, 10_000, 10_000, 10_000, 1_000) for day in dates]
    shorts = [ShortRecord(day, int(level)) for day, level in zip(dates, levels)]
    series, _ = build_series(bars, shorts, "T")
    return series


def _anomaly(series, index: int, kind: str) -> Anomaly:
    return Anomaly(series.dates[index], index, kind, 1.0 if kind == "open_spike" else -1.0, 5.0, None)


def test_scan_raid_event(event_metrics, detector_config) -> None:
    """Test the open and cover days are the only flags."""
    anomalies = scan_anomalies(event_metrics, detector_config)
    assert [(a.index, a.kind) for a in anomalies] == [
        (EVENT_OPEN_INDEX, "open_spike"),
        (EVENT_COVER_INDEX, "cover_spike"),
    ]
    assert anomalies[0].date == OPEN_DATE
    assert anomalies[0].si_level_ratio == pytest.approx(3.8005, rel=1e-4)


def test_scan_respects_q_threshold(event_metrics) -> None:
    """Test a high R without a volume spike is not an open."""
    anomalies = scan_anomalies(event_metrics, DetectorConfig(q_min=4.0))
    assert [a.kind for a in anomalies] == ["cover_spike"]


def test_scan_thresholds_nest(quiet_series) -> None:
    """Test raising the thresholds only removes flags."""
    metrics = compute_metrics(quiet_series)
    previous = None
    for r_min, q_min in [(0.05, 1.0), (0.1, 1.5), (0.3, 2.0), (0.5, 3.0)]:
        flagged = {
            (a.index, a.kind)
            for a in scan_anomalies(metrics, DetectorConfig(r_open_min=r_min, q_min=q_min))
        }
        if previous is not None:
            assert flagged <= previous
        previous = flagged


def test_raid_event_candidate(event_series, event_metrics, detector_config) -> None:
    """Test the paired event and its derived quantities."""
    candidates = detect_raids(event_series, event_metrics, None, detector_config)
    assert len(candidates) == 1
    candidate = candidates[0]
    assert candidate.open.date == OPEN_DATE
    assert candidate.cover.date == date(2007, 11, 9)
    assert candidate.separation == 6
    assert candidate.baseline_gap == pytest.approx(2 / 115)
    assert candidate.off_market_residual == 81_000_000
    assert candidate.profit_estimate == 62_660_000_000
    assert candidate.cover_to_open_ratio == pytest.approx(202 / 130)
    assert candidate.intervening_change == 70_000_000
    assert candidate.open_notional == 499_980_000_000
    assert candidate.p_joint is None
    assert candidate.screens == {
        SCREEN_DIVIDEND: "excluded",
        SCREEN_OFF_MARKET: True,
        SCREEN_ALT_UPTICK_OPEN: False,
        SCREEN_ALT_UPTICK_COVER: False,
    }

    payload = candidate_payload(candidate)
    assert payload["profit_estimate"] == "626600000.00"
    assert payload["open"]["date"] == "2007-11-01"
    assert payload["cover"]["kind"] == "cover_spike"


def test_detect_raids_length_mismatch(event_series, event_metrics, detector_config) -> None:
    """Test metrics must match the series."""
    with pytest.raises(DetectorError):
        detect_raids(event_series, event_metrics[:-1], None, detector_config)


def test_pairing_window_excludes_late_cover(event_series, event_metrics) -> None:
    """Test a cover beyond the pairing window is not used."""
    config = DetectorConfig(pairing_window=5)
    assert detect_raids(event_series, event_metrics, None, config) == []


def test_pairing_tolerance(event_series, event_metrics) -> None:
    """Test the baseline tolerance bounds the accepted gap."""
    assert detect_raids(event_series, event_metrics, None, DetectorConfig(baseline_tolerance=0.01)) == []
    assert len(detect_raids(event_series, event_metrics, None, DetectorConfig(baseline_tolerance=0.02))) == 1


def test_pairing_tolerance_is_exact() -> None:
    """Test a gap of exactly the tolerance is accepted."""
    series = _level_series([100] * 5 + [150, 150, 90, 150])
    anomalies = [_anomaly(series, 5, "open_spike"), _anomaly(series, 7, "cover_spike")]
    candidates = pair_candidates(anomalies, series, DetectorConfig(baseline_tolerance=0.1))
    assert len(candidates) == 1
    assert candidates[0].baseline_gap == pytest.approx(0.1)
    assert pair_candidates(anomalies, series, DetectorConfig(baseline_tolerance=0.09)) == []


def test_pairing_prefers_closest_then_earliest() -> None:
    """Test the closest cover wins, ties going to the earliest."""
    series = _level_series([100] * 5 + [150, 104, 96, 101, 150])
    anomalies = [
        _anomaly(series, 5, "open_spike"),
        _anomaly(series, 6, "cover_spike"),
        _anomaly(series, 7, "cover_spike"),
        _anomaly(series, 8, "cover_spike"),
    ]
    assert pair_candidates(anomalies, series, DetectorConfig())[0].cover.index == 8

    tied = _level_series([100] * 5 + [150, 104, 96, 150])
    anomalies = [
        _anomaly(tied, 5, "open_spike"),
        _anomaly(tied, 6, "cover_spike"),
        _anomaly(tied, 7, "cover_spike"),
    ]
    assert pair_candidates(anomalies, tied, DetectorConfig())[0].cover.index == 6


def test_pairing_uses_each_cover_once() -> None:
    """Test two opens cannot share a cover."""
    series = _level_series([100] * 5 + [150, 200, 100, 150])
    anomalies = [
        _anomaly(series, 5, "open_spike"),
        _anomaly(series, 6, "open_spike"),
        _anomaly(series, 7, "cover_spike"),
    ]
    candidates = pair_candidates(anomalies, series, DetectorConfig(baseline_tolerance=0.5))
    assert [(c.open.index, c.cover.index) for c in candidates] == [(5, 7)]


def test_pairing_skips_zero_baseline() -> None:
    """Test an open from zero short interest is never paired."""
    series = _level_series([0] * 5 + [150, 0])
    anomalies = [_anomaly(series, 5, "open_spike"), _anomaly(series, 6, "cover_spike")]
    assert pair_candidates(anomalies, series, DetectorConfig()) == []


@pytest.mark.parametrize("seed", range(50))
def test_pairing_matches_brute_force(seed: int) -> None:
    """Test pairing on random series against an exhaustive search."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(20, 500))
    levels = rng.integers(90, 111, size=n)
    series = _level_series(levels)
    flagged = rng.choice(np.arange(1, n), size=n // 4, replace=False)
    anomalies = [
        _anomaly(series, int(index), "open_spike" if rng.random() < 0.5 else "cover_spike")
        for index in sorted(flagged)
    ]
    config = DetectorConfig(pairing_window=int(rng.integers(1, 15)), baseline_tolerance=0.05)

    candidates = pair_candidates(anomalies, series, config)
    pairs = [(c.open.index, c.cover.index) for c in candidates]
    levels = [int(v) for v in levels]
    assert pairs == exhaustive_pairs(anomalies, levels, config.pairing_window, 0.05)
    assert len({cover for _, cover in pairs}) == len(pairs)
    assert all(1 <= c.separation <= config.pairing_window for c in candidates)
    assert all(c.baseline_gap <= 0.05 for c in candidates)


def test_event_probability_open() -> None:
    """Test an open spike gets power-law probabilities for R and Q."""
    anomaly = Anomaly(OPEN_DATE, 63, "open_spike", 0.76, 3.7, 3.8)
    fits = _fits(
        r_positive=_result(PowerLawFit(alpha=-1.35, c=1.4e-5, x_min=0.01, ks=0.0)),
        q=_result(PowerLawFit(alpha=-3.34, c=0.5, x_min=1.0, ks=0.0)),
        r_samples=(-0.1, 0.0, 0.1, 0.2),
    )
    rated = event_probability(anomaly, fits)
    assert rated.p_R == pytest.approx(1.4e-5 * 0.76**-1.35)
    assert rated.p_Q == pytest.approx(0.5 * 3.7**-3.34)
    assert rated.p_R_gaussian is not None and rated.p_R_gaussian < 1e-3
    assert rated.notes == ()


def test_event_probability_cover_caption_form() -> None:
    """Test the unhalved Laplace tail on a deep cover spike."""
    anomaly = Anomaly(date(2007, 11, 9), 69, "cover_spike", -0.785, 2.5, None)
    fits = _fits(r_negative=_result(LaplaceFit(beta=0.11, gamma=0.048, ks=0.0), "laplace"))
    rated = event_probability(anomaly, fits, DetectorConfig(laplace_tail_form="caption"))
    assert rated.p_R == pytest.approx(8e-9, rel=0.01)
    assert rated.notes == ("p_Q unavailable: no Q power-law tail fit",)


def test_event_probability_notes_missing_fits() -> None:
    """Test missing fits and out-of-domain values leave notes."""
    anomaly = Anomaly(OPEN_DATE, 63, "open_spike", 0.6, 3.7, None)
    rated = event_probability(anomaly, _fits(errors={"r_positive": "too few"}))
    assert rated.p_R is None
    assert rated.notes[0] == "p_R unavailable: no R power-law tail fit"

    below = _fits(r_positive=_result(PowerLawFit(alpha=-1.35, c=1e-5, x_min=0.7, ks=0.0)))
    rated = event_probability(anomaly, below)
    assert rated.p_R is None
    assert "below the fit threshold" in rated.notes[0]


def test_joint_probability() -> None:
    """Test the joint probability of two events within the window."""
    assert joint_probability(1e-3, 1e-3, 6) == pytest.approx(6e-6)
    assert joint_probability(0.5, 0.5, 6) == 1.0
    with pytest.raises(DetectorError):
        joint_probability(0.0, 0.5, 6)
    with pytest.raises(DetectorError):
        joint_probability(0.5, 1.5, 6)
    with pytest.raises(DetectorError):
        joint_probability(0.5, 0.5, 0)


def test_joint_probability_event_magnitude() -> None:
    """Test the joint chance of the two event days is about one in a trillion."""
    joint = joint_probability(2e-5, 8e-9, 6)
    assert 0.5e-12 <= joint <= 2e-12


@pytest.mark.parametrize("seed", range(5))
def test_joint_probability_properties(seed: int) -> None:
    """Test the joint probability is symmetric, monotone and below either input."""
    rng = np.random.default_rng(seed)
    for p1, p2 in 10.0 ** rng.uniform(-12, 0, size=(50, 2)):
        window = int(rng.integers(1, 20))
        joint = joint_probability(p1, p2, window)
        assert joint == joint_probability(p2, p1, window)
        assert joint <= joint_probability(min(1.0, p1 * 2), p2, window)
        assert joint <= joint_probability(p1, p2, window + 1)
        assert joint <= min(p1, p2) * window
        assert joint <= 1.0


def _profit_series(open_close: int, cover_close: int):
    dates = _dates(9)
    closes = [10_000] * 5 + [open_close, 10_000, cover_close, 10_000]
    bars = [PriceBar(day, close, close, close, 1_000) for day, close in zip(dates, closes)]
    levels = [100] * 5 + [150, 150, 100, 100]
    shorts = [ShortRecord(day, level) for day, level in zip(dates, levels)]
    series, _ = build_series(bars, shorts, "T")
    anomalies = [_anomaly(series, 5, "open_spike"), _anomaly(series, 7, "cover_spike")]
    return series, pair_candidates(anomalies, series, DetectorConfig())[0]


@pytest.mark.parametrize(("high", "low"), [(123_000, 98_000), (400_000, 100), (10_000, 10_000)])
def test_profit_antisymmetric_in_closes(high: int, low: int) -> None:
    """Test swapping the open and cover closes negates the profit."""
    series, candidate = _profit_series(high, low)
    swapped_series, swapped = _profit_series(low, high)
    assert candidate.profit_estimate == estimate_profit(candidate, series)
    assert candidate.profit_estimate == 50 * (high - low) // 100
    assert swapped.profit_estimate == -candidate.profit_estimate
    assert estimate_profit(swapped, swapped_series) == -candidate.profit_estimate


@pytest.mark.parametrize(
    ("p", "years"), [(2e-5, 200), (8e-9, 500_000), (1e-12, 4_000_000_000)]
)
def test_waiting_time(p: float, years: int) -> None:
    """Test waiting times are exact for decimal probabilities."""
    assert waiting_time_exact(p) == Fraction(years)
    assert waiting_time_exact(p) * exact(p) * 250 == 1
    assert waiting_time_years(p) == float(years)


def test_waiting_time_rejects() -> None:
    """Test invalid probabilities and calendars."""
    with pytest.raises(DetectorError):
        waiting_time_years(0.0)
    with pytest.raises(DetectorError):
        waiting_time_years(0.5, trading_days_per_year=0)


@pytest.mark.parametrize(
    ("ex_dates", "expected"),
    [
        ([OPEN_DATE], "excluded"),
        ([date(2007, 10, 31)], "excluded"),
        ([date(2007, 11, 5)], "possible"),
        ([date(2007, 10, 31), date(2007, 11, 2)], "possible"),
        ([date(2007, 12, 3)], "no-dividend-nearby"),
        ([], "no-dividend-nearby"),
    ],
)
def test_dividend_screen_weekdays(ex_dates, expected: str) -> None:
    """Test the dividend screen counting weekdays."""
    assert dividend_arbitrage_screen(OPEN_DATE, ex_dates) == expected


def test_dividend_screen_calendar() -> None:
    """Test distances follow the trading calendar when given."""
    calendar = [date(2007, 11, 1), date(2007, 11, 2), date(2007, 11, 20)]
    assert (
        dividend_arbitrage_screen(OPEN_DATE, [date(2007, 11, 20)], calendar, lookahead=2)
        == "possible"
    )
    assert (
        dividend_arbitrage_screen(OPEN_DATE, [date(2007, 11, 20)], None, lookahead=2)
        == "no-dividend-nearby"
    )


def _ban_records(
    n: int, start: int, end: int, lag: int | None, flat_before: int = 0
) -> list[ShortRecord]:
    level = 1_000
    records = []
    for index, day in enumerate(_dates(n)):
        first = start + (lag or 0) - flat_before
        if index and not (lag is not None and first <= index <= end + lag):
            level += 1
        records.append(ShortRecord(day, level))
    return records


@pytest.mark.parametrize("lag", [0, 1, 2, 3])
def test_reporting_lag_recovered(lag: int) -> None:
    """Test a suppression delayed by a known lag is found."""
    records = _ban_records(60, 20, 35, lag)
    window = (records[20].date, records[35].date)
    result = reporting_lag_check(records, window)
    assert result.lag == lag
    assert result.score == pytest.approx(1.0)
    assert not result.inconclusive
    assert len(result.scores) == 11


@pytest.mark.parametrize("lag", [1, 2, 3])
def test_reporting_lag_quiet_days_before_suppression(lag: int) -> None:
    """Test flat days just before the lagged window do not pull the lag earlier."""
    records = _ban_records(60, 20, 35, lag, flat_before=lag)
    result = reporting_lag_check(records, (records[20].date, records[35].date))
    assert result.scores[0] == pytest.approx(result.scores[lag])
    assert result.lag == lag


def test_reporting_lag_no_suppression() -> None:
    """Test a ban with no visible effect is inconclusive."""
    records = _ban_records(60, 20, 35, None)
    result = reporting_lag_check(records, (records[20].date, records[35].date))
    assert result.inconclusive
    assert result.lag is None
    assert result.score == 0.0


def test_reporting_lag_window_errors() -> None:
    """Test windows outside the data or reversed."""
    records = _ban_records(30, 5, 10, 0)
    with pytest.raises(DetectorError, match="outside data range"):
        reporting_lag_check(records, (date(2006, 1, 2), records[10].date))
    with pytest.raises(DetectorError, match="before it starts"):
        reporting_lag_check(records, (records[10].date, records[5].date))
    with pytest.raises(DetectorError):
        reporting_lag_check([], (records[5].date, records[10].date))


def test_lag_report(detector_config) -> None:
    """Test the lag document."""
    records = _ban_records(60, 20, 35, 2)
    result = reporting_lag_check(records, (records[20].date, records[35].date))
    report = lag_report("T", result, detector_config)
    assert report["lag"] == 2
    assert report["ban_start"] == records[20].date.isoformat()
    assert report["inconclusive"] is False
    assert report["lag_max"] == 10


def test_report_is_deterministic(event_series, event_metrics, detector_config) -> None:
    """Test identical inputs serialize to identical bytes."""
    first = candidates_report(
        "C", detect_raids(event_series, event_metrics, None, detector_config), None, detector_config
    )
    second = candidates_report(
        "C", detect_raids(event_series, event_metrics, None, detector_config), None, detector_config
    )
    assert dump_json(first) == dump_json(second)
    assert first["schema"] == "bear-raid/candidates/1"
    assert first["config"]["r_open_min"] == 0.5
    assert len(first["candidates"]) == 1
