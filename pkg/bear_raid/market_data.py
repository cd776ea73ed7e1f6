"""Ingestion, validation and alignment of daily price and securities-lending data."""

from __future__ import annotations

from dataclasses import replace
from datetime import date
import io
import logging
from typing import IO, Any, Iterable, Sequence, Union

import pandas as pd

from .const import PRICE_HEADER, SCHEMA_ALIGNMENT, SERIES_HEADER, SHORT_HEADER
from .exceptions import MarketDataError
from .helpers import format_money, iso, parse_date, parse_money
from .types import AlignmentReport, MarketDay, MarketSeries, PriceBar, ShortRecord

_LOGGER = logging.getLogger(__name__)

RawInput = Union[bytes, bytearray, str, IO[bytes], IO[str]]


def _decode(raw: RawInput, source: str | None) -> str:
    """Return the text of a raw CSV input."""
    data: Any = raw
    if hasattr(raw, "read"):
        data = raw.read()
    if isinstance(data, (bytes, bytearray)):
        try:
            return bytes(data).decode("utf-8-sig")
        except UnicodeDecodeError as err:
            raise MarketDataError("input is not UTF-8 text", source=source) from err
    return str(data)


def _read_frame(
    raw: RawInput, expected: Sequence[str], optional: int, source: str | None
) -> tuple[pd.DataFrame, list[int]]:
    """Read a CSV as strings and check its header.

    The last `optional` columns of `expected` may be absent from the header.
    Also returns the file line number of every data row, blank lines skipped.
    """
    text = _decode(raw, source)
    if not text.strip():
        raise MarketDataError("missing header row", line=1, source=source)
    try:
        frame = pd.read_csv(
            io.StringIO(text),
            dtype=str,
            keep_default_na=False,
            skipinitialspace=True,
            skip_blank_lines=True,
        )
    except pd.errors.ParserError as err:
        raise MarketDataError(f"malformed row: {err}", source=source) from err

    columns = [str(column).strip() for column in frame.columns]
    allowed = [list(expected[: len(expected) - extra]) for extra in range(optional + 1)]
    if columns not in allowed:
        raise MarketDataError(
            f"unexpected header {','.join(columns)}; expected {','.join(expected)}",
            line=1,
            source=source,
        )
    frame.columns = columns
    numbered = [index for index, line in enumerate(text.splitlines(), start=1) if line.strip()]
    return frame, numbered[1:]


def _field(row: dict[str, Any], name: str) -> str:
    """Return a cell as stripped text, empty when missing."""
    value = row.get(name)
    if value is None or (isinstance(value, float) and pd.isna(value)):
        return ""
    return str(value).strip()


def _share_count(text: str) -> int:
    """Parse a whole number of shares."""
    try:
        return int(text)
    except ValueError as err:
        raise ValueError(f"not a share count: {text!r}") from err


def parse_price_csv(raw: RawInput, source: str | None = None) -> list[PriceBar]:
    """Parse the price CSV into bars, in file order."""
    frame, line_numbers = _read_frame(raw, PRICE_HEADER, optional=0, source=source)
    bars: list[PriceBar] = []
    seen: set[date] = set()

    for line, row in zip(line_numbers, frame.to_dict("records")):
        try:
            day = parse_date(_field(row, "date"))
            high = parse_money(_field(row, "high"))
            low = parse_money(_field(row, "low"))
            close = parse_money(_field(row, "close"))
            volume = _share_count(_field(row, "volume"))
            dividend_text = _field(row, "dividend")
            dividend = parse_money(dividend_text) if dividend_text else 0
        except ValueError as err:
            raise MarketDataError(f"malformed row: {err}", line=line, source=source) from err

        if min(high, low, close) < 0:
            raise MarketDataError("negative price", line=line, source=source)
        if high < low:
            raise MarketDataError("high below low", line=line, source=source)
        if not low <= close <= high:
            raise MarketDataError("close outside [low, high]", line=line, source=source)
        if volume < 0:
            raise MarketDataError("negative volume", line=line, source=source)
        if dividend < 0:
            raise MarketDataError("negative dividend", line=line, source=source)
        if day in seen:
            raise MarketDataError(f"duplicate date {day}", line=line, source=source)
        seen.add(day)

        bars.append(PriceBar(day, high, low, close, volume, dividend))

    _LOGGER.debug("Parsed %s price rows from %s", len(bars), source or "<input>")
    return bars


def parse_short_csv(raw: RawInput, source: str | None = None) -> list[ShortRecord]:
    """Parse the short-interest CSV; the delta column may be absent or empty."""
    frame, line_numbers = _read_frame(raw, SHORT_HEADER, optional=1, source=source)
    records: list[ShortRecord] = []
    seen: set[date] = set()

    for line, row in zip(line_numbers, frame.to_dict("records")):
        try:
            day = parse_date(_field(row, "date"))
            total = _share_count(_field(row, "total_short_interest"))
            delta_text = _field(row, "delta_short_interest")
            reported = _share_count(delta_text) if delta_text else None
        except ValueError as err:
            raise MarketDataError(f"malformed row: {err}", line=line, source=source) from err

        if total < 0:
            raise MarketDataError("negative short interest", line=line, source=source)
        if day in seen:
            raise MarketDataError(f"duplicate date {day}", line=line, source=source)
        seen.add(day)

        records.append(
            ShortRecord(
                date=day,
                total_short_interest=total,
                reported_delta=reported,
                delta_source="reported" if reported is not None else "differenced",
            )
        )

    _LOGGER.debug("Parsed %s short rows from %s", len(records), source or "<input>")
    return records


def reconcile_deltas(records: Sequence[ShortRecord]) -> list[ShortRecord]:
    """Resolve the daily change in short interest for every record but the first.

    Reported changes are kept and their disagreement with the level difference is
    stored as the reconciliation gap; missing changes are differenced.
    """
    reconciled: list[ShortRecord] = []
    previous: ShortRecord | None = None

    for record in records:
        if previous is None:
            reconciled.append(replace(record, delta=None, reconciliation_gap=0))
        else:
            difference = record.total_short_interest - previous.total_short_interest
            if record.reported_delta is not None:
                reconciled.append(
                    replace(
                        record,
                        delta=record.reported_delta,
                        delta_source="reported",
                        reconciliation_gap=record.reported_delta - difference,
                    )
                )
            else:
                reconciled.append(
                    replace(
                        record,
                        delta=difference,
                        delta_source="differenced",
                        reconciliation_gap=0,
                    )
                )
        previous = record

    return reconciled


def _check_sorted(dates: Iterable[date], what: str) -> None:
    """Raise unless the dates strictly increase."""
    previous: date | None = None
    for day in dates:
        if previous is not None and day <= previous:
            raise MarketDataError(f"{what} dates are not strictly increasing at {day}")
        previous = day


def back_adjust(bars: Sequence[PriceBar]) -> tuple[int, ...]:
    """Subtract each dividend from every close strictly before its ex-date."""
    adjusted = [0] * len(bars)
    later_dividends = 0
    for index in range(len(bars) - 1, -1, -1):
        adjusted[index] = bars[index].close - later_dividends
        later_dividends += bars[index].dividend
    return tuple(adjusted)


def build_series(
    bars: Sequence[PriceBar], shorts: Sequence[ShortRecord], ticker: str
) -> tuple[MarketSeries, AlignmentReport]:
    """Align price and short data over their common dates.

    Changes are reconciled over the aligned days, so a differenced change spans
    any short-only day that was dropped.
    """
    _check_sorted((bar.date for bar in bars), "price")
    _check_sorted((record.date for record in shorts), "short")

    price_by_date = {bar.date: bar for bar in bars}
    short_by_date = {record.date: record for record in shorts}
    common = sorted(price_by_date.keys() & short_by_date.keys())
    if not common:
        raise MarketDataError(f"no overlapping dates between price and short data for {ticker}")
    reconciled = {
        record.date: record
        for record in reconcile_deltas([short_by_date[day] for day in common])
    }

    common_set = set(common)
    dropped_price = len(price_by_date) - len(common)
    dropped_short = len(short_by_date) - len(common)
    dropped_dividends = sum(
        1 for bar in bars if bar.dividend > 0 and bar.date not in common_set
    )
    if dropped_price or dropped_short:
        _LOGGER.warning(
            "Dropped %s price-only and %s short-only days for %s",
            dropped_price,
            dropped_short,
            ticker,
        )
    if dropped_dividends:
        _LOGGER.warning(
            "%s ex-dividend days for %s have no short data; their dividends are not adjusted",
            dropped_dividends,
            ticker,
        )

    days = tuple(MarketDay(price_by_date[day], reconciled[day]) for day in common)
    series = MarketSeries(
        ticker=ticker,
        days=days,
        adjusted_close=back_adjust([day.bar for day in days]),
    )

    shorts_used = [day.short for day in days]
    report: AlignmentReport = {
        "schema": SCHEMA_ALIGNMENT,
        "ticker": ticker,
        "price_days": len(price_by_date),
        "short_days": len(short_by_date),
        "aligned_days": len(days),
        "dropped_price_only": dropped_price,
        "dropped_short_only": dropped_short,
        "dropped_total": dropped_price + dropped_short,
        "dropped_dividends": dropped_dividends,
        "reported_deltas": sum(1 for s in shorts_used if s.delta_source == "reported"),
        "differenced_deltas": sum(
            1 for s in shorts_used if s.delta_source == "differenced"
        ),
        "reconciliation_gap_total": sum(s.reconciliation_gap for s in shorts_used),
        "reconciliation_gap_abs_total": sum(
            abs(s.reconciliation_gap) for s in shorts_used
        ),
    }
    _LOGGER.info("Built %s series with %s aligned days", ticker, len(days))
    return series, report


def _to_csv(rows: list[dict[str, Any]], header: Sequence[str]) -> str:
    frame = pd.DataFrame(rows, columns=list(header))
    return frame.to_csv(index=False, lineterminator="\n")


def write_price_csv(series: MarketSeries) -> str:
    """Serialize the price side of a series in the ingestion schema."""
    rows = [
        {
            "date": iso(day.date),
            "high": format_money(day.high),
            "low": format_money(day.low),
            "close": format_money(day.close),
            "volume": str(day.volume),
            "dividend": format_money(day.dividend) if day.dividend else "0",
        }
        for day in series.days
    ]
    return _to_csv(rows, PRICE_HEADER)


def write_short_csv(series: MarketSeries) -> str:
    """Serialize the short side; only reported changes are written back."""
    rows = [
        {
            "date": iso(day.date),
            "total_short_interest": str(day.short_interest),
            "delta_short_interest": (
                str(day.short.reported_delta)
                if day.short.reported_delta is not None
                else ""
            ),
        }
        for day in series.days
    ]
    return _to_csv(rows, SHORT_HEADER)


def series_csv(series: MarketSeries) -> str:
    """Plot rows for the price band, volume and short-interest panels."""
    rows = [
        {
            "date": iso(day.date),
            "high": format_money(day.high),
            "low": format_money(day.low),
            "close": format_money(day.close),
            "adjusted_close": format_money(adjusted),
            "volume": str(day.volume),
            "short_interest": str(day.short_interest),
            "delta_short_interest": "" if day.delta is None else str(day.delta),
        }
        for day, adjusted in zip(series.days, series.adjusted_close)
    ]
    return _to_csv(rows, SERIES_HEADER)


def load_series(
    price_path: str, short_path: str, ticker: str
) -> tuple[MarketSeries, AlignmentReport]:
    """Read both CSV files from disk and align them."""
    try:
        with open(price_path, "rb") as handle:
            bars = parse_price_csv(handle, source=price_path)
        with open(short_path, "rb") as handle:
            shorts = parse_short_csv(handle, source=short_path)
    except OSError as err:
        raise MarketDataError(f"cannot read input: {err}") from err
    return build_series(bars, shorts, ticker)
