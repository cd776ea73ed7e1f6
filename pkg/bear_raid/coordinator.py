"""Coordinator for Bear Raid Detection runs."""

from __future__ import annotations

import asyncio
from datetime import date
import logging
import os
from typing import Any

from .config import RunConfig, load_synth_spec
from .const import (
    FILE_ALIGNMENT,
    FILE_CANDIDATES,
    FILE_FITS,
    FILE_GROUND_TRUTH,
    FILE_LAG,
    FILE_METRICS,
    FILE_OVERLAY_Q,
    FILE_OVERLAY_R_NEGATIVE,
    FILE_OVERLAY_R_POSITIVE,
    FILE_PRICE,
    FILE_SCATTER,
    FILE_SERIES,
    FILE_SHORT,
    SCHEMA_ALIGNMENT,
    SCHEMA_FITS,
)
from .detector import candidates_report, detect_raids, lag_report, reporting_lag_check
from .exceptions import DetectorError, FitError, MetricsError
from .helpers import parse_date
from .market_data import (
    load_series,
    series_csv,
    write_price_csv,
    write_short_csv,
)
from .metrics import compute_metrics, metrics_csv, scatter_csv
from .storage import ReportStorage
from .synthetic import generate_scenario
from .tail_fit import (
    FIT_NAMES,
    FIT_Q,
    FIT_R_NEGATIVE,
    FIT_R_POSITIVE,
    assemble_fits,
    fit_named,
    fits_payload,
    overlay_csv,
    scannable_samples,
)
from .types import AlignmentReport, DayMetrics, MarketSeries, RaidCandidate, TailFits

_LOGGER = logging.getLogger(__name__)

OVERLAY_FILES = {
    FIT_R_POSITIVE: FILE_OVERLAY_R_POSITIVE,
    FIT_R_NEGATIVE: FILE_OVERLAY_R_NEGATIVE,
    FIT_Q: FILE_OVERLAY_Q,
}


def _synthetic_alignment(series: MarketSeries) -> AlignmentReport:
    return {
        "schema": SCHEMA_ALIGNMENT,
        "ticker": series.ticker,
        "price_days": len(series),
        "short_days": len(series),
        "aligned_days": len(series),
        "dropped_price_only": 0,
        "dropped_short_only": 0,
        "dropped_total": 0,
        "dropped_dividends": 0,
        "reported_deltas": 0,
        "differenced_deltas": len(series),
        "reconciliation_gap_total": 0,
        "reconciliation_gap_abs_total": 0,
    }


class RaidScanCoordinator:
    """Drive one run: load inputs, compute metrics, fit tails, scan and write reports."""

    def __init__(self, config: RunConfig) -> None:
        """Initialize the coordinator."""
        self.config = config
        self.detector = config.detector
        self.storage = ReportStorage(config.out)

        self.series: MarketSeries | None = None
        self.alignment: AlignmentReport | None = None
        self.ground_truth: dict[str, Any] | None = None
        self.metrics: list[DayMetrics] = []
        self.fits: TailFits | None = None
        self.candidates: list[RaidCandidate] = []

    @property
    def ticker(self) -> str:
        if self.series is not None:
            return self.series.ticker
        if self.config.ticker:
            return self.config.ticker
        if self.config.price:
            return os.path.splitext(os.path.basename(self.config.price))[0]
        return "UNKNOWN"

    async def async_load(self) -> MarketSeries:
        """Load or synthesize the series and check it covers the warm-up."""
        if self.config.uses_synth:
            spec = await asyncio.to_thread(
                load_synth_spec, self.config.synth, self.config.seed
            )
            series, ground_truth = await asyncio.to_thread(generate_scenario, spec)
            if self.config.ticker:
                series = MarketSeries(
                    self.config.ticker, series.days, series.adjusted_close
                )
            self.ground_truth = ground_truth
            self.alignment = _synthetic_alignment(series)
        else:
            series, self.alignment = await asyncio.to_thread(
                load_series, self.config.price, self.config.short, self.ticker
            )

        window = self.detector.window
        if len(series) < window + 1:
            raise MetricsError(
                f"insufficient data for {window}-day warm-up: {len(series)} aligned days"
            )
        self.series = series
        return series

    async def async_compute_metrics(self) -> list[DayMetrics]:
        """Compute per-day metrics for the loaded series."""
        if self.series is None:
            await self.async_load()
        self.metrics = await asyncio.to_thread(
            compute_metrics,
            self.series,
            self.detector.window,
            self.detector.short_lag,
            self.detector.alt_uptick_threshold,
            self.detector.alt_uptick_inclusive,
        )
        return self.metrics

    async def async_fit(self) -> TailFits:
        """Fit the three tails concurrently; a failed fit is recorded, not raised."""
        if not self.metrics:
            await self.async_compute_metrics()
        r_samples, q_samples = scannable_samples(self.metrics)
        excluded = tuple(sorted(self.detector.exclude_dates))

        async def _fit_one(name: str):
            try:
                return await asyncio.to_thread(
                    fit_named,
                    name,
                    r_samples,
                    q_samples,
                    excluded,
                    self.detector.x_min_quantile,
                )
            except FitError as err:
                return err

        outcomes = await asyncio.gather(*(_fit_one(name) for name in FIT_NAMES))
        self.fits = assemble_fits(dict(zip(FIT_NAMES, outcomes)), r_samples, excluded)
        return self.fits

    def _fit_report(self) -> dict[str, Any]:
        return {
            "schema": SCHEMA_FITS,
            "ticker": self.ticker,
            "x_min_quantile": self.detector.x_min_quantile,
            "exclude_dates": self.detector.as_dict()["exclude_dates"],
            "fits": fits_payload(self.fits),
        }

    async def _async_finish(self, command: str) -> None:
        await self.storage.async_save_run_metadata(
            command,
            {
                "ticker": self.ticker,
                "seed": self.config.seed,
                "days": len(self.series) if self.series is not None else 0,
            },
        )
        _LOGGER.info(
            "%s: wrote %s files to %s", command, len(self.storage.written), self.config.out
        )

    async def async_run_fit(self) -> TailFits:
        """Fit tails and write the fit report with one overlay file per fit."""
        await self.async_fit()
        await self.storage.async_save_json(FILE_ALIGNMENT, self.alignment)
        await self.storage.async_save_json(FILE_FITS, self._fit_report())
        for name, filename in OVERLAY_FILES.items():
            result = getattr(self.fits, name)
            if result is not None:
                await self.storage.async_save_text(filename, overlay_csv(result))
        await self._async_finish("fit")
        return self.fits

    async def async_run_scan(self) -> list[RaidCandidate]:
        """Scan for raids and write the candidate report and plot data."""
        await self.async_fit()
        self.candidates = await asyncio.to_thread(
            detect_raids, self.series, self.metrics, self.fits, self.detector
        )
        await self.storage.async_save_json(FILE_ALIGNMENT, self.alignment)
        await self.storage.async_save_json(
            FILE_CANDIDATES,
            candidates_report(self.ticker, self.candidates, self.fits, self.detector),
        )
        await self.storage.async_save_text(FILE_SCATTER, scatter_csv(self.metrics))
        await self.storage.async_save_text(FILE_METRICS, metrics_csv(self.metrics))
        await self.storage.async_save_text(FILE_SERIES, series_csv(self.series))
        await self._async_finish("scan")
        return self.candidates

    def _ban_window(
        self, ban_start: date | None, ban_end: date | None
    ) -> tuple[date, date]:
        start = ban_start or self.config.ban_start
        end = ban_end or self.config.ban_end
        if (start is None or end is None) and self.ground_truth:
            ban = self.ground_truth.get("ban")
            if ban:
                start = start or parse_date(ban["start_date"])
                end = end or parse_date(ban["end_date"])
        if start is None or end is None:
            raise DetectorError("a ban window needs both a start and an end date")
        return start, end

    async def async_run_screen_ban(
        self, ban_start: date | None = None, ban_end: date | None = None
    ):
        """Estimate the reporting lag around a short-sale ban and write the result."""
        if self.series is None:
            await self.async_load()
        window = self._ban_window(ban_start, ban_end)
        result = await asyncio.to_thread(
            reporting_lag_check,
            [day.short for day in self.series.days],
            window,
            self.detector.lag_max,
            self.detector.lag_score_floor,
        )
        await self.storage.async_save_json(
            FILE_LAG, lag_report(self.ticker, result, self.detector)
        )
        await self._async_finish("screen-ban")
        return result

    async def async_run_synth(self) -> dict[str, Any]:
        """Write a synthetic scenario as ingestion files plus its ground truth."""
        spec = await asyncio.to_thread(load_synth_spec, self.config.synth, self.config.seed)
        series, ground_truth = await asyncio.to_thread(generate_scenario, spec)
        self.series, self.ground_truth = series, ground_truth
        await self.storage.async_save_text(FILE_PRICE, write_price_csv(series))
        await self.storage.async_save_text(FILE_SHORT, write_short_csv(series))
        await self.storage.async_save_json(FILE_GROUND_TRUTH, ground_truth)
        await self._async_finish("synth")
        return ground_truth
