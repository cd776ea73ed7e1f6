"""Command-line interface for Bear Raid Detection."""

from __future__ import annotations

import argparse
import asyncio
from datetime import date
import logging
import sys
from typing import Any, Sequence

from .config import RunConfig, load_run_config
from .const import (
    CONF_DETECTOR,
    CONF_EXCLUDE_DATES,
    CONF_OUT,
    CONF_PAIRING_WINDOW,
    CONF_PRICE,
    CONF_Q_MIN,
    CONF_R_OPEN_MIN,
    CONF_SEED,
    CONF_SHORT,
    CONF_SYNTH,
    CONF_TICKER,
    CONF_X_MIN_QUANTILE,
    EXIT_INPUT_ERROR,
    EXIT_INTERNAL_ERROR,
    EXIT_OK,
    VERSION,
)
from .coordinator import RaidScanCoordinator
from .exceptions import BearRaidError, ConfigError
from .helpers import parse_date
from .types import LagResult, RaidCandidate, TailFits

_LOGGER = logging.getLogger(__name__)

LOG_FORMAT = (
    "%(asctime)s.%(msecs)03d %(levelname)-8s %(threadName)s "
    "%(name)s:%(filename)s:%(lineno)s %(message)s"
)
LOG_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def _date_arg(text: str) -> date:
    try:
        return parse_date(text)
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"not an ISO date: {text!r}") from err


def _date_list_arg(text: str) -> list[str]:
    days = [part.strip() for part in text.split(",") if part.strip()]
    for day in days:
        _date_arg(day)
    return days


def _common_arguments() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", help="run configuration JSON file")
    parent.add_argument("--out", help="output directory")
    parent.add_argument("--seed", type=int, help="seed for synthetic inputs")
    parent.add_argument("--ticker", help="ticker name used in reports")
    parent.add_argument(
        "-v", "--verbose", action="store_true", help="log debug messages"
    )
    return parent


def _input_arguments() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--price", help="daily price CSV")
    parent.add_argument("--short", help="daily short-interest CSV")
    parent.add_argument("--synth", help="synthetic spec JSON used instead of CSV input")
    parent.add_argument("--r-open-min", type=float, help="R threshold for spikes")
    parent.add_argument("--q-min", type=float, help="Q threshold for opening spikes")
    parent.add_argument(
        "--pairing-window", type=int, help="max trading days from open to cover"
    )
    parent.add_argument(
        "--x-min-quantile", type=float, help="power-law threshold quantile"
    )
    parent.add_argument(
        "--exclude-dates",
        type=_date_list_arg,
        help="comma-separated ISO dates left out of the fits",
    )
    return parent


def build_parser() -> argparse.ArgumentParser:
    """Create the argument parser with one subcommand per operation."""
    common = _common_arguments()
    inputs = _input_arguments()
    parser = argparse.ArgumentParser(
        prog="bear-raid",
        description="Detect bear-raid signatures in daily short-interest data.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    commands = parser.add_subparsers(dest="command", required=True)

    commands.add_parser(
        "fit", parents=[common, inputs], help="fit the R and Q tail distributions"
    )
    commands.add_parser(
        "scan", parents=[common, inputs], help="scan for raid candidates"
    )
    ban = commands.add_parser(
        "screen-ban",
        parents=[common, inputs],
        help="estimate reporting lag around a short-sale ban",
    )
    ban.add_argument("--ban-start", type=_date_arg, help="first day of the ban")
    ban.add_argument("--ban-end", type=_date_arg, help="last day of the ban")
    synth = commands.add_parser(
        "synth", parents=[common], help="write a synthetic scenario as CSV files"
    )
    synth.add_argument("--spec", help="synthetic spec JSON (defaults apply without one)")
    return parser


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    """Map command-line flags onto run-config keys."""
    overrides: dict[str, Any] = {
        CONF_OUT: args.out,
        CONF_SEED: args.seed,
        CONF_TICKER: args.ticker,
        CONF_PRICE: getattr(args, "price", None),
        CONF_SHORT: getattr(args, "short", None),
        CONF_SYNTH: getattr(args, "synth", None) or getattr(args, "spec", None),
    }
    overrides[CONF_DETECTOR] = {
        CONF_R_OPEN_MIN: getattr(args, "r_open_min", None),
        CONF_Q_MIN: getattr(args, "q_min", None),
        CONF_PAIRING_WINDOW: getattr(args, "pairing_window", None),
        CONF_X_MIN_QUANTILE: getattr(args, "x_min_quantile", None),
        CONF_EXCLUDE_DATES: getattr(args, "exclude_dates", None),
    }
    return overrides


def cmd_fit(config: RunConfig) -> TailFits:
    """Fit the tails and write the fit report and CDF overlays."""
    return asyncio.run(RaidScanCoordinator(config).async_run_fit())


def cmd_scan(config: RunConfig) -> list[RaidCandidate]:
    """Scan for raid candidates and write the report, scatter and plot data."""
    return asyncio.run(RaidScanCoordinator(config).async_run_scan())


def cmd_screen_ban(
    config: RunConfig, ban_start: date | None = None, ban_end: date | None = None
) -> LagResult:
    """Estimate the reporting lag around a ban window and write the lag report."""
    return asyncio.run(
        RaidScanCoordinator(config).async_run_screen_ban(ban_start, ban_end)
    )


def cmd_synth(config: RunConfig) -> dict[str, Any]:
    """Write the synthetic scenario named by the config (or the default one)."""
    return asyncio.run(RaidScanCoordinator(config).async_run_synth())


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format=LOG_FORMAT,
        datefmt=LOG_DATE_FORMAT,
    )


def main(argv: Sequence[str] | None = None) -> int:
    """CLI entrypoint; returns the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)

    try:
        config = load_run_config(
            args.config, _overrides(args), require_input=args.command != "synth"
        )
        if args.command == "fit":
            cmd_fit(config)
        elif args.command == "scan":
            candidates = cmd_scan(config)
            _LOGGER.info("Found %s raid candidates", len(candidates))
        elif args.command == "screen-ban":
            result = cmd_screen_ban(config, args.ban_start, args.ban_end)
            if result.inconclusive:
                _LOGGER.info("Reporting lag inconclusive (score %.3f)", result.score)
            else:
                _LOGGER.info("Reporting lag %s days (score %.3f)", result.lag, result.score)
        elif args.command == "synth":
            if config.price or config.short:
                raise ConfigError("synth takes a spec, not price/short files")
            cmd_synth(config)
        return EXIT_OK
    except BearRaidError as err:
        _LOGGER.error("%s", err)
        return EXIT_INPUT_ERROR
    except Exception as err:  # pylint: disable=broad-except
        _LOGGER.exception("Unexpected error: %s", err)
        return EXIT_INTERNAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
