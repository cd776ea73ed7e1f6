"""Bear Raid Detection: find coordinated short-selling signatures in daily market data."""

from __future__ import annotations

from .config import DetectorConfig, RunConfig, load_run_config, load_synth_spec
from .const import DOMAIN, VERSION
from .coordinator import RaidScanCoordinator
from .detector import (
    detect_raids,
    dividend_arbitrage_screen,
    estimate_profit,
    event_probability,
    joint_probability,
    off_market_residual,
    pair_candidates,
    reporting_lag_check,
    scan_anomalies,
    waiting_time_years,
)
from .exceptions import (
    BearRaidError,
    ConfigError,
    DetectorError,
    FitDomainError,
    FitError,
    MarketDataError,
    MetricsError,
    SyntheticError,
)
from .market_data import build_series, load_series, parse_price_csv, parse_short_csv
from .metrics import (
    adjusted_price_change,
    alt_uptick_triggered,
    compute_metrics,
    level_ratio,
    short_change_ratio,
    trailing_mean,
    volume_ratio,
)
from .synthetic import generate_background, inject_ban, inject_raid, sample_tail
from .tail_fit import (
    ecdf_tail,
    fit_laplace,
    fit_power_tail,
    fit_with_exclusions,
    tail_probability,
)

__version__ = VERSION

__all__ = [
    "BearRaidError",
    "ConfigError",
    "DOMAIN",
    "DetectorConfig",
    "DetectorError",
    "FitDomainError",
    "FitError",
    "MarketDataError",
    "MetricsError",
    "RaidScanCoordinator",
    "RunConfig",
    "SyntheticError",
    "adjusted_price_change",
    "alt_uptick_triggered",
    "build_series",
    "compute_metrics",
    "detect_raids",
    "dividend_arbitrage_screen",
    "ecdf_tail",
    "estimate_profit",
    "event_probability",
    "fit_laplace",
    "fit_power_tail",
    "fit_with_exclusions",
    "generate_background",
    "inject_ban",
    "inject_raid",
    "joint_probability",
    "level_ratio",
    "load_run_config",
    "load_series",
    "load_synth_spec",
    "off_market_residual",
    "pair_candidates",
    "parse_price_csv",
    "parse_short_csv",
    "reporting_lag_check",
    "sample_tail",
    "scan_anomalies",
    "short_change_ratio",
    "tail_probability",
    "trailing_mean",
    "volume_ratio",
    "waiting_time_years",
]
