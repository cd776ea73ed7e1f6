"""Constants for the Bear Raid Detection package."""

from __future__ import annotations

from typing import Final

DOMAIN: Final = "bear_raid"
VERSION: Final = "2024.12.3"

# Report schema identifiers
SCHEMA_CANDIDATES: Final = "bear-raid/candidates/1"
SCHEMA_FITS: Final = "bear-raid/fits/1"
SCHEMA_LAG: Final = "bear-raid/reporting-lag/1"
SCHEMA_ALIGNMENT: Final = "bear-raid/alignment/1"
SCHEMA_GROUND_TRUTH: Final = "bear-raid/ground-truth/1"
SCHEMA_RUN_METADATA: Final = "bear-raid/run-metadata/1"

# Money is stored as integer ticks of 1/10000 dollar (hundredths of a cent)
TICKS_PER_DOLLAR: Final = 10_000
TICKS_PER_CENT: Final = 100

# Ingestion headers
PRICE_HEADER: Final = ("date", "high", "low", "close", "volume", "dividend")
SHORT_HEADER: Final = ("date", "total_short_interest", "delta_short_interest")
METRICS_HEADER: Final = (
    "date",
    "R",
    "Q",
    "si_level_ratio",
    "adj_change",
    "adj_change_pct",
    "alt_uptick",
)
SERIES_HEADER: Final = (
    "date",
    "high",
    "low",
    "close",
    "adjusted_close",
    "volume",
    "short_interest",
    "delta_short_interest",
)
SCATTER_HEADER: Final = ("date", "Q", "R")
OVERLAY_HEADER: Final = ("x", "empirical_p", "fitted_p")

# Run configuration keys
CONF_TICKER: Final = "ticker"
CONF_PRICE: Final = "price"
CONF_SHORT: Final = "short"
CONF_SYNTH: Final = "synth"
CONF_OUT: Final = "out"
CONF_SEED: Final = "seed"
CONF_DETECTOR: Final = "detector"
CONF_BAN_START: Final = "ban_start"
CONF_BAN_END: Final = "ban_end"

# Detector configuration keys
CONF_R_OPEN_MIN: Final = "r_open_min"
CONF_Q_MIN: Final = "q_min"
CONF_PAIRING_WINDOW: Final = "pairing_window"
CONF_BASELINE_TOLERANCE: Final = "baseline_tolerance"
CONF_JOINT_WINDOW: Final = "joint_window"
CONF_TRADING_DAYS_PER_YEAR: Final = "trading_days_per_year"
CONF_EXCLUDE_DATES: Final = "exclude_dates"
CONF_WINDOW: Final = "window"
CONF_SHORT_LAG: Final = "short_lag"
CONF_X_MIN_QUANTILE: Final = "x_min_quantile"
CONF_ALT_UPTICK_THRESHOLD: Final = "alt_uptick_threshold"
CONF_ALT_UPTICK_INCLUSIVE: Final = "alt_uptick_inclusive"
CONF_DIVIDEND_LOOKAHEAD: Final = "dividend_lookahead"
CONF_LAPLACE_TAIL_FORM: Final = "laplace_tail_form"
CONF_LAG_MAX: Final = "lag_max"
CONF_LAG_SCORE_FLOOR: Final = "lag_score_floor"

# Synthetic spec keys
CONF_BACKGROUND: Final = "background"
CONF_RAIDS: Final = "raids"
CONF_BAN: Final = "ban"

# Default values
DEFAULT_TICKER: Final = "SYN"
DEFAULT_WINDOW: Final = 63  # trading days, three months
DEFAULT_R_OPEN_MIN: Final = 0.5
DEFAULT_Q_MIN: Final = 3.0
DEFAULT_PAIRING_WINDOW: Final = 10
DEFAULT_BASELINE_TOLERANCE: Final = 0.10
DEFAULT_JOINT_WINDOW: Final = 6
DEFAULT_TRADING_DAYS_PER_YEAR: Final = 250
DEFAULT_SHORT_LAG: Final = 0
DEFAULT_X_MIN_QUANTILE: Final = 0.8
DEFAULT_ALT_UPTICK_THRESHOLD: Final = 0.10
DEFAULT_ALT_UPTICK_INCLUSIVE: Final = False
DEFAULT_DIVIDEND_LOOKAHEAD: Final = 5
DEFAULT_LAPLACE_TAIL_FORM: Final = "normalized"
DEFAULT_LAG_MAX: Final = 10
DEFAULT_LAG_SCORE_FLOOR: Final = 0.2
DEFAULT_SEED: Final = 42

# Fitting limits
MIN_ECDF_SAMPLES: Final = 2
MIN_POWER_POINTS: Final = 3
MIN_LAPLACE_SAMPLES: Final = 10
LAPLACE_MAX_NFEV: Final = 200

# Synthetic background defaults
DEFAULT_N_DAYS: Final = 504
DEFAULT_MEAN_VOLUME: Final = 50_000_000
DEFAULT_VOLUME_TAIL_ALPHA: Final = -3.34
DEFAULT_VOLUME_TAIL_WEIGHT: Final = 0.05
DEFAULT_VOLUME_TAIL_X_MIN: Final = 1.5
DEFAULT_VOLUME_BODY_SIGMA: Final = 0.25
DEFAULT_R_LAPLACE: Final = (0.0, 0.048)
DEFAULT_R_POSITIVE_TAIL: Final = (1.4e-5, -1.35)
DEFAULT_BASE_SHORT_INTEREST: Final = 500_000_000
DEFAULT_PRICE_START: Final = 40.0
DEFAULT_DAILY_VOLATILITY: Final = 0.02
DEFAULT_START_DATE: Final = "2007-01-02"
DEFAULT_COVER_R: Final = -1.67
DEFAULT_COVER_FRACTION: Final = 1.0

# Output file names
FILE_ALIGNMENT: Final = "alignment.json"
FILE_FITS: Final = "fit_report.json"
FILE_OVERLAY_R_POSITIVE: Final = "cdf_r_positive.csv"
FILE_OVERLAY_R_NEGATIVE: Final = "cdf_r_negative.csv"
FILE_OVERLAY_Q: Final = "cdf_q.csv"
FILE_CANDIDATES: Final = "candidates.json"
FILE_SCATTER: Final = "scatter.csv"
FILE_METRICS: Final = "metrics.csv"
FILE_SERIES: Final = "series.csv"
FILE_LAG: Final = "ban_lag.json"
FILE_PRICE: Final = "price.csv"
FILE_SHORT: Final = "short.csv"
FILE_GROUND_TRUTH: Final = "ground_truth.json"
FILE_RUN_METADATA: Final = "run_metadata.json"

# Exit codes
EXIT_OK: Final = 0
EXIT_INPUT_ERROR: Final = 1
EXIT_INTERNAL_ERROR: Final = 2
