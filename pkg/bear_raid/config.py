"""Configuration schemas and loaders for Bear Raid Detection."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date
import json
import logging
import os
from typing import Any

import voluptuous as vol

from .const import (
    CONF_ALT_UPTICK_INCLUSIVE,
    CONF_ALT_UPTICK_THRESHOLD,
    CONF_BACKGROUND,
    CONF_BAN,
    CONF_BAN_END,
    CONF_BAN_START,
    CONF_BASELINE_TOLERANCE,
    CONF_DETECTOR,
    CONF_DIVIDEND_LOOKAHEAD,
    CONF_EXCLUDE_DATES,
    CONF_JOINT_WINDOW,
    CONF_LAG_MAX,
    CONF_LAG_SCORE_FLOOR,
    CONF_LAPLACE_TAIL_FORM,
    CONF_OUT,
    CONF_PAIRING_WINDOW,
    CONF_PRICE,
    CONF_Q_MIN,
    CONF_R_OPEN_MIN,
    CONF_RAIDS,
    CONF_SEED,
    CONF_SHORT,
    CONF_SHORT_LAG,
    CONF_SYNTH,
    CONF_TICKER,
    CONF_TRADING_DAYS_PER_YEAR,
    CONF_WINDOW,
    CONF_X_MIN_QUANTILE,
    DEFAULT_ALT_UPTICK_INCLUSIVE,
    DEFAULT_ALT_UPTICK_THRESHOLD,
    DEFAULT_BASE_SHORT_INTEREST,
    DEFAULT_BASELINE_TOLERANCE,
    DEFAULT_COVER_FRACTION,
    DEFAULT_COVER_R,
    DEFAULT_DAILY_VOLATILITY,
    DEFAULT_DIVIDEND_LOOKAHEAD,
    DEFAULT_JOINT_WINDOW,
    DEFAULT_LAG_MAX,
    DEFAULT_LAG_SCORE_FLOOR,
    DEFAULT_LAPLACE_TAIL_FORM,
    DEFAULT_MEAN_VOLUME,
    DEFAULT_N_DAYS,
    DEFAULT_PAIRING_WINDOW,
    DEFAULT_PRICE_START,
    DEFAULT_Q_MIN,
    DEFAULT_R_LAPLACE,
    DEFAULT_R_OPEN_MIN,
    DEFAULT_R_POSITIVE_TAIL,
    DEFAULT_SEED,
    DEFAULT_SHORT_LAG,
    DEFAULT_START_DATE,
    DEFAULT_TICKER,
    DEFAULT_TRADING_DAYS_PER_YEAR,
    DEFAULT_VOLUME_BODY_SIGMA,
    DEFAULT_VOLUME_TAIL_ALPHA,
    DEFAULT_VOLUME_TAIL_WEIGHT,
    DEFAULT_VOLUME_TAIL_X_MIN,
    DEFAULT_WINDOW,
    DEFAULT_X_MIN_QUANTILE,
)
from .exceptions import ConfigError
from .helpers import iso, parse_date
from .types import BackgroundSpec, BanSpec, LaplaceTailForm, RaidSpec, SynthSpec

_LOGGER = logging.getLogger(__name__)

_POSITIVE = vol.Range(min=0, min_included=False)


def _iso_date(value: Any) -> date:
    """Coerce an ISO-8601 string (or a date) to a date."""
    if isinstance(value, date):
        return value
    try:
        return parse_date(str(value))
    except ValueError as err:
        raise vol.Invalid(f"not an ISO date: {value!r}") from err


def _pair(value: Any) -> tuple[float, float]:
    """Coerce a two-element list to a pair of floats."""
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise vol.Invalid("expected a list of two numbers")
    try:
        return float(value[0]), float(value[1])
    except (TypeError, ValueError) as err:
        raise vol.Invalid(f"expected numbers, got {value!r}") from err


def create_detector_schema(defaults: dict[str, Any] | None = None) -> dict:
    """Create the detector schema with optional default values."""
    if defaults is None:
        defaults = {}

    return {
        vol.Optional(
            CONF_R_OPEN_MIN, default=defaults.get(CONF_R_OPEN_MIN, DEFAULT_R_OPEN_MIN)
        ): vol.All(vol.Coerce(float), _POSITIVE),
        vol.Optional(
            CONF_Q_MIN, default=defaults.get(CONF_Q_MIN, DEFAULT_Q_MIN)
        ): vol.All(vol.Coerce(float), _POSITIVE),
        vol.Optional(
            CONF_PAIRING_WINDOW,
            default=defaults.get(CONF_PAIRING_WINDOW, DEFAULT_PAIRING_WINDOW),
        ): vol.All(int, vol.Range(min=1)),
        vol.Optional(
            CONF_BASELINE_TOLERANCE,
            default=defaults.get(CONF_BASELINE_TOLERANCE, DEFAULT_BASELINE_TOLERANCE),
        ): vol.All(
            vol.Coerce(float),
            vol.Range(min=0, max=1, min_included=False, max_included=False),
        ),
        vol.Optional(
            CONF_JOINT_WINDOW,
            default=defaults.get(CONF_JOINT_WINDOW, DEFAULT_JOINT_WINDOW),
        ): vol.All(int, vol.Range(min=1)),
        vol.Optional(
            CONF_TRADING_DAYS_PER_YEAR,
            default=defaults.get(
                CONF_TRADING_DAYS_PER_YEAR, DEFAULT_TRADING_DAYS_PER_YEAR
            ),
        ): vol.All(int, vol.Range(min=1)),
        vol.Optional(
            CONF_EXCLUDE_DATES, default=defaults.get(CONF_EXCLUDE_DATES, [])
        ): [_iso_date],
        vol.Optional(
            CONF_WINDOW, default=defaults.get(CONF_WINDOW, DEFAULT_WINDOW)
        ): vol.All(int, vol.Range(min=1)),
        vol.Optional(
            CONF_SHORT_LAG, default=defaults.get(CONF_SHORT_LAG, DEFAULT_SHORT_LAG)
        ): vol.All(int, vol.Range(min=0)),
        vol.Optional(
            CONF_X_MIN_QUANTILE,
            default=defaults.get(CONF_X_MIN_QUANTILE, DEFAULT_X_MIN_QUANTILE),
        ): vol.All(vol.Coerce(float), vol.Range(min=0, max=1, max_included=False)),
        vol.Optional(
            CONF_ALT_UPTICK_THRESHOLD,
            default=defaults.get(
                CONF_ALT_UPTICK_THRESHOLD, DEFAULT_ALT_UPTICK_THRESHOLD
            ),
        ): vol.All(
            vol.Coerce(float),
            vol.Range(min=0, max=1, min_included=False, max_included=False),
        ),
        vol.Optional(
            CONF_ALT_UPTICK_INCLUSIVE,
            default=defaults.get(
                CONF_ALT_UPTICK_INCLUSIVE, DEFAULT_ALT_UPTICK_INCLUSIVE
            ),
        ): bool,
        vol.Optional(
            CONF_DIVIDEND_LOOKAHEAD,
            default=defaults.get(CONF_DIVIDEND_LOOKAHEAD, DEFAULT_DIVIDEND_LOOKAHEAD),
        ): vol.All(int, vol.Range(min=0)),
        vol.Optional(
            CONF_LAPLACE_TAIL_FORM,
            default=defaults.get(CONF_LAPLACE_TAIL_FORM, DEFAULT_LAPLACE_TAIL_FORM),
        ): vol.In(["normalized", "caption"]),
        vol.Optional(
            CONF_LAG_MAX, default=defaults.get(CONF_LAG_MAX, DEFAULT_LAG_MAX)
        ): vol.All(int, vol.Range(min=0)),
        vol.Optional(
            CONF_LAG_SCORE_FLOOR,
            default=defaults.get(CONF_LAG_SCORE_FLOOR, DEFAULT_LAG_SCORE_FLOOR),
        ): vol.All(vol.Coerce(float), vol.Range(min=0, max=1)),
    }


DETECTOR_SCHEMA = vol.Schema(create_detector_schema())


def _validate(schema: vol.Schema, data: Any, what: str) -> dict[str, Any]:
    try:
        return schema(data)
    except vol.Invalid as err:
        raise ConfigError(f"invalid {what}: {err}") from err


@dataclass(frozen=True)
class DetectorConfig:
    """Thresholds and knobs for scanning, pairing and screening."""

    r_open_min: float = DEFAULT_R_OPEN_MIN
    q_min: float = DEFAULT_Q_MIN
    pairing_window: int = DEFAULT_PAIRING_WINDOW
    baseline_tolerance: float = DEFAULT_BASELINE_TOLERANCE
    joint_window: int = DEFAULT_JOINT_WINDOW
    trading_days_per_year: int = DEFAULT_TRADING_DAYS_PER_YEAR
    exclude_dates: frozenset[date] = field(default_factory=frozenset)
    window: int = DEFAULT_WINDOW
    short_lag: int = DEFAULT_SHORT_LAG
    x_min_quantile: float = DEFAULT_X_MIN_QUANTILE
    alt_uptick_threshold: float = DEFAULT_ALT_UPTICK_THRESHOLD
    alt_uptick_inclusive: bool = DEFAULT_ALT_UPTICK_INCLUSIVE
    dividend_lookahead: int = DEFAULT_DIVIDEND_LOOKAHEAD
    laplace_tail_form: LaplaceTailForm = DEFAULT_LAPLACE_TAIL_FORM
    lag_max: int = DEFAULT_LAG_MAX
    lag_score_floor: float = DEFAULT_LAG_SCORE_FLOOR

    def __post_init__(self) -> None:
        """Validate configuration data."""
        data = self.as_dict()
        _validate(DETECTOR_SCHEMA, data, "detector configuration")
        object.__setattr__(self, "exclude_dates", frozenset(self.exclude_dates))

    @classmethod
    def from_dict(cls, data: dict[str, Any] | None) -> DetectorConfig:
        """Build a config from a (partial) mapping of CONF_* keys."""
        validated = _validate(DETECTOR_SCHEMA, dict(data or {}), "detector configuration")
        validated[CONF_EXCLUDE_DATES] = frozenset(validated[CONF_EXCLUDE_DATES])
        return cls(**validated)

    def as_dict(self) -> dict[str, Any]:
        """Echo the configuration with JSON-safe values."""
        return {
            CONF_R_OPEN_MIN: self.r_open_min,
            CONF_Q_MIN: self.q_min,
            CONF_PAIRING_WINDOW: self.pairing_window,
            CONF_BASELINE_TOLERANCE: self.baseline_tolerance,
            CONF_JOINT_WINDOW: self.joint_window,
            CONF_TRADING_DAYS_PER_YEAR: self.trading_days_per_year,
            CONF_EXCLUDE_DATES: [iso(day) for day in sorted(self.exclude_dates)],
            CONF_WINDOW: self.window,
            CONF_SHORT_LAG: self.short_lag,
            CONF_X_MIN_QUANTILE: self.x_min_quantile,
            CONF_ALT_UPTICK_THRESHOLD: self.alt_uptick_threshold,
            CONF_ALT_UPTICK_INCLUSIVE: self.alt_uptick_inclusive,
            CONF_DIVIDEND_LOOKAHEAD: self.dividend_lookahead,
            CONF_LAPLACE_TAIL_FORM: self.laplace_tail_form,
            CONF_LAG_MAX: self.lag_max,
            CONF_LAG_SCORE_FLOOR: self.lag_score_floor,
        }


BACKGROUND_SCHEMA = vol.Schema(
    {
        vol.Optional("n_days", default=DEFAULT_N_DAYS): vol.All(int, vol.Range(min=64)),
        vol.Optional("mean_volume", default=DEFAULT_MEAN_VOLUME): vol.All(
            int, vol.Range(min=1)
        ),
        vol.Optional("volume_tail_alpha", default=DEFAULT_VOLUME_TAIL_ALPHA): vol.All(
            vol.Coerce(float), vol.Range(max=-1, max_included=False)
        ),
        vol.Optional("r_laplace", default=list(DEFAULT_R_LAPLACE)): _pair,
        vol.Optional("r_positive_tail", default=list(DEFAULT_R_POSITIVE_TAIL)): _pair,
        vol.Optional(
            "base_short_interest", default=DEFAULT_BASE_SHORT_INTEREST
        ): vol.All(int, vol.Range(min=1)),
        vol.Optional("price_start", default=DEFAULT_PRICE_START): vol.All(
            vol.Coerce(float), _POSITIVE
        ),
        vol.Optional("daily_volatility", default=DEFAULT_DAILY_VOLATILITY): vol.All(
            vol.Coerce(float), vol.Range(min=0, max=0.5)
        ),
        vol.Optional(CONF_SEED, default=DEFAULT_SEED): vol.All(
            int, vol.Range(min=0, max=2**64 - 1)
        ),
        vol.Optional(CONF_TICKER, default=DEFAULT_TICKER): vol.All(str, vol.Length(min=1)),
        vol.Optional("start_date", default=DEFAULT_START_DATE): _iso_date,
        vol.Optional("volume_tail_weight", default=DEFAULT_VOLUME_TAIL_WEIGHT): vol.All(
            vol.Coerce(float), vol.Range(min=0, max=1)
        ),
        vol.Optional("volume_tail_x_min", default=DEFAULT_VOLUME_TAIL_X_MIN): vol.All(
            vol.Coerce(float), _POSITIVE
        ),
        vol.Optional("volume_body_sigma", default=DEFAULT_VOLUME_BODY_SIGMA): vol.All(
            vol.Coerce(float), vol.Range(min=0)
        ),
    }
)

RAID_SCHEMA = vol.Schema(
    {
        vol.Required("open_day"): vol.All(int, vol.Range(min=0)),
        vol.Required("separation"): vol.All(int, vol.Range(min=1)),
        vol.Required("open_R"): vol.All(vol.Coerce(float), _POSITIVE),
        vol.Required("open_Q"): vol.All(vol.Coerce(float), _POSITIVE),
        vol.Optional("price_drop_pct", default=0.0): vol.All(
            vol.Coerce(float), vol.Range(min=0, max=1, max_included=False)
        ),
        vol.Optional("restore_baseline", default=True): bool,
        vol.Optional("cover_R", default=DEFAULT_COVER_R): vol.All(
            vol.Coerce(float), vol.Range(max=0, max_included=False)
        ),
        vol.Optional("cover_fraction", default=DEFAULT_COVER_FRACTION): vol.All(
            vol.Coerce(float), vol.Range(min=0)
        ),
        vol.Optional("dividend", default=0.0): vol.All(
            vol.Coerce(float), vol.Range(min=0)
        ),
    }
)

BAN_SCHEMA = vol.Schema(
    {
        vol.Required("start_day"): vol.All(int, vol.Range(min=1)),
        vol.Required("end_day"): vol.All(int, vol.Range(min=1)),
        vol.Optional("lag", default=0): vol.All(int, vol.Range(min=0)),
    }
)

SYNTH_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_BACKGROUND, default={}): BACKGROUND_SCHEMA,
        vol.Optional(CONF_RAIDS, default=[]): [RAID_SCHEMA],
        vol.Optional(CONF_BAN): vol.Any(None, BAN_SCHEMA),
    }
)


def parse_synth_spec(data: dict[str, Any], seed: int | None = None) -> SynthSpec:
    """Validate a synthetic scenario document; `seed` overrides the background seed."""
    validated = _validate(SYNTH_SCHEMA, data, "synthetic spec")
    background = dict(validated[CONF_BACKGROUND])
    if seed is not None:
        background[CONF_SEED] = seed
    background["r_laplace"] = tuple(background["r_laplace"])
    background["r_positive_tail"] = tuple(background["r_positive_tail"])

    ban_data = validated.get(CONF_BAN)
    ban = BanSpec(**ban_data) if ban_data else None
    if ban is not None and ban.end_day < ban.start_day:
        raise ConfigError("invalid synthetic spec: ban end_day before start_day")

    return SynthSpec(
        background=BackgroundSpec(**background),
        raids=tuple(RaidSpec(**raid) for raid in validated[CONF_RAIDS]),
        ban=ban,
    )


def _read_json(path: str, what: str) -> dict[str, Any]:
    try:
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
    except OSError as err:
        raise ConfigError(f"cannot read {what} {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: invalid JSON: {err}") from err
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: {what} must be a JSON object")
    return data


def load_synth_spec(path: str | None, seed: int | None = None) -> SynthSpec:
    """Load a synthetic scenario; without a path every default applies."""
    data = _read_json(path, "synthetic spec") if path else {}
    return parse_synth_spec(data, seed)


RUN_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_TICKER): vol.All(str, vol.Length(min=1)),
        vol.Optional(CONF_PRICE): str,
        vol.Optional(CONF_SHORT): str,
        vol.Optional(CONF_SYNTH): str,
        vol.Optional(CONF_OUT): str,
        vol.Optional(CONF_SEED): vol.All(int, vol.Range(min=0, max=2**64 - 1)),
        vol.Optional(CONF_DETECTOR, default={}): dict,
        vol.Optional(CONF_BAN_START): _iso_date,
        vol.Optional(CONF_BAN_END): _iso_date,
    }
)


@dataclass(frozen=True)
class RunConfig:
    """Everything one command needs: inputs, detector settings and output location."""

    out: str
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    ticker: str | None = None
    price: str | None = None
    short: str | None = None
    synth: str | None = None
    seed: int | None = None
    ban_start: date | None = None
    ban_end: date | None = None

    @property
    def uses_synth(self) -> bool:
        """True when the input is a synthetic scenario rather than CSV files."""
        return self.synth is not None


def _resolve(path: str | None, base: str) -> str | None:
    if path is None or os.path.isabs(path):
        return path
    return os.path.join(base, path)


def load_run_config(
    path: str | None,
    overrides: dict[str, Any] | None = None,
    require_input: bool = True,
) -> RunConfig:
    """Load a run config file and merge command-line overrides over it.

    Paths in the file are relative to the file; override paths are used as given.
    Detector overrides are merged key by key into the file's detector section.
    """
    data: dict[str, Any] = {}
    if path:
        data = _read_json(path, "run config")
        base = os.path.dirname(os.path.abspath(path))
        for key in (CONF_PRICE, CONF_SHORT, CONF_SYNTH, CONF_OUT):
            if key in data and isinstance(data[key], str):
                data[key] = _resolve(data[key], base)

    overrides = dict(overrides or {})
    detector_overrides = overrides.pop(CONF_DETECTOR, {}) or {}
    data.update({key: value for key, value in overrides.items() if value is not None})
    data[CONF_DETECTOR] = {
        **(data.get(CONF_DETECTOR) or {}),
        **{key: value for key, value in detector_overrides.items() if value is not None},
    }

    validated = _validate(RUN_SCHEMA, data, "run config")
    has_files = CONF_PRICE in validated or CONF_SHORT in validated
    has_synth = CONF_SYNTH in validated
    if require_input:
        if has_files and has_synth:
            raise ConfigError("give either price/short files or a synth spec, not both")
        if not has_files and not has_synth:
            raise ConfigError("no input: give --price and --short, or a synth spec")
        if has_files and not (CONF_PRICE in validated and CONF_SHORT in validated):
            raise ConfigError("both price and short files are required")
    if CONF_OUT not in validated:
        raise ConfigError("no output directory given")

    detector = DetectorConfig.from_dict(validated[CONF_DETECTOR])
    _LOGGER.debug("Loaded run config from %s", path or "<command line>")
    return RunConfig(
        out=validated[CONF_OUT],
        detector=detector,
        ticker=validated.get(CONF_TICKER),
        price=validated.get(CONF_PRICE),
        short=validated.get(CONF_SHORT),
        synth=validated.get(CONF_SYNTH),
        seed=validated.get(CONF_SEED),
        ban_start=validated.get(CONF_BAN_START),
        ban_end=validated.get(CONF_BAN_END),
    )
