"""Type definitions for Bear Raid Detection."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date
from typing import Literal, TypedDict, Union

TailSide = Literal["upper", "lower"]

DeltaSource = Literal["reported", "differenced"]

AnomalyKind = Literal["open_spike", "cover_spike"]

DividendScreen = Literal["excluded", "possible", "no-dividend-nearby"]

LaplaceTailForm = Literal["normalized", "caption"]

TailModel = Literal["power_law", "laplace"]


@dataclass(frozen=True)
class PriceBar:
    """One trading day of price and volume; money in ticks of 1/10000 dollar."""

    date: date
    high: int
    low: int
    close: int
    volume: int
    dividend: int = 0

    @property
    def is_ex_dividend(self) -> bool:
        return self.dividend > 0


@dataclass(frozen=True)
class ShortRecord:
    """One day of securities-lending data."""

    date: date
    total_short_interest: int
    reported_delta: int | None = None
    delta_source: DeltaSource = "differenced"
    reconciliation_gap: int = 0
    # Resolved change in short interest; None until reconciled or for the first day
    delta: int | None = None


@dataclass(frozen=True)
class MarketDay:
    """A trading day with both price and short-interest data."""

    bar: PriceBar
    short: ShortRecord

    @property
    def date(self) -> date:
        return self.bar.date

    @property
    def high(self) -> int:
        return self.bar.high

    @property
    def low(self) -> int:
        return self.bar.low

    @property
    def close(self) -> int:
        return self.bar.close

    @property
    def volume(self) -> int:
        return self.bar.volume

    @property
    def dividend(self) -> int:
        return self.bar.dividend

    @property
    def short_interest(self) -> int:
        return self.short.total_short_interest

    @property
    def delta(self) -> int | None:
        return self.short.delta


@dataclass(frozen=True)
class MarketSeries:
    """Aligned daily records for one ticker, read-only once built."""

    ticker: str
    days: tuple[MarketDay, ...]
    adjusted_close: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.days)

    @property
    def dates(self) -> tuple[date, ...]:
        return tuple(day.date for day in self.days)

    @property
    def volumes(self) -> tuple[int, ...]:
        return tuple(day.volume for day in self.days)

    @property
    def short_interest(self) -> tuple[int, ...]:
        return tuple(day.short_interest for day in self.days)

    @property
    def ex_dividend_dates(self) -> frozenset[date]:
        return frozenset(day.date for day in self.days if day.bar.is_ex_dividend)


@dataclass(frozen=True)
class DayMetrics:
    """Per-day ratios; None marks an undefined value."""

    date: date
    R: float | None
    Q: float | None
    si_level_ratio: float | None
    adj_price_change: int | None
    adj_price_change_pct: float | None
    alt_uptick_triggered: bool
    volume_jump: float | None = None


@dataclass(frozen=True)
class EcdfPoints:
    """Empirical tail distribution at each distinct sample value."""

    side: TailSide
    x: tuple[float, ...]
    p: tuple[float, ...]
    n: int

    def __len__(self) -> int:
        return len(self.x)


@dataclass(frozen=True)
class PowerLawFit:
    """Upper tail fitted as p = c * x**alpha above x_min."""

    alpha: float
    c: float
    x_min: float
    ks: float
    alpha_stderr: float = 0.0
    n_points: int = 0


@dataclass(frozen=True)
class LaplaceFit:
    """Laplace CDF fitted to the whole empirical distribution."""

    beta: float
    gamma: float
    ks: float
    n_samples: int = 0
    residual: float = 0.0


TailFit = Union[PowerLawFit, LaplaceFit]


@dataclass(frozen=True)
class FitResult:
    """A fit together with the data it was produced from."""

    name: str
    model: TailModel
    fit: TailFit
    points: EcdfPoints
    included: int
    excluded: int
    excluded_dates: tuple[date, ...] = ()


@dataclass(frozen=True)
class TailFits:
    """The three fits used to attach probabilities; any may be missing."""

    r_positive: FitResult | None = None
    r_negative: FitResult | None = None
    q: FitResult | None = None
    r_samples: tuple[float, ...] = ()
    errors: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class Anomaly:
    """A flagged trading day."""

    date: date
    index: int
    kind: AnomalyKind
    R: float
    Q: float | None
    si_level_ratio: float | None
    p_R: float | None = None
    p_Q: float | None = None
    p_R_gaussian: float | None = None
    notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class RaidCandidate:
    """An opening spike paired with the cover spike that restored its baseline."""

    open: Anomaly
    cover: Anomaly
    separation: int
    baseline_gap: float
    p_joint: float | None = None
    waiting_time_years: float | None = None
    profit_estimate: int = 0  # cents
    off_market_residual: int = 0
    screens: dict[str, str | bool] = field(default_factory=dict)
    cover_to_open_ratio: float | None = None
    intervening_change: int = 0
    open_notional: int = 0  # cents
    volume_jump: float | None = None


@dataclass(frozen=True)
class LagResult:
    """Outcome of the reporting-lag check around a short-sale ban."""

    lag: int | None
    score: float
    scores: tuple[float, ...]
    inconclusive: bool
    ban_start: date
    ban_end: date


@dataclass(frozen=True)
class PowerLawTail:
    """Sampling distribution for a power-law upper tail."""

    c: float
    alpha: float
    x_min: float


@dataclass(frozen=True)
class LaplaceDist:
    """Sampling distribution for a Laplace variable."""

    beta: float
    gamma: float


SamplingDistribution = Union[PowerLawTail, LaplaceDist]


@dataclass(frozen=True)
class BackgroundSpec:
    """Background statistics of a synthetic series."""

    n_days: int
    mean_volume: int
    volume_tail_alpha: float
    r_laplace: tuple[float, float]
    r_positive_tail: tuple[float, float]
    base_short_interest: int
    price_start: float
    daily_volatility: float
    seed: int
    ticker: str = "SYN"
    start_date: date = date(2007, 1, 2)
    volume_tail_weight: float = 0.05
    volume_tail_x_min: float = 1.5
    volume_body_sigma: float = 0.25


@dataclass(frozen=True)
class RaidSpec:
    """A raid to plant in a synthetic series."""

    open_day: int
    separation: int
    open_R: float
    open_Q: float
    price_drop_pct: float
    restore_baseline: bool = True
    cover_R: float = -1.67
    cover_fraction: float = 1.0
    dividend: float = 0.0


@dataclass(frozen=True)
class BanSpec:
    """A short-sale ban window (day indices) and the reporting lag to simulate."""

    start_day: int
    end_day: int
    lag: int = 0


@dataclass(frozen=True)
class SynthSpec:
    """A complete synthetic scenario: background, planted raids and an optional ban."""

    background: BackgroundSpec
    raids: tuple[RaidSpec, ...] = ()
    ban: BanSpec | None = None


class AlignmentReport(TypedDict):
    """Counts produced when aligning price and short data."""

    schema: str
    ticker: str
    price_days: int
    short_days: int
    aligned_days: int
    dropped_price_only: int
    dropped_short_only: int
    dropped_total: int
    dropped_dividends: int
    reported_deltas: int
    differenced_deltas: int
    reconciliation_gap_total: int
    reconciliation_gap_abs_total: int


class FitPayload(TypedDict, total=False):
    """Serialized tail fit."""

    model: str
    parameters: dict[str, float]
    x_min: float | None
    ks: float
    included: int
    excluded: int
    excluded_dates: list[str]
    error: str


class AnomalyPayload(TypedDict):
    """Serialized anomaly."""

    date: str
    kind: str
    R: float
    Q: float | None
    si_level_ratio: float | None
    p_R: float | None
    p_Q: float | None
    p_R_gaussian: float | None
    notes: list[str]


class CandidatePayload(TypedDict):
    """Serialized raid candidate."""

    open: AnomalyPayload
    cover: AnomalyPayload
    separation: int
    baseline_gap: float
    p_joint: float | None
    waiting_time_years: float | None
    profit_estimate: str
    off_market_residual: int
    screens: dict[str, str | bool]
    cover_to_open_ratio: float | None
    intervening_change: int
    open_notional: str
    volume_jump: float | None


class GroundTruthEvent(TypedDict):
    """A planted raid as recorded by the generator."""

    open_date: str
    cover_date: str
    open_index: int
    cover_index: int
    open_delta: int
    cover_delta: int
    open_volume: int
    cover_volume: int
    restore_baseline: bool
    modified_days: list[str]
