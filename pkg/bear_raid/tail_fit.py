"""Empirical tail distributions of R and Q and their long-tailed fits."""

from __future__ import annotations

from datetime import date
import logging
import math
import sys
from typing import Any, Iterable, Sequence

import numpy as np
import pandas as pd
from scipy import optimize, stats

from .const import (
    DEFAULT_LAPLACE_TAIL_FORM,
    DEFAULT_X_MIN_QUANTILE,
    LAPLACE_MAX_NFEV,
    MIN_ECDF_SAMPLES,
    MIN_LAPLACE_SAMPLES,
    MIN_POWER_POINTS,
    OVERLAY_HEADER,
)
from .exceptions import FitDomainError, FitError
from .helpers import format_float, iso
from .types import (
    DayMetrics,
    EcdfPoints,
    FitPayload,
    FitResult,
    LaplaceFit,
    LaplaceTailForm,
    PowerLawFit,
    TailFit,
    TailFits,
    TailModel,
    TailSide,
)

_LOGGER = logging.getLogger(__name__)

# Smallest probability ever reported; keeps results inside (0, 1]
MIN_PROBABILITY = sys.float_info.min

FIT_R_POSITIVE = "r_positive"
FIT_R_NEGATIVE = "r_negative"
FIT_Q = "q"
FIT_NAMES = (FIT_R_POSITIVE, FIT_R_NEGATIVE, FIT_Q)


def _finite_array(samples: Iterable[float], minimum: int) -> np.ndarray:
    data = np.asarray(list(samples), dtype=float)
    if data.size < minimum:
        raise FitError(f"need at least {minimum} samples, got {data.size}")
    if not np.all(np.isfinite(data)):
        raise FitError("samples must be finite")
    return data


def _clamp(p: float) -> float:
    return min(1.0, max(MIN_PROBABILITY, p))


def ecdf_tail(samples: Sequence[float], side: TailSide) -> EcdfPoints:
    """Tail probabilities at each distinct sample value.

    Upper: fraction of samples at or above x. Lower: fraction at or below x.
    """
    data = _finite_array(samples, MIN_ECDF_SAMPLES)
    values, counts = np.unique(data, return_counts=True)
    if side == "upper":
        tail_counts = np.cumsum(counts[::-1])[::-1]
    elif side == "lower":
        tail_counts = np.cumsum(counts)
    else:
        raise FitError(f"unknown tail side {side!r}")
    probabilities = tail_counts / data.size
    return EcdfPoints(
        side=side,
        x=tuple(float(v) for v in values),
        p=tuple(float(p) for p in probabilities),
        n=int(data.size),
    )


def fit_power_tail(points: EcdfPoints, x_min: float) -> PowerLawFit:
    """Least-squares line through log p against log x for x >= x_min."""
    if points.side != "upper":
        raise FitError("power-law fits need upper-tail points")
    x = np.asarray(points.x, dtype=float)
    p = np.asarray(points.p, dtype=float)
    mask = x >= x_min
    xs, ps = x[mask], p[mask]
    if np.any(xs <= 0):
        raise FitError(f"non-positive values in fit range (x_min={x_min})")
    if xs.size < MIN_POWER_POINTS:
        raise FitError(
            f"need at least {MIN_POWER_POINTS} points above x_min={x_min}, got {xs.size}"
        )

    regression = stats.linregress(np.log(xs), np.log(ps))
    alpha = float(regression.slope)
    c = float(math.exp(regression.intercept))
    fitted = c * np.power(xs, alpha)
    ks = float(np.max(np.abs(ps - fitted) / ps))

    _LOGGER.debug("Power-law fit alpha=%s c=%s over %s points", alpha, c, xs.size)
    return PowerLawFit(
        alpha=alpha,
        c=c,
        x_min=float(x_min),
        ks=ks,
        alpha_stderr=float(regression.stderr),
        n_points=int(xs.size),
    )


def laplace_cdf(x: np.ndarray | float, beta: float, gamma: float) -> np.ndarray:
    """Normalized Laplace CDF, exactly 1/2 at beta."""
    z = (np.asarray(x, dtype=float) - beta) / gamma
    below = 0.5 * np.exp(np.minimum(z, 0.0))
    above = 1.0 - 0.5 * np.exp(-np.maximum(z, 0.0))
    return np.where(z <= 0, below, above)


def fit_laplace(samples: Sequence[float]) -> LaplaceFit:
    """Nonlinear least squares of the Laplace CDF against the empirical CDF.

    The empirical CDF takes the middle of each step, (#<x + #<=x) / 2n, so a
    symmetric sample fits a location of exactly zero.
    """
    data = np.sort(_finite_array(samples, MIN_LAPLACE_SAMPLES))
    n = data.size
    beta0 = float(np.median(data))
    gamma0 = float(np.mean(np.abs(data - beta0)))
    if gamma0 <= 0:
        raise FitError("degenerate sample: all values equal, scale is zero")

    below = np.searchsorted(data, data, side="left")
    at_or_below = np.searchsorted(data, data, side="right")
    empirical = (below + at_or_below) / (2.0 * n)

    def residuals(params: np.ndarray) -> np.ndarray:
        return laplace_cdf(data, params[0], params[1]) - empirical

    try:
        result = optimize.least_squares(
            residuals,
            x0=np.array([beta0, gamma0]),
            bounds=([-np.inf, gamma0 * 1e-9], [np.inf, np.inf]),
            x_scale=np.array([gamma0, gamma0]),
            max_nfev=LAPLACE_MAX_NFEV,
        )
    except ValueError as err:
        raise FitError(f"Laplace fit failed: {err}") from err

    if not result.success:
        raise FitError(
            f"Laplace fit did not converge: {result.message}",
            residual=float(result.cost),
        )

    beta, gamma = (float(v) for v in result.x)
    fitted = laplace_cdf(data, beta, gamma)
    steps = np.arange(1, n + 1) / n
    ks = float(max(np.max(steps - fitted), np.max(fitted - (steps - 1.0 / n))))
    _LOGGER.debug("Laplace fit beta=%s gamma=%s ks=%s", beta, gamma, ks)
    return LaplaceFit(
        beta=beta, gamma=gamma, ks=ks, n_samples=int(n), residual=float(result.cost)
    )


def tail_probability(
    fit: TailFit,
    x: float,
    side: TailSide,
    laplace_form: LaplaceTailForm = DEFAULT_LAPLACE_TAIL_FORM,
) -> float:
    """Evaluate a fitted tail at x; always in (0, 1].

    `laplace_form="caption"` drops the factor 1/2 and evaluates the unhalved
    double-exponential tail exp(-|x - beta| / gamma).
    """
    if isinstance(fit, PowerLawFit):
        if side != "upper":
            raise FitDomainError("power-law fits only describe the upper tail")
        if x <= 0:
            raise FitDomainError(f"power law undefined at x={x}")
        if x < fit.x_min:
            raise FitDomainError(f"x={x} is below the fit threshold {fit.x_min}")
        return _clamp(fit.c * x**fit.alpha)

    if isinstance(fit, LaplaceFit):
        distance = (x - fit.beta) / fit.gamma
        if side == "lower":
            distance = -distance
        elif side != "upper":
            raise FitDomainError(f"unknown tail side {side!r}")
        # distance >= 0 means x lies in the requested tail
        if laplace_form == "caption":
            return _clamp(math.exp(-distance)) if distance >= 0 else 1.0
        if distance >= 0:
            return _clamp(0.5 * math.exp(-distance))
        return _clamp(1.0 - 0.5 * math.exp(distance))

    raise FitDomainError(f"unsupported fit {type(fit).__name__}")


def gaussian_tail_probability(samples: Sequence[float], x: float, side: TailSide) -> float:
    """Tail probability of x under a normal model of the samples."""
    data = _finite_array(samples, MIN_ECDF_SAMPLES)
    mean = float(np.mean(data))
    std = float(np.std(data, ddof=1))
    if std <= 0:
        raise FitError("degenerate sample: zero standard deviation")
    if side == "upper":
        return _clamp(float(stats.norm.sf(x, loc=mean, scale=std)))
    return _clamp(float(stats.norm.cdf(x, loc=mean, scale=std)))


def fit_with_exclusions(
    samples: Sequence[tuple[date, float]],
    excluded_dates: Iterable[date],
    model: TailModel,
    name: str = "",
    x_min: float | None = None,
    x_min_quantile: float = DEFAULT_X_MIN_QUANTILE,
) -> FitResult:
    """Fit after removing samples on excluded dates.

    Power-law thresholds default to the `x_min_quantile` quantile of the
    positive samples that remain.
    """
    excluded = set(excluded_dates)
    kept = [value for day, value in samples if day not in excluded]
    dropped = sorted(day for day, _ in samples if day in excluded)
    if not kept:
        raise FitError("every sample is excluded")

    if model == "power_law":
        points = ecdf_tail(kept, "upper")
        if x_min is None:
            positive = [value for value in kept if value > 0]
            if not positive:
                raise FitError("no positive samples for a power-law tail")
            x_min = float(np.quantile(positive, x_min_quantile))
        fit: TailFit = fit_power_tail(points, x_min)
    elif model == "laplace":
        fit = fit_laplace(kept)
        points = ecdf_tail(kept, "lower")
    else:
        raise FitError(f"unknown model {model!r}")

    return FitResult(
        name=name,
        model=model,
        fit=fit,
        points=points,
        included=len(kept),
        excluded=len(dropped),
        excluded_dates=tuple(dropped),
    )


def scannable_samples(
    metrics: Sequence[DayMetrics],
) -> tuple[list[tuple[date, float]], list[tuple[date, float]]]:
    """Dated R and Q samples for days past warm-up with both ratios defined."""
    r_samples: list[tuple[date, float]] = []
    q_samples: list[tuple[date, float]] = []
    for item in metrics:
        if item.R is None or item.Q is None:
            continue
        r_samples.append((item.date, item.R))
        q_samples.append((item.date, item.Q))
    return r_samples, q_samples


def fit_named(
    name: str,
    r_samples: Sequence[tuple[date, float]],
    q_samples: Sequence[tuple[date, float]],
    excluded_dates: Iterable[date],
    x_min_quantile: float = DEFAULT_X_MIN_QUANTILE,
) -> FitResult:
    """Run one of the three standard fits by name."""
    if name == FIT_R_POSITIVE:
        return fit_with_exclusions(
            r_samples, excluded_dates, "power_law", name, x_min_quantile=x_min_quantile
        )
    if name == FIT_R_NEGATIVE:
        return fit_with_exclusions(r_samples, excluded_dates, "laplace", name)
    if name == FIT_Q:
        return fit_with_exclusions(
            q_samples, excluded_dates, "power_law", name, x_min_quantile=x_min_quantile
        )
    raise FitError(f"unknown fit {name!r}")


def assemble_fits(
    results: dict[str, FitResult | FitError],
    r_samples: Sequence[tuple[date, float]],
    excluded_dates: Iterable[date] = (),
) -> TailFits:
    """Collect fit outcomes, keeping failures as messages."""
    errors: dict[str, str] = {}
    for name, outcome in results.items():
        if isinstance(outcome, FitError):
            _LOGGER.warning("Fit %s unavailable: %s", name, outcome)
            errors[name] = str(outcome)

    def _get(name: str) -> FitResult | None:
        outcome = results.get(name)
        return outcome if isinstance(outcome, FitResult) else None

    excluded = set(excluded_dates)
    return TailFits(
        r_positive=_get(FIT_R_POSITIVE),
        r_negative=_get(FIT_R_NEGATIVE),
        q=_get(FIT_Q),
        r_samples=tuple(value for day, value in r_samples if day not in excluded),
        errors=errors,
    )


def fit_tails(
    metrics: Sequence[DayMetrics],
    excluded_dates: Iterable[date] = (),
    x_min_quantile: float = DEFAULT_X_MIN_QUANTILE,
) -> TailFits:
    """Fit the positive R tail, the R Laplace and the Q tail; failures are recorded."""
    excluded = tuple(excluded_dates)
    r_samples, q_samples = scannable_samples(metrics)
    results: dict[str, FitResult | FitError] = {}
    for name in FIT_NAMES:
        try:
            results[name] = fit_named(name, r_samples, q_samples, excluded, x_min_quantile)
        except FitError as err:
            results[name] = err
    return assemble_fits(results, r_samples, excluded)


def overlay_rows(result: FitResult) -> list[tuple[float, float, float | None]]:
    """(x, empirical p, fitted p) rows for a CDF overlay plot."""
    rows: list[tuple[float, float, float | None]] = []
    fit = result.fit
    for x, p in zip(result.points.x, result.points.p):
        if isinstance(fit, PowerLawFit):
            if x <= 0:
                continue
            fitted = tail_probability(fit, x, "upper") if x >= fit.x_min else None
        else:
            if x > fit.beta:
                continue
            fitted = tail_probability(fit, x, "lower")
        rows.append((x, p, fitted))
    return rows


def overlay_csv(result: FitResult) -> str:
    """Serialize overlay rows; missing fitted values are empty."""
    rows = [
        {
            "x": repr(x),
            "empirical_p": repr(p),
            "fitted_p": "" if fitted is None else repr(fitted),
        }
        for x, p, fitted in overlay_rows(result)
    ]
    frame = pd.DataFrame(rows, columns=list(OVERLAY_HEADER))
    return frame.to_csv(index=False, lineterminator="\n")


def fit_payload(result: FitResult) -> FitPayload:
    """Serialize a fit result for reports."""
    fit = result.fit
    if isinstance(fit, PowerLawFit):
        parameters = {
            "alpha": format_float(fit.alpha),
            "c": format_float(fit.c),
            "alpha_stderr": format_float(fit.alpha_stderr),
        }
        x_min: float | None = format_float(fit.x_min)
    else:
        parameters = {"beta": format_float(fit.beta), "gamma": format_float(fit.gamma)}
        x_min = None
    return {
        "model": result.model,
        "parameters": parameters,
        "x_min": x_min,
        "ks": format_float(fit.ks),
        "included": result.included,
        "excluded": result.excluded,
        "excluded_dates": [iso(day) for day in result.excluded_dates],
    }


def fits_payload(fits: TailFits | None) -> dict[str, Any]:
    """Fit parameters per name, or the error that left a fit unavailable."""
    payload: dict[str, Any] = {}
    for name in FIT_NAMES:
        result = getattr(fits, name) if fits is not None else None
        if result is not None:
            payload[name] = fit_payload(result)
        elif fits is not None and name in fits.errors:
            payload[name] = {"error": fits.errors[name]}
        else:
            payload[name] = {"error": "not fitted"}
    return payload
