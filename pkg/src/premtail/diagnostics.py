"""Plot data for the tail diagnostics and fitted-model checks.

Nothing here draws; each builder returns a :class:`PlotSeries` holding the
(x, y) points, optional aligned extra columns and a ``meta`` dict with
reference lines and summary numbers. Plotting positions are ``i/(n+1)``
throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Union

import numpy as np

from .distributions import GpdParams
from .estimation import FitResult, residuals
from .extremes import ExceedanceSet, HillSeries, ThresholdChoice, as_values
from .gof import ks_statistic

__all__ = [
    "PlotSeries",
    "histogram_series",
    "exp_qq_series",
    "zipf_series",
    "mean_excess_series",
    "hill_plot_series",
    "residual_qq_series",
    "excess_cdf_series",
    "tail_series",
    "density_compare_series",
]

SERIES_NAMES = (
    "hist", "exp_qq", "zipf", "mean_excess", "hill", "residual_qq",
    "excess_cdf", "tail", "density_compare",
)


@dataclass
class PlotSeries:
    name: str
    x: np.ndarray
    y: np.ndarray
    meta: Dict[str, Union[float, int, str]] = field(default_factory=dict)
    extra: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in SERIES_NAMES:
            raise ValueError(f"unknown series name {self.name!r}")
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.x.size == 0 or self.x.shape != self.y.shape:
            raise ValueError("series needs matching, nonempty x and y")
        for key, col in self.extra.items():
            self.extra[key] = np.asarray(col, dtype=float)
            if self.extra[key].shape != self.x.shape:
                raise ValueError(f"extra column {key!r} does not align with x")

    def __len__(self) -> int:
        return self.x.size


def _linfit(x: np.ndarray, y: np.ndarray):
    """Least-squares slope, intercept and R^2."""
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def _skewness(x: np.ndarray) -> float:
    sd = x.std()
    return float(np.mean((x - x.mean()) ** 3) / sd ** 3) if sd > 0 else 0.0


def _edges(x: np.ndarray, bins: Union[str, int]) -> np.ndarray:
    if bins != "auto":
        return np.histogram_bin_edges(x, bins=int(bins))
    q75, q25 = np.percentile(x, [75, 25])
    if q75 > q25:
        return np.histogram_bin_edges(x, bins="fd")
    return np.histogram_bin_edges(x, bins=max(1, int(np.ceil(np.sqrt(x.size)))))


def histogram_series(sample, bins: Union[str, int] = "auto") -> PlotSeries:
    """Bin midpoints against counts (Freedman-Diaconis width by default).

    ``meta`` carries mean, median and moment skewness, the numbers behind a
    "right-skewed" reading of the histogram.
    """
    x = as_values(sample)
    if x.size < 2:
        raise ValueError("histogram needs at least two observations")
    edges = _edges(x, bins)
    counts, edges = np.histogram(x, bins=edges)
    mids = 0.5 * (edges[:-1] + edges[1:])
    meta = {
        "bin_width": float(edges[1] - edges[0]),
        "mean": float(x.mean()),
        "median": float(np.median(x)),
        "skewness": _skewness(x),
    }
    return PlotSeries("hist", mids, counts, meta)


def _qq_points(values: np.ndarray):
    x = np.sort(values)
    n = x.size
    theo = -np.log1p(-np.arange(1, n + 1) / (n + 1))
    return theo, x


def _qq_meta(theo: np.ndarray, x: np.ndarray) -> dict:
    slope, intercept, r2 = _linfit(theo, x)
    top = max(1, x.size // 10)
    tail_resid = float(np.mean(x[-top:] - (slope * theo[-top:] + intercept)))
    return {
        "orientation": "x=exponential quantile,y=data",
        "plotting_position": "i/(n+1)",
        "slope": slope,
        "intercept": intercept,
        "r2": r2,
        "tail_residual": tail_resid,
    }


def exp_qq_series(sample, name: str = "exp_qq") -> PlotSeries:
    """Exponential QQ plot: ``(-ln(1 - i/(n+1)), x_(i))``.

    With theoretical quantiles on the x axis a heavier-than-exponential tail
    bends upward, so ``meta["tail_residual"]`` (mean residual of the top
    decile about the least-squares line) comes out positive.
    """
    values = as_values(sample)
    if values.size < 2:
        raise ValueError("QQ plot needs at least two observations")
    theo, x = _qq_points(values)
    return PlotSeries(name, theo, x, _qq_meta(theo, x))


def zipf_series(sample) -> PlotSeries:
    """Log-log empirical survival: ``(ln x, ln(r/n))`` with r the descending rank.

    Tied values collapse to one point carrying their largest rank. ``meta``
    holds the least-squares slope, which estimates ``-alpha`` for Pareto tails.
    """
    x = as_values(sample)
    if np.any(x <= 0):
        raise ValueError("Zipf plot needs strictly positive data")
    if x.size < 2:
        raise ValueError("Zipf plot needs at least two observations")
    n = x.size
    uniq, counts = np.unique(x, return_counts=True)
    # rank of the smallest copy of each value when sorted in descending order
    rank = n - np.concatenate([[0], np.cumsum(counts)[:-1]])
    lx, ly = np.log(uniq), np.log(rank / n)
    meta = {}
    if uniq.size >= 2:
        slope, intercept, r2 = _linfit(lx, ly)
        meta = {"slope": slope, "intercept": intercept, "r2": r2}
    return PlotSeries("zipf", lx, ly, meta)


def mean_excess_series(sample, fit: Optional[FitResult] = None) -> PlotSeries:
    """Empirical mean excess at each distinct order statistic except the top two.

    ``meta["slope"]`` is the least-squares slope over thresholds between the
    10th and 80th sample percentiles, where the estimates are not dominated
    by a handful of top observations. If a GPD fit is given, ``meta``
    includes its reference slope ``shape/(1 - shape)``.
    """
    x = as_values(sample)
    if x.size < 3:
        raise ValueError("mean excess plot needs at least three observations")
    grid = np.unique(np.sort(x)[:-2])
    srt = np.sort(x)
    # suffix sums give every M(u) in one pass
    suffix = np.cumsum(srt[::-1])[::-1]
    idx = np.searchsorted(srt, grid, side="right")
    cnt = x.size - idx
    me = suffix[idx] / cnt - grid
    meta = {}
    lo, hi = np.quantile(x, [0.1, 0.8])
    interior = (grid >= lo) & (grid <= hi)
    if np.count_nonzero(interior) < 2:
        interior = np.ones_like(grid, dtype=bool)
    if np.unique(grid[interior]).size >= 2:
        slope, intercept, _ = _linfit(grid[interior], me[interior])
        meta = {"slope": slope, "intercept": intercept}
    if fit is not None and isinstance(fit.model, GpdParams) and fit.model.shape < 1:
        xi = fit.model.shape
        meta["gpd_slope"] = xi / (1.0 - xi)
        if fit.threshold is not None:
            meta["threshold"] = fit.threshold
    return PlotSeries("mean_excess", grid, me, meta)


def hill_plot_series(series: HillSeries, choice: Optional[ThresholdChoice] = None) -> PlotSeries:
    """Hill plot ``(k, alpha_hat(k))``, annotated with a threshold choice if given."""
    meta = {}
    if choice is not None:
        meta = {"threshold": choice.threshold, "k_star": choice.k, "fallback": int(choice.fallback),
                "window": choice.window, "tolerance": choice.tolerance}
    return PlotSeries("hill", series.k, series.alpha_hat, meta)


def residual_qq_series(fit: FitResult, data) -> PlotSeries:
    """Exponential QQ plot of the unit-exponential residuals of ``fit``."""
    return exp_qq_series(residuals(fit, data), name="residual_qq")


def _empirical_cdf_steps(y: np.ndarray):
    srt = np.sort(y)
    uniq, counts = np.unique(srt, return_counts=True)
    return uniq, np.cumsum(counts) / y.size


def excess_cdf_series(excess, fit: FitResult) -> PlotSeries:
    """Empirical CDF of the exceedances against the fitted GPD CDF.

    ``y`` is the empirical CDF at each distinct exceedance and
    ``extra["fitted"]`` the GPD CDF there; ``meta["max_gap"]`` is the KS
    distance between the two.
    """
    if not isinstance(fit.model, GpdParams):
        raise ValueError(f"excess CDF needs a GPD fit, got {fit.model.family}")
    y = as_values(excess)
    xs, ecdf = _empirical_cdf_steps(y)
    fitted = np.asarray(fit.model.cdf(xs), dtype=float)
    meta = {"max_gap": ks_statistic(y, fit.model)}
    if isinstance(excess, ExceedanceSet):
        meta["threshold"] = excess.threshold
    return PlotSeries("excess_cdf", xs, ecdf, meta, {"fitted": fitted})


def tail_series(sample, fit: FitResult) -> PlotSeries:
    """Survival of the full sample above the POT threshold, empirical and fitted.

    Fitted tail: ``(n_exceed/n_total) * (1 - G(x - u))``; empirical points use
    ``1 - i/(n+1)`` at the ascending order statistics above ``u``.
    """
    if fit.threshold is None or fit.n_total is None:
        raise ValueError("tail series needs a POT fit with threshold metadata")
    if not isinstance(fit.model, GpdParams):
        raise ValueError("tail series needs a GPD fit")
    x = np.sort(as_values(sample))
    n = x.size
    u = fit.threshold
    xs = np.unique(x[x > u])
    if xs.size == 0:
        raise ValueError("no observations above the threshold")
    # for ties keep the largest plotting position
    last = np.searchsorted(x, xs, side="right")
    emp = 1.0 - last / (n + 1)
    rate = fit.n_used / fit.n_total
    fitted = rate * np.asarray(fit.model.sf(xs - u), dtype=float)
    meta = {"threshold": u, "exceedance_rate": rate}
    if fit.model.shape < 0:
        meta["upper_endpoint"] = u + fit.model.upper_endpoint
    return PlotSeries("tail", xs, emp, meta, {"fitted": fitted})


def density_compare_series(sample, fit: FitResult, bins: Union[str, int] = "auto") -> PlotSeries:
    """Area-normalized histogram density and fitted pdf at the bin midpoints."""
    x = as_values(sample)
    if x.size < 10:
        raise ValueError("density comparison needs at least 10 observations")
    edges = _edges(x, bins)
    dens, edges = np.histogram(x, bins=edges, density=True)
    mids = 0.5 * (edges[:-1] + edges[1:])
    fitted = np.asarray(fit.model.pdf(mids), dtype=float)
    meta = {"bin_width": float(edges[1] - edges[0]), "family": fit.model.family}
    return PlotSeries("density_compare", mids, dens, meta, {"fitted": fitted})
