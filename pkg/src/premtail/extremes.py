"""Extreme-value data preparation.

Block maxima, threshold exceedances, the Hill tail-index series, the empirical
mean excess function and a reproducible Hill-plot threshold selector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np

from .numerics import SeededRng

__all__ = [
    "Sample",
    "BlockSpec",
    "ExceedanceSet",
    "HillSeries",
    "ThresholdChoice",
    "as_values",
    "block_maxima",
    "standardize_block_maxima",
    "exceedances",
    "hill_series",
    "empirical_mean_excess",
    "select_threshold",
]


@dataclass(frozen=True)
class Sample:
    """A series of positive observations with provenance.

    ``period_start`` and ``period_end`` are month identifiers (``YYYY-MM``)
    when the sample comes from a monthly file.
    """

    values: np.ndarray
    label: str = ""
    period_start: Optional[str] = None
    period_end: Optional[str] = None

    def __post_init__(self):
        arr = np.array(self.values, dtype=float).ravel()
        if arr.size == 0:
            raise ValueError("a sample needs at least one observation")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"sample {self.label!r} contains non-finite values")
        if np.any(arr <= 0):
            raise ValueError(f"sample {self.label!r} contains nonpositive values")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.size


def as_values(data) -> np.ndarray:
    """Float array view of a :class:`Sample`, :class:`ExceedanceSet` or array-like."""
    if isinstance(data, ExceedanceSet):
        return data.exceedances
    return np.asarray(getattr(data, "values", data), dtype=float).ravel()


@dataclass(frozen=True)
class BlockSpec:
    block_count: int = 10
    assignment: Literal["contiguous", "random"] = "contiguous"
    seed: int = 0

    def __post_init__(self):
        if self.block_count < 2:
            raise ValueError("block_count must be at least 2")
        if self.assignment not in ("contiguous", "random"):
            raise ValueError(f"unknown block assignment {self.assignment!r}")


@dataclass(frozen=True)
class ExceedanceSet:
    threshold: float
    exceedances: np.ndarray
    n_total: int

    @property
    def n_exceed(self) -> int:
        return self.exceedances.size


@dataclass(frozen=True)
class HillSeries:
    """Hill estimates ``alpha_hat(k)`` and the descending order statistics."""

    k: np.ndarray
    alpha_hat: np.ndarray
    order_stats: np.ndarray

    @property
    def xi_hat(self) -> np.ndarray:
        return 1.0 / self.alpha_hat

    def __len__(self) -> int:
        return self.k.size


@dataclass(frozen=True)
class ThresholdChoice:
    threshold: float
    k: int
    window_ratio: float
    fallback: bool
    window: int = field(default=0)
    tolerance: float = field(default=0.0)


def _block_sizes(n: int, m: int) -> list[int]:
    base, extra = divmod(n, m)
    return [base + 1 if i < extra else base for i in range(m)]


def block_maxima(sample, spec: BlockSpec) -> np.ndarray:
    """Per-block maxima.

    Contiguous mode cuts the series into ``block_count`` consecutive runs whose
    sizes differ by at most one (larger runs first). Random mode first permutes
    the observations with ``SeededRng(spec.seed)`` and then cuts contiguously.
    """
    x = as_values(sample)
    m = spec.block_count
    if m > x.size:
        raise ValueError(f"block_count {m} exceeds sample size {x.size}")
    if spec.assignment == "random":
        x = x[SeededRng(spec.seed).permutation(x.size)]
    edges = np.cumsum([0] + _block_sizes(x.size, m))
    return np.array([x[a:b].max() for a, b in zip(edges[:-1], edges[1:])])


def standardize_block_maxima(maxima) -> np.ndarray:
    """Center by the mean and divide by the population standard deviation."""
    x = as_values(maxima)
    if x.size < 2:
        raise ValueError("need at least two maxima to standardize")
    sd = x.std()
    if sd == 0.0:
        raise ValueError("cannot standardize: all maxima are equal")
    return (x - x.mean()) / sd


def exceedances(sample, threshold: float) -> ExceedanceSet:
    """Observations strictly above ``threshold`` minus the threshold, in original order."""
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    x = as_values(sample)
    y = x[x > threshold] - threshold
    if y.size == 0:
        raise ValueError(f"no observation exceeds the threshold {threshold}")
    return ExceedanceSet(threshold=float(threshold), exceedances=y, n_total=int(x.size))


def hill_series(sample) -> HillSeries:
    """Hill estimates for k = 2, ..., n-1.

    ``xi_hat(k) = mean_{j<=k} ln(X_(j) / X_(k+1))`` over descending order
    statistics and ``alpha_hat = 1 / xi_hat``. Values of k with a zero
    estimate (possible only with ties) are dropped.
    """
    x = as_values(sample)
    if np.any(x <= 0):
        raise ValueError("Hill estimator needs strictly positive data")
    if x.size < 3:
        raise ValueError("Hill estimator needs at least three observations")
    desc = np.sort(x, kind="stable")[::-1]
    logs = np.log(desc)
    k = np.arange(2, x.size)
    cum = np.cumsum(logs)
    xi = cum[k - 1] / k - logs[k]
    keep = xi > 0
    return HillSeries(k=k[keep], alpha_hat=1.0 / xi[keep], order_stats=desc)


def empirical_mean_excess(sample, u: float) -> float:
    """Mean of ``x - u`` over observations strictly above ``u``."""
    x = as_values(sample)
    above = x[x > u]
    if above.size == 0:
        raise ValueError(f"no observation exceeds {u}")
    return float(np.mean(above - u))


def default_window(n: int) -> int:
    return max(5, int(0.1 * n))


def select_threshold(
    series: HillSeries,
    window: Optional[int] = None,
    tolerance: float = 0.05,
    min_k: int = 2,
) -> ThresholdChoice:
    """Pick the threshold where the Hill plot settles.

    Scans windows of ``window`` consecutive alpha estimates and takes the
    first (smallest k) whose ``(max - min) / median`` is at most
    ``tolerance``. If none qualifies the window with the smallest ratio is
    used and ``fallback`` is set. The threshold is the order statistic
    ``X_(k*)``.

    Args:
        series: Output of :func:`hill_series`.
        window: Window length; defaults to 10% of the sample size (at least 5).
        tolerance: Relative spread accepted as stable.
        min_k: Smallest admissible k, so callers can insist on a minimum
            number of exceedances.
    """
    n = series.order_stats.size
    w = default_window(n) if window is None else int(window)
    if w < 1:
        raise ValueError("window must be positive")
    mask = series.k >= min_k
    ks, alpha = series.k[mask], series.alpha_hat[mask]
    if alpha.size < w:
        raise ValueError(f"Hill series has {alpha.size} usable points, window needs {w}")
    windows = np.lib.stride_tricks.sliding_window_view(alpha, w)
    ratios = (windows.max(axis=1) - windows.min(axis=1)) / np.median(windows, axis=1)
    stable = np.flatnonzero(ratios <= tolerance)
    fallback = stable.size == 0
    idx = int(np.argmin(ratios)) if fallback else int(stable[0])
    k_star = int(ks[idx])
    return ThresholdChoice(
        threshold=float(series.order_stats[k_star - 1]),
        k=k_star,
        window_ratio=float(ratios[idx]),
        fallback=fallback,
        window=w,
        tolerance=tolerance,
    )
