"""Kolmogorov-Smirnov, chi-square and Anderson-Darling tests against a fitted model.

p-values are either asymptotic (KS, chi-square) or come from a parametric
bootstrap that redraws from the fitted model, refits the same family and
recomputes the statistic. Replicate ``r`` always uses stream ``r`` of the
caller's generator, so results do not depend on evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Dict, Literal, Optional, Union

import numpy as np

from .distributions import DistributionModel
from .estimation import refit
from .extremes import as_values
from .numerics import SeededRng, chi2_sf, kolmogorov_sf

__all__ = [
    "GofResult",
    "BootstrapResult",
    "decision",
    "ks_statistic",
    "chi_square_statistic",
    "ad_statistic",
    "auto_bins",
    "ks_test",
    "chi_square_test",
    "ad_test",
    "bootstrap_pvalue",
    "bootstrap_pvalues",
    "run_tests",
]

TestName = Literal["KS", "ChiSquare", "AD"]
PMethod = Literal["asymptotic", "bootstrap"]

AD_CLAMP = 1e-12
MAX_REDRAWS = 10


@dataclass(frozen=True)
class GofResult:
    test: str
    statistic: float
    p_value: float
    reject: bool
    alpha: float
    p_method: str
    bootstrap_reps: int = 0
    failed_refits: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "GofResult":
        return cls(**data)


def decision(p_value: float, alpha: float = 0.05) -> bool:
    """Reject the null iff ``p_value < alpha`` (strict)."""
    if not 0.0 <= p_value <= 1.0:
        raise ValueError(f"p-value {p_value} outside [0, 1]")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha {alpha} outside (0, 1)")
    return p_value < alpha


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha {alpha} outside (0, 1)")


def _data(data) -> np.ndarray:
    x = as_values(data)
    if x.size == 0:
        raise ValueError("goodness-of-fit test on empty data")
    return x


def _check_support(x: np.ndarray, model: DistributionModel) -> None:
    if not np.all(model.in_support(x)):
        raise ValueError("data outside the support of the model")


# --------------------------------------------------------------------------
# Statistics
# --------------------------------------------------------------------------


def ks_statistic(data, model: DistributionModel) -> float:
    """``D_n = max_i max(i/n - F(x_(i)), F(x_(i)) - (i-1)/n)``."""
    x = np.sort(_data(data))
    n = x.size
    f = np.asarray(model.cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def auto_bins(n: int) -> int:
    """``max(4, n // 10)`` equiprobable bins, capped so each expects at least 5."""
    return min(max(4, n // 10), n // 5)


def chi_square_statistic(data, model: DistributionModel, bins: int) -> float:
    """Pearson statistic over ``bins`` equiprobable cells of the model."""
    x = _data(data)
    u = np.asarray(model.cdf(x), dtype=float)
    idx = np.minimum((u * bins).astype(int), bins - 1)
    observed = np.bincount(idx, minlength=bins)
    expected = x.size / bins
    return float(np.sum((observed - expected) ** 2) / expected)


def ad_statistic(data, model: DistributionModel) -> float:
    x = np.sort(_data(data))
    n = x.size
    f = np.clip(np.asarray(model.cdf(x), dtype=float), AD_CLAMP, 1.0 - AD_CLAMP)
    i = np.arange(1, n + 1)
    return float(-n - np.sum((2 * i - 1) * (np.log(f) + np.log1p(-f[::-1]))) / n)


# --------------------------------------------------------------------------
# Bootstrap
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BootstrapResult:
    p_values: Dict[str, float]
    reps: int
    failed_refits: int


def bootstrap_pvalues(
    observed: Dict[str, float],
    data,
    model: DistributionModel,
    statistic_fns: Dict[str, Callable[[np.ndarray, DistributionModel], float]],
    reps: int,
    rng: SeededRng,
) -> BootstrapResult:
    """Parametric bootstrap p-values for several statistics sharing replicates.

    Each replicate draws ``n`` points from ``model`` using ``rng.spawn(r)``,
    refits the model's family and evaluates every statistic under the refit.
    A replicate whose refit fails is redrawn (stream ``rng.spawn(r).spawn(a)``
    for attempt ``a``) up to ten times; failures are counted. The p-value is
    ``(1 + #{stat_r >= observed}) / (reps + 1)``.
    """
    if reps < 1:
        raise ValueError("bootstrap needs at least one replicate")
    n = _data(data).size
    counts = {name: 0 for name in statistic_fns}
    failed = 0
    for r in range(reps):
        stream = rng.spawn(r)
        for attempt in range(MAX_REDRAWS + 1):
            draw_rng = stream if attempt == 0 else stream.spawn(attempt)
            draw = model.sample(n, draw_rng)
            try:
                fitted = refit(model.family, draw)
            except (ValueError, FloatingPointError, ZeroDivisionError):
                failed += 1
                continue
            break
        else:
            raise RuntimeError(f"bootstrap replicate {r}: refit failed {MAX_REDRAWS + 1} times")
        for name, fn in statistic_fns.items():
            if fn(draw, fitted) >= observed[name]:
                counts[name] += 1
    pvals = {name: (1 + c) / (reps + 1) for name, c in counts.items()}
    return BootstrapResult(pvals, reps, failed)


def bootstrap_pvalue(
    observed_stat: float,
    data,
    model: DistributionModel,
    statistic_fn: Callable[[np.ndarray, DistributionModel], float],
    reps: int,
    rng: SeededRng,
) -> float:
    """Single-statistic form of :func:`bootstrap_pvalues`."""
    if reps < 99:
        raise ValueError("use at least 99 bootstrap replicates")
    res = bootstrap_pvalues({"s": observed_stat}, data, model, {"s": statistic_fn}, reps, rng)
    return res.p_values["s"]


# --------------------------------------------------------------------------
# Tests
# --------------------------------------------------------------------------


def _result(test, stat, p, alpha, method, reps=0, failed=0) -> GofResult:
    p = min(1.0, max(0.0, float(p)))
    return GofResult(test, float(stat), p, decision(p, alpha), float(alpha), method,
                     reps if method == "bootstrap" else 0, failed)


def _need_rng(rng):
    if rng is None:
        raise ValueError("bootstrap p-values need an rng")
    return rng


def ks_test(
    data,
    model: DistributionModel,
    alpha: float = 0.05,
    p_method: PMethod = "bootstrap",
    reps: int = 1000,
    rng: Optional[SeededRng] = None,
) -> GofResult:
    """Kolmogorov-Smirnov test; asymptotic p-value is ``Q(sqrt(n) * D_n)``."""
    _check_alpha(alpha)
    x = _data(data)
    _check_support(x, model)
    d = ks_statistic(x, model)
    if p_method == "asymptotic":
        return _result("KS", d, kolmogorov_sf(math.sqrt(x.size) * d), alpha, p_method)
    res = bootstrap_pvalues({"KS": d}, x, model, {"KS": ks_statistic}, reps, _need_rng(rng))
    return _result("KS", d, res.p_values["KS"], alpha, p_method, reps, res.failed_refits)


def _resolve_bins(n: int, bins: Union[str, int]) -> int:
    b = auto_bins(n) if bins == "auto" else int(bins)
    if b < 2 or n < 5 * b:
        raise ValueError(f"{n} observations cannot fill {b} bins with 5 expected each")
    return b


def chi_square_test(
    data,
    model: DistributionModel,
    alpha: float = 0.05,
    bins: Union[str, int] = "auto",
    fitted_param_count: Optional[int] = None,
    p_method: PMethod = "asymptotic",
    reps: int = 1000,
    rng: Optional[SeededRng] = None,
) -> GofResult:
    """Pearson chi-square test on equiprobable model bins.

    The asymptotic p-value uses ``bins - 1 - fitted_param_count`` degrees of
    freedom (at least 1). ``fitted_param_count`` defaults to the number of
    parameters of the model's family.
    """
    _check_alpha(alpha)
    x = _data(data)
    _check_support(x, model)
    b = _resolve_bins(x.size, bins)
    stat = chi_square_statistic(x, model, b)
    if p_method == "asymptotic":
        k = model.n_params if fitted_param_count is None else fitted_param_count
        dof = max(1, b - 1 - k)
        return _result("ChiSquare", stat, chi2_sf(stat, dof), alpha, p_method)

    def fn(d, m):
        return chi_square_statistic(d, m, b)

    res = bootstrap_pvalues({"ChiSquare": stat}, x, model, {"ChiSquare": fn}, reps, _need_rng(rng))
    return _result("ChiSquare", stat, res.p_values["ChiSquare"], alpha, p_method, reps,
                   res.failed_refits)


def ad_test(
    data,
    model: DistributionModel,
    alpha: float = 0.05,
    reps: int = 1000,
    rng: Optional[SeededRng] = None,
) -> GofResult:
    """Anderson-Darling test with a parametric-bootstrap p-value."""
    _check_alpha(alpha)
    x = _data(data)
    _check_support(x, model)
    a2 = ad_statistic(x, model)
    res = bootstrap_pvalues({"AD": a2}, x, model, {"AD": ad_statistic}, reps, _need_rng(rng))
    return _result("AD", a2, res.p_values["AD"], alpha, "bootstrap", reps, res.failed_refits)


def run_tests(
    data,
    model: DistributionModel,
    alpha: float = 0.05,
    p_method: PMethod = "bootstrap",
    reps: int = 1000,
    rng: Optional[SeededRng] = None,
    bins: Union[str, int] = "auto",
) -> Dict[str, GofResult]:
    """All three tests, sharing one set of bootstrap replicates.

    With ``p_method="asymptotic"`` KS and chi-square use their limiting laws
    and only AD is bootstrapped.
    """
    _check_alpha(alpha)
    x = _data(data)
    _check_support(x, model)
    b = _resolve_bins(x.size, bins)
    rng = _need_rng(rng)

    def chi(d, m):
        return chi_square_statistic(d, m, b)

    observed = {"KS": ks_statistic(x, model), "ChiSquare": chi(x, model),
                "AD": ad_statistic(x, model)}
    fns = {"KS": ks_statistic, "ChiSquare": chi, "AD": ad_statistic}
    if p_method == "asymptotic":
        fns = {"AD": ad_statistic}
    boot = bootstrap_pvalues({k: observed[k] for k in fns}, x, model, fns, reps, rng)

    out = {}
    if p_method == "asymptotic":
        dof = max(1, b - 1 - model.n_params)
        out["KS"] = _result("KS", observed["KS"],
                            kolmogorov_sf(math.sqrt(x.size) * observed["KS"]), alpha, p_method)
        out["ChiSquare"] = _result("ChiSquare", observed["ChiSquare"],
                                   chi2_sf(observed["ChiSquare"], dof), alpha, p_method)
    else:
        for name in ("KS", "ChiSquare"):
            out[name] = _result(name, observed[name], boot.p_values[name], alpha, "bootstrap",
                                reps, boot.failed_refits)
    out["AD"] = _result("AD", observed["AD"], boot.p_values["AD"], alpha, "bootstrap", reps,
                        boot.failed_refits)
    return out
