"""Maximum-likelihood fitting and the block-maxima / peaks-over-threshold pipelines.

The lognormal fit is closed form. The GEV fit runs Nelder-Mead on the
standardized data and maps the answer back, which makes the shape estimate
affine-invariant and the optimizer tolerance scale-free. The GPD fit reduces
the likelihood to one variable: with ``tau = -shape/scale`` the remaining
parameters have the closed forms::

    shape(tau) = mean(ln(1 - tau * y))
    scale(tau) = -shape(tau) / tau

so only ``tau`` is searched, on a log-spaced grid followed by golden-section
refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional, Union

import numpy as np

from .distributions import (
    SHAPE_EPS,
    DistributionModel,
    GevParams,
    GpdParams,
    LognormalParams,
    log_likelihood,
)
from .extremes import (
    BlockSpec,
    ExceedanceSet,
    as_values,
    block_maxima,
    exceedances,
    hill_series,
    select_threshold,
)
from .numerics import golden_section_max, nelder_mead

__all__ = [
    "FitResult",
    "fit_lognormal",
    "fit_gev",
    "fit_gpd",
    "fit_block_maxima",
    "fit_pot",
    "refit",
    "residuals",
    "gev_start",
]

EULER_GAMMA = 0.5772156649015329

Method = Literal["direct", "block-maxima", "pot"]


@dataclass(frozen=True)
class FitResult:
    model: DistributionModel
    log_likelihood: float
    method: Method = "direct"
    threshold: Optional[float] = None
    n_used: int = 0
    n_total: Optional[int] = None
    converged: bool = True
    iterations: int = 0

    @property
    def family(self) -> str:
        return self.model.family


def fit_lognormal(sample) -> FitResult:
    """Closed-form MLE: mean and (divisor-n) variance of the log data."""
    x = as_values(sample)
    if x.size == 0:
        raise ValueError("cannot fit an empty sample")
    if np.any(x <= 0):
        raise ValueError("lognormal fit needs strictly positive data")
    lx = np.log(x)
    mu = float(lx.mean())
    sigma = float(np.sqrt(np.mean((lx - mu) ** 2)))
    if sigma == 0.0:
        raise ValueError("lognormal fit is degenerate: all observations are equal")
    model = LognormalParams(mu, sigma)
    return FitResult(model, log_likelihood(model, x), "direct", n_used=int(x.size))


# --------------------------------------------------------------------------
# GEV
# --------------------------------------------------------------------------


def _gev_nll(params: np.ndarray, z: np.ndarray) -> float:
    shape, loc, log_scale = params
    # The likelihood is unbounded for shape < -1 (the density blows up at the
    # upper endpoint), so that region is excluded.
    if shape <= -1.0 or log_scale > 50.0:
        return math.inf
    scale = math.exp(log_scale)
    w = (z - loc) * (1.0 / scale)
    n = z.size
    if abs(shape) < SHAPE_EPS:
        return n * log_scale + float((w + np.exp(-w)).sum())
    t = 1.0 + shape * w
    if t.min() <= 0.0:
        return math.inf
    lt = np.log(t)
    return n * log_scale + (1.0 + 1.0 / shape) * lt.sum() + np.exp(lt * (-1.0 / shape)).sum()


def gev_start(z: np.ndarray) -> np.ndarray:
    """Gumbel moment start ``(shape, location, log scale)`` for standardized data.

    The shape starts at 0.1 and is halved toward 0 until every point lies in
    the support.
    """
    sd = z.std(ddof=1) if z.size > 1 else 1.0
    scale = sd * math.sqrt(6.0) / math.pi
    loc = z.mean() - EULER_GAMMA * scale
    shape = 0.1
    for _ in range(60):
        if np.all(1.0 + shape * (z - loc) / scale > 0):
            break
        shape *= 0.5
    else:
        shape = 0.0
    return np.array([shape, loc, math.log(scale)])


def fit_gev(sample, tolerance: float = 1e-8, max_iter: int = 3000) -> FitResult:
    """Three-parameter GEV maximum likelihood by Nelder-Mead.

    Raises ``ValueError`` for fewer than five points or a constant sample.
    Non-convergence is reported through ``FitResult.converged``.
    """
    x = as_values(sample)
    if x.size < 5:
        raise ValueError("GEV fit needs at least 5 observations")
    center, spread = float(x.mean()), float(x.std())
    if spread == 0.0:
        raise ValueError("GEV fit is degenerate: all observations are equal")
    z = (x - center) / spread
    start = gev_start(z)
    res = nelder_mead(lambda p: _gev_nll(p, z), start, tolerance, max_iter, step=[0.1, 0.1, 0.1])
    shape, loc, log_scale = res.argmin
    model = GevParams(float(shape), center + spread * float(loc), spread * math.exp(log_scale))
    ll = log_likelihood(model, x)
    if not math.isfinite(ll):
        # mapping back can push a point onto the support boundary by rounding
        ll = -res.objective_value - x.size * math.log(spread)
    return FitResult(model, ll, "direct", n_used=int(x.size), converged=res.converged,
                     iterations=res.iterations)


# --------------------------------------------------------------------------
# GPD
# --------------------------------------------------------------------------

_GPD_GRID = 256  # points per sign of tau


def _profile_xi(tau: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.log1p(-np.multiply.outer(tau, y)).mean(axis=-1)


def _profile_ll(tau, y: np.ndarray, n: int, xi=None):
    tau = np.asarray(tau, dtype=float)
    if xi is None:
        xi = _profile_xi(tau, y)
    with np.errstate(divide="ignore", invalid="ignore"):
        beta = -xi / tau
        ll = -n * (np.log(beta) + 1.0 + xi)
    return np.where(np.isfinite(ll) & (beta > 0), ll, -np.inf)


def _gpd_from_tau(tau: float, y: np.ndarray) -> GpdParams:
    xi = float(np.mean(np.log1p(-tau * y)))
    return GpdParams(xi, -xi / tau)


def fit_gpd(excess, tolerance: float = 1e-12) -> FitResult:
    """GPD maximum likelihood on exceedances via the one-dimensional profile in tau.

    The grid covers ``tau`` in ``(-10/mean(y), (1 - 1e-9)/max(y))`` on both
    sides of zero with log spacing. Among the grid's local maxima with shape
    above -1 the highest is refined by golden section. Two closed-form
    candidates compete with it: the exponential fit (``tau -> 0``) and the
    uniform fit ``GPD(-1, max(y))`` on the shape = -1 boundary. Below that
    boundary the likelihood is unbounded, so shapes under -1 are never
    returned.

    Args:
        excess: :class:`ExceedanceSet` or array of positive exceedances.
        tolerance: Relative tolerance on tau for the golden-section step.
    """
    y = as_values(excess)
    n = y.size
    if n < 5:
        raise ValueError("GPD fit needs at least 5 exceedances")
    if np.any(y <= 0):
        raise ValueError("exceedances must be positive")
    ybar, ymax = float(y.mean()), float(y.max())

    expo = GpdParams(0.0, ybar)
    best_model, best_ll = expo, log_likelihood(expo, y)
    uniform = GpdParams(-1.0, ymax)
    uniform_ll = -n * math.log(ymax)
    if uniform_ll > best_ll:
        best_model, best_ll = uniform, uniform_ll

    mags = np.logspace(-6, 0, _GPD_GRID)
    neg = -(10.0 / ybar) * mags
    pos = ((1.0 - 1e-9) / ymax) * mags
    grid = np.concatenate([neg, pos[::-1]])
    grid.sort()
    xis = _profile_xi(grid, y)
    lls = _profile_ll(grid, y, n, xis)

    padded = np.concatenate([[-np.inf], lls, [-np.inf]])
    is_peak = (np.isfinite(lls) & (lls >= padded[:-2]) & (lls >= padded[2:]) & (xis > -1.0))
    peaks = np.flatnonzero(is_peak)
    if peaks.size == 0:
        return _gpd_result(excess, best_model, best_ll, n)
    i = int(peaks[np.argmax(lls[peaks])])
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid.size - 1)]
    if lo < 0.0 < hi:
        # never straddle the removable singularity at tau = 0
        lo, hi = (lo, grid[i]) if grid[i] < 0 else (grid[i], hi)
    tau = grid[i]
    if lo < hi:
        tau = golden_section_max(
            lambda t: float(_profile_ll(t, y, n)),
            lo, hi, tolerance * max(abs(lo), abs(hi)),
        )
        if _profile_ll(tau, y, n) < lls[i]:
            tau = grid[i]

    if abs(tau) * ybar > 1e-12:
        cand = _gpd_from_tau(tau, y)
        cand_ll = log_likelihood(cand, y)
        if cand.shape > -1.0 and cand_ll > best_ll:
            best_model, best_ll = cand, cand_ll
    return _gpd_result(excess, best_model, best_ll, n)


def _gpd_result(excess, model: GpdParams, ll: float, n: int) -> FitResult:
    threshold = excess.threshold if isinstance(excess, ExceedanceSet) else None
    n_total = excess.n_total if isinstance(excess, ExceedanceSet) else None
    return FitResult(model, ll, "pot" if threshold is not None else "direct",
                     threshold=threshold, n_used=int(n), n_total=n_total)


# --------------------------------------------------------------------------
# Pipelines
# --------------------------------------------------------------------------


def fit_block_maxima(sample, spec: BlockSpec) -> FitResult:
    """GEV fit to the block maxima of ``sample``."""
    maxima = block_maxima(sample, spec)
    fit = fit_gev(maxima)
    return FitResult(fit.model, fit.log_likelihood, "block-maxima", n_used=spec.block_count,
                     n_total=len(as_values(sample)), converged=fit.converged,
                     iterations=fit.iterations)


def fit_pot(
    sample,
    threshold: Union[Literal["auto"], float] = "auto",
    window: Optional[int] = None,
    tolerance: float = 0.05,
) -> FitResult:
    """Peaks-over-threshold GPD fit.

    With ``threshold="auto"`` the threshold comes from :func:`select_threshold`
    on the Hill series, restricted to k >= 6 so at least five exceedances
    remain.
    """
    if threshold == "auto":
        choice = select_threshold(hill_series(sample), window=window, tolerance=tolerance, min_k=6)
        u = choice.threshold
    else:
        u = float(threshold)
    excess = exceedances(sample, u)
    fit = fit_gpd(excess)
    return FitResult(fit.model, fit.log_likelihood, "pot", threshold=u, n_used=excess.n_exceed,
                     n_total=excess.n_total, converged=fit.converged)


_FITTERS = {
    "lognormal": fit_lognormal,
    "gev": fit_gev,
    "gpd": fit_gpd,
}


def refit(family: str, data) -> DistributionModel:
    """Refit ``family`` to raw data (exceedances for ``gpd``); used by the bootstrap."""
    return _FITTERS[family](data).model


def residuals(fit: Union[FitResult, DistributionModel], data) -> np.ndarray:
    """Transform data to the unit-exponential scale under the fitted model.

    GEV: ``(1 + shape*z)^(-1/shape)``, i.e. ``-ln F(x)``. GPD:
    ``ln(1 + shape*y/scale)/shape``, i.e. ``-ln(1 - F(y))``. Lognormal:
    ``-ln(1 - F(x))``. Under a correct model the result is i.i.d. Exp(1).
    """
    model = getattr(fit, "model", fit)
    x = as_values(data)
    if not np.all(model.in_support(x)):
        raise ValueError("data outside the support of the fitted model")
    if isinstance(model, GevParams):
        return np.exp(model._log_t(x))
    if isinstance(model, GpdParams):
        if model.exponential:
            return x / model.scale
        return np.log1p(model.shape * x / model.scale) / model.shape
    return -np.log(model.sf(x))
