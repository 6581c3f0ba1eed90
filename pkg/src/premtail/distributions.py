"""Lognormal, generalized extreme value and generalized Pareto families.

Each family is a frozen dataclass exposing vectorized ``cdf``, ``pdf``,
``logpdf``, ``quantile`` and ``sample`` methods. Module-level functions with
the same names dispatch on the model so callers can stay family-agnostic.

Parameterizations::

    Lognormal(mu, sigma)       ln X ~ Normal(mu, sigma)
    GEV(shape, location, scale)  F(x) = exp(-(1 + shape*z)^(-1/shape)), z = (x - location)/scale
    GPD(shape, scale)          F(y) = 1 - (1 + shape*y/scale)^(-1/shape), y >= 0

Shapes with ``|shape| < SHAPE_EPS`` use the exponential (Gumbel / exponential)
limits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar, Union

import numpy as np

from .numerics import SeededRng, normal_cdf, normal_quantile, normal_sf

__all__ = [
    "SHAPE_EPS",
    "LognormalParams",
    "GevParams",
    "GpdParams",
    "DistributionModel",
    "FAMILIES",
    "cdf",
    "pdf",
    "quantile",
    "log_likelihood",
    "sample",
    "model_from_dict",
]

SHAPE_EPS = 1e-9

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _as_array(x):
    return np.asarray(x, dtype=float)


def _finish(out, x):
    return float(out) if np.ndim(x) == 0 else out


def _check_p(p):
    arr = _as_array(p)
    if np.any(~(arr > 0.0) | ~(arr < 1.0)):
        raise ValueError("quantile requires probabilities strictly inside (0, 1)")
    return arr


class _Family:
    family: ClassVar[str]
    n_params: ClassVar[int]

    def pdf(self, x):
        x = _as_array(x)
        with np.errstate(over="ignore"):
            return _finish(np.exp(self.logpdf(x)), x)

    def sample(self, n: int, rng: SeededRng) -> np.ndarray:
        if n < 1:
            raise ValueError("sample size must be at least 1")
        return self.quantile(rng.uniform(n))

    def to_dict(self) -> dict:
        out = {"family": self.family}
        out.update({k: float(v) for k, v in self.__dict__.items()})
        return out


@dataclass(frozen=True)
class LognormalParams(_Family):
    """Lognormal with log-scale location ``mu`` and dispersion ``sigma``."""

    mu: float
    sigma: float

    family: ClassVar[str] = "lognormal"
    n_params: ClassVar[int] = 2

    def __post_init__(self):
        if not (math.isfinite(self.mu) and self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError(f"invalid lognormal parameters mu={self.mu}, sigma={self.sigma}")

    def in_support(self, x):
        return _as_array(x) > 0.0

    def _z(self, x):
        return (np.log(np.where(x > 0, x, 1.0)) - self.mu) / self.sigma

    def cdf(self, x):
        x = _as_array(x)
        return _finish(np.where(x > 0, normal_cdf(np.atleast_1d(self._z(x))).reshape(x.shape), 0.0), x)

    def sf(self, x):
        x = _as_array(x)
        return _finish(np.where(x > 0, normal_sf(np.atleast_1d(self._z(x))).reshape(x.shape), 1.0), x)

    def logpdf(self, x):
        x = _as_array(x)
        pos = x > 0
        lx = np.log(np.where(pos, x, 1.0))
        z = (lx - self.mu) / self.sigma
        out = -0.5 * z * z - lx - math.log(self.sigma) - _LOG_SQRT_2PI
        return _finish(np.where(pos, out, -np.inf), x)

    def quantile(self, p):
        p = _check_p(p)
        return _finish(np.exp(self.mu + self.sigma * normal_quantile(p)), p)


@dataclass(frozen=True)
class GevParams(_Family):
    """Generalized extreme value distribution in location-scale form."""

    shape: float
    location: float
    scale: float

    family: ClassVar[str] = "gev"
    n_params: ClassVar[int] = 3

    def __post_init__(self):
        if not (math.isfinite(self.shape) and math.isfinite(self.location)
                and self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError(
                f"invalid GEV parameters shape={self.shape}, location={self.location}, "
                f"scale={self.scale}"
            )

    @property
    def gumbel(self) -> bool:
        return abs(self.shape) < SHAPE_EPS

    def _log_t(self, x):
        """ln t(x) where t = (1 + shape*z)^(-1/shape) and F = exp(-t).

        Outside the support this is +inf below the lower endpoint (shape > 0)
        and -inf above the upper endpoint (shape < 0).
        """
        z = (_as_array(x) - self.location) / self.scale
        if self.gumbel:
            return -z
        arg = self.shape * z
        with np.errstate(divide="ignore", invalid="ignore"):
            lt = -np.log1p(np.where(arg > -1.0, arg, 0.0)) / self.shape
        outside = arg <= -1.0
        return np.where(outside, np.inf if self.shape > 0 else -np.inf, lt)

    def in_support(self, x):
        if self.gumbel:
            return np.isfinite(_as_array(x))
        z = (_as_array(x) - self.location) / self.scale
        return 1.0 + self.shape * z > 0.0

    def cdf(self, x):
        x = _as_array(x)
        with np.errstate(over="ignore"):
            return _finish(np.exp(-np.exp(self._log_t(x))), x)

    def sf(self, x):
        x = _as_array(x)
        with np.errstate(over="ignore"):
            return _finish(-np.expm1(-np.exp(self._log_t(x))), x)

    def logpdf(self, x):
        x = _as_array(x)
        lt = self._log_t(x)
        with np.errstate(over="ignore", invalid="ignore"):
            out = -math.log(self.scale) + (self.shape + 1.0) * lt - np.exp(lt)
        return _finish(np.where(self.in_support(x), out, -np.inf), x)

    def quantile(self, p):
        p = _check_p(p)
        y = -np.log(p)
        if self.gumbel:
            z = -np.log(y)
        else:
            z = np.expm1(-self.shape * np.log(y)) / self.shape
        return _finish(self.location + self.scale * z, p)


@dataclass(frozen=True)
class GpdParams(_Family):
    """Generalized Pareto distribution for exceedances ``y >= 0``."""

    shape: float
    scale: float

    family: ClassVar[str] = "gpd"
    n_params: ClassVar[int] = 2

    def __post_init__(self):
        if not (math.isfinite(self.shape) and self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError(f"invalid GPD parameters shape={self.shape}, scale={self.scale}")

    @property
    def exponential(self) -> bool:
        return abs(self.shape) < SHAPE_EPS

    @property
    def upper_endpoint(self) -> float:
        return -self.scale / self.shape if self.shape < 0 and not self.exponential else math.inf

    def in_support(self, y):
        y = _as_array(y)
        return (y >= 0.0) & (y <= self.upper_endpoint)

    def _log_sf(self, y):
        # ln(1 - F(y)) on the support, clamped into it elsewhere.
        y = np.clip(_as_array(y), 0.0, self.upper_endpoint)
        if self.exponential:
            return -y / self.scale
        with np.errstate(divide="ignore"):
            return -np.log1p(self.shape * y / self.scale) / self.shape

    def cdf(self, y):
        y = _as_array(y)
        out = -np.expm1(self._log_sf(y))
        out = np.where(y >= self.upper_endpoint, 1.0, out)
        return _finish(np.where(y < 0.0, 0.0, out), y)

    def sf(self, y):
        y = _as_array(y)
        out = np.exp(self._log_sf(y))
        out = np.where(y >= self.upper_endpoint, 0.0, out)
        return _finish(np.where(y < 0.0, 1.0, out), y)

    def logpdf(self, y):
        y = _as_array(y)
        yc = np.clip(y, 0.0, self.upper_endpoint)
        if self.exponential:
            out = -math.log(self.scale) - yc / self.scale
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                out = -math.log(self.scale) - (1.0 / self.shape + 1.0) * np.log1p(
                    self.shape * yc / self.scale
                )
            if self.shape == -1.0:
                out = np.full_like(yc, -math.log(self.scale))
        return _finish(np.where(self.in_support(y), out, -np.inf), y)

    def quantile(self, p):
        p = _check_p(p)
        if self.exponential:
            return _finish(-self.scale * np.log1p(-p), p)
        return _finish(self.scale * np.expm1(-self.shape * np.log1p(-p)) / self.shape, p)


DistributionModel = Union[LognormalParams, GevParams, GpdParams]

FAMILIES = {
    "lognormal": LognormalParams,
    "gev": GevParams,
    "gpd": GpdParams,
}


def model_from_dict(data: dict) -> DistributionModel:
    """Inverse of ``model.to_dict()``."""
    fields = dict(data)
    cls = FAMILIES[fields.pop("family")]
    return cls(**fields)


def cdf(model: DistributionModel, x):
    return model.cdf(x)


def pdf(model: DistributionModel, x):
    return model.pdf(x)


def quantile(model: DistributionModel, p):
    return model.quantile(p)


def log_likelihood(model: DistributionModel, data) -> float:
    """Sum of log densities; ``-inf`` if any observation is outside the support."""
    x = np.asarray(getattr(data, "values", data), dtype=float)
    if x.size == 0:
        raise ValueError("log_likelihood of an empty sample")
    if not np.all(model.in_support(x)):
        return -math.inf
    return float(np.sum(model.logpdf(x)))


def sample(model: DistributionModel, n: int, rng: SeededRng) -> np.ndarray:
    """``n`` inverse-transform draws from ``model``."""
    return model.sample(n, rng)
