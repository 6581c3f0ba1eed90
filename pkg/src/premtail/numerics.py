"""Numerical primitives shared by the fitting and testing code.

Everything here is deterministic and depends only on the standard library and
numpy: normal CDF/quantile, the regularized incomplete gamma function, the
Kolmogorov survival function, a Nelder-Mead simplex minimizer, a golden-section
maximizer and a counter-based splittable random generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "SeededRng",
    "OptimizerResult",
    "normal_cdf",
    "normal_sf",
    "normal_quantile",
    "regularized_lower_gamma",
    "regularized_upper_gamma",
    "chi2_sf",
    "kolmogorov_sf",
    "nelder_mead",
    "golden_section_max",
]

_SQRT2 = math.sqrt(2.0)
_erfc = np.frompyfunc(math.erfc, 1, 1)


# --------------------------------------------------------------------------
# Normal distribution
# --------------------------------------------------------------------------


def normal_cdf(z):
    """Standard normal CDF, scalar or array.

    Uses ``erfc`` on both sides so the lower tail keeps full relative accuracy.
    """
    if np.ndim(z) == 0:
        return 0.5 * math.erfc(-float(z) / _SQRT2)
    z = np.asarray(z, dtype=float)
    return 0.5 * _erfc(-z / _SQRT2).astype(float)


def normal_sf(z):
    """Standard normal survival function ``1 - normal_cdf(z)``."""
    if np.ndim(z) == 0:
        return 0.5 * math.erfc(float(z) / _SQRT2)
    z = np.asarray(z, dtype=float)
    return 0.5 * _erfc(z / _SQRT2).astype(float)


# Wichura (1988), algorithm AS241 (PPND16).
_A = (3.387132872796366608, 133.14166789178437745, 1971.5909503065514427,
      13731.693765509461125, 45921.953931549871457, 67265.770927008700853,
      33430.575583588128105, 2509.0809287301226727)
_B = (1.0, 42.313330701600911252, 687.1870074920579083, 5394.1960214247511077,
      21213.794301586595867, 39307.89580009271061, 28729.085735721942674,
      5226.495278852545925)
_C = (1.42343711074968357734, 4.6303378461565452959, 5.7694972214606914055,
      3.64784832476320460504, 1.27045825245236838258, 0.24178072517745061177,
      0.0227238449892691845833, 7.7454501427834140764e-4)
_D = (1.0, 2.05319162663775882187, 1.6763848301838038494, 0.68976733498510000455,
      0.14810397642748007459, 0.0151986665636164571966, 5.475938084995344946e-4,
      1.05075007164441684324e-9)
_E = (6.6579046435011037772, 5.4637849111641143699, 1.7848265399172913358,
      0.29656057182850489123, 0.026532189526576123093, 0.0012426609473880784386,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 0.59983220655588793769, 0.13692988092273580531, 0.0148753612908506148525,
      7.868691311456132591e-4, 1.8463183175100546818e-5, 1.4215117583164458887e-7,
      2.04426310338993978564e-15)


def _poly(coefs, x):
    out = np.zeros_like(x)
    for c in reversed(coefs):
        out = out * x + c
    return out


def _ppnd16(p: np.ndarray) -> np.ndarray:
    q = p - 0.5
    out = np.empty_like(p)
    central = np.abs(q) <= 0.425
    if central.any():
        qc = q[central]
        r = 0.180625 - qc * qc
        out[central] = qc * _poly(_A, r) / _poly(_B, r)
    tail = ~central
    if tail.any():
        qt = q[tail]
        r = np.where(qt < 0.0, p[tail], 1.0 - p[tail])
        r = np.sqrt(-np.log(r))
        near = r <= 5.0
        x = np.empty_like(r)
        rn = r[near] - 1.6
        x[near] = _poly(_C, rn) / _poly(_D, rn)
        rf = r[~near] - 5.0
        x[~near] = _poly(_E, rf) / _poly(_F, rf)
        out[tail] = np.where(qt < 0.0, -x, x)
    return out


def normal_quantile(p):
    """Inverse of :func:`normal_cdf`.

    AS241 rational approximation followed by one Newton step against
    :func:`normal_cdf`. Raises ``ValueError`` unless ``0 < p < 1``.
    """
    scalar = np.ndim(p) == 0
    arr = np.atleast_1d(np.asarray(p, dtype=float))
    if np.any(~(arr > 0.0) | ~(arr < 1.0)):
        raise ValueError("normal_quantile requires 0 < p < 1")
    z = _ppnd16(arr)
    # Newton step on the side with the smaller tail probability, so the
    # correction is computed in relative rather than absolute precision.
    lower = z <= 0.0
    dens = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    with np.errstate(divide="ignore", invalid="ignore"):
        resid = np.where(lower, normal_cdf(z) - arr, (1.0 - arr) - normal_sf(z))
        step = np.where(dens > 0.0, resid / dens, 0.0)
    z = z - step
    return float(z[0]) if scalar else z


# --------------------------------------------------------------------------
# Incomplete gamma and friends
# --------------------------------------------------------------------------

_GAMMA_EPS = 1e-16
_GAMMA_MAXITER = 100_000


def _gamma_series(a: float, x: float) -> float:
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_GAMMA_MAXITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _GAMMA_EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_contfrac(a: float, x: float) -> float:
    # Modified Lentz evaluation of the continued fraction for Q(a, x).
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _GAMMA_MAXITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _GAMMA_EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def _check_gamma_args(a: float, x: float) -> None:
    if not a > 0.0:
        raise ValueError(f"shape parameter a must be positive, got {a}")
    if not x >= 0.0:
        raise ValueError(f"x must be nonnegative, got {x}")


def regularized_lower_gamma(a: float, x: float) -> float:
    """P(a, x) by series for ``x < a + 1`` and continued fraction otherwise."""
    _check_gamma_args(a, x)
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < a + 1.0:
        return min(1.0, max(0.0, _gamma_series(a, x)))
    return min(1.0, max(0.0, 1.0 - _gamma_contfrac(a, x)))


def regularized_upper_gamma(a: float, x: float) -> float:
    """Q(a, x) = 1 - P(a, x), computed directly in the upper tail."""
    _check_gamma_args(a, x)
    if x == 0.0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < a + 1.0:
        return min(1.0, max(0.0, 1.0 - _gamma_series(a, x)))
    return min(1.0, max(0.0, _gamma_contfrac(a, x)))


def chi2_sf(stat: float, dof: float) -> float:
    """Upper tail probability of a chi-square variable with ``dof`` degrees of freedom."""
    if stat <= 0.0:
        return 1.0
    return regularized_upper_gamma(dof / 2.0, stat / 2.0)


# --------------------------------------------------------------------------
# Kolmogorov distribution
# --------------------------------------------------------------------------


def kolmogorov_sf(t: float) -> float:
    """Asymptotic Kolmogorov survival function Q(t) = P(sqrt(n) D_n > t).

    The alternating series converges badly for small ``t``; there the
    equivalent Jacobi theta form is summed instead.
    """
    if t < 0.0:
        raise ValueError("kolmogorov_sf requires t >= 0")
    if t == 0.0:
        return 1.0
    if t < 1.0:
        # 1 - Q(t) = sqrt(2 pi)/t * sum_k exp(-(2k-1)^2 pi^2 / (8 t^2))
        coef = math.sqrt(2.0 * math.pi) / t
        total = 0.0
        k = 1
        while True:
            term = math.exp(-((2 * k - 1) ** 2) * math.pi ** 2 / (8.0 * t * t))
            total += term
            if term < 1e-17:
                break
            k += 1
        return min(1.0, max(0.0, 1.0 - coef * total))
    total = 0.0
    k = 1
    while True:
        term = math.exp(-2.0 * k * k * t * t)
        total += term if k % 2 == 1 else -term
        if term < 1e-12 * total:
            break
        k += 1
    return min(1.0, max(0.0, 2.0 * total))


# --------------------------------------------------------------------------
# Optimizers
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class OptimizerResult:
    argmin: np.ndarray
    objective_value: float
    iterations: int
    converged: bool


def nelder_mead(
    objective: Callable[[np.ndarray], float],
    start: Sequence[float],
    tolerance: float = 1e-8,
    max_iter: int = 2000,
    step: Optional[Sequence[float]] = None,
    initial_simplex: Optional[np.ndarray] = None,
) -> OptimizerResult:
    """Minimize ``objective`` with the Nelder-Mead simplex method.

    Coefficients are the textbook ones (reflection 1, expansion 2,
    contraction 0.5, shrink 0.5). The search stops once both the simplex
    diameter (max-norm distance from the best vertex) and the spread of
    objective values drop below ``tolerance``. Non-finite objective values
    are treated as +inf, which lets callers encode constraints.

    Args:
        objective: Function of a 1-D parameter vector.
        start: Starting point; it is always a vertex of the initial simplex.
        tolerance: Convergence tolerance, must be positive.
        max_iter: Iteration cap; hitting it returns ``converged=False``.
        step: Per-coordinate offsets for the initial simplex. Defaults to
            5% of each coordinate, or 0.1 for zero coordinates.
        initial_simplex: Explicit ``(d+1, d)`` simplex, overriding ``step``.

    Returns:
        OptimizerResult with the best vertex found.
    """
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")
    x0 = np.asarray(start, dtype=float).ravel()
    dim = x0.size

    def f(x):
        val = objective(x)
        return float(val) if np.isfinite(val) else math.inf

    if initial_simplex is not None:
        simplex = np.array(initial_simplex, dtype=float)
        if simplex.shape != (dim + 1, dim):
            raise ValueError("initial_simplex must have shape (d+1, d)")
    else:
        if step is None:
            steps = np.where(x0 != 0.0, 0.05 * np.abs(x0), 0.1)
        else:
            steps = np.broadcast_to(np.asarray(step, dtype=float), (dim,))
        simplex = np.tile(x0, (dim + 1, 1))
        for i in range(dim):
            simplex[i + 1, i] += steps[i]
    fvals = np.array([f(v) for v in simplex])
    if not np.isfinite(f(x0)):
        raise ValueError("objective is not finite at the starting point")

    iterations = 0
    converged = False
    while True:
        order = np.argsort(fvals, kind="stable")
        simplex = simplex[order]
        fvals = fvals[order]
        diameter = float(np.abs(simplex[1:] - simplex[0]).max()) if dim else 0.0
        spread = fvals[-1] - fvals[0]
        if diameter < tolerance and spread < tolerance:
            converged = True
            break
        if iterations >= max_iter:
            break
        iterations += 1

        centroid = simplex[:-1].sum(axis=0) / dim
        worst = simplex[-1]
        xr = centroid + (centroid - worst)
        fr = f(xr)
        if fr < fvals[0]:
            xe = centroid + 2.0 * (centroid - worst)
            fe = f(xe)
            if fe < fr:
                simplex[-1], fvals[-1] = xe, fe
            else:
                simplex[-1], fvals[-1] = xr, fr
            continue
        if fr < fvals[-2]:
            simplex[-1], fvals[-1] = xr, fr
            continue
        if fr < fvals[-1]:
            xc = centroid + 0.5 * (xr - centroid)
            fc = f(xc)
            if fc <= fr:
                simplex[-1], fvals[-1] = xc, fc
                continue
        else:
            xc = centroid + 0.5 * (worst - centroid)
            fc = f(xc)
            if fc < fvals[-1]:
                simplex[-1], fvals[-1] = xc, fc
                continue
        best = simplex[0]
        for i in range(1, dim + 1):
            simplex[i] = best + 0.5 * (simplex[i] - best)
            fvals[i] = f(simplex[i])

    return OptimizerResult(
        argmin=simplex[0].copy(),
        objective_value=float(fvals[0]),
        iterations=iterations,
        converged=converged,
    )


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(
    objective: Callable[[float], float], lo: float, hi: float, tolerance: float = 1e-10
) -> float:
    """Maximizer of a unimodal function on ``[lo, hi]`` by golden-section search."""
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    a, b = float(lo), float(hi)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = objective(c), objective(d)
    while b - a > tolerance:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = objective(d)
        if c >= d:
            # floating point collapsed the bracket
            break
    return 0.5 * (a + b)


# --------------------------------------------------------------------------
# Random numbers
# --------------------------------------------------------------------------

_MASK64 = (1 << 64) - 1
# SplitMix64 constants (Steele, Lea & Flood 2014).
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_STREAM_SALT = 0xD1B54A32D192ED03


def _mix64(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))


def _mix64_int(value: int) -> int:
    return int(_mix64(np.array([value & _MASK64], dtype=np.uint64))[0])


class SeededRng:
    """Counter-based SplitMix64 generator with derivable independent streams.

    The k-th 64-bit output of a stream is ``mix64(key + k * GOLDEN_GAMMA)``,
    so any block of outputs is computed in one vectorized pass. The stream
    key is ``mix64(mix64(master_seed) ^ mix64(stream_id * SALT))``. Instances
    are stateful (they advance a counter) and should not be shared between
    threads; use :meth:`spawn` to hand out independent streams instead.
    """

    def __init__(self, master_seed: int, stream_id: int = 0):
        self.master_seed = int(master_seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        self._key = _mix64_int(
            _mix64_int(self.master_seed) ^ _mix64_int((self.stream_id * _STREAM_SALT) & _MASK64)
        )
        self._counter = 0

    def __repr__(self) -> str:
        return f"SeededRng(master_seed={self.master_seed}, stream_id={self.stream_id})"

    def spawn(self, stream_id: int) -> "SeededRng":
        """Child generator whose output does not depend on this one's position."""
        return SeededRng(self._key, stream_id)

    def next_u64(self, n: int) -> np.ndarray:
        if n < 0:
            raise ValueError("n must be nonnegative")
        with np.errstate(over="ignore"):
            idx = np.arange(self._counter + 1, self._counter + 1 + n, dtype=np.uint64)
            z = np.uint64(self._key) + idx * np.uint64(_GOLDEN_GAMMA)
        self._counter += n
        return _mix64(z)

    def uniform(self, n: int) -> np.ndarray:
        """``n`` doubles on the open interval (0, 1) with 53-bit resolution."""
        bits = self.next_u64(n) >> np.uint64(11)
        return (bits.astype(np.float64) + 0.5) * 2.0 ** -53

    def permutation(self, n: int) -> np.ndarray:
        """Uniform random permutation of ``range(n)`` (Fisher-Yates)."""
        u = self.uniform(max(n - 1, 0))
        perm = np.arange(n)
        for i in range(n - 1, 0, -1):
            j = int(u[n - 1 - i] * (i + 1))
            perm[i], perm[j] = perm[j], perm[i]
        return perm
