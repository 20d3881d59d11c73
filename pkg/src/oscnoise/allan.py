"""Second-difference (Allan-type) phase statistics and mixture calibration.

The variance of the overlapping second difference of the phase at lag h
has the closed leading form

    Var(D2 phi at lag h) = h^(2H) (4 - 4^H) csc(H pi) / Gamma(2H+1)
                           * (1 + O((h/t)^(4-2H)))

with the H = 1 pole removable: the constant tends to 4 ln2 / pi there.
Since second differences annihilate affine drift, the statistic isolates
the stochastic phase, and fitting the measured curve against the white
and flicker basis {2h, (4 ln2/pi) h^2} recovers the mixture coefficients
from a raw trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.optimize

from .errors import DomainError, InsufficientDataError
from .fbm import _as_hurst

__all__ = [
    "AllanCurve",
    "FitResult",
    "avar_constant",
    "diff_covariance",
    "estimate",
    "fit_mixture",
    "theoretical_d2_variance",
]

_C_FLICKER = 4.0 * math.log(2.0) / math.pi
# Taylor coefficients of C(H)/C(1) around H = 1 (C(1+u)/C(1) = 1 + c1 u + c2 u^2)
_C1_AT_1 = math.log(2.0) - 2.0 * 0.9227843350984671  # ln2 - 2 psi(3)
_C2_AT_1 = 1.5991790803600423
_SERIES_WINDOW = 1e-6


@dataclass(frozen=True)
class AllanCurve:
    """Empirical second-difference variance curve.

    ``lags`` in seconds (strictly increasing), ``variances`` in rad^2,
    ``counts`` the number of overlapping differences per lag, and
    ``d2_means`` the mean second difference per lag -- a residual-drift
    diagnostic that should sit at zero for drift-free data.
    """

    lags: np.ndarray
    variances: np.ndarray
    counts: np.ndarray
    d2_means: np.ndarray

    def __post_init__(self):
        lags = np.asarray(self.lags, dtype=float)
        var = np.asarray(self.variances, dtype=float)
        cnt = np.asarray(self.counts, dtype=np.int64)
        means = np.asarray(self.d2_means, dtype=float)
        if not (lags.shape == var.shape == cnt.shape == means.shape):
            raise DomainError("curve arrays must have identical shapes")
        if lags.size < 1 or np.any(lags <= 0) or np.any(np.diff(lags) <= 0):
            raise DomainError("lags must be positive and strictly increasing")
        if np.any(var < 0):
            raise DomainError("variances must be nonnegative")
        if np.any(cnt < 2):
            raise DomainError("need at least 2 differences per lag")
        for name, arr in (("lags", lags), ("variances", var), ("d2_means", means)):
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "counts", cnt)


@dataclass(frozen=True)
class FitResult:
    """Recovered mixture coefficients.

    ``c_white`` (rad s^-1/2) and ``c_flicker`` (rad s^-1) are the square
    roots of the fitted nonnegative basis weights; ``covariance_of_fit``
    is the 2x2 covariance of the weights themselves.
    """

    c_white: float
    c_flicker: float
    residual_norm: float
    covariance_of_fit: np.ndarray


def avar_constant(h) -> float:
    """Lag-independent constant C(H) = (4 - 4^H) csc(H pi) / Gamma(2H+1).

    Continuous across the removable singularity at H = 1, where it is
    evaluated by a quadratic expansion around the limit 4 ln2 / pi.
    """
    h = _as_hurst(h).h
    u = h - 1.0
    if abs(u) <= _SERIES_WINDOW:
        return _C_FLICKER * (1.0 + _C1_AT_1 * u + _C2_AT_1 * u * u)
    return (4.0 - 4.0**h) / math.sin(h * math.pi) / math.gamma(2.0 * h + 1.0)


def theoretical_d2_variance(h, lag_h: float) -> float:
    """Leading-order Var of the second difference at lag h: C(H) h^(2H)."""
    if lag_h <= 0 or not math.isfinite(lag_h):
        raise DomainError(f"lag must be positive, got {lag_h}")
    return avar_constant(h) * lag_h ** (2.0 * _as_hurst(h).h)


_STENCILS = {1: ((0.0, -1.0), (1.0, 1.0)), 2: ((0.0, 1.0), (1.0, -2.0), (2.0, 1.0))}


def diff_covariance(
    cov_fn: Callable[[float, float], float],
    order: int,
    t: float,
    s: float,
    lag_h: float,
) -> float:
    """Covariance of differenced processes from the raw covariance kernel.

    Differencing commutes with covariance, so the result is the iterated
    finite difference of ``cov_fn`` in both arguments: a 4-point stencil
    for first differences, 9-point for second differences.
    """
    if order not in _STENCILS:
        raise DomainError(f"order must be 1 or 2, got {order}")
    if lag_h <= 0:
        raise DomainError(f"lag must be positive, got {lag_h}")
    stencil = _STENCILS[order]
    total = 0.0
    for off_i, w_i in stencil:
        for off_j, w_j in stencil:
            total += w_i * w_j * cov_fn(t + off_i * lag_h, s + off_j * lag_h)
    return total


def estimate(trace, lags: Sequence[int]) -> AllanCurve:
    """Overlapping second-difference variance of a phase trace.

    ``trace`` is a :class:`oscnoise.cli.PhaseTrace`.  For each integer
    lag m, all overlapping differences x[n+2m] - 2 x[n+m] + x[n] are
    squared and averaged; the model is zero-mean after differencing, so
    no mean is subtracted (the per-lag mean is reported as a diagnostic
    instead).  Affine drift 2 pi f0 t + phi0 is annihilated exactly.
    """
    x = np.asarray(trace.samples, dtype=float)
    ms = [int(m) for m in lags]
    if len(ms) < 1 or any(m < 1 for m in ms) or any(
        b <= a for a, b in zip(ms, ms[1:])
    ):
        raise DomainError("lags must be strictly increasing positive integers")
    mmax = ms[-1]
    if x.size < 2 * mmax + 1:
        raise InsufficientDataError(
            f"trace of {x.size} samples cannot support lag {mmax} "
            f"(needs {2 * mmax + 1})"
        )
    variances, counts, means = [], [], []
    for m in ms:
        d = x[2 * m :] - 2.0 * x[m : x.size - m] + x[: x.size - 2 * m]
        variances.append(float(np.mean(d * d)))
        counts.append(d.size)
        means.append(float(np.mean(d)))
    return AllanCurve(
        lags=np.array(ms, dtype=float) * trace.dt,
        variances=np.array(variances),
        counts=np.array(counts, dtype=np.int64),
        d2_means=np.array(means),
    )


def fit_mixture(curve: AllanCurve, log_space: bool = False) -> FitResult:
    """Recover (c_white, c_flicker) from a measured curve.

    Nonnegative least squares of the variances against the basis
    {2 h, (4 ln2 / pi) h^2}, rows weighted by sqrt(counts); linear-space
    fitting preserves the additivity of component variances exactly.
    ``log_space=True`` refits the same model on log-variances (useful
    when the curve spans many decades), seeded from the linear solution.
    """
    lags = curve.lags
    if lags.size < 2 or lags[-1] / lags[0] < 10.0:
        raise DomainError("fit needs >= 2 lags spanning at least one decade")
    A = np.column_stack([2.0 * lags, _C_FLICKER * lags**2])
    w = np.sqrt(curve.counts.astype(float))
    Aw = A * w[:, None]
    yw = curve.variances * w

    weights, _ = scipy.optimize.nnls(Aw, yw)
    if log_space:
        safe_floor = max(curve.variances.max() * 1e-300, 1e-300)

        def resid(p):
            model = A @ np.abs(p)
            return w * (np.log(np.maximum(model, safe_floor))
                        - np.log(np.maximum(curve.variances, safe_floor)))

        start = np.maximum(weights, 1e-12 * max(weights.max(), 1.0))
        sol = scipy.optimize.least_squares(resid, start, method="lm")
        weights = np.abs(sol.x)

    res = Aw @ weights - yw
    dof = max(lags.size - 2, 1)
    gram = Aw.T @ Aw
    try:
        cov = np.linalg.inv(gram) * float(res @ res) / dof
    except np.linalg.LinAlgError:
        cov = np.full((2, 2), np.nan)
    return FitResult(
        c_white=math.sqrt(weights[0]),
        c_flicker=math.sqrt(weights[1]),
        residual_norm=float(np.linalg.norm(res)),
        covariance_of_fit=cov,
    )
