"""Smoothed welfare maximizer: kernel-smoothed objective and its optimizer.

The hard indicator in the empirical welfare objective is replaced by a
smooth CDF-like kernel weight,

    S_n(t) = (1/n) * sum_i g_i * k((x_i - t) / sigma),

which is continuously differentiable in t and is maximized by a coarse
global grid search followed by golden-section refinement.  The bandwidth
sigma comes from one of four rules: a fixed value, a lambda-rate sequence
sigma = (lambda / n)^(1 / (2h + 1)), the plug-in regret-optimal rule, or an
undersmoothed variant of the plug-in rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .data import ParamSpace, Sample, default_space, ipw_scores
from .errors import ValidationError
from .ewm import ThresholdEstimate, fit_ewm
from .kernels import Kernel

__all__ = [
    "FixedBandwidth",
    "LambdaRate",
    "PlugInOptimal",
    "Undersmoothed",
    "BandwidthRule",
    "smoothed_objective",
    "smoothed_objective_derivative",
    "fit_swm",
]

_GRID_CAP = 100_001
_A_HAT_DEGENERATE = 1e-8
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class FixedBandwidth:
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValidationError(f"fixed bandwidth must be positive, got {self.sigma}")


@dataclass(frozen=True)
class LambdaRate:
    """sigma_n = (lam / n)^(1 / (2h + 1)) with h taken from the kernel."""

    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValidationError(f"lambda must be positive, got {self.lam}")


@dataclass(frozen=True)
class PlugInOptimal:
    """Feasible regret-optimal bandwidth from plug-in nuisance estimates.

    Nuisance constants are estimated at ``t_eval`` (defaults to the EWM
    threshold) by a caller-supplied callback.
    """

    t_eval: float | None = None


@dataclass(frozen=True)
class Undersmoothed:
    """Plug-in bandwidth shrunk by an extra n^(-exponent_shrink) factor."""

    exponent_shrink: float = 0.05
    t_eval: float | None = None

    def __post_init__(self):
        if not self.exponent_shrink > 0:
            raise ValidationError(
                f"exponent_shrink must be positive so the total rate beats "
                f"1/(2h+1), got {self.exponent_shrink}"
            )


BandwidthRule = Union[FixedBandwidth, LambdaRate, PlugInOptimal, Undersmoothed]


def smoothed_objective(sample: Sample, kernel: Kernel, sigma: float, t: float) -> float:
    """Kernel-smoothed sample welfare difference at threshold ``t``."""
    if not sigma > 0:
        raise ValidationError(f"sigma must be positive, got {sigma}")
    g = ipw_scores(sample).g
    u = (sample.x - t) / sigma
    return float(np.dot(g, kernel.k(u))) / sample.n


def smoothed_objective_derivative(sample: Sample, kernel: Kernel, sigma: float, t: float) -> float:
    """Analytic t-derivative of :func:`smoothed_objective`."""
    if not sigma > 0:
        raise ValidationError(f"sigma must be positive, got {sigma}")
    g = ipw_scores(sample).g
    u = (sample.x - t) / sigma
    return -float(np.dot(g, kernel.k1(u))) / (sample.n * sigma)


def _objective_on_grid(g, x, kernel, sigma, ts):
    """Objective values at every grid threshold, chunked to bound memory."""
    n = len(x)
    out = np.empty(len(ts))
    chunk = max(1, int(4_000_000 / max(n, 1)))
    for lo in range(0, len(ts), chunk):
        sl = ts[lo : lo + chunk]
        u = (x[None, :] - sl[:, None]) / sigma
        out[lo : lo + len(sl)] = kernel.k(u) @ g / n
    return out


def _golden_section_max(f, a: float, b: float, tol: float) -> float:
    """Golden-section search for a maximum of f on [a, b]."""
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _silverman_fallback_sigma(sample: Sample) -> float:
    sd = float(np.std(sample.x))
    if sd == 0.0:
        sd = 1.0
    return sd * sample.n ** (-0.2)


def _resolve_sigma(sample, kernel, rule, space, nuisance_fn):
    """Resolve the bandwidth from the rule; returns (sigma, flags)."""
    flags: list[str] = []
    if isinstance(rule, FixedBandwidth):
        return rule.sigma, flags
    h = kernel.h
    if isinstance(rule, LambdaRate):
        return (rule.lam / sample.n) ** (1.0 / (2 * h + 1)), flags
    if not isinstance(rule, (PlugInOptimal, Undersmoothed)):
        raise ValidationError(f"unknown bandwidth rule {rule!r}")
    if nuisance_fn is None:
        raise ValidationError(
            "plug-in bandwidth rules need a nuisance_fn callback "
            "(e.g. threshold_regret.nuisance.estimate_khA)"
        )
    t_eval = rule.t_eval
    if t_eval is None:
        t_eval = fit_ewm(sample, space).t_hat
    est = nuisance_fn(sample, t_eval)
    if abs(est.a_hat) < _A_HAT_DEGENERATE or est.k_hat <= 0:
        sigma = _silverman_fallback_sigma(sample)
        flags.append("bandwidth_fallback")
    else:
        lam_star = kernel.alpha2 * est.k_hat / (2.0 * h * est.a_hat**2)
        sigma = (lam_star / sample.n) ** (1.0 / (2 * h + 1))
        if not (math.isfinite(sigma) and sigma > 0):
            sigma = _silverman_fallback_sigma(sample)
            flags.append("bandwidth_fallback")
    if isinstance(rule, Undersmoothed):
        sigma *= sample.n ** (-rule.exponent_shrink)
        flags.append("undersmoothed")
    return sigma, flags


def fit_swm(
    sample: Sample,
    kernel: Kernel,
    rule: BandwidthRule,
    space: ParamSpace | None = None,
    nuisance_fn: Callable | None = None,
) -> ThresholdEstimate:
    """Maximize the smoothed welfare objective over the parameter space.

    A coarse grid with at least 201 points (densified to four points per
    bandwidth so modes of width sigma cannot be skipped) locates the global
    mode; golden-section refinement around the best grid point narrows the
    bracket to 1e-8 times the space width.
    """
    if space is None:
        space = default_space(sample)
    sigma, flags = _resolve_sigma(sample, kernel, rule, space, nuisance_fn)

    g = ipw_scores(sample).g
    x = sample.x
    n_pts = max(201, min(int(math.ceil(space.width / sigma)) * 4, _GRID_CAP))
    ts = np.linspace(space.lo, space.hi, n_pts)
    vals = _objective_on_grid(g, x, kernel, sigma, ts)
    best = int(np.argmax(vals))

    lo = ts[max(best - 1, 0)]
    hi = ts[min(best + 1, n_pts - 1)]

    def f(t):
        return float(np.dot(g, kernel.k((x - t) / sigma))) / sample.n

    t_hat = float(space.clamp(_golden_section_max(f, float(lo), float(hi), tol=1e-8 * space.width)))
    return ThresholdEstimate(
        t_hat=t_hat,
        policy_kind="swm",
        objective_value=f(t_hat),
        n=sample.n,
        bandwidth=sigma,
        flags=tuple(flags),
    )
